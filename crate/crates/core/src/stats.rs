//! Likelihood diagnostics, exact small-model oracles, and the Wilcoxon
//! signed-rank test.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rbm::{sigmoid, softplus, RbmLayer};

/// Largest `m + n` accepted by the enumeration routines.
pub const MAX_ENUMERATION_UNITS: usize = 20;

/// Largest effective sample size for which the exact Wilcoxon p is used.
pub const EXACT_WILCOXON_LIMIT: usize = 25;

/// Stochastic one-bit pseudo-likelihood: for each row, flip one uniformly
/// chosen bit and score `m · log σ(F(ṽ) − F(v))`. Returns the mean over rows.
pub fn log_pseudo_likelihood<R: Rng + ?Sized>(
    layer: &RbmLayer,
    data: ArrayView2<f64>,
    rng: &mut R,
) -> Result<f64> {
    let m = layer.visible();
    if data.ncols() != m {
        return Err(Error::Dimension(format!(
            "data has {} columns, layer has {m} visible units",
            data.ncols()
        )));
    }
    if data.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    let mut total = 0.0;
    for v in data.rows() {
        let i = rng.random_range(0..m);
        let mut flipped = v.to_owned();
        flipped[i] = 1.0 - flipped[i];
        let diff = layer.free_energy(flipped.view())? - layer.free_energy(v)?;
        total += -(m as f64) * softplus(-diff);
    }
    Ok(total / data.nrows() as f64)
}

fn check_enumerable(units: usize) -> Result<()> {
    if units > MAX_ENUMERATION_UNITS {
        return Err(Error::ModelTooLarge {
            units,
            limit: MAX_ENUMERATION_UNITS,
        });
    }
    Ok(())
}

/// Binary vector for `state`, bit `i` giving unit `i`.
pub fn state_vector(state: usize, len: usize) -> Array1<f64> {
    Array1::from_shape_fn(len, |i| ((state >> i) & 1) as f64)
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `−log Σ_h exp(−E(v, h))` by enumerating every hidden state.
pub fn free_energy_by_enumeration(layer: &RbmLayer, v: ArrayView1<f64>) -> Result<f64> {
    let n = layer.hidden();
    check_enumerable(n)?;
    let terms: Result<Vec<f64>> = (0..1usize << n)
        .map(|s| layer.energy(v, state_vector(s, n).view()).map(|e| -e))
        .collect();
    Ok(-log_sum_exp(terms?.into_iter()))
}

/// `log Z`, summing `exp(−F(v))` over every visible state.
pub fn log_partition(layer: &RbmLayer) -> Result<f64> {
    let m = layer.visible();
    check_enumerable(m + layer.hidden())?;
    let terms: Result<Vec<f64>> = (0..1usize << m)
        .map(|s| layer.free_energy(state_vector(s, m).view()).map(|f| -f))
        .collect();
    Ok(log_sum_exp(terms?.into_iter()))
}

/// `P(v)` for every visible state, indexed as in [`state_vector`].
pub fn visible_distribution(layer: &RbmLayer) -> Result<Vec<f64>> {
    let m = layer.visible();
    let log_z = log_partition(layer)?;
    (0..1usize << m)
        .map(|s| Ok((-layer.free_energy(state_vector(s, m).view())? - log_z).exp()))
        .collect()
}

/// Mean exact log-likelihood of the rows of `data`.
pub fn exact_log_likelihood(layer: &RbmLayer, data: ArrayView2<f64>) -> Result<f64> {
    if data.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    let log_z = log_partition(layer)?;
    let mut total = 0.0;
    for v in data.rows() {
        total += -layer.free_energy(v)? - log_z;
    }
    Ok(total / data.nrows() as f64)
}

/// Gradient of the mean log-likelihood with respect to `(W, a, b)`:
/// data expectations minus model expectations, the latter by enumeration.
pub fn exact_gradient(
    layer: &RbmLayer,
    data: ArrayView2<f64>,
) -> Result<(Array2<f64>, Array1<f64>, Array1<f64>)> {
    let (m, n) = (layer.visible(), layer.hidden());
    if data.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    let mut dw = Array2::zeros((m, n));
    let mut da = Array1::zeros(m);
    let mut db = Array1::zeros(n);
    let mut accumulate = |v: ArrayView1<f64>, weight: f64| -> Result<()> {
        let h = layer.hidden_probs(v)?;
        for i in 0..m {
            if v[i] != 0.0 {
                for j in 0..n {
                    dw[[i, j]] += weight * v[i] * h[j];
                }
            }
        }
        da.scaled_add(weight, &v);
        db.scaled_add(weight, &h);
        Ok(())
    };
    let inv = 1.0 / data.nrows() as f64;
    for v in data.rows() {
        accumulate(v, inv)?;
    }
    for (s, p) in visible_distribution(layer)?.into_iter().enumerate() {
        accumulate(state_vector(s, m).view(), -p)?;
    }
    Ok((dw, da, db))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W⁺, W⁻)`.
    pub w_statistic: f64,
    /// Number of nonzero differences.
    pub n_effective: usize,
    pub p_value: f64,
    pub method: WilcoxonMethod,
    pub significant_at_0_05: bool,
}

/// Ranks of `values` (1-based), ties receiving the average rank. Returned
/// doubled so that average ranks stay integral.
fn doubled_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Average of ranks start+1..=end, doubled.
        let doubled = (start + 1 + end) as u64;
        for &k in &order[start..end] {
            ranks[k] = doubled;
        }
        start = end;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are discarded; the exact null distribution is used when at most 25
/// differences remain.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    wilcoxon_signed_rank_with(x, y, None)
}

/// As [`wilcoxon_signed_rank`], optionally forcing the method.
pub fn wilcoxon_signed_rank_with(
    x: &[f64],
    y: &[f64],
    method: Option<WilcoxonMethod>,
) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "paired samples of lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 5 {
        return Err(Error::Contract(format!(
            "Wilcoxon test needs at least 5 pairs, got {}",
            x.len()
        )));
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Err(Error::NoEffectiveSamples);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let total: u64 = ranks.iter().sum();
    let plus: u64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let w2 = plus.min(total - plus);
    let method = method.unwrap_or(if n <= EXACT_WILCOXON_LIMIT {
        WilcoxonMethod::Exact
    } else {
        WilcoxonMethod::NormalApprox
    });
    let p_value = match method {
        WilcoxonMethod::Exact => exact_p(&ranks, w2)?,
        WilcoxonMethod::NormalApprox => normal_p(&abs, n, w2),
    };
    Ok(WilcoxonResult {
        w_statistic: w2 as f64 / 2.0,
        n_effective: n,
        p_value,
        method,
        significant_at_0_05: p_value < 0.05,
    })
}

/// Fraction of the `2^n` sign assignments whose statistic is at least as
/// extreme as the observed one. Ranks are doubled.
fn exact_p(ranks: &[u64], w2: u64) -> Result<f64> {
    let n = ranks.len();
    if n > 62 {
        return Err(Error::Contract(format!(
            "exact Wilcoxon p for n = {n} is not supported"
        )));
    }
    let total: u64 = ranks.iter().sum();
    // counts[t] = number of subsets whose doubled rank sum is t.
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for t in (0..=reach).rev() {
            if counts[t] != 0 {
                counts[t + r] += counts[t];
            }
        }
        reach += r;
    }
    let extreme: u64 = counts
        .iter()
        .enumerate()
        .filter(|(t, _)| (*t as u64).min(total - *t as u64) <= w2)
        .map(|(_, c)| c)
        .sum();
    Ok(extreme as f64 / 2f64.powi(n as i32))
}

fn normal_p(abs: &[f64], n: usize, w2: u64) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut sorted = abs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let w = w2 as f64 / 2.0;
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let phi = Normal::standard().cdf(-z);
    (2.0 * phi).min(1.0)
}

/// Mean and sample standard deviation (n − 1 denominator).
pub fn summarize(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::Contract(format!(
            "summary needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// `σ(F(ṽ) − F(v))` for a single flip, exposed for diagnostics.
pub fn flip_probability(layer: &RbmLayer, v: ArrayView1<f64>, bit: usize) -> Result<f64> {
    let mut flipped = v.to_owned();
    flipped[bit] = 1.0 - flipped[bit];
    Ok(sigmoid(
        layer.free_energy(flipped.view())? - layer.free_energy(v)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbm::init_layer;
    use crate::seeding::rng_from_seed;
    use ndarray::array;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest};

    fn brute_force_p(x: &[f64], y: &[f64]) -> f64 {
        let diffs: Vec<f64> = x
            .iter()
            .zip(y)
            .map(|(a, b)| a - b)
            .filter(|d| *d != 0.0)
            .collect();
        let ranks = doubled_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
        let total: u64 = ranks.iter().sum();
        let plus: u64 = ranks
            .iter()
            .zip(&diffs)
            .filter(|(_, d)| **d > 0.0)
            .map(|(r, _)| r)
            .sum();
        let observed = plus.min(total - plus);
        let n = ranks.len();
        let extreme = (0u64..1 << n)
            .filter(|mask| {
                let t: u64 = (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| ranks[i])
                    .sum();
                t.min(total - t) <= observed
            })
            .count();
        extreme as f64 / 2f64.powi(n as i32)
    }

    #[test]
    fn all_positive_five_pairs() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
        assert_eq!(r.w_statistic, 0.0);
        assert_eq!(r.p_value, 0.0625);
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert!(!r.significant_at_0_05);
    }

    #[test]
    fn identical_samples_have_no_effective_pairs() {
        let x = [0.1, 0.2, 0.3, 0.4, 0.5];
        assert!(matches!(
            wilcoxon_signed_rank(&x, &x),
            Err(Error::NoEffectiveSamples)
        ));
        assert!(wilcoxon_signed_rank(&x[..4], &x[..4]).is_err());
        assert!(wilcoxon_signed_rank(&x, &x[..4]).is_err());
    }

    #[test]
    fn tied_ranks_are_averaged() {
        assert_eq!(doubled_ranks(&[1.0, 2.0, 2.0, 3.0]), vec![2, 5, 5, 8]);
    }

    #[test]
    fn exact_and_normal_agree_at_the_switch_point() {
        let mut rng = rng_from_seed(11);
        for _ in 0..20 {
            let x: Vec<f64> = (0..25).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..25).map(|_| rng.random::<f64>() + 0.1).collect();
            let e = wilcoxon_signed_rank_with(&x, &y, Some(WilcoxonMethod::Exact)).unwrap();
            let a = wilcoxon_signed_rank_with(&x, &y, Some(WilcoxonMethod::NormalApprox)).unwrap();
            assert!(
                (e.p_value - a.p_value).abs() < 0.02,
                "{} vs {}",
                e.p_value,
                a.p_value
            );
        }
        let big: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let r = wilcoxon_signed_rank(&big, &vec![10.0; 30]).unwrap();
        assert_eq!(r.method, WilcoxonMethod::NormalApprox);
    }

    proptest! {
        #[test]
        fn exact_p_matches_enumeration(pairs in prop::collection::vec((0i32..6, 0i32..6), 5..=12)) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            match wilcoxon_signed_rank(&x, &y) {
                Ok(r) => {
                    prop_assert_eq!(r.p_value, brute_force_p(&x, &y));
                    let swapped = wilcoxon_signed_rank(&y, &x).unwrap();
                    prop_assert_eq!(swapped.p_value, r.p_value);
                    prop_assert_eq!(swapped.w_statistic, r.w_statistic);
                    prop_assert!((0.0..=1.0).contains(&r.p_value));
                }
                Err(e) => prop_assert!(matches!(e, Error::NoEffectiveSamples)),
            }
        }
    }

    #[test]
    fn summary_values() {
        assert_eq!(summarize(&[0.3, 0.3, 0.3]).unwrap(), (0.3, 0.0));
        let (m, s) = summarize(&[0.0, 1.0]).unwrap();
        assert!((m - 0.5).abs() < 1e-12 && (s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
        assert!(summarize(&[1.0]).is_err());
    }

    #[test]
    fn zero_model_values() {
        let layer = RbmLayer::zeros(1, 1).unwrap();
        let ll = exact_log_likelihood(&layer, array![[1.0], [0.0]].view()).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-12);
        let layer = RbmLayer::zeros(6, 3).unwrap();
        let data = array![[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]];
        let pl = log_pseudo_likelihood(&layer, data.view(), &mut rng_from_seed(1)).unwrap();
        assert!((pl - 6.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn distribution_normalizes_and_free_energy_matches() {
        let mut rng = rng_from_seed(5);
        let layer = init_layer(4, 3, &mut rng, 1.0).unwrap();
        let total: f64 = visible_distribution(&layer).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        for s in 0..16 {
            let v = state_vector(s, 4);
            let a = layer.free_energy(v.view()).unwrap();
            let b = free_energy_by_enumeration(&layer, v.view()).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn enumeration_limit() {
        let layer = RbmLayer::zeros(15, 6).unwrap();
        assert!(matches!(
            log_partition(&layer),
            Err(Error::ModelTooLarge { units: 21, .. })
        ));
    }

    #[test]
    fn flip_probability_of_zero_model_is_half() {
        let layer = RbmLayer::zeros(3, 2).unwrap();
        assert_eq!(
            flip_probability(&layer, array![1.0, 0.0, 1.0].view(), 1).unwrap(),
            0.5
        );
    }
}
