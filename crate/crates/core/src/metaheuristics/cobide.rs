//! Covariance-matrix-learning differential evolution with bimodal parameter
//! distributions. With probability `pb` the crossover of an iteration is
//! done in the eigenbasis of the covariance of the best `ps` fraction of the
//! population. `F` and `CR` are per-agent and only redrawn after a failure.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Cauchy, Distribution};

use super::{CobideParams, StepContext, Strategy};
use crate::hyperspace::Candidate;
use crate::seeding::role;

/// Cauchy(`loc`, `scale`) truncated to (0, 1]: redrawn while non-positive,
/// capped at 1.
pub fn truncated_cauchy<R: Rng + ?Sized>(loc: f64, scale: f64, rng: &mut R) -> f64 {
    let dist = Cauchy::new(loc, scale).expect("positive scale");
    loop {
        let v: f64 = dist.sample(rng);
        if v > 0.0 {
            return v.min(1.0);
        }
    }
}

/// F from the equal mixture of Cauchy(0.65, 0.1) and Cauchy(1.0, 0.1).
pub fn bimodal_f<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let loc = if rng.random::<f64>() < 0.5 { 0.65 } else { 1.0 };
    truncated_cauchy(loc, 0.1, rng)
}

/// CR from the equal mixture of Cauchy(0.1, 0.1) and Cauchy(0.95, 0.1).
pub fn bimodal_cr<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let loc = if rng.random::<f64>() < 0.5 { 0.1 } else { 0.95 };
    truncated_cauchy(loc, 0.1, rng)
}

/// Orthonormal eigenvectors (as columns, by decreasing eigenvalue) of the
/// sample covariance of `points`. `None` if the decomposition is not finite.
pub fn eigen_basis(points: &[&[f64]]) -> Option<DMatrix<f64>> {
    let k = points.len();
    let d = points.first()?.len();
    if k < 2 {
        return None;
    }
    let rows = DMatrix::from_fn(k, d, |r, c| points[r][c]);
    let mean = rows.row_mean();
    let centered = DMatrix::from_fn(k, d, |r, c| rows[(r, c)] - mean[c]);
    let cov = centered.transpose() * &centered / (k - 1) as f64;
    let eig = SymmetricEigen::try_new(cov, 1e-12, 10_000)?;
    if !eig
        .eigenvectors
        .iter()
        .chain(eig.eigenvalues.iter())
        .all(|v| v.is_finite())
    {
        return None;
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    Some(DMatrix::from_fn(d, d, |r, c| {
        eig.eigenvectors[(r, order[c])]
    }))
}

/// Binomial crossover of `target` and `mutant`, optionally in the rotated
/// coordinates `basisᵀ·x`.
pub fn crossover<R: Rng + ?Sized>(
    target: &[f64],
    mutant: &[f64],
    cr: f64,
    basis: Option<&DMatrix<f64>>,
    rng: &mut R,
) -> Vec<f64> {
    let d = target.len();
    let (t, m) = match basis {
        Some(q) => (
            (q.transpose() * DVector::from_column_slice(target))
                .as_slice()
                .to_vec(),
            (q.transpose() * DVector::from_column_slice(mutant))
                .as_slice()
                .to_vec(),
        ),
        None => (target.to_vec(), mutant.to_vec()),
    };
    let j_rand = rng.random_range(0..d);
    let mixed: Vec<f64> = (0..d)
        .map(|j| {
            if j == j_rand || rng.random::<f64>() < cr {
                m[j]
            } else {
                t[j]
            }
        })
        .collect();
    match basis {
        Some(q) => (q * DVector::from_vec(mixed)).as_slice().to_vec(),
        None => mixed,
    }
}

pub struct Cobide {
    params: CobideParams,
    f: Vec<f64>,
    cr: Vec<f64>,
    succeeded: Vec<bool>,
    fallbacks: usize,
}

impl Cobide {
    pub fn new(params: CobideParams) -> Self {
        Self {
            params,
            f: Vec::new(),
            cr: Vec::new(),
            succeeded: Vec::new(),
            fallbacks: 0,
        }
    }

    /// Iterations where the eigenbasis was unusable and standard crossover
    /// was used instead.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }
}

impl Strategy for Cobide {
    fn initialize(&mut self, _ctx: &StepContext<'_>, population: &[Candidate]) {
        self.f = vec![0.0; population.len()];
        self.cr = vec![0.0; population.len()];
        self.succeeded = vec![false; population.len()];
    }

    fn propose(
        &mut self,
        ctx: &StepContext<'_>,
        population: &[Candidate],
        _best: &Candidate,
    ) -> Vec<Vec<f64>> {
        let n = population.len();
        let mut shared = ctx.rng(role::PROPOSE, super::SHARED_STREAM);
        let basis = if shared.random::<f64>() < self.params.pb {
            let top = ((self.params.ps * n as f64).ceil() as usize).clamp(2, n);
            let ranked = super::ranked(population);
            let points: Vec<&[f64]> = ranked[..top]
                .iter()
                .map(|&i| population[i].x.as_slice())
                .collect();
            let basis = eigen_basis(&points);
            if basis.is_none() {
                self.fallbacks += 1;
            }
            basis
        } else {
            None
        };
        (0..n)
            .map(|i| {
                let mut rng = ctx.rng(role::PROPOSE, i as u64);
                if !self.succeeded[i] {
                    self.f[i] = bimodal_f(&mut rng);
                    self.cr[i] = bimodal_cr(&mut rng);
                }
                let r = super::distinct_indices(n, 3, &[i], &mut rng);
                let (a, b, c) = (
                    &population[r[0]].x,
                    &population[r[1]].x,
                    &population[r[2]].x,
                );
                let mutant: Vec<f64> = (0..a.len())
                    .map(|d| a[d] + self.f[i] * (b[d] - c[d]))
                    .collect();
                crossover(
                    &population[i].x,
                    &mutant,
                    self.cr[i],
                    basis.as_ref(),
                    &mut rng,
                )
            })
            .collect()
    }

    fn accept(
        &mut self,
        _ctx: &StepContext<'_>,
        population: &mut Vec<Candidate>,
        trials: Vec<Candidate>,
    ) {
        self.succeeded = super::greedy_replace(population, trials);
    }

    fn diagnostics(&self) -> Vec<String> {
        if self.fallbacks == 0 {
            Vec::new()
        } else {
            vec![format!(
                "cobide: eigenbasis unusable in {} iterations; used standard crossover",
                self.fallbacks
            )]
        }
    }
}
