//! Bernoulli-Bernoulli restricted Boltzmann machine.
//!
//! Energy of a joint configuration:
//!
//! ```text
//! E(v, h) = -Σ_i a_i v_i - Σ_j b_j h_j - Σ_ij v_i h_j w_ij
//! ```
//!
//! Conditionals factorize over units: `P(h_j = 1 | v) = σ(Σ_i w_ij v_i + b_j)`
//! and `P(v_i = 1 | h) = σ(Σ_j w_ij h_j + a_i)`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logistic sigmoid, evaluated without overflow at either tail.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Which negative-phase chain the gradient estimate uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Learner {
    /// Contrastive divergence: chains restart from the data every update.
    Cd,
    /// Persistent contrastive divergence: chains carry over between updates.
    Pcd,
}

impl std::str::FromStr for Learner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cd" => Ok(Learner::Cd),
            "pcd" => Ok(Learner::Pcd),
            other => Err(Error::Config(format!(
                "unknown learner `{other}` (expected cd or pcd)"
            ))),
        }
    }
}

impl std::fmt::Display for Learner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Learner::Cd => "cd",
            Learner::Pcd => "pcd",
        })
    }
}

/// Hyperparameters for training one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    /// Zero epochs is accepted and leaves the layer untouched.
    pub epochs: usize,
    pub batch_size: usize,
    pub learner: Learner,
    pub gibbs_steps: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            weight_decay: 0.0,
            momentum: 0.0,
            epochs: 10,
            batch_size: 20,
            learner: Learner::Cd,
            gibbs_steps: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate >= 0.0
            && self.weight_decay.is_finite()
            && self.weight_decay >= 0.0
            && self.momentum.is_finite()
            && self.momentum >= 0.0
            && self.batch_size >= 1
            && self.gibbs_steps >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid training configuration {self:?}"
            )))
        }
    }
}

/// Weights, biases and momentum memory for one visible/hidden pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmLayer {
    /// `m × n`, entry `(i, j)` couples visible `i` with hidden `j`.
    pub weights: Array2<f64>,
    pub visible_bias: Array1<f64>,
    pub hidden_bias: Array1<f64>,
    pub(crate) weights_delta: Array2<f64>,
    pub(crate) visible_delta: Array1<f64>,
    pub(crate) hidden_delta: Array1<f64>,
}

impl RbmLayer {
    /// Builds a layer from explicit parameters with zeroed momentum memory.
    pub fn from_parts(
        weights: Array2<f64>,
        visible_bias: Array1<f64>,
        hidden_bias: Array1<f64>,
    ) -> Result<Self> {
        let (m, n) = weights.dim();
        if m == 0 || n == 0 {
            return Err(Error::Dimension(
                "a layer needs at least one visible and one hidden unit".into(),
            ));
        }
        if visible_bias.len() != m || hidden_bias.len() != n {
            return Err(Error::Dimension(format!(
                "weights are {m}x{n} but biases have lengths {} and {}",
                visible_bias.len(),
                hidden_bias.len()
            )));
        }
        Ok(Self {
            weights_delta: Array2::zeros((m, n)),
            visible_delta: Array1::zeros(m),
            hidden_delta: Array1::zeros(n),
            weights,
            visible_bias,
            hidden_bias,
        })
    }

    /// All-zero layer.
    pub fn zeros(visible: usize, hidden: usize) -> Result<Self> {
        Self::from_parts(
            Array2::zeros((visible, hidden)),
            Array1::zeros(visible),
            Array1::zeros(hidden),
        )
    }

    pub fn visible(&self) -> usize {
        self.weights.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.weights.ncols()
    }

    /// Previous-step updates `(ΔW, Δa, Δb)` used by the momentum term.
    pub fn deltas(&self) -> (&Array2<f64>, &Array1<f64>, &Array1<f64>) {
        (&self.weights_delta, &self.visible_delta, &self.hidden_delta)
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.visible_bias)
            .chain(&self.hidden_bias)
            .all(|x| x.is_finite())
    }

    fn check_visible(&self, len: usize) -> Result<()> {
        if len == self.visible() {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "expected {} visible values, got {len}",
                self.visible()
            )))
        }
    }

    fn check_hidden(&self, len: usize) -> Result<()> {
        if len == self.hidden() {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "expected {} hidden values, got {len}",
                self.hidden()
            )))
        }
    }

    pub fn energy(&self, v: ArrayView1<f64>, h: ArrayView1<f64>) -> Result<f64> {
        self.check_visible(v.len())?;
        self.check_hidden(h.len())?;
        let coupling = v.dot(&self.weights.dot(&h));
        Ok(-self.visible_bias.dot(&v) - self.hidden_bias.dot(&h) - coupling)
    }

    /// Free energy `F(v) = -aᵀv - Σ_j log(1 + e^{b_j + (Wᵀv)_j})`.
    pub fn free_energy(&self, v: ArrayView1<f64>) -> Result<f64> {
        self.check_visible(v.len())?;
        let act = v.dot(&self.weights) + &self.hidden_bias;
        Ok(-self.visible_bias.dot(&v) - act.iter().map(|&x| softplus(x)).sum::<f64>())
    }

    /// `P(h = 1 | v)`; `v` may hold mean activations rather than bits.
    pub fn hidden_probs(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_visible(v.len())?;
        Ok((v.dot(&self.weights) + &self.hidden_bias).mapv_into(sigmoid))
    }

    /// `P(v = 1 | h)`.
    pub fn visible_probs(&self, h: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_hidden(h.len())?;
        Ok((self.weights.dot(&h) + &self.visible_bias).mapv_into(sigmoid))
    }

    /// Row-wise `P(h | v)` for a batch of visible vectors.
    pub fn hidden_probs_batch(&self, v: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_visible(v.ncols())?;
        Ok((v.dot(&self.weights) + &self.hidden_bias).mapv_into(sigmoid))
    }

    /// Row-wise `P(v | h)` for a batch of hidden vectors.
    pub fn visible_probs_batch(&self, h: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_hidden(h.ncols())?;
        Ok((h.dot(&self.weights.t()) + &self.visible_bias).mapv_into(sigmoid))
    }

    /// Deterministic up-down pass: `P(v | P(h | v))` per row.
    pub fn reconstruct(&self, v: ArrayView2<f64>) -> Result<Array2<f64>> {
        let h = self.hidden_probs_batch(v)?;
        self.visible_probs_batch(h.view())
    }
}

/// Weights drawn from `Normal(0, init_sigma²)`, biases and deltas zero.
pub fn init_layer<R: Rng + ?Sized>(
    visible: usize,
    hidden: usize,
    rng: &mut R,
    init_sigma: f64,
) -> Result<RbmLayer> {
    let mut layer = RbmLayer::zeros(visible, hidden)?;
    if init_sigma > 0.0 {
        let normal = Normal::new(0.0, init_sigma).map_err(|e| Error::Config(e.to_string()))?;
        layer
            .weights
            .iter_mut()
            .for_each(|w| *w = normal.sample(rng));
    } else if init_sigma < 0.0 || init_sigma.is_nan() {
        return Err(Error::Config(format!(
            "init_sigma must be >= 0, got {init_sigma}"
        )));
    }
    Ok(layer)
}

/// Bernoulli draws with one uniform variate per entry, in index order.
pub fn sample_bernoulli<R: Rng + ?Sized>(p: ArrayView1<f64>, rng: &mut R) -> Array1<f64> {
    p.mapv(|pi| if rng.random::<f64>() < pi { 1.0 } else { 0.0 })
}

/// Matrix version of [`sample_bernoulli`]; draws follow row-major order.
pub fn sample_bernoulli_batch<R: Rng + ?Sized>(p: ArrayView2<f64>, rng: &mut R) -> Array2<f64> {
    let mut out = Array2::zeros(p.raw_dim());
    for (o, &pi) in out.iter_mut().zip(p.iter()) {
        if rng.random::<f64>() < pi {
            *o = 1.0;
        }
    }
    out
}

/// Persistent negative-phase particles for PCD.
#[derive(Debug, Clone, PartialEq)]
pub struct PcdChains {
    pub fantasy: Array2<f64>,
}

impl PcdChains {
    /// Chains start at a copy of the given (first) mini-batch.
    pub fn from_batch(batch: ArrayView2<f64>) -> Self {
        Self {
            fantasy: batch.to_owned(),
        }
    }
}

fn mean_squared(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    let n = a.len() as f64;
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n
}

/// One contrastive-divergence update on a mini-batch.
///
/// Positive statistics use the data and `P(h | v)`. The negative chain samples
/// binary hidden states but feeds mean visible and hidden activations into the
/// outer products. Statistics are averaged over rows, so the learning rate does
/// not scale with batch size. Weight decay applies to `W` only.
///
/// Returns the batch reconstruction error `mean((v - P(v | h₀))²)` where `h₀`
/// is the hidden sample drawn from the data.
pub fn cd_step<R: Rng + ?Sized>(
    layer: &mut RbmLayer,
    batch: ArrayView2<f64>,
    cfg: &TrainConfig,
    chains: Option<&mut PcdChains>,
    rng: &mut R,
) -> Result<f64> {
    layer.check_visible(batch.ncols())?;
    if batch.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    if cfg.learner == Learner::Pcd && chains.is_none() {
        return Err(Error::Contract(
            "PCD update requested without persistent chains".into(),
        ));
    }
    let steps = cfg.gibbs_steps.max(1);

    let pos_hidden = layer.hidden_probs_batch(batch)?;
    let pos_sample = sample_bernoulli_batch(pos_hidden.view(), rng);
    let recon = layer.visible_probs_batch(pos_sample.view())?;
    let error = mean_squared(batch, recon.view());

    let (neg_visible, neg_hidden) = match (cfg.learner, chains) {
        (Learner::Pcd, Some(chains)) => {
            layer.check_visible(chains.fantasy.ncols())?;
            let h = layer.hidden_probs_batch(chains.fantasy.view())?;
            let h = sample_bernoulli_batch(h.view(), rng);
            let mut v = layer.visible_probs_batch(h.view())?;
            for _ in 1..steps {
                v = gibbs_refresh(layer, v.view(), rng)?;
            }
            let h = layer.hidden_probs_batch(v.view())?;
            chains.fantasy = sample_bernoulli_batch(v.view(), rng);
            (v, h)
        }
        _ => {
            let mut v = recon;
            for _ in 1..steps {
                v = gibbs_refresh(layer, v.view(), rng)?;
            }
            let h = layer.hidden_probs_batch(v.view())?;
            (v, h)
        }
    };

    let pos_rows = batch.nrows() as f64;
    let neg_rows = neg_visible.nrows() as f64;
    let lr = cfg.learning_rate;

    let grad_w =
        batch.t().dot(&pos_hidden) / pos_rows - neg_visible.t().dot(&neg_hidden) / neg_rows;
    let grad_a = batch.mean_axis(Axis(0)).expect("non-empty batch")
        - neg_visible.mean_axis(Axis(0)).expect("non-empty chain");
    let grad_b = pos_hidden.mean_axis(Axis(0)).expect("non-empty batch")
        - neg_hidden.mean_axis(Axis(0)).expect("non-empty chain");

    let dw = grad_w * lr - &layer.weights * cfg.weight_decay + &layer.weights_delta * cfg.momentum;
    let da = grad_a * lr + &layer.visible_delta * cfg.momentum;
    let db = grad_b * lr + &layer.hidden_delta * cfg.momentum;

    layer.weights += &dw;
    layer.visible_bias += &da;
    layer.hidden_bias += &db;
    layer.weights_delta = dw;
    layer.visible_delta = da;
    layer.hidden_delta = db;

    if !layer.is_finite() {
        return Err(Error::Contract(
            "parameters became non-finite during a CD update".into(),
        ));
    }
    Ok(error)
}

/// Sample `v` from its means, then return `P(v | h)` for a sampled `h`.
fn gibbs_refresh<R: Rng + ?Sized>(
    layer: &RbmLayer,
    v_mean: ArrayView2<f64>,
    rng: &mut R,
) -> Result<Array2<f64>> {
    let v = sample_bernoulli_batch(v_mean, rng);
    let h = layer.hidden_probs_batch(v.view())?;
    let h = sample_bernoulli_batch(h.view(), rng);
    layer.visible_probs_batch(h.view())
}

/// Trains one layer for `cfg.epochs` passes over `data` in fixed row order.
///
/// `on_epoch(epoch, layer, error)` runs after every epoch (1-based). Returns
/// the per-epoch reconstruction error, averaged over all entries.
pub fn train_layer_with<R, F>(
    layer: &mut RbmLayer,
    data: ArrayView2<f64>,
    cfg: &TrainConfig,
    rng: &mut R,
    mut on_epoch: F,
) -> Result<Vec<f64>>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &RbmLayer, f64),
{
    cfg.validate()?;
    layer.check_visible(data.ncols())?;
    if cfg.epochs == 0 {
        return Ok(Vec::new());
    }
    if data.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    let rows = data.nrows();
    let mut chains = match cfg.learner {
        Learner::Pcd => Some(PcdChains::from_batch(
            data.slice(ndarray::s![..cfg.batch_size.min(rows), ..]),
        )),
        Learner::Cd => None,
    };
    let mut errors = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let mut weighted = 0.0;
        for start in (0..rows).step_by(cfg.batch_size) {
            let end = (start + cfg.batch_size).min(rows);
            let batch = data.slice(ndarray::s![start..end, ..]);
            let err = cd_step(layer, batch, cfg, chains.as_mut(), rng)?;
            weighted += err * (end - start) as f64;
        }
        let epoch_error = weighted / rows as f64;
        on_epoch(epoch, layer, epoch_error);
        errors.push(epoch_error);
    }
    Ok(errors)
}

/// [`train_layer_with`] without a per-epoch callback.
pub fn train_layer<R: Rng + ?Sized>(
    layer: &mut RbmLayer,
    data: ArrayView2<f64>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    train_layer_with(layer, data, cfg, rng, |_, _, _| {})
}
