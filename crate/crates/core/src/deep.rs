//! Stacked RBMs: greedy layer-wise training and reconstruction.
//!
//! A DBN and a DBM share the same greedy pretraining here. They differ in how
//! a visible vector is reconstructed: the DBN runs a plain mean pass up and
//! back down the stack, while the DBM refines its hidden means with top-down
//! feedback before generating the visible layer from the first hidden layer.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rbm::{sigmoid, train_layer_with, RbmLayer, TrainConfig};

pub const DEFAULT_DBM_SWEEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dbn,
    Dbm,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dbn" => Ok(ModelKind::Dbn),
            "dbm" => Ok(ModelKind::Dbm),
            other => Err(Error::Config(format!(
                "unknown model kind `{other}` (expected dbn or dbm)"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Dbn => "dbn",
            ModelKind::Dbm => "dbm",
        })
    }
}

/// An ordered stack of RBM layers; layer `i`'s hidden size equals layer
/// `i + 1`'s visible size.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel {
    kind: ModelKind,
    layers: Vec<RbmLayer>,
}

impl StackedModel {
    pub fn new(kind: ModelKind, layers: Vec<RbmLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Dimension(
                "a stacked model needs at least one layer".into(),
            ));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].hidden() != pair[1].visible() {
                return Err(Error::Dimension(format!(
                    "layer {k} has {} hidden units but layer {} has {} visible units",
                    pair[0].hidden(),
                    k + 1,
                    pair[1].visible()
                )));
            }
        }
        Ok(Self { kind, layers })
    }

    /// Builds a stack with unit counts `sizes[0] → sizes[1] → …`, weights
    /// drawn from `Normal(0, init_sigma²)`, layer by layer.
    pub fn init<R: Rng + ?Sized>(
        kind: ModelKind,
        sizes: &[usize],
        init_sigma: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Dimension(
                "need the visible size and at least one hidden size".into(),
            ));
        }
        let layers = sizes
            .windows(2)
            .map(|w| crate::rbm::init_layer(w[0], w[1], rng, init_sigma))
            .collect::<Result<Vec<_>>>()?;
        Self::new(kind, layers)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn layers(&self) -> &[RbmLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [RbmLayer] {
        &mut self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn visible(&self) -> usize {
        self.layers[0].visible()
    }

    /// Greedy layer-wise training. Layer 0 sees `data`; layer `i > 0` sees the
    /// mean hidden activations of the trained layer below.
    ///
    /// `on_epoch(layer_index, epoch, layer, input, error)` runs after every
    /// epoch of every layer. Returns per-layer, per-epoch reconstruction errors.
    pub fn train_greedy_with<R, F>(
        &mut self,
        data: ArrayView2<f64>,
        configs: &[TrainConfig],
        rng: &mut R,
        mut on_epoch: F,
    ) -> Result<Vec<Vec<f64>>>
    where
        R: Rng + ?Sized,
        F: FnMut(usize, usize, &RbmLayer, ArrayView2<f64>, f64),
    {
        if configs.len() != self.layers.len() {
            return Err(Error::Contract(format!(
                "{} training configurations for {} layers",
                configs.len(),
                self.layers.len()
            )));
        }
        if data.ncols() != self.visible() {
            return Err(Error::Dimension(format!(
                "data has {} columns but the model expects {}",
                data.ncols(),
                self.visible()
            )));
        }
        let mut input = data.to_owned();
        let mut traces = Vec::with_capacity(self.layers.len());
        let depth = self.layers.len();
        for (index, (layer, cfg)) in self.layers.iter_mut().zip(configs).enumerate() {
            let view = input.view();
            let trace = train_layer_with(layer, view, cfg, rng, |epoch, l, err| {
                on_epoch(index, epoch, l, view, err)
            })?;
            traces.push(trace);
            if index + 1 < depth {
                input = layer.hidden_probs_batch(input.view())?;
            }
        }
        Ok(traces)
    }

    pub fn train_greedy<R: Rng + ?Sized>(
        &mut self,
        data: ArrayView2<f64>,
        configs: &[TrainConfig],
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        self.train_greedy_with(data, configs, rng, |_, _, _, _, _| {})
    }

    fn check_input(&self, v: ArrayView2<f64>) -> Result<()> {
        if v.ncols() == self.visible() {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "input has {} columns but the model expects {}",
                v.ncols(),
                self.visible()
            )))
        }
    }

    /// Mean pass up through every layer, then back down through every layer.
    pub fn dbn_reconstruct(&self, v: ArrayView2<f64>) -> Result<Array2<f64>> {
        if self.kind != ModelKind::Dbn {
            return Err(Error::Contract("dbn_reconstruct called on a DBM".into()));
        }
        self.up_down(v)
    }

    fn up_down(&self, v: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(v)?;
        let mut x = v.to_owned();
        for layer in &self.layers {
            x = layer.hidden_probs_batch(x.view())?;
        }
        for layer in self.layers.iter().rev() {
            x = layer.visible_probs_batch(x.view())?;
        }
        Ok(x)
    }

    /// DBM reconstruction with `sweeps` rounds of top-down refined hidden means.
    ///
    /// Hidden means start from a bottom-up pass. Each sweep updates interior
    /// layer `k` from `b_k + W_kᵀ h_{k-1} + W_{k+1} h_{k+1}` (with `h_{-1} = v`)
    /// and the top layer from `b_L + W_Lᵀ h_{L-1}`, bottom to top. The visible
    /// means are then `σ(a_0 + W_0 h_0)`. A single-layer model falls back to
    /// the DBN pass.
    pub fn dbm_reconstruct(&self, v: ArrayView2<f64>, sweeps: usize) -> Result<Array2<f64>> {
        if self.kind != ModelKind::Dbm {
            return Err(Error::Contract("dbm_reconstruct called on a DBN".into()));
        }
        self.check_input(v)?;
        if self.layers.len() == 1 {
            return self.up_down(v);
        }
        let hidden = self.dbm_hidden_means(v, sweeps)?;
        self.layers[0].visible_probs_batch(hidden[0].view())
    }

    /// Hidden-layer means after `sweeps` refinement sweeps.
    pub fn dbm_hidden_means(&self, v: ArrayView2<f64>, sweeps: usize) -> Result<Vec<Array2<f64>>> {
        self.check_input(v)?;
        let depth = self.layers.len();
        let mut hidden: Vec<Array2<f64>> = Vec::with_capacity(depth);
        for (k, layer) in self.layers.iter().enumerate() {
            let below = if k == 0 { v } else { hidden[k - 1].view() };
            let h = layer.hidden_probs_batch(below)?;
            hidden.push(h);
        }
        for _ in 0..sweeps {
            for k in 0..depth {
                let layer = &self.layers[k];
                let below = if k == 0 {
                    v.to_owned()
                } else {
                    hidden[k - 1].clone()
                };
                let mut act = below.dot(&layer.weights) + &layer.hidden_bias;
                if k + 1 < depth {
                    act += &hidden[k + 1].dot(&self.layers[k + 1].weights.t());
                }
                hidden[k] = act.mapv_into(sigmoid);
            }
        }
        Ok(hidden)
    }

    /// Kind-appropriate deterministic reconstruction.
    pub fn reconstruct(&self, v: ArrayView2<f64>, sweeps: usize) -> Result<Array2<f64>> {
        match self.kind {
            ModelKind::Dbn => self.dbn_reconstruct(v),
            ModelKind::Dbm => self.dbm_reconstruct(v, sweeps),
        }
    }

    /// `(1 / (N·m)) Σ (v − v̂)²` over every image and pixel.
    pub fn reconstruction_mse(&self, data: ArrayView2<f64>, sweeps: usize) -> Result<f64> {
        if data.nrows() == 0 {
            return Err(Error::EmptyData);
        }
        let recon = self.reconstruct(data, sweeps)?;
        Ok(mean_squared_error(data, recon.view()))
    }
}

/// Mean of squared entry-wise differences.
pub fn mean_squared_error(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    let n = a.len() as f64;
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n
}
