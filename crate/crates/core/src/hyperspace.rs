//! Hyperparameter search space.
//!
//! A candidate for an `L`-layer model is a flat vector of `4L` reals, one
//! `(hidden units, learning rate, momentum, weight decay)` block per layer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of coordinates per layer.
pub const DIMS_PER_LAYER: usize = 4;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }
}

/// Per-layer bounds, applied identically to every layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerBounds {
    pub hidden_units: Range,
    pub learning_rate: Range,
    pub momentum: Range,
    pub weight_decay: Range,
}

impl Default for LayerBounds {
    fn default() -> Self {
        Self {
            hidden_units: Range::new(5.0, 100.0),
            learning_rate: Range::new(0.1, 0.9),
            momentum: Range::new(0.00001, 0.01),
            weight_decay: Range::new(0.1, 0.9),
        }
    }
}

/// Decoded hyperparameters for one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerHyperparams {
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

/// A point in the search space with its (optional) fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub x: Vec<f64>,
    pub fitness: Option<f64>,
    pub eval_seed: u64,
}

impl Candidate {
    pub fn new(x: Vec<f64>) -> Self {
        Self {
            x,
            fitness: None,
            eval_seed: 0,
        }
    }

    /// Fitness, treating "not yet evaluated" as worst possible.
    pub fn score(&self) -> f64 {
        self.fitness.unwrap_or(f64::INFINITY)
    }
}

/// Box-bounded search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    layers: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchSpace {
    /// Hyperparameter space for an `layers`-deep model.
    pub fn for_layers(layers: usize, bounds: LayerBounds) -> Result<Self> {
        if layers == 0 {
            return Err(Error::Config(
                "search space needs at least one layer".into(),
            ));
        }
        let ranges = [
            bounds.hidden_units,
            bounds.learning_rate,
            bounds.momentum,
            bounds.weight_decay,
        ];
        let lower = (0..layers)
            .flat_map(|_| ranges.iter().map(|r| r.lo))
            .collect();
        let upper = (0..layers)
            .flat_map(|_| ranges.iter().map(|r| r.hi))
            .collect();
        let space = Self::from_bounds(lower, upper)?;
        Ok(Self { layers, ..space })
    }

    /// Generic box for benchmark functions. `layers()` reports 0.
    pub fn from_bounds(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Config(format!(
                "bounds of lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if let Some(d) = (0..lower.len())
            .find(|&d| !lower[d].is_finite() || !upper[d].is_finite() || lower[d] >= upper[d])
        {
            return Err(Error::Config(format!(
                "dimension {d}: lower bound {} is not below upper bound {}",
                lower[d], upper[d]
            )));
        }
        Ok(Self {
            layers: 0,
            lower,
            upper,
        })
    }

    /// The same interval in every one of `dims` dimensions.
    pub fn uniform_box(dims: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::from_bounds(vec![lo; dims], vec![hi; dims])
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    /// Componentwise projection onto the box.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.clamp_in_place(&mut out);
        out
    }

    pub fn clamp_in_place(&self, x: &mut [f64]) {
        for ((v, &lo), &hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            // NaN coordinates land on the lower bound.
            *v = if v.is_nan() { lo } else { v.clamp(lo, hi) };
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((v, lo), hi)| lo <= v && v <= hi)
    }

    /// Uniform draw in the box (one variate per dimension, in order), followed
    /// by one draw for the evaluation seed.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Candidate {
        let x = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        Candidate {
            x,
            fitness: None,
            eval_seed: rng.random(),
        }
    }

    /// Decodes `x` into one hyperparameter record per layer. Hidden units are
    /// rounded half away from zero, then clamped to the integer bounds.
    pub fn decode(&self, x: &[f64]) -> Result<Vec<LayerHyperparams>> {
        if self.layers == 0 {
            return Err(Error::Contract(
                "decode needs a layered hyperparameter space".into(),
            ));
        }
        if x.len() != self.dims() {
            return Err(Error::Dimension(format!(
                "candidate has {} coordinates, space has {}",
                x.len(),
                self.dims()
            )));
        }
        let x = self.clamp(x);
        Ok(x.chunks_exact(DIMS_PER_LAYER)
            .enumerate()
            .map(|(j, block)| {
                let base = j * DIMS_PER_LAYER;
                let n_lo = self.lower[base].ceil();
                let n_hi = self.upper[base].floor().max(n_lo);
                LayerHyperparams {
                    hidden_units: block[0].round().clamp(n_lo, n_hi) as usize,
                    learning_rate: block[1],
                    momentum: block[2],
                    weight_decay: block[3],
                }
            })
            .collect())
    }
}
