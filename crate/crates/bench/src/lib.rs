//! Shared fixtures for the criterion benchmarks.

use boltztune::seeding::rng_from_seed;
use ndarray::Array2;
use rand::Rng;

/// A `rows × cols` matrix of fair coin flips.
pub fn random_binary(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng_from_seed(seed);
    Array2::from_shape_fn(
        (rows, cols),
        |_| if rng.random::<bool>() { 1.0 } else { 0.0 },
    )
}
