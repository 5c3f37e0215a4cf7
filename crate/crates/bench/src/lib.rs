//! Shared helpers for the criterion benchmarks.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded standard-normal matrix (Box-Muller over ChaCha8), so every
/// benchmark run sees identical inputs.
pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| {
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    })
}

/// Targets linearly tied to the first two input columns plus noise,
/// giving the supervised fits something real to extract.
pub fn linked_targets(x: &Array2<f64>, seed: u64) -> Array2<f64> {
    let noise = gaussian(x.nrows(), 2, seed);
    let mut y = Array2::<f64>::zeros((x.nrows(), 2));
    for r in 0..x.nrows() {
        y[(r, 0)] = x[(r, 0)] - 0.5 * x[(r, 1)] + 0.1 * noise[(r, 0)];
        y[(r, 1)] = x[(r, 1)] + 0.1 * noise[(r, 1)];
    }
    y
}
