//! Deterministic synthetic datasets. All generators are pure functions
//! of their arguments — the same seed always yields the same rows — so
//! demos, tests, and benchmarks can reference them instead of shipping
//! data files.

use crate::data::{Dataset, Targets};
use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn noise_dist(noise: f64) -> Result<Normal<f64>> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::invalid(format!(
            "noise level must be a non-negative number, got {noise}"
        )));
    }
    Normal::new(0.0, noise).map_err(|e| Error::invalid(format!("bad noise level: {e}")))
}

/// Three sinusoidal arcs stacked 0.4 apart: class k occupies the curve
/// (t, sin t + 0.4 k) for t in [0, 2 pi], with isotropic Gaussian
/// jitter. The class boundaries are sinusoidal, so linear extractors
/// cannot separate the arcs while kernel extractors can.
pub fn three_arcs(per_class: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::invalid("each arc needs at least one row"));
    }
    let dist = noise_dist(noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = per_class * 3;
    let mut x = Array2::<f64>::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for k in 0..3 {
        for _ in 0..per_class {
            let t = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            x[(row, 0)] = t + dist.sample(&mut rng);
            x[(row, 1)] = t.sin() + 0.4 * k as f64 + dist.sample(&mut rng);
            labels.push(format!("arc{k}"));
            row += 1;
        }
    }
    Dataset::new(x, Targets::Labels(labels))
}

/// Two interleaved half circles; the classic nonlinear two-class toy.
pub fn two_moons(per_class: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::invalid("each moon needs at least one row"));
    }
    let dist = noise_dist(noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = per_class * 2;
    let mut x = Array2::<f64>::zeros((n, 2));
    let mut labels = vec![String::new(); n];
    for i in 0..per_class {
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        x[(i, 0)] = theta.cos() + dist.sample(&mut rng);
        x[(i, 1)] = theta.sin() + dist.sample(&mut rng);
        labels[i] = "upper".to_string();
        let j = per_class + i;
        let theta = rng.random_range(0.0..std::f64::consts::PI);
        x[(j, 0)] = 1.0 - theta.cos() + dist.sample(&mut rng);
        x[(j, 1)] = 0.5 - theta.sin() + dist.sample(&mut rng);
        labels[j] = "lower".to_string();
    }
    Dataset::new(x, Targets::Labels(labels))
}

/// Isotropic Gaussian blobs, one per row of `centers` (any dimension).
pub fn blobs(
    per_class: usize,
    centers: &ArrayView2<f64>,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if per_class == 0 {
        return Err(Error::invalid("each blob needs at least one row"));
    }
    if centers.nrows() == 0 || centers.ncols() == 0 {
        return Err(Error::data("blob centers must be a non-empty matrix"));
    }
    let dist = noise_dist(spread)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = centers.nrows();
    let d = centers.ncols();
    let mut x = Array2::<f64>::zeros((per_class * c, d));
    let mut labels = Vec::with_capacity(per_class * c);
    let mut row = 0;
    for k in 0..c {
        for _ in 0..per_class {
            for j in 0..d {
                x[(row, j)] = centers[(k, j)] + dist.sample(&mut rng);
            }
            labels.push(format!("blob{k}"));
            row += 1;
        }
    }
    Dataset::new(x, Targets::Labels(labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn arcs_have_the_right_shape_and_order() {
        let ds = three_arcs(100, 0.15, 7).unwrap();
        assert_eq!(ds.x.dim(), (300, 2));
        let labels = ds.labels().unwrap();
        assert_eq!(labels.iter().filter(|l| *l == "arc0").count(), 100);
        // The vertical offsets keep class means apart despite the noise.
        let mean_y = |k: usize| -> f64 {
            (0..100).map(|i| ds.x[(k * 100 + i, 1)]).sum::<f64>() / 100.0
        };
        assert!(mean_y(2) > mean_y(1));
        assert!(mean_y(1) > mean_y(0));
    }

    #[test]
    fn generators_are_deterministic_per_seed() {
        let a = three_arcs(20, 0.15, 42).unwrap();
        let b = three_arcs(20, 0.15, 42).unwrap();
        let c = three_arcs(20, 0.15, 43).unwrap();
        assert_eq!(a.x, b.x);
        assert_ne!(a.x, c.x);

        let m1 = two_moons(15, 0.1, 5).unwrap();
        let m2 = two_moons(15, 0.1, 5).unwrap();
        assert_eq!(m1.x, m2.x);
    }

    #[test]
    fn moons_interleave_two_classes() {
        let ds = two_moons(40, 0.05, 11).unwrap();
        assert_eq!(ds.x.dim(), (80, 2));
        let labels = ds.labels().unwrap();
        assert_eq!(labels.iter().filter(|l| *l == "upper").count(), 40);
        assert_eq!(labels.iter().filter(|l| *l == "lower").count(), 40);
        // Upper moon sits above the lower one on average.
        let upper: f64 = (0..40).map(|i| ds.x[(i, 1)]).sum::<f64>() / 40.0;
        let lower: f64 = (40..80).map(|i| ds.x[(i, 1)]).sum::<f64>() / 40.0;
        assert!(upper > lower);
    }

    #[test]
    fn blobs_follow_their_centers() {
        let centers = array![[0.0, 0.0, 0.0], [10.0, 10.0, 10.0]];
        let ds = blobs(50, &centers.view(), 0.5, 3).unwrap();
        assert_eq!(ds.x.dim(), (100, 3));
        for i in 0..50 {
            assert!(ds.x[(i, 0)] < 5.0);
            assert!(ds.x[(50 + i, 0)] > 5.0);
        }
        assert_eq!(ds.labels().unwrap()[0], "blob0");
        assert_eq!(ds.labels().unwrap()[99], "blob1");
    }

    #[test]
    fn degenerate_requests_are_rejected() {
        assert!(three_arcs(0, 0.1, 1).is_err());
        assert!(three_arcs(5, -0.1, 1).is_err());
        assert!(two_moons(0, 0.1, 1).is_err());
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(blobs(5, &empty.view(), 0.1, 1).is_err());
    }
}
