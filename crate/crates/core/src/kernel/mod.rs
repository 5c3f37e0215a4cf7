//! Kernel functions, Gram-matrix assembly, feature-space centering, and
//! the bandwidth heuristic. The probabilistic cluster kernel lives in
//! [`cluster`], graph construction in [`graph`].

pub mod cluster;
pub mod graph;

use crate::error::{Error, Result};
use crate::linalg::ensure_finite;
use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cluster::ClusterKernel;

/// Bandwidth request: a fixed positive value or the median heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sigma {
    Median,
    Fixed(f64),
}

impl Sigma {
    /// Resolve to a concrete bandwidth for the given sample block.
    pub fn resolve(&self, x: &ArrayView2<f64>) -> Result<f64> {
        match self {
            Sigma::Fixed(s) if *s > 0.0 && s.is_finite() => Ok(*s),
            Sigma::Fixed(s) => Err(Error::invalid(format!(
                "kernel bandwidth must be a positive number, got {s}"
            ))),
            Sigma::Median => median_bandwidth(x),
        }
    }
}

/// A kernel request as it arrives from configuration: bandwidths may
/// still need resolving and cluster ensembles fitting. [`KernelChoice::resolve`]
/// turns it into a [`KernelSpec`] against a concrete training block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelChoice {
    Linear,
    Rbf {
        sigma: Sigma,
    },
    Cluster {
        restarts: usize,
        depth: usize,
        seed: u64,
    },
    Composite {
        sigma: Sigma,
        beta: f64,
        restarts: usize,
        depth: usize,
        seed: u64,
    },
}

impl KernelChoice {
    /// Fix bandwidths and fit any mixture ensembles on the training
    /// block, producing an evaluable kernel.
    pub fn resolve(&self, x: &ArrayView2<f64>) -> Result<KernelSpec> {
        match self {
            KernelChoice::Linear => Ok(KernelSpec::Linear),
            KernelChoice::Rbf { sigma } => Ok(KernelSpec::Rbf {
                sigma: sigma.resolve(x)?,
            }),
            KernelChoice::Cluster {
                restarts,
                depth,
                seed,
            } => Ok(KernelSpec::Cluster {
                model: ClusterKernel::fit(x, *restarts, *depth, *seed)?,
            }),
            KernelChoice::Composite {
                sigma,
                beta,
                restarts,
                depth,
                seed,
            } => {
                if !(0.0..=1.0).contains(beta) {
                    return Err(Error::invalid(format!(
                        "composite mixing weight must lie in [0, 1], got {beta}"
                    )));
                }
                Ok(KernelSpec::Composite {
                    sigma: sigma.resolve(x)?,
                    beta: *beta,
                    model: ClusterKernel::fit(x, *restarts, *depth, *seed)?,
                })
            }
        }
    }
}

/// A fully-resolved kernel, ready to evaluate between sample blocks and
/// to serialize inside a model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum KernelSpec {
    /// k(a, b) = a . b
    Linear,
    /// k(a, b) = exp(-||a - b||^2 / (2 sigma^2))
    Rbf { sigma: f64 },
    /// Posterior-agreement kernel from an ensemble of Gaussian mixtures.
    Cluster { model: ClusterKernel },
    /// beta * RBF + (1 - beta) * cluster kernel.
    Composite {
        sigma: f64,
        beta: f64,
        model: ClusterKernel,
    },
}

impl KernelSpec {
    pub fn family(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Cluster { .. } => "cluster",
            KernelSpec::Composite { .. } => "composite",
        }
    }

    /// Kernel evaluations between the rows of `a` (na x d) and `b`
    /// (nb x d): an na x nb block.
    pub fn gram(&self, a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if a.ncols() != b.ncols() {
            return Err(Error::data(format!(
                "kernel blocks disagree on dimension: {} vs {}",
                a.ncols(),
                b.ncols()
            )));
        }
        ensure_finite("kernel input a", a)?;
        ensure_finite("kernel input b", b)?;
        match self {
            KernelSpec::Linear => Ok(a.dot(&b.t())),
            KernelSpec::Rbf { sigma } => {
                if !(*sigma > 0.0) {
                    return Err(Error::invalid("RBF bandwidth must be positive"));
                }
                Ok(rbf_gram(a, b, *sigma))
            }
            KernelSpec::Cluster { model } => model.gram(a, b),
            KernelSpec::Composite { sigma, beta, model } => {
                if !(0.0..=1.0).contains(beta) {
                    return Err(Error::invalid(format!(
                        "composite mixing weight must lie in [0, 1], got {beta}"
                    )));
                }
                let ks = rbf_gram(a, b, *sigma);
                let kc = model.gram(a, b)?;
                Ok(composite_kernel(&ks, &kc, *beta)?)
            }
        }
    }
}

fn sq_dist(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn rbf_gram(a: &ArrayView2<f64>, b: &ArrayView2<f64>, sigma: f64) -> Array2<f64> {
    let denom = 2.0 * sigma * sigma;
    let mut k = Array2::<f64>::zeros((a.nrows(), b.nrows()));
    for (i, ra) in a.rows().into_iter().enumerate() {
        for (j, rb) in b.rows().into_iter().enumerate() {
            k[(i, j)] = (-sq_dist(&ra, &rb) / denom).exp();
        }
    }
    k
}

/// Convex combination of two kernel blocks of equal shape.
pub fn composite_kernel(ks: &Array2<f64>, kc: &Array2<f64>, beta: f64) -> Result<Array2<f64>> {
    if ks.dim() != kc.dim() {
        return Err(Error::data(format!(
            "composite kernel blocks disagree: {:?} vs {:?}",
            ks.dim(),
            kc.dim()
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid(format!(
            "composite mixing weight must lie in [0, 1], got {beta}"
        )));
    }
    Ok(ks * beta + &(kc * (1.0 - beta)))
}

/// Seed for the row subsample taken when the median heuristic is asked
/// about more than `MEDIAN_SUBSAMPLE` rows. Fixed so resolution is
/// reproducible without threading a seed through every call site.
const MEDIAN_SUBSAMPLE_SEED: u64 = 0x5EED_BA5E;
const MEDIAN_SUBSAMPLE: usize = 5000;

/// Median of the pairwise Euclidean distances between distinct rows; the
/// usual default bandwidth for the RBF kernel. An even pair count
/// averages the two middle values. Beyond 5000 rows the median is taken
/// over a fixed-seed subsample of 5000 rows.
pub fn median_bandwidth(x: &ArrayView2<f64>) -> Result<f64> {
    let l = x.nrows();
    if l < 2 {
        return Err(Error::data(
            "median bandwidth needs at least two rows to compare",
        ));
    }
    let owned;
    let view = if l > MEDIAN_SUBSAMPLE {
        let mut idx: Vec<usize> = (0..l).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(MEDIAN_SUBSAMPLE_SEED);
        idx.shuffle(&mut rng);
        idx.truncate(MEDIAN_SUBSAMPLE);
        idx.sort_unstable();
        owned = x.select(ndarray::Axis(0), &idx);
        owned.view()
    } else {
        x.view()
    };
    let n = view.nrows();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(sq_dist(&view.row(i), &view.row(j)).sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if median <= 0.0 {
        return Err(Error::data(
            "all rows coincide; the median pairwise distance is zero and no \
             bandwidth can be derived",
        ));
    }
    Ok(median)
}

/// Training-side centering statistics: column means of the training Gram
/// and its grand mean. Enough to replay feature-space centering on any
/// test block against the same training set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GramCentering {
    pub col_means: Vec<f64>,
    pub grand_mean: f64,
}

impl GramCentering {
    pub fn dim(&self) -> usize {
        self.col_means.len()
    }
}

/// Double-center a training Gram (map features to zero mean in feature
/// space) and return the statistics needed to center test blocks.
pub fn center_train(k: &Array2<f64>) -> Result<(Array2<f64>, GramCentering)> {
    if k.nrows() != k.ncols() || k.is_empty() {
        return Err(Error::data(format!(
            "training Gram must be square and non-empty, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    ensure_finite("training Gram", k)?;
    let l = k.nrows();
    let col_means: Vec<f64> = (0..l)
        .map(|j| k.column(j).iter().sum::<f64>() / l as f64)
        .collect();
    let grand_mean = col_means.iter().sum::<f64>() / l as f64;
    let mut out = k.clone();
    for i in 0..l {
        // Rows of a symmetric Gram have the same means as its columns.
        let row_mean = col_means[i];
        for j in 0..l {
            out[(i, j)] = k[(i, j)] - col_means[j] - row_mean + grand_mean;
        }
    }
    Ok((
        out,
        GramCentering {
            col_means,
            grand_mean,
        },
    ))
}

/// Center a test-versus-training Gram block with training statistics.
/// Rows index test points, columns index the original training points.
pub fn center_test(k_test: &Array2<f64>, stats: &GramCentering) -> Result<Array2<f64>> {
    if k_test.ncols() != stats.dim() {
        return Err(Error::data(format!(
            "test Gram has {} columns but the centering statistics cover {}",
            k_test.ncols(),
            stats.dim()
        )));
    }
    ensure_finite("test Gram", k_test)?;
    let l = stats.dim() as f64;
    let mut out = k_test.clone();
    for mut row in out.rows_mut() {
        let row_mean = row.iter().sum::<f64>() / l;
        for (j, v) in row.iter_mut().enumerate() {
            *v = *v - stats.col_means[j] - row_mean + stats.grand_mean;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Axis};

    #[test]
    fn median_bandwidth_hand_case() {
        // Points {0, 1, 3} on a line: distances {1, 2, 3}, median 2.
        let x = array![[0.0], [1.0], [3.0]];
        assert_abs_diff_eq!(median_bandwidth(&x.view()).unwrap(), 2.0);
    }

    #[test]
    fn median_bandwidth_even_count_averages_middle_pair() {
        // Points {0, 1} give a single distance; {0,1,2,10} give six:
        // {1,2,10,1,9,8} sorted {1,1,2,8,9,10}, median (2+8)/2 = 5.
        let x = array![[0.0], [1.0], [2.0], [10.0]];
        assert_abs_diff_eq!(median_bandwidth(&x.view()).unwrap(), 5.0);
    }

    #[test]
    fn median_bandwidth_rejects_coincident_rows() {
        let x = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        assert!(matches!(
            median_bandwidth(&x.view()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn median_bandwidth_subsamples_deterministically() {
        let x = Array2::from_shape_fn((6000, 2), |(i, j)| ((i * 7 + j * 3) % 101) as f64 / 10.0);
        let a = median_bandwidth(&x.view()).unwrap();
        let b = median_bandwidth(&x.view()).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
    }

    #[test]
    fn rbf_gram_has_unit_diagonal_and_symmetry() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]];
        let spec = KernelSpec::Rbf { sigma: 1.5 };
        let k = spec.gram(&x.view(), &x.view()).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(k[(i, i)], 1.0);
            for j in 0..3 {
                assert_abs_diff_eq!(k[(i, j)], k[(j, i)]);
                assert!(k[(i, j)] > 0.0 && k[(i, j)] <= 1.0);
            }
        }
        assert_abs_diff_eq!(k[(0, 1)], (-1.0f64 / (2.0 * 2.25)).exp(), epsilon = 1e-14);
    }

    #[test]
    fn rbf_gram_is_translation_invariant() {
        let x = array![[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]];
        let shifted = &x + 3.25;
        let spec = KernelSpec::Rbf { sigma: 0.8 };
        let k1 = spec.gram(&x.view(), &x.view()).unwrap();
        let k2 = spec.gram(&shifted.view(), &shifted.view()).unwrap();
        for (a, b) in k1.iter().zip(k2.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_gram_matches_dot_products() {
        let a = array![[1.0, 2.0], [0.0, -1.0]];
        let b = array![[3.0, 1.0]];
        let k = KernelSpec::Linear.gram(&a.view(), &b.view()).unwrap();
        assert_eq!(k.dim(), (2, 1));
        assert_abs_diff_eq!(k[(0, 0)], 5.0);
        assert_abs_diff_eq!(k[(1, 0)], -1.0);
    }

    #[test]
    fn gram_rejects_dimension_mismatch() {
        let a = Array2::<f64>::zeros((2, 3));
        let b = Array2::<f64>::zeros((2, 4));
        assert!(KernelSpec::Linear.gram(&a.view(), &b.view()).is_err());
    }

    #[test]
    fn center_train_hand_case() {
        let k = array![[2.0, 0.0], [0.0, 2.0]];
        let (c, stats) = center_train(&k).unwrap();
        assert_abs_diff_eq!(c[(0, 0)], 1.0);
        assert_abs_diff_eq!(c[(0, 1)], -1.0);
        assert_abs_diff_eq!(c[(1, 0)], -1.0);
        assert_abs_diff_eq!(c[(1, 1)], 1.0);
        assert_eq!(stats.dim(), 2);
        assert_abs_diff_eq!(stats.grand_mean, 1.0);
    }

    #[test]
    fn centered_gram_has_zero_row_and_column_sums() {
        let x = array![[1.0, 0.5], [2.0, -1.0], [0.0, 0.0], [1.5, 2.0]];
        let spec = KernelSpec::Rbf { sigma: 1.0 };
        let k = spec.gram(&x.view(), &x.view()).unwrap();
        let (c, _) = center_train(&k).unwrap();
        for s in c.sum_axis(Axis(0)).iter() {
            assert_abs_diff_eq!(*s, 0.0, epsilon = 1e-12);
        }
        for s in c.sum_axis(Axis(1)).iter() {
            assert_abs_diff_eq!(*s, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn centering_is_idempotent() {
        let x = array![[1.0], [3.0], [-2.0]];
        let k = KernelSpec::Linear.gram(&x.view(), &x.view()).unwrap();
        let (c1, _) = center_train(&k).unwrap();
        let (c2, _) = center_train(&c1).unwrap();
        for (a, b) in c1.iter().zip(c2.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn center_test_agrees_with_center_train_on_training_rows() {
        let x = array![[1.0, 0.0], [0.5, 1.5], [-1.0, 2.0]];
        let spec = KernelSpec::Rbf { sigma: 2.0 };
        let k = spec.gram(&x.view(), &x.view()).unwrap();
        let (c, stats) = center_train(&k).unwrap();
        let ct = center_test(&k, &stats).unwrap();
        for (a, b) in c.iter().zip(ct.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn center_test_zeroes_the_training_mean_under_a_linear_kernel() {
        let x = array![[1.0, 2.0], [3.0, -1.0], [2.0, 5.0]];
        let mean = x.mean_axis(Axis(0)).unwrap().insert_axis(Axis(0));
        let k = KernelSpec::Linear.gram(&x.view(), &x.view()).unwrap();
        let (_, stats) = center_train(&k).unwrap();
        let k_test = KernelSpec::Linear.gram(&mean.view(), &x.view()).unwrap();
        let ct = center_test(&k_test, &stats).unwrap();
        for v in ct.iter() {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn composite_kernel_validates_and_mixes() {
        let ks = array![[1.0, 0.0], [0.0, 1.0]];
        let kc = array![[0.5, 0.5], [0.5, 0.5]];
        let k = composite_kernel(&ks, &kc, 0.25).unwrap();
        assert_abs_diff_eq!(k[(0, 0)], 0.25 + 0.75 * 0.5);
        assert_abs_diff_eq!(k[(0, 1)], 0.75 * 0.5);
        assert!(composite_kernel(&ks, &kc, 1.5).is_err());
        let bad = Array2::<f64>::zeros((3, 3));
        assert!(composite_kernel(&ks, &bad, 0.5).is_err());
    }
}
