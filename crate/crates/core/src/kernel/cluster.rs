//! Probabilistic cluster kernel: an ensemble of Gaussian mixtures is fit
//! with EM at several component counts and random restarts, and two
//! points are compared through the agreement of their posterior
//! assignment vectors averaged over the ensemble. Entries always land in
//! [0, 1] and points sharing cluster structure score high even when they
//! are far apart in input space.

use crate::error::{Error, Result};
use crate::linalg::ensure_finite;
use nalgebra::{Cholesky, DMatrix, DVector};
use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const EM_MAX_ITER: usize = 200;
const EM_REL_TOL: f64 = 1e-7;
/// Relative diagonal floor applied to every covariance, as a fraction of
/// the average input-feature variance. Keeps EM away from singular
/// covariances collapsing onto single points.
const COV_FLOOR_REL: f64 = 1e-6;

/// One Gaussian component: weight, mean, full covariance (row-major).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

/// One fitted mixture from the ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mixture {
    pub components: Vec<GaussComponent>,
}

/// The fitted cluster-kernel model: `restarts` x `depth` mixtures, with
/// component counts 2..=depth+1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterKernel {
    pub restarts: usize,
    pub depth: usize,
    pub seed: u64,
    pub dim: usize,
    pub mixtures: Vec<Mixture>,
}

impl ClusterKernel {
    /// Fit the mixture ensemble on `x`. `restarts` controls independent
    /// EM initializations per component count and `depth` the number of
    /// component counts tried (2 through depth + 1), so the ensemble
    /// holds `restarts * depth` mixtures.
    pub fn fit(x: &ArrayView2<f64>, restarts: usize, depth: usize, seed: u64) -> Result<Self> {
        if restarts == 0 || depth == 0 {
            return Err(Error::invalid(
                "cluster kernel needs at least one restart and one component count",
            ));
        }
        let n = x.nrows();
        let d = x.ncols();
        let max_g = depth + 1;
        if n < max_g + 1 {
            return Err(Error::data(format!(
                "cluster kernel with depth {depth} fits up to {max_g} components \
                 and needs at least {} rows, got {n}",
                max_g + 1
            )));
        }
        ensure_finite("cluster kernel input", x)?;
        let floor = cov_floor(x);
        let mut mixtures = Vec::with_capacity(restarts * depth);
        for q in 0..restarts {
            for g in 2..=max_g {
                let sub_seed = seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add((q as u64) << 32 | g as u64);
                mixtures.push(fit_gmm(x, g, sub_seed, floor)?);
            }
        }
        Ok(ClusterKernel {
            restarts,
            depth,
            seed,
            dim: d,
            mixtures,
        })
    }

    /// Posterior assignment vectors for every row of `x`, one mixture at
    /// a time: an n x g block of responsibilities.
    fn posteriors(&self, mixture: &Mixture, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        let n = x.nrows();
        let g = mixture.components.len();
        let mut logp = Array2::<f64>::zeros((n, g));
        for (k, comp) in mixture.components.iter().enumerate() {
            let gauss = PreparedGaussian::new(comp)?;
            for (i, row) in x.rows().into_iter().enumerate() {
                logp[(i, k)] = comp.weight.max(1e-300).ln() + gauss.log_density(row.as_slice().unwrap());
            }
        }
        let mut post = Array2::<f64>::zeros((n, g));
        for i in 0..n {
            let row = logp.row(i);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for k in 0..g {
                let v = (row[k] - m).exp();
                post[(i, k)] = v;
                total += v;
            }
            for k in 0..g {
                post[(i, k)] /= total;
            }
        }
        Ok(post)
    }

    /// Kernel block between the rows of `a` and `b`: the average over
    /// mixtures of posterior-vector dot products.
    pub fn gram(&self, a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if a.ncols() != self.dim || b.ncols() != self.dim {
            return Err(Error::data(format!(
                "cluster kernel was fit on dimension {}, got blocks of dimension {} and {}",
                self.dim,
                a.ncols(),
                b.ncols()
            )));
        }
        let mut k = Array2::<f64>::zeros((a.nrows(), b.nrows()));
        for mixture in &self.mixtures {
            let pa = self.posteriors(mixture, a)?;
            let pb = self.posteriors(mixture, b)?;
            k = k + pa.dot(&pb.t());
        }
        Ok(k / self.mixtures.len() as f64)
    }
}

/// Diagonal floor derived from the average feature variance of the
/// training block.
fn cov_floor(x: &ArrayView2<f64>) -> f64 {
    let n = x.nrows() as f64;
    let mean = x.mean_axis(Axis(0)).unwrap();
    let mut total = 0.0;
    for row in x.rows() {
        for (j, v) in row.iter().enumerate() {
            total += (v - mean[j]) * (v - mean[j]);
        }
    }
    let avg_var = total / (n * x.ncols() as f64);
    (avg_var * COV_FLOOR_REL).max(1e-12)
}

/// A component with its Cholesky factor precomputed for density queries.
struct PreparedGaussian {
    mean: DVector<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    log_norm: f64,
}

impl PreparedGaussian {
    fn new(comp: &GaussComponent) -> Result<Self> {
        let d = comp.mean.len();
        let cov = DMatrix::from_fn(d, d, |i, j| comp.cov[i][j]);
        let chol = Cholesky::new(cov).ok_or_else(|| {
            Error::numerical("mixture covariance is not positive definite")
        })?;
        let log_det: f64 = (0..d).map(|i| chol.l()[(i, i)].ln()).sum::<f64>() * 2.0;
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok(PreparedGaussian {
            mean: DVector::from_row_slice(&comp.mean),
            chol,
            log_norm,
        })
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_row_slice(x) - &self.mean;
        let y = self.chol.l().solve_lower_triangular(&diff).unwrap();
        self.log_norm - 0.5 * y.norm_squared()
    }
}

/// Squared Euclidean distance between a row and a center.
fn sq_dist_to(row: &[f64], center: &[f64]) -> f64 {
    row.iter()
        .zip(center.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Spread-out seeding for EM: first center uniform, later centers drawn
/// with probability proportional to squared distance from the nearest
/// chosen center.
fn seed_centers(x: &ArrayView2<f64>, g: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = x.nrows();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(g);
    let first = rng.random_range(0..n);
    centers.push(x.row(first).to_vec());
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist_to(x.row(i).as_slice().unwrap(), &centers[0]))
        .collect();
    while centers.len() < g {
        let total: f64 = d2.iter().sum();
        let pick = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centers.push(x.row(pick).to_vec());
        for i in 0..n {
            let nd = sq_dist_to(x.row(i).as_slice().unwrap(), centers.last().unwrap());
            if nd < d2[i] {
                d2[i] = nd;
            }
        }
    }
    centers
}

/// EM for a full-covariance Gaussian mixture with `g` components.
fn fit_gmm(x: &ArrayView2<f64>, g: usize, seed: u64, floor: f64) -> Result<Mixture> {
    let n = x.nrows();
    let d = x.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = seed_centers(x, g, &mut rng);

    // Shared full covariance of the data as the starting spread.
    let mean = x.mean_axis(Axis(0)).unwrap();
    let mut global_cov = vec![vec![0.0; d]; d];
    for row in x.rows() {
        for i in 0..d {
            for j in 0..d {
                global_cov[i][j] += (row[i] - mean[i]) * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            global_cov[i][j] /= n as f64;
        }
        global_cov[i][i] += floor;
    }

    let mut comps: Vec<GaussComponent> = centers
        .into_iter()
        .map(|c| GaussComponent {
            weight: 1.0 / g as f64,
            mean: c,
            cov: global_cov.clone(),
        })
        .collect();

    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..EM_MAX_ITER {
        // E step: responsibilities via log-sum-exp.
        let mut logp = Array2::<f64>::zeros((n, g));
        for (k, comp) in comps.iter().enumerate() {
            let gauss = match PreparedGaussian::new(comp) {
                Ok(ga) => ga,
                Err(_) => {
                    // Degenerate component: score this sweep from a fresh
                    // restart on a random point with the shared covariance;
                    // the M step rebuilds the component from there.
                    let pick = rng.random_range(0..n);
                    let fixed = GaussComponent {
                        weight: 1.0 / g as f64,
                        mean: x.row(pick).to_vec(),
                        cov: global_cov.clone(),
                    };
                    PreparedGaussian::new(&fixed)?
                }
            };
            for (i, row) in x.rows().into_iter().enumerate() {
                logp[(i, k)] =
                    comp.weight.max(1e-300).ln() + gauss.log_density(row.as_slice().unwrap());
            }
        }
        let mut resp = Array2::<f64>::zeros((n, g));
        let mut ll = 0.0;
        for i in 0..n {
            let row = logp.row(i);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for k in 0..g {
                let v = (row[k] - m).exp();
                resp[(i, k)] = v;
                total += v;
            }
            ll += m + total.ln();
            for k in 0..g {
                resp[(i, k)] /= total;
            }
        }

        // M step.
        for k in 0..g {
            let nk: f64 = resp.column(k).iter().sum();
            if nk < 1e-10 {
                // Empty component: reseed it.
                let pick = rng.random_range(0..n);
                comps[k] = GaussComponent {
                    weight: 1.0 / g as f64,
                    mean: x.row(pick).to_vec(),
                    cov: global_cov.clone(),
                };
                continue;
            }
            let mut mu = vec![0.0; d];
            for (i, row) in x.rows().into_iter().enumerate() {
                for j in 0..d {
                    mu[j] += resp[(i, k)] * row[j];
                }
            }
            for v in mu.iter_mut() {
                *v /= nk;
            }
            let mut cov = vec![vec![0.0; d]; d];
            for (i, row) in x.rows().into_iter().enumerate() {
                let r = resp[(i, k)];
                for a in 0..d {
                    let da = row[a] - mu[a];
                    for b in 0..d {
                        cov[a][b] += r * da * (row[b] - mu[b]);
                    }
                }
            }
            for a in 0..d {
                for b in 0..d {
                    cov[a][b] /= nk;
                }
                cov[a][a] += floor;
            }
            comps[k] = GaussComponent {
                weight: nk / n as f64,
                mean: mu,
                cov,
            };
        }

        if (ll - prev_ll).abs() <= EM_REL_TOL * ll.abs().max(1.0) {
            prev_ll = ll;
            break;
        }
        prev_ll = ll;
    }
    if !prev_ll.is_finite() {
        return Err(Error::numerical(
            "mixture fit diverged: log-likelihood is not finite",
        ));
    }
    Ok(Mixture { components: comps })
}

/// Convenience wrapper: fit the ensemble and return the training Gram
/// alongside the model.
pub fn cluster_kernel_fit(
    x: &ArrayView2<f64>,
    restarts: usize,
    depth: usize,
    seed: u64,
) -> Result<(ClusterKernel, Array2<f64>)> {
    let model = ClusterKernel::fit(x, restarts, depth, seed)?;
    let k = model.gram(x, x)?;
    Ok((model, k))
}

/// Sanity metric used in tests: mean kernel value over a set of
/// (row, row) index pairs.
#[cfg(test)]
fn mean_kernel_over(k: &Array2<f64>, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| k[(i, j)]).sum::<f64>() / pairs.len() as f64
}
