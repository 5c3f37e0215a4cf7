//! Kernel dependence measurement and dependence-driven feature
//! extraction.
//!
//! * [`hsic`] / [`hsic_report`] — the Hilbert-Schmidt independence
//!   criterion between two sample blocks under chosen kernels, with a
//!   closed-form permutation-null mean and an optional empirical
//!   permutation test.
//! * [`HscaModel`] — sequential extraction of kernel features that
//!   maximize dependence with a target block while staying decorrelated
//!   from the features already extracted.
//! * [`kgv`] — a generalized-variance style aggregate of the
//!   regularized canonical correlations between two kernel views;
//!   at mixing weight 1 the spectrum coincides with kernelized
//!   canonical correlation between the views.

use crate::data::{center_fit_apply, CenteringStats};
use crate::error::{Error, Result};
use crate::kernel::{center_test, center_train, GramCentering, KernelChoice, KernelSpec};
use crate::linalg::{eig_gen, solve_spd, SolverConfig};
use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Dependence statistic between two pre-centered Grams: the scaled
/// Hilbert-Schmidt norm of the cross-covariance operator,
/// sum_ij Kx[i,j] Ky[i,j] / (l-1)^2.
pub fn hsic_of_centered(kxc: &Array2<f64>, kyc: &Array2<f64>) -> Result<f64> {
    if kxc.dim() != kyc.dim() || kxc.nrows() != kxc.ncols() {
        return Err(Error::data(format!(
            "dependence needs two square Grams of equal size, got {:?} and {:?}",
            kxc.dim(),
            kyc.dim()
        )));
    }
    let l = kxc.nrows() as f64;
    if l < 2.0 {
        return Err(Error::data("dependence needs at least two rows"));
    }
    let s: f64 = kxc.iter().zip(kyc.iter()).map(|(a, b)| a * b).sum();
    Ok(s / ((l - 1.0) * (l - 1.0)))
}

/// Center two raw Grams and compute the dependence statistic.
pub fn hsic_from_grams(kx: &Array2<f64>, ky: &Array2<f64>) -> Result<f64> {
    let (kxc, _) = center_train(kx)?;
    let (kyc, _) = center_train(ky)?;
    hsic_of_centered(&kxc, &kyc)
}

/// Dependence between two sample blocks under the chosen kernels.
/// Bandwidths resolve against their own block.
pub fn hsic(
    x: &ArrayView2<f64>,
    y: &ArrayView2<f64>,
    kx: &KernelChoice,
    ky: &KernelChoice,
) -> Result<f64> {
    if x.nrows() != y.nrows() {
        return Err(Error::data(format!(
            "blocks disagree on rows: {} vs {}",
            x.nrows(),
            y.nrows()
        )));
    }
    let sx = kx.resolve(x)?;
    let sy = ky.resolve(y)?;
    let gx = sx.gram(x, x)?;
    let gy = sy.gram(y, y)?;
    hsic_from_grams(&gx, &gy)
}

/// Outcome of a dependence test.
#[derive(Debug, Clone, Serialize)]
pub struct DependenceReport {
    /// Observed statistic.
    pub statistic: f64,
    /// Closed-form mean of the statistic under row permutations of one
    /// block: tr(Kx~) tr(Ky~) / (l-1)^3.
    pub null_mean: f64,
    /// Empirical permutation p-value, when permutations were requested.
    pub p_value: Option<f64>,
    pub permutations: usize,
    pub n_rows: usize,
}

/// Dependence statistic plus its permutation null. With `permutations`
/// > 0 an empirical p-value is estimated by permuting the rows of the
/// second block (add-one smoothing keeps it away from zero).
pub fn hsic_report(
    x: &ArrayView2<f64>,
    y: &ArrayView2<f64>,
    kx: &KernelChoice,
    ky: &KernelChoice,
    permutations: usize,
    seed: u64,
) -> Result<DependenceReport> {
    if x.nrows() != y.nrows() {
        return Err(Error::data(format!(
            "blocks disagree on rows: {} vs {}",
            x.nrows(),
            y.nrows()
        )));
    }
    let sx = kx.resolve(x)?;
    let sy = ky.resolve(y)?;
    let gx = sx.gram(x, x)?;
    let gy = sy.gram(y, y)?;
    let (kxc, _) = center_train(&gx)?;
    let (kyc, _) = center_train(&gy)?;
    let statistic = hsic_of_centered(&kxc, &kyc)?;
    let l = x.nrows();
    let lf = l as f64;
    let tx: f64 = kxc.diag().sum();
    let ty: f64 = kyc.diag().sum();
    let null_mean = tx * ty / ((lf - 1.0) * (lf - 1.0) * (lf - 1.0));
    let p_value = if permutations > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..l).collect();
        let mut exceed = 0usize;
        let denom = ((lf - 1.0) * (lf - 1.0)) as f64;
        for _ in 0..permutations {
            perm.shuffle(&mut rng);
            // Double-centering commutes with simultaneous row/column
            // permutation, so permuting the centered Gram is exact.
            let mut s = 0.0;
            for i in 0..l {
                let pi = perm[i];
                for j in 0..l {
                    s += kxc[(i, j)] * kyc[(pi, perm[j])];
                }
            }
            if s / denom >= statistic {
                exceed += 1;
            }
        }
        Some((exceed as f64 + 1.0) / (permutations as f64 + 1.0))
    } else {
        None
    };
    Ok(DependenceReport {
        statistic,
        null_mean,
        p_value,
        permutations,
        n_rows: l,
    })
}

/// Options for the sequential dependence-maximizing extractor.
#[derive(Debug, Clone)]
pub struct HscaOptions {
    pub n_features: usize,
    pub standardize_x: bool,
    pub standardize_y: bool,
    /// Kernel applied to the target block (linear reproduces the
    /// predictive kernel method on its first direction).
    pub y_kernel: KernelChoice,
    /// Weight of the variance term mixed into the decorrelation
    /// constraint from the second direction on; keeps the constraint
    /// block invertible without disturbing the maximizer.
    pub epsilon: f64,
    pub solver: SolverConfig,
}

impl HscaOptions {
    pub fn new(n_features: usize) -> Self {
        HscaOptions {
            n_features,
            standardize_x: true,
            standardize_y: false,
            y_kernel: KernelChoice::Linear,
            epsilon: 1e-8,
            solver: SolverConfig::default(),
        }
    }
}

/// Sequential dependence-maximizing extractor. Direction j maximizes
/// the dependence between its kernel feature and the targets, subject
/// to unit feature variance (first direction) or decorrelation with the
/// features extracted before it (later directions). Every stored dual
/// vector is rescaled to unit feature variance so the per-direction
/// values stay comparable.
#[derive(Debug, Clone)]
pub struct HscaModel {
    pub kernel: KernelSpec,
    pub train_x: Array2<f64>,
    /// Dual coefficients, l x nf.
    pub a: Array2<f64>,
    /// Per-direction dependence value at unit feature variance.
    pub eigenvalues: Array1<f64>,
    pub gram_centering: GramCentering,
    pub x_stats: CenteringStats,
    pub truncated: bool,
}

impl HscaModel {
    pub fn fit(
        x: &ArrayView2<f64>,
        y: &ArrayView2<f64>,
        x_kernel: &KernelChoice,
        opts: &HscaOptions,
    ) -> Result<HscaModel> {
        if opts.n_features == 0 {
            return Err(Error::invalid(
                "the number of extracted features must be at least 1",
            ));
        }
        if x.nrows() != y.nrows() {
            return Err(Error::data(format!(
                "input and target blocks disagree on rows: {} vs {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.nrows() < 3 {
            return Err(Error::data("dependence extraction needs at least three rows"));
        }
        if !(opts.epsilon > 0.0) {
            return Err(Error::invalid("the constraint mixing weight must be positive"));
        }
        let (xp, x_stats) = center_fit_apply(x, opts.standardize_x)?;
        let (yp, _) = center_fit_apply(y, opts.standardize_y)?;
        let spec = x_kernel.resolve(&xp.view())?;
        let k_raw = spec.gram(&xp.view(), &xp.view())?;
        let (kc, gram_centering) = center_train(&k_raw)?;
        let y_spec = opts.y_kernel.resolve(&yp.view())?;
        let ky_raw = y_spec.gram(&yp.view(), &yp.view())?;
        let (kyc, _) = center_train(&ky_raw)?;

        let l = kc.nrows();
        let lf = l as f64;
        let cap = l - 1;
        let mut truncated = false;
        let nf = if opts.n_features > cap {
            log::warn!(
                "dependence extractor: requested {} features but at most {cap} \
                 are available; capping",
                opts.n_features
            );
            truncated = true;
            cap
        } else {
            opts.n_features
        };

        // Fixed numerator block (1/l^2) K Ky K.
        let mut amat = kc.dot(&kyc).dot(&kc) / (lf * lf);
        symmetrize(&mut amat);
        // Pure variance block (1/l) K^2.
        let mut ksq = kc.dot(&kc) / lf;
        symmetrize(&mut ksq);
        let tr_ksq: f64 = ksq.diag().sum();

        let mut a = Array2::<f64>::zeros((l, nf));
        let mut values = Vec::with_capacity(nf);
        let mut features: Vec<Array1<f64>> = Vec::with_capacity(nf);
        let mut extracted = 0;
        // Later constraint blocks mix a tiny variance term under a large
        // decorrelation term; a looser whitening cutoff would discard the
        // very subspace the next direction must live in.
        let mut later_solver = opts.solver.clone();
        later_solver.rank_tol = later_solver.rank_tol.min(1e-13);
        for j in 0..nf {
            let b = if features.is_empty() {
                ksq.clone()
            } else {
                // Decorrelation block (1/l) K F F' K over the extracted
                // features, kept invertible by a scaled variance term.
                let mut bf = Array2::<f64>::zeros((l, l));
                for f in &features {
                    let kf = kc.dot(f);
                    for r in 0..l {
                        for c in 0..l {
                            bf[(r, c)] += kf[r] * kf[c];
                        }
                    }
                }
                bf /= lf;
                let tr_bf: f64 = bf.diag().sum();
                let kappa = (tr_bf / tr_ksq.max(f64::MIN_POSITIVE)).max(f64::MIN_POSITIVE);
                bf.scaled_add(opts.epsilon * kappa, &ksq);
                symmetrize(&mut bf);
                bf
            };
            let solver = if features.is_empty() {
                &opts.solver
            } else {
                &later_solver
            };
            let eig = eig_gen(&amat, &b, 1, solver)?;
            if eig.is_empty() || eig.values[0] <= 0.0 {
                truncated = true;
                break;
            }
            let mut alpha = eig.vectors.column(0).to_owned();
            // Rescale to unit feature variance so stored values compare
            // across directions regardless of which constraint was active.
            let var = alpha.dot(&ksq.dot(&alpha));
            if var <= f64::MIN_POSITIVE {
                truncated = true;
                break;
            }
            alpha /= var.sqrt();
            let value = alpha.dot(&amat.dot(&alpha));
            if extracted > 0 {
                let lead = values[0];
                if value <= opts.solver.rank_tol * lead {
                    truncated = true;
                    break;
                }
            }
            let f = kc.dot(&alpha);
            a.column_mut(j).assign(&alpha);
            values.push(value);
            features.push(f);
            extracted += 1;
        }
        if extracted == 0 {
            return Err(Error::numerical(
                "no dependence structure between the kernel map and targets",
            ));
        }
        Ok(HscaModel {
            kernel: spec,
            train_x: xp,
            a: a.slice(ndarray::s![.., ..extracted]).to_owned(),
            eigenvalues: Array1::from(values),
            gram_centering,
            x_stats,
            truncated: truncated || extracted < nf,
        })
    }

    pub fn n_features(&self) -> usize {
        self.a.ncols()
    }

    pub fn transform(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.train_x.ncols() {
            return Err(Error::data(format!(
                "model expects {} input columns, got {}",
                self.train_x.ncols(),
                x.ncols()
            )));
        }
        let xp = self.x_stats.apply(x)?;
        let k_test = self.kernel.gram(&xp.view(), &self.train_x.view())?;
        let kc = center_test(&k_test, &self.gram_centering)?;
        Ok(kc.dot(&self.a))
    }
}

/// Options for the generalized-variance dependence measure.
#[derive(Debug, Clone)]
pub struct KgvOptions {
    /// Mixing weight in the per-view constraint theta K^2 +
    /// eta (1 - theta) K. At 1 the spectrum is the kernelized canonical
    /// correlation between the views; below 1 the eta term regularizes.
    pub theta: f64,
    pub eta: f64,
    /// Directions entering the aggregate; `None` means every direction
    /// the constraint rank supports.
    pub n_directions: Option<usize>,
    pub standardize_x: bool,
    pub standardize_y: bool,
    pub solver: SolverConfig,
}

impl Default for KgvOptions {
    fn default() -> Self {
        KgvOptions {
            theta: 1.0,
            eta: 0.0,
            n_directions: None,
            standardize_x: true,
            standardize_y: false,
            solver: SolverConfig::default(),
        }
    }
}

/// Spectrum and aggregate of the generalized-variance measure.
#[derive(Debug, Clone, Serialize)]
pub struct KgvReport {
    /// Regularized canonical correlations between the views, descending,
    /// clipped away from 1 so the aggregate stays finite.
    pub correlations: Vec<f64>,
    /// -1/2 sum log(1 - rho_i^2), non-negative and zero only for fully
    /// uncorrelated views.
    pub value: f64,
}

const KGV_CLIP: f64 = 1.0 - 1e-9;

/// Generalized-variance dependence between two kernel views of paired
/// samples.
pub fn kgv(
    x: &ArrayView2<f64>,
    y: &ArrayView2<f64>,
    kx: &KernelChoice,
    ky: &KernelChoice,
    opts: &KgvOptions,
) -> Result<KgvReport> {
    if x.nrows() != y.nrows() {
        return Err(Error::data(format!(
            "blocks disagree on rows: {} vs {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.nrows() < 3 {
        return Err(Error::data("the dependence measure needs at least three rows"));
    }
    if !(0.0 < opts.theta && opts.theta <= 1.0) {
        return Err(Error::invalid(format!(
            "the mixing weight must lie in (0, 1], got {}",
            opts.theta
        )));
    }
    if opts.eta < 0.0 {
        return Err(Error::invalid("the regularizer must be non-negative"));
    }
    let (xp, _) = center_fit_apply(x, opts.standardize_x)?;
    let (yp, _) = center_fit_apply(y, opts.standardize_y)?;
    let sx = kx.resolve(&xp.view())?;
    let sy = ky.resolve(&yp.view())?;
    let (kxc, _) = center_train(&sx.gram(&xp.view(), &xp.view())?)?;
    let (kyc, _) = center_train(&sy.gram(&yp.view(), &yp.view())?)?;
    let l = kxc.nrows();
    let bx = constraint_block(&kxc, opts.theta, opts.eta);
    let by = constraint_block(&kyc, opts.theta, opts.eta);
    // Half-problem on the x side: eliminate the y-view direction to get
    // (Kx Ky) By^{-1} (Ky Kx) a = rho^2 Bx a.
    let g = kyc.dot(&kxc);
    let w = solve_spd(&by, 0.0, &g)?;
    let mut amat = g.t().dot(&w);
    symmetrize(&mut amat);
    let nf = opts.n_directions.unwrap_or(l.saturating_sub(1)).max(1);
    let eig = eig_gen(&amat, &bx, nf.min(l), &opts.solver)?;
    if eig.is_empty() {
        return Err(Error::numerical(
            "the view constraints have no usable spectrum",
        ));
    }
    let mut correlations = Vec::with_capacity(eig.len());
    for lam in eig.values.iter() {
        let rho2 = lam.clamp(0.0, KGV_CLIP);
        correlations.push(rho2.sqrt());
    }
    let value: f64 = correlations
        .iter()
        .map(|r| -0.5 * (1.0 - r * r).ln())
        .sum();
    Ok(KgvReport {
        correlations,
        value,
    })
}

fn constraint_block(kc: &Array2<f64>, theta: f64, eta: f64) -> Array2<f64> {
    let mut b = kc.dot(kc) * theta;
    let ridge = eta * (1.0 - theta);
    if ridge != 0.0 {
        b.scaled_add(ridge, kc);
    }
    symmetrize(&mut b);
    b
}

fn symmetrize(m: &mut Array2<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
