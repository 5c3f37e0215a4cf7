//! Kernelized feature extraction. Each method restates its linear
//! counterpart over a centered training Gram so the extracted directions
//! live in the span of the mapped training points; models keep the dual
//! coefficients plus everything needed to evaluate and center kernels
//! against new data.
//!
//! Scaling conventions, with l the training size, centered Gram K and
//! centered targets Y:
//!
//! * variance method — eigenpairs of K; dual vectors are scaled
//!   eigenvectors with a' K a = 1; stored values are Gram eigenvalues
//!   (l times the feature-space variances);
//! * covariance method — per direction, the generalized problem
//!   ((1/l^2) K Y Y' K) a = lambda K a followed by score deflation of
//!   both blocks; stored values are sqrt(lambda), the feature-space
//!   cross-covariance singular values;
//! * correlation method — ((1/l^2) K Y (Cy + (eta/l) I)^{-1} Y' K) a =
//!   lambda ((K^2 + eta K)/l) a; stored values are sqrt(lambda), the
//!   canonical correlations;
//! * predictive method — ((1/l^2) K Y Y' K) a = lambda ((K^2 + eta K)/l) a;
//!   stored values are the generalized eigenvalues, identical to the
//!   linear variant under a linear kernel.

use crate::data::{center_fit_apply, CenteringStats};
use crate::error::{Error, Result};
use crate::kernel::{center_test, center_train, GramCentering, KernelChoice, KernelSpec};
use crate::linalg::{eig_gen, eig_sym, solve_spd, SolverConfig};
use crate::linear::scaled_cov;
use ndarray::{Array1, Array2, ArrayView2};

/// Which dual eigenproblem to pose over the centered training Gram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum KernelMethod {
    /// Kernelized maximal-variance directions.
    KPca,
    /// Kernelized maximal-covariance directions with score deflation.
    KPls2,
    /// Kernelized maximal-correlation direction pairs.
    KCca,
    /// Kernelized predictive directions for least-squares target fits.
    KOpls,
}

impl KernelMethod {
    pub fn name(&self) -> &'static str {
        match self {
            KernelMethod::KPca => "kpca",
            KernelMethod::KPls2 => "kpls2",
            KernelMethod::KCca => "kcca",
            KernelMethod::KOpls => "kopls",
        }
    }

    /// Inverse of [`name`](Self::name), case-insensitive.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "kpca" => Some(KernelMethod::KPca),
            "kpls2" | "kpls" => Some(KernelMethod::KPls2),
            "kcca" => Some(KernelMethod::KCca),
            "kopls" => Some(KernelMethod::KOpls),
            _ => None,
        }
    }

    pub fn supervised(&self) -> bool {
        !matches!(self, KernelMethod::KPca)
    }

    /// Upper bound on extractable features for l training rows and m
    /// target columns.
    pub fn max_features(&self, l: usize, m: usize) -> usize {
        match self {
            KernelMethod::KPca | KernelMethod::KPls2 => l.saturating_sub(1).max(1),
            KernelMethod::KCca | KernelMethod::KOpls => m.min(l.saturating_sub(1)).max(1),
        }
    }
}

/// Options shared by all kernel fits.
#[derive(Debug, Clone)]
pub struct KernelFitOptions {
    pub n_features: usize,
    pub standardize_x: bool,
    pub standardize_y: bool,
    /// Gram regularizer for the correlation and predictive variants:
    /// the constraint becomes (K^2 + eta K)/l and the target covariance
    /// gains eta/l on its diagonal. Zero relies on rank truncation.
    pub eta: f64,
    pub solver: SolverConfig,
}

impl KernelFitOptions {
    pub fn new(n_features: usize) -> Self {
        KernelFitOptions {
            n_features,
            standardize_x: true,
            standardize_y: false,
            eta: 0.0,
            solver: SolverConfig::default(),
        }
    }
}

impl Default for KernelFitOptions {
    fn default() -> Self {
        KernelFitOptions::new(1)
    }
}

/// A fitted kernel feature extractor.
#[derive(Debug, Clone)]
pub struct KernelModel {
    pub method: KernelMethod,
    pub kernel: KernelSpec,
    /// Preprocessed training inputs retained for kernel evaluations
    /// against new data.
    pub train_x: Array2<f64>,
    /// Dual coefficients, l x nf; new features are centered test Grams
    /// times this block.
    pub a: Array2<f64>,
    /// Target-side directions, m x nf, for the supervised methods.
    pub v: Option<Array2<f64>>,
    /// Per-direction value; see the module docs for the meaning per
    /// method.
    pub eigenvalues: Array1<f64>,
    pub gram_centering: GramCentering,
    pub x_stats: CenteringStats,
    pub y_stats: Option<CenteringStats>,
    pub eta: f64,
    pub truncated: bool,
}

impl KernelModel {
    /// Fit the requested method. `y` is required except for the
    /// unsupervised variance method.
    pub fn fit(
        method: KernelMethod,
        x: &ArrayView2<f64>,
        y: Option<&ArrayView2<f64>>,
        choice: &KernelChoice,
        opts: &KernelFitOptions,
    ) -> Result<KernelModel> {
        if opts.n_features == 0 {
            return Err(Error::invalid(
                "the number of extracted features must be at least 1",
            ));
        }
        if x.nrows() < 2 {
            return Err(Error::data(
                "fitting needs at least two rows to center a Gram",
            ));
        }
        if opts.eta < 0.0 {
            return Err(Error::invalid("the Gram regularizer must be non-negative"));
        }
        let (xp, x_stats) = center_fit_apply(x, opts.standardize_x)?;
        let prepared_y = match (method.supervised(), y) {
            (false, _) => None,
            (true, None) => {
                return Err(Error::invalid(format!(
                    "{} needs a target block",
                    method.name()
                )))
            }
            (true, Some(y)) => {
                if y.nrows() != x.nrows() {
                    return Err(Error::data(format!(
                        "input and target blocks disagree on rows: {} vs {}",
                        x.nrows(),
                        y.nrows()
                    )));
                }
                if y.ncols() == 0 {
                    return Err(Error::data("target block has no columns"));
                }
                Some(center_fit_apply(y, opts.standardize_y)?)
            }
        };
        let spec = choice.resolve(&xp.view())?;
        KernelModel::fit_resolved(method, spec, xp, x_stats, prepared_y, opts)
    }

    /// Fit with an already-resolved kernel on preprocessed inputs. This
    /// is the seam the semisupervised routes use to supply a kernel
    /// trained on more rows than the supervised fit sees.
    pub(crate) fn fit_resolved(
        method: KernelMethod,
        spec: KernelSpec,
        xp: Array2<f64>,
        x_stats: CenteringStats,
        prepared_y: Option<(Array2<f64>, CenteringStats)>,
        opts: &KernelFitOptions,
    ) -> Result<KernelModel> {
        let k_raw = spec.gram(&xp.view(), &xp.view())?;
        let (kc, gram_centering) = center_train(&k_raw)?;

        let l = kc.nrows();
        let m = prepared_y.as_ref().map(|(yc, _)| yc.ncols()).unwrap_or(0);
        let cap = method.max_features(l, m);
        let mut truncated = false;
        let nf = if opts.n_features > cap {
            log::warn!(
                "{}: requested {} features but the data supports at most {cap}; capping",
                method.name(),
                opts.n_features
            );
            truncated = true;
            cap
        } else {
            opts.n_features
        };

        let fitted = match method {
            KernelMethod::KPca => fit_dual_variance(&kc, nf, &opts.solver)?,
            KernelMethod::KPls2 => {
                let (yc, _) = prepared_y.as_ref().unwrap();
                fit_dual_covariance(&kc, yc, nf, &opts.solver)?
            }
            KernelMethod::KCca => {
                let (yc, _) = prepared_y.as_ref().unwrap();
                fit_dual_correlation(&kc, yc, nf, opts.eta, &opts.solver)?
            }
            KernelMethod::KOpls => {
                let (yc, _) = prepared_y.as_ref().unwrap();
                fit_dual_predictive(&kc, yc, nf, opts.eta, &opts.solver)?
            }
        };
        Ok(KernelModel {
            method,
            kernel: spec,
            train_x: xp,
            a: fitted.a,
            v: fitted.v,
            eigenvalues: fitted.values,
            gram_centering,
            x_stats,
            y_stats: prepared_y.map(|(_, s)| s),
            eta: opts.eta,
            truncated: truncated || fitted.truncated,
        })
    }

    pub fn n_features(&self) -> usize {
        self.a.ncols()
    }

    pub fn n_train(&self) -> usize {
        self.train_x.nrows()
    }

    /// Project new rows: evaluate the kernel against the training block,
    /// center with the stored statistics, and apply the dual
    /// coefficients.
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

    /// Project target rows with the target-side directions, when the
    /// method provides them.
    pub fn target_features(&self, y: &ArrayView2<f64>) -> Result<Array2<f64>> {
        let v = self
            .v
            .as_ref()
            .ok_or_else(|| Error::model("this model has no target-side directions"))?;
        let stats = self
            .y_stats
            .as_ref()
            .ok_or_else(|| Error::model("this model has no target statistics"))?;
        if y.ncols() != v.nrows() {
            return Err(Error::data(format!(
                "model expects {} target columns, got {}",
                v.nrows(),
                y.ncols()
            )));
        }
        let yc = stats.apply(y)?;
        Ok(yc.dot(v))
    }

    /// Worst deviation of A' K A from the identity over the fitted
    /// directions — the normalization all four methods promise on their
    /// own Gram (the regularized one where eta participates).
    pub fn constraint_residual(&self) -> Result<f64> {
        let k_raw = self.kernel.gram(&self.train_x.view(), &self.train_x.view())?;
        let (kc, _) = center_train(&k_raw)?;
        let l = kc.nrows() as f64;
        let gram = match self.method {
            KernelMethod::KPca | KernelMethod::KPls2 => self.a.t().dot(&kc).dot(&self.a),
            KernelMethod::KCca | KernelMethod::KOpls => {
                let mut b = kc.dot(&kc);
                b.scaled_add(self.eta, &kc);
                b /= l;
                self.a.t().dot(&b).dot(&self.a)
            }
        };
        Ok(crate::linalg::identity_residual(&gram))
    }
}

struct DualFit {
    a: Array2<f64>,
    v: Option<Array2<f64>>,
    values: Array1<f64>,
    truncated: bool,
}

/// Eigenpairs of the centered Gram, rescaled so a' K a = 1. Directions
/// whose eigenvalue has collapsed relative to the leading one are
/// dropped: their dual scaling would blow up on pure noise.
fn fit_dual_variance(kc: &Array2<f64>, nf: usize, solver: &SolverConfig) -> Result<DualFit> {
    let eig = eig_sym(kc, nf, solver)?;
    let lead = eig.values.iter().cloned().fold(0.0f64, f64::max);
    if lead <= 0.0 {
        return Err(Error::numerical(
            "centered Gram has no positive spectrum; the kernel map is constant",
        ));
    }
    let keep = eig
        .values
        .iter()
        .take_while(|v| **v > solver.rank_tol * lead)
        .count()
        .max(1);
    let truncated = eig.truncated || keep < nf;
    let values = eig.values.slice(ndarray::s![..keep]).to_owned();
    let mut a = eig.vectors.slice(ndarray::s![.., ..keep]).to_owned();
    for (j, mut col) in a.columns_mut().into_iter().enumerate() {
        let scale = values[j].sqrt();
        col.mapv_inplace(|z| z / scale);
    }
    Ok(DualFit {
        a,
        v: None,
        values,
        truncated,
    })
}

/// Per-direction generalized problem with score deflation. The composed
/// dual vectors returned already include the deflation projectors, so
/// one centered test Gram times the block yields all features.
fn fit_dual_covariance(
    kc: &Array2<f64>,
    yc: &Array2<f64>,
    nf: usize,
    solver: &SolverConfig,
) -> Result<DualFit> {
    let l = kc.nrows();
    let m = yc.ncols();
    let lf = l as f64;
    let mut kj = kc.clone();
    let mut yj = yc.clone();
    let mut a = Array2::<f64>::zeros((l, nf));
    let mut v = Array2::<f64>::zeros((m, nf));
    let mut sigma = Vec::with_capacity(nf);
    let mut scores: Vec<Array1<f64>> = Vec::with_capacity(nf);
    let mut lead = 0.0f64;
    let mut extracted = 0;
    for j in 0..nf {
        // (1/l^2) K Y Y' K against K.
        let g = kj.dot(&yj) / lf;
        let mut amat = g.dot(&g.t());
        for i in 0..l {
            for jj in (i + 1)..l {
                let avg = 0.5 * (amat[(i, jj)] + amat[(jj, i)]);
                amat[(i, jj)] = avg;
                amat[(jj, i)] = avg;
            }
        }
        let eig = eig_gen(&amat, &kj, 1, solver)?;
        if eig.is_empty() {
            break;
        }
        let lambda = eig.values[0];
        if j == 0 {
            lead = lambda;
        }
        if lambda <= solver.rank_tol * lead.max(f64::MIN_POSITIVE) {
            log::warn!("kpls2: cross-covariance exhausted after {j} directions (requested {nf})");
            break;
        }
        let alpha = eig.vectors.column(0).to_owned();
        let mut t = kj.dot(&alpha);
        let tn = t.dot(&t).sqrt();
        if tn <= f64::MIN_POSITIVE {
            break;
        }
        t /= tn;
        // Target-side direction: unit-norm image of the score under the
        // deflated targets.
        let mut vj = yj.t().dot(&kj.dot(&alpha));
        let vn = vj.dot(&vj).sqrt();
        if vn > f64::MIN_POSITIVE {
            vj /= vn;
        }
        // Compose earlier deflation projectors into the stored dual
        // vector; extracted scores are mutually orthogonal so the
        // projectors commute and stack additively.
        let mut composed = alpha.clone();
        for ti in &scores {
            let c = ti.dot(&alpha);
            composed.scaled_add(-c, ti);
        }
        a.column_mut(j).assign(&composed);
        v.column_mut(j).assign(&vj);
        sigma.push(lambda.max(0.0).sqrt());
        // Deflate the Gram on both sides against t: first the rows
        // (K <- K - t t' K), then the columns of the updated block
        // (K <- K - K t t'), which together give (I - tt') K (I - tt').
        let tk = t.dot(&kj);
        for (i, &ti) in t.iter().enumerate() {
            for c in 0..l {
                kj[(i, c)] -= ti * tk[c];
            }
        }
        let kt = kj.dot(&t);
        for c_idx in 0..l {
            let tc = t[c_idx];
            if tc == 0.0 {
                continue;
            }
            for r in 0..l {
                kj[(r, c_idx)] -= kt[r] * tc;
            }
        }
        let ty = t.dot(&yj);
        for (i, &ti) in t.iter().enumerate() {
            for c in 0..m {
                yj[(i, c)] -= ti * ty[c];
            }
        }
        scores.push(t);
        extracted += 1;
    }
    if extracted == 0 {
        return Err(Error::numerical(
            "no covariance structure between the kernel map and targets",
        ));
    }
    Ok(DualFit {
        a: a.slice(ndarray::s![.., ..extracted]).to_owned(),
        v: Some(v.slice(ndarray::s![.., ..extracted]).to_owned()),
        values: Array1::from(sigma),
        truncated: extracted < nf,
    })
}

/// Regularized constraint block (K^2 + eta K)/l shared by the
/// correlation and predictive variants.
fn regularized_gram_sq(kc: &Array2<f64>, eta: f64) -> Array2<f64> {
    let l = kc.nrows() as f64;
    let mut b = kc.dot(kc);
    if eta != 0.0 {
        b.scaled_add(eta, kc);
    }
    b /= l;
    // Exact symmetry for the solver.
    let n = b.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (b[(i, j)] + b[(j, i)]);
            b[(i, j)] = avg;
            b[(j, i)] = avg;
        }
    }
    b
}

fn trim_collapsed(
    values: Array1<f64>,
    vectors: Array2<f64>,
    rank_tol: f64,
) -> (Array1<f64>, Array2<f64>, bool) {
    let lead = values.iter().cloned().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if lead <= 0.0 {
        return (values, vectors, false);
    }
    let keep = values
        .iter()
        .take_while(|v| v.abs() > rank_tol * lead)
        .count()
        .max(1);
    if keep == values.len() {
        (values, vectors, false)
    } else {
        (
            values.slice(ndarray::s![..keep]).to_owned(),
            vectors.slice(ndarray::s![.., ..keep]).to_owned(),
            true,
        )
    }
}

fn fit_dual_correlation(
    kc: &Array2<f64>,
    yc: &Array2<f64>,
    nf: usize,
    eta: f64,
    solver: &SolverConfig,
) -> Result<DualFit> {
    let l = kc.nrows();
    let lf = l as f64;
    let m = yc.ncols();
    // Regularized target covariance Cy + (eta/l) I.
    let cy = {
        let mut c = scaled_cov(yc, yc);
        if eta != 0.0 {
            for i in 0..m {
                c[(i, i)] += eta / lf;
            }
        }
        c
    };
    // G = (1/l) K Y, A = G Cy^{-1} G'.
    let g = kc.dot(yc) / lf;
    let cy_inv_gt = solve_spd(&cy, 0.0, &g.t().to_owned())?;
    let mut amat = g.dot(&cy_inv_gt);
    for i in 0..l {
        for j in (i + 1)..l {
            let avg = 0.5 * (amat[(i, j)] + amat[(j, i)]);
            amat[(i, j)] = avg;
            amat[(j, i)] = avg;
        }
    }
    let b = regularized_gram_sq(kc, eta);
    let eig = eig_gen(&amat, &b, nf, solver)?;
    if eig.is_empty() {
        return Err(Error::numerical(
            "regularized Gram constraint has no usable spectrum",
        ));
    }
    let (lam, a, trimmed) = trim_collapsed(eig.values, eig.vectors, solver.rank_tol);
    let corrs = lam.mapv(|v| v.max(0.0).sqrt());
    for r in corrs.iter() {
        if *r > 1.0 + 1e-6 {
            log::warn!(
                "kernel correlation estimate {r} exceeds 1; increase the regularizer"
            );
        }
    }
    // Target-side directions: v_j = Cy^{-1} (1/l) Y' K a_j / rho_j.
    let mut v = cy_inv_gt.dot(&a);
    for (j, mut col) in v.columns_mut().into_iter().enumerate() {
        let rho = corrs[j].max(f64::MIN_POSITIVE);
        col.mapv_inplace(|z| z / rho);
    }
    Ok(DualFit {
        a,
        v: Some(v),
        values: corrs,
        truncated: eig.truncated || trimmed,
    })
}

fn fit_dual_predictive(
    kc: &Array2<f64>,
    yc: &Array2<f64>,
    nf: usize,
    eta: f64,
    solver: &SolverConfig,
) -> Result<DualFit> {
    let l = kc.nrows();
    let lf = l as f64;
    let g = kc.dot(yc) / lf;
    let mut amat = g.dot(&g.t());
    for i in 0..l {
        for j in (i + 1)..l {
            let avg = 0.5 * (amat[(i, j)] + amat[(j, i)]);
            amat[(i, j)] = avg;
            amat[(j, i)] = avg;
        }
    }
    let b = regularized_gram_sq(kc, eta);
    let eig = eig_gen(&amat, &b, nf, solver)?;
    if eig.is_empty() {
        return Err(Error::numerical(
            "regularized Gram constraint has no usable spectrum",
        ));
    }
    let (lam, a, trimmed) = trim_collapsed(eig.values, eig.vectors, solver.rank_tol);
    // Target-side loadings: unit-norm images (1/l) Y' K a_j.
    let mut v = g.t().dot(&a);
    for mut col in v.columns_mut() {
        let n = col.dot(&col).sqrt();
        if n > f64::MIN_POSITIVE {
            col.mapv_inplace(|z| z / n);
        }
    }
    Ok(DualFit {
        a,
        v: Some(v),
        values: lam,
        truncated: eig.truncated || trimmed,
    })
}
