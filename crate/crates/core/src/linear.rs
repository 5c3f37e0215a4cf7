//! Linear multivariate feature extraction. Four methods share one model
//! shape and differ only in the (generalized) eigenproblem they pose over
//! the training covariances:
//!
//! * principal components — directions of maximal input variance,
//! * two-block partial least squares — directions of maximal input/target
//!   covariance, extracted one at a time with score deflation,
//! * canonical correlation — input/target direction pairs of maximal
//!   correlation,
//! * orthonormalized partial least squares — input directions that retain
//!   everything useful for least-squares prediction of the targets.
//!
//! All methods operate on column-centered (optionally standardized) data;
//! covariances carry a 1/l factor.

use crate::data::{center_fit_apply, CenteringStats};
use crate::error::{Error, Result};
use crate::linalg::{eig_gen, eig_sym, solve_spd, SolverConfig};
use ndarray::{Array1, Array2, ArrayView2};

/// Which eigenproblem to pose over the training covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LinearMethod {
    /// Maximal-variance directions: eigenvectors of the input covariance.
    Pca,
    /// Maximal-covariance direction pairs with score deflation; the
    /// per-direction value is the leading singular value of the deflated
    /// cross-covariance.
    Pls2,
    /// Maximal-correlation direction pairs; the per-direction value is
    /// the canonical correlation in [0, 1].
    Cca,
    /// Directions that preserve least-squares predictive power; the
    /// per-direction value is the generalized eigenvalue.
    Opls,
}

impl LinearMethod {
    pub fn name(&self) -> &'static str {
        match self {
            LinearMethod::Pca => "pca",
            LinearMethod::Pls2 => "pls2",
            LinearMethod::Cca => "cca",
            LinearMethod::Opls => "opls",
        }
    }

    /// Inverse of [`name`](Self::name), case-insensitive.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "pca" => Some(LinearMethod::Pca),
            "pls2" | "pls" => Some(LinearMethod::Pls2),
            "cca" => Some(LinearMethod::Cca),
            "opls" => Some(LinearMethod::Opls),
            _ => None,
        }
    }

    /// Whether the method consumes a target block.
    pub fn supervised(&self) -> bool {
        !matches!(self, LinearMethod::Pca)
    }

    /// Upper bound on extractable features for the given shapes.
    pub fn max_features(&self, d: usize, m: usize, l: usize) -> usize {
        match self {
            LinearMethod::Pca => d,
            LinearMethod::Pls2 => d.min(l.saturating_sub(1)).max(1),
            LinearMethod::Cca | LinearMethod::Opls => d.min(m),
        }
    }
}

/// Options shared by all linear fits.
#[derive(Debug, Clone)]
pub struct LinearFitOptions {
    /// Number of extracted features requested; silently capped at the
    /// method's maximum for the data shape (the `truncated` flag records
    /// any reduction).
    pub n_features: usize,
    /// Standardize inputs to unit sample variance after centering.
    pub standardize_x: bool,
    /// Standardize targets likewise (off by default: class indicators
    /// and regression targets usually carry meaningful scale).
    pub standardize_y: bool,
    /// Diagonal loading added to the input covariance in the constraint
    /// of the generalized problems (correlation and orthonormalized
    /// variants); zero relies on rank truncation instead.
    pub ridge: f64,
    pub solver: SolverConfig,
}

impl LinearFitOptions {
    pub fn new(n_features: usize) -> Self {
        LinearFitOptions {
            n_features,
            standardize_x: true,
            standardize_y: false,
            ridge: 0.0,
            solver: SolverConfig::default(),
        }
    }
}

impl Default for LinearFitOptions {
    fn default() -> Self {
        LinearFitOptions::new(1)
    }
}

/// A fitted linear feature extractor.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub method: LinearMethod,
    /// Input-side projection, d x nf, applied to centered inputs.
    pub u: Array2<f64>,
    /// Target-side directions, m x nf, for the supervised methods.
    pub v: Option<Array2<f64>>,
    /// Per-direction value; meaning depends on the method (variance,
    /// singular value, correlation, or generalized eigenvalue).
    pub eigenvalues: Array1<f64>,
    pub x_stats: CenteringStats,
    pub y_stats: Option<CenteringStats>,
    /// True when fewer features than requested were extractable.
    pub truncated: bool,
}

/// Scaled product a' b / l of two aligned sample blocks.
pub(crate) fn scaled_cov(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let l = a.nrows() as f64;
    a.t().dot(b) / l
}

fn validate_xy(x: &ArrayView2<f64>, y: Option<&ArrayView2<f64>>, nf: usize) -> Result<()> {
    if x.nrows() < 2 {
        return Err(Error::data(
            "fitting needs at least two rows to form a covariance",
        ));
    }
    if x.ncols() == 0 {
        return Err(Error::data("input block has no columns"));
    }
    if nf == 0 {
        return Err(Error::invalid("the number of extracted features must be at least 1"));
    }
    if let Some(y) = y {
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
    }
    Ok(())
}

fn cap_features(method: LinearMethod, nf: usize, d: usize, m: usize, l: usize) -> (usize, bool) {
    let cap = method.max_features(d, m, l);
    if nf > cap {
        log::warn!(
            "{}: requested {nf} features but the data supports at most {cap}; capping",
            method.name()
        );
        (cap, true)
    } else {
        (nf, false)
    }
}

/// Drop trailing directions whose eigenvalue has collapsed relative to
/// the leading one; beyond the problem's rank the directions are
/// arbitrary and carry no signal.
fn trim_rank(
    values: Array1<f64>,
    vectors: Array2<f64>,
    rank_tol: f64,
) -> (Array1<f64>, Array2<f64>, bool) {
    let lead = values.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
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
        let vals = values.slice(ndarray::s![..keep]).to_owned();
        let vecs = vectors.slice(ndarray::s![.., ..keep]).to_owned();
        (vals, vecs, true)
    }
}

impl LinearModel {
    /// Dispatch on the method; `y` is required except for the
    /// unsupervised variance method.
    pub fn fit(
        method: LinearMethod,
        x: &ArrayView2<f64>,
        y: Option<&ArrayView2<f64>>,
        opts: &LinearFitOptions,
    ) -> Result<LinearModel> {
        match (method, y) {
            (LinearMethod::Pca, _) => fit_pca(x, opts),
            (_, None) => Err(Error::invalid(format!(
                "{} needs a target block",
                method.name()
            ))),
            (LinearMethod::Pls2, Some(y)) => fit_pls2(x, y, opts),
            (LinearMethod::Cca, Some(y)) => fit_cca(x, y, opts),
            (LinearMethod::Opls, Some(y)) => fit_opls(x, y, opts),
        }
    }

    pub fn n_features(&self) -> usize {
        self.u.ncols()
    }

    /// Project new rows into the extracted feature space.
    pub fn transform(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.u.nrows() {
            return Err(Error::data(format!(
                "model expects {} input columns, got {}",
                self.u.nrows(),
                x.ncols()
            )));
        }
        let xc = self.x_stats.apply(x)?;
        Ok(xc.dot(&self.u))
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

    /// Largest deviation of the input-side normalization from the
    /// identity: U'U for the variance and covariance methods, U'Cx U
    /// for the correlation and predictive methods (which need the
    /// training block to rebuild the covariance).
    pub fn constraint_residual(&self, x: &ArrayView2<f64>) -> Result<f64> {
        let g = match self.method {
            LinearMethod::Pca | LinearMethod::Pls2 => self.u.t().dot(&self.u),
            LinearMethod::Cca | LinearMethod::Opls => {
                let xc = self.x_stats.apply(x)?;
                let cx = scaled_cov(&xc, &xc);
                self.u.t().dot(&cx).dot(&self.u)
            }
        };
        Ok(crate::linalg::identity_residual(&g))
    }
}

/// Maximal-variance directions of the centered inputs.
pub fn fit_pca(x: &ArrayView2<f64>, opts: &LinearFitOptions) -> Result<LinearModel> {
    validate_xy(x, None, opts.n_features)?;
    let (xc, x_stats) = center_fit_apply(x, opts.standardize_x)?;
    let d = xc.ncols();
    let (nf, capped) = cap_features(LinearMethod::Pca, opts.n_features, d, 0, xc.nrows());
    let cx = scaled_cov(&xc, &xc);
    let eig = eig_sym(&cx, nf, &opts.solver)?;
    Ok(LinearModel {
        method: LinearMethod::Pca,
        u: eig.vectors,
        v: None,
        eigenvalues: eig.values,
        x_stats,
        y_stats: None,
        truncated: capped || eig.truncated,
    })
}

/// Maximal-covariance direction pairs with score deflation. Each round
/// takes the leading singular pair of the current cross-covariance,
/// projects the extracted score out of both blocks, and repeats. The
/// input directions of successive rounds come out orthonormal; the
/// target directions are unit length but not mutually orthogonal.
pub fn fit_pls2(
    x: &ArrayView2<f64>,
    y: &ArrayView2<f64>,
    opts: &LinearFitOptions,
) -> Result<LinearModel> {
    validate_xy(x, Some(y), opts.n_features)?;
    let (xc, x_stats) = center_fit_apply(x, opts.standardize_x)?;
    let (yc, y_stats) = center_fit_apply(y, opts.standardize_y)?;
    let l = xc.nrows();
    let d = xc.ncols();
    let m = yc.ncols();
    let (nf, capped) = cap_features(LinearMethod::Pls2, opts.n_features, d, m, l);

    let mut xj = xc;
    let mut yj = yc;
    let mut u = Array2::<f64>::zeros((d, nf));
    let mut v = Array2::<f64>::zeros((m, nf));
    let mut sigma = Vec::with_capacity(nf);
    let mut lead_sigma = 0.0f64;
    let mut extracted = 0;
    for j in 0..nf {
        let c = scaled_cov(&xj, &yj);
        let (s1, uj, vj) = top_singular_pair(&c, &opts.solver)?;
        if j == 0 {
            lead_sigma = s1;
        }
        if s1 <= opts.solver.rank_tol * lead_sigma.max(f64::MIN_POSITIVE) {
            log::warn!(
                "pls2: cross-covariance exhausted after {j} directions (requested {nf})"
            );
            break;
        }
        let mut t = xj.dot(&uj);
        let tn = t.dot(&t).sqrt();
        if tn <= f64::MIN_POSITIVE {
            break;
        }
        t /= tn;
        // Deflate both blocks against the extracted score.
        let tx = t.dot(&xj);
        let ty = t.dot(&yj);
        for (i, &ti) in t.iter().enumerate() {
            for a in 0..d {
                xj[(i, a)] -= ti * tx[a];
            }
            for b in 0..m {
                yj[(i, b)] -= ti * ty[b];
            }
        }
        u.column_mut(j).assign(&uj);
        v.column_mut(j).assign(&vj);
        sigma.push(s1);
        extracted += 1;
    }
    if extracted == 0 {
        return Err(Error::numerical(
            "no covariance structure between inputs and targets: leading singular value is zero",
        ));
    }
    let truncated = capped || extracted < nf;
    let u = u.slice(ndarray::s![.., ..extracted]).to_owned();
    let v = v.slice(ndarray::s![.., ..extracted]).to_owned();
    Ok(LinearModel {
        method: LinearMethod::Pls2,
        u,
        v: Some(v),
        eigenvalues: Array1::from(sigma),
        x_stats,
        y_stats: Some(y_stats),
        truncated,
    })
}

/// Leading singular triple of a small dense matrix, computed through the
/// symmetric eigenproblem on the smaller Gram side (the iterative
/// bidiagonal route can stall well short of machine precision on
/// rank-deficient inputs). The left vector is sign-fixed
/// (largest-magnitude entry positive, ties to the lowest index) and the
/// right vector aligned so u' C v >= 0.
fn top_singular_pair(
    c: &Array2<f64>,
    cfg: &SolverConfig,
) -> Result<(f64, Array1<f64>, Array1<f64>)> {
    if c.is_empty() {
        return Err(Error::numerical("empty singular spectrum"));
    }
    let (d, m) = c.dim();
    let (sigma, mut u, mut v) = if d <= m {
        let g = c.dot(&c.t());
        let eig = eig_sym(&g, 1, cfg)?;
        let sigma = eig.values[0].max(0.0).sqrt();
        let u = eig.vectors.column(0).to_owned();
        let vr = c.t().dot(&u);
        let vn = vr.dot(&vr).sqrt();
        let v = if vn > f64::MIN_POSITIVE {
            vr.mapv(|z| z / vn)
        } else {
            // Rank-zero block: the caller stops on the zero value.
            Array1::zeros(m)
        };
        (sigma, u, v)
    } else {
        let g = c.t().dot(c);
        let eig = eig_sym(&g, 1, cfg)?;
        let sigma = eig.values[0].max(0.0).sqrt();
        let v = eig.vectors.column(0).to_owned();
        let ur = c.dot(&v);
        let un = ur.dot(&ur).sqrt();
        let u = if un > f64::MIN_POSITIVE {
            ur.mapv(|z| z / un)
        } else {
            Array1::zeros(d)
        };
        (sigma, u, v)
    };
    // Largest-magnitude entry of u positive, ties to the lowest index;
    // flip v alongside to keep the pair intact.
    let mut pivot = 0;
    for (i, val) in u.iter().enumerate() {
        if val.abs() > u[pivot].abs() + 1e-300 {
            pivot = i;
        }
    }
    if u[pivot] < 0.0 {
        u = -u;
        v = -v;
    }
    // Guard the pair orientation directly: the singular value is the
    // bilinear form value and must come out non-negative.
    if u.dot(&c.dot(&v)) < 0.0 {
        v = -v;
    }
    Ok((sigma, u, v))
}

/// Maximal-correlation direction pairs between inputs and targets.
pub fn fit_cca(
    x: &ArrayView2<f64>,
    y: &ArrayView2<f64>,
    opts: &LinearFitOptions,
) -> Result<LinearModel> {
    validate_xy(x, Some(y), opts.n_features)?;
    let (xc, x_stats) = center_fit_apply(x, opts.standardize_x)?;
    let (yc, y_stats) = center_fit_apply(y, opts.standardize_y)?;
    let l = xc.nrows();
    let d = xc.ncols();
    let m = yc.ncols();
    let (nf, capped) = cap_features(LinearMethod::Cca, opts.n_features, d, m, l);
    let cx = ridge_loaded(&scaled_cov(&xc, &xc), opts.ridge);
    let cy = scaled_cov(&yc, &yc);
    let cxy = scaled_cov(&xc, &yc);
    // A = Cxy Cy^{-1} Cxy', constraint B = Cx.
    let cy_inv_cyx = solve_spd(&cy, 0.0, &cxy.t().to_owned())?;
    let mut a = cxy.dot(&cy_inv_cyx);
    symmetrize(&mut a);
    let eig = eig_gen(&a, &cx, nf, &opts.solver)?;
    if eig.is_empty() {
        return Err(Error::numerical(
            "input covariance has no usable spectrum; correlation directions are undefined",
        ));
    }
    let (lam, u, trimmed) = trim_rank(eig.values, eig.vectors, opts.solver.rank_tol);
    // Eigenvalues are squared correlations; clamp tiny negative noise.
    let corrs = lam.mapv(|v| v.max(0.0).sqrt());
    for r in corrs.iter() {
        if *r > 1.0 + 1e-6 {
            log::warn!("cca: correlation estimate {r} exceeds 1; the target covariance is ill-conditioned");
        }
    }
    // Target-side directions: v_j = Cy^{-1} Cxy' u_j / rho_j, which lands
    // on v' Cy v = 1 automatically.
    let mut v = cy_inv_cyx.dot(&u);
    for (j, mut col) in v.columns_mut().into_iter().enumerate() {
        let rho = corrs[j].max(f64::MIN_POSITIVE);
        col.mapv_inplace(|z| z / rho);
    }
    Ok(LinearModel {
        method: LinearMethod::Cca,
        u,
        v: Some(v),
        eigenvalues: corrs,
        x_stats,
        y_stats: Some(y_stats),
        truncated: capped || eig.truncated || trimmed,
    })
}

/// Input directions preserving least-squares predictive power for the
/// targets.
pub fn fit_opls(
    x: &ArrayView2<f64>,
    y: &ArrayView2<f64>,
    opts: &LinearFitOptions,
) -> Result<LinearModel> {
    validate_xy(x, Some(y), opts.n_features)?;
    let (xc, x_stats) = center_fit_apply(x, opts.standardize_x)?;
    let (yc, y_stats) = center_fit_apply(y, opts.standardize_y)?;
    let l = xc.nrows();
    let d = xc.ncols();
    let m = yc.ncols();
    let (nf, capped) = cap_features(LinearMethod::Opls, opts.n_features, d, m, l);
    let cx = ridge_loaded(&scaled_cov(&xc, &xc), opts.ridge);
    let cxy = scaled_cov(&xc, &yc);
    let mut a = cxy.dot(&cxy.t());
    symmetrize(&mut a);
    let eig = eig_gen(&a, &cx, nf, &opts.solver)?;
    if eig.is_empty() {
        return Err(Error::numerical(
            "input covariance has no usable spectrum; predictive directions are undefined",
        ));
    }
    let (lam, u, trimmed) = trim_rank(eig.values, eig.vectors, opts.solver.rank_tol);
    // Target-side loadings: unit-norm images of the input directions
    // under the cross-covariance.
    let mut v = cxy.t().dot(&u);
    for mut col in v.columns_mut() {
        let n = col.dot(&col).sqrt();
        if n > f64::MIN_POSITIVE {
            col.mapv_inplace(|z| z / n);
        }
    }
    Ok(LinearModel {
        method: LinearMethod::Opls,
        u,
        v: Some(v),
        eigenvalues: lam,
        x_stats,
        y_stats: Some(y_stats),
        truncated: capped || eig.truncated || trimmed,
    })
}

fn ridge_loaded(cx: &Array2<f64>, ridge: f64) -> Array2<f64> {
    if ridge == 0.0 {
        return cx.clone();
    }
    let mut out = cx.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += ridge;
    }
    out
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
