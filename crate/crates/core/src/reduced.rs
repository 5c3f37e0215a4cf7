//! Reduced-set kernel feature extraction for large training sets. A
//! random basis of r training rows represents the feature space; kernel
//! blocks against the full training set are streamed in row chunks into
//! r x r and r x m accumulators, so memory stays O(r^2 + r d) and no
//! l x l Gram is ever formed. Centering uses the basis mean on both
//! sides, which coincides with full double-centering when the basis is
//! the whole training set — so at r = l these fits reproduce their dense
//! counterparts exactly.

use crate::data::{center_fit_apply, CenteringStats};
use crate::error::{Error, Result};
use crate::kernel::{center_test, center_train, GramCentering, KernelChoice, KernelSpec};
use crate::linalg::{eig_gen, solve_spd, SolverConfig};
use crate::linear::scaled_cov;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which reduced-set eigenproblem to pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ReducedMethod {
    /// Reduced-set maximal-variance directions.
    RkPca,
    /// Reduced-set maximal-correlation directions.
    RkCca,
    /// Reduced-set predictive directions.
    RkOpls,
}

impl ReducedMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ReducedMethod::RkPca => "rkpca",
            ReducedMethod::RkCca => "rkcca",
            ReducedMethod::RkOpls => "rkopls",
        }
    }

    /// Inverse of [`name`](Self::name), case-insensitive.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "rkpca" => Some(ReducedMethod::RkPca),
            "rkcca" => Some(ReducedMethod::RkCca),
            "rkopls" => Some(ReducedMethod::RkOpls),
            _ => None,
        }
    }

    pub fn supervised(&self) -> bool {
        !matches!(self, ReducedMethod::RkPca)
    }

    pub fn max_features(&self, r: usize, m: usize, l: usize) -> usize {
        let basis_rank = r.saturating_sub(1).min(l.saturating_sub(1)).max(1);
        match self {
            ReducedMethod::RkPca => basis_rank,
            ReducedMethod::RkCca | ReducedMethod::RkOpls => basis_rank.min(m),
        }
    }
}

/// Options for the reduced-set fits.
#[derive(Debug, Clone)]
pub struct ReducedFitOptions {
    pub n_features: usize,
    /// Number of training rows sampled as the kernel basis.
    pub basis_size: usize,
    /// Seed for the basis sample.
    pub seed: u64,
    /// Rows per streamed kernel block.
    pub chunk_rows: usize,
    pub standardize_x: bool,
    pub standardize_y: bool,
    /// Regularizer: the constraint becomes (S + eta K_rr)/l with S the
    /// streamed squared-Gram accumulator and K_rr the centered basis
    /// Gram; the target covariance gains eta/l on its diagonal.
    pub eta: f64,
    pub solver: SolverConfig,
}

impl ReducedFitOptions {
    pub fn new(n_features: usize, basis_size: usize, seed: u64) -> Self {
        ReducedFitOptions {
            n_features,
            basis_size,
            seed,
            chunk_rows: 512,
            standardize_x: true,
            standardize_y: false,
            eta: 0.0,
            solver: SolverConfig::default(),
        }
    }
}

/// A fitted reduced-set feature extractor.
#[derive(Debug, Clone)]
pub struct ReducedSetModel {
    pub method: ReducedMethod,
    pub kernel: KernelSpec,
    /// Preprocessed basis rows, r x d.
    pub basis_x: Array2<f64>,
    /// Positions of the basis rows inside the training block.
    pub basis_indices: Vec<usize>,
    /// Dual coefficients over the basis, r x nf.
    pub a: Array2<f64>,
    /// Target-side directions for the supervised variants.
    pub v: Option<Array2<f64>>,
    pub eigenvalues: Array1<f64>,
    /// Basis-mean centering statistics.
    pub gram_centering: GramCentering,
    pub x_stats: CenteringStats,
    pub y_stats: Option<CenteringStats>,
    pub eta: f64,
    pub truncated: bool,
}

impl ReducedSetModel {
    pub fn n_features(&self) -> usize {
        self.a.ncols()
    }

    pub fn basis_size(&self) -> usize {
        self.basis_x.nrows()
    }

    /// Project new rows: kernel block against the basis, basis-mean
    /// centering, dual coefficients.
    pub fn transform(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.basis_x.ncols() {
            return Err(Error::data(format!(
                "model expects {} input columns, got {}",
                self.basis_x.ncols(),
                x.ncols()
            )));
        }
        let xp = self.x_stats.apply(x)?;
        let k = self.kernel.gram(&xp.view(), &self.basis_x.view())?;
        let kc = center_test(&k, &self.gram_centering)?;
        Ok(kc.dot(&self.a))
    }

    /// Largest deviation of the dual normalization from the identity,
    /// re-streaming the training block in `chunk_rows` slices: A' Krr A
    /// for the variance method, A' ((S + eta Krr)/l) A for the
    /// supervised ones, with S the squared-Gram accumulator.
    pub fn constraint_residual(&self, x: &ArrayView2<f64>, chunk_rows: usize) -> Result<f64> {
        if chunk_rows == 0 {
            return Err(Error::invalid("chunk size must be positive"));
        }
        let xp = self.x_stats.apply(x)?;
        let k_rr_raw = self.kernel.gram(&self.basis_x.view(), &self.basis_x.view())?;
        let (k_rr, _) = center_train(&k_rr_raw)?;
        let metric = match self.method {
            ReducedMethod::RkPca => k_rr,
            ReducedMethod::RkCca | ReducedMethod::RkOpls => {
                let l = xp.nrows();
                let r = self.basis_x.nrows();
                let mut s = Array2::<f64>::zeros((r, r));
                let mut start = 0usize;
                while start < l {
                    let end = (start + chunk_rows).min(l);
                    let chunk = xp.slice(ndarray::s![start..end, ..]);
                    let kc = center_test(
                        &self.kernel.gram(&chunk, &self.basis_x.view())?,
                        &self.gram_centering,
                    )?;
                    s = s + kc.t().dot(&kc);
                    start = end;
                }
                s.scaled_add(self.eta, &k_rr);
                s /= l as f64;
                s
            }
        };
        let g = self.a.t().dot(&metric).dot(&self.a);
        Ok(crate::linalg::identity_residual(&g))
    }
}

/// Fit a reduced-set model. `y` is required except for the variance
/// method.
pub fn fit_reduced(
    method: ReducedMethod,
    x: &ArrayView2<f64>,
    y: Option<&ArrayView2<f64>>,
    choice: &KernelChoice,
    opts: &ReducedFitOptions,
) -> Result<ReducedSetModel> {
    let l = x.nrows();
    let r = opts.basis_size;
    if opts.n_features == 0 {
        return Err(Error::invalid(
            "the number of extracted features must be at least 1",
        ));
    }
    if l < 2 {
        return Err(Error::data("fitting needs at least two rows"));
    }
    if r < 2 || r > l {
        return Err(Error::invalid(format!(
            "basis size must satisfy 2 <= r <= {l} (training rows), got {r}"
        )));
    }
    if opts.chunk_rows == 0 {
        return Err(Error::invalid("chunk size must be positive"));
    }
    if opts.eta < 0.0 {
        return Err(Error::invalid("the regularizer must be non-negative"));
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
            if y.nrows() != l {
                return Err(Error::data(format!(
                    "input and target blocks disagree on rows: {l} vs {}",
                    y.nrows()
                )));
            }
            if y.ncols() == 0 {
                return Err(Error::data("target block has no columns"));
            }
            Some(center_fit_apply(y, opts.standardize_y)?)
        }
    };
    let m = prepared_y.as_ref().map(|(yc, _)| yc.ncols()).unwrap_or(0);

    // Sample the basis without replacement; sorted for reproducible
    // slicing. Asking for the whole set keeps every row.
    let basis_indices: Vec<usize> = if r == l {
        (0..l).collect()
    } else {
        let mut idx: Vec<usize> = (0..l).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        idx.shuffle(&mut rng);
        idx.truncate(r);
        idx.sort_unstable();
        idx
    };
    let basis_x = xp.select(Axis(0), &basis_indices);

    // Kernel parameters resolve against the basis so resolution also
    // stays O(r^2).
    let spec = choice.resolve(&basis_x.view())?;
    let k_rr_raw = spec.gram(&basis_x.view(), &basis_x.view())?;
    let (k_rr, gram_centering) = center_train(&k_rr_raw)?;

    // Stream the training set through the basis in chunks.
    let mut s_kk = Array2::<f64>::zeros((r, r));
    let mut s_ky = if m > 0 {
        Some(Array2::<f64>::zeros((r, m)))
    } else {
        None
    };
    let mut start = 0usize;
    while start < l {
        let end = (start + opts.chunk_rows).min(l);
        let chunk = xp.slice(ndarray::s![start..end, ..]);
        let kc = center_test(&spec.gram(&chunk, &basis_x.view())?, &gram_centering)?;
        s_kk = s_kk + kc.t().dot(&kc);
        if let (Some(s_ky), Some((yc, _))) = (s_ky.as_mut(), prepared_y.as_ref()) {
            let ychunk = yc.slice(ndarray::s![start..end, ..]);
            *s_ky = &*s_ky + &kc.t().dot(&ychunk);
        }
        start = end;
    }
    symmetrize(&mut s_kk);

    let cap = method.max_features(r, m, l);
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

    let lf = l as f64;
    let fitted = match method {
        ReducedMethod::RkPca => {
            // Variance objective over the streamed accumulator against
            // the basis norm constraint; eigenvalues carry the same
            // l-times-variance scale as the dense variance method.
            let eig = eig_gen(&s_kk, &k_rr, nf, &opts.solver)?;
            if eig.is_empty() {
                return Err(Error::numerical(
                    "basis Gram has no usable spectrum; the kernel map is constant",
                ));
            }
            let (vals, a, trimmed) = trim_collapsed(eig.values, eig.vectors, opts.solver.rank_tol);
            DualFit {
                a,
                v: None,
                values: vals,
                truncated: eig.truncated || trimmed,
            }
        }
        ReducedMethod::RkOpls => {
            let s_ky = s_ky.as_ref().unwrap();
            let g = s_ky / lf;
            let mut amat = g.dot(&g.t());
            symmetrize(&mut amat);
            let b = constraint(&s_kk, &k_rr, opts.eta, lf);
            let eig = eig_gen(&amat, &b, nf, &opts.solver)?;
            if eig.is_empty() {
                return Err(Error::numerical(
                    "regularized basis constraint has no usable spectrum",
                ));
            }
            let (vals, a, trimmed) = trim_collapsed(eig.values, eig.vectors, opts.solver.rank_tol);
            let mut v = g.t().dot(&a);
            for mut col in v.columns_mut() {
                let n = col.dot(&col).sqrt();
                if n > f64::MIN_POSITIVE {
                    col.mapv_inplace(|z| z / n);
                }
            }
            DualFit {
                a,
                v: Some(v),
                values: vals,
                truncated: eig.truncated || trimmed,
            }
        }
        ReducedMethod::RkCca => {
            let s_ky = s_ky.as_ref().unwrap();
            let (yc, _) = prepared_y.as_ref().unwrap();
            let mut cy = scaled_cov(yc, yc);
            if opts.eta != 0.0 {
                for i in 0..m {
                    cy[(i, i)] += opts.eta / lf;
                }
            }
            let g = s_ky / lf;
            let cy_inv_gt = solve_spd(&cy, 0.0, &g.t().to_owned())?;
            let mut amat = g.dot(&cy_inv_gt);
            symmetrize(&mut amat);
            let b = constraint(&s_kk, &k_rr, opts.eta, lf);
            let eig = eig_gen(&amat, &b, nf, &opts.solver)?;
            if eig.is_empty() {
                return Err(Error::numerical(
                    "regularized basis constraint has no usable spectrum",
                ));
            }
            let (lam, a, trimmed) = trim_collapsed(eig.values, eig.vectors, opts.solver.rank_tol);
            let corrs = lam.mapv(|v| v.max(0.0).sqrt());
            let mut v = cy_inv_gt.dot(&a);
            for (j, mut col) in v.columns_mut().into_iter().enumerate() {
                let rho = corrs[j].max(f64::MIN_POSITIVE);
                col.mapv_inplace(|z| z / rho);
            }
            DualFit {
                a,
                v: Some(v),
                values: corrs,
                truncated: eig.truncated || trimmed,
            }
        }
    };

    Ok(ReducedSetModel {
        method,
        kernel: spec,
        basis_x,
        basis_indices,
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

struct DualFit {
    a: Array2<f64>,
    v: Option<Array2<f64>>,
    values: Array1<f64>,
    truncated: bool,
}

/// Constraint block (S + eta K_rr)/l over the basis.
fn constraint(s_kk: &Array2<f64>, k_rr: &Array2<f64>, eta: f64, lf: f64) -> Array2<f64> {
    let mut b = s_kk.clone();
    if eta != 0.0 {
        b.scaled_add(eta, k_rr);
    }
    b /= lf;
    symmetrize(&mut b);
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
