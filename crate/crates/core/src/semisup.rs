//! Semisupervised extensions.
//!
//! Two routes are provided:
//!
//! * [`fit_sskcca`] — a two-view dual correlation fit where the input
//!   view spans labeled *and* unlabeled rows while the target view
//!   (a linear kernel on the centered targets) exists only for the
//!   labeled rows. Ridge terms and a neighborhood-graph smoothness
//!   penalty regularize both views; the graph penalty is what lets the
//!   unlabeled rows shape the directions. With no unlabeled rows and
//!   all regularizers at zero the fit coincides with the dense kernel
//!   correlation method.
//! * [`fit_semisup_kernel`] — any kernel method, but with the kernel
//!   itself resolved on labeled and unlabeled rows together. Mixture
//!   ensembles and median bandwidths then absorb the unlabeled
//!   structure while the supervised solve sees only the labeled block.
//!
//! The half-problem solved by [`fit_sskcca`], with `K` the centered
//! Gram over all n rows, `Knl` its n x l block against the labeled
//! rows, and `Ky` the target-view Gram:
//!
//! ```text
//! (1/l^2) Knl Ky By^-1 Ky Kln  a = lambda Bx a
//! Bx = (Knl Kln + ax K + gx K L K) / l
//! By = (Ky^2   + ay Ky + gy Ky Ly Ky) / l
//! ```
//!
//! with `L` the normalized Laplacian of a k-nearest-neighbour graph
//! over all rows. Correlations are sqrt(lambda); the target-view duals
//! follow as `b = (1/l) By^-1 Ky Kln a / rho`.

use crate::data::{center_fit_apply, CenteringStats};
use crate::error::{Error, Result};
use crate::kernel::graph::{knn_affinity, normalized_laplacian};
use crate::kernel::{
    center_test, center_train, median_bandwidth, GramCentering, KernelChoice, KernelSpec,
};
use crate::kernel_mva::{KernelFitOptions, KernelMethod, KernelModel};
use crate::linalg::{eig_gen, solve_spd, SolverConfig};
use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};

/// Options for the semisupervised two-view correlation fit.
#[derive(Debug, Clone)]
pub struct SemiSupCcaOptions {
    pub n_features: usize,
    /// Ridge weight on the input view.
    pub alpha_x: f64,
    /// Graph-smoothness weight on the input view.
    pub gamma_x: f64,
    /// Ridge weight on the target view.
    pub alpha_y: f64,
    /// Graph-smoothness weight on the target view.
    pub gamma_y: f64,
    /// Neighbour count for the smoothness graphs.
    pub graph_k: usize,
    pub standardize_x: bool,
    pub standardize_y: bool,
    pub solver: SolverConfig,
}

impl SemiSupCcaOptions {
    pub fn new(n_features: usize) -> Self {
        SemiSupCcaOptions {
            n_features,
            alpha_x: 1e-3,
            gamma_x: 1e-2,
            alpha_y: 1e-3,
            gamma_y: 0.0,
            graph_k: 7,
            standardize_x: true,
            standardize_y: false,
            solver: SolverConfig::default(),
        }
    }
}

/// A fitted semisupervised correlation model. Dual coefficients span
/// labeled and unlabeled training rows.
#[derive(Debug, Clone)]
pub struct SemiSupCcaModel {
    pub kernel: KernelSpec,
    /// Preprocessed labeled-then-unlabeled training inputs, n x d.
    pub train_x: Array2<f64>,
    pub n_labeled: usize,
    /// Input-view dual coefficients, n x nf.
    pub a: Array2<f64>,
    /// Target-view dual coefficients, l x nf.
    pub b: Array2<f64>,
    /// Canonical correlations, one per direction, non-increasing.
    pub correlations: Array1<f64>,
    pub gram_centering: GramCentering,
    pub x_stats: CenteringStats,
    pub y_stats: CenteringStats,
    pub alpha_x: f64,
    pub gamma_x: f64,
    /// Bandwidth the smoothness graph used, when one was built.
    pub graph_sigma: Option<f64>,
    /// Neighbour count the smoothness graph used.
    pub graph_k: usize,
    pub truncated: bool,
}

impl SemiSupCcaModel {
    pub fn n_features(&self) -> usize {
        self.a.ncols()
    }

    pub fn n_train(&self) -> usize {
        self.train_x.nrows()
    }

    /// Project new rows through the input view.
    pub fn transform(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.train_x.ncols() {
            return Err(Error::data(format!(
                "model expects {} input columns, got {}",
                self.train_x.ncols(),
                x.ncols()
            )));
        }
        let xp = self.x_stats.apply(x)?;
        let k = self.kernel.gram(&xp.view(), &self.train_x.view())?;
        let kc = center_test(&k, &self.gram_centering)?;
        Ok(kc.dot(&self.a))
    }

    /// Largest deviation of `A' Bx A` from the identity, with the
    /// input-view metric rebuilt from the stored training block.
    pub fn constraint_residual(&self) -> Result<f64> {
        let bx = self.input_metric()?;
        let g = self.a.t().dot(&bx).dot(&self.a);
        Ok(crate::linalg::identity_residual(&g))
    }

    fn input_metric(&self) -> Result<Array2<f64>> {
        let k_raw = self.kernel.gram(&self.train_x.view(), &self.train_x.view())?;
        let (kc, _) = center_train(&k_raw)?;
        let l = self.n_labeled;
        let knl = kc.slice(ndarray::s![.., ..l]).to_owned();
        let mut bx = knl.dot(&knl.t());
        if self.alpha_x > 0.0 {
            bx = bx + self.alpha_x * &kc;
        }
        if self.gamma_x > 0.0 {
            let sigma = self.graph_sigma.ok_or_else(|| {
                Error::invalid("graph weight is positive but no graph bandwidth was stored")
            })?;
            let w = knn_affinity(&self.train_x.view(), self.graph_k, sigma)?;
            let lap = normalized_laplacian(&w)?;
            bx = bx + self.gamma_x * kc.dot(&lap).dot(&kc);
        }
        bx.mapv_inplace(|v| v / l as f64);
        Ok(symmetrize(bx))
    }
}

/// Fit the semisupervised two-view correlation model. `x` and `y` are
/// the labeled block; `unlabeled` rows extend the input view only.
pub fn fit_sskcca(
    x: &ArrayView2<f64>,
    y: &ArrayView2<f64>,
    unlabeled: Option<&ArrayView2<f64>>,
    choice: &KernelChoice,
    opts: &SemiSupCcaOptions,
) -> Result<SemiSupCcaModel> {
    if opts.n_features == 0 {
        return Err(Error::invalid(
            "the number of extracted features must be at least 1",
        ));
    }
    for (name, v) in [
        ("alpha_x", opts.alpha_x),
        ("gamma_x", opts.gamma_x),
        ("alpha_y", opts.alpha_y),
        ("gamma_y", opts.gamma_y),
    ] {
        if !(v >= 0.0) {
            return Err(Error::invalid(format!(
                "regularizer {name} must be non-negative, got {v}"
            )));
        }
    }
    let l = x.nrows();
    if l < 2 {
        return Err(Error::data("fitting needs at least two labeled rows"));
    }
    if y.nrows() != l {
        return Err(Error::data(format!(
            "input and target blocks disagree on rows: {l} vs {}",
            y.nrows()
        )));
    }
    if y.ncols() == 0 {
        return Err(Error::data("target block has no columns"));
    }
    if let Some(u) = unlabeled {
        if u.ncols() != x.ncols() {
            return Err(Error::data(format!(
                "labeled and unlabeled blocks disagree on dimension: {} vs {}",
                x.ncols(),
                u.ncols()
            )));
        }
    }

    // Labeled rows first, then unlabeled; preprocessing statistics come
    // from the whole stack so the kernel view is shared.
    let x_all = match unlabeled {
        Some(u) if u.nrows() > 0 => concatenate(Axis(0), &[x.view(), u.view()])
            .map_err(|e| Error::data(format!("cannot stack labeled and unlabeled rows: {e}")))?,
        _ => x.to_owned(),
    };
    let n = x_all.nrows();
    let (xp, x_stats) = center_fit_apply(&x_all.view(), opts.standardize_x)?;
    let (yc, y_stats) = center_fit_apply(y, opts.standardize_y)?;
    let m = yc.ncols();

    let spec = choice.resolve(&xp.view())?;
    let k_raw = spec.gram(&xp.view(), &xp.view())?;
    let (kc, gram_centering) = center_train(&k_raw)?;
    let knl = kc.slice(ndarray::s![.., ..l]).to_owned();
    let ky = yc.dot(&yc.t());

    let lf = l as f64;

    let mut graph_sigma = None;
    let graph_k = opts.graph_k.min(n - 1).max(1);
    if graph_k < opts.graph_k {
        log::warn!(
            "smoothness graph capped at {graph_k} neighbours for {n} rows (requested {})",
            opts.graph_k
        );
    }
    let mut bx = knl.dot(&knl.t());
    if opts.alpha_x > 0.0 {
        bx = bx + opts.alpha_x * &kc;
    }
    if opts.gamma_x > 0.0 {
        let sigma = median_bandwidth(&xp.view())?;
        let w = knn_affinity(&xp.view(), graph_k, sigma)?;
        let lap = normalized_laplacian(&w)?;
        bx = bx + opts.gamma_x * kc.dot(&lap).dot(&kc);
        graph_sigma = Some(sigma);
    }
    bx.mapv_inplace(|v| v / lf);
    let bx = symmetrize(bx);

    let mut by = ky.dot(&ky);
    if opts.alpha_y > 0.0 {
        by = by + opts.alpha_y * &ky;
    }
    if opts.gamma_y > 0.0 {
        let gk = opts.graph_k.min(l - 1).max(1);
        let sigma = median_bandwidth(&yc.view())?;
        let w = knn_affinity(&yc.view(), gk, sigma)?;
        let lap = normalized_laplacian(&w)?;
        by = by + opts.gamma_y * ky.dot(&lap).dot(&ky);
    }
    by.mapv_inplace(|v| v / lf);
    let by = symmetrize(by);

    // Half problem: push the target view through By and sandwich.
    let g = ky.dot(&knl.t()); // l x n
    let s = solve_spd(&by, 0.0, &g)?; // By^-1 Ky Kln
    let mut a_mat = g.t().dot(&s);
    a_mat.mapv_inplace(|v| v / (lf * lf));
    let a_mat = symmetrize(a_mat);

    let cap = m.min(l - 1);
    let mut truncated = false;
    let nf = if opts.n_features > cap {
        log::warn!(
            "semisupervised correlation: requested {} features but the data supports at most {cap}; capping",
            opts.n_features
        );
        truncated = true;
        cap
    } else {
        opts.n_features
    };

    let eig = eig_gen(&a_mat, &bx, nf, &opts.solver)?;
    let kept = trim_collapsed(&eig.values, opts.solver.rank_tol);
    if kept == 0 {
        return Err(Error::numerical(
            "the two views share no correlated direction",
        ));
    }
    let truncated = truncated || eig.truncated || kept < eig.values.len();
    let a = eig.vectors.slice(ndarray::s![.., ..kept]).to_owned();
    let mut correlations = Array1::<f64>::zeros(kept);
    let mut b = Array2::<f64>::zeros((l, kept));
    for j in 0..kept {
        let lambda = eig.values[j];
        if lambda > 1.0 + 1e-6 {
            log::warn!("correlation eigenvalue {lambda} exceeds 1; check the regularizers");
        }
        let rho = lambda.max(0.0).sqrt();
        correlations[j] = rho;
        if rho > 0.0 {
            let sa = s.dot(&a.column(j).to_owned());
            for (r, v) in sa.iter().enumerate() {
                b[(r, j)] = v / (lf * rho);
            }
        }
    }

    Ok(SemiSupCcaModel {
        kernel: spec,
        train_x: xp,
        n_labeled: l,
        a,
        b,
        correlations,
        gram_centering,
        x_stats,
        y_stats,
        alpha_x: opts.alpha_x,
        gamma_x: opts.gamma_x,
        graph_sigma,
        graph_k,
        truncated,
    })
}

/// Fit a kernel method whose kernel is resolved on labeled and
/// unlabeled rows together: mixture ensembles train on every row and
/// median bandwidths see the full input distribution, while the
/// supervised solve uses only the labeled block.
pub fn fit_semisup_kernel(
    method: KernelMethod,
    x: &ArrayView2<f64>,
    y: Option<&ArrayView2<f64>>,
    unlabeled: &ArrayView2<f64>,
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
    if unlabeled.ncols() != x.ncols() {
        return Err(Error::data(format!(
            "labeled and unlabeled blocks disagree on dimension: {} vs {}",
            x.ncols(),
            unlabeled.ncols()
        )));
    }
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
            Some(y)
        }
    };

    let x_all = if unlabeled.nrows() > 0 {
        concatenate(Axis(0), &[x.view(), unlabeled.view()])
            .map_err(|e| Error::data(format!("cannot stack labeled and unlabeled rows: {e}")))?
    } else {
        x.to_owned()
    };
    let (xp_all, x_stats) = center_fit_apply(&x_all.view(), opts.standardize_x)?;
    let spec = choice.resolve(&xp_all.view())?;
    let xp = xp_all.slice(ndarray::s![..x.nrows(), ..]).to_owned();
    let prepared_y = match prepared_y {
        None => None,
        Some(y) => Some(center_fit_apply(y, opts.standardize_y)?),
    };
    KernelModel::fit_resolved(method, spec, xp, x_stats, prepared_y, opts)
}

fn trim_collapsed(values: &Array1<f64>, rank_tol: f64) -> usize {
    let lead = values.iter().cloned().fold(0.0f64, f64::max);
    values
        .iter()
        .take_while(|&&v| v > rank_tol * lead)
        .count()
        .max(if lead > 0.0 { 1 } else { 0 })
}

fn symmetrize(m: Array2<f64>) -> Array2<f64> {
    let mt = m.t().to_owned();
    (m + mt) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Sigma;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn randn(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| {
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random::<f64>();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
    }

    fn unregularized(nf: usize) -> SemiSupCcaOptions {
        let mut o = SemiSupCcaOptions::new(nf);
        o.alpha_x = 0.0;
        o.gamma_x = 0.0;
        o.alpha_y = 0.0;
        o.gamma_y = 0.0;
        o.standardize_x = false;
        o
    }

    #[test]
    fn no_unlabeled_rows_and_matched_ridges_match_the_dense_correlation_fit() {
        // With no unlabeled rows, no graph terms, and the same ridge on
        // both views, the two-view problem coincides with the dense
        // kernel correlation method at that ridge. (The ridge also keeps
        // the spectrum non-degenerate: at zero regularization every
        // correlation of a strictly positive-definite kernel is 1 and
        // the directions are only defined up to rotation.)
        let x = randn(24, 4, 801);
        let noise = randn(24, 2, 802);
        let mut y = Array2::<f64>::zeros((24, 2));
        for r in 0..24 {
            y[(r, 0)] = x[(r, 0)] - 0.5 * x[(r, 2)] + 0.05 * noise[(r, 0)];
            y[(r, 1)] = x[(r, 1)] + 0.05 * noise[(r, 1)];
        }
        let choice = KernelChoice::Rbf {
            sigma: Sigma::Fixed(2.0),
        };
        let eta = 0.05;
        let mut ss_opts = unregularized(2);
        ss_opts.alpha_x = eta;
        ss_opts.alpha_y = eta;
        let ss = fit_sskcca(&x.view(), &y.view(), None, &choice, &ss_opts).unwrap();

        let mut kopts = crate::kernel_mva::KernelFitOptions::new(2);
        kopts.standardize_x = false;
        kopts.eta = eta;
        let dense = KernelModel::fit(
            KernelMethod::KCca,
            &x.view(),
            Some(&y.view()),
            &choice,
            &kopts,
        )
        .unwrap();

        assert_eq!(ss.correlations.len(), dense.eigenvalues.len());
        for (r, e) in ss.correlations.iter().zip(dense.eigenvalues.iter()) {
            assert_abs_diff_eq!(r, e, epsilon = 1e-8);
        }
        let ts = ss.transform(&x.view()).unwrap();
        let td = dense.transform(&x.view()).unwrap();
        for j in 0..2 {
            let mut same = 0.0f64;
            let mut flip = 0.0f64;
            for r in 0..24 {
                same = same.max((ts[(r, j)] - td[(r, j)]).abs());
                flip = flip.max((ts[(r, j)] + td[(r, j)]).abs());
            }
            assert!(
                same.min(flip) < 1e-6,
                "feature {j} differs: {}",
                same.min(flip)
            );
        }
    }

    #[test]
    fn constraint_holds_with_unlabeled_rows_and_regularizers() {
        let x = randn(16, 3, 811);
        let y = randn(16, 2, 812);
        let u = randn(40, 3, 813);
        let choice = KernelChoice::Rbf {
            sigma: Sigma::Median,
        };
        let opts = SemiSupCcaOptions::new(2);
        let model = fit_sskcca(&x.view(), &y.view(), Some(&u.view()), &choice, &opts).unwrap();
        assert_eq!(model.n_train(), 56);
        assert_eq!(model.n_labeled, 16);
        assert_eq!(model.a.nrows(), 56);
        assert_eq!(model.b.nrows(), 16);
        assert!(model.constraint_residual().unwrap() < 1e-8);
    }

    #[test]
    fn correlations_are_sorted_and_bounded() {
        let x = randn(20, 4, 821);
        let y = randn(20, 3, 822);
        let u = randn(25, 4, 823);
        let choice = KernelChoice::Rbf {
            sigma: Sigma::Median,
        };
        let model =
            fit_sskcca(&x.view(), &y.view(), Some(&u.view()), &choice, &SemiSupCcaOptions::new(3))
                .unwrap();
        for w in model.correlations.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
        for &r in model.correlations.iter() {
            assert!((0.0..=1.0 + 1e-6).contains(&r));
        }
    }

    #[test]
    fn unlabeled_rows_change_the_directions() {
        let x = randn(12, 3, 831);
        let y = randn(12, 2, 832);
        let u = randn(30, 3, 833) * 1.5;
        let probe = randn(8, 3, 834);
        let choice = KernelChoice::Rbf {
            sigma: Sigma::Fixed(2.0),
        };
        let opts = SemiSupCcaOptions::new(2);
        let with = fit_sskcca(&x.view(), &y.view(), Some(&u.view()), &choice, &opts).unwrap();
        let without = fit_sskcca(&x.view(), &y.view(), None, &choice, &opts).unwrap();
        let tw = with.transform(&probe.view()).unwrap();
        let to = without.transform(&probe.view()).unwrap();
        // Compare the leading feature up to a global sign.
        let mut same = 0.0f64;
        let mut flip = 0.0f64;
        for r in 0..8 {
            same = same.max((tw[(r, 0)] - to[(r, 0)]).abs());
            flip = flip.max((tw[(r, 0)] + to[(r, 0)]).abs());
        }
        let diff = same.min(flip);
        assert!(diff > 1e-6, "unlabeled rows had no effect: {diff}");
    }

    #[test]
    fn invalid_requests_are_rejected() {
        let x = randn(10, 3, 841);
        let y9 = randn(9, 2, 842);
        let choice = KernelChoice::Linear;
        assert!(fit_sskcca(&x.view(), &y9.view(), None, &choice, &SemiSupCcaOptions::new(1)).is_err());
        let y = randn(10, 2, 843);
        assert!(fit_sskcca(&x.view(), &y.view(), None, &choice, &SemiSupCcaOptions::new(0)).is_err());
        let bad_u = randn(5, 4, 844);
        assert!(fit_sskcca(
            &x.view(),
            &y.view(),
            Some(&bad_u.view()),
            &choice,
            &SemiSupCcaOptions::new(1)
        )
        .is_err());
        let mut neg = SemiSupCcaOptions::new(1);
        neg.alpha_x = -0.1;
        assert!(fit_sskcca(&x.view(), &y.view(), None, &choice, &neg).is_err());
    }

    #[test]
    fn unlabeled_aware_kernels_feed_the_supervised_fit() {
        // Two shifted blobs; most rows are unlabeled.
        let mut x = randn(12, 2, 851);
        let mut u = randn(48, 2, 852);
        for r in 0..12 {
            if r % 2 == 0 {
                x[(r, 0)] += 4.0;
            }
        }
        for r in 0..48 {
            if r % 2 == 0 {
                u[(r, 0)] += 4.0;
            }
        }
        let mut y = Array2::<f64>::zeros((12, 1));
        for r in 0..12 {
            y[(r, 0)] = if r % 2 == 0 { 1.0 } else { -1.0 };
        }
        let choice = KernelChoice::Cluster {
            restarts: 2,
            depth: 2,
            seed: 9,
        };
        let mut opts = KernelFitOptions::new(1);
        opts.standardize_x = false;
        let model = fit_semisup_kernel(
            KernelMethod::KCca,
            &x.view(),
            Some(&y.view()),
            &u.view(),
            &choice,
            &opts,
        )
        .unwrap();
        assert_eq!(model.kernel.family(), "cluster");
        assert_eq!(model.n_train(), 12);
        let t = model.transform(&u.view()).unwrap();
        assert_eq!(t.dim(), (48, 1));
        for v in t.iter() {
            assert!(v.is_finite());
        }
        // The extracted feature should separate the blobs on unlabeled rows:
        // compare the per-blob score means.
        let mean_a: f64 = (0..48).filter(|r| r % 2 == 0).map(|r| t[(r, 0)]).sum::<f64>() / 24.0;
        let mean_b: f64 = (0..48).filter(|r| r % 2 == 1).map(|r| t[(r, 0)]).sum::<f64>() / 24.0;
        assert!(
            (mean_a - mean_b).abs() > 0.1,
            "blob means too close: {mean_a} vs {mean_b}"
        );
    }

    #[test]
    fn unlabeled_aware_fit_validates_inputs() {
        let x = randn(10, 3, 861);
        let y = randn(10, 1, 862);
        let u_bad = randn(5, 2, 863);
        let choice = KernelChoice::Linear;
        let opts = KernelFitOptions::new(1);
        assert!(fit_semisup_kernel(
            KernelMethod::KCca,
            &x.view(),
            Some(&y.view()),
            &u_bad.view(),
            &choice,
            &opts
        )
        .is_err());
        let u = randn(5, 3, 864);
        assert!(fit_semisup_kernel(
            KernelMethod::KCca,
            &x.view(),
            None,
            &u.view(),
            &choice,
            &opts
        )
        .is_err());
    }
}
