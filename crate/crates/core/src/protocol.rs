//! A standardized benchmark protocol so different extractors can be
//! compared under identical conditions:
//!
//! 1. split rows into train/test (stratified when labels exist), with
//!    the training side capped;
//! 2. standardize inputs on the training side, use the median-distance
//!    RBF bandwidth unless a kernel is pinned;
//! 3. pick the Gram regularizer by k-fold cross-validation over a
//!    trace-scaled grid;
//! 4. fit the extractor, train a least-squares readout on the extracted
//!    features, predict the test side, and report accuracy (labels,
//!    winner-takes-all) or mean squared error (numeric targets).
//!
//! Each split yields one tidy [`BenchmarkRun`] row; seeds aggregate
//! into a [`BenchmarkSummary`].

use crate::data::{split_indices, Dataset, LabelEncoding, SplitSpec, Targets};
use crate::error::{Error, Result};
use crate::kernel::{center_train, KernelChoice, Sigma};
use crate::kernel_mva::{KernelFitOptions, KernelMethod, KernelModel};
use crate::linalg::SolverConfig;
use crate::predict::{crossval_select, evaluate_scores, GridScore, LsHead, Objective};
use ndarray::{Array2, ArrayView2, Axis};
use serde::Serialize;

/// Grid factors for the Gram regularizer; the concrete candidates are
/// these factors times tr(centered Gram) / rows of the training block.
pub fn default_eta_factors() -> Vec<f64> {
    vec![0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1]
}

/// Protocol configuration. Defaults follow the scheme above.
#[derive(Debug, Clone)]
pub struct ProtocolOptions {
    pub method: KernelMethod,
    /// Feature count; `None` means one less than the class count for
    /// labeled data (and 2 for numeric targets).
    pub n_features: Option<usize>,
    pub kernel: KernelChoice,
    /// Folds for the regularizer search.
    pub folds: usize,
    pub train_ratio: f64,
    pub train_cap: Option<usize>,
    pub eta_factors: Vec<f64>,
    /// Ridge of the least-squares readout.
    pub lambda: f64,
    pub standardize_x: bool,
    pub solver: SolverConfig,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions {
            method: KernelMethod::KOpls,
            n_features: None,
            kernel: KernelChoice::Rbf {
                sigma: Sigma::Median,
            },
            folds: 10,
            train_ratio: 0.6,
            train_cap: Some(500),
            eta_factors: default_eta_factors(),
            lambda: 0.0,
            standardize_x: true,
            solver: SolverConfig::default(),
        }
    }
}

/// Build concrete run options from a manifest protocol block. The kernel
/// string maps to `linear` or `rbf` (median bandwidth); richer kernels
/// carry parameters a manifest does not record.
pub fn options_from_spec(spec: &crate::manifest::ProtocolSpec) -> Result<ProtocolOptions> {
    let method = KernelMethod::from_name(&spec.method)
        .ok_or_else(|| Error::invalid(format!("unknown benchmark method '{}'", spec.method)))?;
    let kernel = match spec.kernel.to_ascii_lowercase().as_str() {
        "linear" => KernelChoice::Linear,
        "rbf" => KernelChoice::Rbf {
            sigma: Sigma::Median,
        },
        other => {
            return Err(Error::invalid(format!(
                "unknown benchmark kernel '{other}' (use 'linear' or 'rbf')"
            )))
        }
    };
    if spec.folds < 2 {
        return Err(Error::invalid(
            "the regularizer search needs at least 2 folds",
        ));
    }
    Ok(ProtocolOptions {
        method,
        n_features: spec.n_features,
        kernel,
        folds: spec.folds,
        train_ratio: spec.train_ratio,
        train_cap: Some(spec.train_cap),
        ..ProtocolOptions::default()
    })
}

/// One train/test split's outcome.
#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkRun {
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_features: usize,
    /// Chosen Gram regularizer.
    pub eta: f64,
    pub accuracy: Option<f64>,
    pub accuracy_std: Option<f64>,
    pub mse: Option<f64>,
}

/// Aggregate over seeds.
#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkSummary {
    pub dataset: String,
    pub method: String,
    pub runs: Vec<BenchmarkRun>,
    pub mean_accuracy: Option<f64>,
    /// Sample standard deviation of the per-seed accuracies.
    pub std_accuracy: Option<f64>,
    pub mean_mse: Option<f64>,
}

/// Numeric targets for a dataset: one-hot labels or the raw values.
pub fn numeric_targets(ds: &Dataset) -> Result<(Array2<f64>, Option<LabelEncoding>)> {
    match &ds.targets {
        Targets::Labels(labels) => {
            let enc = LabelEncoding::fit(labels)?;
            let y = enc.one_hot(labels)?;
            Ok((y, Some(enc)))
        }
        Targets::Values(y) => Ok((y.clone(), None)),
        Targets::None => Err(Error::invalid(
            "the benchmark protocol needs labels or numeric targets",
        )),
    }
}

/// Concrete regularizer candidates for a training block: the factors
/// scaled by tr(centered Gram) / rows.
pub fn scaled_eta_grid(
    x: &ArrayView2<f64>,
    choice: &KernelChoice,
    standardize: bool,
    factors: &[f64],
) -> Result<Vec<f64>> {
    if factors.is_empty() {
        return Err(Error::invalid("the regularizer grid cannot be empty"));
    }
    let (xp, _) = crate::data::center_fit_apply(x, standardize)?;
    let spec = choice.resolve(&xp.view())?;
    let k = spec.gram(&xp.view(), &xp.view())?;
    let (kc, _) = center_train(&k)?;
    let trace: f64 = (0..kc.nrows()).map(|i| kc[(i, i)]).sum();
    let scale = trace / kc.nrows() as f64;
    Ok(factors.iter().map(|f| f * scale).collect())
}

/// Pick the Gram regularizer by k-fold cross-validation: each candidate
/// is scored by the validation MSE of the least-squares readout on the
/// extracted features. Returns the winner and the full score table.
pub fn select_eta(
    method: KernelMethod,
    x: &ArrayView2<f64>,
    y: &ArrayView2<f64>,
    choice: &KernelChoice,
    n_features: usize,
    folds: usize,
    seed: u64,
    etas: &[f64],
    lambda: f64,
    standardize_x: bool,
    solver: &SolverConfig,
) -> Result<(f64, Vec<GridScore<f64>>)> {
    let score = |eta: &f64, train: &[usize], val: &[usize]| -> Result<f64> {
        let x_tr = x.select(Axis(0), train);
        let y_tr = y.select(Axis(0), train);
        let x_val = x.select(Axis(0), val);
        let y_val = y.select(Axis(0), val);
        let mut opts = KernelFitOptions::new(n_features);
        opts.eta = *eta;
        opts.standardize_x = standardize_x;
        opts.solver = solver.clone();
        let model = KernelModel::fit(method, &x_tr.view(), Some(&y_tr.view()), choice, &opts)?;
        let t_tr = model.transform(&x_tr.view())?;
        let head = LsHead::fit(&t_tr.view(), &y_tr.view(), lambda)?;
        let t_val = model.transform(&x_val.view())?;
        let pred = head.predict(&t_val.view())?;
        crate::predict::mse(&y_val.view(), &pred.view())
    };
    crossval_select(etas, x.nrows(), folds, seed, Objective::Minimize, score)
}

/// Run one train/test split of the protocol.
pub fn run_split(
    ds: &Dataset,
    dataset_name: &str,
    opts: &ProtocolOptions,
    seed: u64,
) -> Result<BenchmarkRun> {
    let (y_all, encoding) = numeric_targets(ds)?;
    let classes = encoding.as_ref().map(|e| e.n_classes());
    let nf = opts
        .n_features
        .unwrap_or_else(|| classes.map(|c| (c - 1).max(1)).unwrap_or(2));

    let spec = SplitSpec {
        train_ratio: opts.train_ratio,
        train_cap: opts.train_cap,
        stratified: encoding.is_some(),
        seed,
    };
    let (train_idx, test_idx) = split_indices(ds, &spec)?;
    let x_tr = ds.x.select(Axis(0), &train_idx);
    let y_tr = y_all.select(Axis(0), &train_idx);
    let x_te = ds.x.select(Axis(0), &test_idx);
    let y_te = y_all.select(Axis(0), &test_idx);

    // Regularizer search only where the method uses one.
    let eta = match opts.method {
        KernelMethod::KCca | KernelMethod::KOpls => {
            let grid = scaled_eta_grid(
                &x_tr.view(),
                &opts.kernel,
                opts.standardize_x,
                &opts.eta_factors,
            )?;
            if grid.len() == 1 {
                grid[0]
            } else {
                let (best, _) = select_eta(
                    opts.method,
                    &x_tr.view(),
                    &y_tr.view(),
                    &opts.kernel,
                    nf,
                    opts.folds,
                    seed,
                    &grid,
                    opts.lambda,
                    opts.standardize_x,
                    &opts.solver,
                )?;
                best
            }
        }
        KernelMethod::KPca | KernelMethod::KPls2 => 0.0,
    };

    let mut fit_opts = KernelFitOptions::new(nf);
    fit_opts.eta = eta;
    fit_opts.standardize_x = opts.standardize_x;
    fit_opts.solver = opts.solver.clone();
    let y_arg = if opts.method.supervised() {
        Some(y_tr.view())
    } else {
        None
    };
    let model = KernelModel::fit(
        opts.method,
        &x_tr.view(),
        y_arg.as_ref(),
        &opts.kernel,
        &fit_opts,
    )?;
    let t_tr = model.transform(&x_tr.view())?;
    let head = LsHead::fit(&t_tr.view(), &y_tr.view(), opts.lambda)?;
    let t_te = model.transform(&x_te.view())?;
    let pred = head.predict(&t_te.view())?;

    let report = if encoding.is_some() {
        evaluate_scores(&y_te.view(), &pred.view())?
    } else {
        crate::predict::evaluate_regression(&y_te.view(), &pred.view())?
    };
    Ok(BenchmarkRun {
        dataset: dataset_name.to_string(),
        method: opts.method.name().to_string(),
        seed,
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        n_features: model.n_features(),
        eta,
        accuracy: report.accuracy,
        accuracy_std: report.accuracy_std,
        mse: report.mse,
    })
}

/// Run the protocol over several seeds and aggregate.
pub fn run_benchmark(
    ds: &Dataset,
    dataset_name: &str,
    opts: &ProtocolOptions,
    seeds: &[u64],
) -> Result<BenchmarkSummary> {
    if seeds.is_empty() {
        return Err(Error::invalid("the benchmark needs at least one seed"));
    }
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        runs.push(run_split(ds, dataset_name, opts, seed)?);
    }
    let accs: Vec<f64> = runs.iter().filter_map(|r| r.accuracy).collect();
    let mses: Vec<f64> = runs.iter().filter_map(|r| r.mse).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mean_accuracy, std_accuracy) = if accs.len() == runs.len() {
        let m = mean(&accs);
        let sd = if accs.len() > 1 {
            let var =
                accs.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (accs.len() - 1) as f64;
            Some(var.sqrt())
        } else {
            None
        };
        (Some(m), sd)
    } else {
        (None, None)
    };
    let mean_mse = if mses.len() == runs.len() {
        Some(mean(&mses))
    } else {
        None
    };
    Ok(BenchmarkSummary {
        dataset: dataset_name.to_string(),
        method: opts.method.name().to_string(),
        runs,
        mean_accuracy,
        std_accuracy,
        mean_mse,
    })
}
