//! The `fit` command, plus the method flags and dispatch shared with
//! `crossval`: one tag selects the extractor family, the remaining flags
//! parameterize it, and the fitted model (with an optional least-squares
//! readout and the label table) lands in a versioned JSON file.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use ndarray::ArrayView2;
use serde_json::{json, Value};

use kmva::kernel_mva::KernelFitOptions;
use kmva::linear::LinearFitOptions;
use kmva::model_io::save_model;
use kmva::protocol::numeric_targets;
use kmva::reduced::{fit_reduced, ReducedFitOptions};
use kmva::semisup::{fit_sskcca, SemiSupCcaOptions};
use kmva::sparse::{fit_sparse, SparseFitOptions};
use kmva::{
    AnyModel, Error, KernelMethod, KernelModel, KernelSpec, LinearMethod, LinearModel, LsHead,
    MatrixEncoding, ReducedMethod, Result, SavedModel, SparseVariant,
};

use crate::common::{attach_targets, resolved_kernel_json, write_report, DataArgs, KernelArgs};

pub const METHOD_TAGS: &str = "pca, pls2, cca, opls, kpca, kpls2, kcca, kopls, \
                               rkpca, rkcca, rkopls, sparse (pick --variant sma|smc), sskcca";

/// Which fitting routine a method tag selects.
#[derive(Debug, Clone, Copy)]
pub enum Family {
    Linear(LinearMethod),
    Kernel(KernelMethod),
    Reduced(ReducedMethod),
    Sparse(SparseVariant),
    SemiSup,
}

impl Family {
    pub fn supervised(&self) -> bool {
        match self {
            Family::Linear(m) => m.supervised(),
            Family::Kernel(m) => m.supervised(),
            Family::Reduced(m) => m.supervised(),
            Family::Sparse(_) | Family::SemiSup => true,
        }
    }

    /// Most features the family can extract for the given shapes.
    pub fn feature_cap(&self, l: usize, d: usize, m: usize, basis: usize) -> usize {
        match self {
            Family::Linear(lm) => lm.max_features(d, m, l),
            Family::Kernel(km) => km.max_features(l, m),
            Family::Reduced(rm) => rm.max_features(basis, m, l),
            Family::Sparse(_) => l,
            Family::SemiSup => m.min(l),
        }
    }
}

pub fn parse_method(method: &str, variant: &str) -> Result<Family> {
    let name = method.to_ascii_lowercase();
    if let Some(m) = LinearMethod::from_name(&name) {
        return Ok(Family::Linear(m));
    }
    if let Some(m) = KernelMethod::from_name(&name) {
        return Ok(Family::Kernel(m));
    }
    if let Some(m) = ReducedMethod::from_name(&name) {
        return Ok(Family::Reduced(m));
    }
    if let Some(v) = SparseVariant::from_name(&name) {
        return Ok(Family::Sparse(v));
    }
    if name == "sparse" {
        return SparseVariant::from_name(variant).map(Family::Sparse).ok_or_else(|| {
            Error::invalid(format!(
                "unknown sparse variant '{variant}' (expected sma or smc)"
            ))
        });
    }
    if name == "sskcca" {
        return Ok(Family::SemiSup);
    }
    Err(Error::invalid(format!(
        "unknown method '{method}'; valid tags: {METHOD_TAGS}"
    )))
}

/// Extractor choice and parameters, shared by `fit` and `crossval`.
#[derive(Args, Debug, Clone)]
pub struct MethodFlags {
    /// Extractor tag: pca|pls2|cca|opls, kpca|kpls2|kcca|kopls,
    /// rkpca|rkcca|rkopls, sparse (see --variant), sskcca.
    #[arg(long)]
    pub method: String,

    /// Features to extract; defaults to one less than the class count
    /// for labeled data, otherwise 2. Clamped to the method's maximum
    /// with a warning.
    #[arg(long)]
    pub nf: Option<usize>,

    #[command(flatten)]
    pub kernel: KernelArgs,

    /// Regularizer: Gram loading for the kernel correlation/predictive
    /// duals, covariance ridge for their linear counterparts.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,

    /// Basis size for the reduced-set methods.
    #[arg(long, default_value_t = 100)]
    pub r: usize,

    /// Rows per streamed kernel block (reduced-set methods).
    #[arg(long, default_value_t = 512)]
    pub chunk: usize,

    /// Sparse selection rule used when --method is 'sparse'.
    #[arg(long, default_value = "sma", value_parser = ["sma", "smc"])]
    pub variant: String,

    /// Candidate-pool size for the sparse methods; all rows when omitted.
    #[arg(long)]
    pub pool: Option<usize>,

    /// Ridge weight on the input view (sskcca).
    #[arg(long, default_value_t = 1e-3)]
    pub alpha_x: f64,

    /// Graph-smoothness weight on the input view (sskcca).
    #[arg(long, default_value_t = 1e-2)]
    pub gamma_x: f64,

    /// Ridge weight on the target view (sskcca).
    #[arg(long, default_value_t = 1e-3)]
    pub alpha_y: f64,

    /// Graph-smoothness weight on the target view (sskcca).
    #[arg(long, default_value_t = 0.0)]
    pub gamma_y: f64,

    /// Neighbour count of the smoothness graph (sskcca).
    #[arg(long, default_value_t = 7)]
    pub graph_k: usize,

    /// Sampling seed (reduced-set basis, sparse candidate pool).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Skip input standardization (centering always happens).
    #[arg(long)]
    pub no_standardize: bool,

    /// Standardize target columns too.
    #[arg(long)]
    pub standardize_y: bool,
}

impl MethodFlags {
    pub fn family(&self) -> Result<Family> {
        parse_method(&self.method, &self.variant)
    }

    pub fn config_json(&self, nf: usize) -> Value {
        json!({
            "method": self.method.to_ascii_lowercase(),
            "nf": nf,
            "kernel": self.kernel.config_json(),
            "eta": self.eta,
            "r": self.r,
            "chunk": self.chunk,
            "variant": self.variant,
            "pool": self.pool,
            "alpha_x": self.alpha_x,
            "gamma_x": self.gamma_x,
            "alpha_y": self.alpha_y,
            "gamma_y": self.gamma_y,
            "graph_k": self.graph_k,
            "seed": self.seed,
            "standardize_x": !self.no_standardize,
            "standardize_y": self.standardize_y,
        })
    }

    /// Default feature count, then clamp to the family cap with a
    /// warning instead of an error.
    pub fn resolve_nf(
        &self,
        family: Family,
        l: usize,
        d: usize,
        m: usize,
        classes: Option<usize>,
    ) -> usize {
        let requested = self
            .nf
            .unwrap_or_else(|| classes.map(|c| (c - 1).max(1)).unwrap_or(2));
        let cap = family.feature_cap(l, d, m, self.r.min(l)).max(1);
        if requested > cap {
            log::warn!("requested {requested} features but the method caps at {cap}; clamping");
            eprintln!("warning: requested {requested} features but the method caps at {cap}; clamping");
            cap
        } else {
            requested.max(1)
        }
    }

    /// Fit the selected extractor on a prepared block pair.
    pub fn fit_any(
        &self,
        family: Family,
        nf: usize,
        x: &ArrayView2<f64>,
        y: Option<&ArrayView2<f64>>,
        unlabeled: Option<&ArrayView2<f64>>,
    ) -> Result<AnyModel> {
        if family.supervised() && y.is_none() {
            return Err(Error::invalid(format!(
                "method '{}' needs targets: give a label column or --targets",
                self.method
            )));
        }
        let choice = self.kernel.choice()?;
        let standardize_x = !self.no_standardize;
        Ok(match family {
            Family::Linear(m) => {
                let mut opts = LinearFitOptions::new(nf);
                opts.standardize_x = standardize_x;
                opts.standardize_y = self.standardize_y;
                opts.ridge = self.eta;
                AnyModel::Linear(LinearModel::fit(m, x, y, &opts)?)
            }
            Family::Kernel(m) => {
                let mut opts = KernelFitOptions::new(nf);
                opts.standardize_x = standardize_x;
                opts.standardize_y = self.standardize_y;
                opts.eta = self.eta;
                AnyModel::Kernel(KernelModel::fit(m, x, y, &choice, &opts)?)
            }
            Family::Reduced(m) => {
                let mut opts = ReducedFitOptions::new(nf, self.r.min(x.nrows()), self.seed);
                opts.chunk_rows = self.chunk;
                opts.standardize_x = standardize_x;
                opts.standardize_y = self.standardize_y;
                opts.eta = self.eta;
                AnyModel::Reduced(fit_reduced(m, x, y, &choice, &opts)?)
            }
            Family::Sparse(v) => {
                let y = y.expect("supervision checked above");
                let mut opts = SparseFitOptions::new(nf, self.seed);
                opts.pool_size = self.pool.unwrap_or(x.nrows());
                opts.standardize_x = standardize_x;
                opts.standardize_y = self.standardize_y;
                AnyModel::Sparse(fit_sparse(v, x, y, &choice, &opts)?)
            }
            Family::SemiSup => {
                let y = y.expect("supervision checked above");
                let mut opts = SemiSupCcaOptions::new(nf);
                opts.alpha_x = self.alpha_x;
                opts.gamma_x = self.gamma_x;
                opts.alpha_y = self.alpha_y;
                opts.gamma_y = self.gamma_y;
                opts.graph_k = self.graph_k;
                opts.standardize_x = standardize_x;
                opts.standardize_y = self.standardize_y;
                AnyModel::SemiSupCca(fit_sskcca(x, y, unlabeled, &choice, &opts)?)
            }
        })
    }
}

/// Per-direction values of a fitted model, whatever the family calls them.
pub fn model_values(m: &AnyModel) -> Vec<f64> {
    match m {
        AnyModel::Linear(m) => m.eigenvalues.to_vec(),
        AnyModel::Kernel(m) => m.eigenvalues.to_vec(),
        AnyModel::Reduced(m) => m.eigenvalues.to_vec(),
        AnyModel::Sparse(m) => m.objectives.to_vec(),
        AnyModel::SemiSupCca(m) => m.correlations.to_vec(),
        AnyModel::Hsca(m) => m.eigenvalues.to_vec(),
    }
}

/// Self-check of the fitted normalization, for the families that state
/// one over quantities the model can rebuild.
pub fn constraint_residual(m: &AnyModel, x: &ArrayView2<f64>, chunk: usize) -> Option<f64> {
    match m {
        AnyModel::Linear(m) => m.constraint_residual(x).ok(),
        AnyModel::Kernel(m) => m.constraint_residual().ok(),
        AnyModel::Reduced(m) => m.constraint_residual(x, chunk).ok(),
        AnyModel::SemiSupCca(m) => m.constraint_residual().ok(),
        AnyModel::Sparse(_) | AnyModel::Hsca(_) => None,
    }
}

/// The kernel a fitted model resolved, when it uses one.
pub fn model_kernel(m: &AnyModel) -> Option<&KernelSpec> {
    match m {
        AnyModel::Linear(_) => None,
        AnyModel::Kernel(m) => Some(&m.kernel),
        AnyModel::Reduced(m) => Some(&m.kernel),
        AnyModel::Sparse(m) => Some(&m.kernel),
        AnyModel::SemiSupCca(m) => Some(&m.kernel),
        AnyModel::Hsca(m) => Some(&m.kernel),
    }
}

fn model_truncated(m: &AnyModel) -> bool {
    match m {
        AnyModel::Linear(m) => m.truncated,
        AnyModel::Kernel(m) => m.truncated,
        AnyModel::Reduced(m) => m.truncated,
        AnyModel::Sparse(_) => false,
        AnyModel::SemiSupCca(m) => m.truncated,
        AnyModel::Hsca(m) => m.truncated,
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub method: MethodFlags,

    /// Numeric target table (rows aligned with the data file); an
    /// alternative to a label column.
    #[arg(long)]
    pub targets: Option<PathBuf>,

    /// Extra unlabeled rows for sskcca (numeric file, same columns).
    #[arg(long)]
    pub unlabeled: Option<PathBuf>,

    /// Ridge of the least-squares readout fitted on the features.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,

    /// Matrix encoding inside the model file: bit-exact 'binary' or
    /// human-readable 'decimal'.
    #[arg(long, default_value = "binary")]
    pub encoding: String,

    /// Output model file (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &FitArgs) -> Result<()> {
    let encoding: MatrixEncoding = args.encoding.parse()?;
    if args.targets.is_some() && args.data.label_column.is_some() {
        return Err(Error::invalid(
            "give either --label-column or --targets, not both",
        ));
    }

    let mut ds = args.data.load()?;
    if let Some(path) = &args.targets {
        let t = args.data.load_numeric(path)?;
        attach_targets(&mut ds, t)?;
    }
    let family = args.method.family()?;

    let supervision = match &ds.targets {
        kmva::Targets::None => None,
        _ => Some(numeric_targets(&ds)?),
    };
    let (y, labels) = match supervision {
        Some((y, enc)) => (Some(y), enc),
        None => (None, None),
    };
    let m = y.as_ref().map(|y| y.ncols()).unwrap_or(0);
    let nf = args.method.resolve_nf(
        family,
        ds.n_rows(),
        ds.n_cols(),
        m,
        labels.as_ref().map(|e| e.n_classes()),
    );

    let unlabeled = args
        .unlabeled
        .as_ref()
        .map(|p| args.data.load_numeric(p))
        .transpose()?;
    if unlabeled.is_some() && !matches!(family, Family::SemiSup) {
        return Err(Error::invalid(
            "--unlabeled only applies to --method sskcca",
        ));
    }

    let started = Instant::now();
    let y_view = y.as_ref().map(|y| y.view());
    let u_view = unlabeled.as_ref().map(|u| u.x.view());
    let model = args
        .method
        .fit_any(family, nf, &ds.x.view(), y_view.as_ref(), u_view.as_ref())?;
    if model_truncated(&model) || model.n_features() < nf {
        eprintln!(
            "warning: extracted {} of {nf} requested features (rank limit)",
            model.n_features()
        );
    }

    // A readout head whenever targets exist; prediction commands need it.
    let head = match &y {
        Some(y) => {
            let t = model.transform(&ds.x.view())?;
            Some(LsHead::fit(&t.view(), &y.view(), args.lambda)?)
        }
        None => None,
    };
    let elapsed = started.elapsed().as_secs_f64();

    let residual = constraint_residual(&model, &ds.x.view(), args.method.chunk);
    let resolved = model_kernel(&model).map(resolved_kernel_json);
    let values = model_values(&model);

    let saved = SavedModel {
        model,
        head,
        labels,
    };
    save_model(&args.out, &saved, encoding)?;

    let config = json!({
        "command": "fit",
        "data": args.data.config_json(),
        "targets": args.targets.as_ref().map(|p| p.display().to_string()),
        "unlabeled": args.unlabeled.as_ref().map(|p| p.display().to_string()),
        "lambda": args.lambda,
        "encoding": args.encoding,
        "out": args.out.display().to_string(),
        "options": args.method.config_json(nf),
    });
    let report = json!({
        "config": config,
        "model": args.out.display().to_string(),
        "method": saved.model.kind(),
        "retained_rows": retained_rows(&saved.model),
        "n_features": saved.model.n_features(),
        "kernel": resolved,
        "values": values,
        "constraint_residual": residual,
        "readout": saved.head.is_some(),
        "elapsed_seconds": elapsed,
    });
    write_report(None, &report)
}

/// Training rows a model keeps for kernel evaluations (0 for the linear
/// family, whose transforms are a single matrix).
fn retained_rows(model: &AnyModel) -> usize {
    match model {
        AnyModel::Linear(_) => 0,
        AnyModel::Kernel(m) => m.n_train(),
        AnyModel::Reduced(m) => m.basis_size(),
        AnyModel::Sparse(m) => m.train_x.nrows(),
        AnyModel::SemiSupCca(m) => m.n_train(),
        AnyModel::Hsca(m) => m.train_x.nrows(),
    }
}
