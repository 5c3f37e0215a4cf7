//! The `transform`, `predict`, and `eval` commands: everything that loads
//! a fitted model file and runs data through it.

use std::path::PathBuf;

use clap::Args;
use ndarray::Array2;
use serde_json::{json, Value};

use kmva::model_io::load_model;
use kmva::predict::{evaluate_labels, evaluate_regression, predict_wta};
use kmva::protocol::numeric_targets;
use kmva::{Dataset, Error, Result, SavedModel, Targets};

use crate::common::{fmt_opt, open_output, write_table, DataArgs};

fn load_bundle(path: &PathBuf) -> Result<SavedModel> {
    load_model(path)
}

fn base_config(command: &str, model: &PathBuf, data: &DataArgs, out: &Option<PathBuf>) -> Value {
    json!({
        "command": command,
        "model": model.display().to_string(),
        "data": data.config_json(),
        "out": out.as_ref().map(|p| p.display().to_string()),
    })
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    /// Fitted model file (JSON, from `kmva fit`).
    pub model: PathBuf,

    #[command(flatten)]
    pub data: DataArgs,

    /// Output table; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_transform(args: &TransformArgs) -> Result<()> {
    let saved = load_bundle(&args.model)?;
    let ds = args.data.load()?;
    let t = saved.model.transform(&ds.x.view())?;

    let header: Vec<String> = (0..t.ncols()).map(|j| format!("t{j}")).collect();
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<String>> = t
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.to_string()).collect())
        .collect();
    let config = base_config("transform", &args.model, &args.data, &args.out);
    let mut out = open_output(args.out.as_deref())?;
    write_table(&mut out, &config, &header_refs, &rows)
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Fitted model file with a readout (fit with targets present).
    pub model: PathBuf,

    #[command(flatten)]
    pub data: DataArgs,

    /// Emit raw readout scores (one column per target) instead of
    /// winner-takes-all labels.
    #[arg(long)]
    pub scores: bool,

    /// Output table; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Readout scores for a data block, or a clear error when the model was
/// fitted without targets.
fn model_scores(saved: &SavedModel, ds: &Dataset) -> Result<Array2<f64>> {
    let head = saved.head.as_ref().ok_or_else(|| {
        Error::model("this model has no readout; refit with a label column or --targets")
    })?;
    let t = saved.model.transform(&ds.x.view())?;
    head.predict(&t.view())
}

pub fn run_predict(args: &PredictArgs) -> Result<()> {
    let saved = load_bundle(&args.model)?;
    let ds = args.data.load()?;
    let scores = model_scores(&saved, &ds)?;
    let config = base_config("predict", &args.model, &args.data, &args.out);
    let mut out = open_output(args.out.as_deref())?;

    if args.scores {
        let header: Vec<String> = (0..scores.ncols()).map(|j| format!("s{j}")).collect();
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let rows: Vec<Vec<String>> = scores
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect())
            .collect();
        return write_table(&mut out, &config, &header_refs, &rows);
    }

    match &saved.labels {
        Some(enc) => {
            let idx = predict_wta(&scores.view());
            let rows: Vec<Vec<String>> = idx
                .iter()
                .map(|&i| Ok(vec![enc.class_of(i)?.to_string()]))
                .collect::<Result<_>>()?;
            write_table(&mut out, &config, &["prediction"], &rows)
        }
        None => {
            let header: Vec<String> = (0..scores.ncols()).map(|j| format!("y{j}")).collect();
            let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            let rows: Vec<Vec<String>> = scores
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|v| v.to_string()).collect())
                .collect();
            write_table(&mut out, &config, &header_refs, &rows)
        }
    }
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Fitted model file with a readout.
    pub model: PathBuf,

    #[command(flatten)]
    pub data: DataArgs,

    /// Numeric target table (rows aligned with the data file); an
    /// alternative to a label column.
    #[arg(long)]
    pub targets: Option<PathBuf>,

    /// Output table; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_eval(args: &EvalArgs) -> Result<()> {
    let saved = load_bundle(&args.model)?;
    let mut ds = args.data.load()?;
    if let Some(path) = &args.targets {
        let t = args.data.load_numeric(path)?;
        crate::common::attach_targets(&mut ds, t)?;
    }

    let scores = model_scores(&saved, &ds)?;
    let report = match &ds.targets {
        Targets::None => {
            return Err(Error::invalid(
                "evaluation needs ground truth: give a label column or --targets",
            ))
        }
        Targets::Labels(labels) => {
            // Score against the label table the model was trained with, so
            // novel label strings fail loudly instead of silently scoring 0.
            let enc = saved.labels.as_ref().ok_or_else(|| {
                Error::model("the model carries no label table but the data has labels")
            })?;
            let truth: Vec<usize> = labels
                .iter()
                .map(|s| enc.index_of(s))
                .collect::<Result<_>>()?;
            let pred = predict_wta(&scores.view());
            evaluate_labels(&truth, &pred)?
        }
        Targets::Values(_) => {
            let (y, _) = numeric_targets(&ds)?;
            evaluate_regression(&y.view(), &scores.view())?
        }
    };

    let config = base_config("eval", &args.model, &args.data, &args.out);
    let row = vec![
        report.n_test.to_string(),
        fmt_opt(report.accuracy),
        fmt_opt(report.accuracy_std),
        fmt_opt(report.mse),
        fmt_opt(report.rmse),
    ];
    let mut out = open_output(args.out.as_deref())?;
    write_table(
        &mut out,
        &config,
        &["n_test", "accuracy", "accuracy_std", "mse", "rmse"],
        &[row],
    )
}
