//! The `crossval` command: a k-fold generalization estimate for one
//! extractor configuration, with the readout refitted inside every fold.

use std::path::PathBuf;

use clap::Args;
use ndarray::Axis;
use serde_json::json;

use kmva::data::kfold;
use kmva::predict::{evaluate_labels, evaluate_regression, predict_wta};
use kmva::protocol::numeric_targets;
use kmva::{Error, LsHead, Result, Targets};

use crate::common::{attach_targets, fmt_opt, open_output, write_table, DataArgs};
use crate::fit::MethodFlags;

#[derive(Args, Debug)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub method: MethodFlags,

    /// Numeric target table (rows aligned with the data file); an
    /// alternative to a label column.
    #[arg(long)]
    pub targets: Option<PathBuf>,

    /// Number of folds.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,

    /// Ridge of the per-fold least-squares readout.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,

    /// Output table; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run(args: &CrossvalArgs) -> Result<()> {
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
    if matches!(ds.targets, Targets::None) {
        return Err(Error::invalid(
            "cross-validation needs ground truth: give a label column or --targets",
        ));
    }

    // One label table for every fold, so class indices stay aligned even
    // when a fold misses a class.
    let (y, enc) = numeric_targets(&ds)?;
    let labels = ds.labels().map(<[String]>::to_vec);
    let family = args.method.family()?;
    let folds = kfold(ds.n_rows(), args.folds, args.method.seed)?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut accs: Vec<f64> = Vec::new();
    let mut mses: Vec<f64> = Vec::new();
    let mut nf_used = 0usize;

    for (fold, (train_idx, test_idx)) in folds.iter().enumerate() {
        let x_tr = ds.x.select(Axis(0), train_idx);
        let y_tr = y.select(Axis(0), train_idx);
        let x_te = ds.x.select(Axis(0), test_idx);

        let nf = args.method.resolve_nf(
            family,
            x_tr.nrows(),
            x_tr.ncols(),
            y_tr.ncols(),
            enc.as_ref().map(|e| e.n_classes()),
        );
        nf_used = nf;
        let model = args
            .method
            .fit_any(family, nf, &x_tr.view(), Some(&y_tr.view()), None)?;
        let t_tr = model.transform(&x_tr.view())?;
        let head = LsHead::fit(&t_tr.view(), &y_tr.view(), args.lambda)?;
        let scores = head.predict(&model.transform(&x_te.view())?.view())?;

        let report = match (&labels, &enc) {
            (Some(labels), Some(enc)) => {
                let truth: Vec<usize> = test_idx
                    .iter()
                    .map(|&i| enc.index_of(&labels[i]))
                    .collect::<Result<_>>()?;
                let pred = predict_wta(&scores.view());
                evaluate_labels(&truth, &pred)?
            }
            _ => {
                let y_te = y.select(Axis(0), test_idx);
                evaluate_regression(&y_te.view(), &scores.view())?
            }
        };
        if let Some(a) = report.accuracy {
            accs.push(a);
        }
        if let Some(m) = report.mse {
            mses.push(m);
        }
        rows.push(vec![
            fold.to_string(),
            report.n_test.to_string(),
            fmt_opt(report.accuracy),
            fmt_opt(report.accuracy_std),
            fmt_opt(report.mse),
            fmt_opt(report.rmse),
        ]);
    }

    // Aggregate rows: mean over folds, and the spread across them.
    let (acc_mean, acc_std) = if accs.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&accs);
        (Some(m), Some(s))
    };
    let (mse_mean, _) = if mses.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&mses);
        (Some(m), Some(s))
    };
    rows.push(vec![
        "mean".to_string(),
        ds.n_rows().to_string(),
        fmt_opt(acc_mean),
        fmt_opt(acc_std),
        fmt_opt(mse_mean),
        fmt_opt(mse_mean.map(f64::sqrt)),
    ]);

    let config = json!({
        "command": "crossval",
        "data": args.data.config_json(),
        "targets": args.targets.as_ref().map(|p| p.display().to_string()),
        "folds": args.folds,
        "lambda": args.lambda,
        "out": args.out.as_ref().map(|p| p.display().to_string()),
        "options": args.method.config_json(nf_used),
    });
    let mut out = open_output(args.out.as_deref())?;
    write_table(
        &mut out,
        &config,
        &["fold", "n_test", "accuracy", "accuracy_std", "mse", "rmse"],
        &rows,
    )
}
