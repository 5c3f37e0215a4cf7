//! The `benchmark` command: run the manifest's datasets through the
//! standardized split/standardize/median-sigma/CV protocol and emit one
//! tidy row per (dataset, method, feature count) cell. Cells fail
//! independently; expectations from the manifest are checked when a cell
//! matches the protocol they were recorded under.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use kmva::data::{LabelColumn, LoadOptions};
use kmva::manifest::{load_manifest, resolve_data_dir, verify_manifest, DatasetEntry, DatasetKind};
use kmva::protocol::{options_from_spec, run_benchmark, ProtocolOptions};
use kmva::{Dataset, Error, KernelChoice, KernelMethod, Result};

use crate::common::{fmt_opt, open_output, write_table};

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Manifest of datasets, protocols, and expected envelopes.
    #[arg(long, default_value = "assets/benchmark-manifest.toml")]
    pub manifest: PathBuf,

    /// Directory holding the public dataset files; defaults to the
    /// KMVA_DATA_DIR environment variable, then assets/uci.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,

    /// Only run the named datasets (repeatable).
    #[arg(long = "dataset")]
    pub datasets: Vec<String>,

    /// Override the manifest's method per dataset (repeatable): linear
    /// tags run through the identical protocol with a linear kernel.
    #[arg(long = "method")]
    pub methods: Vec<String>,

    /// Sweep these feature counts (repeatable); the protocol default
    /// (classes - 1) when omitted.
    #[arg(long = "nf")]
    pub nfs: Vec<usize>,

    /// Override the number of train/test splits per cell.
    #[arg(long)]
    pub seeds: Option<usize>,

    /// Only report which manifest entries are available, then exit.
    #[arg(long)]
    pub verify: bool,

    /// Output table; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Map a benchmark method tag onto the kernel-dual engine: the linear
/// tags are their kernel twins under a linear kernel (the features
/// provably agree), so every cell runs the same protocol.
fn cell_options(base: &ProtocolOptions, tag: &str) -> Result<ProtocolOptions> {
    let lower = tag.to_ascii_lowercase();
    let mut opts = base.clone();
    if let Some(km) = KernelMethod::from_name(&lower) {
        opts.method = km;
        return Ok(opts);
    }
    let kernel_twin = format!("k{lower}");
    if let Some(km) = KernelMethod::from_name(&kernel_twin) {
        opts.method = km;
        opts.kernel = KernelChoice::Linear;
        return Ok(opts);
    }
    Err(Error::invalid(format!(
        "unknown benchmark method '{tag}' (pca, pls2, cca, opls, kpca, kpls2, kcca, kopls)"
    )))
}

fn load_public(entry: &DatasetEntry, dir: &std::path::Path) -> Result<Dataset> {
    let file = entry
        .file
        .as_ref()
        .ok_or_else(|| Error::data(format!("public dataset '{}' lists no file", entry.name)))?;
    let path = dir.join(file);
    let ds = kmva::data::load_delimited(
        &path,
        &LoadOptions {
            delimiter: None,
            has_header: false,
            label_column: entry.label_column.map(LabelColumn::Index),
        },
    )?;
    if let Some(rows) = entry.rows {
        if ds.n_rows() != rows {
            return Err(Error::data(format!(
                "'{}' has {} rows but the manifest says {rows}",
                entry.name,
                ds.n_rows()
            )));
        }
    }
    if let Some(cols) = entry.cols {
        if ds.n_cols() != cols {
            return Err(Error::data(format!(
                "'{}' has {} feature columns but the manifest says {cols}",
                entry.name,
                ds.n_cols()
            )));
        }
    }
    Ok(ds)
}

pub fn run(args: &BenchmarkArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let data_dir = resolve_data_dir(args.data_dir.clone());

    let config = json!({
        "command": "benchmark",
        "manifest": args.manifest.display().to_string(),
        "data_dir": data_dir.display().to_string(),
        "datasets": args.datasets,
        "methods": args.methods,
        "nf_sweep": args.nfs,
        "seeds": args.seeds,
    });

    if args.verify {
        let rows: Vec<Vec<String>> = verify_manifest(&manifest, &data_dir)
            .into_iter()
            .map(|s| {
                vec![
                    s.name,
                    if s.available { "yes" } else { "no" }.to_string(),
                    s.path
                        .map(|p| p.display().to_string())
                        .unwrap_or_default(),
                    s.message,
                ]
            })
            .collect();
        let mut out = open_output(args.out.as_deref())?;
        return write_table(
            &mut out,
            &config,
            &["dataset", "available", "path", "note"],
            &rows,
        );
    }

    let selected: Vec<&DatasetEntry> = manifest
        .dataset
        .iter()
        .filter(|d| args.datasets.is_empty() || args.datasets.contains(&d.name))
        .collect();
    if selected.is_empty() {
        return Err(Error::invalid(format!(
            "no manifest entry matches {:?}; available: {:?}",
            args.datasets,
            manifest.dataset.iter().map(|d| &d.name).collect::<Vec<_>>()
        )));
    }

    let header = [
        "dataset", "method", "nf", "seeds", "mean_accuracy", "std_accuracy", "mean_mse",
        "expected", "tolerance", "status", "note",
    ];
    let mut rows: Vec<Vec<String>> = Vec::new();

    for entry in selected {
        let protocol = entry.protocol.clone().unwrap_or_default();
        let n_seeds = args.seeds.unwrap_or(protocol.seeds).max(1);
        let seeds: Vec<u64> = (0..n_seeds as u64).collect();

        let ds = match entry.kind {
            DatasetKind::Synthetic => entry
                .synth
                .as_ref()
                .ok_or_else(|| {
                    Error::data(format!("synthetic dataset '{}' lacks a recipe", entry.name))
                })
                .and_then(|s| s.generate()),
            DatasetKind::Public => load_public(entry, &data_dir),
        };
        let ds = match ds {
            Ok(ds) => ds,
            Err(e) => {
                rows.push(vec![
                    entry.name.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "skipped".to_string(),
                    e.to_string().replace(',', ";"),
                ]);
                continue;
            }
        };

        let base = options_from_spec(&protocol)?;
        let methods: Vec<String> = if args.methods.is_empty() {
            vec![protocol.method.clone()]
        } else {
            args.methods.clone()
        };
        let nfs: Vec<Option<usize>> = if args.nfs.is_empty() {
            vec![protocol.n_features]
        } else {
            args.nfs.iter().map(|&n| Some(n)).collect()
        };

        for tag in &methods {
            for nf in &nfs {
                let summary = cell_options(&base, tag).and_then(|mut opts| {
                    opts.n_features = *nf;
                    run_benchmark(&ds, &entry.name, &opts, &seeds)
                });
                match summary {
                    Ok(summary) => {
                        let nf_used = summary.runs.first().map(|r| r.n_features).unwrap_or(0);
                        // An expectation applies to the protocol it was
                        // measured under: stock method and feature count.
                        let default_cell = tag.eq_ignore_ascii_case(&protocol.method)
                            && (nf.is_none() || *nf == protocol.n_features)
                            && args.seeds.is_none();
                        let (expected, tolerance, status, note) =
                            match (&entry.expectation, default_cell) {
                                (Some(e), true) => {
                                    let mean = summary.mean_accuracy.unwrap_or(f64::NAN);
                                    let ok = (mean - e.mean).abs() <= e.tolerance;
                                    (
                                        Some(e.mean),
                                        Some(e.tolerance),
                                        if ok { "pass" } else { "fail" }.to_string(),
                                        format!("expected per {} source", e.source),
                                    )
                                }
                                _ => (None, None, "ok".to_string(), String::new()),
                            };
                        rows.push(vec![
                            entry.name.clone(),
                            tag.to_ascii_lowercase(),
                            nf_used.to_string(),
                            n_seeds.to_string(),
                            fmt_opt(summary.mean_accuracy),
                            fmt_opt(summary.std_accuracy),
                            fmt_opt(summary.mean_mse),
                            fmt_opt(expected),
                            fmt_opt(tolerance),
                            status,
                            note,
                        ]);
                    }
                    Err(e) => {
                        rows.push(vec![
                            entry.name.clone(),
                            tag.to_ascii_lowercase(),
                            nf.map(|n| n.to_string()).unwrap_or_default(),
                            n_seeds.to_string(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            "error".to_string(),
                            e.to_string().replace(',', ";"),
                        ]);
                    }
                }
            }
        }
    }

    let mut out = open_output(args.out.as_deref())?;
    write_table(&mut out, &config, &header, &rows)
}
