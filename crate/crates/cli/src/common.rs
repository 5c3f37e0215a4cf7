//! Shared pieces of the command-line surface: dataset and kernel argument
//! groups, delimited-table output with the resolved run configuration
//! echoed as a leading `#` comment (the loader skips such lines, so our
//! own outputs stay loadable), and small JSON helpers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::{json, Value};

use kmva::data::{load_delimited, LabelColumn, LoadOptions};
use kmva::{Dataset, Error, KernelChoice, KernelSpec, Result, Sigma, Targets};

/// Parse a delimiter flag: a single character, or the word `tab`.
pub fn parse_delimiter(s: &str) -> std::result::Result<u8, String> {
    if s.eq_ignore_ascii_case("tab") || s == "\\t" {
        return Ok(b'\t');
    }
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii() => Ok(c as u8),
        _ => Err(format!("'{s}' is not a single ASCII character or 'tab'")),
    }
}

/// One delimited input file and how to read it.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Delimited data file; all fields numeric except the label column.
    pub data: PathBuf,

    /// Field delimiter (single character or 'tab'); inferred from the
    /// file extension when omitted.
    #[arg(long, value_parser = parse_delimiter)]
    pub delimiter: Option<u8>,

    /// Treat the first row as column names.
    #[arg(long)]
    pub header: bool,

    /// Column holding class labels: a zero-based index or a header name.
    #[arg(long, value_name = "COL")]
    pub label_column: Option<String>,
}

impl DataArgs {
    pub fn load_options(&self) -> LoadOptions {
        let label = self.label_column.as_deref().map(|s| {
            s.parse::<usize>()
                .map(LabelColumn::Index)
                .unwrap_or_else(|_| LabelColumn::Name(s.to_string()))
        });
        LoadOptions {
            delimiter: self.delimiter,
            has_header: self.header,
            label_column: label,
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        load_delimited(&self.data, &self.load_options())
    }

    /// Load a side table that must be purely numeric (no label column).
    pub fn load_numeric(&self, path: &Path) -> Result<Dataset> {
        load_delimited(
            path,
            &LoadOptions {
                delimiter: self.delimiter,
                has_header: self.header,
                label_column: None,
            },
        )
    }

    pub fn config_json(&self) -> Value {
        json!({
            "path": self.data.display().to_string(),
            "delimiter": self.delimiter.map(|d| (d as char).to_string()),
            "header": self.header,
            "label_column": self.label_column,
        })
    }
}

/// Kernel family and its parameters.
#[derive(Args, Debug, Clone)]
pub struct KernelArgs {
    /// Kernel family.
    #[arg(long, default_value = "rbf", value_parser = ["linear", "rbf", "cluster", "composite"])]
    pub kernel: String,

    /// RBF bandwidth: a positive number, or 'median' for the median
    /// pairwise distance of the training block.
    #[arg(long, default_value = "median")]
    pub sigma: String,

    /// Weight of the RBF part in the composite kernel, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,

    /// Independent mixture fits per component count (cluster kernel).
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,

    /// Component counts tried, 2 through depth+1 (cluster kernel).
    #[arg(long, default_value_t = 3)]
    pub depth: usize,

    /// Seed of the cluster-kernel ensemble.
    #[arg(long, default_value_t = 0)]
    pub kernel_seed: u64,
}

pub fn parse_sigma(s: &str) -> Result<Sigma> {
    if s.eq_ignore_ascii_case("median") {
        return Ok(Sigma::Median);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Sigma::Fixed(v)),
        _ => Err(Error::invalid(format!(
            "--sigma must be a positive number or 'median', got '{s}'"
        ))),
    }
}

impl KernelArgs {
    pub fn choice(&self) -> Result<KernelChoice> {
        Ok(match self.kernel.as_str() {
            "linear" => KernelChoice::Linear,
            "rbf" => KernelChoice::Rbf {
                sigma: parse_sigma(&self.sigma)?,
            },
            "cluster" => KernelChoice::Cluster {
                restarts: self.restarts,
                depth: self.depth,
                seed: self.kernel_seed,
            },
            "composite" => {
                if !(0.0..=1.0).contains(&self.beta) {
                    return Err(Error::invalid(format!(
                        "--beta must lie in [0, 1], got {}",
                        self.beta
                    )));
                }
                KernelChoice::Composite {
                    sigma: parse_sigma(&self.sigma)?,
                    beta: self.beta,
                    restarts: self.restarts,
                    depth: self.depth,
                    seed: self.kernel_seed,
                }
            }
            other => {
                return Err(Error::invalid(format!(
                    "unknown kernel '{other}' (expected linear, rbf, cluster, or composite)"
                )))
            }
        })
    }

    pub fn config_json(&self) -> Value {
        match self.kernel.as_str() {
            "linear" => json!({"family": "linear"}),
            "rbf" => json!({"family": "rbf", "sigma": self.sigma}),
            "cluster" => json!({
                "family": "cluster",
                "restarts": self.restarts,
                "depth": self.depth,
                "seed": self.kernel_seed,
            }),
            _ => json!({
                "family": "composite",
                "sigma": self.sigma,
                "beta": self.beta,
                "restarts": self.restarts,
                "depth": self.depth,
                "seed": self.kernel_seed,
            }),
        }
    }
}

/// The fitted kernel with every parameter resolved to a number, for
/// reports ("--sigma median" records the concrete bandwidth used).
pub fn resolved_kernel_json(spec: &KernelSpec) -> Value {
    match spec {
        KernelSpec::Linear => json!({"family": "linear"}),
        KernelSpec::Rbf { sigma } => json!({"family": "rbf", "sigma": sigma}),
        KernelSpec::Cluster { model } => json!({
            "family": "cluster",
            "mixtures": model.mixtures.len(),
        }),
        KernelSpec::Composite { sigma, beta, model } => json!({
            "family": "composite",
            "sigma": sigma,
            "beta": beta,
            "mixtures": model.mixtures.len(),
        }),
    }
}

/// Numeric targets attached from a side file, replacing any labels.
pub fn attach_targets(ds: &mut Dataset, targets: Dataset) -> Result<()> {
    if targets.n_rows() != ds.n_rows() {
        return Err(Error::data(format!(
            "target table has {} rows but the data has {}",
            targets.n_rows(),
            ds.n_rows()
        )));
    }
    ds.targets = Targets::Values(targets.x);
    Ok(())
}

/// Open `--out` (or stdout when absent) for buffered writing.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| Error::io(p.display().to_string(), e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(std::io::stdout()))),
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<output>".to_string(), e)
}

/// Write a tidy delimited table: the run configuration as a `#` comment,
/// a header row, then the data rows.
pub fn write_table(
    out: &mut dyn Write,
    config: &Value,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    writeln!(out, "# kmva-config: {config}").map_err(io_err)?;
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        writeln!(out, "{}", row.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Pretty-print a report object (config included) to `--out` or stdout.
pub fn write_report(path: Option<&Path>, report: &Value) -> Result<()> {
    let mut out = open_output(path)?;
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::model(format!("cannot serialize the report: {e}")))?;
    writeln!(out, "{text}").map_err(io_err)?;
    out.flush().map_err(io_err)
}

/// Shortest-round-trip decimal for table cells; empty for missing.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
