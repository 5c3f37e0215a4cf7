//! Benchmark manifests: a TOML file lists the datasets a benchmark run
//! covers, where each one comes from (a download URL for public data,
//! or a generator recipe for synthetic data), the evaluation protocol,
//! and the expected outcome with its provenance. The runner refuses to
//! guess: public datasets that are not on disk are reported as missing
//! together with the instructions for fetching them.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::synth;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const MANIFEST_VERSION: u32 = 1;

/// Environment variable that points at the directory holding public
/// benchmark data files.
pub const DATA_DIR_ENV: &str = "KMVA_DATA_DIR";

/// Where a dataset comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// A public file the user must download (never fetched automatically).
    Public,
    /// Generated on the fly from a seeded recipe.
    Synthetic,
}

/// Recipe for a synthetic dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    /// One of `three_arcs`, `two_moons`, `blobs`.
    pub generator: String,
    pub per_class: usize,
    #[serde(default)]
    pub noise: f64,
    pub seed: u64,
    /// Blob centers, one row per class (blobs only).
    #[serde(default)]
    pub centers: Option<Vec<Vec<f64>>>,
    /// Blob spread (blobs only).
    #[serde(default)]
    pub spread: Option<f64>,
}

impl SynthSpec {
    pub fn generate(&self) -> Result<Dataset> {
        match self.generator.as_str() {
            "three_arcs" => synth::three_arcs(self.per_class, self.noise, self.seed),
            "two_moons" => synth::two_moons(self.per_class, self.noise, self.seed),
            "blobs" => {
                let centers = self.centers.as_ref().ok_or_else(|| {
                    Error::invalid("blobs recipe needs a 'centers' table of class centers")
                })?;
                if centers.is_empty() || centers[0].is_empty() {
                    return Err(Error::invalid("blob centers must be non-empty"));
                }
                let d = centers[0].len();
                let mut c = Array2::<f64>::zeros((centers.len(), d));
                for (i, row) in centers.iter().enumerate() {
                    if row.len() != d {
                        return Err(Error::invalid(
                            "blob centers must all have the same dimension",
                        ));
                    }
                    for (j, &v) in row.iter().enumerate() {
                        c[(i, j)] = v;
                    }
                }
                let spread = self.spread.unwrap_or(1.0);
                synth::blobs(self.per_class, &c.view(), spread, self.seed)
            }
            other => Err(Error::invalid(format!(
                "unknown generator '{other}' (expected three_arcs, two_moons, or blobs)"
            ))),
        }
    }
}

/// Evaluation protocol knobs for one dataset, with sensible defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolSpec {
    /// Extractor to benchmark.
    #[serde(default = "default_method")]
    pub method: String,
    /// Feature count; defaults to one less than the class count.
    #[serde(default)]
    pub n_features: Option<usize>,
    /// Kernel family.
    #[serde(default = "default_kernel")]
    pub kernel: String,
    /// Folds for the regularizer search.
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Number of independent train/test splits to average over.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Fraction of rows used for training.
    #[serde(default = "default_train_ratio")]
    pub train_ratio: f64,
    /// Absolute cap on the training-side size.
    #[serde(default = "default_train_cap")]
    pub train_cap: usize,
}

fn default_method() -> String {
    "kopls".to_string()
}
fn default_kernel() -> String {
    "rbf".to_string()
}
fn default_folds() -> usize {
    10
}
fn default_seeds() -> usize {
    10
}
fn default_train_ratio() -> f64 {
    0.6
}
fn default_train_cap() -> usize {
    500
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        ProtocolSpec {
            method: default_method(),
            n_features: None,
            kernel: default_kernel(),
            folds: default_folds(),
            seeds: default_seeds(),
            train_ratio: default_train_ratio(),
            train_cap: default_train_cap(),
        }
    }
}

/// Expected outcome and where the number comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Expectation {
    /// Metric name, e.g. `accuracy`.
    pub metric: String,
    pub mean: f64,
    /// Acceptable deviation of the measured mean from `mean`.
    pub tolerance: f64,
    /// Provenance of the number (e.g. `published` or `measured`).
    pub source: String,
    #[serde(default)]
    pub notes: Option<String>,
}

/// One dataset in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub kind: DatasetKind,
    /// File name under the data directory (public datasets).
    #[serde(default)]
    pub file: Option<String>,
    /// Where to download the file from (public datasets; informational).
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default)]
    pub rows: Option<usize>,
    /// Feature columns, label excluded.
    #[serde(default)]
    pub cols: Option<usize>,
    /// Zero-based index of the label column inside the file.
    #[serde(default)]
    pub label_column: Option<usize>,
    #[serde(default)]
    pub synth: Option<SynthSpec>,
    #[serde(default)]
    pub protocol: Option<ProtocolSpec>,
    #[serde(default)]
    pub expectation: Option<Expectation>,
}

/// The manifest file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub version: u32,
    #[serde(default)]
    pub dataset: Vec<DatasetEntry>,
}

impl BenchmarkManifest {
    pub fn entry(&self, name: &str) -> Option<&DatasetEntry> {
        self.dataset.iter().find(|d| d.name == name)
    }
}

/// Parse and validate a manifest from TOML text.
pub fn parse_manifest(text: &str) -> Result<BenchmarkManifest> {
    let manifest: BenchmarkManifest =
        toml::from_str(text).map_err(|e| Error::data(format!("cannot parse manifest: {e}")))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::data(format!(
            "unsupported manifest version {} (this build reads version {MANIFEST_VERSION})",
            manifest.version
        )));
    }
    let mut seen: Vec<&str> = Vec::new();
    for d in &manifest.dataset {
        if seen.contains(&d.name.as_str()) {
            return Err(Error::data(format!(
                "manifest lists dataset '{}' more than once",
                d.name
            )));
        }
        seen.push(&d.name);
        match d.kind {
            DatasetKind::Public => {
                if d.file.is_none() {
                    return Err(Error::data(format!(
                        "public dataset '{}' needs a 'file' name",
                        d.name
                    )));
                }
            }
            DatasetKind::Synthetic => {
                if d.synth.is_none() {
                    return Err(Error::data(format!(
                        "synthetic dataset '{}' needs a 'synth' recipe",
                        d.name
                    )));
                }
            }
        }
    }
    Ok(manifest)
}

/// Load a manifest from disk.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<BenchmarkManifest> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
        Error::data(format!(
            "cannot read manifest {}: {e}",
            path.as_ref().display()
        ))
    })?;
    parse_manifest(&text)
}

/// Availability of one manifest entry against a data directory.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetStatus {
    pub name: String,
    pub available: bool,
    /// Resolved file path for available public datasets.
    pub path: Option<PathBuf>,
    /// Human-readable availability note (download instructions when
    /// the file is missing).
    pub message: String,
}

/// Check every entry against `data_dir`. Synthetic entries are always
/// available; public entries need their file present.
pub fn verify_manifest(manifest: &BenchmarkManifest, data_dir: &Path) -> Vec<DatasetStatus> {
    manifest
        .dataset
        .iter()
        .map(|d| match d.kind {
            DatasetKind::Synthetic => DatasetStatus {
                name: d.name.clone(),
                available: true,
                path: None,
                message: "generated from a seeded recipe".to_string(),
            },
            DatasetKind::Public => {
                let file = d.file.as_deref().unwrap_or("<unnamed>");
                let path = data_dir.join(file);
                if path.is_file() {
                    DatasetStatus {
                        name: d.name.clone(),
                        available: true,
                        path: Some(path),
                        message: "found".to_string(),
                    }
                } else {
                    let hint = match &d.url {
                        Some(url) => format!(
                            "place '{file}' in {} (set {DATA_DIR_ENV} to override); download it from {url}",
                            data_dir.display()
                        ),
                        None => format!(
                            "place '{file}' in {} (set {DATA_DIR_ENV} to override)",
                            data_dir.display()
                        ),
                    };
                    DatasetStatus {
                        name: d.name.clone(),
                        available: false,
                        path: None,
                        message: hint,
                    }
                }
            }
        })
        .collect()
}

/// Resolve the data directory: explicit argument, then the
/// `KMVA_DATA_DIR` environment variable, then `assets/uci` relative to
/// the working directory and its first two ancestors (so tests running
/// inside a workspace member still find the shared assets).
pub fn resolve_data_dir(explicit: Option<PathBuf>) -> PathBuf {
    if let Some(p) = explicit {
        return p;
    }
    if let Ok(p) = std::env::var(DATA_DIR_ENV) {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    let candidates = [
        PathBuf::from("assets/uci"),
        PathBuf::from("../assets/uci"),
        PathBuf::from("../../assets/uci"),
    ];
    for c in &candidates {
        if c.is_dir() {
            return c.clone();
        }
    }
    PathBuf::from("assets/uci")
}
