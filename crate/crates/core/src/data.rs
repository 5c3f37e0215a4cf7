//! Dataset loading and preparation: delimited-file parsing, label
//! encoding, column centering/standardization, and deterministic
//! train/test splits and cross-validation folds.

use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Supervision attached to a dataset: numeric targets, discrete labels,
/// or nothing (purely unsupervised use).
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    None,
    /// l x m numeric target matrix.
    Values(Array2<f64>),
    /// One discrete label per row.
    Labels(Vec<String>),
}

/// An in-memory dataset: inputs plus optional supervision.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub targets: Targets,
}

impl Dataset {
    pub fn new(x: Array2<f64>, targets: Targets) -> Result<Self> {
        match &targets {
            Targets::Values(y) if y.nrows() != x.nrows() => {
                return Err(Error::data(format!(
                    "inputs have {} rows but targets have {}",
                    x.nrows(),
                    y.nrows()
                )))
            }
            Targets::Labels(l) if l.len() != x.nrows() => {
                return Err(Error::data(format!(
                    "inputs have {} rows but {} labels were given",
                    x.nrows(),
                    l.len()
                )))
            }
            _ => {}
        }
        Ok(Dataset { x, targets })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    /// Row subset in the given order (used by splits and folds).
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        for &i in idx {
            if i >= self.n_rows() {
                return Err(Error::invalid(format!(
                    "row index {i} out of bounds for {} rows",
                    self.n_rows()
                )));
            }
        }
        let x = self.x.select(Axis(0), idx);
        let targets = match &self.targets {
            Targets::None => Targets::None,
            Targets::Values(y) => Targets::Values(y.select(Axis(0), idx)),
            Targets::Labels(l) => Targets::Labels(idx.iter().map(|&i| l[i].clone()).collect()),
        };
        Ok(Dataset { x, targets })
    }

    pub fn labels(&self) -> Option<&[String]> {
        match &self.targets {
            Targets::Labels(l) => Some(l),
            _ => None,
        }
    }
}

/// Which column of a delimited file holds the labels.
#[derive(Debug, Clone)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

/// Options for [`load_delimited`].
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Field delimiter; when `None` it is inferred from the extension
    /// (`.tsv`/`.tab` use tabs, everything else commas).
    pub delimiter: Option<u8>,
    pub has_header: bool,
    pub label_column: Option<LabelColumn>,
}

/// Load a numeric delimited file, optionally peeling one column off as
/// discrete labels. All remaining fields must parse as floats; parse
/// problems are reported with one-based line/column positions.
pub fn load_delimited(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let delim = opts.delimiter.unwrap_or_else(|| {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => b'\t',
            _ => b',',
        }
    });
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(opts.has_header)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::data(format!("cannot open {path_str}: {e}")))?;

    let header: Option<Vec<String>> = if opts.has_header {
        Some(
            reader
                .headers()
                .map_err(|e| Error::data(format!("cannot read header of {path_str}: {e}")))?
                .iter()
                .map(|s| s.trim().to_string())
                .collect(),
        )
    } else {
        None
    };

    let mut label_idx: Option<usize> = None;
    if let Some(sel) = &opts.label_column {
        label_idx = Some(match sel {
            LabelColumn::Index(i) => *i,
            LabelColumn::Name(name) => {
                let hdr = header.as_ref().ok_or_else(|| {
                    Error::invalid("a label column name needs a file with a header row")
                })?;
                hdr.iter().position(|h| h == name).ok_or_else(|| {
                    Error::data(format!("label column '{name}' not found in {path_str}"))
                })?
            }
        });
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;
    let header_lines = if opts.has_header { 1 } else { 0 };
    for (rec_no, rec) in reader.records().enumerate() {
        let line = rec_no + 1 + header_lines;
        let rec = rec.map_err(|e| Error::data(format!("cannot read {path_str}:{line}: {e}")))?;
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::Parse {
                    path: path_str,
                    line,
                    column: rec.len(),
                    message: format!("ragged row: expected {w} fields, found {}", rec.len()),
                })
            }
            _ => {}
        }
        if let Some(li) = label_idx {
            if li >= rec.len() {
                return Err(Error::Parse {
                    path: path_str,
                    line,
                    column: li + 1,
                    message: format!("label column {li} out of range for {} fields", rec.len()),
                });
            }
        }
        let mut row = Vec::with_capacity(rec.len());
        for (col, field) in rec.iter().enumerate() {
            if Some(col) == label_idx {
                labels.push(field.trim().to_string());
                continue;
            }
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                path: path_str.clone(),
                line,
                column: col + 1,
                message: format!("expected a number, found '{}'", field.trim()),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::data(format!("{path_str} holds no data rows")));
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(Error::data(format!("{path_str} has no feature columns")));
    }
    let mut x = Array2::<f64>::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    let targets = if label_idx.is_some() {
        Targets::Labels(labels)
    } else {
        Targets::None
    };
    Dataset::new(x, targets)
}

/// One-hot encoding of discrete labels. Class order is first appearance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LabelEncoding {
    pub classes: Vec<String>,
}

impl LabelEncoding {
    pub fn fit(labels: &[String]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::data("cannot encode an empty label sequence"));
        }
        let mut classes: Vec<String> = Vec::new();
        for l in labels {
            if !classes.iter().any(|c| c == l) {
                classes.push(l.clone());
            }
        }
        if classes.len() < 2 {
            return Err(Error::data(format!(
                "need at least two classes, found only '{}'",
                classes[0]
            )));
        }
        Ok(LabelEncoding { classes })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::data(format!("unknown label '{label}'")))
    }

    /// 1-of-c matrix, one row per label.
    pub fn one_hot(&self, labels: &[String]) -> Result<Array2<f64>> {
        let mut y = Array2::<f64>::zeros((labels.len(), self.classes.len()));
        for (i, l) in labels.iter().enumerate() {
            y[(i, self.index_of(l)?)] = 1.0;
        }
        Ok(y)
    }

    pub fn class_of(&self, index: usize) -> Result<&str> {
        self.classes
            .get(index)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::invalid(format!("class index {index} out of range")))
    }
}

/// Column means/scales learned on training data and replayed on new data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CenteringStats {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl CenteringStats {
    /// Identity statistics (apply() is a no-op) for the given width.
    pub fn identity(d: usize) -> Self {
        CenteringStats {
            mean: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, m: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if m.ncols() != self.dim() {
            return Err(Error::data(format!(
                "statistics cover {} columns but the matrix has {}",
                self.dim(),
                m.ncols()
            )));
        }
        let mut out = m.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let mu = self.mean[j];
            let s = self.scale[j];
            col.mapv_inplace(|v| (v - mu) / s);
        }
        Ok(out)
    }
}

/// Center columns to zero mean and, optionally, unit sample variance
/// (ddof = 1; zero-variance columns keep scale 1). Returns the
/// transformed matrix and the replayable statistics.
pub fn center_fit_apply(
    m: &ArrayView2<f64>,
    standardize: bool,
) -> Result<(Array2<f64>, CenteringStats)> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::data("cannot center an empty matrix"));
    }
    crate::linalg::ensure_finite("centering input", m)?;
    let l = m.nrows() as f64;
    let mean: Vec<f64> = m
        .columns()
        .into_iter()
        .map(|c| c.iter().sum::<f64>() / l)
        .collect();
    let scale: Vec<f64> = if standardize && m.nrows() > 1 {
        m.columns()
            .into_iter()
            .enumerate()
            .map(|(j, c)| {
                let var =
                    c.iter().map(|&v| (v - mean[j]) * (v - mean[j])).sum::<f64>() / (l - 1.0);
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect()
    } else {
        vec![1.0; m.ncols()]
    };
    let stats = CenteringStats { mean, scale };
    let out = stats.apply(m)?;
    Ok((out, stats))
}

/// How to carve the train side out of a dataset.
#[derive(Debug, Clone)]
pub struct SplitSpec {
    /// Fraction of rows assigned to training, in (0, 1).
    pub train_ratio: f64,
    /// Optional absolute cap on the training-side size.
    pub train_cap: Option<usize>,
    /// Keep per-class proportions when labels are present.
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_ratio: 0.6,
            train_cap: None,
            stratified: true,
            seed: 0,
        }
    }
}

/// Deterministic train/test split. Returns (train, test) row indices that
/// are disjoint and exhaustive. Stratification applies only when the
/// dataset carries labels; class shares are apportioned by largest
/// remainder so the train size is met exactly.
pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let l = ds.n_rows();
    if l < 2 {
        return Err(Error::data("need at least two rows to split"));
    }
    if !(spec.train_ratio > 0.0 && spec.train_ratio < 1.0) {
        return Err(Error::invalid(format!(
            "train ratio must lie strictly inside (0, 1), got {}",
            spec.train_ratio
        )));
    }
    let mut n_train = (spec.train_ratio * l as f64).round() as usize;
    if let Some(cap) = spec.train_cap {
        n_train = n_train.min(cap);
    }
    n_train = n_train.clamp(1, l - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (train, test): (Vec<usize>, Vec<usize>) = match (spec.stratified, ds.labels()) {
        (true, Some(labels)) => {
            // Group rows by class in first-appearance order.
            let mut class_names: Vec<&String> = Vec::new();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for (i, lab) in labels.iter().enumerate() {
                match class_names.iter().position(|c| *c == lab) {
                    Some(g) => groups[g].push(i),
                    None => {
                        class_names.push(lab);
                        groups.push(vec![i]);
                    }
                }
            }
            // Largest-remainder apportionment of n_train across classes.
            let quotas: Vec<f64> = groups
                .iter()
                .map(|g| n_train as f64 * g.len() as f64 / l as f64)
                .collect();
            let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
            let assigned: usize = counts.iter().sum();
            let mut remainders: Vec<(usize, f64)> = quotas
                .iter()
                .enumerate()
                .map(|(i, q)| (i, q - q.floor()))
                .collect();
            remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            for (i, _) in remainders.iter().take(n_train - assigned) {
                counts[*i] += 1;
            }
            for (g, c) in groups.iter().zip(counts.iter()) {
                if *c > g.len() {
                    return Err(Error::data(
                        "stratified split assigns more training rows to a class than it has",
                    ));
                }
            }
            let mut train = Vec::with_capacity(n_train);
            let mut test = Vec::with_capacity(l - n_train);
            for (g, c) in groups.iter_mut().zip(counts.iter()) {
                g.shuffle(&mut rng);
                train.extend_from_slice(&g[..*c]);
                test.extend_from_slice(&g[*c..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            (train, test)
        }
        _ => {
            let mut idx: Vec<usize> = (0..l).collect();
            idx.shuffle(&mut rng);
            let mut train = idx[..n_train].to_vec();
            let mut test = idx[n_train..].to_vec();
            train.sort_unstable();
            test.sort_unstable();
            (train, test)
        }
    };
    if train.is_empty() || test.is_empty() {
        return Err(Error::data("split left one side empty"));
    }
    Ok((train, test))
}

/// Deterministic k-fold partition of `0..l`: returns (train, validation)
/// index pairs. Folds are disjoint, cover every row, and differ in size
/// by at most one.
pub fn kfold(l: usize, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    if k > l {
        return Err(Error::invalid(format!(
            "cannot make {k} folds out of {l} rows"
        )));
    }
    let mut idx: Vec<usize> = (0..l).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let base = l / k;
    let extra = l % k;
    let mut out = Vec::with_capacity(k);
    let mut start = 0usize;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let val: Vec<usize> = idx[start..start + size].to_vec();
        let train: Vec<usize> = idx[..start]
            .iter()
            .chain(idx[start + size..].iter())
            .cloned()
            .collect();
        out.push((train, val));
        start += size;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use std::io::Write;

    fn write_temp(content: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new()
            .suffix(ext)
            .tempfile()
            .expect("temp file");
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn loads_csv_with_header_and_named_label_column() {
        let f = write_temp("a,b,class\n1.0,2.0,pos\n3.0,4.5,neg\n", ".csv");
        let ds = load_delimited(
            f.path(),
            &LoadOptions {
                has_header: true,
                label_column: Some(LabelColumn::Name("class".into())),
                ..LoadOptions::default()
            },
        )
        .unwrap();
        assert_eq!(ds.x, array![[1.0, 2.0], [3.0, 4.5]]);
        assert_eq!(
            ds.labels().unwrap(),
            &["pos".to_string(), "neg".to_string()]
        );
    }

    #[test]
    fn infers_tab_delimiter_from_extension() {
        let f = write_temp("1.0\t2.0\n3.0\t4.0\n", ".tsv");
        let ds = load_delimited(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.x.dim(), (2, 2));
        assert_abs_diff_eq!(ds.x[(1, 1)], 4.0);
    }

    #[test]
    fn reports_parse_location() {
        let f = write_temp("1.0,2.0\n3.0,oops\n", ".csv");
        let err = load_delimited(f.path(), &LoadOptions::default()).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!((line, column), (2, 2));
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_ragged_rows_and_empty_files() {
        let f = write_temp("1.0,2.0\n3.0\n", ".csv");
        assert!(matches!(
            load_delimited(f.path(), &LoadOptions::default()),
            Err(Error::Parse { .. })
        ));
        let empty = write_temp("", ".csv");
        assert!(matches!(
            load_delimited(empty.path(), &LoadOptions::default()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn label_encoding_uses_first_appearance_order() {
        let labels: Vec<String> = ["b", "a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let enc = LabelEncoding::fit(&labels).unwrap();
        assert_eq!(enc.classes, vec!["b", "a", "c"]);
        let y = enc.one_hot(&labels).unwrap();
        assert_eq!(y.dim(), (4, 3));
        assert_eq!(y.row(0).to_vec(), vec![1.0, 0.0, 0.0]);
        assert_eq!(y.row(1).to_vec(), vec![0.0, 1.0, 0.0]);
        assert_eq!(y.row(3).to_vec(), vec![0.0, 0.0, 1.0]);
        // Every row sums to one.
        for r in y.rows() {
            assert_abs_diff_eq!(r.sum(), 1.0);
        }
    }

    #[test]
    fn label_encoding_rejects_single_class_and_unknowns() {
        let one: Vec<String> = vec!["x".into(), "x".into()];
        assert!(matches!(LabelEncoding::fit(&one), Err(Error::Data(_))));
        let labels: Vec<String> = vec!["a".into(), "b".into()];
        let enc = LabelEncoding::fit(&labels).unwrap();
        assert!(enc.one_hot(&["z".to_string()]).is_err());
    }

    #[test]
    fn centering_hand_case_and_unit_sample_variance() {
        let m = array![[1.0, 5.0], [1.0, 9.0]];
        let (c, stats) = center_fit_apply(&m.view(), true).unwrap();
        assert_abs_diff_eq!(stats.mean[0], 1.0);
        assert_abs_diff_eq!(stats.mean[1], 7.0);
        // Constant column keeps scale 1 instead of dividing by zero.
        assert_abs_diff_eq!(stats.scale[0], 1.0);
        assert_abs_diff_eq!(stats.scale[1], 8.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(c[(0, 0)], 0.0);
        assert_abs_diff_eq!(c[(1, 0)], 0.0);
        // Sample variance (ddof = 1) of the scaled column is exactly 1.
        let mean = (c[(0, 1)] + c[(1, 1)]) / 2.0;
        let var = (c[(0, 1)] - mean).powi(2) + (c[(1, 1)] - mean).powi(2);
        assert_abs_diff_eq!(var, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn centering_replays_on_new_data() {
        let m = array![[2.0, 1.0], [4.0, 3.0], [6.0, 8.0]];
        let (_, stats) = center_fit_apply(&m.view(), true).unwrap();
        let fresh = array![[2.0, 1.0]];
        let t = stats.apply(&fresh.view()).unwrap();
        assert_abs_diff_eq!(t[(0, 0)], (2.0 - stats.mean[0]) / stats.scale[0]);
        // Training columns end up mean-zero within tight tolerance.
        let (c, _) = center_fit_apply(&m.view(), false).unwrap();
        for col in c.columns() {
            assert!(col.iter().sum::<f64>().abs() / 3.0 < 1e-10);
        }
    }

    fn labeled_dataset(counts: &[usize]) -> Dataset {
        let total: usize = counts.iter().sum();
        let x = Array2::<f64>::zeros((total, 2));
        let mut labels = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                labels.push(format!("c{c}"));
            }
        }
        Dataset::new(x, Targets::Labels(labels)).unwrap()
    }

    #[test]
    fn stratified_split_apportions_exactly() {
        let ds = labeled_dataset(&[10, 20, 30]);
        let spec = SplitSpec {
            train_ratio: 0.5,
            stratified: true,
            seed: 7,
            train_cap: None,
        };
        let (train, test) = split_indices(&ds, &spec).unwrap();
        assert_eq!(train.len(), 30);
        assert_eq!(test.len(), 30);
        let labels = ds.labels().unwrap();
        let count = |idx: &[usize], c: &str| idx.iter().filter(|&&i| labels[i] == c).count();
        assert_eq!(count(&train, "c0"), 5);
        assert_eq!(count(&train, "c1"), 10);
        assert_eq!(count(&train, "c2"), 15);
        // Disjoint and exhaustive.
        let mut all: Vec<usize> = train.iter().chain(test.iter()).cloned().collect();
        all.sort_unstable();
        assert_eq!(all, (0..60).collect::<Vec<_>>());
    }

    #[test]
    fn split_honors_cap_and_determinism() {
        let ds = labeled_dataset(&[50, 50]);
        let spec = SplitSpec {
            train_ratio: 0.6,
            train_cap: Some(40),
            stratified: true,
            seed: 3,
        };
        let (train1, _) = split_indices(&ds, &spec).unwrap();
        let (train2, _) = split_indices(&ds, &spec).unwrap();
        assert_eq!(train1.len(), 40);
        assert_eq!(train1, train2);
        let other = SplitSpec { seed: 4, ..spec };
        let (train3, _) = split_indices(&ds, &other).unwrap();
        assert_ne!(train1, train3, "different seeds give different splits");
    }

    #[test]
    fn split_rejects_degenerate_ratios() {
        let ds = labeled_dataset(&[5, 5]);
        for ratio in [0.0, 1.0, 1.5, -0.2] {
            let spec = SplitSpec {
                train_ratio: ratio,
                ..SplitSpec::default()
            };
            assert!(matches!(
                split_indices(&ds, &spec),
                Err(Error::InvalidParam(_))
            ));
        }
    }

    #[test]
    fn kfold_partitions_cover_everything() {
        let folds = kfold(10, 3, 11).unwrap();
        assert_eq!(folds.len(), 3);
        let sizes: Vec<usize> = folds.iter().map(|(_, v)| v.len()).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        let mut seen: Vec<usize> = folds.iter().flat_map(|(_, v)| v.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        for (train, val) in &folds {
            assert_eq!(train.len() + val.len(), 10);
            assert!(train.iter().all(|i| !val.contains(i)));
        }
        // Determinism per seed.
        assert_eq!(folds, kfold(10, 3, 11).unwrap());
        assert_ne!(folds, kfold(10, 3, 12).unwrap());
    }

    #[test]
    fn kfold_rejects_bad_fold_counts() {
        assert!(matches!(kfold(10, 1, 0), Err(Error::InvalidParam(_))));
        assert!(matches!(kfold(3, 4, 0), Err(Error::InvalidParam(_))));
    }
}
