//! Model persistence: a versioned JSON container for every fitted
//! extractor, an optional least-squares head, and an optional label
//! encoding for classification.
//!
//! Matrices are stored row-major in one of two encodings:
//!
//! * `decimal` — plain JSON numbers (human-readable; shortest-roundtrip
//!   printing preserves every bit of finite values);
//! * `binary` — base64 of the little-endian IEEE-754 bytes (compact and
//!   bit-identical by construction).

use crate::data::{CenteringStats, LabelEncoding};
use crate::dependence::HscaModel;
use crate::error::{Error, Result};
use crate::kernel::{GramCentering, KernelSpec};
use crate::kernel_mva::{KernelMethod, KernelModel};
use crate::linear::{LinearMethod, LinearModel};
use crate::predict::LsHead;
use crate::reduced::{ReducedMethod, ReducedSetModel};
use crate::semisup::SemiSupCcaModel;
use crate::sparse::{SparsePlsModel, SparseVariant};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MODEL_FORMAT: &str = "kmva-model";
pub const MODEL_VERSION: u32 = 1;

/// How matrices are written into the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixEncoding {
    Decimal,
    Binary,
}

impl std::str::FromStr for MatrixEncoding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decimal" => Ok(MatrixEncoding::Decimal),
            "binary" => Ok(MatrixEncoding::Binary),
            other => Err(Error::invalid(format!(
                "unknown matrix encoding '{other}' (expected 'decimal' or 'binary')"
            ))),
        }
    }
}

/// A row-major matrix in one of the two encodings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case")]
pub enum MatrixPayload {
    Decimal {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    Binary {
        rows: usize,
        cols: usize,
        data: String,
    },
}

fn encode_matrix(m: &Array2<f64>, enc: MatrixEncoding) -> Result<MatrixPayload> {
    let (rows, cols) = m.dim();
    match enc {
        MatrixEncoding::Decimal => {
            for v in m.iter() {
                if !v.is_finite() {
                    return Err(Error::invalid(
                        "decimal model files cannot hold non-finite matrix entries",
                    ));
                }
            }
            Ok(MatrixPayload::Decimal {
                rows,
                cols,
                data: m.iter().cloned().collect(),
            })
        }
        MatrixEncoding::Binary => {
            let mut bytes = Vec::with_capacity(rows * cols * 8);
            for v in m.iter() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            Ok(MatrixPayload::Binary {
                rows,
                cols,
                data: BASE64.encode(bytes),
            })
        }
    }
}

fn decode_matrix(p: &MatrixPayload) -> Result<Array2<f64>> {
    match p {
        MatrixPayload::Decimal { rows, cols, data } => {
            if data.len() != rows * cols {
                return Err(Error::data(format!(
                    "matrix payload claims {rows}x{cols} but holds {} values",
                    data.len()
                )));
            }
            Array2::from_shape_vec((*rows, *cols), data.clone())
                .map_err(|e| Error::data(format!("bad matrix payload: {e}")))
        }
        MatrixPayload::Binary { rows, cols, data } => {
            let bytes = BASE64
                .decode(data)
                .map_err(|e| Error::data(format!("bad base64 matrix payload: {e}")))?;
            if bytes.len() != rows * cols * 8 {
                return Err(Error::data(format!(
                    "matrix payload claims {rows}x{cols} but holds {} bytes",
                    bytes.len()
                )));
            }
            let mut values = Vec::with_capacity(rows * cols);
            for chunk in bytes.chunks_exact(8) {
                let mut b = [0u8; 8];
                b.copy_from_slice(chunk);
                values.push(f64::from_le_bytes(b));
            }
            Array2::from_shape_vec((*rows, *cols), values)
                .map_err(|e| Error::data(format!("bad matrix payload: {e}")))
        }
    }
}

fn encode_opt(m: &Option<Array2<f64>>, enc: MatrixEncoding) -> Result<Option<MatrixPayload>> {
    m.as_ref().map(|m| encode_matrix(m, enc)).transpose()
}

fn decode_opt(p: &Option<MatrixPayload>) -> Result<Option<Array2<f64>>> {
    p.as_ref().map(decode_matrix).transpose()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LinearPayload {
    method: LinearMethod,
    u: MatrixPayload,
    v: Option<MatrixPayload>,
    eigenvalues: Vec<f64>,
    x_stats: CenteringStats,
    y_stats: Option<CenteringStats>,
    truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KernelPayload {
    method: KernelMethod,
    kernel: KernelSpec,
    train_x: MatrixPayload,
    a: MatrixPayload,
    v: Option<MatrixPayload>,
    eigenvalues: Vec<f64>,
    gram_centering: GramCentering,
    x_stats: CenteringStats,
    y_stats: Option<CenteringStats>,
    eta: f64,
    truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReducedPayload {
    method: ReducedMethod,
    kernel: KernelSpec,
    basis_x: MatrixPayload,
    basis_indices: Vec<usize>,
    a: MatrixPayload,
    v: Option<MatrixPayload>,
    eigenvalues: Vec<f64>,
    gram_centering: GramCentering,
    x_stats: CenteringStats,
    y_stats: Option<CenteringStats>,
    eta: f64,
    truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SparsePayload {
    variant: SparseVariant,
    kernel: KernelSpec,
    train_x: MatrixPayload,
    gram_centering: GramCentering,
    x_stats: CenteringStats,
    y_stats: CenteringStats,
    indices: Vec<usize>,
    scales: Vec<f64>,
    objectives: Vec<f64>,
    pool: Vec<usize>,
    truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SemiSupPayload {
    kernel: KernelSpec,
    train_x: MatrixPayload,
    n_labeled: usize,
    a: MatrixPayload,
    b: MatrixPayload,
    correlations: Vec<f64>,
    gram_centering: GramCentering,
    x_stats: CenteringStats,
    y_stats: CenteringStats,
    alpha_x: f64,
    gamma_x: f64,
    graph_sigma: Option<f64>,
    graph_k: usize,
    truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HscaPayload {
    kernel: KernelSpec,
    train_x: MatrixPayload,
    a: MatrixPayload,
    eigenvalues: Vec<f64>,
    gram_centering: GramCentering,
    x_stats: CenteringStats,
    truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HeadPayload {
    w: MatrixPayload,
    t_mean: Vec<f64>,
    y_mean: Vec<f64>,
    lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ModelPayload {
    Linear(LinearPayload),
    Kernel(KernelPayload),
    Reduced(ReducedPayload),
    Sparse(SparsePayload),
    SemiSupCca(SemiSupPayload),
    Hsca(HscaPayload),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: ModelPayload,
    head: Option<HeadPayload>,
    labels: Option<LabelEncoding>,
}

/// Any fitted extractor this crate can persist.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Linear(LinearModel),
    Kernel(KernelModel),
    Reduced(ReducedSetModel),
    Sparse(SparsePlsModel),
    SemiSupCca(SemiSupCcaModel),
    Hsca(HscaModel),
}

impl AnyModel {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::Linear(m) => m.method.name(),
            AnyModel::Kernel(m) => m.method.name(),
            AnyModel::Reduced(m) => m.method.name(),
            AnyModel::Sparse(m) => m.variant.name(),
            AnyModel::SemiSupCca(_) => "sskcca",
            AnyModel::Hsca(_) => "hsca",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            AnyModel::Linear(m) => m.n_features(),
            AnyModel::Kernel(m) => m.n_features(),
            AnyModel::Reduced(m) => m.n_features(),
            AnyModel::Sparse(m) => m.n_features(),
            AnyModel::SemiSupCca(m) => m.n_features(),
            AnyModel::Hsca(m) => m.n_features(),
        }
    }

    /// Project new rows with whichever extractor is wrapped.
    pub fn transform(&self, x: &ndarray::ArrayView2<f64>) -> Result<Array2<f64>> {
        match self {
            AnyModel::Linear(m) => m.transform(x),
            AnyModel::Kernel(m) => m.transform(x),
            AnyModel::Reduced(m) => m.transform(x),
            AnyModel::Sparse(m) => m.transform(x),
            AnyModel::SemiSupCca(m) => m.transform(x),
            AnyModel::Hsca(m) => m.transform(x),
        }
    }
}

/// A persistable bundle: extractor, optional prediction head, optional
/// label decoding.
#[derive(Debug, Clone)]
pub struct SavedModel {
    pub model: AnyModel,
    pub head: Option<LsHead>,
    pub labels: Option<LabelEncoding>,
}

fn vec1(a: &Array1<f64>) -> Vec<f64> {
    a.iter().cloned().collect()
}

fn arr1(v: &[f64]) -> Array1<f64> {
    Array1::from(v.to_vec())
}

/// Serialize a bundle to a JSON string.
pub fn to_json(saved: &SavedModel, enc: MatrixEncoding) -> Result<String> {
    let model = match &saved.model {
        AnyModel::Linear(m) => ModelPayload::Linear(LinearPayload {
            method: m.method,
            u: encode_matrix(&m.u, enc)?,
            v: encode_opt(&m.v, enc)?,
            eigenvalues: vec1(&m.eigenvalues),
            x_stats: m.x_stats.clone(),
            y_stats: m.y_stats.clone(),
            truncated: m.truncated,
        }),
        AnyModel::Kernel(m) => ModelPayload::Kernel(KernelPayload {
            method: m.method,
            kernel: m.kernel.clone(),
            train_x: encode_matrix(&m.train_x, enc)?,
            a: encode_matrix(&m.a, enc)?,
            v: encode_opt(&m.v, enc)?,
            eigenvalues: vec1(&m.eigenvalues),
            gram_centering: m.gram_centering.clone(),
            x_stats: m.x_stats.clone(),
            y_stats: m.y_stats.clone(),
            eta: m.eta,
            truncated: m.truncated,
        }),
        AnyModel::Reduced(m) => ModelPayload::Reduced(ReducedPayload {
            method: m.method,
            kernel: m.kernel.clone(),
            basis_x: encode_matrix(&m.basis_x, enc)?,
            basis_indices: m.basis_indices.clone(),
            a: encode_matrix(&m.a, enc)?,
            v: encode_opt(&m.v, enc)?,
            eigenvalues: vec1(&m.eigenvalues),
            gram_centering: m.gram_centering.clone(),
            x_stats: m.x_stats.clone(),
            y_stats: m.y_stats.clone(),
            eta: m.eta,
            truncated: m.truncated,
        }),
        AnyModel::Sparse(m) => ModelPayload::Sparse(SparsePayload {
            variant: m.variant,
            kernel: m.kernel.clone(),
            train_x: encode_matrix(&m.train_x, enc)?,
            gram_centering: m.gram_centering.clone(),
            x_stats: m.x_stats.clone(),
            y_stats: m.y_stats.clone(),
            indices: m.indices.clone(),
            scales: m.scales.clone(),
            objectives: vec1(&m.objectives),
            pool: m.pool.clone(),
            truncated: m.truncated,
        }),
        AnyModel::SemiSupCca(m) => ModelPayload::SemiSupCca(SemiSupPayload {
            kernel: m.kernel.clone(),
            train_x: encode_matrix(&m.train_x, enc)?,
            n_labeled: m.n_labeled,
            a: encode_matrix(&m.a, enc)?,
            b: encode_matrix(&m.b, enc)?,
            correlations: vec1(&m.correlations),
            gram_centering: m.gram_centering.clone(),
            x_stats: m.x_stats.clone(),
            y_stats: m.y_stats.clone(),
            alpha_x: m.alpha_x,
            gamma_x: m.gamma_x,
            graph_sigma: m.graph_sigma,
            graph_k: m.graph_k,
            truncated: m.truncated,
        }),
        AnyModel::Hsca(m) => ModelPayload::Hsca(HscaPayload {
            kernel: m.kernel.clone(),
            train_x: encode_matrix(&m.train_x, enc)?,
            a: encode_matrix(&m.a, enc)?,
            eigenvalues: vec1(&m.eigenvalues),
            gram_centering: m.gram_centering.clone(),
            x_stats: m.x_stats.clone(),
            truncated: m.truncated,
        }),
    };
    let head = match &saved.head {
        None => None,
        Some(h) => Some(HeadPayload {
            w: encode_matrix(&h.w, enc)?,
            t_mean: vec1(&h.t_mean),
            y_mean: vec1(&h.y_mean),
            lambda: h.lambda,
        }),
    };
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        model,
        head,
        labels: saved.labels.clone(),
    };
    serde_json::to_string_pretty(&file)
        .map_err(|e| Error::data(format!("cannot serialize model: {e}")))
}

/// Deserialize a bundle from a JSON string.
pub fn from_json(text: &str) -> Result<SavedModel> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::data(format!("cannot parse model: {e}")))?;
    if file.format != MODEL_FORMAT {
        return Err(Error::data(format!(
            "not a model file: format is '{}', expected '{MODEL_FORMAT}'",
            file.format
        )));
    }
    if file.version != MODEL_VERSION {
        return Err(Error::data(format!(
            "unsupported model version {} (this build reads version {MODEL_VERSION})",
            file.version
        )));
    }
    let model = match &file.model {
        ModelPayload::Linear(p) => AnyModel::Linear(LinearModel {
            method: p.method,
            u: decode_matrix(&p.u)?,
            v: decode_opt(&p.v)?,
            eigenvalues: arr1(&p.eigenvalues),
            x_stats: p.x_stats.clone(),
            y_stats: p.y_stats.clone(),
            truncated: p.truncated,
        }),
        ModelPayload::Kernel(p) => AnyModel::Kernel(KernelModel {
            method: p.method,
            kernel: p.kernel.clone(),
            train_x: decode_matrix(&p.train_x)?,
            a: decode_matrix(&p.a)?,
            v: decode_opt(&p.v)?,
            eigenvalues: arr1(&p.eigenvalues),
            gram_centering: p.gram_centering.clone(),
            x_stats: p.x_stats.clone(),
            y_stats: p.y_stats.clone(),
            eta: p.eta,
            truncated: p.truncated,
        }),
        ModelPayload::Reduced(p) => AnyModel::Reduced(ReducedSetModel {
            method: p.method,
            kernel: p.kernel.clone(),
            basis_x: decode_matrix(&p.basis_x)?,
            basis_indices: p.basis_indices.clone(),
            a: decode_matrix(&p.a)?,
            v: decode_opt(&p.v)?,
            eigenvalues: arr1(&p.eigenvalues),
            gram_centering: p.gram_centering.clone(),
            x_stats: p.x_stats.clone(),
            y_stats: p.y_stats.clone(),
            eta: p.eta,
            truncated: p.truncated,
        }),
        ModelPayload::Sparse(p) => AnyModel::Sparse(SparsePlsModel {
            variant: p.variant,
            kernel: p.kernel.clone(),
            train_x: decode_matrix(&p.train_x)?,
            gram_centering: p.gram_centering.clone(),
            x_stats: p.x_stats.clone(),
            y_stats: p.y_stats.clone(),
            indices: p.indices.clone(),
            scales: p.scales.clone(),
            objectives: arr1(&p.objectives),
            pool: p.pool.clone(),
            truncated: p.truncated,
        }),
        ModelPayload::SemiSupCca(p) => AnyModel::SemiSupCca(SemiSupCcaModel {
            kernel: p.kernel.clone(),
            train_x: decode_matrix(&p.train_x)?,
            n_labeled: p.n_labeled,
            a: decode_matrix(&p.a)?,
            b: decode_matrix(&p.b)?,
            correlations: arr1(&p.correlations),
            gram_centering: p.gram_centering.clone(),
            x_stats: p.x_stats.clone(),
            y_stats: p.y_stats.clone(),
            alpha_x: p.alpha_x,
            gamma_x: p.gamma_x,
            graph_sigma: p.graph_sigma,
            graph_k: p.graph_k,
            truncated: p.truncated,
        }),
        ModelPayload::Hsca(p) => AnyModel::Hsca(HscaModel {
            kernel: p.kernel.clone(),
            train_x: decode_matrix(&p.train_x)?,
            a: decode_matrix(&p.a)?,
            eigenvalues: arr1(&p.eigenvalues),
            gram_centering: p.gram_centering.clone(),
            x_stats: p.x_stats.clone(),
            truncated: p.truncated,
        }),
    };
    let head = match &file.head {
        None => None,
        Some(h) => Some(LsHead {
            w: decode_matrix(&h.w)?,
            t_mean: arr1(&h.t_mean),
            y_mean: arr1(&h.y_mean),
            lambda: h.lambda,
        }),
    };
    Ok(SavedModel {
        model,
        head,
        labels: file.labels.clone(),
    })
}

/// Write a bundle to disk.
pub fn save_model(path: impl AsRef<Path>, saved: &SavedModel, enc: MatrixEncoding) -> Result<()> {
    let text = to_json(saved, enc)?;
    std::fs::write(path.as_ref(), text).map_err(|e| {
        Error::data(format!(
            "cannot write model to {}: {e}",
            path.as_ref().display()
        ))
    })
}

/// Read a bundle from disk.
pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
        Error::data(format!(
            "cannot read model from {}: {e}",
            path.as_ref().display()
        ))
    })?;
    from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{KernelChoice, Sigma};
    use crate::kernel_mva::KernelFitOptions;
    use crate::linear::{LinearFitOptions, LinearMethod};
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

    fn assert_bits_equal(a: &Array2<f64>, b: &Array2<f64>) {
        assert_eq!(a.dim(), b.dim());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn linear_model_round_trips_bit_identically_in_both_encodings() {
        let x = randn(20, 4, 901);
        let y = randn(20, 2, 902);
        let model = LinearModel::fit(
            LinearMethod::Cca,
            &x.view(),
            Some(&y.view()),
            &LinearFitOptions::new(2),
        )
        .unwrap();
        let saved = SavedModel {
            model: AnyModel::Linear(model.clone()),
            head: None,
            labels: None,
        };
        for enc in [MatrixEncoding::Decimal, MatrixEncoding::Binary] {
            let text = to_json(&saved, enc).unwrap();
            let back = from_json(&text).unwrap();
            let AnyModel::Linear(restored) = &back.model else {
                panic!("wrong model kind after round trip");
            };
            assert_bits_equal(&model.u, &restored.u);
            assert_bits_equal(model.v.as_ref().unwrap(), restored.v.as_ref().unwrap());
            for (a, b) in model
                .eigenvalues
                .iter()
                .zip(restored.eigenvalues.iter())
            {
                assert_eq!(a.to_bits(), b.to_bits());
            }
            assert_eq!(model.x_stats, restored.x_stats);
        }
    }

    #[test]
    fn kernel_model_round_trip_preserves_predictions() {
        let x = randn(18, 3, 911);
        let y = randn(18, 2, 912);
        let probe = randn(7, 3, 913);
        let choice = KernelChoice::Rbf {
            sigma: Sigma::Median,
        };
        let model = KernelModel::fit(
            KernelMethod::KOpls,
            &x.view(),
            Some(&y.view()),
            &choice,
            &KernelFitOptions::new(2),
        )
        .unwrap();
        let before = model.transform(&probe.view()).unwrap();

        let t = model.transform(&x.view()).unwrap();
        let head = LsHead::fit(&t.view(), &y.view(), 0.0).unwrap();
        let saved = SavedModel {
            model: AnyModel::Kernel(model),
            head: Some(head),
            labels: Some(LabelEncoding {
                classes: vec!["a".into(), "b".into()],
            }),
        };
        let text = to_json(&saved, MatrixEncoding::Binary).unwrap();
        let back = from_json(&text).unwrap();
        let after = back.model.transform(&probe.view()).unwrap();
        assert_bits_equal(&before, &after);
        assert_eq!(back.labels.as_ref().unwrap().classes.len(), 2);
        assert!(back.head.is_some());
    }

    #[test]
    fn file_round_trip_via_disk() {
        let x = randn(15, 3, 921);
        let model = LinearModel::fit(
            LinearMethod::Pca,
            &x.view(),
            None,
            &LinearFitOptions::new(2),
        )
        .unwrap();
        let saved = SavedModel {
            model: AnyModel::Linear(model),
            head: None,
            labels: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &saved, MatrixEncoding::Decimal).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.model.kind(), "pca");
        assert_eq!(back.model.n_features(), 2);
    }

    #[test]
    fn malformed_files_are_rejected_with_clear_errors() {
        assert!(from_json("not json").is_err());
        let wrong_format = r#"{"format":"something-else","version":1,
            "model":{"kind":"linear","method":"Pca","u":{"encoding":"decimal","rows":1,"cols":1,"data":[1.0]},
            "v":null,"eigenvalues":[1.0],"x_stats":{"mean":[0.0],"scale":[1.0]},"y_stats":null,"truncated":false},
            "head":null,"labels":null}"#;
        let err = from_json(wrong_format).unwrap_err().to_string();
        assert!(err.contains("format"), "unexpected error: {err}");

        let bad_shape = MatrixPayload::Decimal {
            rows: 2,
            cols: 2,
            data: vec![1.0, 2.0, 3.0],
        };
        assert!(decode_matrix(&bad_shape).is_err());

        let bad_b64 = MatrixPayload::Binary {
            rows: 1,
            cols: 1,
            data: "@@@@".into(),
        };
        assert!(decode_matrix(&bad_b64).is_err());
    }

    #[test]
    fn binary_encoding_survives_extreme_values() {
        let mut m = Array2::<f64>::zeros((2, 2));
        m[(0, 0)] = f64::MIN_POSITIVE;
        m[(0, 1)] = -1.0e308;
        m[(1, 0)] = 5e-324; // subnormal
        m[(1, 1)] = 1.0 + f64::EPSILON;
        let p = encode_matrix(&m, MatrixEncoding::Binary).unwrap();
        let back = decode_matrix(&p).unwrap();
        assert_bits_equal(&m, &back);
        // Decimal rejects non-finite entries instead of corrupting them.
        m[(0, 0)] = f64::NAN;
        assert!(encode_matrix(&m, MatrixEncoding::Decimal).is_err());
    }
}
