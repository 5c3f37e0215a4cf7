//! Sparse kernel feature extraction: each direction is a single scaled
//! kernel column. Direction j picks, from a candidate pool of training
//! points, the column of the deflated centered Gram whose (scaled)
//! alignment with the targets is largest; the Gram is then deflated
//! against the extracted score and the search repeats. Features of new
//! points are plain kernel evaluations against the selected training
//! points times the stored scales — the model is as compact as the
//! number of directions.
//!
//! The two variants differ only in the per-column scale:
//!
//! * approximation variant — unit score norm, beta' K^2 beta = 1, so a
//!   column is scaled by the inverse of its norm;
//! * compactness variant — unit feature-space norm, beta' K beta = 1,
//!   so a column is scaled by the inverse square root of its diagonal
//!   entry.

use crate::data::{center_fit_apply, CenteringStats};
use crate::error::{Error, Result};
use crate::kernel::{center_test, center_train, GramCentering, KernelChoice, KernelSpec};
use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default candidate-pool size: a pool of this many uniformly sampled
/// training points contains a column whose objective lands in the top
/// 5% of all columns with probability about 0.95.
pub const DEFAULT_POOL: usize = 59;

/// Which per-column scale the sparse extraction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SparseVariant {
    /// Unit score norm (approximation-oriented).
    Sma,
    /// Unit feature-space norm (compactness-oriented).
    Smc,
}

impl SparseVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SparseVariant::Sma => "sma",
            SparseVariant::Smc => "smc",
        }
    }

    /// Inverse of [`name`](Self::name), case-insensitive.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "sma" => Some(SparseVariant::Sma),
            "smc" => Some(SparseVariant::Smc),
            _ => None,
        }
    }
}

/// Options for the sparse fits.
#[derive(Debug, Clone)]
pub struct SparseFitOptions {
    pub n_features: usize,
    /// Candidate-pool size; pools at least as large as the training set
    /// make the per-direction search exhaustive.
    pub pool_size: usize,
    /// Seed for the pool sample.
    pub seed: u64,
    pub standardize_x: bool,
    pub standardize_y: bool,
}

impl SparseFitOptions {
    pub fn new(n_features: usize, seed: u64) -> Self {
        SparseFitOptions {
            n_features,
            pool_size: DEFAULT_POOL,
            seed,
            standardize_x: true,
            standardize_y: false,
        }
    }
}

/// A fitted sparse extractor: selected training points, their scales,
/// and everything needed to center test kernels consistently.
#[derive(Debug, Clone)]
pub struct SparsePlsModel {
    pub variant: SparseVariant,
    pub kernel: KernelSpec,
    /// Preprocessed training inputs (kernel centering needs the full
    /// block even though features touch only the selected columns).
    pub train_x: Array2<f64>,
    pub gram_centering: GramCentering,
    pub x_stats: CenteringStats,
    pub y_stats: CenteringStats,
    /// Selected training-point indices, one per direction.
    pub indices: Vec<usize>,
    /// Per-direction column scales.
    pub scales: Vec<f64>,
    /// Objective value attained by each direction at selection time.
    pub objectives: Array1<f64>,
    /// Candidate pool the selection searched over.
    pub pool: Vec<usize>,
    pub truncated: bool,
}

impl SparsePlsModel {
    pub fn n_features(&self) -> usize {
        self.indices.len()
    }

    /// Features of new rows: centered kernel columns at the selected
    /// training points, scaled.
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
        let mut out = Array2::<f64>::zeros((x.nrows(), self.indices.len()));
        for (j, (&idx, &scale)) in self.indices.iter().zip(self.scales.iter()).enumerate() {
            for (r, v) in kc.column(idx).iter().enumerate() {
                out[(r, j)] = v * scale;
            }
        }
        Ok(out)
    }
}

/// Fit a sparse extractor. Greedy over directions; exhaustive over the
/// candidate pool within each direction, ties resolving to the lowest
/// training index.
pub fn fit_sparse(
    variant: SparseVariant,
    x: &ArrayView2<f64>,
    y: &ArrayView2<f64>,
    choice: &KernelChoice,
    opts: &SparseFitOptions,
) -> Result<SparsePlsModel> {
    if opts.n_features == 0 {
        return Err(Error::invalid(
            "the number of extracted features must be at least 1",
        ));
    }
    if opts.pool_size == 0 {
        return Err(Error::invalid("the candidate pool must be non-empty"));
    }
    let l = x.nrows();
    if l < 2 {
        return Err(Error::data("fitting needs at least two rows"));
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
    let (xp, x_stats) = center_fit_apply(x, opts.standardize_x)?;
    let (yc, y_stats) = center_fit_apply(y, opts.standardize_y)?;
    let spec = choice.resolve(&xp.view())?;
    let k_raw = spec.gram(&xp.view(), &xp.view())?;
    let (kc, gram_centering) = center_train(&k_raw)?;

    let pool: Vec<usize> = if opts.pool_size >= l {
        (0..l).collect()
    } else {
        let mut idx: Vec<usize> = (0..l).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        idx.shuffle(&mut rng);
        idx.truncate(opts.pool_size);
        idx.sort_unstable();
        idx
    };

    let cap = pool.len().min(l - 1);
    let mut truncated = false;
    let nf = if opts.n_features > cap {
        log::warn!(
            "{}: requested {} features but the pool supports at most {cap}; capping",
            variant.name(),
            opts.n_features
        );
        truncated = true;
        cap
    } else {
        opts.n_features
    };

    let mut kj = kc.clone();
    let mut indices = Vec::with_capacity(nf);
    let mut scales = Vec::with_capacity(nf);
    let mut objectives = Vec::with_capacity(nf);
    let mut lead = 0.0f64;
    for _ in 0..nf {
        let mut best: Option<(usize, f64, f64)> = None; // (index, objective, scale)
        for &i in &pool {
            if indices.contains(&i) {
                continue;
            }
            let col = kj.column(i);
            let scale = match variant {
                SparseVariant::Sma => {
                    let norm = col.dot(&col).sqrt();
                    if norm <= 1e-12 {
                        continue;
                    }
                    1.0 / norm
                }
                SparseVariant::Smc => {
                    let diag = kj[(i, i)];
                    if diag <= 1e-12 {
                        continue;
                    }
                    1.0 / diag.sqrt()
                }
            };
            // || Y' K beta || with beta the scaled indicator column.
            let mut align = 0.0;
            for c in 0..yc.ncols() {
                let dot = yc.column(c).dot(&col);
                align += dot * dot;
            }
            let objective = align.sqrt() * scale;
            let better = match &best {
                None => true,
                Some((bi, bo, _)) => objective > *bo || (objective == *bo && i < *bi),
            };
            if better {
                best = Some((i, objective, scale));
            }
        }
        let Some((idx, objective, scale)) = best else {
            truncated = true;
            break;
        };
        if objective <= 1e-9 * lead {
            truncated = true;
            break;
        }
        if indices.is_empty() {
            lead = objective;
        }
        // Deflate the Gram against the extracted score on both sides.
        let col = kj.column(idx).to_owned();
        let tnorm = col.dot(&col).sqrt();
        if tnorm > f64::MIN_POSITIVE {
            let t = col.mapv(|v| v / tnorm);
            let tk = t.dot(&kj);
            for (r, &ti) in t.iter().enumerate() {
                for c in 0..l {
                    kj[(r, c)] -= ti * tk[c];
                }
            }
            let kt = kj.dot(&t);
            for c in 0..l {
                let tc = t[c];
                if tc == 0.0 {
                    continue;
                }
                for r in 0..l {
                    kj[(r, c)] -= kt[r] * tc;
                }
            }
        }
        indices.push(idx);
        scales.push(scale);
        objectives.push(objective);
    }
    if indices.is_empty() {
        return Err(Error::numerical(
            "no kernel column aligns with the targets; all candidates were degenerate",
        ));
    }
    let truncated = truncated || indices.len() < nf;
    Ok(SparsePlsModel {
        variant,
        kernel: spec,
        train_x: xp,
        gram_centering,
        x_stats,
        y_stats,
        indices,
        scales,
        objectives: Array1::from(objectives),
        pool,
        truncated,
    })
}
