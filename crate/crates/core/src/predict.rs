//! Prediction heads and evaluation: a (ridge) least-squares readout over
//! extracted features, winner-takes-all label decoding, regression and
//! classification metrics, and a generic cross-validated grid selector.

use crate::data::kfold;
use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::Serialize;

/// Least-squares readout trained on feature/target pairs. Intercepts are
/// handled by centering both blocks at fit time; with a positive ridge
/// weight the normal equations gain lambda on the diagonal, and at zero
/// a rank-deficient feature block falls back to the minimum-norm
/// solution.
#[derive(Debug, Clone)]
pub struct LsHead {
    /// Feature-to-target weights, nf x m.
    pub w: Array2<f64>,
    /// Feature means subtracted before applying the weights.
    pub t_mean: Array1<f64>,
    /// Target means added back to predictions.
    pub y_mean: Array1<f64>,
    pub lambda: f64,
}

impl LsHead {
    pub fn fit(t: &ArrayView2<f64>, y: &ArrayView2<f64>, lambda: f64) -> Result<LsHead> {
        if t.nrows() != y.nrows() {
            return Err(Error::data(format!(
                "feature and target blocks disagree on rows: {} vs {}",
                t.nrows(),
                y.nrows()
            )));
        }
        if t.nrows() < 2 {
            return Err(Error::data("fitting a readout needs at least two rows"));
        }
        if t.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::data("readout blocks must have at least one column"));
        }
        if lambda < 0.0 {
            return Err(Error::invalid("the ridge weight must be non-negative"));
        }
        let t_mean = t.mean_axis(Axis(0)).unwrap();
        let y_mean = y.mean_axis(Axis(0)).unwrap();
        let tc = t - &t_mean.view().insert_axis(Axis(0));
        let yc = y - &y_mean.view().insert_axis(Axis(0));
        let gram = tc.t().dot(&tc);
        let rhs = tc.t().dot(&yc);
        let w = solve_spd(&gram, lambda, &rhs)?;
        Ok(LsHead {
            w,
            t_mean,
            y_mean,
            lambda,
        })
    }

    pub fn predict(&self, t: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if t.ncols() != self.w.nrows() {
            return Err(Error::data(format!(
                "readout expects {} feature columns, got {}",
                self.w.nrows(),
                t.ncols()
            )));
        }
        let tc = t - &self.t_mean.view().insert_axis(Axis(0));
        let mut out = tc.dot(&self.w);
        out += &self.y_mean.view().insert_axis(Axis(0));
        Ok(out)
    }
}

/// Winner-takes-all decoding: the column index of the largest score per
/// row, ties resolved to the lowest index.
pub fn predict_wta(scores: &ArrayView2<f64>) -> Vec<usize> {
    scores
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0usize;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Metrics over a held-out set; regression and classification fields
/// fill according to which evaluation produced the report.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub n_test: usize,
    /// Mean squared error per entry, ||Y - Yhat||_F^2 / (l m).
    pub mse: Option<f64>,
    pub rmse: Option<f64>,
    /// Overall accuracy in percent.
    pub accuracy: Option<f64>,
    /// Binomial standard deviation of the accuracy estimate,
    /// sqrt(acc (100 - acc) / l), in percentage points.
    pub accuracy_std: Option<f64>,
}

/// Mean squared error per entry between aligned blocks.
pub fn mse(y: &ArrayView2<f64>, yhat: &ArrayView2<f64>) -> Result<f64> {
    if y.dim() != yhat.dim() {
        return Err(Error::data(format!(
            "prediction block {:?} does not match target block {:?}",
            yhat.dim(),
            y.dim()
        )));
    }
    if y.is_empty() {
        return Err(Error::data("cannot evaluate an empty block"));
    }
    let total: f64 = y
        .iter()
        .zip(yhat.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(total / (y.nrows() as f64 * y.ncols() as f64))
}

/// Regression metrics only.
pub fn evaluate_regression(y: &ArrayView2<f64>, yhat: &ArrayView2<f64>) -> Result<EvalReport> {
    let m = mse(y, yhat)?;
    Ok(EvalReport {
        n_test: y.nrows(),
        mse: Some(m),
        rmse: Some(m.sqrt()),
        accuracy: None,
        accuracy_std: None,
    })
}

/// Classification metrics from decoded label indices.
pub fn evaluate_labels(true_idx: &[usize], pred_idx: &[usize]) -> Result<EvalReport> {
    if true_idx.len() != pred_idx.len() {
        return Err(Error::data(format!(
            "label vectors disagree on length: {} vs {}",
            true_idx.len(),
            pred_idx.len()
        )));
    }
    if true_idx.is_empty() {
        return Err(Error::data("cannot evaluate zero labels"));
    }
    let l = true_idx.len() as f64;
    let correct = true_idx
        .iter()
        .zip(pred_idx.iter())
        .filter(|(a, b)| a == b)
        .count() as f64;
    let acc = 100.0 * correct / l;
    let std = (acc * (100.0 - acc) / l).sqrt();
    Ok(EvalReport {
        n_test: true_idx.len(),
        mse: None,
        rmse: None,
        accuracy: Some(acc),
        accuracy_std: Some(std),
    })
}

/// Combined evaluation for classification through indicator targets:
/// squared error of the raw scores against the indicators plus accuracy
/// of the decoded labels.
pub fn evaluate_scores(
    y_indicator: &ArrayView2<f64>,
    scores: &ArrayView2<f64>,
) -> Result<EvalReport> {
    let m = mse(y_indicator, scores)?;
    let true_idx = predict_wta(y_indicator);
    let pred_idx = predict_wta(scores);
    let labels = evaluate_labels(&true_idx, &pred_idx)?;
    Ok(EvalReport {
        n_test: y_indicator.nrows(),
        mse: Some(m),
        rmse: Some(m.sqrt()),
        accuracy: labels.accuracy,
        accuracy_std: labels.accuracy_std,
    })
}

/// Direction of a model-selection score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Maximize,
    Minimize,
}

/// Mean validation score per grid candidate.
#[derive(Debug, Clone, Serialize)]
pub struct GridScore<T> {
    pub candidate: T,
    pub mean_score: f64,
}

/// Cross-validated grid selection. For each candidate the closure is
/// called once per fold with (candidate, train rows, validation rows)
/// and must return that fold's validation score; fold means decide the
/// winner, ties resolving to the earliest candidate. Returns the winning
/// candidate with the full score table.
pub fn crossval_select<T, F>(
    grid: &[T],
    l: usize,
    folds: usize,
    seed: u64,
    objective: Objective,
    mut score: F,
) -> Result<(T, Vec<GridScore<T>>)>
where
    T: Clone,
    F: FnMut(&T, &[usize], &[usize]) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::invalid("the selection grid is empty"));
    }
    let plan = kfold(l, folds, seed)?;
    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<usize> = None;
    for (idx, cand) in grid.iter().enumerate() {
        let mut total = 0.0;
        for (train, val) in &plan {
            let s = score(cand, train, val)?;
            if !s.is_finite() {
                return Err(Error::numerical(
                    "a validation fold produced a non-finite score",
                ));
            }
            total += s;
        }
        let mean = total / plan.len() as f64;
        table.push(GridScore {
            candidate: cand.clone(),
            mean_score: mean,
        });
        let better = match best {
            None => true,
            Some(b) => match objective {
                Objective::Maximize => mean > table[b].mean_score,
                Objective::Minimize => mean < table[b].mean_score,
            },
        };
        if better {
            best = Some(idx);
        }
    }
    let winner = best.unwrap();
    Ok((grid[winner].clone(), table))
}
