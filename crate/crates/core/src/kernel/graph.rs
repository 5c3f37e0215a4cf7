//! Neighborhood graphs over samples and the symmetric normalized graph
//! Laplacian, used by the semi-supervised methods to pull the unlabeled
//! geometry into the objective.

use crate::error::{Error, Result};
use crate::linalg::ensure_finite;
use ndarray::{Array2, ArrayView2};

/// Symmetric k-nearest-neighbor affinity matrix with RBF edge weights
/// exp(-||xi - xj||^2 / (2 sigma^2)). An edge appears when either
/// endpoint ranks the other among its `k` nearest rows; the diagonal is
/// zero.
pub fn knn_affinity(x: &ArrayView2<f64>, k: usize, sigma: f64) -> Result<Array2<f64>> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::data("a neighborhood graph needs at least two rows"));
    }
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "neighbor count must satisfy 1 <= k <= {} (rows - 1), got {k}",
            n - 1
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("graph edge bandwidth must be positive"));
    }
    ensure_finite("graph input", x)?;
    let denom = 2.0 * sigma * sigma;
    let mut w = Array2::<f64>::zeros((n, n));
    let mut d2 = vec![0.0f64; n];
    for i in 0..n {
        let ri = x.row(i);
        for j in 0..n {
            d2[j] = if i == j {
                f64::INFINITY
            } else {
                ri.iter()
                    .zip(x.row(j).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum()
            };
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d2[a].partial_cmp(&d2[b]).unwrap());
        for &j in order.iter().take(k) {
            let weight = (-d2[j] / denom).exp();
            // Symmetrize by keeping the edge if either side selects it.
            if weight > w[(i, j)] {
                w[(i, j)] = weight;
                w[(j, i)] = weight;
            }
        }
    }
    Ok(w)
}

/// Symmetric normalized Laplacian D^(-1/2) (D - W) D^(-1/2) of a
/// non-negative symmetric affinity matrix with zero diagonal.
pub fn normalized_laplacian(w: &Array2<f64>) -> Result<Array2<f64>> {
    let n = w.nrows();
    if n != w.ncols() || n == 0 {
        return Err(Error::data(format!(
            "affinity matrix must be square and non-empty, got {}x{}",
            n,
            w.ncols()
        )));
    }
    ensure_finite("affinity matrix", w)?;
    for i in 0..n {
        if w[(i, i)].abs() > 1e-12 {
            return Err(Error::data(
                "affinity matrix must have a zero diagonal (no self-loops)",
            ));
        }
        for j in 0..n {
            if w[(i, j)] < -1e-12 {
                return Err(Error::data("affinity weights must be non-negative"));
            }
            if (w[(i, j)] - w[(j, i)]).abs() > 1e-9 * (1.0 + w[(i, j)].abs()) {
                return Err(Error::data("affinity matrix must be symmetric"));
            }
        }
    }
    let degrees: Vec<f64> = (0..n).map(|i| w.row(i).iter().sum()).collect();
    let mut inv_sqrt = vec![0.0f64; n];
    for (i, &deg) in degrees.iter().enumerate() {
        if deg <= 0.0 {
            return Err(Error::data(format!(
                "row {i} of the affinity matrix is isolated (zero degree); \
                 increase the neighbor count"
            )));
        }
        inv_sqrt[i] = 1.0 / deg.sqrt();
    }
    let mut lap = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let off = -w[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
            lap[(i, j)] = if i == j { 1.0 + off } else { off };
        }
    }
    Ok(lap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_sym, SolverConfig};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn triangle_laplacian_hand_case() {
        // Complete graph on three nodes with unit weights: degrees are 2,
        // so the normalized Laplacian is 1 on the diagonal and -1/2 off it.
        let w = array![[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
        let lap = normalized_laplacian(&w).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { -0.5 };
                assert_abs_diff_eq!(lap[(i, j)], expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn laplacian_is_positive_semidefinite_with_small_spectrum() {
        let x = array![
            [0.0, 0.0],
            [1.0, 0.1],
            [0.2, 0.9],
            [5.0, 5.0],
            [5.5, 4.5],
            [4.8, 5.3]
        ];
        let w = knn_affinity(&x.view(), 2, 1.5).unwrap();
        let lap = normalized_laplacian(&w).unwrap();
        let eigs = eig_sym(&lap, 6, &SolverConfig::default()).unwrap();
        for v in eigs.values.iter() {
            assert!(*v >= -1e-10, "Laplacian eigenvalue {v} below zero");
            assert!(*v <= 2.0 + 1e-10, "Laplacian eigenvalue {v} above two");
        }
    }

    #[test]
    fn affinity_is_symmetric_with_zero_diagonal() {
        let x = array![[0.0], [1.0], [2.5], [2.6], [10.0]];
        let w = knn_affinity(&x.view(), 1, 1.0).unwrap();
        for i in 0..5 {
            assert_eq!(w[(i, i)], 0.0);
            for j in 0..5 {
                assert_eq!(w[(i, j)], w[(j, i)]);
            }
        }
        // Mutual nearest neighbors 2.5 and 2.6 share the strongest edge.
        assert!(w[(2, 3)] > w[(0, 1)]);
    }

    #[test]
    fn knn_rejects_bad_neighbor_counts() {
        let x = array![[0.0], [1.0], [2.0]];
        assert!(knn_affinity(&x.view(), 0, 1.0).is_err());
        assert!(knn_affinity(&x.view(), 3, 1.0).is_err());
        assert!(knn_affinity(&x.view(), 1, 0.0).is_err());
    }

    #[test]
    fn laplacian_rejects_malformed_affinities() {
        let asym = array![[0.0, 1.0], [0.5, 0.0]];
        assert!(normalized_laplacian(&asym).is_err());
        let selfloop = array![[1.0, 0.5], [0.5, 0.0]];
        assert!(normalized_laplacian(&selfloop).is_err());
        let negative = array![[0.0, -1.0], [-1.0, 0.0]];
        assert!(normalized_laplacian(&negative).is_err());
        let isolated = array![[0.0, 0.0], [0.0, 0.0]];
        assert!(normalized_laplacian(&isolated).is_err());
    }
}
