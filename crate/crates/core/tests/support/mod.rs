//! Shared fixtures for the integration suites: frozen expected values for a
//! fixed small dataset, an independently-coded Jacobi eigensolver used to
//! cross-check the production solvers, and small assertion helpers.
//!
//! The frozen constants below were computed with an independent dense
//! reference implementation (double precision) and are kept to 15
//! significant digits. They must never be regenerated from the code under
//! test.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fixed 6x3 input block used across the oracle tests.
pub const X6: [[f64; 3]; 6] = [
    [1.0, 2.0, 0.5],
    [-1.5, 0.5, 1.0],
    [0.5, -2.0, 1.5],
    [2.0, 1.0, -1.0],
    [-0.5, -1.0, -0.5],
    [-1.5, -0.5, -1.5],
];

/// Fixed 6x2 target block paired with [`X6`].
pub const Y6: [[f64; 2]; 6] = [
    [2.5, 0.0],
    [-1.0, 1.5],
    [-0.5, -2.0],
    [3.0, 0.5],
    [-1.5, -0.5],
    [-2.5, 0.5],
];

/// Eigenvalues of the covariance of centered `X6`, descending.
pub const PCA_EIGS: [f64; 3] = [2.306958315694878, 1.310268799789854, 0.966106217848601];
/// First principal direction of centered `X6` (largest-|entry| positive).
pub const PCA_U1: [f64; 3] = [0.665391910496725, 0.738260360128564, -0.110567834872364];

/// Per-direction cross-covariance singular values for PLS2 on (X6, Y6).
pub const PLS2_SIGMA: [f64; 2] = [3.036994870607642, 1.117886944286811];
pub const PLS2_U1: [f64; 3] = [0.769555117427352, 0.636982233076796, 0.045150370827627];
pub const PLS2_U2: [f64; 3] = [-0.566087415670954, 0.713206188197843, -0.413378725789418];

/// Canonical correlations for CCA on (X6, Y6), descending.
pub const CCA_CORRS: [f64; 2] = [0.999957778772109, 0.89220977574336];
/// First canonical direction, normalized so u' Cx u = 1.
pub const CCA_U1: [f64; 3] = [0.639632581188419, 0.253921162659746, 0.141021960395125];

/// Generalized eigenvalues for OPLS on (X6, Y6), descending.
pub const OPLS_EIGS: [f64; 2] = [4.147847034668027, 0.931513670476057];
/// First OPLS direction, normalized so u' Cx u = 1.
pub const OPLS_U1: [f64; 3] = [0.573888774907623, 0.349384206331896, 0.111094421239606];

/// Median of the 15 pairwise distances between rows of raw `X6`.
pub const MEDIAN_SIGMA_X6: f64 = 3.24037034920393;

/// Top three eigenvalues of the double-centered RBF Gram of raw `X6`
/// at sigma = `MEDIAN_SIGMA_X6`.
pub const KPCA_RBF_EIGS3: [f64; 3] = [0.887822020988894, 0.535949028430052, 0.39951952265479];

/// HSIC between raw `X6` and `Y6` under linear kernels (biased, centered).
pub const HSIC_LINEAR_X6Y6: f64 = 14.9875;

/// Closed-form expectation of HSIC over uniformly permuted rows of one
/// block: tr(Kx~) tr(Ky~) / (l-1)^3 for centered Grams.
pub fn hsic_permutation_null(kx_c: &Array2<f64>, ky_c: &Array2<f64>) -> f64 {
    let l = kx_c.nrows() as f64;
    let tx: f64 = kx_c.diag().sum();
    let ty: f64 = ky_c.diag().sum();
    tx * ty / ((l - 1.0) * (l - 1.0) * (l - 1.0))
}

pub fn x6() -> Array2<f64> {
    Array2::from_shape_fn((6, 3), |(i, j)| X6[i][j])
}

pub fn y6() -> Array2<f64> {
    Array2::from_shape_fn((6, 2), |(i, j)| Y6[i][j])
}

/// Column-center a matrix (no scaling).
pub fn centered(m: &Array2<f64>) -> Array2<f64> {
    let mean = m.mean_axis(ndarray::Axis(0)).unwrap();
    m - &mean.insert_axis(ndarray::Axis(0))
}

/// Standard-normal matrix from an explicit seed (ChaCha8, Box-Muller), so
/// the fixtures do not share RNG plumbing with the library under test.
pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| {
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    })
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim(), "shape mismatch in comparison");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_abs_diff1(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch in comparison");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Distance between two vectors up to a global sign flip.
pub fn diff_up_to_sign(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let plus = max_abs_diff1(a, b);
    let minus = max_abs_diff1(&(-a.clone()), b);
    plus.min(minus)
}

/// Column-wise comparison of two feature blocks up to per-column sign.
pub fn max_col_diff_up_to_sign(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim(), "shape mismatch in feature comparison");
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        let ca = a.column(j).to_owned();
        let cb = b.column(j).to_owned();
        worst = worst.max(diff_up_to_sign(&ca, &cb));
    }
    worst
}

/// Cyclic Jacobi eigensolver for symmetric matrices. Deliberately
/// independent from the production solver stack; used only as an oracle.
/// Returns (eigenvalues descending, eigenvectors as columns).
pub fn jacobi_eig(m: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "jacobi_eig wants a square matrix");
    let mut a = m.clone();
    let mut v = Array2::<f64>::eye(n);
    let norm: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let vals = Array1::from_iter(order.iter().map(|&i| a[(i, i)]));
    let mut vecs = Array2::<f64>::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        for r in 0..n {
            vecs[(r, col)] = v[(r, i)];
        }
    }
    (vals, vecs)
}

/// Dense whitening oracle for the generalized problem A v = lambda B v with
/// SPD B, built on [`jacobi_eig`]: whiten with B^{-1/2}, solve the standard
/// problem, map back. Returns (eigenvalues descending, B-orthonormal
/// eigenvector columns).
pub fn gev_oracle(a: &Array2<f64>, b: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let (bw, bv) = jacobi_eig(b);
    let bmax = bw.iter().cloned().fold(f64::MIN, f64::max);
    let keep: Vec<usize> = (0..bw.len()).filter(|&i| bw[i] > 1e-9 * bmax).collect();
    let n = b.nrows();
    let r = keep.len();
    let mut w = Array2::<f64>::zeros((n, r));
    for (c, &i) in keep.iter().enumerate() {
        for row in 0..n {
            w[(row, c)] = bv[(row, i)] / bw[i].sqrt();
        }
    }
    let a_w = w.t().dot(a).dot(&w);
    let (vals, z) = jacobi_eig(&a_w);
    (vals, w.dot(&z))
}

/// Random SPD matrix with a well-separated spectrum, via Q diag(d) Q'.
pub fn random_spd(n: usize, seed: u64) -> Array2<f64> {
    let g = gaussian(n, n, seed);
    // Orthonormalize columns by Gram-Schmidt.
    let mut q = g.clone();
    for j in 0..n {
        for k in 0..j {
            let proj = q.column(j).dot(&q.column(k));
            let col_k = q.column(k).to_owned();
            let mut col_j = q.column_mut(j);
            col_j.scaled_add(-proj, &col_k);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt().max(1e-12);
        q.column_mut(j).mapv_inplace(|x| x / norm);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let d = Array1::from_shape_fn(n, |i| (n - i) as f64 + 0.3 * rng.random::<f64>());
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += q[(i, k)] * d[k] * q[(j, k)];
            }
            out[(i, j)] = s;
        }
    }
    // Exact symmetry.
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = m;
            out[(j, i)] = m;
        }
    }
    out
}
