//! Dense and matrix-free solvers for the symmetric and symmetric-definite
//! generalized eigenproblems that every extraction method in this crate
//! reduces to, plus pseudoinverse and numerical-rank helpers.
//!
//! Conventions shared by all solvers:
//!
//! * eigenvalues are returned in non-increasing order;
//! * each eigenvector is sign-fixed so its largest-magnitude component is
//!   positive (ties broken by the lowest index), making results
//!   reproducible across backends;
//! * generalized eigenvectors are B-orthonormal (v' B v = 1).

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tunables for the iterative and rank-revealing routines.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative residual target for iterative solvers.
    pub tolerance: f64,
    /// Iteration cap for the power method (per eigenpair).
    pub max_iterations: usize,
    /// Relative cutoff under the largest eigen/singular value below which
    /// components are treated as numerically null.
    pub rank_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-10,
            max_iterations: 10_000,
            rank_tol: 1e-9,
        }
    }
}

/// Result of an eigensolve: `values[i]` pairs with column `i` of
/// `vectors`. `truncated` reports that fewer pairs than requested were
/// available (rank limitation), which callers surface as a warning rather
/// than an error.
#[derive(Debug, Clone)]
pub struct EigPairs {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
    pub truncated: bool,
}

impl EigPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn nd_to_na(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub(crate) fn na_to_nd(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

pub(crate) fn ensure_finite<S, D>(name: &str, m: &ndarray::ArrayBase<S, D>) -> Result<()>
where
    S: ndarray::Data<Elem = f64>,
    D: ndarray::Dimension,
{
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::data(format!("{name} contains non-finite entries")));
    }
    Ok(())
}

fn ensure_square(name: &str, m: &Array2<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::data(format!(
            "{name} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Largest absolute deviation of a square block from the identity.
pub(crate) fn identity_residual(g: &Array2<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Flip the sign of each column so its largest-magnitude entry is
/// positive; ties resolved toward the lowest row index.
pub(crate) fn fix_signs(vectors: &mut Array2<f64>) {
    for mut col in vectors.columns_mut() {
        let mut best = 0usize;
        let mut best_mag = f64::MIN;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > best_mag {
                best_mag = x.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.mapv_inplace(|x| -x);
        }
    }
}

fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Top-k eigenpairs of a symmetric matrix, descending.
///
/// The input is symmetrized as (A + A')/2 before factorization so callers
/// may pass products that are symmetric only up to roundoff. `k` must lie
/// in `[1, dim]`. Residuals ||A v - lambda v|| are verified against
/// `cfg.tolerance * ||A||_F`.
pub fn eig_sym(a: &Array2<f64>, k: usize, cfg: &SolverConfig) -> Result<EigPairs> {
    ensure_square("eigensolver input", a)?;
    ensure_finite("eigensolver input", a)?;
    let n = a.nrows();
    if n == 0 {
        return Err(Error::data("eigensolver input is empty"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "requested {k} eigenpairs of a {n}x{n} matrix; the count must lie in [1, {n}]"
        )));
    }
    let sym = 0.5 * (a + &a.t());
    let decomp = nd_to_na(&sym).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        decomp.eigenvalues[j]
            .partial_cmp(&decomp.eigenvalues[i])
            .unwrap()
    });
    let values = Array1::from_iter(order.iter().take(k).map(|&i| decomp.eigenvalues[i]));
    let mut vectors = Array2::<f64>::zeros((n, k));
    for (c, &i) in order.iter().take(k).enumerate() {
        for r in 0..n {
            vectors[(r, c)] = decomp.eigenvectors[(r, i)];
        }
    }
    fix_signs(&mut vectors);
    let scale = frobenius(&sym).max(f64::MIN_POSITIVE);
    for c in 0..k {
        let v = vectors.column(c);
        let av = sym.dot(&v);
        let resid = (&av - &(&v * values[c]))
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        if resid > cfg.tolerance.max(1e-12) * scale * 10.0 {
            return Err(Error::numerical(format!(
                "eigenpair {c} residual {resid:.3e} exceeds tolerance at scale {scale:.3e}"
            )));
        }
    }
    Ok(EigPairs {
        values,
        vectors,
        truncated: false,
    })
}

/// Top-k pairs of the generalized problem A v = lambda B v for symmetric
/// A and positive-semidefinite B, solved by rank-truncated whitening:
/// eigendecompose B, keep components above `rank_tol` times its largest
/// eigenvalue, transform A into that basis, solve the standard problem
/// and map back. Returned vectors satisfy v' B v = 1.
///
/// If `k` exceeds the numerical rank of B the result carries every
/// available pair and `truncated` is set, mirroring the rank caps of the
/// extraction methods built on top.
pub fn eig_gen(a: &Array2<f64>, b: &Array2<f64>, k: usize, cfg: &SolverConfig) -> Result<EigPairs> {
    ensure_square("generalized eigensolver A", a)?;
    ensure_square("generalized eigensolver B", b)?;
    ensure_finite("generalized eigensolver A", a)?;
    ensure_finite("generalized eigensolver B", b)?;
    if a.nrows() != b.nrows() {
        return Err(Error::data(format!(
            "generalized eigensolver blocks disagree: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let n = a.nrows();
    if k == 0 {
        return Err(Error::invalid("requested zero eigenpairs"));
    }
    let b_sym = 0.5 * (b + &b.t());
    let decomp = nd_to_na(&b_sym).symmetric_eigen();
    let bmax = decomp
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::MIN, f64::max)
        .max(0.0);
    let keep: Vec<usize> = (0..n)
        .filter(|&i| decomp.eigenvalues[i] > cfg.rank_tol * bmax && decomp.eigenvalues[i] > 0.0)
        .collect();
    let r = keep.len();
    if r == 0 {
        log::warn!("generalized eigensolver: B has numerical rank 0; returning no pairs");
        return Ok(EigPairs {
            values: Array1::zeros(0),
            vectors: Array2::zeros((n, 0)),
            truncated: true,
        });
    }
    // Whitening basis W = V_keep diag(1/sqrt(lambda)); columns B-orthonormal.
    let mut w = Array2::<f64>::zeros((n, r));
    for (c, &i) in keep.iter().enumerate() {
        let s = decomp.eigenvalues[i].sqrt();
        for row in 0..n {
            w[(row, c)] = decomp.eigenvectors[(row, i)] / s;
        }
    }
    let a_sym = 0.5 * (a + &a.t());
    let a_white = w.t().dot(&a_sym).dot(&w);
    let take = k.min(r);
    let inner = eig_sym(&a_white, take, cfg)?;
    let mut vectors = w.dot(&inner.vectors);
    fix_signs(&mut vectors);
    Ok(EigPairs {
        values: inner.values,
        vectors,
        truncated: take < k,
    })
}

/// Conjugate-gradient solve of B z = y given only the action of B.
/// Starting from zero keeps iterates inside range(B), so consistent
/// singular systems converge to the minimum-norm solution.
fn cg_solve<F: Fn(&Array1<f64>) -> Array1<f64>>(
    apply_b: &F,
    y: &Array1<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Array1<f64>> {
    let n = y.len();
    let ynorm = y.dot(y).sqrt();
    if ynorm == 0.0 {
        return Ok(Array1::zeros(n));
    }
    let mut x = Array1::<f64>::zeros(n);
    let mut r = y.clone();
    let mut p = r.clone();
    let mut rs = r.dot(&r);
    for _ in 0..max_iter {
        let bp = apply_b(&p);
        let curvature = p.dot(&bp);
        if curvature <= 0.0 || !curvature.is_finite() {
            break; // left the definite subspace; best effort so far
        }
        let alpha = rs / curvature;
        x.scaled_add(alpha, &p);
        r.scaled_add(-alpha, &bp);
        let rs_new = r.dot(&r);
        if rs_new.sqrt() <= tol * ynorm {
            return Ok(x);
        }
        p = &r + &(&p * (rs_new / rs));
        rs = rs_new;
    }
    Ok(x)
}

/// Iterative power method with deflation for A v = lambda B v, given only
/// matrix-vector actions. Intended for positive-semidefinite A and
/// B symmetric positive definite on the relevant subspace; extracts `k`
/// pairs one at a time, deflating each converged pair out of A before
/// continuing. The contract matches [`eig_gen`] up to `cfg.tolerance`.
pub fn power_deflate<FA, FB>(
    apply_a: FA,
    apply_b: FB,
    dim: usize,
    k: usize,
    cfg: &SolverConfig,
) -> Result<EigPairs>
where
    FA: Fn(&Array1<f64>) -> Array1<f64>,
    FB: Fn(&Array1<f64>) -> Array1<f64>,
{
    if dim == 0 {
        return Err(Error::data("iterative eigensolver on empty space"));
    }
    if k == 0 || k > dim {
        return Err(Error::invalid(format!(
            "requested {k} eigenpairs in dimension {dim}; the count must lie in [1, {dim}]"
        )));
    }
    // Solve the inner systems well past the outer target so they never
    // dominate the eigenpair residual.
    let cg_tol = (cfg.tolerance * 1e-4).max(1e-15);
    let cg_cap = (dim * 20).max(200);
    let mut values: Vec<f64> = Vec::with_capacity(k);
    let mut vectors: Vec<Array1<f64>> = Vec::with_capacity(k); // B-orthonormal
    let mut bv: Vec<Array1<f64>> = Vec::with_capacity(k); // B v_i, for deflation
    // Orthonormal basis of span{B v_i}. Later pairs are judged on the
    // residual outside this span: the component inside it is inherited from
    // the (finite) accuracy of already-locked pairs and no amount of further
    // iteration on the current pair can remove it.
    let mut locked_q: Vec<Array1<f64>> = Vec::with_capacity(k);
    let mut truncated = false;
    let mut scale_est: f64 = 0.0;

    let deflated_a = |x: &Array1<f64>, values: &[f64], bv: &[Array1<f64>]| -> Array1<f64> {
        let mut y = apply_a(x);
        for (lam, w) in values.iter().zip(bv.iter()) {
            let c = w.dot(x) * lam;
            y.scaled_add(-c, w);
        }
        y
    };

    for pair in 0..k {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FF_EE00 + pair as u64);
        let mut x = Array1::from_shape_fn(dim, |_| rng.random::<f64>() - 0.5);
        // Remove found components so we start inside the complement.
        for (v, w) in vectors.iter().zip(bv.iter()) {
            let c = w.dot(&x);
            x.scaled_add(-c, v);
        }
        let nrm = x.dot(&x).sqrt().max(f64::MIN_POSITIVE);
        x.mapv_inplace(|t| t / nrm);

        let mut lambda = 0.0f64;
        let mut converged = false;
        let mut achieved = f64::INFINITY;
        for _it in 0..cfg.max_iterations {
            let y = deflated_a(&x, &values, &bv);
            let mut z = cg_solve(&apply_b, &y, cg_tol, cg_cap)?;
            for (v, w) in vectors.iter().zip(bv.iter()) {
                let c = w.dot(&z);
                z.scaled_add(-c, v);
            }
            let bz = apply_b(&z);
            let bnorm2 = z.dot(&bz);
            if !bnorm2.is_finite() {
                return Err(Error::numerical(
                    "iterative eigensolver produced non-finite iterate",
                ));
            }
            if bnorm2 <= 1e-28 * (1.0 + scale_est) {
                // Spectrum exhausted on range(B): nothing left to extract.
                truncated = true;
                converged = false;
                achieved = 0.0;
                break;
            }
            let bnorm = bnorm2.sqrt();
            let xn = z.mapv(|t| t / bnorm);
            let ax = deflated_a(&xn, &values, &bv);
            let bx = apply_b(&xn);
            lambda = xn.dot(&ax); // xn' B xn = 1 by construction
            let mut r = &ax - &(&bx * lambda);
            for q in &locked_q {
                let c = q.dot(&r);
                r.scaled_add(-c, q);
            }
            let resid = r.dot(&r).sqrt();
            let scale = lambda.abs().max(scale_est).max(1e-30);
            achieved = resid / scale;
            x = xn;
            if achieved <= cfg.tolerance.max(1e-14) * 10.0 {
                converged = true;
                break;
            }
        }
        if achieved == 0.0 && truncated {
            break;
        }
        if !converged {
            return Err(Error::numerical(format!(
                "power iteration did not converge for pair {pair} within {} iterations \
                 (achieved relative residual {achieved:.3e})",
                cfg.max_iterations
            )));
        }
        scale_est = scale_est.max(lambda.abs());
        let w = apply_b(&x);
        let mut q = w.clone();
        for prev in &locked_q {
            let c = prev.dot(&q);
            q.scaled_add(-c, prev);
        }
        let qn = q.dot(&q).sqrt();
        if qn > 1e-14 * (1.0 + scale_est) {
            locked_q.push(q.mapv(|t| t / qn));
        }
        bv.push(w);
        vectors.push(x);
        values.push(lambda);
    }

    if values.is_empty() {
        return Ok(EigPairs {
            values: Array1::zeros(0),
            vectors: Array2::zeros((dim, 0)),
            truncated: true,
        });
    }
    // Descending order (deflation already yields it for PSD A, but make it
    // a guarantee) and deterministic signs.
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());
    let vals = Array1::from_iter(order.iter().map(|&i| values[i]));
    let mut vecs = Array2::<f64>::zeros((dim, vals.len()));
    for (c, &i) in order.iter().enumerate() {
        for r in 0..dim {
            vecs[(r, c)] = vectors[i][r];
        }
    }
    fix_signs(&mut vecs);
    let truncated = truncated || vals.len() < k;
    Ok(EigPairs {
        values: vals,
        vectors: vecs,
        truncated,
    })
}

/// Moore-Penrose pseudoinverse with singular values below
/// `rank_tol * sigma_max` treated as zero. Symmetric inputs go through
/// the symmetric eigensolver, which reaches machine precision where the
/// iterative bidiagonal route can stall on rank-deficient inputs.
pub fn pinv(m: &Array2<f64>, cfg: &SolverConfig) -> Result<Array2<f64>> {
    ensure_finite("pseudoinverse input", m)?;
    if m.is_empty() {
        return Err(Error::data("pseudoinverse of an empty matrix"));
    }
    if m.nrows() == m.ncols() {
        let scale = m.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        let asym = (m - &m.t())
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max);
        if asym <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            let eig = eig_sym(m, m.nrows(), cfg)?;
            let vmax = eig.values.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            let cut = cfg.rank_tol * vmax;
            let n = m.nrows();
            let mut out = Array2::<f64>::zeros((n, n));
            for i in 0..eig.values.len() {
                if eig.values[i].abs() > cut {
                    let w = 1.0 / eig.values[i];
                    let vi = eig.vectors.column(i);
                    for r in 0..n {
                        for c in 0..n {
                            out[(r, c)] += w * vi[r] * vi[c];
                        }
                    }
                }
            }
            return Ok(out);
        }
    }
    let na = nd_to_na(m);
    let svd = na.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = cfg.rank_tol * smax;
    let pinv = svd
        .pseudo_inverse(eps)
        .map_err(|e| Error::numerical(format!("svd-based pseudoinverse failed: {e}")))?;
    Ok(na_to_nd(&pinv))
}

/// Numerical rank: the number of singular values above
/// `rank_tol * sigma_max`. The zero matrix has rank 0.
pub fn estimate_rank(m: &Array2<f64>, rank_tol: f64) -> Result<usize> {
    ensure_finite("rank estimation input", m)?;
    if m.is_empty() {
        return Ok(0);
    }
    let svd = nd_to_na(m).svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if smax <= 0.0 {
        return Ok(0);
    }
    Ok(svd
        .singular_values
        .iter()
        .filter(|&&s| s > rank_tol * smax)
        .count())
}

/// Convenience: solve the ridge-regularized symmetric system
/// (S + lambda I) X = R for X with SPD S via Cholesky, falling back to
/// the pseudoinverse when the factorization fails.
pub(crate) fn solve_spd(s: &Array2<f64>, lambda: f64, rhs: &Array2<f64>) -> Result<Array2<f64>> {
    let n = s.nrows();
    let mut reg = s.clone();
    for i in 0..n {
        reg[(i, i)] += lambda;
    }
    let na = nd_to_na(&reg);
    if let Some(chol) = na.clone().cholesky() {
        let solved = chol.solve(&nd_to_na(rhs));
        return Ok(na_to_nd(&solved));
    }
    let inv = pinv(&reg, &SolverConfig::default())?;
    Ok(inv.dot(rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn eig_sym_two_by_two_hand_case() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1 with (1,1)/sqrt2, (1,-1)/sqrt2.
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let r = eig_sym(&a, 2, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.values[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.values[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.vectors[(0, 0)], FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(r.vectors[(1, 0)], FRAC_1_SQRT_2, epsilon = 1e-12);
        // Sign convention: tie in magnitude resolves toward row 0 positive.
        assert_abs_diff_eq!(r.vectors[(0, 1)], FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(r.vectors[(1, 1)], -FRAC_1_SQRT_2, epsilon = 1e-12);
        assert!(!r.truncated);
    }

    #[test]
    fn eig_sym_validates_inputs() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        assert!(matches!(
            eig_sym(&a, 0, &SolverConfig::default()),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            eig_sym(&a, 3, &SolverConfig::default()),
            Err(Error::InvalidParam(_))
        ));
        let rect = Array2::<f64>::zeros((2, 3));
        assert!(matches!(
            eig_sym(&rect, 1, &SolverConfig::default()),
            Err(Error::Data(_))
        ));
        let nan = array![[f64::NAN, 0.0], [0.0, 1.0]];
        assert!(matches!(
            eig_sym(&nan, 1, &SolverConfig::default()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn eig_sym_one_by_one() {
        let a = array![[5.0]];
        let r = eig_sym(&a, 1, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.values[0], 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.vectors[(0, 0)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_gen_diagonal_hand_case() {
        // A = diag(4,3), B = diag(4,1): pairs (1, e1/2) and (3, e2).
        let a = array![[4.0, 0.0], [0.0, 3.0]];
        let b = array![[4.0, 0.0], [0.0, 1.0]];
        let r = eig_gen(&a, &b, 2, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.values[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.values[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.vectors[(0, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.vectors[(1, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.vectors[(0, 1)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.vectors[(1, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_gen_identity_b_matches_eig_sym() {
        let a = array![[2.0, 1.0, 0.0], [1.0, 2.0, 0.5], [0.0, 0.5, 1.5]];
        let b = Array2::<f64>::eye(3);
        let cfg = SolverConfig::default();
        let gen = eig_gen(&a, &b, 3, &cfg).unwrap();
        let std = eig_sym(&a, 3, &cfg).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(gen.values[i], std.values[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn eig_gen_truncates_on_rank_deficient_b() {
        let a = Array2::<f64>::eye(2);
        let b = array![[1.0, 0.0], [0.0, 0.0]];
        let r = eig_gen(&a, &b, 2, &SolverConfig::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r.truncated);
        assert_abs_diff_eq!(r.values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.vectors[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_gen_zero_b_returns_empty_with_flag() {
        let a = Array2::<f64>::eye(2);
        let b = Array2::<f64>::zeros((2, 2));
        let r = eig_gen(&a, &b, 1, &SolverConfig::default()).unwrap();
        assert!(r.is_empty());
        assert!(r.truncated);
    }

    #[test]
    fn eig_gen_vectors_are_b_orthonormal() {
        let a = array![[3.0, 1.0, 0.2], [1.0, 2.5, 0.3], [0.2, 0.3, 1.0]];
        let b = array![[2.0, 0.5, 0.0], [0.5, 1.5, 0.1], [0.0, 0.1, 1.0]];
        let r = eig_gen(&a, &b, 3, &SolverConfig::default()).unwrap();
        let gram = r.vectors.t().dot(&b).dot(&r.vectors);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[(i, j)], want, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn power_deflate_two_by_two_hand_case() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let aa = a.clone();
        let r = power_deflate(
            move |x| aa.dot(x),
            |x| x.clone(),
            2,
            1,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.values[0], 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(r.vectors[(0, 0)], FRAC_1_SQRT_2, epsilon = 1e-6);
        assert_abs_diff_eq!(r.vectors[(1, 0)], FRAC_1_SQRT_2, epsilon = 1e-6);
    }

    #[test]
    fn power_deflate_full_spectrum_matches_eig_gen() {
        // Separated spectrum keeps plain power iteration honest.
        let a = array![
            [5.0, 0.7, 0.1, 0.0],
            [0.7, 3.0, 0.2, 0.1],
            [0.1, 0.2, 1.8, 0.05],
            [0.0, 0.1, 0.05, 0.9]
        ];
        let b = array![
            [2.0, 0.3, 0.0, 0.0],
            [0.3, 1.5, 0.1, 0.0],
            [0.0, 0.1, 1.2, 0.05],
            [0.0, 0.0, 0.05, 1.0]
        ];
        let cfg = SolverConfig::default();
        let dense = eig_gen(&a, &b, 4, &cfg).unwrap();
        let (ac, bc) = (a.clone(), b.clone());
        let it = power_deflate(move |x| ac.dot(x), move |x| bc.dot(x), 4, 4, &cfg).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(it.values[i], dense.values[i], epsilon = 1e-6);
            let dv = dense.vectors.column(i).to_owned();
            let iv = it.vectors.column(i).to_owned();
            let d_plus: f64 = (&dv - &iv).iter().map(|t| t * t).sum::<f64>().sqrt();
            let d_minus: f64 = (&dv + &iv).iter().map(|t| t * t).sum::<f64>().sqrt();
            assert!(d_plus.min(d_minus) < 1e-5, "pair {i} direction mismatch");
        }
    }

    #[test]
    fn power_deflate_degenerate_spectrum_converges() {
        let a = Array2::<f64>::eye(3);
        let r = power_deflate(
            move |x: &Array1<f64>| x.clone(),
            |x| x.clone(),
            3,
            3,
            &SolverConfig::default(),
        )
        .unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(r.values[i], 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn power_deflate_reports_non_convergence() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let cfg = SolverConfig {
            max_iterations: 1,
            tolerance: 1e-16,
            ..SolverConfig::default()
        };
        let err = power_deflate(move |x| a.dot(x), |x| x.clone(), 2, 2, &cfg).unwrap_err();
        match err {
            Error::Numerical(msg) => assert!(msg.contains("residual"), "got: {msg}"),
            other => panic!("expected a numerical error, got {other:?}"),
        }
    }

    #[test]
    fn pinv_rank_one_hand_case() {
        // [[1,2],[2,4]] = u s v' with s^2 = 25, so the pseudoinverse is M'/25.
        let m = array![[1.0, 2.0], [2.0, 4.0]];
        let p = pinv(&m, &SolverConfig::default()).unwrap();
        let want = m.t().mapv(|x| x / 25.0);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(p[(i, j)], want[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pinv_satisfies_penrose_conditions() {
        let m = array![
            [1.0, 2.0, 0.0],
            [0.5, -1.0, 1.0],
            [2.0, 0.0, 1.0],
            [-1.0, 1.0, 0.5],
            [0.0, 3.0, -1.0]
        ];
        let p = pinv(&m, &SolverConfig::default()).unwrap();
        let mpm = m.dot(&p).dot(&m);
        let pmp = p.dot(&m).dot(&p);
        let mp = m.dot(&p);
        let pm = p.dot(&m);
        let checks = [
            (&mpm - &m).iter().map(|x| x.abs()).fold(0.0, f64::max),
            (&pmp - &p).iter().map(|x| x.abs()).fold(0.0, f64::max),
            (&mp - &mp.t()).iter().map(|x| x.abs()).fold(0.0, f64::max),
            (&pm - &pm.t()).iter().map(|x| x.abs()).fold(0.0, f64::max),
        ];
        for (i, c) in checks.iter().enumerate() {
            assert!(*c < 1e-8, "Penrose condition {i} violated: {c:.3e}");
        }
    }

    #[test]
    fn pinv_of_zero_is_zero() {
        let m = Array2::<f64>::zeros((3, 2));
        let p = pinv(&m, &SolverConfig::default()).unwrap();
        assert_eq!(p.dim(), (2, 3));
        assert!(p.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn estimate_rank_uses_relative_cutoff() {
        let m = array![[1.0, 0.0], [0.0, 1e-12]];
        assert_eq!(estimate_rank(&m, 1e-9).unwrap(), 1);
        // Relative cutoff: scaling the matrix must not change the verdict.
        let scaled = m.mapv(|x| x * 1e6);
        assert_eq!(estimate_rank(&scaled, 1e-9).unwrap(), 1);
        assert_eq!(estimate_rank(&Array2::<f64>::zeros((3, 3)), 1e-9).unwrap(), 0);
        assert_eq!(estimate_rank(&Array2::<f64>::eye(4), 1e-9).unwrap(), 4);
    }
}
