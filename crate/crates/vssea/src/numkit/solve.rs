//! Controllability, Lyapunov, and Riccati solvers for small systems.

use super::matrix::{Lu, Matrix};
use super::stability::{ackermann, is_hurwitz_matrix};
use super::NumError;
use num_complex::Complex64;

/// Relative pivot threshold for the controllability rank test.
const RANK_PIVOT_TOL: f64 = 1e-10;

/// Rank of the controllability matrix `[B, AB, ..., A^(n-1) B]`.
///
/// Entries are measured against the matrix max-norm with a relative pivot
/// threshold of 1e-10, so the answer is scale invariant.
pub fn controllability_rank(a: &Matrix, b: &Matrix) -> Result<usize, NumError> {
    if !a.is_square() || b.rows() != a.rows() || b.cols() == 0 {
        return Err(NumError::DimensionMismatch(format!(
            "controllability needs square A and conforming B, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = a.rows();
    let m = b.cols();
    let mut ctrl = Matrix::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        ctrl.set_block(0, k * m, &block);
        block = a.mul(&block);
    }
    Ok(ctrl.rank(RANK_PIVOT_TOL))
}

/// Row-stacked vectorization of a square matrix.
fn vec_rows(m: &Matrix) -> Vec<f64> {
    m.data().to_vec()
}

fn unvec_rows(v: &[f64], n: usize) -> Matrix {
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = v[i * n + j];
        }
    }
    out
}

fn lyapunov_residual(a_cl: &Matrix, p: &Matrix, q: &Matrix) -> Matrix {
    a_cl.transpose().mul(p).add(&p.mul(a_cl)).add(q)
}

/// Solves the continuous Lyapunov equation `A^T P + P A = -Q` by Kronecker
/// vectorization: `(A^T (x) I + I (x) A^T) vec(P) = -vec(Q)`.
///
/// One step of iterative refinement is applied; the result is symmetrized
/// and its residual is verified against `1e-9 * ||Q||_F`. Intended for state
/// dimensions up to about a dozen, where the dense n^2 x n^2 solve is cheap.
pub fn solve_lyapunov(a_cl: &Matrix, q: &Matrix) -> Result<Matrix, NumError> {
    if !a_cl.is_square() {
        return Err(NumError::DimensionMismatch(format!(
            "Lyapunov: A must be square, got {}x{}",
            a_cl.rows(),
            a_cl.cols()
        )));
    }
    if q.rows() != a_cl.rows() || !q.is_square() {
        return Err(NumError::DimensionMismatch(format!(
            "Lyapunov: Q must match A, got {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    let q_norm = q.frobenius_norm();
    if !q.is_symmetric(1e-12 * q_norm.max(1.0)) {
        return Err(NumError::NotSymmetric("Q in Lyapunov equation"));
    }
    let n = a_cl.rows();
    let at = a_cl.transpose();
    let eye = Matrix::identity(n);
    // With row-stacked vec: vec(A^T P) = (A^T (x) I) vec(P),
    // vec(P A) = (I (x) A^T) vec(P).
    let kron_sum = at.kron(&eye).add(&eye.kron(&at));
    let lu = Lu::factor(&kron_sum, "Lyapunov Kronecker system")?;
    let rhs: Vec<f64> = vec_rows(q).iter().map(|v| -v).collect();
    let mut p_vec = lu.solve_vec(&rhs);

    // One round of iterative refinement tightens the residual well below
    // the certificate tolerance.
    let p = unvec_rows(&p_vec, n);
    let defect = lyapunov_residual(a_cl, &p, q);
    let correction = lu.solve_vec(&vec_rows(&defect).iter().map(|v| -v).collect::<Vec<_>>());
    for (pv, c) in p_vec.iter_mut().zip(&correction) {
        *pv += c;
    }
    let p = unvec_rows(&p_vec, n).symmetrized();

    let tolerance = 1e-9 * q_norm;
    let residual = lyapunov_residual(a_cl, &p, q).frobenius_norm();
    if !residual.is_finite() || residual > tolerance {
        return Err(NumError::ResidualTooLarge { residual, tolerance });
    }
    Ok(p)
}

/// Result of a Riccati solve: stabilizing solution, optimal gain, and
/// convergence diagnostics.
#[derive(Debug, Clone)]
pub struct CareSolution {
    /// Stabilizing solution `P` (symmetric positive semidefinite).
    pub p: Matrix,
    /// Optimal gain `K = R^-1 B^T P` (`m x n`).
    pub k: Matrix,
    /// Newton iterations used.
    pub iterations: usize,
    /// Frobenius norm of the Riccati residual at the solution.
    pub residual: f64,
}

/// Frobenius norm of `A^T P + P A - P B R^-1 B^T P + Q`.
pub fn care_residual(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> f64 {
    let r_lu = match Lu::factor(r, "R in Riccati residual") {
        Ok(lu) => lu,
        Err(_) => return f64::INFINITY,
    };
    let bt_p = b.transpose().mul(p);
    let mut r_inv_btp = Matrix::zeros(b.cols(), p.cols());
    for j in 0..p.cols() {
        let col: Vec<f64> = (0..b.cols()).map(|i| bt_p[(i, j)]).collect();
        let solved = r_lu.solve_vec(&col);
        for i in 0..b.cols() {
            r_inv_btp[(i, j)] = solved[i];
        }
    }
    let quad = p.mul(&b.mul(&r_inv_btp));
    a.transpose()
        .mul(p)
        .add(&p.mul(a))
        .sub(&quad)
        .add(q)
        .frobenius_norm()
}

/// Solves the continuous algebraic Riccati equation
/// `A^T P + P A - P B R^-1 B^T P + Q = 0` by Newton-Kleinman iteration.
///
/// The iteration is seeded with a stabilizing gain: zero if `A` is already
/// Hurwitz, otherwise a pole-placement gain via Ackermann's formula (which
/// requires a controllable single-input pair). Each Newton step solves one
/// Lyapunov equation for the current closed loop; convergence is quadratic.
/// The returned solution satisfies the residual bound
/// `||residual||_F <= 1e-8 * (1 + ||P||_F)` and `A - B K` is Hurwitz.
pub fn solve_care(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
) -> Result<CareSolution, NumError> {
    let n = a.rows();
    let m = b.cols();
    if !a.is_square() || b.rows() != n {
        return Err(NumError::DimensionMismatch(format!(
            "Riccati: A {}x{} and B {}x{} are not conforming",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if q.rows() != n || !q.is_square() || r.rows() != m || !r.is_square() {
        return Err(NumError::DimensionMismatch(
            "Riccati: Q must match A and R must match B columns".into(),
        ));
    }
    if !q.is_symmetric(1e-12 * q.frobenius_norm().max(1.0)) {
        return Err(NumError::NotSymmetric("Q in Riccati equation"));
    }
    if r.cholesky().is_none() {
        return Err(NumError::NotPositiveDefinite);
    }

    let r_lu = Lu::factor(r, "R in Riccati gain update")?;
    let gain_from_p = |p: &Matrix| -> Matrix {
        let bt_p = b.transpose().mul(p);
        let mut k = Matrix::zeros(m, n);
        for j in 0..n {
            let col: Vec<f64> = (0..m).map(|i| bt_p[(i, j)]).collect();
            let solved = r_lu.solve_vec(&col);
            for i in 0..m {
                k[(i, j)] = solved[i];
            }
        }
        k
    };

    let mut k = stabilizing_seed(a, b)?;
    let max_iterations = 60;
    for iteration in 1..=max_iterations {
        let a_cl = a.sub(&b.mul(&k));
        // Lyapunov right-hand side Q + K^T R K for the current policy.
        let q_k = q.add(&k.transpose().mul(&r.mul(&k))).symmetrized();
        let p = solve_lyapunov(&a_cl, &q_k).map_err(|e| match e {
            NumError::Singular(_) => NumError::NotStabilizable,
            other => other,
        })?;
        let k_next = gain_from_p(&p);
        let step = k_next.sub(&k).max_abs();
        k = k_next;
        let residual = care_residual(a, b, q, r, &p);
        let tolerance = 1e-9 * (1.0 + p.frobenius_norm());
        if residual <= tolerance && step <= 1e-9 * (1.0 + k.max_abs()) {
            if !is_hurwitz_matrix(&a.sub(&b.mul(&k)))? {
                return Err(NumError::NotStabilizable);
            }
            return Ok(CareSolution { p, k, iterations: iteration, residual });
        }
        if iteration == max_iterations {
            return Err(NumError::NoConvergence { iterations: iteration, residual });
        }
    }
    unreachable!("Newton iteration loop always returns");
}

/// Stabilizing initial gain for the Newton iteration.
///
/// `K = 0` when `A` is already Hurwitz. Otherwise the seed is placed by
/// Ackermann's formula at distinct left-half-plane poles scaled past the
/// magnitude of `A`; this path needs a controllable single-input pair, so
/// unstable multi-input systems are reported as lacking a seed.
fn stabilizing_seed(a: &Matrix, b: &Matrix) -> Result<Matrix, NumError> {
    let n = a.rows();
    let m = b.cols();
    if is_hurwitz_matrix(a)? {
        return Ok(Matrix::zeros(m, n));
    }
    if m != 1 {
        return Err(NumError::NotStabilizable);
    }
    let spread = 1.0 + a.max_abs();
    let poles: Vec<Complex64> = (1..=n)
        .map(|i| Complex64::new(-spread * i as f64, 0.0))
        .collect();
    let k = ackermann(a, b, &poles).map_err(|_| NumError::NotStabilizable)?;
    let mut k_mat = Matrix::zeros(1, n);
    for (j, &v) in k.iter().enumerate() {
        k_mat[(0, j)] = v;
    }
    if !is_hurwitz_matrix(&a.sub(&b.mul(&k_mat)))? {
        return Err(NumError::NotStabilizable);
    }
    Ok(k_mat)
}
