//! Stability tests and pole placement without eigenvalue solvers.

use super::matrix::{Lu, Matrix};
use super::poly::Polynomial;
use super::NumError;
use num_complex::Complex64;

/// Decides strict Hurwitz stability (all roots in the open left half plane)
/// with a Routh array.
///
/// A zero first-column entry is replaced by a small positive epsilon so the
/// array can be completed, and the polynomial is reported as not strictly
/// Hurwitz: such entries only arise from right-half-plane or imaginary-axis
/// roots, and borderline root sets count as unstable here.
pub fn routh_hurwitz(p: &Polynomial) -> Result<bool, NumError> {
    let n = p.degree();
    if n == 0 {
        return Err(NumError::InvalidPolynomial(
            "degree must be at least one".into(),
        ));
    }
    if p.leading() == 0.0 {
        return Err(NumError::InvalidPolynomial("zero leading coefficient".into()));
    }
    // Normalize so the leading coefficient is +1; descending order below.
    let monic = if p.leading() > 0.0 { p.monic() } else { p.scale_neg_monic() };
    let desc: Vec<f64> = monic.coeffs().iter().rev().copied().collect();

    let width = n / 2 + 1;
    let mut prev: Vec<f64> = vec![0.0; width]; // row for s^n
    let mut curr: Vec<f64> = vec![0.0; width]; // row for s^(n-1)
    for (i, &c) in desc.iter().enumerate() {
        if i % 2 == 0 {
            prev[i / 2] = c;
        } else {
            curr[i / 2] = c;
        }
    }
    if n == 1 {
        return Ok(desc[1] > 0.0);
    }

    let mut borderline = false;
    let mut first_column = vec![prev[0], curr[0]];
    for _ in 2..=n {
        let row_scale = curr.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if row_scale == 0.0 {
            // Entire row vanished: the root set is symmetric about the
            // imaginary axis, hence not strictly Hurwitz.
            return Ok(false);
        }
        let mut pivot = curr[0];
        if pivot == 0.0 {
            borderline = true;
            pivot = 1e-12 * row_scale;
        }
        let mut next = vec![0.0; width];
        for j in 0..width - 1 {
            let a = prev.get(j + 1).copied().unwrap_or(0.0);
            let b = curr.get(j + 1).copied().unwrap_or(0.0);
            next[j] = (pivot * a - prev[0] * b) / pivot;
        }
        first_column.push(next[0]);
        prev = curr;
        curr = next;
    }
    Ok(!borderline && first_column.iter().all(|&c| c > 0.0))
}

impl Polynomial {
    /// Monic normalization that flips sign when the leading coefficient is
    /// negative (root set is unchanged).
    fn scale_neg_monic(&self) -> Polynomial {
        let lead = self.leading();
        Polynomial::new(&self.coeffs().iter().map(|c| c / lead).collect::<Vec<_>>())
    }
}

/// Characteristic polynomial of a square matrix by the Faddeev-LeVerrier
/// recurrence (trace based, no eigendecomposition). Returns the monic
/// polynomial in ascending coefficient order.
pub fn char_poly(a: &Matrix) -> Result<Polynomial, NumError> {
    if !a.is_square() {
        return Err(NumError::DimensionMismatch(format!(
            "characteristic polynomial needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut m = Matrix::identity(n);
    for k in 1..=n {
        m = a.mul(&m);
        let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
        let c = -trace / k as f64;
        coeffs[n - k] = c;
        for i in 0..n {
            m[(i, i)] += c;
        }
    }
    Ok(Polynomial::new(&coeffs))
}

/// True when every eigenvalue of `a` has negative real part, decided through
/// the Routh array of the characteristic polynomial.
pub fn is_hurwitz_matrix(a: &Matrix) -> Result<bool, NumError> {
    routh_hurwitz(&char_poly(a)?)
}

/// State-feedback gains for the pure four-integrator chain.
///
/// For the chain error dynamics the closed-loop characteristic polynomial is
/// `s^4 + k4 s^3 + k3 s^2 + k2 s + k1`, so the gain vector is read directly
/// off the expanded pole polynomial: `K = [k1, k2, k3, k4]` in ascending
/// coefficient order. Poles must lie strictly in the left half plane and be
/// closed under conjugation.
pub fn pole_place_chain(poles: &[Complex64]) -> Result<[f64; 4], NumError> {
    if poles.len() != 4 {
        return Err(NumError::InvalidPoles(format!(
            "expected 4 poles, got {}",
            poles.len()
        )));
    }
    for p in poles {
        if p.re >= 0.0 {
            return Err(NumError::InvalidPoles(format!(
                "pole {p} does not have negative real part"
            )));
        }
    }
    let poly = Polynomial::from_complex_roots(poles)?;
    let c = poly.coeffs();
    debug_assert_eq!(c.len(), 5);
    Ok([c[0], c[1], c[2], c[3]])
}

/// Single-input pole placement by Ackermann's formula:
/// `K = e_n^T C^-1 phi(A)` with `C` the controllability matrix and `phi`
/// the desired characteristic polynomial. Requires a controllable pair.
pub fn ackermann(a: &Matrix, b: &Matrix, poles: &[Complex64]) -> Result<Vec<f64>, NumError> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n || b.cols() != 1 {
        return Err(NumError::DimensionMismatch(format!(
            "ackermann needs square A and n x 1 B, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if poles.len() != n {
        return Err(NumError::InvalidPoles(format!(
            "expected {n} poles, got {}",
            poles.len()
        )));
    }
    // Controllability matrix [B, AB, ..., A^(n-1)B].
    let mut ctrl = Matrix::zeros(n, n);
    let mut col: Vec<f64> = (0..n).map(|i| b[(i, 0)]).collect();
    for j in 0..n {
        for i in 0..n {
            ctrl[(i, j)] = col[i];
        }
        col = a.mul_vec(&col);
    }
    // y solves C^T y = e_n, so y^T = e_n^T C^-1.
    let lu = Lu::factor(&ctrl.transpose(), "ackermann controllability matrix")
        .map_err(|_| NumError::NotStabilizable)?;
    let mut e_n = vec![0.0; n];
    e_n[n - 1] = 1.0;
    let y = lu.solve_vec(&e_n);

    // phi(A) by Horner's scheme on matrices.
    let phi = Polynomial::from_complex_roots(poles)?;
    let cs = phi.coeffs();
    let mut phi_a = Matrix::identity(n).scale(cs[cs.len() - 1]);
    for k in (0..cs.len() - 1).rev() {
        phi_a = a.mul(&phi_a);
        for i in 0..n {
            phi_a[(i, i)] += cs[k];
        }
    }
    // K = y^T phi(A).
    let mut k_gain = vec![0.0; n];
    for j in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            acc += y[i] * phi_a[(i, j)];
        }
        k_gain[j] = acc;
    }
    Ok(k_gain)
}
