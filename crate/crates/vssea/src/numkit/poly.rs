//! Real polynomials with ascending-order coefficient storage.

use super::NumError;
use num_complex::Complex64;

/// Polynomial `c[0] + c[1] x + ... + c[n] x^n`; trailing zero coefficients
/// are trimmed so the leading coefficient of a nonzero polynomial is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds from ascending coefficients, trimming trailing zeros.
    pub fn new(coeffs: &[f64]) -> Self {
        let mut c = coeffs.to_vec();
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        Polynomial { coeffs: c }
    }

    /// Expands `prod (x - r_i)` over complex roots. The root set must be
    /// closed under conjugation so the result is real.
    pub fn from_complex_roots(roots: &[Complex64]) -> Result<Self, NumError> {
        let mut c: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= ci * r;
            }
            c = next;
        }
        let scale = c.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let mut real = Vec::with_capacity(c.len());
        for z in &c {
            if z.im.abs() > 1e-9 * scale.max(1.0) {
                return Err(NumError::InvalidPoles(
                    "root set is not closed under conjugation".into(),
                ));
            }
            real.push(z.re);
        }
        Ok(Polynomial::new(&real))
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Ascending coefficients.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Horner evaluation at a complex point.
    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut c = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Polynomial::new(&c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::new(&[0.0]);
        }
        let c: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &a)| a * i as f64)
            .collect();
        Polynomial::new(&c)
    }

    /// Scales so the leading coefficient is one.
    pub fn monic(&self) -> Polynomial {
        let lead = self.leading();
        assert!(lead != 0.0, "monic: zero polynomial");
        Polynomial::new(&self.coeffs.iter().map(|c| c / lead).collect::<Vec<_>>())
    }
}
