//! Classical fixed-step fourth-order Runge-Kutta integration.

use super::NumError;

/// Advances `x` by one step of the classical RK4 scheme.
///
/// `f(t, x, dx)` writes the derivative into `dx`. Every stage evaluation is
/// checked for non-finite values so a diverging simulation aborts with a
/// diagnostic instead of silently filling the trace with NaN.
pub fn rk4_step<F>(f: &mut F, t: f64, x: &[f64], h: f64) -> Result<Vec<f64>, NumError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut stage = vec![0.0; n];

    f(t, x, &mut k1);
    check_finite(&k1, t)?;
    for i in 0..n {
        stage[i] = x[i] + 0.5 * h * k1[i];
    }
    f(t + 0.5 * h, &stage, &mut k2);
    check_finite(&k2, t)?;
    for i in 0..n {
        stage[i] = x[i] + 0.5 * h * k2[i];
    }
    f(t + 0.5 * h, &stage, &mut k3);
    check_finite(&k3, t)?;
    for i in 0..n {
        stage[i] = x[i] + h * k3[i];
    }
    f(t + h, &stage, &mut k4);
    check_finite(&k4, t)?;

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push(x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    check_finite(&out, t)?;
    Ok(out)
}

fn check_finite(v: &[f64], t: f64) -> Result<(), NumError> {
    if v.iter().all(|a| a.is_finite()) {
        Ok(())
    } else {
        Err(NumError::NonFinite { t })
    }
}
