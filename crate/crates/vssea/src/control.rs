//! Feedback laws: robust state feedback on the integrator-chain error,
//! sliding mode control with a boundary layer, and the PD + scalar
//! disturbance observer loop that servos the stiffness motor.
//!
//! The position laws consume the chain-form error state and the
//! reconstructed disturbance terms; with compensation switched off they
//! degrade to the plain pole-placement/LQR baselines used for contrast
//! studies.

use crate::numkit::{routh_hurwitz, Matrix, Polynomial};
use crate::plant::StiffnessState;
use crate::reconstruction::ErrorState;
use thiserror::Error;

/// Control-law configuration errors.
#[derive(Debug, Clone, Error)]
pub enum ControlError {
    #[error("feedback gains {gains:?} give an unstable error polynomial")]
    UnstableErrorDynamics { gains: [f64; 4] },
    #[error("sliding surface {s:?} is not a stable manifold")]
    UnstableManifold { s: [f64; 3] },
    #[error("{name} must be {requirement}, got {value}")]
    InvalidParameter { name: &'static str, requirement: &'static str, value: f64 },
}

// --- state feedback ---

/// State feedback gains `K = [k1, k2, k3, k4]` on the chain-form error;
/// the closed loop has characteristic polynomial
/// `s^4 + k4 s^3 + k3 s^2 + k2 s + k1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfbGains {
    pub k: [f64; 4],
}

impl SfbGains {
    /// Closed-loop characteristic polynomial, ascending coefficients.
    pub fn char_poly(&self) -> Polynomial {
        Polynomial::new(&[self.k[0], self.k[1], self.k[2], self.k[3], 1.0])
    }

    /// Checks that the closed-loop polynomial is Hurwitz.
    pub fn validate(&self) -> Result<(), ControlError> {
        if !self.k.iter().all(|v| v.is_finite()) {
            return Err(ControlError::UnstableErrorDynamics { gains: self.k });
        }
        match routh_hurwitz(&self.char_poly()) {
            Ok(true) => Ok(()),
            _ => Err(ControlError::UnstableErrorDynamics { gains: self.k }),
        }
    }

    /// Closed-loop error matrix: the shift chain with `-K` in the last row.
    pub fn closed_loop_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(4, 4);
        for i in 0..3 {
            m[(i, i + 1)] = 1.0;
        }
        for j in 0..4 {
            m[(3, j)] = -self.k[j];
        }
        m
    }
}

/// Robust state feedback torque:
/// `tau_e = J_e (K^T e_hat + r4 + c * pi4_tilde_hat)` with `c = 1` when
/// compensation is on (the matched disturbance is cancelled through the
/// input channel) and `c = 0` for the plain baseline.
pub fn sfb_control(
    gains: &SfbGains,
    e_hat: &ErrorState,
    pi4_tilde_hat: f64,
    r4: f64,
    j_e: f64,
    compensation_on: bool,
) -> f64 {
    let e = e_hat.as_array();
    let mut v = r4;
    for i in 0..4 {
        v += gains.k[i] * e[i];
    }
    if compensation_on {
        v += pi4_tilde_hat;
    }
    j_e * v
}

// --- sliding mode ---

/// Sliding mode settings: surface coefficients `[s1, s2, s3]` (the fourth is
/// fixed at one), switching gain `rho`, boundary-layer half-width `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmcParams {
    pub s: [f64; 3],
    /// Switching gain, rad/s^4; must exceed the worst-case residual between
    /// the true and estimated matched disturbance.
    pub rho: f64,
    /// Boundary-layer half-width in sliding-variable units; zero selects the
    /// exact sign function.
    pub epsilon: f64,
}

impl SmcParams {
    /// Manifold polynomial `s^3 + s3 s^2 + s2 s + s1`, ascending coefficients.
    pub fn manifold_poly(&self) -> Polynomial {
        Polynomial::new(&[self.s[0], self.s[1], self.s[2], 1.0])
    }

    /// Checks manifold stability, `rho > 0`, `epsilon >= 0`.
    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(ControlError::InvalidParameter {
                name: "rho",
                requirement: "positive",
                value: self.rho,
            });
        }
        if self.epsilon < 0.0 || !self.epsilon.is_finite() {
            return Err(ControlError::InvalidParameter {
                name: "epsilon",
                requirement: "nonnegative",
                value: self.epsilon,
            });
        }
        let stable = self.s[2] > 0.0
            && self.s.iter().all(|v| v.is_finite())
            && matches!(routh_hurwitz(&self.manifold_poly()), Ok(true));
        if !stable {
            return Err(ControlError::UnstableManifold { s: self.s });
        }
        Ok(())
    }
}

/// Sliding variable `sigma = s1 e1 + s2 e2 + s3 e3 + e4`.
pub fn sliding_variable(params: &SmcParams, e: &ErrorState) -> f64 {
    params.s[0] * e.e1 + params.s[1] * e.e2 + params.s[2] * e.e3 + e.e4
}

/// Sign function with a linear boundary layer: exact sign when
/// `epsilon = 0`, otherwise `sigma/epsilon` clamped to `[-1, 1]`.
pub fn smooth_sign(sigma: f64, epsilon: f64) -> f64 {
    if epsilon > 0.0 {
        (sigma / epsilon).clamp(-1.0, 1.0)
    } else if sigma > 0.0 {
        1.0
    } else if sigma < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sliding mode torque:
/// `tau_e = J_e rho smooth_sign(sigma_hat, epsilon) + J_e delta_hat` with the
/// equivalent-control term
/// `delta_hat = r4 + pi2_ddot_hat + pi4_hat + s1 e2 + s2 e3 + s3 e4`.
pub fn smc_control(
    params: &SmcParams,
    e_hat: &ErrorState,
    pi2_ddot_hat: f64,
    pi4_hat: f64,
    r4: f64,
    j_e: f64,
) -> f64 {
    let sigma_hat = sliding_variable(params, e_hat);
    let delta_hat = r4
        + pi2_ddot_hat
        + pi4_hat
        + params.s[0] * e_hat.e2
        + params.s[1] * e_hat.e3
        + params.s[2] * e_hat.e4;
    j_e * params.rho * smooth_sign(sigma_hat, params.epsilon) + j_e * delta_hat
}

// --- stiffness motor loop ---

/// Stiffness-loop gains: PD plus the scalar observer bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StiffnessGains {
    /// Proportional gain, N m/rad.
    pub kp: f64,
    /// Derivative gain, N m s/rad.
    pub kd: f64,
    /// Scalar observer bandwidth, rad/s.
    pub g_ms: f64,
}

impl StiffnessGains {
    pub fn validate(&self) -> Result<(), ControlError> {
        let fields: [(&'static str, f64); 3] =
            [("kp", self.kp), ("kd", self.kd), ("g_ms", self.g_ms)];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ControlError::InvalidParameter {
                    name,
                    requirement: "positive",
                    value,
                });
            }
        }
        Ok(())
    }
}

/// Stiffness motor torque:
/// `tau_ms = K_d (dtheta_ref - dtheta_ms) + K_p (theta_ref - theta_ms) + tau_ms_d_hat`.
pub fn stiffness_control(
    gains: &StiffnessGains,
    theta_ref: f64,
    dtheta_ref: f64,
    state: &StiffnessState,
    tau_ms_d_hat: f64,
) -> f64 {
    gains.kd * (dtheta_ref - state.dtheta_ms)
        + gains.kp * (theta_ref - state.theta_ms)
        + tau_ms_d_hat
}

/// Internal-state derivative of the scalar disturbance observer on the
/// stiffness motor. The observer treats the motor as pure inertia
/// `J_ms ddtheta_ms = tau_ms - d` and estimates the lumped disturbance `d`
/// (spring reaction + friction + external torque) through a first-order
/// channel of bandwidth `g`:
///
/// `dz/dt = -g z + g (tau_ms + g J_ms dtheta_ms)`, `d_hat = z - g J_ms dtheta_ms`.
pub fn scalar_dob_deriv(z: f64, dtheta_ms: f64, tau_ms: f64, j_ms: f64, g: f64) -> f64 {
    -g * z + g * (tau_ms + g * j_ms * dtheta_ms)
}

/// Lumped-disturbance estimate from the scalar observer state.
pub fn scalar_dob_estimate(z: f64, dtheta_ms: f64, j_ms: f64, g: f64) -> f64 {
    z - g * j_ms * dtheta_ms
}

/// One sampled observer update: advances `z` by a single RK4 step with the
/// measured velocity and applied torque held over the interval, and returns
/// the new state with its estimate.
pub fn scalar_dob_update(
    z: f64,
    dtheta_ms: f64,
    tau_ms: f64,
    j_ms: f64,
    g: f64,
    h: f64,
) -> (f64, f64) {
    let f = |z: f64| scalar_dob_deriv(z, dtheta_ms, tau_ms, j_ms, g);
    let k1 = f(z);
    let k2 = f(z + 0.5 * h * k1);
    let k3 = f(z + 0.5 * h * k2);
    let k4 = f(z + h * k3);
    let z_new = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    (z_new, scalar_dob_estimate(z_new, dtheta_ms, j_ms, g))
}
