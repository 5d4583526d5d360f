//! Integrator-chain form of the actuator model and the tracking error state.
//!
//! The state `[theta_l, dtheta_l, theta_e, dtheta_e]` is rewritten as a pure
//! integrator chain in which every non-chain term — spring torque, friction,
//! external torque — is lumped into two channel disturbances. On that form
//! the tracking error has *matched* disturbances only (everything enters
//! through the input channel), which is what the feedback laws in `control`
//! exploit.

use crate::numkit::Matrix;
use crate::plant::{PlantParams, PlantState};

/// Reference trajectory sample with derivatives through the fourth.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferencePoint {
    /// Position reference, rad.
    pub r: f64,
    /// First derivative, rad/s.
    pub dr: f64,
    /// Second derivative, rad/s^2.
    pub ddr: f64,
    /// Third derivative, rad/s^3.
    pub dddr: f64,
    /// Fourth derivative, rad/s^4 (feedforward term for the chain form).
    pub d4r: f64,
}

impl ReferencePoint {
    /// Constant set-point: all derivatives zero.
    pub fn constant(r: f64) -> Self {
        ReferencePoint { r, ..ReferencePoint::default() }
    }
}

/// Torque disturbance on the link with its first two time derivatives, plus
/// the torque disturbance on the drive motor. One code path serves both
/// simulation truth (oracle tests) and scaled observer estimates
/// (closed-loop runs).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisturbanceSource {
    /// Link torque disturbance, N m.
    pub tau_l_d: f64,
    /// Its first time derivative, N m/s.
    pub tau_l_d_dot: f64,
    /// Its second time derivative, N m/s^2.
    pub tau_l_d_ddot: f64,
    /// Drive motor torque disturbance, N m.
    pub tau_e_d: f64,
}

impl DisturbanceSource {
    /// No disturbance anywhere (the baseline controllers run on this).
    pub fn zero() -> Self {
        DisturbanceSource::default()
    }

    /// Rescales acceleration-channel estimates back to torques:
    /// the link channel carries `tau_l_d / J_l`, the motor channel
    /// `tau_e_d / J_e`, so multiplying by the inertias recovers the torques.
    pub fn from_estimate_channels(
        params: &PlantParams,
        d: &[f64; 4],
        d_dot: &[f64; 4],
        d_ddot: &[f64; 4],
    ) -> Self {
        DisturbanceSource {
            tau_l_d: params.j_l * d[1],
            tau_l_d_dot: params.j_l * d_dot[1],
            tau_l_d_ddot: params.j_l * d_ddot[1],
            tau_e_d: params.j_e * d[3],
        }
    }
}

/// Chain-form disturbance terms for one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PiTerms {
    /// Acceleration-channel disturbance, rad/s^2 (`theta_e - ddtheta_l`).
    pub pi2: f64,
    /// Its first time derivative, rad/s^3.
    pub pi2_dot: f64,
    /// Its second time derivative, rad/s^4.
    pub pi2_ddot: f64,
    /// Input-channel disturbance, rad/s^2 (`u/J_e - ddtheta_e`).
    pub pi4: f64,
}

/// Tracking error vector on the chain form.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorState {
    /// Position error, rad.
    pub e1: f64,
    /// Velocity error, rad/s.
    pub e2: f64,
    /// Acceleration error, rad/s^2.
    pub e3: f64,
    /// Jerk error, rad/s^3.
    pub e4: f64,
}

impl ErrorState {
    pub fn as_array(&self) -> [f64; 4] {
        [self.e1, self.e2, self.e3, self.e4]
    }

    pub fn from_slice(e: &[f64]) -> Self {
        ErrorState { e1: e[0], e2: e[1], e3: e[2], e4: e[3] }
    }
}

/// Chain-form system matrices: the pure shift `Gamma` (ones on the
/// superdiagonal) and the input column `B = [0, 0, 0, 1/J_e]`.
pub fn gamma_model(j_e: f64) -> (Matrix, Matrix) {
    assert!(j_e > 0.0, "drive inertia must be positive");
    let mut gamma = Matrix::zeros(4, 4);
    for i in 0..3 {
        gamma[(i, i + 1)] = 1.0;
    }
    let b = Matrix::column_from(&[0.0, 0.0, 0.0, 1.0 / j_e]);
    (gamma, b)
}

/// Acceleration-channel disturbance:
/// `(J_l theta_e + k (theta_l - theta_e) + b_l dtheta_l + tau_l_d) / J_l`,
/// equivalently `theta_e - ddtheta_l`.
pub fn pi2(params: &PlantParams, state: &PlantState, tau_l_d: f64) -> f64 {
    (params.j_l * state.theta_e + params.k * (state.theta_l - state.theta_e)
        + params.b_l * state.dtheta_l
        + tau_l_d)
        / params.j_l
}

/// Input-channel disturbance:
/// `(k (theta_e - theta_l) + b_e dtheta_e + tau_e_d) / J_e`, equivalently
/// `tau_e / J_e - ddtheta_e` for any applied torque.
pub fn pi4(params: &PlantParams, state: &PlantState, tau_e_d: f64) -> f64 {
    (params.k * state.deflection() + params.b_e * state.dtheta_e + tau_e_d) / params.j_e
}

/// First and second time derivatives of the acceleration-channel
/// disturbance, propagated through the model rather than by numerical
/// differentiation of measurements. The motor acceleration needs the applied
/// torque `tau_e`; the disturbance source supplies the torque values and
/// derivatives (exact or estimated).
pub fn pi2_derivatives(
    params: &PlantParams,
    state: &PlantState,
    tau_e: f64,
    src: &DisturbanceSource,
) -> (f64, f64) {
    let (j_l, b_l, j_e, b_e, k) = (params.j_l, params.b_l, params.j_e, params.b_e, params.k);
    let delta = state.deflection();
    let ddelta = state.dtheta_e - state.dtheta_l;

    let ddtheta_l = (k * delta - b_l * state.dtheta_l - src.tau_l_d) / j_l;
    let d3theta_l = (k * ddelta - b_l * ddtheta_l - src.tau_l_d_dot) / j_l;
    let pi2_dot = state.dtheta_e - d3theta_l;

    let ddtheta_e = (tau_e - k * delta - b_e * state.dtheta_e - src.tau_e_d) / j_e;
    let d4theta_l = (k * (ddtheta_e - ddtheta_l) - b_l * d3theta_l - src.tau_l_d_ddot) / j_l;
    let pi2_ddot = ddtheta_e - d4theta_l;

    (pi2_dot, pi2_ddot)
}

/// All four chain-form disturbance terms at one instant.
pub fn pi_terms(
    params: &PlantParams,
    state: &PlantState,
    tau_e: f64,
    src: &DisturbanceSource,
) -> PiTerms {
    let (pi2_dot, pi2_ddot) = pi2_derivatives(params, state, tau_e, src);
    PiTerms {
        pi2: pi2(params, state, src.tau_l_d),
        pi2_dot,
        pi2_ddot,
        pi4: pi4(params, state, src.tau_e_d),
    }
}

/// Tracking error on the chain form. The last two components use the
/// reconstructed disturbance terms, so with exact values they equal
/// `ddr - ddtheta_l` and `dddr - d3theta_l`.
pub fn error_state(
    ref_pt: &ReferencePoint,
    state: &PlantState,
    pi2_hat: f64,
    pi2_dot_hat: f64,
) -> ErrorState {
    ErrorState {
        e1: ref_pt.r - state.theta_l,
        e2: ref_pt.dr - state.dtheta_l,
        e3: ref_pt.ddr - state.theta_e + pi2_hat,
        e4: ref_pt.dddr - state.dtheta_e + pi2_dot_hat,
    }
}

/// Lumped input-channel disturbance of the error dynamics: the sum of the
/// twice-differentiated acceleration-channel term and the input-channel term.
pub fn matched_disturbance(pi2_ddot: f64, pi4: f64) -> f64 {
    pi2_ddot + pi4
}
