//! Two-inertia elastic actuator model with a position-controlled variable
//! stiffness mechanism.
//!
//! The drive motor and the link are coupled through an elastic element whose
//! torque/stiffness depends on the stiffness-motor position `theta_ms`. All
//! quantities live on the link side; motor-side inertia and friction are
//! reflected through the gear ratio at the parameter boundary.

use crate::numkit::Matrix;
use thiserror::Error;

/// Plant modeling errors.
#[derive(Debug, Clone, Error)]
pub enum PlantError {
    #[error("parameter {name} is invalid: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error(
        "stiffness motor position {value} rad is below the minimum {min} rad; \
         the elastic torque model is singular at zero"
    )]
    StiffnessMotorBelowMin { value: f64, min: f64 },
}

/// Physical parameters, all reflected to the link side.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    /// Link inertia, kg m^2.
    pub j_l: f64,
    /// Link viscous friction, N m s/rad.
    pub b_l: f64,
    /// Drive motor inertia (gear side), kg m^2.
    pub j_e: f64,
    /// Drive motor viscous friction (gear side), N m s/rad.
    pub b_e: f64,
    /// Linearized spring constant, N m/rad.
    pub k: f64,
    /// Gear ratio between motor shaft and gear side (dimensionless).
    pub n: f64,
    /// Stiffness motor inertia, kg m^2.
    pub j_ms: f64,
    /// Stiffness motor viscous friction, N m s/rad.
    pub b_ms: f64,
    /// Elastic torque scale, N m rad^2 (torque = upsilon_tau/theta_ms^3 * sin(delta/2)).
    pub upsilon_tau: f64,
    /// Stiffness scale, N m rad^2 (stiffness = upsilon_k/theta_ms^3 * cos(delta/2)).
    pub upsilon_k: f64,
    /// Smallest admissible stiffness motor position, rad.
    pub theta_ms_min: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            j_l: 0.05,
            b_l: 0.02,
            j_e: 0.5,
            b_e: 0.1,
            k: 100.0,
            n: 100.0,
            j_ms: 0.01,
            b_ms: 0.005,
            upsilon_tau: 0.2,
            upsilon_k: 0.1,
            theta_ms_min: 0.02,
        }
    }
}

impl PlantParams {
    /// Builds link-side parameters from motor-side inertia/friction:
    /// `J_e = n^2 J_m + J_g`, `b_e = n^2 b_m + b_g`.
    pub fn reflect_motor_side(mut self, j_m: f64, b_m: f64, j_g: f64, b_g: f64) -> Self {
        self.j_e = self.n * self.n * j_m + j_g;
        self.b_e = self.n * self.n * b_m + b_g;
        self
    }

    /// Checks positivity/nonnegativity constraints; the failing field is
    /// named in the error.
    pub fn validate(&self) -> Result<(), PlantError> {
        let positive: [(&'static str, f64); 7] = [
            ("j_l", self.j_l),
            ("j_e", self.j_e),
            ("k", self.k),
            ("j_ms", self.j_ms),
            ("upsilon_tau", self.upsilon_tau),
            ("upsilon_k", self.upsilon_k),
            ("theta_ms_min", self.theta_ms_min),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(PlantError::InvalidParam {
                    name,
                    reason: format!("must be positive and finite, got {value}"),
                });
            }
        }
        let nonnegative: [(&'static str, f64); 3] =
            [("b_l", self.b_l), ("b_e", self.b_e), ("b_ms", self.b_ms)];
        for (name, value) in nonnegative {
            if value < 0.0 || !value.is_finite() {
                return Err(PlantError::InvalidParam {
                    name,
                    reason: format!("must be nonnegative and finite, got {value}"),
                });
            }
        }
        if self.n < 1.0 || !self.n.is_finite() {
            return Err(PlantError::InvalidParam {
                name: "n",
                reason: format!("gear ratio must be at least one, got {}", self.n),
            });
        }
        Ok(())
    }

    fn check_theta_ms(&self, theta_ms: f64) -> Result<(), PlantError> {
        if theta_ms < self.theta_ms_min || !theta_ms.is_finite() {
            return Err(PlantError::StiffnessMotorBelowMin {
                value: theta_ms,
                min: self.theta_ms_min,
            });
        }
        Ok(())
    }
}

/// Link and drive motor state `[theta_l, dtheta_l, theta_e, dtheta_e]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    /// Link position, rad.
    pub theta_l: f64,
    /// Link velocity, rad/s.
    pub dtheta_l: f64,
    /// Drive motor position (gear side), rad.
    pub theta_e: f64,
    /// Drive motor velocity (gear side), rad/s.
    pub dtheta_e: f64,
}

impl PlantState {
    pub fn as_array(&self) -> [f64; 4] {
        [self.theta_l, self.dtheta_l, self.theta_e, self.dtheta_e]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        PlantState { theta_l: x[0], dtheta_l: x[1], theta_e: x[2], dtheta_e: x[3] }
    }

    /// Spring deflection `theta_e - theta_l`, rad.
    pub fn deflection(&self) -> f64 {
        self.theta_e - self.theta_l
    }
}

/// Stiffness motor state `[theta_ms, dtheta_ms]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StiffnessState {
    /// Stiffness motor position, rad.
    pub theta_ms: f64,
    /// Stiffness motor velocity, rad/s.
    pub dtheta_ms: f64,
}

/// External torque disturbances, N m.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisturbanceSample {
    /// Load torque on the link.
    pub tau_l: f64,
    /// Torque disturbance on the drive motor.
    pub tau_e: f64,
    /// Torque disturbance on the stiffness motor.
    pub tau_ms: f64,
}

/// Elastic torque transmitted to the link, N m:
/// `upsilon_tau / theta_ms^3 * sin(delta / 2)` with deflection
/// `delta = theta_e - theta_l`. Odd in the deflection.
pub fn spring_torque(params: &PlantParams, theta_ms: f64, delta: f64) -> Result<f64, PlantError> {
    params.check_theta_ms(theta_ms)?;
    Ok(params.upsilon_tau / theta_ms.powi(3) * (0.5 * delta).sin())
}

/// Elastic stiffness, N m/rad:
/// `upsilon_k / theta_ms^3 * cos(delta / 2)`. Even in the deflection, and
/// exactly the deflection derivative of the torque when
/// `upsilon_k = upsilon_tau / 2`.
pub fn spring_stiffness(
    params: &PlantParams,
    theta_ms: f64,
    delta: f64,
) -> Result<f64, PlantError> {
    params.check_theta_ms(theta_ms)?;
    Ok(params.upsilon_k / theta_ms.powi(3) * (0.5 * delta).cos())
}

/// Link/drive-motor accelerations for a given transmitted spring torque:
///
/// `J_l ddtheta_l + b_l dtheta_l = tau_s - tau_l_dist`
/// `J_e ddtheta_e + b_e dtheta_e = tau_e - tau_s - tau_e_dist`
pub fn equilibrium_deriv(
    params: &PlantParams,
    state: &PlantState,
    tau_e: f64,
    tau_s: f64,
    dist: &DisturbanceSample,
) -> PlantState {
    PlantState {
        theta_l: state.dtheta_l,
        dtheta_l: (tau_s - params.b_l * state.dtheta_l - dist.tau_l) / params.j_l,
        theta_e: state.dtheta_e,
        dtheta_e: (tau_e - tau_s - params.b_e * state.dtheta_e - dist.tau_e) / params.j_e,
    }
}

/// Stiffness motor acceleration under its drive torque, the reaction of the
/// elastic element, and an external disturbance:
///
/// `J_ms ddtheta_ms + b_ms dtheta_ms = tau_ms - tau_s - tau_ms_dist`
pub fn stiffness_mech_deriv(
    params: &PlantParams,
    state: &StiffnessState,
    tau_ms: f64,
    tau_s: f64,
    tau_ms_dist: f64,
) -> StiffnessState {
    StiffnessState {
        theta_ms: state.dtheta_ms,
        dtheta_ms: (tau_ms - tau_s - params.b_ms * state.dtheta_ms - tau_ms_dist) / params.j_ms,
    }
}

/// Derivative of the constant-stiffness model `tau_s = k (theta_e - theta_l)`.
pub fn linear_deriv(
    params: &PlantParams,
    state: &PlantState,
    tau_e: f64,
    dist: &DisturbanceSample,
) -> PlantState {
    let tau_s = params.k * state.deflection();
    equilibrium_deriv(params, state, tau_e, tau_s, dist)
}

/// Full nonlinear derivative: elastic torque from the current stiffness
/// motor position drives both the link pair and (as reaction) the stiffness
/// mechanism.
pub fn nonlinear_deriv(
    params: &PlantParams,
    state: &PlantState,
    stiffness: &StiffnessState,
    tau_e: f64,
    tau_ms: f64,
    dist: &DisturbanceSample,
) -> Result<(PlantState, StiffnessState), PlantError> {
    let tau_s = spring_torque(params, stiffness.theta_ms, state.deflection())?;
    Ok((
        equilibrium_deriv(params, state, tau_e, tau_s, dist),
        stiffness_mech_deriv(params, stiffness, tau_ms, tau_s, dist.tau_ms),
    ))
}

/// Constant-stiffness state-space matrices for the state
/// `x = [theta_l, dtheta_l, theta_e, dtheta_e]`:
/// `dx/dt = A x + B tau_e - D` with `D` carrying the torque disturbances.
pub fn linear_matrices(params: &PlantParams) -> (Matrix, Matrix) {
    let (j_l, b_l, j_e, b_e, k) = (params.j_l, params.b_l, params.j_e, params.b_e, params.k);
    let a = Matrix::from_rows(&[
        &[0.0, 1.0, 0.0, 0.0],
        &[-k / j_l, -b_l / j_l, k / j_l, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[k / j_e, 0.0, -k / j_e, -b_e / j_e],
    ]);
    let b = Matrix::column_from(&[0.0, 0.0, 0.0, 1.0 / j_e]);
    (a, b)
}

/// Disturbance vector `D = [0, tau_l/J_l, 0, tau_e/J_e]` entering the
/// constant-stiffness model as `dx/dt = A x + B u - D`.
pub fn disturbance_vector(params: &PlantParams, dist: &DisturbanceSample) -> [f64; 4] {
    [0.0, dist.tau_l / params.j_l, 0.0, dist.tau_e / params.j_e]
}

/// Mechanical energy of the frictionless constant-stiffness model, J.
pub fn linear_energy(params: &PlantParams, state: &PlantState) -> f64 {
    0.5 * params.j_l * state.dtheta_l * state.dtheta_l
        + 0.5 * params.j_e * state.dtheta_e * state.dtheta_e
        + 0.5 * params.k * state.deflection() * state.deflection()
}
