//! Closed-loop scenario assembly: controller synthesis from a declarative
//! configuration, fused plant/observer/stiffness-loop simulation, tracking
//! metrics, and batch execution.

pub mod batch;
pub mod disturbance;
pub mod metrics;
pub mod reference;
pub mod runner;

pub use batch::{run_batch, run_batch_sequential};
pub use disturbance::{ChannelProfile, DisturbanceProfile};
pub use metrics::{compute_metrics, Metrics};
pub use reference::ReferenceTrajectory;
pub use runner::{
    run, run_scenario, BiasInjection, ControlMode, FeedbackSource, SimOptions, SimTrace, TraceRow,
    A0, MS0, NSTATE, X0, Z0,
};

use crate::control::{ControlError, SfbGains, SmcParams, StiffnessGains};
use crate::numkit::{
    controllability_rank, solve_care, solve_lyapunov, Matrix, NumError, Polynomial,
};
use crate::observer::{design_gains, DobGains, ObserverError};
use crate::plant::{PlantError, PlantParams};
use crate::reconstruction::gamma_model;
use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Anything that can go wrong between reading a scenario and finishing a
/// simulation.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
    #[error(transparent)]
    Numerics(#[from] NumError),
    #[error("chain model is not controllable: rank {rank} of 4")]
    NotControllable { rank: usize },
    #[error("synthesized feedback is not certified stable: {reason}")]
    CertificateFailed { reason: String },
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("simulation diverged at step {step} (t = {t:.6} s): {detail}")]
    Diverged {
        step: usize,
        t: f64,
        detail: String,
        /// Rows recorded before the failure, for post-mortem output.
        partial: Box<SimTrace>,
    },
}

/// Position-loop controller selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    /// Pole-placement state feedback, no disturbance compensation.
    Pp,
    /// Pole-placement state feedback plus observer-based compensation.
    PpDob,
    /// LQR state feedback, no disturbance compensation.
    Lqr,
    /// LQR state feedback plus observer-based compensation.
    LqrDob,
    /// Sliding mode control on the chain-form error (always observer-fed).
    Smc,
}

impl ControllerKind {
    /// Whether the law consumes disturbance estimates. The plain variants
    /// reconstruct the error state from measured state and known model terms
    /// only, exactly like a controller built without an observer.
    pub fn uses_estimates(&self) -> bool {
        !matches!(self, ControllerKind::Pp | ControllerKind::Lqr)
    }

    /// Canonical configuration spelling.
    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Pp => "pp",
            ControllerKind::PpDob => "pp_dob",
            ControllerKind::Lqr => "lqr",
            ControllerKind::LqrDob => "lqr_dob",
            ControllerKind::Smc => "smc",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pp" => Ok(ControllerKind::Pp),
            "pp_dob" | "pp+dob" => Ok(ControllerKind::PpDob),
            "lqr" => Ok(ControllerKind::Lqr),
            "lqr_dob" | "lqr+dob" => Ok(ControllerKind::LqrDob),
            "smc" => Ok(ControllerKind::Smc),
            other => Err(format!(
                "unknown controller kind `{other}` (expected pp, pp_dob, lqr, lqr_dob, or smc)"
            )),
        }
    }
}

/// Position- and stiffness-loop controller settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSettings {
    pub kind: ControllerKind,
    /// Closed-loop poles for the pole-placement variants.
    pub poles: [Complex64; 4],
    /// Diagonal state weights for the LQR variants.
    pub lqr_q: [f64; 4],
    /// Scalar input weight for the LQR variants.
    pub lqr_r: f64,
    /// Sliding-mode surface and switching parameters.
    pub smc: SmcParams,
    /// Stiffness-loop PD gains and scalar observer bandwidth.
    pub stiffness: StiffnessGains,
    /// Whether the stiffness loop adds its disturbance estimate.
    pub stiffness_dob: bool,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        ControllerSettings {
            kind: ControllerKind::PpDob,
            poles: [Complex64::new(-8.0, 0.0); 4],
            lqr_q: [1.0, 0.1, 0.01, 0.001],
            lqr_r: 1.0,
            smc: SmcParams { s: [216.0, 108.0, 18.0], rho: 15.0, epsilon: 0.01 },
            stiffness: StiffnessGains { kp: 100.0, kd: 2.0, g_ms: 100.0 },
            stiffness_dob: true,
        }
    }
}

/// Disturbance-observer settings for the position loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverSettings {
    /// Triple-pole design bandwidth, rad/s.
    pub bandwidth: f64,
    /// Structural projection of the estimates onto the acceleration
    /// channels.
    pub projection: bool,
}

impl Default for ObserverSettings {
    fn default() -> Self {
        ObserverSettings { bandwidth: 200.0, projection: true }
    }
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    /// Total simulated time, s.
    pub duration: f64,
    /// Fixed integration step, s.
    pub step_s: f64,
    /// Record every `decimation`-th step (plus the final state).
    pub decimation: usize,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings { duration: 14.0, step_s: 1e-3, decimation: 10 }
    }
}

/// Complete declarative description of one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub plant: PlantParams,
    pub controller: ControllerSettings,
    pub observer: ObserverSettings,
    pub reference: ReferenceTrajectory,
    pub disturbance: DisturbanceProfile,
    /// Stiffness motor set-point, rad.
    pub theta_ms_ref: f64,
    /// Simulate the full elastic torque law instead of the constant-k
    /// approximation.
    pub nonlinear_spring: bool,
    pub sim: SimSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::standard()
    }
}

impl ScenarioConfig {
    /// The standard scenario every field defaults to.
    pub fn standard() -> Self {
        ScenarioConfig {
            plant: PlantParams::default(),
            controller: ControllerSettings::default(),
            observer: ObserverSettings::default(),
            reference: ReferenceTrajectory::default(),
            disturbance: DisturbanceProfile::default(),
            theta_ms_ref: 0.1,
            nonlinear_spring: false,
            sim: SimSettings::default(),
        }
    }

    /// Checks every cross-field invariant that the individual types cannot
    /// see on their own.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.plant.validate()?;
        self.reference.validate()?;
        self.disturbance.validate()?;
        let bad = |msg: String| Err(ScenarioError::InvalidConfig(msg));
        if !(self.sim.step_s > 0.0) || !self.sim.step_s.is_finite() {
            return bad(format!("sim.step_s must be positive and finite, got {}", self.sim.step_s));
        }
        if !(self.sim.duration >= self.sim.step_s) || !self.sim.duration.is_finite() {
            return bad(format!(
                "sim.duration must be finite and at least one step, got {}",
                self.sim.duration
            ));
        }
        if self.sim.decimation == 0 {
            return bad("sim.decimation must be at least 1".into());
        }
        if !(self.theta_ms_ref >= self.plant.theta_ms_min) {
            return bad(format!(
                "controller.theta_ms_ref = {} is below plant.theta_ms_min = {}",
                self.theta_ms_ref, self.plant.theta_ms_min
            ));
        }
        if !(self.observer.bandwidth > 0.0) || !self.observer.bandwidth.is_finite() {
            return bad(format!(
                "observer.bandwidth must be positive, got {}",
                self.observer.bandwidth
            ));
        }
        if !(self.controller.lqr_r > 0.0) || self.controller.lqr_q.iter().any(|q| !(*q >= 0.0)) {
            return bad("controller.lqr_q_* must be >= 0 and controller.lqr_r > 0".into());
        }
        if self.nonlinear_spring {
            // The constant-k reconstruction must agree with the elastic law
            // at the stiffness set-point, otherwise the nominal model is
            // silently biased.
            let implied = self.plant.upsilon_k / self.theta_ms_ref.powi(3);
            let rel = (self.plant.k - implied).abs() / implied.max(f64::MIN_POSITIVE);
            if rel > 1e-6 {
                return bad(format!(
                    "nonlinear spring: k = {} disagrees with upsilon_k/theta_ms_ref^3 = {}; \
                     align k with the stiffness set-point",
                    self.plant.k, implied
                ));
            }
        }
        Ok(())
    }
}

/// How the state-feedback gains were obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum GainProvenance {
    PolePlacement { poles: [Complex64; 4] },
    Lqr { iterations: usize, riccati_residual: f64 },
}

/// Synthesized position-loop law with its stability certificate.
#[derive(Debug, Clone)]
pub enum SynthesizedLaw {
    StateFeedback {
        gains: SfbGains,
        /// Whether the matched-disturbance estimate is fed forward.
        compensation: bool,
        provenance: GainProvenance,
        /// Lyapunov certificate for the closed-loop error matrix.
        lyapunov_p: Matrix,
        lyapunov_residual: f64,
    },
    SlidingMode {
        params: SmcParams,
        /// Lyapunov certificate for the reduced manifold dynamics.
        lyapunov_p: Matrix,
        lyapunov_residual: f64,
    },
}

impl SynthesizedLaw {
    /// Characteristic polynomial of the certified dynamics (closed loop for
    /// state feedback, manifold for sliding mode), ascending coefficients.
    pub fn certified_poly(&self) -> Polynomial {
        match self {
            SynthesizedLaw::StateFeedback { gains, .. } => gains.char_poly(),
            SynthesizedLaw::SlidingMode { params, .. } => params.manifold_poly(),
        }
    }
}

/// Everything `synthesize` produces for a scenario.
#[derive(Debug, Clone)]
pub struct Synthesis {
    /// Rank of the chain-form controllability matrix (must be 4).
    pub controllability_rank: usize,
    pub law: SynthesizedLaw,
    pub dob_gains: DobGains,
}

/// Builds and certifies the feedback law a scenario asks for.
///
/// Fails when the chain model is uncontrollable, the requested gains are not
/// Hurwitz, or the Lyapunov certificate cannot be produced with a residual
/// at working precision and a positive definite solution.
pub fn synthesize(config: &ScenarioConfig) -> Result<Synthesis, ScenarioError> {
    config.plant.validate()?;
    let (gamma, b) = gamma_model(config.plant.j_e);
    let rank = controllability_rank(&gamma, &b)?;
    if rank != 4 {
        return Err(ScenarioError::NotControllable { rank });
    }

    let law = match config.controller.kind {
        ControllerKind::Pp | ControllerKind::PpDob => {
            let k = crate::numkit::pole_place_chain(&config.controller.poles)?;
            let gains = SfbGains { k };
            gains.validate()?;
            let (p, residual) = certify(&gains.closed_loop_matrix())?;
            SynthesizedLaw::StateFeedback {
                gains,
                compensation: config.controller.kind == ControllerKind::PpDob,
                provenance: GainProvenance::PolePlacement { poles: config.controller.poles },
                lyapunov_p: p,
                lyapunov_residual: residual,
            }
        }
        ControllerKind::Lqr | ControllerKind::LqrDob => {
            // The LQR design lives on the normalized chain (unit input
            // column); the torque law rescales by J_e afterwards.
            let mut q = Matrix::zeros(4, 4);
            for i in 0..4 {
                q[(i, i)] = config.controller.lqr_q[i];
            }
            let mut r = Matrix::zeros(1, 1);
            r[(0, 0)] = config.controller.lqr_r;
            let unit_b = Matrix::column_from(&[0.0, 0.0, 0.0, 1.0]);
            let care = solve_care(&gamma, &unit_b, &q, &r)?;
            let gains = SfbGains {
                k: [care.k[(0, 0)], care.k[(0, 1)], care.k[(0, 2)], care.k[(0, 3)]],
            };
            gains.validate()?;
            let (p, residual) = certify(&gains.closed_loop_matrix())?;
            SynthesizedLaw::StateFeedback {
                gains,
                compensation: config.controller.kind == ControllerKind::LqrDob,
                provenance: GainProvenance::Lqr {
                    iterations: care.iterations,
                    riccati_residual: care.residual,
                },
                lyapunov_p: p,
                lyapunov_residual: residual,
            }
        }
        ControllerKind::Smc => {
            let params = config.controller.smc;
            params.validate()?;
            // Certify the third-order dynamics the error obeys once confined
            // to the manifold.
            let mut manifold = Matrix::zeros(3, 3);
            manifold[(0, 1)] = 1.0;
            manifold[(1, 2)] = 1.0;
            for j in 0..3 {
                manifold[(2, j)] = -params.s[j];
            }
            let (p, residual) = certify(&manifold)?;
            SynthesizedLaw::SlidingMode { params, lyapunov_p: p, lyapunov_residual: residual }
        }
    };

    config.controller.stiffness.validate()?;
    let dob_gains = design_gains(config.observer.bandwidth)?;
    Ok(Synthesis { controllability_rank: rank, law, dob_gains })
}

/// Solves `A^T P + P A = -I` and checks the certificate: small residual and
/// positive definite `P`.
fn certify(a_cl: &Matrix) -> Result<(Matrix, f64), ScenarioError> {
    let n = a_cl.rows();
    let q = Matrix::identity(n);
    let p = solve_lyapunov(a_cl, &q)?;
    let residual = a_cl
        .transpose()
        .mul(&p)
        .add(&p.mul(a_cl))
        .add(&q)
        .frobenius_norm();
    if p.cholesky().is_none() {
        return Err(ScenarioError::CertificateFailed {
            reason: "Lyapunov solution is not positive definite".into(),
        });
    }
    if residual > 1e-9 * q.frobenius_norm().max(1.0) {
        return Err(ScenarioError::CertificateFailed {
            reason: format!("Lyapunov residual {residual:.3e} too large"),
        });
    }
    Ok((p, residual))
}
