//! Fused closed-loop integration: link/motor pair, disturbance observer,
//! stiffness motor, and its scalar observer advance together under one
//! fixed-step RK4 scheme, with both control loops sampled once per step.

use crate::control::{
    scalar_dob_deriv, scalar_dob_estimate, sfb_control, sliding_variable, smc_control,
    stiffness_control, SfbGains, SmcParams,
};
use crate::numkit::rk4_step;
use crate::observer::{extract_estimates, observer_matrices, observer_deriv_into, DisturbanceEstimate};
use crate::plant::{
    equilibrium_deriv, linear_matrices, spring_torque, stiffness_mech_deriv, PlantParams,
    PlantState, StiffnessState,
};
use crate::reconstruction::{
    error_state, matched_disturbance, pi_terms, DisturbanceSource, ErrorState, ReferencePoint,
};
use crate::scenario::{synthesize, ScenarioConfig, ScenarioError, SynthesizedLaw};

/// When the position-loop torque is computed. Either way the torque solves
/// the same self-consistency relation (see `evaluate_control`); the modes
/// differ only in how often it is refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlMode {
    /// Once per step on the step-start state, then held over the step — the
    /// behaviour of a digital controller.
    #[default]
    Sampled,
    /// Re-evaluated inside every integrator stage, for fidelity studies
    /// against continuous-time predictions.
    Continuous,
}

/// Where the reconstruction gets its disturbance values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedbackSource {
    /// Observer estimates — the deployable configuration.
    #[default]
    Observer,
    /// The true disturbance signals with their analytic derivatives.
    ExactTruth,
}

/// Sinusoidal corruption `amplitude * sin(omega t)` added to the
/// matched-disturbance estimate, for bounded-estimate-error studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasInjection {
    pub amplitude: f64,
    pub omega: f64,
}

/// Knobs that vary per experiment rather than per scenario.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    pub control: ControlMode,
    pub feedback: FeedbackSource,
    /// Corruption of the matched-disturbance estimate seen by the law.
    pub estimate_bias: Option<BiasInjection>,
    /// Starting state for the link/motor pair (rest at the origin when
    /// absent).
    pub initial_plant: Option<PlantState>,
    /// Force the position-loop torque to zero for free-response studies.
    pub open_loop: bool,
}

/// One recorded sample. `u` is the torque applied over the step starting at
/// `t`; the error entries are the reconstructed values the law acted on.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRow {
    pub t: f64,
    pub r: f64,
    pub theta_l: f64,
    pub dtheta_l: f64,
    pub theta_e: f64,
    pub dtheta_e: f64,
    pub u: f64,
    pub dist_l_true: f64,
    pub dist_e_true: f64,
    pub dist_l_est: f64,
    pub dist_e_est: f64,
    pub sigma: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
}

/// Decimated record of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub rows: Vec<TraceRow>,
    /// Full fused state at the last completed step (see the `X0`/`A0`/`MS0`/
    /// `Z0` layout constants), for undecimated end-point comparisons.
    pub final_state: Vec<f64>,
}

// Fused state layout.
/// Offset of the link/motor pair (4 entries) in the fused state.
pub const X0: usize = 0;
/// Offset of the auxiliary observer state (12 entries).
pub const A0: usize = 4;
/// Offset of the stiffness motor position and velocity (2 entries).
pub const MS0: usize = 16;
/// Offset of the scalar stiffness-loop observer state (1 entry).
pub const Z0: usize = 18;
/// Total fused state length.
pub const NSTATE: usize = 19;

/// Runs a scenario with the default options (sampled control, observer
/// feedback, rest initial state).
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimTrace, ScenarioError> {
    run(config, &SimOptions::default())
}

/// Runs a scenario with explicit experiment options.
pub fn run(config: &ScenarioConfig, opts: &SimOptions) -> Result<SimTrace, ScenarioError> {
    config.validate()?;
    let synth = synthesize(config)?;
    let p = &config.plant;
    let (a_lin, b_lin) = linear_matrices(p);
    let obs = observer_matrices(&a_lin, &b_lin, &synth.dob_gains)?;
    let law = match &synth.law {
        SynthesizedLaw::StateFeedback { gains, compensation, .. } => {
            LawRuntime::Sfb { gains: *gains, compensation: *compensation }
        }
        SynthesizedLaw::SlidingMode { params, .. } => LawRuntime::Smc(*params),
    };
    let stiff = config.controller.stiffness;
    let dob_gains = synth.dob_gains;
    let continuous = opts.control == ControlMode::Continuous;

    let h = config.sim.step_s;
    let n_steps = (config.sim.duration / h + 1e-9).floor() as usize;
    let decim = config.sim.decimation;

    let mut y = vec![0.0; NSTATE];
    if let Some(init) = opts.initial_plant {
        y[X0..X0 + 4].copy_from_slice(&init.as_array());
    }
    y[MS0] = config.theta_ms_ref;

    let mut rows: Vec<TraceRow> = Vec::with_capacity(n_steps / decim + 2);

    for step in 0..=n_steps {
        let t = step as f64 * h;
        let state = PlantState::from_slice(&y[X0..X0 + 4]);
        let ms = StiffnessState { theta_ms: y[MS0], dtheta_ms: y[MS0 + 1] };

        // Estimates are always extracted: the trace logs them even when the
        // law ignores them.
        let est = extract_estimates(
            &y[A0..A0 + 12],
            &y[X0..X0 + 4],
            &dob_gains,
            config.observer.projection,
        );
        let src = reconstruction_source(config, opts, t, &est);
        let ref_pt = config.reference.eval(t);
        let fb = evaluate_control(p, &law, &ref_pt, &state, &src, bias_at(opts, t));
        let u = if opts.open_loop { 0.0 } else { fb.u };

        let tau_ms_d_hat = if config.controller.stiffness_dob {
            scalar_dob_estimate(y[Z0], ms.dtheta_ms, p.j_ms, stiff.g_ms)
        } else {
            0.0
        };
        let tau_ms = stiffness_control(&stiff, config.theta_ms_ref, 0.0, &ms, tau_ms_d_hat);

        if step % decim == 0 {
            rows.push(TraceRow {
                t,
                r: ref_pt.r,
                theta_l: state.theta_l,
                dtheta_l: state.dtheta_l,
                theta_e: state.theta_e,
                dtheta_e: state.dtheta_e,
                u,
                dist_l_true: config.disturbance.link.eval(t),
                dist_e_true: config.disturbance.motor.eval(t),
                dist_l_est: p.j_l * est.d[1],
                dist_e_est: p.j_e * est.d[3],
                sigma: fb.sigma,
                e1: fb.e.e1,
                e2: fb.e.e2,
                e3: fb.e.e3,
                e4: fb.e.e4,
            });
        }
        if step == n_steps {
            break;
        }

        // One fused RK4 step with the sampled torques held; in continuous
        // mode the position-loop torque is recomputed at every stage.
        let mut field_fault: Option<String> = None;
        let mut field = |tt: f64, yy: &[f64], dy: &mut [f64]| {
            let st = PlantState::from_slice(&yy[X0..X0 + 4]);
            let ms_st = StiffnessState { theta_ms: yy[MS0], dtheta_ms: yy[MS0 + 1] };
            let dist = config.disturbance.sample(tt);
            let u_now = if opts.open_loop {
                0.0
            } else if continuous {
                let est_now = extract_estimates(
                    &yy[A0..A0 + 12],
                    &yy[X0..X0 + 4],
                    &dob_gains,
                    config.observer.projection,
                );
                let src_now = reconstruction_source(config, opts, tt, &est_now);
                let rp = config.reference.eval(tt);
                evaluate_control(p, &law, &rp, &st, &src_now, bias_at(opts, tt)).u
            } else {
                u
            };
            let tau_s = if config.nonlinear_spring {
                match spring_torque(p, ms_st.theta_ms, st.deflection()) {
                    Ok(v) => v,
                    Err(err) => {
                        if field_fault.is_none() {
                            field_fault = Some(err.to_string());
                        }
                        f64::NAN
                    }
                }
            } else {
                p.k * st.deflection()
            };
            let dx = equilibrium_deriv(p, &st, u_now, tau_s, &dist);
            dy[X0..X0 + 4].copy_from_slice(&dx.as_array());
            observer_deriv_into(&obs, &yy[A0..A0 + 12], u_now, &yy[X0..X0 + 4], &mut dy[A0..A0 + 12]);
            let dms = stiffness_mech_deriv(p, &ms_st, tau_ms, tau_s, dist.tau_ms);
            dy[MS0] = dms.theta_ms;
            dy[MS0 + 1] = dms.dtheta_ms;
            dy[Z0] = scalar_dob_deriv(yy[Z0], ms_st.dtheta_ms, tau_ms, p.j_ms, stiff.g_ms);
        };
        match rk4_step(&mut field, t, &y, h) {
            Ok(next) => y = next,
            Err(err) => {
                let detail = field_fault.unwrap_or_else(|| err.to_string());
                return Err(ScenarioError::Diverged {
                    step,
                    t,
                    detail,
                    partial: Box::new(SimTrace { rows, final_state: y }),
                });
            }
        }
    }

    Ok(SimTrace { rows, final_state: y })
}

#[derive(Clone, Copy)]
enum LawRuntime {
    Sfb { gains: SfbGains, compensation: bool },
    Smc(SmcParams),
}

struct FeedbackEval {
    u: f64,
    sigma: f64,
    e: ErrorState,
}

fn bias_at(opts: &SimOptions, t: f64) -> f64 {
    match opts.estimate_bias {
        Some(b) => b.amplitude * (b.omega * t).sin(),
        None => 0.0,
    }
}

/// Disturbance values for the chain-form reconstruction. The plain
/// state-feedback kinds always reconstruct from the known model terms only;
/// the observer-backed kinds read either the scaled estimates or the exact
/// signals, per the experiment options.
fn reconstruction_source(
    config: &ScenarioConfig,
    opts: &SimOptions,
    t: f64,
    est: &DisturbanceEstimate,
) -> DisturbanceSource {
    if !config.controller.kind.uses_estimates() {
        return DisturbanceSource::zero();
    }
    match opts.feedback {
        FeedbackSource::Observer => DisturbanceSource::from_estimate_channels(
            &config.plant,
            &est.d,
            &est.d_dot,
            &est.d_ddot,
        ),
        FeedbackSource::ExactTruth => config.disturbance.exact_source(t),
    }
}

/// Evaluates the position-loop law on one state snapshot.
///
/// The laws are stated against the chain model `de = Gamma e - B u + Pi~`
/// with input gain `1/J_e` and the reconstruction treated as exogenous. In
/// reality the reconstructed `pi2_ddot` contains the motor acceleration, so
/// the applied torque feeds back into it affinely with slope
/// `alpha = (1 - k/J_l)/J_e`. The runner therefore evaluates the
/// reconstruction with the torque-dependent part at zero and rescales the
/// nominal torque by `1 / (1 - J_e alpha) = J_l/k`, which realizes exactly
/// the error dynamics the law intended: `de4 = -K e` with compensation on,
/// and `de4 = -K e + Pi~4` (matched disturbance left in) with it off.
/// Feeding back a stale torque instead would make the discrete loop gain
/// `1 - k/J_l`, which is huge for any stiff spring and light link, and
/// applying the uncorrected nominal torque would multiply the designed
/// bandwidth by `k/J_l`, far beyond what the sampling rate can hold.
fn evaluate_control(
    p: &PlantParams,
    law: &LawRuntime,
    ref_pt: &ReferencePoint,
    state: &PlantState,
    src: &DisturbanceSource,
    bias: f64,
) -> FeedbackEval {
    let terms = pi_terms(p, state, 0.0, src);
    let e = error_state(ref_pt, state, terms.pi2, terms.pi2_dot);
    let loop_gain = p.k / p.j_l; // 1 - J_e * alpha

    match law {
        LawRuntime::Sfb { gains, compensation } => {
            let pi4_tilde = if *compensation {
                matched_disturbance(terms.pi2_ddot, terms.pi4) + bias
            } else {
                0.0
            };
            let u = sfb_control(gains, &e, pi4_tilde, ref_pt.d4r, p.j_e, *compensation)
                / loop_gain;
            FeedbackEval { u, sigma: 0.0, e }
        }
        LawRuntime::Smc(sp) => {
            let sigma = sliding_variable(sp, &e);
            let u = p.j_e
                * smc_control(sp, &e, terms.pi2_ddot + bias, terms.pi4, ref_pt.d4r, 1.0)
                / loop_gain;
            FeedbackEval { u, sigma, e }
        }
    }
}
