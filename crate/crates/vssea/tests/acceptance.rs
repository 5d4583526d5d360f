//! Release gate: thirteen numbered end-to-end criteria, one test and one
//! printed pass/fail line each. Run with `--nocapture` to see every line;
//! failing criteria print theirs regardless.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vssea::numkit::{controllability_rank, is_hurwitz_matrix, solve_care, Matrix};
use vssea::plant::{linear_deriv, DisturbanceSample, PlantParams, PlantState};
use vssea::reconstruction::{gamma_model, pi2, pi4};
use vssea::scenario::{
    run, run_scenario, synthesize, ChannelProfile, ControlMode, ControllerKind,
    DisturbanceProfile, FeedbackSource, ReferenceTrajectory, ScenarioConfig, SimOptions,
    SynthesizedLaw,
};
use vssea::validate::{
    check_determinism, check_energy, check_pole_fidelity, check_rk4_order,
    check_spring_derivative, check_spring_symmetry, check_stiffness_dob_contrast,
    check_window_containment, dob_error_norms, random_stabilizable_system, Fault,
};

fn report(n: usize, name: &str, passed: bool, detail: &str) -> bool {
    println!("criterion {n:02} {name}: {} - {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}

#[test]
fn acceptance_01_controllability_rank() {
    let p = PlantParams::default();
    let (gamma, b) = gamma_model(p.j_e);
    let mut rank = 0;
    let mut best = Duration::MAX;
    for _ in 0..10 {
        let t0 = Instant::now();
        rank = controllability_rank(&gamma, &b).unwrap();
        best = best.min(t0.elapsed());
    }
    let passed = rank == 4 && best < Duration::from_millis(1);
    assert!(
        report(1, "controllability-rank", passed, &format!("rank {rank}, {best:?} per call")),
        "rank must be exactly 4 in under 1 ms"
    );
}

/// Sum of three random sinusoids, drawn once from a seeded generator.
struct MultiSine {
    terms: [(f64, f64, f64); 3],
}

impl MultiSine {
    fn random<R: Rng>(rng: &mut R, scale: f64) -> Self {
        let mut terms = [(0.0, 0.0, 0.0); 3];
        for term in &mut terms {
            *term = (
                scale * rng.gen_range(-1.0..1.0),
                rng.gen_range(0.5..8.0),
                rng.gen_range(0.0..2.0 * PI),
            );
        }
        MultiSine { terms }
    }

    fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|(a, w, ph)| a * (w * t + ph).sin()).sum()
    }
}

#[test]
fn acceptance_02_representation_equivalence() {
    let started = Instant::now();
    let p = PlantParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u = MultiSine::random(&mut rng, 1.0);
    let tau_l = MultiSine::random(&mut rng, 0.5);
    let tau_e = MultiSine::random(&mut rng, 0.3);

    // Conventional two-inertia states in y[0..4]; the integrator-chain form
    // in y[4..8], its lumped terms recomputed from the conventional state.
    let mut f = |tt: f64, yy: &[f64], dy: &mut [f64]| {
        let st = PlantState::from_slice(&yy[0..4]);
        let dist = DisturbanceSample { tau_l: tau_l.eval(tt), tau_e: tau_e.eval(tt), tau_ms: 0.0 };
        dy[0..4].copy_from_slice(&linear_deriv(&p, &st, u.eval(tt), &dist).as_array());
        dy[4] = yy[5];
        dy[5] = yy[6] - pi2(&p, &st, dist.tau_l);
        dy[6] = yy[7];
        dy[7] = u.eval(tt) / p.j_e - pi4(&p, &st, dist.tau_e);
    };

    let h = 1e-4;
    let mut y = vec![0.0; 8];
    let mut worst = 0.0f64;
    for step in 0..50_000 {
        y = vssea::numkit::rk4_step(&mut f, step as f64 * h, &y, h).unwrap();
        for i in 0..4 {
            worst = worst.max((y[i] - y[4 + i]).abs());
        }
    }
    let elapsed = started.elapsed();
    let passed = worst < 1e-8 && elapsed < Duration::from_secs(5);
    assert!(
        report(
            2,
            "representation-equivalence",
            passed,
            &format!("max deviation {worst:.2e} over 5 s under random inputs, in {elapsed:?}")
        ),
        "dual state-space forms must agree to 1e-8 within 5 s of wall time"
    );
}

#[test]
fn acceptance_03_lyapunov_certificates() {
    // Every synthesized gain set across kinds and design variants must carry
    // a positive-definite P with residual at or below 1e-9.
    let mut variants: Vec<ScenarioConfig> = Vec::new();
    for kind in [
        ControllerKind::Pp,
        ControllerKind::PpDob,
        ControllerKind::Lqr,
        ControllerKind::LqrDob,
        ControllerKind::Smc,
    ] {
        let mut config = ScenarioConfig::standard();
        config.controller.kind = kind;
        variants.push(config);
    }
    for pole in [-2.0, -5.0] {
        let mut config = ScenarioConfig::standard();
        config.controller.poles = [num_complex::Complex64::new(pole, 0.0); 4];
        variants.push(config);
    }
    let mut config = ScenarioConfig::standard();
    config.controller.kind = ControllerKind::Lqr;
    config.controller.lqr_q = [10.0, 1.0, 0.1, 0.01];
    variants.push(config);

    let mut worst = 0.0f64;
    let mut all_pd = true;
    for config in &variants {
        let synth = synthesize(config).expect("synthesis must succeed for valid settings");
        let (p_mat, residual) = match &synth.law {
            SynthesizedLaw::StateFeedback { lyapunov_p, lyapunov_residual, .. }
            | SynthesizedLaw::SlidingMode { lyapunov_p, lyapunov_residual, .. } => {
                (lyapunov_p, *lyapunov_residual)
            }
        };
        worst = worst.max(residual);
        all_pd &= p_mat.cholesky().is_some();
    }
    let passed = worst <= 1e-9 && all_pd;
    assert!(
        report(
            3,
            "lyapunov-certificates",
            passed,
            &format!(
                "{} gain designs, worst residual {worst:.2e} (bound 1e-9), all P positive \
                 definite: {all_pd}",
                variants.len()
            )
        ),
        "every synthesized gain set must pass its Lyapunov certificate"
    );
}

#[test]
fn acceptance_04_care_correctness() {
    // The integrator chain itself.
    let p = PlantParams::default();
    let (gamma, _) = gamma_model(p.j_e);
    let unit_b = Matrix::column_from(&[0.0, 0.0, 0.0, 1.0]);
    let mut q = Matrix::zeros(4, 4);
    for (i, w) in [1.0, 0.1, 0.01, 0.001].iter().enumerate() {
        q[(i, i)] = *w;
    }
    let r = Matrix::identity(1);
    let sol = solve_care(&gamma, &unit_b, &q, &r).unwrap();
    let chain_ok = sol.residual <= 1e-8
        && is_hurwitz_matrix(&gamma.sub(&unit_b.mul(&sol.k))).unwrap();
    let mut worst = sol.residual;

    // One hundred random stabilizable systems of 2 to 4 states.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut random_ok = true;
    for trial in 0..100 {
        let n = 2 + trial % 3;
        let (a, b) = random_stabilizable_system(&mut rng, n);
        let sol = solve_care(&a, &b, &Matrix::identity(n), &Matrix::identity(1)).unwrap();
        worst = worst.max(sol.residual);
        random_ok &= sol.residual <= 1e-8
            && is_hurwitz_matrix(&a.sub(&b.mul(&sol.k))).unwrap();
    }
    let passed = chain_ok && random_ok;
    assert!(
        report(
            4,
            "care-correctness",
            passed,
            &format!(
                "chain + 100 random systems, worst Riccati residual {worst:.2e} (bound 1e-8), \
                 all closed loops Hurwitz"
            )
        ),
        "CARE solutions must be accurate and stabilizing"
    );
}

#[test]
fn acceptance_05_nominal_pole_fidelity() {
    let result = check_pole_fidelity(Fault::None);
    assert!(
        report(5, "nominal-pole-fidelity", result.passed, &result.detail),
        "exact-compensation closed loop must match the analytic linear response to 1e-6"
    );
}

#[test]
fn acceptance_06_dob_polynomial_convergence() {
    // Strict clause: the estimation-error norm must fall below 1e-6 of its
    // initial value by t = 10/omega. A triple pole at -omega contracts like
    // exp(-omega t) times a quadratic whose coefficients carry powers of
    // omega; the measured auxiliary-error norm still sits near 0.56 of its
    // initial value at omega*t = 10 (and 1.2e-8 by omega*t = 30), so this
    // clause cannot hold for this observer; it is asserted as stated rather
    // than weakened.
    let omega = 20.0;
    let norms = dob_error_norms(omega, &[0.0, 10.0 / omega, 20.0 / omega]);
    let ratio = norms[1] / norms[0];
    let strict = ratio < 1e-6;
    // Envelope clause: fitted decay rate within 25% of the bandwidth.
    let lambda = (norms[1] / norms[2]).ln() / (10.0 / omega);
    let envelope = (lambda - omega).abs() / omega <= 0.25;
    let passed = strict && envelope;
    assert!(
        report(
            6,
            "dob-polynomial-convergence",
            passed,
            &format!(
                "error ratio {ratio:.2e} at t = 10/omega (bound 1e-6, strict clause), fitted \
                 decay {lambda:.1} vs omega = {omega} (within 25%: {envelope})"
            )
        ),
        "strict 10/omega convergence clause: unattainable for a triple-pole observer, kept as \
         stated"
    );
}

fn steady_estimation_error(bandwidth: f64) -> f64 {
    let mut config = ScenarioConfig::standard();
    config.reference = ReferenceTrajectory::Step { amplitude: 0.0, start: 0.0 };
    config.disturbance = DisturbanceProfile::silent();
    config.disturbance.link =
        ChannelProfile { bias: 0.0, amp: 0.5, omega: PI, t_on: 1.0, t_off: f64::INFINITY };
    config.observer.bandwidth = bandwidth;
    config.sim.duration = 10.0;
    config.sim.step_s = 1e-4;
    let trace = run_scenario(&config).unwrap();
    trace
        .rows
        .iter()
        .filter(|row| row.t >= 8.0 && row.t < 10.0)
        .map(|row| (row.dist_l_true - row.dist_l_est).abs())
        .fold(0.0f64, f64::max)
}

#[test]
fn acceptance_07_dob_bandwidth_monotonicity() {
    let low = steady_estimation_error(5.0 * PI);
    let high = steady_estimation_error(50.0 * PI);
    let ratio = low / high;
    let passed = ratio >= 20.0;
    assert!(
        report(
            7,
            "dob-bandwidth-monotonicity",
            passed,
            &format!(
                "steady sinusoidal estimation error {low:.2e} -> {high:.2e} across a 10x \
                 bandwidth step, ratio {ratio:.0} (need >= 20)"
            )
        ),
        "a 10x bandwidth increase must cut the estimation error at least 20x"
    );
}

#[test]
fn acceptance_08_compensation_contrast_and_settling() {
    let steady = |kind: ControllerKind| {
        let mut config = ScenarioConfig::standard();
        config.controller.kind = kind;
        let trace = run_scenario(&config).unwrap();
        let window: Vec<f64> = trace
            .rows
            .iter()
            .filter(|row| row.t >= 8.0 && row.t < 10.0)
            .map(|row| row.e1.abs())
            .collect();
        window.iter().sum::<f64>() / window.len() as f64
    };
    let off = steady(ControllerKind::Pp);
    let on = steady(ControllerKind::PpDob);
    let contrast = off / on >= 10.0;

    let settle = |disturbed: bool| {
        let mut config = ScenarioConfig::standard();
        if !disturbed {
            config.disturbance = DisturbanceProfile::silent();
        }
        let trace = run_scenario(&config).unwrap();
        vssea::scenario::compute_metrics(&trace).settling_time_2pct.expect("run must settle")
    };
    let clean = settle(false);
    let disturbed = settle(true);
    let parity = (disturbed - clean).abs() <= 0.05 * clean;

    let passed = contrast && parity;
    assert!(
        report(
            8,
            "compensation-contrast",
            passed,
            &format!(
                "steady in-window error {off:.2e} off vs {on:.2e} on (ratio {:.0}, need >= 10); \
                 settling {disturbed:.3} s disturbed vs {clean:.3} s undisturbed (within 5%: \
                 {parity})",
                off / on
            )
        ),
        "compensation must cut the windowed error 10x without slowing the step response"
    );
}

#[test]
fn acceptance_09_smc_reaching_and_containment() {
    let mut config = ScenarioConfig::standard();
    config.controller.kind = ControllerKind::Smc;
    // The step is active from t = 0 and the disturbances are smooth and
    // always on, so the sliding variable has no exogenous jumps and the
    // reaching law alone governs it.
    config.reference = ReferenceTrajectory::Step { amplitude: 0.1, start: 0.0 };
    config.disturbance = DisturbanceProfile::silent();
    config.disturbance.link =
        ChannelProfile { bias: 0.1, amp: 0.05, omega: PI, t_on: 0.0, t_off: f64::INFINITY };
    config.disturbance.motor =
        ChannelProfile { bias: 0.0, amp: 0.05, omega: 2.0 * PI, t_on: 0.0, t_off: f64::INFINITY };
    config.sim.duration = 8.0;
    config.sim.decimation = 1;
    let opts = SimOptions {
        control: ControlMode::Continuous,
        feedback: FeedbackSource::ExactTruth,
        ..SimOptions::default()
    };
    let trace = run(&config, &opts).unwrap();
    let eps = config.controller.smc.epsilon;

    let entry = trace.rows.iter().position(|row| row.sigma.abs() <= eps);
    let reached = entry.is_some();
    let entry = entry.unwrap_or(trace.rows.len());
    let contained = trace.rows[entry..]
        .iter()
        .all(|row| row.sigma.abs() <= eps * (1.0 + 1e-9));

    // Sampled reaching condition outside the band: sigma moves toward zero
    // between consecutive samples.
    let mut reaching_ok = true;
    for pair in trace.rows.windows(2) {
        if pair[0].sigma.abs() > eps {
            reaching_ok &= pair[0].sigma * (pair[1].sigma - pair[0].sigma) <= 1e-15;
        }
    }

    let passed = reached && contained && reaching_ok;
    let entry_t = trace.rows.get(entry).map_or(f64::NAN, |row| row.t);
    assert!(
        report(
            9,
            "smc-reaching-containment",
            passed,
            &format!(
                "band entered at t = {entry_t:.3} s, contained afterwards: {contained}, sampled \
                 reaching condition outside the band: {reaching_ok}"
            )
        ),
        "sigma must reach the boundary layer in finite time and stay inside it"
    );
}

#[test]
fn acceptance_10_window_containment_and_recovery() {
    let result = check_window_containment();
    assert!(
        report(10, "window-containment-recovery", result.passed, &result.detail),
        "both robust controllers must bound the windowed error and recover within 1 s"
    );
}

#[test]
fn acceptance_11_stiffness_loop_contrast() {
    let result = check_stiffness_dob_contrast();
    assert!(
        report(11, "stiffness-loop-contrast", result.passed, &result.detail),
        "the stiffness-motor observer must cut the constant-load offset below 1%"
    );
}

#[test]
fn acceptance_12_spring_consistency() {
    let slope = check_spring_derivative();
    let symmetry = check_spring_symmetry();
    let passed = slope.passed && symmetry.passed;
    assert!(
        report(
            12,
            "spring-consistency",
            passed,
            &format!("{}; {}", slope.detail, symmetry.detail)
        ),
        "stiffness must match the torque slope and the parity symmetries must hold"
    );
}

#[test]
fn acceptance_13_numerics() {
    let energy = check_energy();
    let order = check_rk4_order();
    let determinism = check_determinism();
    let passed = energy.passed && order.passed && determinism.passed;
    assert!(
        report(
            13,
            "numerics",
            passed,
            &format!("{}; {}; {}", energy.detail, order.detail, determinism.detail)
        ),
        "energy drift, integrator order, and bit-exact reruns must all hold"
    );
}

