//! Batch front-end: parse a sectioned key-value config, run one of the
//! simulate/synthesize/sweep/validate commands, and report through CSV and
//! plain-text summaries with stable exit codes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, parse_override, parse_sweep_spec};
use crate::numkit::routh_hurwitz;
use crate::scenario::{
    compute_metrics, run_batch, run_scenario, synthesize, GainProvenance, Metrics,
    ScenarioConfig, ScenarioError, SimTrace, SynthesizedLaw,
};
use crate::validate::{run_all, Fault};

/// Command completed.
pub const EXIT_OK: i32 = 0;
/// Unreadable, unparsable, or invalid configuration (including bad flags).
pub const EXIT_CONFIG: i32 = 1;
/// Controller or observer synthesis failed a certificate.
pub const EXIT_SYNTHESIS: i32 = 2;
/// A simulation left the finite range; partial output is retained.
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Parser)]
#[command(
    name = "vssea",
    about = "Controller synthesis and closed-loop simulation for a variable-stiffness \
             series elastic actuator",
    version
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run one closed-loop scenario and write its trace as CSV.
    Simulate(CommonArgs),
    /// Design the controller and observer, print gains and certificates.
    Synthesize(CommonArgs),
    /// Re-run a scenario across a list of values for one config key.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep specification: one dotted key and comma-separated values,
        /// e.g. `observer.bandwidth=15.7,157,1571`.
        #[arg(long, value_name = "KEY=V1,V2,...")]
        sweep: String,
    },
    /// Run the named self-check suite and print a pass/fail table.
    Validate,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file path; every key defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Dotted-key override applied over the config file, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Reserved for future noise injection; accepted and recorded only.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

/// A failure carrying its process exit code.
struct CliFailure {
    code: i32,
    message: String,
}

impl CliFailure {
    fn config(message: impl Into<String>) -> Self {
        CliFailure { code: EXIT_CONFIG, message: message.into() }
    }
}

fn classify(err: &ScenarioError) -> i32 {
    match err {
        ScenarioError::InvalidConfig(_) | ScenarioError::Plant(_) => EXIT_CONFIG,
        ScenarioError::Diverged { .. } => EXIT_DIVERGED,
        _ => EXIT_SYNTHESIS,
    }
}

/// Parses `std::env::args`, runs the requested command, and returns the
/// process exit code.
pub fn run_cli() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match cli.verb {
        Verb::Simulate(common) => load(&common).map(|config| cmd_simulate(&config, &common.out)),
        Verb::Synthesize(common) => {
            load(&common).map(|config| cmd_synthesize(&config, &common.out))
        }
        Verb::Sweep { common, sweep } => cmd_sweep(&common, &sweep),
        Verb::Validate => Ok(cmd_validate()),
    };
    match outcome {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

fn read_config_text(path: &Option<PathBuf>) -> Result<String, CliFailure> {
    match path {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliFailure::config(format!("cannot read {}: {e}", path.display()))),
        None => Ok(String::new()),
    }
}

fn parse_overrides(set: &[String]) -> Result<Vec<(String, String)>, CliFailure> {
    set.iter()
        .map(|arg| parse_override(arg).map_err(|e| CliFailure::config(e.to_string())))
        .collect()
}

fn load(common: &CommonArgs) -> Result<ScenarioConfig, CliFailure> {
    let text = read_config_text(&common.config)?;
    let overrides = parse_overrides(&common.set)?;
    load_config(&text, &overrides).map_err(|e| CliFailure::config(e.to_string()))
}

// --- simulate ---

const CSV_HEADER: &str = "t,ref,theta_l,dtheta_l,theta_e,dtheta_e,u,dist_l_true,dist_e_true,\
                          dist_l_est,dist_e_est,sigma,e1,e2,e3,e4\n";

fn render_trace_csv(trace: &SimTrace, truncation: Option<&str>) -> String {
    let mut out = String::with_capacity(64 + trace.rows.len() * 400);
    out.push_str(CSV_HEADER);
    for row in &trace.rows {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},\
             {:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            row.t,
            row.r,
            row.theta_l,
            row.dtheta_l,
            row.theta_e,
            row.dtheta_e,
            row.u,
            row.dist_l_true,
            row.dist_e_true,
            row.dist_l_est,
            row.dist_e_est,
            row.sigma,
            row.e1,
            row.e2,
            row.e3,
            row.e4
        );
    }
    if let Some(reason) = truncation {
        let _ = writeln!(out, "# truncated: {reason}");
    }
    out
}

fn emit(out: &Option<PathBuf>, payload: &str) -> Result<(), CliFailure> {
    match out {
        Some(path) => std::fs::write(path, payload).map_err(|e| CliFailure {
            code: EXIT_CONFIG,
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(payload.as_bytes())
                .map_err(|e| CliFailure { code: EXIT_CONFIG, message: format!("stdout: {e}") })
        }
    }
}

fn render_metrics(m: &Metrics, rows: usize) -> String {
    let settling = match m.settling_time_2pct {
        Some(t) => format!("{t:.6e}"),
        None => "none".to_string(),
    };
    format!(
        "rows: {rows}\nrms_error: {:.6e}\nmax_abs_error: {:.6e}\n\
         settling_time_2pct: {settling}\nsteady_state_error: {:.6e}\n",
        m.rms_error, m.max_abs_error, m.steady_state_error
    )
}

fn cmd_simulate(config: &ScenarioConfig, out: &Option<PathBuf>) -> i32 {
    match run_scenario(config) {
        Ok(trace) => {
            let csv = render_trace_csv(&trace, None);
            if let Err(failure) = emit(out, &csv) {
                eprintln!("error: {}", failure.message);
                return failure.code;
            }
            let summary = render_metrics(&compute_metrics(&trace), trace.rows.len());
            if out.is_some() {
                print!("{summary}");
            } else {
                eprint!("{summary}");
            }
            EXIT_OK
        }
        Err(err) => {
            let code = classify(&err);
            if let ScenarioError::Diverged { ref partial, .. } = err {
                let csv = render_trace_csv(partial, Some(&err.to_string()));
                if let Err(failure) = emit(out, &csv) {
                    eprintln!("error: {}", failure.message);
                }
            }
            eprintln!("error: {err}");
            code
        }
    }
}

// --- synthesize ---

fn render_synthesis_report(config: &ScenarioConfig) -> Result<String, ScenarioError> {
    let synth = synthesize(config)?;
    let mut out = String::new();
    let verdict = |ok: bool| if ok { "yes" } else { "no" };
    let _ = writeln!(out, "controllability rank: {}", synth.controllability_rank);
    let _ = writeln!(out, "controller kind: {}", config.controller.kind);
    let (lyap_p, lyap_residual) = match &synth.law {
        SynthesizedLaw::StateFeedback {
            gains,
            compensation,
            provenance,
            lyapunov_p,
            lyapunov_residual,
        } => {
            let k = gains.k;
            let _ = writeln!(out, "gains K: [{}, {}, {}, {}]", k[0], k[1], k[2], k[3]);
            match provenance {
                GainProvenance::PolePlacement { poles } => {
                    let _ = writeln!(
                        out,
                        "gain provenance: pole placement at [{}, {}, {}, {}]",
                        poles[0], poles[1], poles[2], poles[3]
                    );
                }
                GainProvenance::Lqr { iterations, riccati_residual } => {
                    let _ = writeln!(
                        out,
                        "gain provenance: CARE solved in {iterations} Newton iterations, \
                         residual {riccati_residual:.3e}"
                    );
                }
            }
            let _ = writeln!(
                out,
                "matched-disturbance compensation: {}",
                if *compensation { "on" } else { "off" }
            );
            (lyapunov_p, lyapunov_residual)
        }
        SynthesizedLaw::SlidingMode { params, lyapunov_p, lyapunov_residual } => {
            let s = params.s;
            let _ = writeln!(out, "manifold S: [{}, {}, {}]", s[0], s[1], s[2]);
            let _ = writeln!(out, "reaching gain rho: {}", params.rho);
            let _ = writeln!(out, "boundary layer epsilon: {}", params.epsilon);
            (lyapunov_p, lyapunov_residual)
        }
    };
    let certified = synth.law.certified_poly();
    let _ = writeln!(
        out,
        "certified polynomial Hurwitz: {}",
        verdict(routh_hurwitz(&certified).unwrap_or(false))
    );
    let g = &synth.dob_gains;
    let _ = writeln!(out, "observer bandwidth: {} rad/s", config.observer.bandwidth);
    let _ = writeln!(out, "observer gains: g0 = {}, g1 = {}, g2 = {}", g.g0, g.g1, g.g2);
    let _ = writeln!(out, "observer polynomial Hurwitz: {}", verdict(g.is_stable()));
    let _ = writeln!(out, "lyapunov residual: {lyap_residual:.3e}");
    let _ =
        writeln!(out, "lyapunov P positive definite: {}", verdict(lyap_p.cholesky().is_some()));
    Ok(out)
}

fn cmd_synthesize(config: &ScenarioConfig, out: &Option<PathBuf>) -> i32 {
    match render_synthesis_report(config) {
        Ok(report) => match emit(out, &report) {
            Ok(()) => EXIT_OK,
            Err(failure) => {
                eprintln!("error: {}", failure.message);
                failure.code
            }
        },
        Err(err) => {
            eprintln!("error: {err}");
            classify(&err)
        }
    }
}

// --- sweep ---

fn csv_quote(text: &str) -> String {
    format!("\"{}\"", text.replace('"', "\"\""))
}

fn cmd_sweep(common: &CommonArgs, sweep: &str) -> Result<i32, CliFailure> {
    let (key, values) =
        parse_sweep_spec(sweep).map_err(|e| CliFailure::config(e.to_string()))?;
    let text = read_config_text(&common.config)?;
    let base_overrides = parse_overrides(&common.set)?;

    // Build each row's config; rows with bad values stay in the table with
    // their error instead of stopping the sweep.
    let mut configs: Vec<Result<ScenarioConfig, String>> = Vec::with_capacity(values.len());
    for value in &values {
        let mut overrides = base_overrides.clone();
        overrides.push((key.clone(), value.clone()));
        configs.push(load_config(&text, &overrides).map_err(|e| e.to_string()));
    }

    let good: Vec<ScenarioConfig> = configs.iter().filter_map(|c| c.clone().ok()).collect();
    let mut batch_results = run_batch(&good).into_iter();

    let mut out = String::from(
        "value,rms_error,max_abs_error,settling_time_2pct,steady_state_error,error\n",
    );
    let mut succeeded = 0usize;
    for (value, config) in values.iter().zip(&configs) {
        let row = match config {
            Err(reason) => format!("{value},,,,,{}", csv_quote(reason)),
            Ok(_) => match batch_results.next().expect("one batch result per good config") {
                Ok(trace) => {
                    succeeded += 1;
                    let m = compute_metrics(&trace);
                    let settling = match m.settling_time_2pct {
                        Some(t) => format!("{t:.16e}"),
                        None => String::new(),
                    };
                    format!(
                        "{value},{:.16e},{:.16e},{settling},{:.16e},",
                        m.rms_error, m.max_abs_error, m.steady_state_error
                    )
                }
                Err(err) => format!("{value},,,,,{}", csv_quote(&err.to_string())),
            },
        };
        out.push_str(&row);
        out.push('\n');
    }
    emit(&common.out, &out)?;
    if succeeded == 0 {
        Err(CliFailure::config(format!("no sweep row for `{key}` produced a result")))
    } else {
        Ok(EXIT_OK)
    }
}

// --- validate ---

fn cmd_validate() -> i32 {
    let results = run_all(Fault::None);
    let failed = results.iter().filter(|r| !r.passed).count();
    for r in &results {
        println!("{:<28} {}  {}", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail);
    }
    if failed == 0 {
        println!("{} checks, all passed", results.len());
        EXIT_OK
    } else {
        println!("{failed} of {} checks failed", results.len());
        EXIT_CONFIG
    }
}
