//! Sectioned key-value configuration: file parsing, dotted-key overrides,
//! and key-path diagnostics.
//!
//! The grammar is deliberately flat: `[section]` headers followed by
//! `key = value` lines, `#` comments, blank lines ignored. Values are
//! numbers, `true`/`false`, or enum strings. Unknown sections and keys are
//! hard errors so a typo in a gain name cannot silently fall back to a
//! default. An empty file is the fully documented default scenario.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::scenario::{ControllerKind, ReferenceTrajectory, ScenarioConfig};

/// Configuration fault, carrying the offending line and key path when known.
#[derive(Debug, Clone)]
pub struct ConfigError {
    /// 1-based line number in the config file, absent for overrides.
    pub line: Option<usize>,
    /// Dotted `section.key` path, absent for structural faults.
    pub key: Option<String>,
    /// Human-readable description of the fault.
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let Some(line) = self.line {
            write!(f, " at line {line}")?;
        }
        if let Some(key) = &self.key {
            write!(f, " (key `{key}`)")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn fault(line: Option<usize>, key: Option<&str>, message: String) -> ConfigError {
    ConfigError { line, key: key.map(str::to_string), message }
}

/// The recognized section names, in documentation order.
pub const SECTIONS: [&str; 6] =
    ["plant", "controller", "observer", "reference", "disturbance", "sim"];

// Reference fields arrive as independent keys, possibly before the kind that
// gives them meaning, so they are collected here and assembled only after
// every source (file first, then overrides) has been applied.
#[derive(Debug, Default)]
struct RefSpec {
    kind: Option<RefKind>,
    amplitude: Option<f64>,
    start: Option<f64>,
    omega: Option<f64>,
    duration: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RefKind {
    Step,
    Sinusoid,
    Quintic,
}

impl RefSpec {
    fn finish(self) -> Result<ReferenceTrajectory, ConfigError> {
        let bad = |key: &str, kind: &str| {
            Err(fault(
                None,
                Some(key),
                format!("only meaningful for the {kind} reference"),
            ))
        };
        let amplitude = self.amplitude.unwrap_or(1.0);
        let start = self.start.unwrap_or(0.5);
        match self.kind.unwrap_or(RefKind::Step) {
            RefKind::Step => {
                if self.omega.is_some() {
                    return bad("reference.omega", "sinusoid");
                }
                if self.duration.is_some() {
                    return bad("reference.duration", "quintic");
                }
                Ok(ReferenceTrajectory::Step { amplitude, start })
            }
            RefKind::Sinusoid => {
                if self.duration.is_some() {
                    return bad("reference.duration", "quintic");
                }
                let omega = self.omega.unwrap_or(1.0);
                Ok(ReferenceTrajectory::Sinusoid { amplitude, omega, start })
            }
            RefKind::Quintic => {
                if self.omega.is_some() {
                    return bad("reference.omega", "sinusoid");
                }
                let duration = self.duration.unwrap_or(1.0);
                Ok(ReferenceTrajectory::Quintic { amplitude, start, duration })
            }
        }
    }
}

struct Builder {
    config: ScenarioConfig,
    reference: RefSpec,
}

impl Builder {
    fn new() -> Self {
        Builder { config: ScenarioConfig::standard(), reference: RefSpec::default() }
    }

    fn set(
        &mut self,
        section: &str,
        key: &str,
        value: &str,
        line: Option<usize>,
    ) -> Result<(), ConfigError> {
        let path = format!("{section}.{key}");
        let unknown =
            || Err(fault(line, Some(&path), "unknown key".to_string()));
        let num = || parse_num(value, line, &path);
        let boolean = || parse_bool(value, line, &path);

        match section {
            "plant" => {
                let p = &mut self.config.plant;
                match key {
                    "j_l" => p.j_l = num()?,
                    "b_l" => p.b_l = num()?,
                    "j_e" => p.j_e = num()?,
                    "b_e" => p.b_e = num()?,
                    "k" => p.k = num()?,
                    "n" => p.n = num()?,
                    "j_ms" => p.j_ms = num()?,
                    "b_ms" => p.b_ms = num()?,
                    "upsilon_tau" => p.upsilon_tau = num()?,
                    "upsilon_k" => p.upsilon_k = num()?,
                    "theta_ms_min" => p.theta_ms_min = num()?,
                    "nonlinear_spring" => self.config.nonlinear_spring = boolean()?,
                    _ => return unknown(),
                }
            }
            "controller" => {
                let c = &mut self.config.controller;
                if key == "kind" {
                    c.kind = ControllerKind::from_str(value)
                        .map_err(|msg| fault(line, Some(&path), msg))?;
                } else if key == "pole" {
                    let v = num()?;
                    for pole in &mut c.poles {
                        *pole = Complex64::new(v, 0.0);
                    }
                } else if let Some(idx) = indexed(key, "pole_imag_", 4) {
                    c.poles[idx].im = num()?;
                } else if let Some(idx) = indexed(key, "pole_", 4) {
                    c.poles[idx].re = num()?;
                } else if let Some(idx) = indexed(key, "lqr_q_", 4) {
                    c.lqr_q[idx] = num()?;
                } else if let Some(idx) = indexed(key, "smc_s_", 3) {
                    c.smc.s[idx] = num()?;
                } else {
                    match key {
                        "lqr_r" => c.lqr_r = num()?,
                        "smc_rho" => c.smc.rho = num()?,
                        "smc_epsilon" => c.smc.epsilon = num()?,
                        "stiffness_kp" => c.stiffness.kp = num()?,
                        "stiffness_kd" => c.stiffness.kd = num()?,
                        "stiffness_dob_gain" => c.stiffness.g_ms = num()?,
                        "stiffness_dob" => c.stiffness_dob = boolean()?,
                        "theta_ms_ref" => self.config.theta_ms_ref = num()?,
                        _ => return unknown(),
                    }
                }
            }
            "observer" => match key {
                "bandwidth" => self.config.observer.bandwidth = num()?,
                "projection" => self.config.observer.projection = boolean()?,
                _ => return unknown(),
            },
            "reference" => match key {
                "kind" => {
                    self.reference.kind = Some(match value.trim().to_ascii_lowercase().as_str() {
                        "step" => RefKind::Step,
                        "sinusoid" => RefKind::Sinusoid,
                        "quintic" => RefKind::Quintic,
                        other => {
                            return Err(fault(
                                line,
                                Some(&path),
                                format!(
                                    "unknown reference kind `{other}` \
                                     (expected step, sinusoid, or quintic)"
                                ),
                            ))
                        }
                    })
                }
                "amplitude" => self.reference.amplitude = Some(num()?),
                "start" => self.reference.start = Some(num()?),
                "omega" => self.reference.omega = Some(num()?),
                "duration" => self.reference.duration = Some(num()?),
                _ => return unknown(),
            },
            "disturbance" => {
                let (channel, field) = key
                    .split_once('_')
                    .ok_or_else(|| fault(line, Some(&path), "unknown key".to_string()))?;
                let profile = match channel {
                    "link" => &mut self.config.disturbance.link,
                    "motor" => &mut self.config.disturbance.motor,
                    "stiffness" => &mut self.config.disturbance.stiffness,
                    _ => return unknown(),
                };
                match field {
                    "bias" => profile.bias = num()?,
                    "amp" => profile.amp = num()?,
                    "omega" => profile.omega = num()?,
                    "t_on" => profile.t_on = num()?,
                    "t_off" => profile.t_off = num()?,
                    _ => return unknown(),
                }
            }
            "sim" => match key {
                "duration" => self.config.sim.duration = num()?,
                "step_s" => self.config.sim.step_s = num()?,
                "decimation" => self.config.sim.decimation = parse_usize(value, line, &path)?,
                _ => return unknown(),
            },
            _ => {
                return Err(fault(
                    line,
                    Some(&path),
                    format!("unknown section `{section}`"),
                ))
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<ScenarioConfig, ConfigError> {
        self.config.reference = self.reference.finish()?;
        self.config
            .validate()
            .map_err(|err| fault(None, None, err.to_string()))?;
        Ok(self.config)
    }
}

// Matches `prefix` followed by a 1-based index no larger than `count`,
// returning the 0-based index.
fn indexed(key: &str, prefix: &str, count: usize) -> Option<usize> {
    let idx: usize = key.strip_prefix(prefix)?.parse().ok()?;
    (1..=count).contains(&idx).then(|| idx - 1)
}

fn parse_num(value: &str, line: Option<usize>, path: &str) -> Result<f64, ConfigError> {
    match f64::from_str(value.trim()) {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(fault(line, Some(path), format!("expected a finite number, got `{value}`"))),
    }
}

fn parse_bool(value: &str, line: Option<usize>, path: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(fault(line, Some(path), format!("expected true or false, got `{value}`"))),
    }
}

fn parse_usize(value: &str, line: Option<usize>, path: &str) -> Result<usize, ConfigError> {
    usize::from_str(value.trim())
        .map_err(|_| fault(line, Some(path), format!("expected a non-negative integer, got `{value}`")))
}

/// Parses a config file into a validated scenario, defaults filled in.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    load_config(text, &[])
}

/// Parses a config file, applies `--set` style dotted-key overrides on top,
/// and validates the result. Overrides are an unordered set: duplicates and
/// combinations whose outcome would depend on application order are
/// rejected.
pub fn load_config(
    text: &str,
    overrides: &[(String, String)],
) -> Result<ScenarioConfig, ConfigError> {
    let mut builder = Builder::new();
    let mut section: Option<&'static str> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .ok_or_else(|| {
                    fault(Some(line_no), None, format!("unterminated section header `{line}`"))
                })?
                .trim();
            section = Some(
                SECTIONS
                    .iter()
                    .find(|s| **s == name)
                    .copied()
                    .ok_or_else(|| {
                        fault(Some(line_no), None, format!("unknown section `[{name}]`"))
                    })?,
            );
        } else if let Some((key, value)) = line.split_once('=') {
            let section = section.ok_or_else(|| {
                fault(Some(line_no), None, "key before any [section] header".to_string())
            })?;
            builder.set(section, key.trim(), value.trim(), Some(line_no))?;
        } else {
            return Err(fault(
                Some(line_no),
                None,
                format!("expected `key = value` or `[section]`, got `{line}`"),
            ));
        }
    }

    check_override_set(overrides)?;
    for (key, value) in overrides {
        let (section, rest) = key.split_once('.').ok_or_else(|| {
            fault(None, Some(key), "override keys are dotted section.key paths".to_string())
        })?;
        builder.set(section, rest, value, None)?;
    }

    builder.finish()
}

// Rejects override sets whose result would depend on application order.
fn check_override_set(overrides: &[(String, String)]) -> Result<(), ConfigError> {
    for (i, (key, _)) in overrides.iter().enumerate() {
        if overrides.iter().skip(i + 1).any(|(other, _)| other == key) {
            return Err(fault(None, Some(key), "duplicate override".to_string()));
        }
    }
    let broad = overrides.iter().any(|(k, _)| k == "controller.pole");
    let narrow = overrides.iter().any(|(k, _)| {
        k.starts_with("controller.pole_")
    });
    if broad && narrow {
        return Err(fault(
            None,
            Some("controller.pole"),
            "conflicts with controller.pole_* overrides; set one or the other".to_string(),
        ));
    }
    Ok(())
}

/// Splits a `key=value` override argument.
pub fn parse_override(arg: &str) -> Result<(String, String), ConfigError> {
    let (key, value) = arg.split_once('=').ok_or_else(|| {
        fault(None, None, format!("override must look like key=value, got `{arg}`"))
    })?;
    Ok((key.trim().to_string(), value.trim().to_string()))
}

/// Splits a `key=v1,v2,...` sweep specification into the dotted key and its
/// value list; the list must be non-empty.
pub fn parse_sweep_spec(spec: &str) -> Result<(String, Vec<String>), ConfigError> {
    let (key, values) = parse_override(spec)?;
    let values: Vec<String> =
        values.split(',').map(str::trim).filter(|v| !v.is_empty()).map(str::to_string).collect();
    if values.is_empty() {
        return Err(fault(None, Some(&key), "sweep needs at least one value".to_string()));
    }
    Ok((key, values))
}
