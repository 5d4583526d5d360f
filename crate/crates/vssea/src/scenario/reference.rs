//! Reference trajectories with analytic derivatives through order four.

use crate::reconstruction::ReferencePoint;
use crate::scenario::ScenarioError;

/// Position reference for the link. Every kind is evaluable (with one-sided
/// derivatives at seams) at any time; derivatives at a step jump are defined
/// as zero so no impulses enter the error state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceTrajectory {
    /// Constant `amplitude` from `start` onwards, zero before.
    Step { amplitude: f64, start: f64 },
    /// `amplitude * sin(omega (t - start))` from `start` onwards, zero before.
    Sinusoid { amplitude: f64, omega: f64, start: f64 },
    /// Rest-to-rest fifth-order polynomial from zero to `amplitude` over
    /// `[start, start + duration]`, boundary derivatives zero through
    /// order two.
    Quintic { amplitude: f64, start: f64, duration: f64 },
}

impl Default for ReferenceTrajectory {
    fn default() -> Self {
        ReferenceTrajectory::Step { amplitude: 1.0, start: 0.5 }
    }
}

impl ReferenceTrajectory {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |what: &str| Err(ScenarioError::InvalidConfig(what.to_string()));
        match *self {
            ReferenceTrajectory::Step { amplitude, start } => {
                if !amplitude.is_finite() || !start.is_finite() || start < 0.0 {
                    return bad("step reference needs finite amplitude and start >= 0");
                }
            }
            ReferenceTrajectory::Sinusoid { amplitude, omega, start } => {
                if !amplitude.is_finite() || !(omega > 0.0) || !omega.is_finite() {
                    return bad("sinusoid reference needs finite amplitude and frequency > 0");
                }
                if !start.is_finite() || start < 0.0 {
                    return bad("sinusoid reference needs start >= 0");
                }
            }
            ReferenceTrajectory::Quintic { amplitude, start, duration } => {
                if !amplitude.is_finite() || !(duration > 0.0) || !duration.is_finite() {
                    return bad("quintic reference needs finite amplitude and duration > 0");
                }
                if !start.is_finite() || start < 0.0 {
                    return bad("quintic reference needs start >= 0");
                }
            }
        }
        Ok(())
    }

    /// Largest |r| the trajectory ever reaches (used for settling bands).
    pub fn amplitude(&self) -> f64 {
        match *self {
            ReferenceTrajectory::Step { amplitude, .. }
            | ReferenceTrajectory::Sinusoid { amplitude, .. }
            | ReferenceTrajectory::Quintic { amplitude, .. } => amplitude.abs(),
        }
    }

    /// Reference value and derivatives through order four at time `t`.
    pub fn eval(&self, t: f64) -> ReferencePoint {
        match *self {
            ReferenceTrajectory::Step { amplitude, start } => {
                if t >= start {
                    ReferencePoint::constant(amplitude)
                } else {
                    ReferencePoint::default()
                }
            }
            ReferenceTrajectory::Sinusoid { amplitude, omega, start } => {
                if t < start {
                    return ReferencePoint::default();
                }
                let phase = omega * (t - start);
                let (s, c) = phase.sin_cos();
                let a = amplitude;
                ReferencePoint {
                    r: a * s,
                    dr: a * omega * c,
                    ddr: -a * omega * omega * s,
                    dddr: -a * omega * omega * omega * c,
                    d4r: a * omega * omega * omega * omega * s,
                }
            }
            ReferenceTrajectory::Quintic { amplitude, start, duration } => {
                if t < start {
                    return ReferencePoint::default();
                }
                if t >= start + duration {
                    return ReferencePoint::constant(amplitude);
                }
                let tau = (t - start) / duration;
                let t2 = tau * tau;
                let t3 = t2 * tau;
                let t4 = t3 * tau;
                let t5 = t4 * tau;
                let p = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
                let p1 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
                let p2 = 60.0 * tau - 180.0 * t2 + 120.0 * t3;
                let p3 = 60.0 - 360.0 * tau + 360.0 * t2;
                let p4 = -360.0 + 720.0 * tau;
                let a = amplitude;
                let inv = 1.0 / duration;
                ReferencePoint {
                    r: a * p,
                    dr: a * p1 * inv,
                    ddr: a * p2 * inv * inv,
                    dddr: a * p3 * inv * inv * inv,
                    d4r: a * p4 * inv * inv * inv * inv,
                }
            }
        }
    }
}
