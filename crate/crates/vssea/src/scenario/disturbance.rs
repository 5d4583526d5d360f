//! Windowed bias-plus-sinusoid torque disturbances for the three motors.

use crate::plant::DisturbanceSample;
use crate::reconstruction::DisturbanceSource;
use crate::scenario::ScenarioError;

/// One disturbance channel: `bias + amp * sin(omega * t)` inside the
/// activation window `[t_on, t_off)`, identically zero outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelProfile {
    /// Constant offset, N m.
    pub bias: f64,
    /// Sinusoid amplitude, N m.
    pub amp: f64,
    /// Sinusoid frequency, rad/s.
    pub omega: f64,
    /// Activation time, s.
    pub t_on: f64,
    /// Deactivation time, s.
    pub t_off: f64,
}

impl Default for ChannelProfile {
    fn default() -> Self {
        ChannelProfile { bias: 0.0, amp: 0.0, omega: 0.0, t_on: 0.0, t_off: f64::INFINITY }
    }
}

impl ChannelProfile {
    /// A channel that never applies any torque.
    pub fn silent() -> Self {
        ChannelProfile::default()
    }

    pub fn validate(&self, channel: &str) -> Result<(), ScenarioError> {
        if !self.bias.is_finite() || !self.amp.is_finite() || !self.omega.is_finite() {
            return Err(ScenarioError::InvalidConfig(format!(
                "{channel} disturbance needs finite bias, amplitude, and frequency"
            )));
        }
        if self.omega < 0.0 {
            return Err(ScenarioError::InvalidConfig(format!(
                "{channel} disturbance frequency must be nonnegative"
            )));
        }
        if !(self.t_on < self.t_off) || self.t_on < 0.0 || self.t_on.is_nan() {
            return Err(ScenarioError::InvalidConfig(format!(
                "{channel} disturbance window needs 0 <= t_on < t_off"
            )));
        }
        Ok(())
    }

    pub fn is_active(&self, t: f64) -> bool {
        t >= self.t_on && t < self.t_off
    }

    /// Torque at time `t`, N m.
    pub fn eval(&self, t: f64) -> f64 {
        if self.is_active(t) {
            self.bias + self.amp * (self.omega * t).sin()
        } else {
            0.0
        }
    }

    /// Torque with its first two time derivatives (zero outside the window).
    pub fn eval_with_derivatives(&self, t: f64) -> (f64, f64, f64) {
        if !self.is_active(t) {
            return (0.0, 0.0, 0.0);
        }
        let (s, c) = (self.omega * t).sin_cos();
        (
            self.bias + self.amp * s,
            self.amp * self.omega * c,
            -self.amp * self.omega * self.omega * s,
        )
    }
}

/// Disturbance torques on the link, the drive motor, and the stiffness
/// motor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceProfile {
    pub link: ChannelProfile,
    pub motor: ChannelProfile,
    pub stiffness: ChannelProfile,
}

impl Default for DisturbanceProfile {
    /// The standard test profile: `0.5 + 0.3 sin(2 pi 0.5 t)` N m on the
    /// link and `0.2 sin(2 pi t)` N m on the drive motor, both active over
    /// `[3, 10)` s; nothing on the stiffness motor.
    fn default() -> Self {
        use std::f64::consts::PI;
        DisturbanceProfile {
            link: ChannelProfile { bias: 0.5, amp: 0.3, omega: PI, t_on: 3.0, t_off: 10.0 },
            motor: ChannelProfile { bias: 0.0, amp: 0.2, omega: 2.0 * PI, t_on: 3.0, t_off: 10.0 },
            stiffness: ChannelProfile::silent(),
        }
    }
}

impl DisturbanceProfile {
    /// No disturbance on any channel.
    pub fn silent() -> Self {
        DisturbanceProfile {
            link: ChannelProfile::silent(),
            motor: ChannelProfile::silent(),
            stiffness: ChannelProfile::silent(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.link.validate("link")?;
        self.motor.validate("motor")?;
        self.stiffness.validate("stiffness-motor")
    }

    /// True torques applied to the plant at time `t`.
    pub fn sample(&self, t: f64) -> DisturbanceSample {
        DisturbanceSample {
            tau_l: self.link.eval(t),
            tau_e: self.motor.eval(t),
            tau_ms: self.stiffness.eval(t),
        }
    }

    /// Exact disturbance source for the chain-form reconstruction: the link
    /// torque with its analytic derivatives plus the drive motor torque.
    /// Used in place of observer estimates when a run needs perfect
    /// disturbance knowledge.
    pub fn exact_source(&self, t: f64) -> DisturbanceSource {
        let (tau_l_d, tau_l_d_dot, tau_l_d_ddot) = self.link.eval_with_derivatives(t);
        DisturbanceSource { tau_l_d, tau_l_d_dot, tau_l_d_ddot, tau_e_d: self.motor.eval(t) }
    }
}
