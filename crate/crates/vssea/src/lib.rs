//! Controller synthesis and closed-loop simulation for variable stiffness
//! series elastic actuators.
//!
//! The crate models a two-inertia elastic actuator whose spring stiffness is
//! set by a second, position-controlled motor. It rewrites the model into an
//! integrator chain where all disturbances are matched, synthesizes robust
//! state-feedback / sliding-mode position controllers on that form, runs a
//! disturbance observer that estimates the disturbance vector with its first
//! two derivatives, and drives everything through deterministic fixed-step
//! closed-loop scenarios with CSV output.
//!
//! Layered bottom-up: [`numkit`] (dense linear algebra, Riccati/Lyapunov,
//! stability tests, RK4) → [`plant`] (physics) → [`reconstruction`]
//! (chain form and error state) → [`observer`] / [`control`] (estimation and
//! feedback laws) → [`scenario`] (closed-loop runs, metrics, batches).

pub mod cli;
pub mod config;
pub mod control;
pub mod numkit;
pub mod observer;
pub mod plant;
pub mod reconstruction;
pub mod scenario;
pub mod validate;
