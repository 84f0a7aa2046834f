//! Planar legged-robot laboratory for feedforward-feedback locomotion learning.
//!
//! A reference joint trajectory (the gait) is mapped to a normalized
//! feedforward action, a learned feedback action is bounded by a per-joint
//! ratio and added on top, and the composed action drives PD joint servos in
//! a sagittal-plane rigid-body simulation. A from-scratch PPO trainer and an
//! experiment harness sit above the environment.
//!
//! Modules:
//! - [`gait`] — reference trajectories, gait library, support schedule
//! - [`pipeline`] — policy output → filtered, bounded, composed joint commands
//! - [`sim`] — planar articulated dynamics with penalty contacts
//! - [`obs`] / [`reward`] — observation vectors and reward components
//! - [`ppo`] — actor-critic MLPs, GAE, clipped-surrogate updates, checkpoints
//! - [`env`] — one simulated robot wired to the full control pipeline
//! - [`harness`] — training loop, experiment protocols, CSV logs, config

pub mod env;
pub mod gait;
pub mod harness;
pub mod obs;
pub mod pipeline;
pub mod ppo;
pub mod reward;
pub mod sim;

/// Crate-wide error type. Variants map onto the CLI exit codes:
/// configuration-class errors exit 2, simulation blowups exit 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A trajectory or gait parameter is out of its valid domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A reference angle violates the joint range it must map into.
    #[error("out of range: {0}")]
    Range(String),

    /// Inconsistent configuration (dimension mismatch, bad preset, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A checkpoint or log file does not parse.
    #[error("format error: {0}")]
    Format(String),

    /// The integrator produced non-finite state.
    #[error("simulation blowup: {0}")]
    SimBlowup(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for configuration-class errors,
    /// 3 for simulation blowups, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Range(_) | Error::Config(_) | Error::Format(_) => 2,
            Error::SimBlowup(_) => 3,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
