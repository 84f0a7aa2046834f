//! Experiment orchestration: configuration, the training loop, evaluation,
//! the comparison/sweep/adaptation protocols, the online-learning schedule,
//! and CSV logging.

mod config;
mod experiments;
mod log;
mod online;
mod train;

pub use config::{KbSpec, LearnMode, TrainConfig};
pub use experiments::{
    adapt_sweep, compare_modes, emit_plotdata, median_stat, sweep_kb, AdaptOutput, AdaptParameter,
    AdaptPoint, BatchOutput, LabeledRun, RunSummary, SMOOTH_WINDOW,
};
pub use log::{median, moving_average, IterationRow, TrainingLog, LOG_COLUMNS, LOG_VERSION};
pub use online::{online_protocol, OnlineOutput, OnlineProtocolConfig};
pub use train::{evaluate, evaluate_checkpoint, seeded_rng, train, EvalMetrics, TrainOutput};
