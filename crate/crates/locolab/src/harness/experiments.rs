//! Experiment protocols: learning-mode comparison, feedback-ratio sweep,
//! and post-training feedforward adaptation.
//!
//! Multi-run batches parallelize over (variant, seed) pairs with rayon; each
//! run is self-contained and deterministic, and results assemble in a fixed
//! order, so batch outputs are reproducible regardless of thread count.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{LearnMode, TrainConfig};
use super::log::{median, TrainingLog};
use super::train::{evaluate, train, EvalMetrics};
use crate::ppo::Checkpoint;
use crate::reward::VelocityVariant;
use crate::{Error, Result};

/// Moving-average window (iterations) for the steps-to-threshold metric.
pub const SMOOTH_WINDOW: usize = 10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub seed: u64,
    pub steps_to_threshold: Option<u64>,
    pub final_reward: f64,
    pub final_mimic: f64,
}

pub struct LabeledRun {
    pub label: String,
    pub seed: u64,
    pub log: TrainingLog,
}

pub struct BatchOutput {
    pub runs: Vec<LabeledRun>,
    pub summaries: Vec<RunSummary>,
}

fn run_batch(configs: Vec<(String, TrainConfig)>) -> Result<BatchOutput> {
    let results: Vec<Result<LabeledRun>> = configs
        .into_par_iter()
        .map(|(label, cfg)| {
            let out = train(&cfg, None)?;
            Ok(LabeledRun { label, seed: cfg.seed, log: out.log })
        })
        .collect();
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }
    let summaries = runs
        .iter()
        .map(|r| RunSummary {
            label: r.label.clone(),
            seed: r.seed,
            steps_to_threshold: r.log.steps_to_threshold(SMOOTH_WINDOW),
            final_reward: r.log.final_reward(0.1),
            final_mimic: r.log.final_component(|row| row.mimic, 0.1),
        })
        .collect();
    Ok(BatchOutput { runs, summaries })
}

/// Train every mode on the same task across seeds. Modes share the task's
/// reward (the comparison list includes the mimic term for fairness).
pub fn compare_modes(base: &TrainConfig, modes: &[LearnMode], seeds: &[u64]) -> Result<BatchOutput> {
    let mut configs = Vec::new();
    for &mode in modes {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.mode = mode;
            cfg.obs_variant = None; // the mode decides
            cfg.seed = seed;
            configs.push((mode.name().to_string(), cfg));
        }
    }
    run_batch(configs)
}

/// Train the same task at several feedback ratios (instruction mode).
pub fn sweep_kb(base: &TrainConfig, k_values: &[f64], seeds: &[u64]) -> Result<BatchOutput> {
    let mut configs = Vec::new();
    for &k in k_values {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.mode = LearnMode::Inl;
            cfg.k_b = super::config::KbSpec::Scalar(k);
            cfg.seed = seed;
            configs.push((format!("kb_{k}"), cfg));
        }
    }
    run_batch(configs)
}

/// Median of a per-run statistic over the runs carrying `label`.
pub fn median_stat(
    summaries: &[RunSummary],
    label: &str,
    pick: impl Fn(&RunSummary) -> Option<f64>,
) -> Option<f64> {
    let mut vals: Vec<f64> =
        summaries.iter().filter(|s| s.label == label).filter_map(&pick).collect();
    if vals.is_empty() {
        None
    } else {
        Some(median(&mut vals))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptParameter {
    Period,
    Amplitude,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdaptPoint {
    pub factor: f64,
    pub feasible: bool,
    pub falls: u64,
    pub mean_forward_velocity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdaptOutput {
    pub parameter: AdaptParameter,
    pub points: Vec<AdaptPoint>,
    /// Maximal contiguous feasible factor interval containing 1.0.
    pub feasible_interval: [f64; 2],
}

/// Scale the trained gait's period or amplitude across `factors` and probe
/// whether the unchanged policy still locomotes: no fall over the window and
/// (for forward-velocity gaits) positive forward progress.
pub fn adapt_sweep(
    ckpt: &Checkpoint,
    base: &TrainConfig,
    parameter: AdaptParameter,
    factors: &[f64],
    eval_duration_s: f64,
) -> Result<AdaptOutput> {
    if !factors.iter().any(|f| (f - 1.0).abs() < 1e-12) {
        return Err(Error::Config("adaptation factor grid must contain 1.0".into()));
    }
    if ckpt.layout_id != base.layout_id() {
        return Err(Error::Config("checkpoint layout does not match the task config".into()));
    }
    let mut factors = factors.to_vec();
    factors.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let needs_progress = matches!(
        base.build_env_setup()?.reward.velocity,
        Some(VelocityVariant::Walk) | Some(VelocityVariant::Jump)
    );

    let evals: Vec<Result<(f64, EvalMetrics)>> = factors
        .par_iter()
        .map(|&factor| {
            let mut cfg = base.clone();
            match parameter {
                AdaptParameter::Period => cfg.period_scale *= factor,
                AdaptParameter::Amplitude => cfg.amplitude_scale *= factor,
            }
            let metrics = evaluate(&ckpt.policy, &cfg, eval_duration_s)?;
            Ok((factor, metrics))
        })
        .collect();

    let mut points = Vec::with_capacity(factors.len());
    for e in evals {
        let (factor, m) = e?;
        let feasible = m.falls == 0 && (!needs_progress || m.mean_forward_velocity > 0.05);
        points.push(AdaptPoint {
            factor,
            feasible,
            falls: m.falls,
            mean_forward_velocity: m.mean_forward_velocity,
        });
    }

    // Grow the interval outward from factor 1.0 while feasible.
    let anchor = points.iter().position(|p| (p.factor - 1.0).abs() < 1e-12).expect("grid has 1.0");
    let mut lo = anchor;
    let mut hi = anchor;
    if points[anchor].feasible {
        while lo > 0 && points[lo - 1].feasible {
            lo -= 1;
        }
        while hi + 1 < points.len() && points[hi + 1].feasible {
            hi += 1;
        }
    }
    Ok(AdaptOutput {
        parameter,
        points: points.clone(),
        feasible_interval: [points[lo].factor, points[hi].factor],
    })
}

/// Write reward curves (one CSV per run) plus a summary table.
pub fn emit_plotdata(batch: &BatchOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for run in &batch.runs {
        run.log.write_csv(&dir.join(format!("curve_{}_seed{}.csv", run.label, run.seed)))?;
    }
    let mut out = String::from("label,seed,steps_to_threshold,final_reward,final_mimic\n");
    for s in &batch.summaries {
        let steps = s.steps_to_threshold.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.label, s.seed, steps, s.final_reward, s.final_mimic
        ));
    }
    std::fs::write(dir.join("summary.csv"), out)?;
    Ok(())
}
