//! Training logs and their CSV form.
//!
//! Logs are CSV with a versioned header row. Numbers print in Rust's
//! shortest round-trip form, so a parsed log reproduces the original values
//! exactly and reruns with the same seed produce byte-identical files.
//! Wall-clock time is reported on stderr only, never in the log, to keep
//! files reproducible.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

pub const LOG_VERSION: &str = "locolab_log_v1";

pub const LOG_COLUMNS: [&str; 13] = [
    "iteration",
    "env_steps",
    "episodes",
    "mean_episode_reward",
    "mean_episode_length",
    "mimic",
    "alive",
    "balance",
    "velocity",
    "sync",
    "leg_angular",
    "policy_loss",
    "value_loss",
];

/// One training iteration (one filled buffer and update), aggregated over
/// the episodes that completed during it. Reward components are per-episode
/// sums averaged over those episodes; when no episode completed the previous
/// row's values carry forward.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationRow {
    pub iteration: u64,
    pub env_steps: u64,
    pub episodes: u64,
    pub mean_episode_reward: f64,
    pub mean_episode_length: f64,
    pub mimic: f64,
    pub alive: f64,
    pub balance: f64,
    pub velocity: f64,
    pub sync: f64,
    pub leg_angular: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<IterationRow>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", LOG_VERSION);
        let _ = writeln!(out, "{}", LOG_COLUMNS.join(","));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.iteration,
                r.env_steps,
                r.episodes,
                r.mean_episode_reward,
                r.mean_episode_length,
                r.mimic,
                r.alive,
                r.balance,
                r.velocity,
                r.sync,
                r.leg_angular,
                r.policy_loss,
                r.value_loss
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(v) if v == LOG_VERSION => {}
            other => return Err(Error::Format(format!("unknown log version {other:?}"))),
        }
        match lines.next() {
            Some(h) if h == LOG_COLUMNS.join(",") => {}
            other => return Err(Error::Format(format!("unexpected log columns {other:?}"))),
        }
        let mut rows = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != LOG_COLUMNS.len() {
                return Err(Error::Format(format!("row {ln} has {} fields", f.len())));
            }
            let int = |s: &str| s.parse::<u64>().map_err(|e| Error::Format(format!("row {ln}: {e}")));
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(format!("row {ln}: {e}")));
            rows.push(IterationRow {
                iteration: int(f[0])?,
                env_steps: int(f[1])?,
                episodes: int(f[2])?,
                mean_episode_reward: num(f[3])?,
                mean_episode_length: num(f[4])?,
                mimic: num(f[5])?,
                alive: num(f[6])?,
                balance: num(f[7])?,
                velocity: num(f[8])?,
                sync: num(f[9])?,
                leg_angular: num(f[10])?,
                policy_loss: num(f[11])?,
                value_loss: num(f[12])?,
            });
        }
        Ok(Self { rows })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    /// Moving average of mean episode reward over `window` iterations.
    pub fn smoothed_reward(&self, window: usize) -> Vec<f64> {
        let vals: Vec<f64> = self.rows.iter().map(|r| r.mean_episode_reward).collect();
        moving_average(&vals, window)
    }

    /// Mean episode reward over the final `fraction` of iterations.
    pub fn final_reward(&self, fraction: f64) -> f64 {
        tail_mean(&self.rows.iter().map(|r| r.mean_episode_reward).collect::<Vec<_>>(), fraction)
    }

    /// Mean of one reward component over the final `fraction` of iterations.
    pub fn final_component(&self, pick: impl Fn(&IterationRow) -> f64, fraction: f64) -> f64 {
        tail_mean(&self.rows.iter().map(pick).collect::<Vec<_>>(), fraction)
    }

    /// First cumulative env step at which the `window`-iteration moving
    /// average crosses 80% of its own final plateau (mean smoothed reward
    /// over the last tenth). None when the curve never reaches it.
    pub fn steps_to_threshold(&self, window: usize) -> Option<u64> {
        if self.rows.is_empty() {
            return None;
        }
        let smoothed = self.smoothed_reward(window);
        let plateau = tail_mean(&smoothed, 0.1);
        let threshold = plateau - 0.2 * plateau.abs();
        smoothed
            .iter()
            .position(|&v| v >= threshold)
            .map(|i| self.rows[i].env_steps)
    }
}

pub fn moving_average(vals: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    vals.iter()
        .enumerate()
        .map(|(i, _)| {
            let lo = i.saturating_sub(w - 1);
            let slice = &vals[lo..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

fn tail_mean(vals: &[f64], fraction: f64) -> f64 {
    if vals.is_empty() {
        return 0.0;
    }
    let n = ((vals.len() as f64 * fraction).ceil() as usize).clamp(1, vals.len());
    let tail = &vals[vals.len() - n..];
    tail.iter().sum::<f64>() / n as f64
}

/// Median helper for multi-seed statistics.
pub fn median(vals: &mut [f64]) -> f64 {
    assert!(!vals.is_empty(), "median of empty slice");
    vals.sort_by(|a, b| a.partial_cmp(b).expect("NaN in median input"));
    let n = vals.len();
    if n % 2 == 1 {
        vals[n / 2]
    } else {
        0.5 * (vals[n / 2 - 1] + vals[n / 2])
    }
}
