//! Rollout storage and generalized advantage estimation.

use crate::{Error, Result};

/// One environment transition as stored for the update.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub obs: Vec<f64>,
    /// Raw pre-clip policy sample.
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

/// Trajectories from parallel environment copies. Episodes never straddle
/// bootstrap boundaries: each environment keeps its own sequence, and the
/// advantage recursion restarts at done flags.
#[derive(Clone, Debug, Default)]
pub struct RolloutBuffer {
    trajectories: Vec<Vec<StepRecord>>,
    /// Value estimate at each environment's final observation (ignored when
    /// the final step terminated).
    bootstrap: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(env_count: usize) -> Self {
        Self { trajectories: vec![Vec::new(); env_count], bootstrap: vec![0.0; env_count] }
    }

    pub fn push(&mut self, env: usize, record: StepRecord) {
        self.trajectories[env].push(record);
    }

    pub fn set_bootstrap(&mut self, env: usize, value: f64) {
        self.bootstrap[env] = value;
    }

    pub fn len(&self) -> usize {
        self.trajectories.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn env_count(&self) -> usize {
        self.trajectories.len()
    }

    pub fn trajectory(&self, env: usize) -> &[StepRecord] {
        &self.trajectories[env]
    }

    /// Steps flattened in (env, step) order, matching the advantage layout.
    pub fn iter_flat(&self) -> impl Iterator<Item = &StepRecord> {
        self.trajectories.iter().flatten()
    }

    pub fn clear(&mut self) {
        for t in &mut self.trajectories {
            t.clear();
        }
        self.bootstrap.iter_mut().for_each(|b| *b = 0.0);
    }
}

/// GAE over every environment trajectory. Returns (advantages, returns) in
/// flat (env, step) order; returns are advantages + values.
pub fn compute_gae(buffer: &RolloutBuffer, gamma: f64, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if buffer.is_empty() {
        return Err(Error::Config("empty rollout buffer".into()));
    }
    let mut advantages = Vec::with_capacity(buffer.len());
    let mut returns = Vec::with_capacity(buffer.len());
    for (env, traj) in buffer.trajectories.iter().enumerate() {
        let n = traj.len();
        let mut adv = vec![0.0; n];
        let mut gae = 0.0;
        for t in (0..n).rev() {
            let next_value = if traj[t].done {
                0.0
            } else if t + 1 < n {
                traj[t + 1].value
            } else {
                buffer.bootstrap[env]
            };
            let delta = traj[t].reward + gamma * next_value - traj[t].value;
            let carry = if traj[t].done { 0.0 } else { gae };
            gae = delta + gamma * lambda * carry;
            adv[t] = gae;
        }
        for (t, a) in adv.into_iter().enumerate() {
            advantages.push(a);
            returns.push(a + traj[t].value);
        }
    }
    Ok((advantages, returns))
}

/// Normalize to zero mean, unit standard deviation (population convention).
/// Returns the (mean, std) that were removed.
pub fn normalize_advantages(advantages: &mut [f64]) -> (f64, f64) {
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-12);
    for a in advantages.iter_mut() {
        *a = (*a - mean) / std;
    }
    (mean, std)
}
