//! From-scratch PPO: actor-critic MLPs with a diagonal Gaussian policy,
//! generalized advantage estimation, the clipped surrogate objective with an
//! entropy bonus, Adam, and binary checkpoints. No ML framework, just
//! batched matrix ops.

mod checkpoint;
mod gae;
mod mlp;
mod update;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use gae::{compute_gae, normalize_advantages, RolloutBuffer, StepRecord};
pub use mlp::{Layer, Mlp, Tape};
pub use update::{finite_difference_check, ppo_update, UpdateStats};

use ndarray::Array1;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// PPO hyperparameters. Defaults follow the training setup this lab
/// reproduces; gamma, the value coefficient, and the gradient clip are
/// conventional choices exposed here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub batch_size: usize,
    pub buffer_size: usize,
    pub learning_rate: f64,
    pub entropy_coeff: f64,
    pub clip_epsilon: f64,
    pub gae_lambda: f64,
    pub num_epoch: usize,
    pub gamma: f64,
    pub value_coeff: f64,
    pub grad_clip: f64,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub init_log_std: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            batch_size: 2048,
            buffer_size: 20480,
            learning_rate: 3e-4,
            entropy_coeff: 0.005,
            clip_epsilon: 0.2,
            gae_lambda: 0.95,
            num_epoch: 3,
            gamma: 0.99,
            value_coeff: 0.5,
            grad_clip: 0.5,
            actor_hidden: vec![512, 512, 512],
            critic_hidden: vec![128, 128],
            init_log_std: -1.2039728043259361, // ln 0.3
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.buffer_size == 0 || self.batch_size == 0 || self.buffer_size % self.batch_size != 0 {
            return Err(Error::Config(format!(
                "buffer_size {} must be a positive multiple of batch_size {}",
                self.buffer_size, self.batch_size
            )));
        }
        if !(0.0 < self.gamma && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if !(0.0 < self.gae_lambda && self.gae_lambda <= 1.0) {
            return Err(Error::Config(format!("lambda {} outside (0, 1]", self.gae_lambda)));
        }
        Ok(())
    }
}

/// Actor network plus the state-independent per-action log standard
/// deviation. The mean is clipped to [-1, 1] before deterministic use;
/// log-probabilities are computed on the pre-clip sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub actor: Mlp,
    pub log_std: Array1<f64>,
}

impl Policy {
    pub fn new(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        init_log_std: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut dims = vec![obs_dim];
        dims.extend_from_slice(hidden);
        dims.push(act_dim);
        Self {
            actor: Mlp::init(&dims, 0.01, rng),
            log_std: Array1::from_elem(act_dim, init_log_std),
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.actor.output_dim()
    }

    /// Deterministic forward: clipped mean action plus the log-std vector.
    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if obs.len() != self.obs_dim() {
            return Err(Error::Config(format!(
                "observation width {} does not match policy input {}",
                obs.len(),
                self.obs_dim()
            )));
        }
        let mut mean = self.actor.forward_one(obs);
        mean.iter_mut().for_each(|m| *m = m.clamp(-1.0, 1.0));
        Ok((mean, self.log_std.to_vec()))
    }

    /// Raw (unclipped) mean, the Gaussian center for sampling and updates.
    pub fn mean_raw(&self, obs: &[f64]) -> Vec<f64> {
        self.actor.forward_one(obs)
    }

    /// Gaussian sample around the raw mean with its log-probability. The
    /// sample is not clipped here; the action pipeline clips downstream.
    pub fn sample(&self, obs: &[f64], rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
        let mean = self.mean_raw(obs);
        self.sample_around(&mean, rng)
    }

    /// Sample given a precomputed raw mean (used by batched rollouts).
    pub fn sample_around(&self, mean: &[f64], rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
        let action: Vec<f64> = mean
            .iter()
            .zip(self.log_std.iter())
            .map(|(&m, &ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let logp = self.log_prob(mean, &action);
        (action, logp)
    }

    /// log N(action; mean, diag(exp(log_std))^2)
    pub fn log_prob(&self, mean: &[f64], action: &[f64]) -> f64 {
        let mut lp = 0.0;
        for ((&m, &a), &ls) in mean.iter().zip(action).zip(self.log_std.iter()) {
            let z = (a - m) / ls.exp();
            lp += -0.5 * z * z - ls - 0.5 * LN_2PI;
        }
        lp
    }

    /// Closed-form entropy of the diagonal Gaussian:
    /// sum(log_std + 0.5 ln(2 pi e)).
    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| ls + 0.5 * (LN_2PI + 1.0)).sum()
    }

    pub fn param_count(&self) -> usize {
        self.actor.param_count() + self.log_std.len()
    }
}

/// Critic network with a scalar output.
#[derive(Clone, Debug, PartialEq)]
pub struct Value {
    pub critic: Mlp,
}

impl Value {
    pub fn new(obs_dim: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut dims = vec![obs_dim];
        dims.extend_from_slice(hidden);
        dims.push(1);
        Self { critic: Mlp::init(&dims, 1.0, rng) }
    }

    pub fn predict(&self, obs: &[f64]) -> f64 {
        self.critic.forward_one(obs)[0]
    }
}

/// Adam over one network's layer gradients plus an optional extra vector
/// (the policy's log_std).
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m_layers: Vec<Layer>,
    v_layers: Vec<Layer>,
    m_extra: Array1<f64>,
    v_extra: Array1<f64>,
}

impl Adam {
    pub fn new(net: &Mlp, extra_len: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m_layers: net.zero_grads(),
            v_layers: net.zero_grads(),
            m_extra: Array1::zeros(extra_len),
            v_extra: Array1::zeros(extra_len),
        }
    }

    /// Apply one descent step along `grads`/`extra_grad`.
    pub fn step(
        &mut self,
        net: &mut Mlp,
        grads: &[Layer],
        extra: Option<(&mut Array1<f64>, &Array1<f64>)>,
    ) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (k, layer) in net.layers.iter_mut().enumerate() {
            for ((p, &g), (m, v)) in layer
                .w
                .iter_mut()
                .zip(grads[k].w.iter())
                .zip(self.m_layers[k].w.iter_mut().zip(self.v_layers[k].w.iter_mut()))
            {
                update(p, g, m, v);
            }
            for ((p, &g), (m, v)) in layer
                .b
                .iter_mut()
                .zip(grads[k].b.iter())
                .zip(self.m_layers[k].b.iter_mut().zip(self.v_layers[k].b.iter_mut()))
            {
                update(p, g, m, v);
            }
        }
        if let Some((params, grad)) = extra {
            for ((p, &g), (m, v)) in params
                .iter_mut()
                .zip(grad.iter())
                .zip(self.m_extra.iter_mut().zip(self.v_extra.iter_mut()))
            {
                update(p, g, m, v);
            }
        }
    }
}
