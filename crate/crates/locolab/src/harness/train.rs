//! Training loop over parallel environment copies and policy evaluation.
//!
//! Environment copies advance in lockstep rounds with batched network
//! forwards; each copy owns its own RNG streams, so results are identical
//! regardless of how rounds are scheduled. The update phase is exclusive and
//! single-threaded. Every logged number is a deterministic function of
//! (config, seed).

use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::log::{IterationRow, TrainingLog};
use crate::env::EnvInstance;
use crate::ppo::{ppo_update, Adam, Checkpoint, Policy, RolloutBuffer, StepRecord, Value};
use crate::reward::RewardBreakdown;
use crate::sim::Termination;
use crate::{Error, Result};

/// RNG stream ids carved out of the run seed.
const STREAM_INIT: u64 = 0;
const STREAM_UPDATE: u64 = 1;
const STREAM_EVAL: u64 = 2;
const STREAM_ENV_BASE: u64 = 100;
const STREAM_SAMPLER_BASE: u64 = 10_000;

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub struct TrainOutput {
    pub log: TrainingLog,
    pub checkpoint: Checkpoint,
}

#[derive(Clone, Copy, Default)]
struct EpisodeAccumulator {
    reward: f64,
    length: u64,
    components: RewardBreakdown,
}

impl EpisodeAccumulator {
    fn add(&mut self, r: &RewardBreakdown) {
        self.reward += r.total;
        self.length += 1;
        self.components.mimic += r.mimic;
        self.components.alive += r.alive;
        self.components.balance += r.balance;
        self.components.velocity += r.velocity;
        self.components.sync += r.sync;
        self.components.leg_angular += r.leg_angular;
    }
}

/// Train a policy per the config; optionally write the log, the final
/// checkpoint, and interval checkpoints under `out_dir`.
pub fn train(cfg: &TrainConfig, out_dir: Option<&Path>) -> Result<TrainOutput> {
    let setup = cfg.build_env_setup()?;
    let obs_dim = setup.layout.len();
    let act_dim = setup.sim.model.joint_count();

    let mut init_rng = seeded_rng(cfg.seed, STREAM_INIT);
    let mut policy =
        Policy::new(obs_dim, act_dim, &cfg.ppo.actor_hidden, cfg.ppo.init_log_std, &mut init_rng);
    let mut value = Value::new(obs_dim, &cfg.ppo.critic_hidden, &mut init_rng);
    let mut adam_policy = Adam::new(&policy.actor, act_dim, cfg.ppo.learning_rate);
    let mut adam_value = Adam::new(&value.critic, 0, cfg.ppo.learning_rate);
    let mut update_rng = seeded_rng(cfg.seed, STREAM_UPDATE);

    let n_envs = cfg.env_copies;
    let mut envs: Vec<EnvInstance> = (0..n_envs)
        .map(|i| EnvInstance::new(setup.clone(), seeded_rng(cfg.seed, STREAM_ENV_BASE + i as u64)))
        .collect::<Result<_>>()?;
    let mut samplers: Vec<ChaCha8Rng> =
        (0..n_envs).map(|i| seeded_rng(cfg.seed, STREAM_SAMPLER_BASE + i as u64)).collect();

    let mut cur_obs: Vec<Vec<f64>> = Vec::with_capacity(n_envs);
    for env in envs.iter_mut() {
        cur_obs.push(env.reset()?);
    }
    let mut accums = vec![EpisodeAccumulator::default(); n_envs];

    let buffer_size = cfg.ppo.buffer_size;
    let iterations = cfg.total_steps.div_ceil(buffer_size as u64);
    let mut log = TrainingLog::default();
    let mut env_steps: u64 = 0;
    let mut last_row = IterationRow::default();
    let started = std::time::Instant::now();
    let mut next_checkpoint = cfg.checkpoint_every.unwrap_or(u64::MAX);

    for iteration in 0..iterations {
        let mut buffer = RolloutBuffer::new(n_envs);
        let mut episodes: Vec<EpisodeAccumulator> = Vec::new();

        let full_rounds = buffer_size / n_envs;
        let remainder = buffer_size % n_envs;
        for round in 0..=full_rounds {
            let active = if round < full_rounds { n_envs } else { remainder };
            if active == 0 {
                break;
            }
            let obs_mat = stack_rows(&cur_obs[..active], obs_dim);
            let means = policy.actor.forward(obs_mat);
            let values_tape = value.critic.forward(stack_rows(&cur_obs[..active], obs_dim));

            for i in 0..active {
                let mean = means.output().row(i).to_vec();
                let (a_nn, log_prob) = policy.sample_around(&mean, &mut samplers[i]);
                let value_est = values_tape.output()[(i, 0)];
                let prev_obs = std::mem::take(&mut cur_obs[i]);

                match envs[i].step(&a_nn) {
                    Ok(outcome) => {
                        let done = outcome.termination != Termination::Continue;
                        accums[i].add(&outcome.reward);
                        buffer.push(
                            i,
                            StepRecord {
                                obs: prev_obs,
                                action: a_nn,
                                log_prob,
                                reward: outcome.reward.total,
                                value: value_est,
                                done,
                            },
                        );
                        if done {
                            episodes.push(std::mem::take(&mut accums[i]));
                            cur_obs[i] = envs[i].reset()?;
                        } else {
                            cur_obs[i] = outcome.obs;
                        }
                    }
                    Err(Error::SimBlowup(msg)) => {
                        // Blown-up episode counts as a fall; the step itself
                        // carries no reward.
                        eprintln!("simulation blowup (episode aborted): {msg}");
                        accums[i].length += 1;
                        buffer.push(
                            i,
                            StepRecord {
                                obs: prev_obs,
                                action: a_nn,
                                log_prob,
                                reward: 0.0,
                                value: value_est,
                                done: true,
                            },
                        );
                        episodes.push(std::mem::take(&mut accums[i]));
                        cur_obs[i] = envs[i].reset()?;
                    }
                    Err(other) => return Err(other),
                }
            }
        }

        // Bootstrap values for unterminated tails.
        let tails = value.critic.forward(stack_rows(&cur_obs, obs_dim));
        for i in 0..n_envs {
            buffer.set_bootstrap(i, tails.output()[(i, 0)]);
        }
        debug_assert_eq!(buffer.len(), buffer_size);
        env_steps += buffer.len() as u64;

        let stats = ppo_update(
            &mut policy,
            &mut value,
            &mut adam_policy,
            &mut adam_value,
            &buffer,
            &cfg.ppo,
            &mut update_rng,
        )?;
        if stats.aborted {
            eprintln!("iteration {iteration}: non-finite loss, update skipped");
        }

        let mut row = IterationRow {
            iteration,
            env_steps,
            episodes: episodes.len() as u64,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            ..Default::default()
        };
        if episodes.is_empty() {
            row.mean_episode_reward = last_row.mean_episode_reward;
            row.mean_episode_length = last_row.mean_episode_length;
            row.mimic = last_row.mimic;
            row.alive = last_row.alive;
            row.balance = last_row.balance;
            row.velocity = last_row.velocity;
            row.sync = last_row.sync;
            row.leg_angular = last_row.leg_angular;
        } else {
            let n = episodes.len() as f64;
            row.mean_episode_reward = episodes.iter().map(|e| e.reward).sum::<f64>() / n;
            row.mean_episode_length = episodes.iter().map(|e| e.length as f64).sum::<f64>() / n;
            row.mimic = episodes.iter().map(|e| e.components.mimic).sum::<f64>() / n;
            row.alive = episodes.iter().map(|e| e.components.alive).sum::<f64>() / n;
            row.balance = episodes.iter().map(|e| e.components.balance).sum::<f64>() / n;
            row.velocity = episodes.iter().map(|e| e.components.velocity).sum::<f64>() / n;
            row.sync = episodes.iter().map(|e| e.components.sync).sum::<f64>() / n;
            row.leg_angular = episodes.iter().map(|e| e.components.leg_angular).sum::<f64>() / n;
        }
        last_row = row.clone();
        log.rows.push(row);

        if iteration % 5 == 0 || iteration + 1 == iterations {
            eprintln!(
                "[{} {} {} seed {}] iter {iteration}/{iterations} steps {env_steps} ep_r {:.1} len {:.0} ent {:.2} ({:.0}s)",
                cfg.robot_label(),
                cfg.gait,
                cfg.mode.name(),
                cfg.seed,
                last_row.mean_episode_reward,
                last_row.mean_episode_length,
                stats.entropy,
                started.elapsed().as_secs_f64()
            );
        }

        if let Some(dir) = out_dir {
            if env_steps >= next_checkpoint {
                let ckpt = Checkpoint {
                    layout_id: cfg.layout_id(),
                    policy: policy.clone(),
                    value: value.clone(),
                };
                crate::ppo::save_checkpoint(&dir.join(format!("ckpt_{env_steps:010}.bin")), &ckpt)?;
                next_checkpoint += cfg.checkpoint_every.unwrap_or(u64::MAX);
            }
        }
    }

    let checkpoint =
        Checkpoint { layout_id: cfg.layout_id(), policy, value };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        log.write_csv(&dir.join("train_log.csv"))?;
        crate::ppo::save_checkpoint(&dir.join("checkpoint.bin"), &checkpoint)?;
    }
    Ok(TrainOutput { log, checkpoint })
}

fn stack_rows(rows: &[Vec<f64>], width: usize) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), width));
    for (i, row) in rows.iter().enumerate() {
        out.row_mut(i).assign(&ndarray::ArrayView1::from(&row[..]));
    }
    out
}

/// Deterministic-policy rollout metrics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalMetrics {
    /// Mean total reward per episode (the trailing partial episode counts
    /// when nothing completed).
    pub mean_reward: f64,
    pub falls: u64,
    /// Net forward displacement over simulated time (m/s).
    pub mean_forward_velocity: f64,
    pub episode_lengths: Vec<u64>,
    pub steps: u64,
}

/// Roll the policy's clipped mean action for `duration_s` simulated seconds.
pub fn evaluate(policy: &Policy, cfg: &TrainConfig, duration_s: f64) -> Result<EvalMetrics> {
    let setup = cfg.build_env_setup()?;
    if policy.obs_dim() != setup.layout.len() {
        return Err(Error::Config(format!(
            "checkpoint expects {}-wide observations, config produces {}",
            policy.obs_dim(),
            setup.layout.len()
        )));
    }
    let dt = setup.sim.world.dt_control;
    let total_steps = (duration_s / dt).round() as u64;
    let mut metrics = EvalMetrics::default();
    if total_steps == 0 {
        return Ok(metrics);
    }

    let mut env = EnvInstance::new(setup, seeded_rng(cfg.seed, STREAM_EVAL))?;
    let mut obs = env.reset()?;
    let mut episode_reward = 0.0;
    let mut episode_rewards: Vec<f64> = Vec::new();
    let mut episode_len: u64 = 0;
    let mut episode_start_x = env.state.base_pos[0];
    let mut displacement = 0.0;

    for _ in 0..total_steps {
        let (action, _) = policy.forward(&obs)?;
        match env.step(&action) {
            Ok(outcome) => {
                episode_reward += outcome.reward.total;
                episode_len += 1;
                metrics.steps += 1;
                obs = outcome.obs;
                match outcome.termination {
                    Termination::Continue => {}
                    term => {
                        if term == Termination::Fell {
                            metrics.falls += 1;
                        }
                        displacement += env.state.base_pos[0] - episode_start_x;
                        episode_rewards.push(episode_reward);
                        metrics.episode_lengths.push(episode_len);
                        episode_reward = 0.0;
                        episode_len = 0;
                        obs = env.reset()?;
                        episode_start_x = env.state.base_pos[0];
                    }
                }
            }
            Err(Error::SimBlowup(_)) => {
                metrics.falls += 1;
                metrics.steps += 1;
                episode_rewards.push(episode_reward);
                metrics.episode_lengths.push(episode_len + 1);
                episode_reward = 0.0;
                episode_len = 0;
                obs = env.reset()?;
                episode_start_x = env.state.base_pos[0];
            }
            Err(other) => return Err(other),
        }
    }
    if episode_len > 0 {
        displacement += env.state.base_pos[0] - episode_start_x;
        episode_rewards.push(episode_reward);
        metrics.episode_lengths.push(episode_len);
    }
    metrics.mean_forward_velocity = displacement / (metrics.steps as f64 * dt);
    metrics.mean_reward =
        episode_rewards.iter().sum::<f64>() / episode_rewards.len().max(1) as f64;
    Ok(metrics)
}

/// Evaluate a saved checkpoint, enforcing layout compatibility.
pub fn evaluate_checkpoint(ckpt: &Checkpoint, cfg: &TrainConfig, duration_s: f64) -> Result<EvalMetrics> {
    if ckpt.layout_id != cfg.layout_id() {
        return Err(Error::Config(format!(
            "checkpoint layout id {} does not match config layout id {}",
            ckpt.layout_id,
            cfg.layout_id()
        )));
    }
    evaluate(&ckpt.policy, cfg, duration_s)
}

impl TrainConfig {
    pub fn robot_label(&self) -> &'static str {
        match self.robot {
            crate::sim::RobotKind::Biped => "biped",
            crate::sim::RobotKind::Quadruped => "quadruped",
        }
    }
}
