//! Reset-free online-learning protocol.
//!
//! The robot alternates short walking episodes with in-loop policy updates
//! and a commanded posture recovery, with no teleport resets: a fall ends
//! the episode early, gets logged, and recovery is attempted from wherever
//! the robot is. The reward is the leg-angular-velocity term computed from
//! the support schedule, the observation is the hardware variant, and the
//! per-joint feedback ratio is small.

use serde::{Deserialize, Serialize};

use super::config::{KbSpec, LearnMode, TrainConfig};
use super::log::{IterationRow, TrainingLog};
use super::train::seeded_rng;
use crate::env::EnvInstance;
use crate::obs::ObsVariant;
use crate::ppo::{ppo_update, Adam, Checkpoint, Policy, PpoConfig, RolloutBuffer, StepRecord, Value};
use crate::sim::{RobotKind, Termination};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OnlineProtocolConfig {
    /// Walking phase per episode (s); rounded to a half gait cycle so the
    /// legs hand over at a symmetric posture.
    pub walk_duration_s: f64,
    /// Commanded ramp back to the starting posture (s).
    pub recovery_ramp_s: f64,
    /// Maximum settling time after the ramp (s); settling stops early once
    /// the body is upright.
    pub recovery_settle_s: f64,
    /// Total simulated duration (s).
    pub total_duration_s: f64,
    /// Per-joint feedback ratio during online learning.
    pub k_b: f64,
    /// Update epochs over each episode's data.
    pub num_epoch: usize,
    /// Discount for the short online episodes; a long horizon makes falls
    /// costly to the learner.
    pub gamma: f64,
    /// Feedforward amplitude scale for the online gait; a gentler stride
    /// keeps the learned walk away from the pitch-instability edge.
    pub amplitude_scale: f64,
}

impl Default for OnlineProtocolConfig {
    fn default() -> Self {
        Self {
            walk_duration_s: 3.3,
            recovery_ramp_s: 1.0,
            recovery_settle_s: 6.0,
            total_duration_s: 20.0 * 60.0,
            k_b: 0.07,
            num_epoch: 3,
            gamma: 0.998,
            amplitude_scale: 0.75,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct OnlineOutput {
    /// One row per episode: `mean_episode_reward` is the episode's summed
    /// leg-angular reward, `episodes` counts falls (0 or 1).
    pub log: TrainingLog,
    pub episodes: u64,
    pub falls: u64,
    /// Manual repositions: recovery could not right the robot, so it was
    /// placed back at the start posture by hand.
    pub repositions: u64,
    pub checkpoint: Option<Checkpoint>,
}

impl OnlineOutput {
    pub fn fall_rate(&self) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.falls as f64 / self.episodes as f64
        }
    }

    /// Smoothed episode reward near the start/end of the run (mean over the
    /// first/last `window` episodes).
    pub fn edge_reward(&self, window: usize, at_end: bool) -> f64 {
        let n = self.log.rows.len();
        if n == 0 {
            return 0.0;
        }
        let w = window.clamp(1, n);
        let slice = if at_end { &self.log.rows[n - w..] } else { &self.log.rows[..w] };
        slice.iter().map(|r| r.mean_episode_reward).sum::<f64>() / w as f64
    }
}

/// Run the episodic online-learning schedule on the quadruped trot task.
pub fn online_protocol(base: &TrainConfig, proto: &OnlineProtocolConfig) -> Result<OnlineOutput> {
    if base.robot != RobotKind::Quadruped {
        return Err(Error::Config("online protocol runs on the quadruped".into()));
    }
    let mut cfg = base.clone();
    cfg.mode = LearnMode::Inl;
    cfg.k_b = KbSpec::Scalar(proto.k_b);
    cfg.obs_variant = Some(ObsVariant::Hardware);
    cfg.reward_preset = Some("online".into());
    // Episodes are short; the walking window is the whole buffer. Snap the
    // window to a half-cycle boundary so episodes end at a symmetric phase.
    let half_cycle = 0.5 * cfg.build_gait()?.gait_period;
    let walk_seconds = (proto.walk_duration_s / half_cycle).floor().max(1.0) * half_cycle;
    let walk_steps = (walk_seconds / cfg.world.dt_control).round() as usize;
    cfg.gait_params.hip_amplitude *= proto.amplitude_scale;
    cfg.gait_params.knee_amplitude *= proto.amplitude_scale;
    cfg.ppo = PpoConfig {
        batch_size: walk_steps,
        buffer_size: walk_steps,
        num_epoch: proto.num_epoch,
        gamma: proto.gamma,
        ..base.ppo.clone()
    };
    // The walking window must not trip the step-count termination.
    cfg.episode_max_steps = u64::MAX;

    let setup = cfg.build_env_setup()?;
    let obs_dim = setup.layout.len();
    let act_dim = setup.sim.model.joint_count();
    let mut init_rng = seeded_rng(cfg.seed, 0);
    let mut policy =
        Policy::new(obs_dim, act_dim, &cfg.ppo.actor_hidden, cfg.ppo.init_log_std, &mut init_rng);
    let mut value = Value::new(obs_dim, &cfg.ppo.critic_hidden, &mut init_rng);
    let mut adam_policy = Adam::new(&policy.actor, act_dim, cfg.ppo.learning_rate);
    let mut adam_value = Adam::new(&value.critic, 0, cfg.ppo.learning_rate);
    let mut update_rng = seeded_rng(cfg.seed, 1);
    let mut sampler = seeded_rng(cfg.seed, 10_000);

    let mut env = EnvInstance::new(setup, seeded_rng(cfg.seed, 100))?;
    env.reset()?;
    let mut out = OnlineOutput::default();
    let mut env_steps = 0u64;

    while env.state.time < proto.total_duration_s {
        let mut obs = env.begin_episode()?;
        let mut buffer = RolloutBuffer::new(1);
        let mut episode_reward = 0.0;
        let mut fell = false;
        let mut steps_walked = 0u64;

        for _ in 0..walk_steps {
            let (a_nn, log_prob) = policy.sample(&obs, &mut sampler);
            let value_est = value.predict(&obs);
            match env.step(&a_nn) {
                Ok(outcome) => {
                    episode_reward += outcome.reward.total;
                    steps_walked += 1;
                    let fall_now = outcome.termination == Termination::Fell;
                    buffer.push(
                        0,
                        StepRecord {
                            obs: std::mem::replace(&mut obs, outcome.obs),
                            action: a_nn,
                            log_prob,
                            reward: outcome.reward.total,
                            value: value_est,
                            done: fall_now,
                        },
                    );
                    if fall_now {
                        fell = true;
                        break;
                    }
                }
                Err(Error::SimBlowup(_)) => {
                    fell = true;
                    break;
                }
                Err(other) => return Err(other),
            }
        }
        if buffer.is_empty() {
            // A blowup on the very first step: recover and move on.
            env.ramp_to_reference(proto.recovery_ramp_s)?;
            continue;
        }
        if !fell {
            buffer.set_bootstrap(0, value.predict(&obs));
        }
        env_steps += steps_walked;

        ppo_update(
            &mut policy,
            &mut value,
            &mut adam_policy,
            &mut adam_value,
            &buffer,
            &cfg.ppo,
            &mut update_rng,
        )?;

        out.episodes += 1;
        if fell {
            out.falls += 1;
        }
        out.log.rows.push(IterationRow {
            iteration: out.episodes - 1,
            env_steps,
            episodes: u64::from(fell),
            mean_episode_reward: episode_reward,
            mean_episode_length: steps_walked as f64,
            leg_angular: episode_reward,
            ..Default::default()
        });

        // Recovery: several commanded steps back toward the start posture,
        // then settle until upright (bounded). When recovery cannot right
        // the robot it is repositioned by hand, and that intervention is
        // logged.
        env.ramp_to_reference(proto.recovery_ramp_s)?;
        let mut settled = 0.0;
        while settled < proto.recovery_settle_s {
            env.ramp_to_reference(0.25)?;
            settled += 0.25;
            if env.state.pitch_deg().abs() < 1.5
                && env.state.base_pitch_rate.abs() < 0.1
                && env.state.base_vel[0].abs() < 0.08
                && env.state.base_vel[1].abs() < 0.05
            {
                break;
            }
        }
        if env.state.pitch_deg().abs() > 5.0 {
            out.repositions += 1;
            env.reset()?;
        }
    }

    out.checkpoint =
        Some(Checkpoint { layout_id: cfg.layout_id(), policy, value });
    Ok(out)
}
