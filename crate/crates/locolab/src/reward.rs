//! Reward components and per-gait presets.
//!
//! All angle inputs are degrees and velocities m/s (body frame), matching the
//! units the reward constants were designed for. The planar simulation
//! supplies yaw = roll = 0 and zero lateral velocity, which simply zeroes
//! those terms.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Velocity-shaping options: hold still, move forward, or move forward while
/// bouncing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityVariant {
    Step,
    Walk,
    Jump,
}

/// Tracking reward, max 1.2 at zero error: 1.2 - 0.02 * sum |theta - theta_ref|.
pub fn reward_mimic(theta_deg: &[f64], theta_ref_deg: &[f64]) -> f64 {
    assert_eq!(theta_deg.len(), theta_ref_deg.len(), "mimic width mismatch");
    let err: f64 = theta_deg.iter().zip(theta_ref_deg).map(|(a, b)| (a - b).abs()).sum();
    1.2 - 0.02 * err
}

/// Constant survival bonus per non-terminated step.
pub fn reward_alive() -> f64 {
    1.0
}

/// Upright-body reward: -0.1 (|pitch| + |yaw| + |roll|), degrees.
pub fn reward_balance(pitch_deg: f64, yaw_deg: f64, roll_deg: f64) -> f64 {
    -0.1 * (pitch_deg.abs() + yaw_deg.abs() + roll_deg.abs())
}

/// Body-frame velocity reward (m/s).
pub fn reward_velocity(v_forward: f64, v_lateral: f64, v_vertical: f64, variant: VelocityVariant) -> f64 {
    match variant {
        VelocityVariant::Step => -v_forward.abs() - v_lateral.abs() - v_vertical.abs(),
        VelocityVariant::Walk => v_forward - v_lateral.abs() - v_vertical.abs(),
        VelocityVariant::Jump => v_forward - v_lateral.abs() + v_vertical.abs(),
    }
}

/// Biped leg-mirror reward: -0.05 * sum over (hip, knee, ankle) of
/// |theta_left - theta_right|, degrees.
pub fn reward_sync(left_deg: &[f64; 3], right_deg: &[f64; 3]) -> f64 {
    let diff: f64 = left_deg.iter().zip(right_deg).map(|(l, r)| (l - r).abs()).sum();
    -0.05 * diff
}

/// Virtual-leg pitch proxy: theta_leg = theta_hip + theta_knee / 2 (degrees).
pub fn leg_angle(theta_hip_deg: f64, theta_knee_deg: f64) -> f64 {
    theta_hip_deg + theta_knee_deg / 2.0
}

/// Leg angular velocities as per-step leg-angle differences (degrees).
/// Stance legs sweeping backward-relative motion score positively, swing legs
/// negatively: r = sum(omega_stance) - sum(omega_swing).
///
/// The expected partition is two stance and two swing legs (trot); any other
/// partition is still scored over whatever flags say.
pub fn reward_leg_angular(omega_leg_deg: &[f64], stance: &[bool]) -> f64 {
    assert_eq!(omega_leg_deg.len(), stance.len(), "leg flag width mismatch");
    omega_leg_deg
        .iter()
        .zip(stance)
        .map(|(&w, &s)| if s { w } else { -w })
        .sum()
}

/// Which components are active. Exactly one velocity-style term (a velocity
/// variant or the leg-angular reward) is used at a time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct RewardConfig {
    pub mimic: bool,
    pub alive: bool,
    pub balance: bool,
    pub velocity: Option<VelocityVariant>,
    pub sync: bool,
    pub leg_angular: bool,
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.velocity.is_some() && self.leg_angular {
            return Err(Error::Config(
                "reward uses both a velocity variant and the leg-angular term".into(),
            ));
        }
        Ok(())
    }

    /// Preset names: `stepping`, `walk`, `jump`, `biped_jump`, `online`.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self {
            mimic: false,
            alive: true,
            balance: true,
            velocity: None,
            sync: false,
            leg_angular: false,
        };
        match name {
            // r = r_m + r_a + r_b + r_v_step
            "stepping" => Ok(Self { mimic: true, velocity: Some(VelocityVariant::Step), ..base }),
            // r = r_a + r_b + r_v_walk (biped walks, quadruped trot/pace/bound)
            "walk" => Ok(Self { velocity: Some(VelocityVariant::Walk), ..base }),
            // r = r_a + r_b + r_v_jump (biped hop, quadruped pronk)
            "jump" => Ok(Self { velocity: Some(VelocityVariant::Jump), ..base }),
            // r = r_a + r_b + r_v_jump + r_s
            "biped_jump" => Ok(Self { velocity: Some(VelocityVariant::Jump), sync: true, ..base }),
            // r = leg angular velocity only (online-learning protocol)
            "online" => Ok(Self { alive: false, balance: false, leg_angular: true, ..base }),
            other => Err(Error::Config(format!("unknown reward preset: {other}"))),
        }
    }

    /// Table-driven preset for a robot/gait pair.
    pub fn for_gait(gait: &str) -> Result<Self> {
        match gait {
            "stepping" => Self::preset("stepping"),
            "walk" | "level_walk" | "march_walk" | "trot" | "pace" | "bound" => Self::preset("walk"),
            "hop" | "pronk" => Self::preset("jump"),
            "jump" => Self::preset("biped_jump"),
            other => Err(Error::Config(format!("no reward preset for gait: {other}"))),
        }
    }
}

/// Everything a reward evaluation needs, in reward units.
#[derive(Clone, Debug, Default)]
pub struct RewardInputs {
    pub theta_deg: Vec<f64>,
    pub theta_ref_deg: Vec<f64>,
    pub pitch_deg: f64,
    pub v_forward: f64,
    pub v_vertical: f64,
    /// (left, right) pitch joints for the biped sync term.
    pub sync_joints: Option<([f64; 3], [f64; 3])>,
    /// Per-leg leg-angle increments for the leg-angular term.
    pub omega_leg_deg: Vec<f64>,
    pub stance: Vec<bool>,
}

/// Per-component values, summed into `total`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RewardBreakdown {
    pub mimic: f64,
    pub alive: f64,
    pub balance: f64,
    pub velocity: f64,
    pub sync: f64,
    pub leg_angular: f64,
    pub total: f64,
}

/// Sum the enabled components for one control step.
pub fn total_reward(config: &RewardConfig, inputs: &RewardInputs) -> Result<RewardBreakdown> {
    let mut out = RewardBreakdown::default();
    if config.mimic {
        out.mimic = reward_mimic(&inputs.theta_deg, &inputs.theta_ref_deg);
    }
    if config.alive {
        out.alive = reward_alive();
    }
    if config.balance {
        out.balance = reward_balance(inputs.pitch_deg, 0.0, 0.0);
    }
    if let Some(variant) = config.velocity {
        out.velocity = reward_velocity(inputs.v_forward, 0.0, inputs.v_vertical, variant);
    }
    if config.sync {
        let (left, right) = inputs
            .sync_joints
            .as_ref()
            .ok_or_else(|| Error::Config("sync reward needs biped leg joints".into()))?;
        out.sync = reward_sync(left, right);
    }
    if config.leg_angular {
        out.leg_angular = reward_leg_angular(&inputs.omega_leg_deg, &inputs.stance);
    }
    out.total = out.mimic + out.alive + out.balance + out.velocity + out.sync + out.leg_angular;
    Ok(out)
}
