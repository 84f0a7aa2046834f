//! Run configuration: one JSON document covering every module's knobs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::EnvSetup;
use crate::gait::{biped_gait, quadruped_gait, GaitDefinition, GaitParams};
use crate::obs::{ObsVariant, ObservationLayout};
use crate::pipeline::{ComposeMode, FeedbackConfig};
use crate::ppo::PpoConfig;
use crate::reward::RewardConfig;
use crate::sim::{
    build_biped_with, build_quadruped_with, BipedParams, DisturbanceConfig, QuadrupedParams,
    RobotKind, Simulator, WorldParams,
};
use crate::{Error, Result};

/// The four learning modes compared in the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LearnMode {
    #[serde(rename = "IML")]
    Iml,
    #[serde(rename = "IML_RO")]
    ImlRo,
    #[serde(rename = "INL")]
    Inl,
    #[serde(rename = "INL_RO")]
    InlRo,
}

impl LearnMode {
    pub fn compose_mode(self) -> ComposeMode {
        match self {
            LearnMode::Iml | LearnMode::ImlRo => ComposeMode::Iml,
            LearnMode::Inl | LearnMode::InlRo => ComposeMode::Inl,
        }
    }

    /// RO variants put the reference angles in the observation.
    pub fn obs_variant(self) -> ObsVariant {
        match self {
            LearnMode::ImlRo | LearnMode::InlRo => ObsVariant::FullRo,
            LearnMode::Iml | LearnMode::Inl => ObsVariant::Full,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LearnMode::Iml => "IML",
            LearnMode::ImlRo => "IML_RO",
            LearnMode::Inl => "INL",
            LearnMode::InlRo => "INL_RO",
        }
    }
}

/// Scalar-or-vector feedback ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KbSpec {
    Scalar(f64),
    PerJoint(Vec<f64>),
}

impl KbSpec {
    pub fn resolve(&self, joint_count: usize) -> Result<Vec<f64>> {
        match self {
            KbSpec::Scalar(k) => Ok(vec![*k; joint_count]),
            KbSpec::PerJoint(v) => {
                if v.len() != joint_count {
                    return Err(Error::Config(format!(
                        "k_b has {} entries for {} joints",
                        v.len(),
                        joint_count
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

/// Full training-run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub robot: RobotKind,
    pub gait: String,
    pub mode: LearnMode,
    pub k_b: KbSpec,
    /// Reward preset name; defaults to the reward-table entry for the gait.
    pub reward_preset: Option<String>,
    /// Observation variant override (the hardware layout for the online
    /// protocol); defaults to the mode's variant.
    pub obs_variant: Option<ObsVariant>,
    pub total_steps: u64,
    pub env_copies: usize,
    pub seed: u64,
    pub episode_max_steps: u64,
    pub disturbance: DisturbanceConfig,
    pub world: WorldParams,
    pub biped: BipedParams,
    pub quadruped: QuadrupedParams,
    pub gait_params: GaitParams,
    /// Feedforward adaptation knobs applied after gait construction.
    pub period_scale: f64,
    pub amplitude_scale: f64,
    pub ppo: PpoConfig,
    /// Save a checkpoint every this many env steps (besides the final one).
    pub checkpoint_every: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            robot: RobotKind::Quadruped,
            gait: "stepping".into(),
            mode: LearnMode::Inl,
            k_b: KbSpec::Scalar(0.5),
            reward_preset: None,
            obs_variant: None,
            total_steps: 200_000,
            env_copies: 12,
            seed: 0,
            episode_max_steps: 1000,
            disturbance: DisturbanceConfig::default(),
            world: WorldParams::default(),
            biped: BipedParams::default(),
            quadruped: QuadrupedParams::default(),
            gait_params: GaitParams::default(),
            period_scale: 1.0,
            amplitude_scale: 1.0,
            ppo: PpoConfig::default(),
            checkpoint_every: None,
        }
    }
}

impl TrainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build_gait(&self) -> Result<GaitDefinition> {
        let mut gait = match self.robot {
            RobotKind::Biped => biped_gait(&self.gait, &self.gait_params)?,
            RobotKind::Quadruped => quadruped_gait(&self.gait, &self.gait_params)?,
        };
        if self.period_scale != 1.0 {
            gait.scale_period(self.period_scale);
        }
        if self.amplitude_scale != 1.0 {
            gait.scale_amplitude(self.amplitude_scale);
        }
        Ok(gait)
    }

    pub fn resolved_obs_variant(&self) -> ObsVariant {
        self.obs_variant.unwrap_or_else(|| self.mode.obs_variant())
    }

    /// Observation-layout tag stored in checkpoints: robot and variant.
    pub fn layout_id(&self) -> u32 {
        let variant = match self.resolved_obs_variant() {
            ObsVariant::Full => 0,
            ObsVariant::FullRo => 1,
            ObsVariant::Hardware => 2,
        };
        let robot = match self.robot {
            RobotKind::Biped => 0,
            RobotKind::Quadruped => 1,
        };
        robot * 3 + variant
    }

    /// Resolve everything one environment copy needs.
    pub fn build_env_setup(&self) -> Result<EnvSetup> {
        self.ppo.validate()?;
        if self.env_copies == 0 {
            return Err(Error::Config("env_copies must be positive".into()));
        }
        let model = match self.robot {
            RobotKind::Biped => build_biped_with(&self.biped),
            RobotKind::Quadruped => build_quadruped_with(&self.quadruped),
        };
        let n = model.joint_count();
        let sim = Simulator::new(model, self.world);
        let gait = self.build_gait()?;

        let k_b = self.k_b.resolve(n)?;
        let feedback = FeedbackConfig::new(self.mode.compose_mode(), k_b)?;
        let reward = match &self.reward_preset {
            Some(name) => RewardConfig::preset(name)?,
            None => RewardConfig::for_gait(&self.gait)?,
        };
        if reward.sync && self.robot != RobotKind::Biped {
            return Err(Error::Config("sync reward applies to the biped only".into()));
        }
        if reward.leg_angular && self.robot != RobotKind::Quadruped {
            return Err(Error::Config("leg-angular reward applies to the quadruped only".into()));
        }
        let layout = ObservationLayout::new(self.resolved_obs_variant(), n);
        Ok(EnvSetup {
            sim,
            gait,
            feedback,
            reward,
            layout,
            disturbance: self.disturbance,
            episode_max_steps: self.episode_max_steps,
        })
    }
}
