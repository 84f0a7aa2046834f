//! Action pipeline: raw policy output -> joint position commands.
//!
//! Per control step the raw network output is clipped to [-1, 1], low-pass
//! filtered (a_fb = 0.9 a_fb_last + 0.1 a_nn), optionally scaled by the
//! per-joint feedback ratio and added to the feedforward, then saturated and
//! mapped to a command angle inside the joint range.

use serde::{Deserialize, Serialize};

use crate::gait::JointRange;

/// Filter coefficients of the feedback low-pass. Fixed, not learned.
const FILTER_KEEP: f64 = 0.9;
const FILTER_MIX: f64 = 0.1;

/// Per-joint low-pass filter memory. Every element stays in [-1, 1] because
/// inputs are clipped before filtering.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineState {
    a_fb_last: Vec<f64>,
}

impl PipelineState {
    pub fn new(joint_count: usize) -> Self {
        Self { a_fb_last: vec![0.0; joint_count] }
    }

    pub fn joint_count(&self) -> usize {
        self.a_fb_last.len()
    }

    pub fn memory(&self) -> &[f64] {
        &self.a_fb_last
    }

    /// Reset the filter memory to zero at an episode boundary, so the first
    /// composed action reduces to the pure feedforward.
    pub fn reset(&mut self) {
        self.a_fb_last.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Reset the filter memory to a given unit-action vector. Feedback-only
    /// modes start episodes holding the initial posture this way; zero
    /// memory would snap the commands to the range midpoints and jerk the
    /// robot over before the policy can act through the filter.
    pub fn reset_to(&mut self, memory: &[f64]) {
        assert_eq!(memory.len(), self.a_fb_last.len(), "filter width mismatch");
        for (slot, &v) in self.a_fb_last.iter_mut().zip(memory) {
            *slot = v.clamp(-1.0, 1.0);
        }
    }

    /// Clip the raw policy output, advance the filter, and return the
    /// feedback action. Updates the filter memory in place.
    pub fn filter_step(&mut self, a_nn: &[f64]) -> Vec<f64> {
        assert_eq!(a_nn.len(), self.a_fb_last.len(), "feedback width mismatch");
        for (last, &raw) in self.a_fb_last.iter_mut().zip(a_nn) {
            *last = FILTER_KEEP * *last + FILTER_MIX * raw.clamp(-1.0, 1.0);
        }
        self.a_fb_last.clone()
    }
}

/// Whether the reference enters the action (feedforward + bounded feedback)
/// or only the reward (pure feedback action).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComposeMode {
    /// a_t = a_fb
    Iml,
    /// a_t = a_ff + k_b * a_fb
    Inl,
}

/// Compose mode plus the per-joint feedback ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackConfig {
    pub mode: ComposeMode,
    k_b: Vec<f64>,
}

impl FeedbackConfig {
    /// Per-joint ratios; each must lie in [0, 2].
    pub fn new(mode: ComposeMode, k_b: Vec<f64>) -> crate::Result<Self> {
        if let Some(bad) = k_b.iter().find(|k| !(0.0..=2.0).contains(*k)) {
            return Err(crate::Error::Config(format!("feedback ratio {bad} outside [0, 2]")));
        }
        Ok(Self { mode, k_b })
    }

    /// Scalar ratio broadcast to every joint.
    pub fn uniform(mode: ComposeMode, k_b: f64, joint_count: usize) -> crate::Result<Self> {
        Self::new(mode, vec![k_b; joint_count])
    }

    pub fn k_b(&self) -> &[f64] {
        &self.k_b
    }

    pub fn max_k_b(&self) -> f64 {
        self.k_b.iter().cloned().fold(0.0, f64::max)
    }
}

/// Compose feedforward and feedback into the control action. In Inl mode the
/// result may leave [-1, 1]; the command mapping saturates it.
pub fn compose(a_ff: &[f64], a_fb: &[f64], cfg: &FeedbackConfig) -> Vec<f64> {
    match cfg.mode {
        ComposeMode::Iml => a_fb.to_vec(),
        ComposeMode::Inl => {
            assert_eq!(a_ff.len(), a_fb.len(), "compose width mismatch");
            assert_eq!(a_ff.len(), cfg.k_b.len(), "feedback ratio width mismatch");
            a_ff.iter()
                .zip(a_fb)
                .zip(&cfg.k_b)
                .map(|((&ff, &fb), &k)| ff + k * fb)
                .collect()
        }
    }
}

/// Saturate the action and map it into the joint range:
/// theta_cmd = theta_min + (sat(a) + 1) / 2 * (theta_max - theta_min).
pub fn to_command_angle(a: f64, range: &JointRange) -> f64 {
    let sat = a.clamp(-1.0, 1.0);
    range.theta_min + (sat + 1.0) / 2.0 * (range.theta_max - range.theta_min)
}

/// Vector form of [`to_command_angle`].
pub fn to_command_angles(a_t: &[f64], ranges: &[JointRange]) -> Vec<f64> {
    assert_eq!(a_t.len(), ranges.len(), "command width mismatch");
    a_t.iter().zip(ranges).map(|(&a, r)| to_command_angle(a, r)).collect()
}
