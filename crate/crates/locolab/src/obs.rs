//! Observation vectors.
//!
//! The full layout is [quaternion(4), body angular velocity(3), body linear
//! velocity(3), joint angles(n), joint velocities(n)]; the RO variant appends
//! the reference angles(n); the hardware variant drops body velocity and
//! replaces the quaternion with pitch and roll. The planar simulation fills
//! out-of-plane entries with their identity/zero values, so formulas keep
//! their 3D shape.
//!
//! Joint angles are scaled by centered half-range division (the same affine
//! map that normalizes reference angles to actions); joint velocities are
//! divided by the half-range per quarter second.

use serde::{Deserialize, Serialize};

use crate::gait::JointRange;
use crate::sim::{SimState, Simulator, DEG};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObsVariant {
    /// 10 + 2n entries.
    Full,
    /// Full plus reference angles: 10 + 3n entries.
    FullRo,
    /// Pitch/roll instead of quaternion, no body velocity: 5 + 2n entries.
    Hardware,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationLayout {
    pub variant: ObsVariant,
    pub joint_count: usize,
}

impl ObservationLayout {
    pub fn new(variant: ObsVariant, joint_count: usize) -> Self {
        Self { variant, joint_count }
    }

    pub fn len(&self) -> usize {
        match self.variant {
            ObsVariant::Full => 10 + 2 * self.joint_count,
            ObsVariant::FullRo => 10 + 3 * self.joint_count,
            ObsVariant::Hardware => 5 + 2 * self.joint_count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn wants_reference(&self) -> bool {
        self.variant == ObsVariant::FullRo
    }
}

/// Inverse time scale for joint-velocity entries: a joint sweeping its full
/// half-range in 0.25 s maps to magnitude 1.
const JOINT_VEL_SCALE: f64 = 4.0;

/// Build the observation vector for `state`. `theta_ref_deg` must be given
/// exactly when the layout is the RO variant.
pub fn observe(
    sim: &Simulator,
    state: &SimState,
    layout: &ObservationLayout,
    ranges: &[JointRange],
    theta_ref_deg: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if layout.joint_count != state.q.len() || ranges.len() != state.q.len() {
        return Err(Error::Config(format!(
            "observation layout for {} joints but state has {}",
            layout.joint_count,
            state.q.len()
        )));
    }
    match (layout.wants_reference(), theta_ref_deg) {
        (true, None) => {
            return Err(Error::Config("RO observation requires reference angles".into()))
        }
        (false, Some(_)) => {
            return Err(Error::Config("non-RO observation given reference angles".into()))
        }
        _ => {}
    }

    let mut obs = Vec::with_capacity(layout.len());
    let body_vel = sim.body_frame_velocity(state);
    match layout.variant {
        ObsVariant::Full | ObsVariant::FullRo => {
            // Pitch-only rotation as a quaternion about the pitch axis.
            let half = 0.5 * state.base_pitch;
            obs.extend_from_slice(&[half.cos(), 0.0, half.sin(), 0.0]);
            obs.extend_from_slice(&[0.0, state.base_pitch_rate, 0.0]);
            obs.extend_from_slice(&[body_vel[0], 0.0, body_vel[1]]);
        }
        ObsVariant::Hardware => {
            obs.extend_from_slice(&[state.base_pitch, 0.0]);
            obs.extend_from_slice(&[0.0, state.base_pitch_rate, 0.0]);
        }
    }
    for (j, range) in ranges.iter().enumerate() {
        let deg = state.q[j] / DEG;
        obs.push((deg - range.midpoint()) / range.half_span());
    }
    for (j, range) in ranges.iter().enumerate() {
        let deg_per_s = state.qd[j] / DEG;
        obs.push(deg_per_s / (JOINT_VEL_SCALE * range.half_span()));
    }
    if let Some(refs) = theta_ref_deg {
        if refs.len() != ranges.len() {
            return Err(Error::Config("reference width mismatch".into()));
        }
        for (r, range) in refs.iter().zip(ranges) {
            obs.push((r - range.midpoint()) / range.half_span());
        }
    }
    debug_assert_eq!(obs.len(), layout.len());
    Ok(obs)
}
