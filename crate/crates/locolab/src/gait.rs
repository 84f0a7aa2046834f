//! Reference joint trajectories and the gait library.
//!
//! A gait is a named set of per-joint reference trajectories (degrees) with a
//! common period, per-leg phase offsets, and a support schedule classifying
//! each leg as stance or swing at a given phase. Reference angles map to
//! normalized feedforward actions in [-1, 1] via the joint range.
//!
//! All angles in this module are degrees; the physics core works in radians
//! and converts at its own boundary.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Trajectory shape selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    /// theta0 + delta_theta * (1 - cos(2pi(t/T + phase))) / 2
    Sinusoid,
    /// theta0 + delta_theta * t / T, clamped outside [0, T]
    Ramp,
    /// Weighted terms over segment windows of the local cycle
    Composite,
    /// theta0 for all t
    Constant,
}

/// One term of a composite trajectory: a sub-trajectory active on a window
/// `[window[0], window[1])` of the composite's cycle. Within its window the
/// term is evaluated on time measured from the window start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeTerm {
    pub weight: f64,
    pub window: [f64; 2],
    #[serde(flatten)]
    pub spec: TrajectorySpec,
}

/// A single joint reference trajectory (angles in degrees, period in seconds,
/// phase as a fraction of the period in [0, 1)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    #[serde(default)]
    pub theta0: f64,
    #[serde(default)]
    pub delta_theta: f64,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<CompositeTerm>,
}

fn default_period() -> f64 {
    1.0
}

impl TrajectorySpec {
    pub fn sinusoid(theta0: f64, delta_theta: f64, period: f64, phase: f64) -> Self {
        Self { kind: TrajectoryKind::Sinusoid, theta0, delta_theta, period, phase, terms: Vec::new() }
    }

    pub fn ramp(theta0: f64, delta_theta: f64, period: f64) -> Self {
        Self { kind: TrajectoryKind::Ramp, theta0, delta_theta, period, phase: 0.0, terms: Vec::new() }
    }

    pub fn constant(theta0: f64) -> Self {
        Self { kind: TrajectoryKind::Constant, theta0, delta_theta: 0.0, period: 1.0, phase: 0.0, terms: Vec::new() }
    }

    /// `theta0` anchors amplitude scaling; terms carry absolute angles.
    pub fn composite(theta0: f64, period: f64, terms: Vec<CompositeTerm>) -> Self {
        Self { kind: TrajectoryKind::Composite, theta0, delta_theta: 0.0, period, phase: 0.0, terms }
    }

    /// Scale the trajectory period by `factor` (used for motion adaptation).
    pub fn scale_period(&mut self, factor: f64) {
        self.period *= factor;
        for term in &mut self.terms {
            term.spec.scale_period(factor);
        }
    }

    /// Scale the trajectory amplitude by `factor`, keeping theta0 fixed.
    /// Composite terms contract toward the composite's anchor angle so the
    /// whole profile scales about the nominal posture.
    pub fn scale_amplitude(&mut self, factor: f64) {
        if self.kind == TrajectoryKind::Composite {
            let anchor = self.theta0;
            for term in &mut self.terms {
                term.spec.theta0 = anchor + factor * (term.spec.theta0 - anchor);
                term.spec.scale_amplitude(factor);
            }
        } else {
            self.delta_theta *= factor;
        }
    }
}

/// Lower/upper joint limits in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointRange {
    pub theta_min: f64,
    pub theta_max: f64,
}

impl JointRange {
    pub fn new(theta_min: f64, theta_max: f64) -> Self {
        assert!(theta_min < theta_max, "joint range must have theta_min < theta_max");
        Self { theta_min, theta_max }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.theta_min + self.theta_max)
    }

    pub fn half_span(&self) -> f64 {
        0.5 * (self.theta_max - self.theta_min)
    }
}

/// theta0 + dtheta * (1 - cos(2pi(t/T + phase))) / 2
pub fn eval_sinusoid(spec: &TrajectorySpec, t: f64) -> Result<f64> {
    if spec.kind != TrajectoryKind::Sinusoid {
        return Err(Error::Parameter(format!("eval_sinusoid on {:?} trajectory", spec.kind)));
    }
    if spec.period <= 0.0 {
        return Err(Error::Parameter(format!("sinusoid period must be positive, got {}", spec.period)));
    }
    let arg = 2.0 * std::f64::consts::PI * (t / spec.period + spec.phase);
    Ok(spec.theta0 + spec.delta_theta * (1.0 - arg.cos()) / 2.0)
}

/// theta0 + dtheta * t / T. Outside [0, T] the value clamps to the endpoint;
/// `ramp_clamped` reports that condition.
pub fn eval_ramp(spec: &TrajectorySpec, t: f64) -> Result<f64> {
    if spec.kind != TrajectoryKind::Ramp {
        return Err(Error::Parameter(format!("eval_ramp on {:?} trajectory", spec.kind)));
    }
    if spec.period <= 0.0 {
        return Err(Error::Parameter(format!("ramp period must be positive, got {}", spec.period)));
    }
    let tc = t.clamp(0.0, spec.period);
    Ok(spec.theta0 + spec.delta_theta * tc / spec.period)
}

/// Soft flag for ramp evaluation outside its domain [0, T].
pub fn ramp_clamped(spec: &TrajectorySpec, t: f64) -> bool {
    spec.kind == TrajectoryKind::Ramp && (t < 0.0 || t > spec.period)
}

/// Evaluate any trajectory kind at time `t` (seconds), angle in degrees.
pub fn eval_trajectory(spec: &TrajectorySpec, t: f64) -> Result<f64> {
    match spec.kind {
        TrajectoryKind::Sinusoid => eval_sinusoid(spec, t),
        TrajectoryKind::Ramp => eval_ramp(spec, t),
        TrajectoryKind::Constant => Ok(spec.theta0),
        TrajectoryKind::Composite => {
            if spec.terms.is_empty() {
                return Err(Error::Parameter("composite trajectory with no terms".into()));
            }
            if spec.period <= 0.0 {
                return Err(Error::Parameter(format!(
                    "composite period must be positive, got {}",
                    spec.period
                )));
            }
            let cycle_pos = (t / spec.period).rem_euclid(1.0);
            let mut angle = 0.0;
            for term in &spec.terms {
                let [w0, w1] = term.window;
                if cycle_pos >= w0 && cycle_pos < w1 {
                    let t_term = (cycle_pos - w0) * spec.period;
                    angle += term.weight * eval_trajectory(&term.spec, t_term)?;
                }
            }
            Ok(angle)
        }
    }
}

/// Eq-style normalization of a reference angle to a unit action:
/// a = 2 (theta - theta_min) / (theta_max - theta_min) - 1.
///
/// Reference designs must respect joint limits, so an out-of-range angle is
/// an error rather than a silent clamp.
pub fn normalize_to_action(theta_ref: f64, range: &JointRange) -> Result<f64> {
    if theta_ref < range.theta_min || theta_ref > range.theta_max {
        return Err(Error::Range(format!(
            "reference angle {theta_ref} outside joint range [{}, {}]",
            range.theta_min, range.theta_max
        )));
    }
    Ok(2.0 * (theta_ref - range.theta_min) / (range.theta_max - range.theta_min) - 1.0)
}

/// How stance/swing flags derive from the gait phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportScheduleKind {
    /// A leg swings while its local phase is in [0.25, 0.75) — the half-cycle
    /// centered on the peak of its foot-lift sinusoid — and is in stance
    /// otherwise.
    SwingWindow,
    /// Every leg is always marked stance.
    AllStance,
}

/// One joint's reference trajectory plus the leg it belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointTrajectory {
    pub joint_id: String,
    pub leg: usize,
    #[serde(flatten)]
    pub spec: TrajectorySpec,
}

/// Named set of per-joint reference trajectories with leg phase offsets and
/// a support schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaitDefinition {
    pub name: String,
    pub gait_period: f64,
    pub joints: Vec<JointTrajectory>,
    pub leg_phase_offsets: Vec<f64>,
    pub support_schedule_kind: SupportScheduleKind,
}

impl GaitDefinition {
    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn leg_count(&self) -> usize {
        self.leg_phase_offsets.len()
    }

    fn leg_offset(&self, joint: &JointTrajectory) -> Result<f64> {
        self.leg_phase_offsets.get(joint.leg).copied().ok_or_else(|| {
            Error::Config(format!(
                "joint {} references leg {} but gait {} has {} legs",
                joint.joint_id,
                joint.leg,
                self.name,
                self.leg_count()
            ))
        })
    }

    /// Per-joint reference angles (degrees) at time `t`, each joint evaluated
    /// at its leg's phase-shifted time.
    pub fn reference_angles(&self, t: f64) -> Result<Vec<f64>> {
        self.joints
            .iter()
            .map(|j| {
                let offset = self.leg_offset(j)?;
                eval_trajectory(&j.spec, t + offset * self.gait_period)
            })
            .collect()
    }

    /// Scale every trajectory period and the gait period by `factor`.
    pub fn scale_period(&mut self, factor: f64) {
        self.gait_period *= factor;
        for j in &mut self.joints {
            j.spec.scale_period(factor);
        }
    }

    /// Scale every trajectory amplitude by `factor`.
    pub fn scale_amplitude(&mut self, factor: f64) {
        for j in &mut self.joints {
            j.spec.scale_amplitude(factor);
        }
    }

    /// Serialize as the human-readable gait JSON document.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Per-joint normalized feedforward actions at time `t`.
///
/// Element i is `normalize_to_action(eval_trajectory(spec_i, t + leg shift))`
/// for joint i, so every element lies in [-1, 1] whenever the reference
/// respects its joint range.
pub fn feedforward_vector(gait: &GaitDefinition, ranges: &[JointRange], t: f64) -> Result<Vec<f64>> {
    if gait.joint_count() != ranges.len() {
        return Err(Error::Config(format!(
            "gait {} has {} joints but robot has {}",
            gait.name,
            gait.joint_count(),
            ranges.len()
        )));
    }
    let angles = gait.reference_angles(t)?;
    angles
        .iter()
        .zip(ranges)
        .map(|(&theta, range)| normalize_to_action(theta, range))
        .collect()
}

/// Per-leg stance flags (true = stance) at time `t`.
pub fn support_flags(gait: &GaitDefinition, t: f64) -> Vec<bool> {
    match gait.support_schedule_kind {
        SupportScheduleKind::AllStance => vec![true; gait.leg_count()],
        SupportScheduleKind::SwingWindow => {
            let phase = (t / gait.gait_period).rem_euclid(1.0);
            gait.leg_phase_offsets
                .iter()
                .map(|offset| {
                    let leg_phase = (phase + offset).rem_euclid(1.0);
                    !(0.25..0.75).contains(&leg_phase)
                })
                .collect()
        }
    }
}

// ---------------------------------------------------------------------------
// Gait library
// ---------------------------------------------------------------------------

/// Amplitudes and timing for the built-in gait library. Angles in degrees.
/// Exact per-gait trajectories are style choices; these defaults produce a
/// foot-under-hip stepping motion for the default link geometry (equal thigh
/// and shank lengths make hip +a, knee -2a track a vertical foot path).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaitParams {
    pub period: f64,
    pub hip_amplitude: f64,
    pub knee_amplitude: f64,
    pub hip_nominal: f64,
    pub knee_nominal: f64,
    pub ankle_nominal: f64,
}

impl Default for GaitParams {
    fn default() -> Self {
        Self {
            period: 0.5,
            hip_amplitude: 20.0,
            knee_amplitude: 40.0,
            hip_nominal: 20.0,
            knee_nominal: -40.0,
            ankle_nominal: 20.0,
        }
    }
}

fn stepping_hip(p: &GaitParams) -> TrajectorySpec {
    TrajectorySpec::sinusoid(p.hip_nominal, p.hip_amplitude, p.period, 0.0)
}

fn stepping_knee(p: &GaitParams) -> TrajectorySpec {
    TrajectorySpec::sinusoid(p.knee_nominal, -p.knee_amplitude, p.period, 0.0)
}

const QUAD_LEG_NAMES: [&str; 4] = ["fl", "fr", "hl", "hr"];

fn quad_joints(hip: TrajectorySpec, knee: TrajectorySpec) -> Vec<JointTrajectory> {
    let mut joints = Vec::with_capacity(8);
    for (leg, name) in QUAD_LEG_NAMES.iter().enumerate() {
        joints.push(JointTrajectory { joint_id: format!("hip_{name}"), leg, spec: hip.clone() });
        joints.push(JointTrajectory { joint_id: format!("knee_{name}"), leg, spec: knee.clone() });
    }
    joints
}

/// Quadruped gait library: `stepping`, `trot`, `pace`, `bound`, `pronk`.
/// Leg order is fl, fr, hl, hr.
pub fn quadruped_gait(name: &str, p: &GaitParams) -> Result<GaitDefinition> {
    let offsets = match name {
        // Stepping-in-place uses the trot schedule; only the reward differs.
        "stepping" | "trot" => vec![0.0, 0.5, 0.5, 0.0],
        "pace" => vec![0.0, 0.5, 0.0, 0.5],
        "bound" => vec![0.0, 0.0, 0.5, 0.5],
        "pronk" => vec![0.0, 0.0, 0.0, 0.0],
        other => return Err(Error::Config(format!("unknown quadruped gait: {other}"))),
    };
    let (hip, knee) = if name == "pronk" {
        // All legs in phase, pushing together: deeper crouch-extend cycle.
        (
            TrajectorySpec::sinusoid(p.hip_nominal, 0.75 * p.hip_amplitude, p.period, 0.0),
            TrajectorySpec::sinusoid(p.knee_nominal, -0.75 * p.knee_amplitude, p.period, 0.0),
        )
    } else {
        (stepping_hip(p), stepping_knee(p))
    };
    Ok(GaitDefinition {
        name: name.to_string(),
        gait_period: p.period,
        joints: quad_joints(hip, knee),
        leg_phase_offsets: offsets,
        support_schedule_kind: SupportScheduleKind::SwingWindow,
    })
}

fn biped_joints(
    hip: TrajectorySpec,
    knee: TrajectorySpec,
    ankle: TrajectorySpec,
) -> Vec<JointTrajectory> {
    let mut joints = Vec::with_capacity(6);
    for (leg, name) in ["l", "r"].iter().enumerate() {
        joints.push(JointTrajectory { joint_id: format!("hip_{name}"), leg, spec: hip.clone() });
        joints.push(JointTrajectory { joint_id: format!("knee_{name}"), leg, spec: knee.clone() });
        joints.push(JointTrajectory { joint_id: format!("ankle_{name}"), leg, spec: ankle.clone() });
    }
    joints
}

/// March-walk hip: ramp up during the first quarter cycle, sinusoidal descent
/// through the middle half, hold for the rest.
fn march_profile(nominal: f64, rise: f64, period: f64) -> TrajectorySpec {
    TrajectorySpec::composite(
        nominal,
        period,
        vec![
            CompositeTerm {
                weight: 1.0,
                window: [0.0, 0.25],
                spec: TrajectorySpec::ramp(nominal, rise, 0.25 * period),
            },
            CompositeTerm {
                weight: 1.0,
                window: [0.25, 0.75],
                spec: TrajectorySpec::sinusoid(nominal + rise, -rise, period, 0.0),
            },
            CompositeTerm { weight: 1.0, window: [0.75, 1.0], spec: TrajectorySpec::constant(nominal) },
        ],
    )
}

/// Biped gait library: `stepping`, `walk`, `level_walk`, `march_walk`,
/// `jump`, `hop`. Leg order is l, r.
pub fn biped_gait(name: &str, p: &GaitParams) -> Result<GaitDefinition> {
    let anti_phase = vec![0.0, 0.5];
    let in_phase = vec![0.0, 0.0];
    let hip = stepping_hip(p);
    let knee = stepping_knee(p);
    let ankle_hold = TrajectorySpec::constant(p.ankle_nominal);
    // Foot stays horizontal when hip + knee + ankle deviations cancel.
    let ankle_level = TrajectorySpec::sinusoid(
        p.ankle_nominal,
        p.knee_amplitude - p.hip_amplitude,
        p.period,
        0.0,
    );

    let (offsets, joints) = match name {
        // Stepping keeps the foot level through the swing; a constant ankle
        // makes the foot strike toe-first and topple the robot backward.
        "stepping" => (anti_phase, biped_joints(hip, knee, ankle_level.clone())),
        "walk" => (anti_phase, biped_joints(hip, knee, ankle_hold)),
        "level_walk" => (anti_phase, biped_joints(hip, knee, ankle_level)),
        "march_walk" => {
            let rise = 1.75 * p.hip_amplitude;
            let hip_march = march_profile(p.hip_nominal, rise, p.period);
            let knee_march = march_profile(p.knee_nominal, -2.0 * rise, p.period);
            (anti_phase, biped_joints(hip_march, knee_march, ankle_hold))
        }
        "jump" => {
            let hip_j = TrajectorySpec::sinusoid(p.hip_nominal, 1.25 * p.hip_amplitude, 1.4 * p.period, 0.0);
            let knee_j =
                TrajectorySpec::sinusoid(p.knee_nominal, -1.25 * p.knee_amplitude, 1.4 * p.period, 0.0);
            (in_phase, biped_joints(hip_j, knee_j, ankle_hold))
        }
        "hop" => {
            // Crouch on a ramp, extend fast, then a small sinusoidal tuck.
            let hop = |nominal: f64, amp: f64, period: f64| {
                TrajectorySpec::composite(
                    nominal,
                    period,
                    vec![
                        CompositeTerm {
                            weight: 1.0,
                            window: [0.0, 0.3],
                            spec: TrajectorySpec::ramp(nominal, amp, 0.3 * period),
                        },
                        CompositeTerm {
                            weight: 1.0,
                            window: [0.3, 0.5],
                            spec: TrajectorySpec::ramp(nominal + amp, -amp, 0.2 * period),
                        },
                        CompositeTerm {
                            weight: 1.0,
                            window: [0.5, 1.0],
                            spec: TrajectorySpec::sinusoid(nominal, 0.5 * amp, 0.5 * period, 0.0),
                        },
                    ],
                )
            };
            let hip_h = hop(p.hip_nominal, 1.25 * p.hip_amplitude, p.period);
            let knee_h = hop(p.knee_nominal, -1.25 * p.knee_amplitude, p.period);
            (in_phase, biped_joints(hip_h, knee_h, ankle_hold))
        }
        other => return Err(Error::Config(format!("unknown biped gait: {other}"))),
    };

    let gait_period = if name == "jump" { 1.4 * p.period } else { p.period };
    Ok(GaitDefinition {
        name: name.to_string(),
        gait_period,
        joints,
        leg_phase_offsets: offsets,
        support_schedule_kind: SupportScheduleKind::SwingWindow,
    })
}

pub const QUADRUPED_GAITS: [&str; 5] = ["stepping", "trot", "pace", "bound", "pronk"];
pub const BIPED_GAITS: [&str; 6] = ["stepping", "walk", "level_walk", "march_walk", "jump", "hop"];
