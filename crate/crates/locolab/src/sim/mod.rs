//! Planar (sagittal-plane) articulated rigid-body simulation.
//!
//! A robot is a tree of links rooted at a floating base, actuated by revolute
//! pitch joints with PD servos and torque limits. Ground contact is a
//! penalty spring-damper with regularized Coulomb friction. Only pitch-plane
//! dynamics exist here: the biped keeps hip/knee/ankle pitch (6 joints), the
//! quadruped hip/knee pitch (8 joints).
//!
//! Internally everything is SI and radians; joint commands and ranges cross
//! the module boundary in degrees.

mod dynamics;
mod push;

pub use dynamics::{contact_force, ContactParams, Simulator, StepInfo, WorldParams};
pub use push::{DisturbanceConfig, PushSchedule};

use serde::{Deserialize, Serialize};

use crate::gait::JointRange;

pub const DEG: f64 = std::f64::consts::PI / 180.0;

/// Episode ends when |pitch| exceeds this (degrees).
pub const FALL_PITCH_DEG: f64 = 10.0;
/// Episode ends when the step counter reaches this.
pub const EPISODE_MAX_STEPS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotKind {
    Biped,
    Quadruped,
}

/// One rigid link. Geometry is expressed in the link's local frame, whose
/// origin sits at the link's inboard joint (at the base reference point for
/// the trunk).
#[derive(Clone, Debug)]
pub struct Link {
    pub name: String,
    pub mass: f64,
    pub length: f64,
    pub com_local: [f64; 2],
    /// Rotational inertia about the COM.
    pub inertia: f64,
}

/// Revolute joint connecting `parent` to the link with index `child`.
/// Joint j always drives link j+1, so link order is topological.
#[derive(Clone, Debug)]
pub struct Joint {
    pub name: String,
    pub parent: usize,
    /// Anchor point in the parent link frame.
    pub anchor_local: [f64; 2],
    /// Joint limits in degrees.
    pub range: JointRange,
    pub kp: f64,
    pub kd: f64,
    pub tau_max: f64,
    /// Actuator velocity limit (rad/s), enforced in the servo drive path.
    pub qd_max: f64,
    pub leg: usize,
}

/// A ground-contact point attached to a link.
#[derive(Clone, Debug)]
pub struct ContactPoint {
    pub link: usize,
    pub local: [f64; 2],
    pub foot: usize,
}

/// Planar articulated robot description.
#[derive(Clone, Debug)]
pub struct RobotModel {
    pub name: String,
    pub kind: RobotKind,
    pub fixed_base: bool,
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    pub contacts: Vec<ContactPoint>,
    pub foot_count: usize,
    /// Joints on the path from each link to the base (outboard last).
    ancestors: Vec<Vec<usize>>,
}

impl RobotModel {
    pub fn new(
        name: &str,
        kind: RobotKind,
        fixed_base: bool,
        links: Vec<Link>,
        joints: Vec<Joint>,
        contacts: Vec<ContactPoint>,
        foot_count: usize,
    ) -> Self {
        assert_eq!(links.len(), joints.len() + 1, "joint j must drive link j+1");
        for (j, joint) in joints.iter().enumerate() {
            assert!(joint.parent <= j, "parent of joint {j} must precede its child link");
        }
        let mut ancestors: Vec<Vec<usize>> = vec![Vec::new()];
        for (j, joint) in joints.iter().enumerate() {
            let mut chain = ancestors[joint.parent].clone();
            chain.push(j);
            ancestors.push(chain);
        }
        Self { name: name.into(), kind, fixed_base, links, joints, contacts, foot_count, ancestors }
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn leg_count(&self) -> usize {
        self.joints.iter().map(|j| j.leg + 1).max().unwrap_or(0)
    }

    /// Generalized coordinate count: [x, z, pitch] + joints when floating.
    pub fn dof(&self) -> usize {
        self.base_dof() + self.joints.len()
    }

    pub fn base_dof(&self) -> usize {
        if self.fixed_base {
            0
        } else {
            3
        }
    }

    pub fn joint_ranges(&self) -> Vec<JointRange> {
        self.joints.iter().map(|j| j.range).collect()
    }

    /// Joint indices (hip, knee, ...) belonging to each leg, in joint order.
    pub fn leg_joints(&self, leg: usize) -> Vec<usize> {
        self.joints
            .iter()
            .enumerate()
            .filter_map(|(i, j)| (j.leg == leg).then_some(i))
            .collect()
    }

    pub(crate) fn ancestor_joints(&self, link: usize) -> &[usize] {
        &self.ancestors[link]
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }
}

/// Complete planar dynamic state of one robot instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    /// Base reference point, world frame (m).
    pub base_pos: [f64; 2],
    /// Base pitch (rad).
    pub base_pitch: f64,
    pub base_vel: [f64; 2],
    pub base_pitch_rate: f64,
    /// Joint angles (rad).
    pub q: Vec<f64>,
    /// Joint velocities (rad/s).
    pub qd: Vec<f64>,
    pub foot_contact: Vec<bool>,
    pub time: f64,
    pub step_count: u64,
}

impl SimState {
    pub fn new(joint_count: usize, foot_count: usize) -> Self {
        Self {
            base_pos: [0.0, 0.0],
            base_pitch: 0.0,
            base_vel: [0.0, 0.0],
            base_pitch_rate: 0.0,
            q: vec![0.0; joint_count],
            qd: vec![0.0; joint_count],
            foot_contact: vec![false; foot_count],
            time: 0.0,
            step_count: 0,
        }
    }

    pub fn pitch_deg(&self) -> f64 {
        self.base_pitch / DEG
    }

    pub fn joint_angles_deg(&self) -> Vec<f64> {
        self.q.iter().map(|&a| a / DEG).collect()
    }

    pub fn joint_rates_deg(&self) -> Vec<f64> {
        self.qd.iter().map(|&w| w / DEG).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.base_pos.iter().all(|v| v.is_finite())
            && self.base_pitch.is_finite()
            && self.base_vel.iter().all(|v| v.is_finite())
            && self.base_pitch_rate.is_finite()
            && self.q.iter().all(|v| v.is_finite())
            && self.qd.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Continue,
    Fell,
    Timeout,
}

/// Fall when |pitch| > 10 degrees, timeout at the step cap. The paper's roll
/// check is vacuous in the sagittal plane.
pub fn check_termination(state: &SimState, max_steps: u64) -> Termination {
    if state.pitch_deg().abs() > FALL_PITCH_DEG {
        Termination::Fell
    } else if state.step_count >= max_steps {
        Termination::Timeout
    } else {
        Termination::Continue
    }
}

/// PD servo torque with symmetric clamping. Angles in radians.
pub fn pd_torque(theta_cmd: f64, theta: f64, theta_dot: f64, kp: f64, kd: f64, tau_max: f64) -> f64 {
    (kp * (theta_cmd - theta) - kd * theta_dot).clamp(-tau_max, tau_max)
}

// ---------------------------------------------------------------------------
// Robot builders
// ---------------------------------------------------------------------------

/// Geometry and mass defaults for the planar biped. The paper only fixes
/// joint ranges, gains and torque limits; everything else is configurable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BipedParams {
    pub trunk_mass: f64,
    pub trunk_length: f64,
    pub thigh_mass: f64,
    pub thigh_length: f64,
    pub shank_mass: f64,
    pub shank_length: f64,
    pub foot_mass: f64,
    pub foot_length: f64,
    pub kp: f64,
    pub kd: f64,
    pub tau_max: f64,
    pub qd_max: f64,
}

impl Default for BipedParams {
    fn default() -> Self {
        Self {
            trunk_mass: 8.0,
            trunk_length: 0.4,
            thigh_mass: 1.5,
            thigh_length: 0.3,
            shank_mass: 1.0,
            shank_length: 0.3,
            foot_mass: 0.3,
            foot_length: 0.15,
            kp: 2000.0,
            kd: 100.0,
            tau_max: 200.0,
            qd_max: 15.0,
        }
    }
}

fn rod_inertia(mass: f64, length: f64) -> f64 {
    mass * length * length / 12.0
}

/// Planar biped: trunk + 2x (thigh, shank, foot), 6 actuated pitch joints in
/// the order hip_l, knee_l, ankle_l, hip_r, knee_r, ankle_r. Feet carry heel
/// and toe contact points. Joint zero has the leg hanging straight down with
/// the foot perpendicular to the shank.
pub fn build_biped_with(p: &BipedParams) -> RobotModel {
    let hip_range = JointRange::new(-60.0, 120.0);
    let knee_range = JointRange::new(-170.0, 10.0);
    let ankle_range = JointRange::new(-60.0, 60.0);

    let mut links = vec![Link {
        name: "trunk".into(),
        mass: p.trunk_mass,
        length: p.trunk_length,
        com_local: [0.0, 0.0],
        inertia: rod_inertia(p.trunk_mass, p.trunk_length),
    }];
    let mut joints = Vec::new();
    let mut contacts = Vec::new();

    for (leg, suffix) in ["l", "r"].iter().enumerate() {
        let thigh = links.len();
        links.push(Link {
            name: format!("thigh_{suffix}"),
            mass: p.thigh_mass,
            length: p.thigh_length,
            com_local: [0.0, -0.5 * p.thigh_length],
            inertia: rod_inertia(p.thigh_mass, p.thigh_length),
        });
        joints.push(Joint {
            name: format!("hip_{suffix}"),
            parent: 0,
            // Hips sit below the trunk COM.
            anchor_local: [0.0, -0.5 * p.trunk_length],
            range: hip_range,
            kp: p.kp,
            kd: p.kd,
            tau_max: p.tau_max,
            qd_max: p.qd_max,
            leg,
        });

        let shank = links.len();
        links.push(Link {
            name: format!("shank_{suffix}"),
            mass: p.shank_mass,
            length: p.shank_length,
            com_local: [0.0, -0.5 * p.shank_length],
            inertia: rod_inertia(p.shank_mass, p.shank_length),
        });
        joints.push(Joint {
            name: format!("knee_{suffix}"),
            parent: thigh,
            anchor_local: [0.0, -p.thigh_length],
            range: knee_range,
            kp: p.kp,
            kd: p.kd,
            tau_max: p.tau_max,
            qd_max: p.qd_max,
            leg,
        });

        let foot = links.len();
        links.push(Link {
            name: format!("foot_{suffix}"),
            mass: p.foot_mass,
            length: p.foot_length,
            com_local: [p.foot_length / 6.0, -0.015],
            inertia: rod_inertia(p.foot_mass, p.foot_length),
        });
        joints.push(Joint {
            name: format!("ankle_{suffix}"),
            parent: shank,
            anchor_local: [0.0, -p.shank_length],
            range: ankle_range,
            kp: p.kp,
            kd: p.kd,
            tau_max: p.tau_max,
            qd_max: p.qd_max,
            leg,
        });
        // Heel and toe, slightly below the ankle.
        contacts.push(ContactPoint { link: foot, local: [-p.foot_length / 3.0, -0.03], foot: leg });
        contacts.push(ContactPoint { link: foot, local: [2.0 * p.foot_length / 3.0, -0.03], foot: leg });
    }

    RobotModel::new("biped", RobotKind::Biped, false, links, joints, contacts, 2)
}

pub fn build_biped() -> RobotModel {
    build_biped_with(&BipedParams::default())
}

/// Geometry and mass defaults for the planar quadruped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadrupedParams {
    pub trunk_mass: f64,
    pub trunk_length: f64,
    pub thigh_mass: f64,
    pub thigh_length: f64,
    pub shank_mass: f64,
    pub shank_length: f64,
    pub kp: f64,
    pub kd: f64,
    pub tau_max: f64,
    pub qd_max: f64,
}

impl Default for QuadrupedParams {
    fn default() -> Self {
        Self {
            trunk_mass: 6.0,
            trunk_length: 0.36,
            thigh_mass: 1.0,
            thigh_length: 0.2,
            shank_mass: 0.2,
            shank_length: 0.2,
            kp: 180.0,
            kd: 8.0,
            tau_max: 33.5,
            qd_max: 25.0,
        }
    }
}

/// Planar quadruped: horizontal trunk + 4x (thigh, shank), 8 actuated pitch
/// joints in the order hip_fl, knee_fl, hip_fr, knee_fr, hip_hl, knee_hl,
/// hip_hr, knee_hr, with point feet at the shank tips. Left/right legs of a
/// front or hind pair attach at the same trunk point and may overlap freely
/// (self-collision is ignored, which planar pacing requires).
pub fn build_quadruped_with(p: &QuadrupedParams) -> RobotModel {
    let hip_range = JointRange::new(-90.0, 210.0);
    let knee_range = JointRange::new(-94.5, 7.5);

    let mut links = vec![Link {
        name: "trunk".into(),
        mass: p.trunk_mass,
        length: p.trunk_length,
        com_local: [0.0, 0.0],
        inertia: rod_inertia(p.trunk_mass, p.trunk_length),
    }];
    let mut joints = Vec::new();
    let mut contacts = Vec::new();

    let legs = [("fl", 0.5), ("fr", 0.5), ("hl", -0.5), ("hr", -0.5)];
    for (leg, (suffix, sign)) in legs.iter().enumerate() {
        let thigh = links.len();
        links.push(Link {
            name: format!("thigh_{suffix}"),
            mass: p.thigh_mass,
            length: p.thigh_length,
            com_local: [0.0, -0.5 * p.thigh_length],
            inertia: rod_inertia(p.thigh_mass, p.thigh_length),
        });
        joints.push(Joint {
            name: format!("hip_{suffix}"),
            parent: 0,
            anchor_local: [sign * p.trunk_length, 0.0],
            range: hip_range,
            kp: p.kp,
            kd: p.kd,
            tau_max: p.tau_max,
            qd_max: p.qd_max,
            leg,
        });

        let shank = links.len();
        links.push(Link {
            name: format!("shank_{suffix}"),
            mass: p.shank_mass,
            length: p.shank_length,
            com_local: [0.0, -0.5 * p.shank_length],
            inertia: rod_inertia(p.shank_mass, p.shank_length),
        });
        joints.push(Joint {
            name: format!("knee_{suffix}"),
            parent: thigh,
            anchor_local: [0.0, -p.thigh_length],
            range: knee_range,
            kp: p.kp,
            kd: p.kd,
            tau_max: p.tau_max,
            qd_max: p.qd_max,
            leg,
        });
        contacts.push(ContactPoint { link: shank, local: [0.0, -p.shank_length], foot: leg });
    }

    RobotModel::new("quadruped", RobotKind::Quadruped, false, links, joints, contacts, 4)
}

pub fn build_quadruped() -> RobotModel {
    build_quadruped_with(&QuadrupedParams::default())
}

/// Fixed-base single revolute link, used by the integrator-accuracy oracle.
pub fn single_pendulum(mass: f64, length: f64) -> RobotModel {
    let links = vec![
        Link { name: "mount".into(), mass: 1.0, length: 0.0, com_local: [0.0, 0.0], inertia: 1.0 },
        Link {
            name: "rod".into(),
            mass,
            length,
            com_local: [0.0, -0.5 * length],
            inertia: rod_inertia(mass, length),
        },
    ];
    let joints = vec![Joint {
        name: "pivot".into(),
        parent: 0,
        anchor_local: [0.0, 0.0],
        range: JointRange::new(-36000.0, 36000.0),
        kp: 0.0,
        kd: 0.0,
        tau_max: 0.0,
        qd_max: f64::INFINITY,
        leg: 0,
    }];
    RobotModel::new("pendulum", RobotKind::Biped, true, links, joints, vec![], 0)
}

pub fn build_robot(kind: RobotKind) -> RobotModel {
    match kind {
        RobotKind::Biped => build_biped(),
        RobotKind::Quadruped => build_quadruped(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_joint_specs() {
        let quad = build_quadruped();
        assert_eq!(quad.joint_count(), 8);
        assert_eq!(quad.foot_count, 4);
        // First joint is a hip.
        assert_eq!(quad.joints[0].range, JointRange::new(-90.0, 210.0));
        assert_eq!(quad.joints[1].range, JointRange::new(-94.5, 7.5));
        assert!((quad.joints[0].tau_max - 33.5).abs() < 1e-12);
        assert!((quad.joints[0].kp - 180.0).abs() < 1e-12);
        assert!((quad.joints[0].kd - 8.0).abs() < 1e-12);

        let biped = build_biped();
        assert_eq!(biped.joint_count(), 6);
        assert_eq!(biped.joints[1].range, JointRange::new(-170.0, 10.0));
        assert_eq!(biped.joints[0].range, JointRange::new(-60.0, 120.0));
        assert_eq!(biped.joints[2].range, JointRange::new(-60.0, 60.0));
        assert!((biped.joints[0].kp - 2000.0).abs() < 1e-12);
        assert!((biped.joints[0].kd - 100.0).abs() < 1e-12);
        assert!((biped.joints[0].tau_max - 200.0).abs() < 1e-12);
    }

    #[test]
    fn pd_torque_examples() {
        assert_eq!(pd_torque(0.3, 0.3, 0.0, 180.0, 8.0, 33.5), 0.0);
        assert!((pd_torque(0.1, 0.0, 0.0, 180.0, 8.0, 33.5) - 18.0).abs() < 1e-12);
        assert_eq!(pd_torque(10.0, 0.0, 0.0, 180.0, 8.0, 33.5), 33.5);
        assert_eq!(pd_torque(-10.0, 0.0, 0.0, 180.0, 8.0, 33.5), -33.5);
    }

    #[test]
    fn termination_rules() {
        let mut st = SimState::new(8, 4);
        st.step_count = 5;
        assert_eq!(check_termination(&st, EPISODE_MAX_STEPS), Termination::Continue);

        st.base_pitch = 10.1 * DEG;
        assert_eq!(check_termination(&st, EPISODE_MAX_STEPS), Termination::Fell);

        st.base_pitch = 2.0 * DEG;
        st.step_count = 1000;
        assert_eq!(check_termination(&st, EPISODE_MAX_STEPS), Termination::Timeout);
    }

    #[test]
    fn leg_joint_mapping() {
        let quad = build_quadruped();
        assert_eq!(quad.leg_count(), 4);
        assert_eq!(quad.leg_joints(0), vec![0, 1]);
        assert_eq!(quad.leg_joints(3), vec![6, 7]);
        let biped = build_biped();
        assert_eq!(biped.leg_joints(1), vec![3, 4, 5]);
    }
}
