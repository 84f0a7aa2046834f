//! Articulated dynamics: Jacobian-based mass matrix and bias assembly with
//! semi-implicit Euler substepping.
//!
//! For a floating base the translational generalized coordinates are the
//! system center of mass, not the base origin. That makes the translation
//! rows of the mass matrix exactly [total_mass, 0, ...], so with no external
//! horizontal force the discrete update conserves horizontal momentum to
//! roundoff. The base pose is reconstructed from the COM coordinates after
//! each substep.
//!
//! Joint PD servos and limit penalties integrate their spring and damping
//! terms implicitly (stiffness and damping on the left-hand side), which
//! keeps the paper's stiff position-loop gains stable at the default substep
//! size. Contact damping and friction slopes are capped by the contact
//! point's effective mass for the same reason. In 2D there is no gyroscopic
//! torque, so the bias has no angular part.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{RobotModel, SimState, DEG};
use crate::{Error, Result};

fn rot(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, -s], [s, c]]
}

fn mat_mul(m: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn scale(a: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] * s, a[1] * s]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Penalty-contact parameters. Invented plumbing: the ground is a stiff
/// unilateral spring-damper with regularized Coulomb friction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactParams {
    /// Normal stiffness (N/m).
    pub normal_stiffness: f64,
    /// Normal damping (N s/m).
    pub normal_damping: f64,
    /// Coulomb friction coefficient.
    pub friction: f64,
    /// Tangential speed below which friction is linear (m/s).
    pub regularization_velocity: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            normal_stiffness: 5.0e4,
            normal_damping: 500.0,
            friction: 0.8,
            regularization_velocity: 0.05,
        }
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.normal_stiffness > 0.0
            && self.normal_damping > 0.0
            && self.regularization_velocity > 0.0
            && self.friction > 0.0
            && self.friction <= 2.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid contact parameters: {self:?}")))
        }
    }
}

/// Planar contact force (fx, fz) on a point at world position `pos` moving at
/// `vel`, zero above the ground plane z = 0. The normal force is unilateral;
/// the tangential force is Coulomb friction with linear regularization below
/// `regularization_velocity`.
pub fn contact_force(pos: [f64; 2], vel: [f64; 2], params: &ContactParams) -> [f64; 2] {
    contact_force_capped(pos, vel, params, f64::INFINITY, f64::INFINITY)
}

/// [`contact_force`] with damping/friction slopes capped so that a contact
/// of the given effective masses cannot overshoot in one substep of length
/// captured by the caps (mass / dt).
fn contact_force_capped(
    pos: [f64; 2],
    vel: [f64; 2],
    params: &ContactParams,
    damping_cap: f64,
    slip_slope_cap: f64,
) -> [f64; 2] {
    if pos[1] >= 0.0 {
        return [0.0, 0.0];
    }
    let penetration = -pos[1];
    let penetration_rate = -vel[1];
    let damping = params.normal_damping.min(damping_cap);
    let normal = (params.normal_stiffness * penetration + damping * penetration_rate).max(0.0);
    let coulomb = params.friction * normal;
    let slope = (coulomb / params.regularization_velocity).min(slip_slope_cap);
    let tangential = (-slope * vel[0]).clamp(-coulomb, coulomb);
    [tangential, normal]
}

/// World-level simulation parameters shared by all robots in a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldParams {
    pub gravity: f64,
    pub contact: ContactParams,
    /// Control interval (s); the paper's action step.
    pub dt_control: f64,
    /// Integrator substeps per control interval.
    pub substeps: usize,
    /// Joint-limit penalty stiffness as a multiple of each joint's kp.
    pub limit_stiffness_factor: f64,
    /// Joint-limit penalty damping as a multiple of each joint's kd.
    pub limit_damping_factor: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            contact: ContactParams::default(),
            dt_control: 0.01,
            substeps: 10,
            limit_stiffness_factor: 60.0,
            limit_damping_factor: 4.0,
        }
    }
}

/// Per-control-step diagnostics.
#[derive(Clone, Debug, Default)]
pub struct StepInfo {
    /// Contact force per contact point at the final substep.
    pub contact_forces: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, Default)]
struct LinkKin {
    pos: [f64; 2],
    ang: f64,
    vel: [f64; 2],
    om: f64,
    com: [f64; 2],
    com_vel: [f64; 2],
    /// COM acceleration under zero generalized acceleration (base-origin
    /// convention; the COM-frame correction is applied where used).
    com_acc0: [f64; 2],
}

struct Frame {
    kin: Vec<LinkKin>,
    joint_world: Vec<[f64; 2]>,
    /// System COM position/velocity and the mass-weighted mean convective
    /// acceleration (floating base only).
    com: [f64; 2],
    com_vel: [f64; 2],
    mean_acc0: [f64; 2],
    /// Mass-weighted mean of each joint column's linear Jacobian.
    colmean: Vec<[f64; 2]>,
}

/// A robot model embedded in a world; owns the stepping math but no state.
#[derive(Clone, Debug)]
pub struct Simulator {
    pub model: RobotModel,
    pub world: WorldParams,
}

enum Drive<'a> {
    /// Joint position commands in radians.
    Commands(&'a [f64]),
    /// Raw joint torques in N m, bypassing the PD loop and torque limits.
    Torques(&'a [f64]),
}

impl Simulator {
    pub fn new(model: RobotModel, world: WorldParams) -> Self {
        Self { model, world }
    }

    /// Advance one control interval driving the PD servos toward
    /// `theta_cmd_deg` (degrees), with an optional external base force.
    pub fn step(
        &self,
        state: &mut SimState,
        theta_cmd_deg: &[f64],
        base_force: [f64; 2],
    ) -> Result<StepInfo> {
        let cmd_rad: Vec<f64> = theta_cmd_deg.iter().map(|&d| d * DEG).collect();
        self.advance(state, Drive::Commands(&cmd_rad), base_force)
    }

    /// Advance one control interval applying raw joint torques (testing and
    /// energy audits; no PD, no torque clamp).
    pub fn step_torques(
        &self,
        state: &mut SimState,
        tau: &[f64],
        base_force: [f64; 2],
    ) -> Result<StepInfo> {
        self.advance(state, Drive::Torques(tau), base_force)
    }

    fn advance(&self, state: &mut SimState, drive: Drive, base_force: [f64; 2]) -> Result<StepInfo> {
        let n_joints = self.model.joint_count();
        match &drive {
            Drive::Commands(c) => assert_eq!(c.len(), n_joints, "command width mismatch"),
            Drive::Torques(t) => assert_eq!(t.len(), n_joints, "torque width mismatch"),
        }

        let dt = self.world.dt_control / self.world.substeps as f64;
        let mut info = StepInfo::default();
        for _ in 0..self.world.substeps {
            info = self.substep(state, &drive, base_force, dt)?;
        }

        // Contact flags from the final substep forces.
        state.foot_contact = vec![false; self.model.foot_count];
        for (cp, f) in self.model.contacts.iter().zip(&info.contact_forces) {
            if f[1] > 0.0 {
                state.foot_contact[cp.foot] = true;
            }
        }
        state.time += self.world.dt_control;
        state.step_count += 1;

        if !state.is_finite() {
            return Err(Error::SimBlowup(format!(
                "non-finite state at t={:.3} for {}",
                state.time, self.model.name
            )));
        }
        Ok(info)
    }

    fn kinematics(&self, state: &SimState) -> (Vec<LinkKin>, Vec<[f64; 2]>) {
        self.kinematics_core(
            state.base_pos,
            state.base_pitch,
            state.base_vel,
            state.base_pitch_rate,
            &state.q,
            &state.qd,
        )
    }

    fn kinematics_core(
        &self,
        base_pos: [f64; 2],
        base_pitch: f64,
        base_vel: [f64; 2],
        base_pitch_rate: f64,
        q: &[f64],
        qd: &[f64],
    ) -> (Vec<LinkKin>, Vec<[f64; 2]>) {
        let n_links = self.model.links.len();
        let mut kin = vec![LinkKin::default(); n_links];
        let mut joint_world = vec![[0.0, 0.0]; self.model.joint_count()];

        kin[0].pos = base_pos;
        kin[0].ang = base_pitch;
        kin[0].vel = base_vel;
        kin[0].om = base_pitch_rate;

        // Positions/velocities down the tree, plus the zero-acceleration
        // recursion for the velocity-product bias: with qdd = 0 every angular
        // acceleration vanishes, so point accelerations are purely
        // centripetal.
        let mut origin_acc0 = vec![[0.0, 0.0]; n_links];
        for (j, joint) in self.model.joints.iter().enumerate() {
            let child = j + 1;
            let pk = kin[joint.parent];
            let r_anchor = mat_mul(&rot(pk.ang), joint.anchor_local);
            let anchor = add(pk.pos, r_anchor);
            joint_world[j] = anchor;
            kin[child].pos = anchor;
            kin[child].ang = pk.ang + q[j];
            kin[child].vel = add(pk.vel, scale(perp(r_anchor), pk.om));
            kin[child].om = pk.om + qd[j];
            origin_acc0[child] = sub(origin_acc0[joint.parent], scale(r_anchor, pk.om * pk.om));
        }
        for (i, link) in self.model.links.iter().enumerate() {
            let r_com = mat_mul(&rot(kin[i].ang), link.com_local);
            kin[i].com = add(kin[i].pos, r_com);
            kin[i].com_vel = add(kin[i].vel, scale(perp(r_com), kin[i].om));
            kin[i].com_acc0 = sub(origin_acc0[i], scale(r_com, kin[i].om * kin[i].om));
        }
        (kin, joint_world)
    }

    fn frame(&self, state: &SimState) -> Frame {
        let (kin, joint_world) = self.kinematics(state);
        let n_joints = self.model.joint_count();
        let mut frame = Frame {
            kin,
            joint_world,
            com: [0.0, 0.0],
            com_vel: [0.0, 0.0],
            mean_acc0: [0.0, 0.0],
            colmean: vec![[0.0, 0.0]; n_joints],
        };
        if self.model.fixed_base {
            return frame;
        }
        let total = self.model.total_mass();
        for (i, link) in self.model.links.iter().enumerate() {
            frame.com = add(frame.com, scale(frame.kin[i].com, link.mass / total));
            frame.com_vel = add(frame.com_vel, scale(frame.kin[i].com_vel, link.mass / total));
            frame.mean_acc0 = add(frame.mean_acc0, scale(frame.kin[i].com_acc0, link.mass / total));
        }
        // Mass-weighted mean response of all COMs to each joint coordinate:
        // subtracting it keeps the system COM fixed when a joint moves, which
        // is what the COM-translation parametrization requires.
        for (i, link) in self.model.links.iter().enumerate() {
            for &j in self.model.ancestor_joints(i) {
                let col = perp(sub(frame.kin[i].com, frame.joint_world[j]));
                frame.colmean[j] = add(frame.colmean[j], scale(col, link.mass / total));
            }
        }
        frame
    }

    /// Dense linear-Jacobian columns of a world point attached to `link`,
    /// under the COM-translation parametrization for a floating base.
    fn point_jacobian(&self, frame: &Frame, link: usize, point: [f64; 2], out: &mut [[f64; 2]]) {
        let base_dof = self.model.base_dof();
        debug_assert_eq!(out.len(), self.model.dof());
        for col in out.iter_mut() {
            *col = [0.0, 0.0];
        }
        if base_dof > 0 {
            out[0] = [1.0, 0.0];
            out[1] = [0.0, 1.0];
            out[2] = perp(sub(point, frame.com));
            for (j, mean) in frame.colmean.iter().enumerate() {
                out[base_dof + j] = scale(*mean, -1.0);
            }
        }
        for &j in self.model.ancestor_joints(link) {
            out[base_dof + j] =
                add(out[base_dof + j], perp(sub(point, frame.joint_world[j])));
        }
    }

    fn substep(&self, state: &mut SimState, drive: &Drive, base_force: [f64; 2], dt: f64) -> Result<StepInfo> {
        let dof = self.model.dof();
        let base_dof = self.model.base_dof();
        let n_joints = self.model.joint_count();
        let frame = self.frame(state);

        let mut lhs = DMatrix::<f64>::zeros(dof, dof);
        // Right-hand side at force level; multiplied by dt when solving for
        // the velocity increment.
        let mut force = DVector::<f64>::zeros(dof);
        let gravity = [0.0, -self.world.gravity];
        let mut jv = vec![[0.0_f64; 2]; dof];

        for (i, link) in self.model.links.iter().enumerate() {
            if self.model.fixed_base && i == 0 {
                continue;
            }
            self.point_jacobian(&frame, i, frame.kin[i].com, &mut jv);
            let acc0 = sub(frame.kin[i].com_acc0, frame.mean_acc0);
            let anc = self.model.ancestor_joints(i);
            // Angular Jacobian is 1 on the pitch column and ancestor joints.
            let mut jw = vec![0.0; dof];
            if base_dof > 0 {
                jw[2] = 1.0;
            }
            for &j in anc {
                jw[base_dof + j] = 1.0;
            }
            for r in 0..dof {
                let jv_r = jv[r];
                let jw_r = jw[r];
                if jv_r == [0.0, 0.0] && jw_r == 0.0 {
                    continue;
                }
                for c in r..dof {
                    let m = link.mass * dot(jv_r, jv[c]) + link.inertia * jw_r * jw[c];
                    lhs[(r, c)] += m;
                    if c != r {
                        lhs[(c, r)] += m;
                    }
                }
                // Gravity and velocity-product bias (no gyroscopic torque in 2D).
                force[r] += link.mass * dot(jv_r, sub(gravity, acc0));
            }
        }

        // Joint drives and limit penalties. Unsaturated servos and penalty
        // springs integrate implicitly: stiffness k and damping d of a joint
        // force entering row j add dt^2 k + dt d to lhs[j][j] and -dt k qd_j
        // to the impulse, on top of the explicit force.
        let mut implicit = vec![[0.0_f64; 2]; n_joints]; // (stiffness, damping)
        for (j, joint) in self.model.joints.iter().enumerate() {
            let row = base_dof + j;
            match drive {
                Drive::Commands(cmd) => {
                    let tau_est = joint.kp * (cmd[j] - state.q[j]) - joint.kd * state.qd[j];
                    if tau_est.abs() >= joint.tau_max {
                        force[row] += joint.tau_max.copysign(tau_est);
                    } else {
                        force[row] += tau_est;
                        implicit[j][0] += joint.kp;
                        implicit[j][1] += joint.kd;
                    }
                }
                Drive::Torques(tau) => force[row] += tau[j],
            }

            let lo = joint.range.theta_min * DEG;
            let hi = joint.range.theta_max * DEG;
            let k_lim = self.world.limit_stiffness_factor * joint.kp;
            let d_lim = self.world.limit_damping_factor * joint.kd;
            let overshoot = if state.q[j] < lo {
                lo - state.q[j]
            } else if state.q[j] > hi {
                hi - state.q[j]
            } else {
                0.0
            };
            if overshoot != 0.0 && k_lim > 0.0 {
                force[row] += k_lim * overshoot - d_lim * state.qd[j];
                implicit[j][0] += k_lim;
                implicit[j][1] += d_lim;
            }
        }

        let mut impulse = force * dt;
        for (j, &[k, d]) in implicit.iter().enumerate() {
            let row = base_dof + j;
            lhs[(row, row)] += dt * d + dt * dt * k;
            impulse[row] -= dt * dt * k * state.qd[j];
        }

        let chol = lhs
            .cholesky()
            .ok_or_else(|| Error::SimBlowup("mass matrix not positive definite".into()))?;

        // Contacts, with damping and friction slopes capped by each point's
        // effective mass so a single substep cannot reverse the velocity.
        let mut contact_forces = Vec::with_capacity(self.model.contacts.len());
        for cp in &self.model.contacts {
            let k = &frame.kin[cp.link];
            let r = mat_mul(&rot(k.ang), cp.local);
            let pos = add(k.pos, r);
            let vel = add(k.vel, scale(perp(r), k.om));
            if pos[1] >= 0.0 {
                contact_forces.push([0.0, 0.0]);
                continue;
            }
            self.point_jacobian(&frame, cp.link, pos, &mut jv);
            let mut jn = DVector::<f64>::zeros(dof);
            let mut jt = DVector::<f64>::zeros(dof);
            for c in 0..dof {
                jt[c] = jv[c][0];
                jn[c] = jv[c][1];
            }
            let w_n = jn.dot(&chol.solve(&jn));
            let w_t = jt.dot(&chol.solve(&jt));
            let m_eff_n = if w_n > 1e-12 { 1.0 / w_n } else { f64::INFINITY };
            let m_eff_t = if w_t > 1e-12 { 1.0 / w_t } else { f64::INFINITY };
            let f = contact_force_capped(
                pos,
                vel,
                &self.world.contact,
                0.5 * m_eff_n / dt,
                0.5 * m_eff_t / dt,
            );
            contact_forces.push(f);
            for c in 0..dof {
                impulse[c] += dt * (jv[c][0] * f[0] + jv[c][1] * f[1]);
            }
        }

        // External push on the base reference point.
        if base_force != [0.0, 0.0] && base_dof > 0 {
            self.point_jacobian(&frame, 0, frame.kin[0].pos, &mut jv);
            for c in 0..dof {
                impulse[c] += dt * (jv[c][0] * base_force[0] + jv[c][1] * base_force[1]);
            }
        }

        let dv = chol.solve(&impulse);

        // Semi-implicit Euler in the generalized coordinates, then base pose
        // reconstruction from the new COM coordinates.
        let servo_driven = matches!(drive, Drive::Commands(_));
        let clamp_rate = |qd: f64, j: usize| {
            if servo_driven {
                let cap = self.model.joints[j].qd_max;
                qd.clamp(-cap, cap)
            } else {
                qd
            }
        };
        if base_dof > 0 {
            let com_vel = [frame.com_vel[0] + dv[0], frame.com_vel[1] + dv[1]];
            let com = [frame.com[0] + dt * com_vel[0], frame.com[1] + dt * com_vel[1]];
            state.base_pitch_rate += dv[2];
            state.base_pitch += dt * state.base_pitch_rate;
            for j in 0..n_joints {
                state.qd[j] = clamp_rate(state.qd[j] + dv[base_dof + j], j);
                state.q[j] += dt * state.qd[j];
            }
            let (base_pos, base_vel) = self.base_from_com(
                com,
                com_vel,
                state.base_pitch,
                state.base_pitch_rate,
                &state.q,
                &state.qd,
            );
            state.base_pos = base_pos;
            state.base_vel = base_vel;
        } else {
            for j in 0..n_joints {
                state.qd[j] = clamp_rate(state.qd[j] + dv[j], j);
                state.q[j] += dt * state.qd[j];
            }
        }

        Ok(StepInfo { contact_forces })
    }

    /// Base pose/velocity that places the system COM at the given
    /// coordinates for the current shape (pitch and joint angles).
    fn base_from_com(
        &self,
        com: [f64; 2],
        com_vel: [f64; 2],
        pitch: f64,
        pitch_rate: f64,
        q: &[f64],
        qd: &[f64],
    ) -> ([f64; 2], [f64; 2]) {
        let (kin, _) = self.kinematics_core([0.0, 0.0], pitch, [0.0, 0.0], pitch_rate, q, qd);
        let total = self.model.total_mass();
        let mut offset = [0.0, 0.0];
        let mut rel_vel = [0.0, 0.0];
        for (i, link) in self.model.links.iter().enumerate() {
            offset = add(offset, scale(kin[i].com, link.mass / total));
            rel_vel = add(rel_vel, scale(kin[i].com_vel, link.mass / total));
        }
        (sub(com, offset), sub(com_vel, rel_vel))
    }

    /// Total mechanical energy (kinetic + gravity potential, zero at z = 0).
    pub fn mechanical_energy(&self, state: &SimState) -> f64 {
        let (kin, _) = self.kinematics(state);
        let mut e = 0.0;
        for (i, link) in self.model.links.iter().enumerate() {
            if self.model.fixed_base && i == 0 {
                continue;
            }
            let v2 = dot(kin[i].com_vel, kin[i].com_vel);
            e += 0.5 * link.mass * v2
                + 0.5 * link.inertia * kin[i].om * kin[i].om
                + link.mass * self.world.gravity * kin[i].com[1];
        }
        e
    }

    /// Total linear momentum of all links (world frame).
    pub fn linear_momentum(&self, state: &SimState) -> [f64; 2] {
        let (kin, _) = self.kinematics(state);
        let mut p = [0.0, 0.0];
        for (i, link) in self.model.links.iter().enumerate() {
            if self.model.fixed_base && i == 0 {
                continue;
            }
            p = add(p, scale(kin[i].com_vel, link.mass));
        }
        p
    }

    /// World position of every contact point.
    pub fn contact_positions(&self, state: &SimState) -> Vec<[f64; 2]> {
        let (kin, _) = self.kinematics(state);
        self.model
            .contacts
            .iter()
            .map(|cp| add(kin[cp.link].pos, mat_mul(&rot(kin[cp.link].ang), cp.local)))
            .collect()
    }

    /// Initial state: upright base, joints at `joint_angles_deg`, zero
    /// velocities, base height chosen so the lowest contact point touches the
    /// ground exactly.
    pub fn reset_state(&self, joint_angles_deg: &[f64]) -> SimState {
        let mut state = SimState::new(self.model.joint_count(), self.model.foot_count);
        for (q, &deg) in state.q.iter_mut().zip(joint_angles_deg) {
            *q = deg * DEG;
        }
        if !self.model.fixed_base && !self.model.contacts.is_empty() {
            let lowest = self
                .contact_positions(&state)
                .iter()
                .map(|p| p[1])
                .fold(f64::INFINITY, f64::min);
            state.base_pos[1] = -lowest;
        }
        state
    }

    pub fn body_frame_velocity(&self, state: &SimState) -> [f64; 2] {
        let inv = rot(-state.base_pitch);
        mat_mul(&inv, state.base_vel)
    }
}
