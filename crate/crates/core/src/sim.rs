//! Closed-loop plant: rigid-body simulation with pinned-foot constraint
//! forces, a magnet adhesion/failure model, a joint actuator model, and
//! contact event detection.
//!
//! The plant deliberately shares the controller's model class — single rigid
//! body with massless legs — so that model-mismatch experiments are injected
//! only through an extra payload mass that the controller does not know
//! about. Attached feet are ideal point constraints: their joint velocities
//! are slaved so the foot stays put, actuator torques map to contact forces
//! through the leg Jacobian, and an adhesion check converts excessive force
//! demands into slip or pull-off failures.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};

use crate::dynamics::{self, DynamicsContext, Payload};
use crate::kinematics::LegChain;
use crate::model::{
    Input, JointVector, LegId, MagnetParams, RobotModel, State, JOINTS_PER_LEG, LEG_COUNT,
};
use crate::spatial::quat_to_rot_unchecked;
use crate::terrain::{Environment, PlanePatch};

/// Hard upper bound on the integration step, s.
pub const MAX_SIM_DT_S: f64 = 1e-3;

/// Default integration step, s.
pub const DEFAULT_SIM_DT_S: f64 = 5e-4;

/// A swing foot closer than this to a patch counts as touching, m.
pub const TOUCHDOWN_DIST_M: f64 = 2e-3;

/// Slack on adhesion limits so exactly-critical demands do not flap, N.
const ADHESION_TOL_N: f64 = 1e-6;

/// Damping used in every leg-Jacobian least-squares solve.
const JACOBIAN_DAMPING: f64 = 1e-12;

/// Adhesion lifecycle of one foot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FootStatus {
    Detached,
    /// Pinned on a patch while magnetization pulses complete.
    Attaching { pulses_done: u32 },
    /// Pinned with the full available holding force.
    Attached,
}

/// Per-foot contact and magnet state.
#[derive(Debug, Clone, Copy)]
pub struct FootSim {
    pub status: FootStatus,
    /// Constraint point in the inertial frame; meaningful unless detached.
    pub attachment_point: Vector3<f64>,
    /// Environment patch index the foot is pinned to.
    pub patch_index: Option<usize>,
    /// Current normal holding capacity, N (already quality-derated).
    pub magnet_force_n: f64,
    /// Time the first magnetization pulse started, if any.
    attach_start_s: Option<f64>,
    /// Pending switch-off completion time after a release command.
    release_at_s: Option<f64>,
}

impl FootSim {
    pub fn detached() -> FootSim {
        FootSim {
            status: FootStatus::Detached,
            attachment_point: Vector3::zeros(),
            patch_index: None,
            magnet_force_n: 0.0,
            attach_start_s: None,
            release_at_s: None,
        }
    }

    /// Foot pinned at `point` with the full holding force already built up.
    pub fn attached(point: Vector3<f64>, patch_index: usize, capacity_n: f64) -> FootSim {
        FootSim {
            status: FootStatus::Attached,
            attachment_point: point,
            patch_index: Some(patch_index),
            magnet_force_n: capacity_n,
            attach_start_s: None,
            release_at_s: None,
        }
    }

    pub fn is_pinned(&self) -> bool {
        self.status != FootStatus::Detached
    }
}

/// Plant state: rigid-body state plus contact, magnet, and payload bookkeeping.
#[derive(Debug, Clone)]
pub struct SimState {
    pub state: State,
    pub feet: [FootSim; LEG_COUNT],
    pub time_s: f64,
    /// Extra mass carried by the plant only; the controller never sees it.
    pub payload: Option<Payload>,
    /// Joint velocities applied during the last step, for event detection.
    pub last_joint_vel: JointVector,
}

impl SimState {
    pub fn new(state: State, payload: Option<Payload>) -> SimState {
        SimState {
            state,
            feet: [FootSim::detached(); LEG_COUNT],
            time_s: 0.0,
            payload,
            last_joint_vel: JointVector::zeros(),
        }
    }

    /// Pin every foot within `tol` of a patch at full holding force.
    /// Returns the number of feet attached.
    pub fn attach_nearby(
        &mut self,
        model: &RobotModel,
        env: &Environment,
        magnet: &MagnetParams,
        tol: f64,
    ) -> usize {
        let mut count = 0;
        for leg in LegId::ALL {
            let p = crate::kinematics::foot_position(model, &self.state, leg);
            if let Some((idx, patch)) = env.patch_near(&p, tol) {
                let capacity = if patch.ferrous {
                    patch.quality * magnet.f_hold_normal_n
                } else {
                    0.0
                };
                self.feet[leg.index()] = FootSim::attached(patch.project(&p), idx, capacity);
                count += 1;
            }
        }
        count
    }

    pub fn attached_feet(&self) -> [bool; LEG_COUNT] {
        core::array::from_fn(|i| self.feet[i].is_pinned())
    }
}

/// Joint-level actuator model: PID tracking with torque and speed limits.
#[derive(Debug, Clone, Copy)]
pub struct ActuatorModel {
    /// Position gain, N·m/rad.
    pub kp: f64,
    /// Velocity gain, N·m·s/rad.
    pub kd: f64,
    /// Swing-leg position servo gain, 1/s (velocity correction per rad).
    pub swing_servo_gain: f64,
    pub torque_limit_nm: f64,
    pub speed_limit_rad_s: f64,
}

impl Default for ActuatorModel {
    fn default() -> ActuatorModel {
        ActuatorModel {
            kp: 100.0,
            kd: 2.0,
            swing_servo_gain: 10.0,
            torque_limit_nm: 40.0,
            speed_limit_rad_s: 10.472,
        }
    }
}

impl ActuatorModel {
    /// All gains zero (pure feedforward), limits unchanged.
    pub fn passive() -> ActuatorModel {
        ActuatorModel {
            kp: 0.0,
            kd: 0.0,
            swing_servo_gain: 0.0,
            ..ActuatorModel::default()
        }
    }
}

/// Controller outputs consumed by one plant step.
#[derive(Debug, Clone)]
pub struct SimCommand {
    pub joint_pos_ref: JointVector,
    pub joint_vel_ref: JointVector,
    /// Feedforward ground-reaction force per foot, inertial frame, N.
    pub feedforward_forces: [Vector3<f64>; LEG_COUNT],
    /// Magnet engage (true) or release (false) per foot.
    pub magnet_on: [bool; LEG_COUNT],
}

impl SimCommand {
    /// Hold the given posture with no feedforward and all magnets engaged.
    pub fn hold(q_ref: JointVector) -> SimCommand {
        SimCommand {
            joint_pos_ref: q_ref,
            joint_vel_ref: JointVector::zeros(),
            feedforward_forces: [Vector3::zeros(); LEG_COUNT],
            magnet_on: [true; LEG_COUNT],
        }
    }
}

/// Discrete contact events raised during a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimEventKind {
    Touchdown { patch_index: usize },
    /// All magnetization pulses completed; full holding force available.
    AttachComplete,
    /// Commanded release finished; the foot is free.
    Released,
    Slip,
    PullOff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time_s: f64,
    pub foot: LegId,
    pub kind: SimEventKind,
}

/// Everything produced by one plant step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: SimState,
    /// Ground-reaction force applied at each foot, inertial frame, N.
    pub foot_forces: [Vector3<f64>; LEG_COUNT],
    /// Clamped actuator torques, N·m.
    pub joint_torques: JointVector,
    pub events: Vec<SimEvent>,
}

/// Outcome of an adhesion demand check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdhesionOutcome {
    Ok,
    /// Tangential demand exceeds friction with the current press + magnet force.
    Slip,
    /// Normal tension exceeds the current holding capacity.
    PullOff,
}

/// Check a contact-force demand against the magnet holding limits.
///
/// `force_on_foot` is the force the surface exerts on the robot (inertial
/// frame); a component against the patch normal is tension carried by the
/// magnet. `capacity_n` is the current normal holding capacity, which is the
/// full (quality-derated) force scaled by the fraction of completed pulses.
pub fn check_adhesion(
    force_on_foot: &Vector3<f64>,
    capacity_n: f64,
    patch: &PlanePatch,
) -> AdhesionOutcome {
    let normal = force_on_foot.dot(&patch.normal);
    let tension = (-normal).max(0.0);
    let compression = normal.max(0.0);
    if tension > capacity_n + ADHESION_TOL_N {
        return AdhesionOutcome::PullOff;
    }
    let tangential = (force_on_foot - normal * patch.normal).norm();
    if tangential > patch.mu * (compression + capacity_n) + ADHESION_TOL_N {
        return AdhesionOutcome::Slip;
    }
    AdhesionOutcome::Ok
}

/// A detected swing-foot contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactDetection {
    pub foot: LegId,
    pub patch_index: usize,
    /// Contact point projected onto the patch plane.
    pub point: Vector3<f64>,
}

/// Report swing feet that are within [`TOUCHDOWN_DIST_M`] of a patch they
/// project into, moving towards it.
pub fn detect_touchdown(
    sim: &SimState,
    model: &RobotModel,
    env: &Environment,
) -> Vec<ContactDetection> {
    let c = quat_to_rot_unchecked(&sim.state.xi);
    let mut detections = Vec::new();
    for leg in LegId::ALL {
        if sim.feet[leg.index()].is_pinned() {
            continue;
        }
        let chain = LegChain::new(model, leg);
        let q = sim.state.joint_angles(leg);
        let foot_body = chain.foot_position_body(&q);
        let p_foot = sim.state.p + c * foot_body;
        let qd = Vector3::new(
            sim.last_joint_vel[leg.index() * JOINTS_PER_LEG],
            sim.last_joint_vel[leg.index() * JOINTS_PER_LEG + 1],
            sim.last_joint_vel[leg.index() * JOINTS_PER_LEG + 2],
        );
        let v_foot =
            sim.state.v + c * (sim.state.omega.cross(&foot_body) + chain.jacobian_body(&q) * qd);
        for (idx, patch) in env.patches.iter().enumerate() {
            let sd = patch.signed_distance(&p_foot);
            if sd.abs() <= TOUCHDOWN_DIST_M
                && patch.contains_projection(&p_foot)
                && v_foot.dot(&patch.normal) < -1e-9
            {
                detections.push(ContactDetection {
                    foot: leg,
                    patch_index: idx,
                    point: patch.project(&p_foot),
                });
                break;
            }
        }
    }
    detections
}

/// Damped least-squares solve `J x = b` for a 3×3 leg Jacobian.
fn damped_solve(j: &Matrix3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
    let jtj = j.transpose() * j + Matrix3::identity() * JACOBIAN_DAMPING;
    jtj.cholesky()
        .expect("damped normal matrix is positive definite")
        .solve(&(j.transpose() * b))
}

fn clamp_vector(v: &mut JointVector, limit: f64) {
    for x in v.iter_mut() {
        *x = x.clamp(-limit, limit);
    }
}

/// Advance the magnet state machine of one foot to time `t`.
fn advance_magnet(
    foot: &mut FootSim,
    leg: LegId,
    engage: bool,
    patch: Option<&PlanePatch>,
    magnet: &MagnetParams,
    t: f64,
    events: &mut Vec<SimEvent>,
) {
    if !foot.is_pinned() {
        return;
    }
    if engage {
        foot.release_at_s = None;
        if foot.attach_start_s.is_none() && foot.status != FootStatus::Attached {
            foot.attach_start_s = Some(t);
        }
    } else if foot.release_at_s.is_none() {
        // Switch-off takes time only if the magnet was actually energized.
        let delay = if foot.magnet_force_n > 0.0 {
            magnet.t_switch_off_s
        } else {
            0.0
        };
        foot.release_at_s = Some(t + delay);
    }

    if let Some(release) = foot.release_at_s {
        if t >= release {
            *foot = FootSim::detached();
            events.push(SimEvent {
                time_s: t,
                foot: leg,
                kind: SimEventKind::Released,
            });
            return;
        }
        // Holding force is retained while the switch-off completes.
        return;
    }

    if let (FootStatus::Attaching { .. }, Some(start)) = (foot.status, foot.attach_start_s) {
        let full = patch.map_or(0.0, |p| {
            if p.ferrous {
                p.quality * magnet.f_hold_normal_n
            } else {
                0.0
            }
        });
        let total = magnet.pulses_for_full_force;
        let pulses = (((t - start) / magnet.t_switch_on_s).floor() as u32).min(total);
        foot.magnet_force_n = full * pulses as f64 / total as f64;
        if pulses >= total {
            foot.status = FootStatus::Attached;
            events.push(SimEvent {
                time_s: t,
                foot: leg,
                kind: SimEventKind::AttachComplete,
            });
        } else {
            foot.status = FootStatus::Attaching {
                pulses_done: pulses,
            };
        }
    }
}

/// One plant step: actuator torques, contact forces, adhesion checks, rigid
/// body integration, constraint projection, and touchdown detection.
///
/// Panics if `dt` is outside `(0, MAX_SIM_DT_S]`.
pub fn sim_step(
    sim: &SimState,
    cmd: &SimCommand,
    actuators: &ActuatorModel,
    model: &RobotModel,
    magnet: &MagnetParams,
    env: &Environment,
    dt: f64,
) -> StepOutput {
    assert!(
        dt > 0.0 && dt <= MAX_SIM_DT_S + 1e-12,
        "sim_step requires 0 < dt <= 1 ms"
    );
    let t = sim.time_s;
    let mut feet = sim.feet;
    let mut events = Vec::new();

    // New contacts pin the foot before force balance this step. A foot whose
    // magnet is commanded off cannot seat, so liftoff does not re-pin.
    for det in detect_touchdown(sim, model, env) {
        if !cmd.magnet_on[det.foot.index()] {
            continue;
        }
        let foot = &mut feet[det.foot.index()];
        foot.status = FootStatus::Attaching { pulses_done: 0 };
        foot.attachment_point = det.point;
        foot.patch_index = Some(det.patch_index);
        foot.magnet_force_n = 0.0;
        foot.attach_start_s = None;
        foot.release_at_s = None;
        events.push(SimEvent {
            time_s: t,
            foot: det.foot,
            kind: SimEventKind::Touchdown {
                patch_index: det.patch_index,
            },
        });
    }

    for leg in LegId::ALL {
        let patch = feet[leg.index()].patch_index.map(|i| &env.patches[i]);
        advance_magnet(
            &mut feet[leg.index()],
            leg,
            cmd.magnet_on[leg.index()],
            patch,
            magnet,
            t,
            &mut events,
        );
    }

    let state = &sim.state;
    let c = quat_to_rot_unchecked(&state.xi);
    let mut joint_vel = JointVector::zeros();
    let mut torques = JointVector::zeros();
    let mut forces = [Vector3::zeros(); LEG_COUNT];

    for leg in LegId::ALL {
        let i = leg.index();
        let base = i * JOINTS_PER_LEG;
        let chain = LegChain::new(model, leg);
        let q = state.joint_angles(leg);
        let j_body = chain.jacobian_body(&q);
        let j_inertial = c * j_body;

        let q_ref = Vector3::new(
            cmd.joint_pos_ref[base],
            cmd.joint_pos_ref[base + 1],
            cmd.joint_pos_ref[base + 2],
        );
        let qd_ref = Vector3::new(
            cmd.joint_vel_ref[base],
            cmd.joint_vel_ref[base + 1],
            cmd.joint_vel_ref[base + 2],
        );
        let qd_meas = Vector3::new(
            sim.last_joint_vel[base],
            sim.last_joint_vel[base + 1],
            sim.last_joint_vel[base + 2],
        );

        // PID torque around the feedforward `τ = −Jᵀλ`.
        let tau_ff = -j_inertial.transpose() * cmd.feedforward_forces[i];
        let mut tau = tau_ff + actuators.kp * (q_ref - q) + actuators.kd * (qd_ref - qd_meas);
        for k in 0..JOINTS_PER_LEG {
            let limit = actuators
                .torque_limit_nm
                .min(model.joint_limits[i][k].torque_max_nm);
            tau[k] = tau[k].clamp(-limit, limit);
        }
        torques.fixed_rows_mut::<3>(base).copy_from(&tau);

        let qd = if feet[i].is_pinned() {
            // Slave the joints so the foot point stays fixed in the world:
            // v + C(ω×r_b + J q̇) = 0.
            let foot_body = chain.foot_position_body(&q);
            let rhs = -(c.transpose() * state.v + state.omega.cross(&foot_body));
            // Massless legs transmit the clamped torque to the surface.
            forces[i] = -damped_solve(&j_inertial.transpose(), &tau);
            damped_solve(&j_body, &rhs)
        } else {
            qd_ref + actuators.swing_servo_gain * (q_ref - q)
        };
        joint_vel.fixed_rows_mut::<3>(base).copy_from(&qd);
    }
    clamp_vector(&mut joint_vel, actuators.speed_limit_rad_s);

    // Adhesion failures detach the foot before the force acts on the base.
    for leg in LegId::ALL {
        let i = leg.index();
        if !feet[i].is_pinned() {
            continue;
        }
        let patch = &env.patches[feet[i].patch_index.expect("pinned foot has a patch")];
        // While the magnetization pulses run the foot is mechanically seated:
        // transient demands up to the magnet's full strength are carried, and
        // microslip is part of touchdown rather than a loss of adhesion. Once
        // attached, the realized capacity governs.
        let attached = feet[i].status == FootStatus::Attached;
        let capacity = if attached {
            feet[i].magnet_force_n
        } else if patch.ferrous {
            patch.quality * magnet.f_hold_normal_n
        } else {
            0.0
        };
        match check_adhesion(&forces[i], capacity, patch) {
            AdhesionOutcome::Ok => {}
            AdhesionOutcome::Slip if !attached => {}
            outcome => {
                feet[i] = FootSim::detached();
                forces[i] = Vector3::zeros();
                events.push(SimEvent {
                    time_s: t,
                    foot: leg,
                    kind: if outcome == AdhesionOutcome::Slip {
                        SimEventKind::Slip
                    } else {
                        SimEventKind::PullOff
                    },
                });
            }
        }
    }

    let input = Input {
        forces,
        joint_vel,
    };
    let ctx = match sim.payload {
        Some(p) => DynamicsContext::with_payload(model, p),
        None => DynamicsContext::new(model),
    };
    let mut next = dynamics::integrate(state, &input, dt, &ctx)
        .expect("plant state quaternion stays normalized");

    // Newton projection removes the O(dt²) drift of pinned feet.
    let c_next = quat_to_rot_unchecked(&next.xi);
    for leg in LegId::ALL {
        let i = leg.index();
        if !feet[i].is_pinned() {
            continue;
        }
        let chain = LegChain::new(model, leg);
        let target_body = c_next.transpose() * (feet[i].attachment_point - next.p);
        let mut q = next.joint_angles(leg);
        for _ in 0..4 {
            let r = chain.foot_position_body(&q) - target_body;
            if r.norm() < 1e-13 {
                break;
            }
            q -= damped_solve(&chain.jacobian_body(&q), &r);
        }
        next.q_j.fixed_rows_mut::<3>(i * JOINTS_PER_LEG).copy_from(&q);
    }

    StepOutput {
        state: SimState {
            state: next,
            feet,
            time_s: t + dt,
            payload: sim.payload,
            last_joint_vel: joint_vel,
        },
        foot_forces: forces,
        joint_torques: torques,
        events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{foot_position, stance_foot_velocity};
    use crate::model::default_model;
    use nalgebra::Quaternion;

    fn standing_state(model: &RobotModel) -> State {
        let chain = LegChain::new(model, LegId::LeftFront);
        let foot = chain.foot_position_body(&Vector3::new(
            model.nominal_joint_angles[0],
            model.nominal_joint_angles[1],
            model.nominal_joint_angles[2],
        ));
        let mut s = State::rest(model.nominal_joint_angles);
        s.p = Vector3::new(0.0, 0.0, -foot.z);
        s
    }

    /// Base hangs from the ceiling: body flipped 180° about x so the feet
    /// (below the body in the body frame) reach the ceiling plane.
    fn hanging_state(model: &RobotModel, height: f64) -> State {
        let chain = LegChain::new(model, LegId::LeftFront);
        let foot = chain.foot_position_body(&Vector3::new(
            model.nominal_joint_angles[0],
            model.nominal_joint_angles[1],
            model.nominal_joint_angles[2],
        ));
        let mut s = State::rest(model.nominal_joint_angles);
        s.xi = Quaternion::new(0.0, 1.0, 0.0, 0.0);
        s.p = Vector3::new(0.0, 0.0, height + foot.z);
        s
    }

    fn standing_command(model: &RobotModel, upward_per_foot: f64) -> SimCommand {
        SimCommand {
            joint_pos_ref: model.nominal_joint_angles,
            joint_vel_ref: JointVector::zeros(),
            feedforward_forces: [Vector3::new(0.0, 0.0, upward_per_foot); LEG_COUNT],
            magnet_on: [true; LEG_COUNT],
        }
    }

    #[test]
    fn standing_base_drifts_less_than_a_millimeter_over_five_seconds() {
        let (model, magnet) = default_model();
        let env = Environment::ground();
        let actuators = ActuatorModel::default();
        let mut sim = SimState::new(standing_state(&model), None);
        assert_eq!(sim.attach_nearby(&model, &env, &magnet, 1e-6), 4);
        let p0 = sim.state.p;
        let weight = model.mass_kg * model.gravity_vec.norm();
        let cmd = standing_command(&model, weight / 4.0);
        let steps = (5.0 / DEFAULT_SIM_DT_S) as usize;
        for _ in 0..steps {
            let out = sim_step(&sim, &cmd, &actuators, &model, &magnet, &env, DEFAULT_SIM_DT_S);
            for e in &out.events {
                panic!("unexpected event during standing: {:?}", e);
            }
            sim = out.state;
        }
        assert!(
            (sim.state.p - p0).norm() < 1e-3,
            "drift {:?}",
            (sim.state.p - p0)
        );
    }

    #[test]
    fn standing_pinned_feet_stay_put_with_zero_velocity() {
        let (model, magnet) = default_model();
        let env = Environment::ground();
        let actuators = ActuatorModel::default();
        let mut sim = SimState::new(standing_state(&model), None);
        sim.attach_nearby(&model, &env, &magnet, 1e-6);
        let weight = model.mass_kg * model.gravity_vec.norm();
        let cmd = standing_command(&model, weight / 4.0);
        for _ in 0..2000 {
            let out = sim_step(&sim, &cmd, &actuators, &model, &magnet, &env, DEFAULT_SIM_DT_S);
            sim = out.state;
            let input = Input {
                forces: [Vector3::zeros(); LEG_COUNT],
                joint_vel: sim.last_joint_vel,
            };
            for leg in LegId::ALL {
                let pin = sim.feet[leg.index()].attachment_point;
                let err = (foot_position(&model, &sim.state, leg) - pin).norm();
                assert!(err < 1e-9, "pin error {err}");
                let v = stance_foot_velocity(&model, &sim.state, &input, leg).norm();
                assert!(v < 1e-8, "stance foot velocity {v}");
            }
        }
    }

    #[test]
    fn hanging_from_ceiling_constraint_pulls_sum_to_weight() {
        let (model, magnet) = default_model();
        let height = 0.8;
        let env = Environment::ceiling(height);
        let actuators = ActuatorModel::default();
        let mut sim = SimState::new(hanging_state(&model, height), None);
        assert_eq!(sim.attach_nearby(&model, &env, &magnet, 1e-6), 4);
        let weight = model.mass_kg * model.gravity_vec.norm();
        // Surface must pull the hanging robot up: +z on the robot, which is
        // tension against the downward ceiling normal.
        let mut cmd = standing_command(&model, weight / 4.0);
        cmd.joint_vel_ref = JointVector::zeros();
        let out = sim_step(&sim, &cmd, &actuators, &model, &magnet, &env, DEFAULT_SIM_DT_S);
        let n = env.patches[0].normal;
        let total_pull: f64 = out
            .foot_forces
            .iter()
            .map(|f| (-f.dot(&n)).max(0.0))
            .sum();
        assert!(
            (total_pull - 110.853).abs() < 1e-6,
            "total pull {total_pull}"
        );
        assert!(out.events.is_empty(), "{:?}", out.events);
    }

    #[test]
    fn free_fall_reduces_to_the_dynamics_integrator_bitwise() {
        let (model, magnet) = default_model();
        let env = Environment::ground();
        let actuators = ActuatorModel::passive();
        let mut state = standing_state(&model);
        state.p.z += 1.0; // clear of the ground so nothing touches down
        state.v = Vector3::new(0.3, -0.1, 0.2);
        state.omega = Vector3::new(0.4, 0.2, -0.3);
        let mut sim = SimState::new(state, None);
        let cmd = SimCommand {
            joint_pos_ref: model.nominal_joint_angles,
            joint_vel_ref: JointVector::zeros(),
            feedforward_forces: [Vector3::zeros(); LEG_COUNT],
            magnet_on: [false; LEG_COUNT],
        };
        let ctx = DynamicsContext::new(&model);
        let input = Input::zero();
        let mut reference = sim.state;
        for _ in 0..200 {
            let out = sim_step(&sim, &cmd, &actuators, &model, &magnet, &env, DEFAULT_SIM_DT_S);
            assert!(out.events.is_empty());
            sim = out.state;
            reference = dynamics::integrate(&reference, &input, DEFAULT_SIM_DT_S, &ctx).unwrap();
            assert_eq!(sim.state.p, reference.p);
            assert_eq!(sim.state.v, reference.v);
            assert_eq!(sim.state.xi, reference.xi);
            assert_eq!(sim.state.omega, reference.omega);
            assert_eq!(sim.state.q_j, reference.q_j);
        }
    }

    #[test]
    fn adhesion_check_examples() {
        let (_, magnet) = default_model();
        let patch = &Environment::ceiling(1.0).patches[0];
        let full = magnet.f_hold_normal_n;
        // 100 N tension at full force: holds (280 N limit).
        let pull = 100.0 * Vector3::z(); // against the downward ceiling normal
        assert_eq!(check_adhesion(&pull, full, patch), AdhesionOutcome::Ok);
        // 300 N tension exceeds the limit.
        let pull = 300.0 * Vector3::z();
        assert_eq!(check_adhesion(&pull, full, patch), AdhesionOutcome::PullOff);
        // 200 N tangential with zero compression: limit is mu * 280 = 160 N.
        let shear = 200.0 * Vector3::x();
        assert_eq!(check_adhesion(&shear, full, patch), AdhesionOutcome::Slip);
        let shear = 159.0 * Vector3::x();
        assert_eq!(check_adhesion(&shear, full, patch), AdhesionOutcome::Ok);
        // Proportional limit while attaching: one of two pulses done caps
        // the tension at 140 N.
        let pull = 100.0 * Vector3::z();
        assert_eq!(check_adhesion(&pull, 0.5 * full, patch), AdhesionOutcome::Ok);
        let pull = 200.0 * Vector3::z();
        assert_eq!(
            check_adhesion(&pull, 0.5 * full, patch),
            AdhesionOutcome::PullOff
        );
    }

    #[test]
    fn touchdown_detection_threshold_and_direction() {
        let (model, _) = default_model();
        let env = Environment::ground();
        let mut state = standing_state(&model);
        state.p.z += 1e-3; // feet 1 mm above the ground
        let mut sim = SimState::new(state, None);
        // Not moving: no event.
        assert!(detect_touchdown(&sim, &model, &env).is_empty());
        // Moving down: all four feet report contact.
        sim.state.v = Vector3::new(0.0, 0.0, -0.05);
        let det = detect_touchdown(&sim, &model, &env);
        assert_eq!(det.len(), 4);
        for d in &det {
            assert!(d.point.z.abs() < 1e-12);
        }
        // Receding: no event.
        sim.state.v = Vector3::new(0.0, 0.0, 0.05);
        assert!(detect_touchdown(&sim, &model, &env).is_empty());
    }

    #[test]
    fn touchdown_outside_patch_bounds_is_ignored() {
        let (model, _) = default_model();
        // Tiny patch far from any foot projection.
        let patch =
            PlanePatch::rect(Vector3::new(5.0, 5.0, 0.0), Vector3::z(), 0.1, 0.1).unwrap();
        let env = Environment {
            patches: alloc::vec![patch],
        };
        let mut state = standing_state(&model);
        state.p.z += 1e-3;
        let mut sim = SimState::new(state, None);
        sim.state.v = Vector3::new(0.0, 0.0, -0.05);
        assert!(detect_touchdown(&sim, &model, &env).is_empty());
    }

    #[test]
    fn magnet_machine_never_reports_full_force_before_two_pulses() {
        let (model, magnet) = default_model();
        let env = Environment::ground();
        let actuators = ActuatorModel::default();
        let mut state = standing_state(&model);
        state.p.z += 1.5e-3;
        state.v.z = -0.01;
        let mut sim = SimState::new(state, None);
        let weight = model.mass_kg * model.gravity_vec.norm();
        let cmd = standing_command(&model, weight / 4.0);
        let full = magnet.f_hold_normal_n;
        let mut touchdown_at = [None; LEG_COUNT];
        let mut full_at = [None; LEG_COUNT];
        for _ in 0..1200 {
            let out = sim_step(&sim, &cmd, &actuators, &model, &magnet, &env, DEFAULT_SIM_DT_S);
            for e in &out.events {
                match e.kind {
                    SimEventKind::Touchdown { .. } => {
                        touchdown_at[e.foot.index()] = Some(e.time_s)
                    }
                    SimEventKind::AttachComplete => full_at[e.foot.index()] = Some(e.time_s),
                    other => panic!("unexpected event {other:?}"),
                }
            }
            sim = out.state;
            for leg in LegId::ALL {
                let foot = &sim.feet[leg.index()];
                assert!(foot.magnet_force_n <= full + 1e-12);
                if foot.magnet_force_n >= full - 1e-12 && foot.is_pinned() {
                    let td = touchdown_at[leg.index()].expect("full force implies touchdown");
                    assert!(
                        sim.time_s >= td + magnet.time_to_full_force() - 1e-9,
                        "full force too early: {} after touchdown {td}",
                        sim.time_s
                    );
                }
            }
        }
        for leg in LegId::ALL {
            let td = touchdown_at[leg.index()].expect("every foot touches down");
            let done = full_at[leg.index()].expect("every foot reaches full force");
            assert!((done - td - magnet.time_to_full_force()).abs() < 2.0 * DEFAULT_SIM_DT_S);
        }
    }

    #[test]
    fn release_completes_after_switch_off_and_detaches_the_foot() {
        let (model, magnet) = default_model();
        let env = Environment::ground();
        let actuators = ActuatorModel::default();
        let mut sim = SimState::new(standing_state(&model), None);
        sim.attach_nearby(&model, &env, &magnet, 1e-6);
        let weight = model.mass_kg * model.gravity_vec.norm();
        let mut cmd = standing_command(&model, weight / 3.0);
        cmd.feedforward_forces[0] = Vector3::zeros();
        cmd.magnet_on[0] = false;
        let mut released_at = None;
        for _ in 0..1000 {
            let out = sim_step(&sim, &cmd, &actuators, &model, &magnet, &env, DEFAULT_SIM_DT_S);
            sim = out.state;
            for e in &out.events {
                if e.kind == SimEventKind::Released {
                    assert_eq!(e.foot, LegId::LeftFront);
                    released_at = Some(e.time_s);
                }
            }
            if released_at.is_some() {
                break;
            }
            // Holding force is retained while the switch-off runs.
            assert!(sim.feet[0].is_pinned());
            assert!(sim.feet[0].magnet_force_n > 0.0);
        }
        let released = released_at.expect("release completes");
        assert!(
            (released - magnet.t_switch_off_s).abs() <= 2.0 * DEFAULT_SIM_DT_S,
            "released at {released}"
        );
        assert!(!sim.feet[0].is_pinned());
    }

    #[test]
    fn excessive_tension_raises_pull_off_and_detaches() {
        let (model, magnet) = default_model();
        let height = 0.8;
        let env = Environment::ceiling(height);
        let actuators = ActuatorModel::passive();
        let mut sim = SimState::new(hanging_state(&model, height), None);
        sim.attach_nearby(&model, &env, &magnet, 1e-6);
        // Derate one foot below the 27.7 N static pull it has to carry.
        sim.feet[2].magnet_force_n = 20.0;
        let weight = model.mass_kg * model.gravity_vec.norm();
        let cmd = standing_command(&model, weight / 4.0);
        let out = sim_step(&sim, &cmd, &actuators, &model, &magnet, &env, DEFAULT_SIM_DT_S);
        let pull_offs: Vec<_> = out
            .events
            .iter()
            .filter(|e| e.kind == SimEventKind::PullOff)
            .collect();
        assert_eq!(pull_offs.len(), 1);
        assert_eq!(pull_offs[0].foot, LegId::LeftHind);
        assert!(!out.state.feet[2].is_pinned());
        assert_eq!(out.foot_forces[2], Vector3::zeros());
    }

    #[test]
    fn identical_inputs_give_identical_trajectories() {
        let (model, magnet) = default_model();
        let env = Environment::ground();
        let actuators = ActuatorModel::default();
        let weight = model.mass_kg * model.gravity_vec.norm();
        let cmd = standing_command(&model, weight / 4.0);
        let run = || {
            let mut sim = SimState::new(standing_state(&model), None);
            sim.attach_nearby(&model, &env, &magnet, 1e-6);
            for _ in 0..500 {
                sim = sim_step(&sim, &cmd, &actuators, &model, &magnet, &env, DEFAULT_SIM_DT_S)
                    .state;
            }
            sim
        };
        let a = run();
        let b = run();
        assert_eq!(a.state.p, b.state.p);
        assert_eq!(a.state.v, b.state.v);
        assert_eq!(a.state.xi, b.state.xi);
        assert_eq!(a.state.q_j, b.state.q_j);
        assert_eq!(a.last_joint_vel, b.last_joint_vel);
    }
}
