//! Receding-horizon optimal control of the single-rigid-body model: tracking
//! costs, friction-cone and attachment barriers, stance/swing equalities, a
//! multiple-shooting Gauss–Newton SQP solver with a Riccati backward pass,
//! and policy extraction for the joint-level tracker.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use nalgebra::{Matrix3, Quaternion, SMatrix, SVector, Vector3};

use crate::dynamics::{
    discrete_transition, integrate, quat_left_matrix, DynamicsContext, Payload,
};
use crate::gait::{magnet_timeline, swing_reference, ContactSchedule, Phase};
use crate::kinematics::{stance_foot_velocity, LegChain};
use crate::model::{
    pack_state, Input, LegId, MagnetParams, RobotModel, State, JOINT_COUNT, LEG_COUNT,
};
use crate::spatial::{normalized, quat_error, quat_product, quat_to_rot_unchecked, skew};
use crate::terrain::Environment;

/// Reduced state dimension: attitude as a 3-vector tangent instead of a
/// quaternion.
pub const REDUCED_STATE_DIM: usize = 24;

type RVec = SVector<f64, REDUCED_STATE_DIM>;
type RMat = SMatrix<f64, REDUCED_STATE_DIM, REDUCED_STATE_DIM>;
type UVec = SVector<f64, 24>;
type UMat = SMatrix<f64, 24, 24>;
type LiftMat = SMatrix<f64, 25, 24>;
type ProjMat = SMatrix<f64, 24, 25>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MpcError {
    #[error("horizon {horizon_s} s is not an integer multiple of dt {dt_s} s")]
    BadDiscretization { horizon_s: f64, dt_s: f64 },
    #[error("horizon {horizon_s} s shorter than the swing duration {swing_s} s")]
    HorizonTooShort { horizon_s: f64, swing_s: f64 },
    #[error("contact schedule does not cover [{t0}, {t1}]")]
    ScheduleGap { t0: f64, t1: f64 },
    #[error("no terrain patch near foot {foot:?}")]
    NoSupportingPatch { foot: LegId },
    #[error("no stance feet at node {node}")]
    NoStanceFeet { node: usize },
    #[error("time {t} outside the solution horizon [{t0}, {t1}]")]
    TimeOutOfHorizon { t: f64, t0: f64, t1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcpSettings {
    /// Prediction horizon, s.
    pub horizon_s: f64,
    /// Node spacing, s.
    pub dt_s: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the KKT residual (stationarity + defects).
    pub kkt_tolerance: f64,
    /// Relaxed-barrier weight μ_b.
    pub barrier_weight: f64,
    /// Relaxed-barrier relaxation point δ_b.
    pub barrier_relaxation: f64,
    /// Quadratic penalty on stance/swing equality residuals.
    pub eq_penalty: f64,
    /// Tangential foothold cost on a swing foot's final node.
    pub touchdown_weight: f64,
    /// ℓ1 defect weight in the line-search merit function.
    pub merit_penalty: f64,
}

impl Default for OcpSettings {
    fn default() -> Self {
        OcpSettings {
            horizon_s: 1.0,
            dt_s: 0.02,
            max_iterations: 50,
            kkt_tolerance: 1e-6,
            barrier_weight: 1e-4,
            barrier_relaxation: 0.01,
            eq_penalty: 1e6,
            touchdown_weight: 1e3,
            merit_penalty: 1e4,
        }
    }
}

impl OcpSettings {
    /// Number of shooting intervals.
    pub fn intervals(&self) -> Result<usize, MpcError> {
        let n = self.horizon_s / self.dt_s;
        if (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
            return Err(MpcError::BadDiscretization {
                horizon_s: self.horizon_s,
                dt_s: self.dt_s,
            });
        }
        Ok(n.round() as usize)
    }
}

/// Diagonal tracking weights on the reduced state error and the input error.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    /// Order: position, velocity, orientation error, angular rate, joints.
    pub q_diag: RVec,
    /// Order: contact forces, joint velocities.
    pub r_diag: UVec,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights::from_groups(1e3, 1e1, 1e3, 1e1, 1e0, 1e-3, 1e-1)
    }
}

impl CostWeights {
    #[allow(clippy::too_many_arguments)]
    pub fn from_groups(
        pos: f64,
        vel: f64,
        orient: f64,
        omega: f64,
        joints: f64,
        forces: f64,
        joint_vel: f64,
    ) -> CostWeights {
        let mut q = RVec::zeros();
        let mut r = UVec::zeros();
        for i in 0..3 {
            q[i] = pos;
            q[3 + i] = vel;
            q[6 + i] = orient;
            q[9 + i] = omega;
        }
        for i in 0..JOINT_COUNT {
            q[12 + i] = joints;
            r[i / 3 * 3 + i % 3] = forces;
            r[12 + i] = joint_vel;
        }
        CostWeights { q_diag: q, r_diag: r }
    }
}

/// Friction-cone parameters of one contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionParams {
    pub mu: f64,
    /// Cone smoothing ε, N².
    pub epsilon: f64,
    /// Magnet adhesion currently available at this foot, N.
    pub f_mag: f64,
    /// Minimum press-on force during attachment, N.
    pub f_min: f64,
}

impl Default for FrictionParams {
    fn default() -> Self {
        FrictionParams {
            mu: 160.0 / 280.0,
            epsilon: 1.0,
            f_mag: 0.0,
            f_min: 20.0,
        }
    }
}

/// Operator-level reference for the target generator. The control loop fills
/// in the anchor pose each solve so the commanded path stays consistent
/// between re-plans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorCommand {
    /// Commanded base velocity in the inertial frame (surface-tangent).
    pub linear_velocity: Vector3<f64>,
    /// Yaw rate about the surface normal, rad/s.
    pub yaw_rate: f64,
    /// Reference base position on the commanded path at the solve time.
    pub reference_position: Vector3<f64>,
    /// Desired body-to-inertial attitude at the solve time.
    pub attitude: Matrix3<f64>,
    /// Outward normal of the supporting surface.
    pub surface_normal: Vector3<f64>,
    /// Mass carried in addition to the base, kg (payload).
    pub extra_mass: f64,
}

/// Reference state/input pair at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTarget {
    pub state: State,
    pub input: Input,
}

/// Per-foot constraint data at one node.
#[derive(Debug, Clone, PartialEq)]
pub enum FootPlan {
    Stance {
        /// Terrain-frame rotation of the supporting patch.
        c_ti: Matrix3<f64>,
        friction: FrictionParams,
        /// Whether the press-on constraint window after touchdown is active.
        attach_window: bool,
    },
    Swing {
        /// Patch normal the swing height is measured along.
        normal: Vector3<f64>,
        /// Target of `normal · foot_position` at this node.
        normal_target: f64,
        /// Tangential foothold target, set on the final swing node.
        touchdown_target: Option<Vector3<f64>>,
    },
}

impl FootPlan {
    pub fn is_stance(&self) -> bool {
        matches!(self, FootPlan::Stance { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodePlan {
    pub time: f64,
    pub feet: [FootPlan; LEG_COUNT],
}

/// Transcribed optimal-control problem over one horizon.
#[derive(Debug, Clone)]
pub struct OcpProblem<'a> {
    pub model: &'a RobotModel,
    pub payload: Option<Payload>,
    pub x0: State,
    pub t0: f64,
    /// One entry per node (`intervals + 1`).
    pub nodes: Vec<NodePlan>,
    pub targets: Vec<NodeTarget>,
    pub weights: CostWeights,
    pub settings: OcpSettings,
}

/// Optimized trajectory with solve diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<State>,
    /// Node inputs; the terminal entry duplicates the last interval.
    pub inputs: Vec<Input>,
    pub stance: Vec<[bool; LEG_COUNT]>,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    pub cost: f64,
    pub max_defect: f64,
    /// Wall-clock solve time; zero when unavailable.
    pub solve_time_s: f64,
}

impl Solution {
    pub fn horizon_end(&self) -> f64 {
        self.t0 + self.dt * (self.states.len() - 1) as f64
    }
}

/// Reduced-state tracking error `ε_x` with the attitude deviation expressed
/// through [`quat_error`].
pub fn state_error(state: &State, target: &State) -> RVec {
    let mut e = RVec::zeros();
    e.fixed_rows_mut::<3>(0).copy_from(&(state.p - target.p));
    e.fixed_rows_mut::<3>(3).copy_from(&(state.v - target.v));
    e.fixed_rows_mut::<3>(6)
        .copy_from(&quat_error(&state.xi, &target.xi));
    e.fixed_rows_mut::<3>(9)
        .copy_from(&(state.omega - target.omega));
    e.fixed_rows_mut::<12>(12)
        .copy_from(&(state.q_j - target.q_j));
    e
}

fn input_error(input: &Input, target: &Input) -> UVec {
    let mut e = UVec::zeros();
    for i in 0..LEG_COUNT {
        e.fixed_rows_mut::<3>(3 * i)
            .copy_from(&(input.forces[i] - target.forces[i]));
    }
    e.fixed_rows_mut::<12>(12)
        .copy_from(&(input.joint_vel - target.joint_vel));
    e
}

/// Quadratic tracking cost `½ε_xᵀQε_x + ½ε_uᵀRε_u`.
pub fn tracking_cost(
    state: &State,
    input: &Input,
    target_state: &State,
    target_input: &Input,
    weights: &CostWeights,
) -> f64 {
    let ex = state_error(state, target_state);
    let eu = input_error(input, target_input);
    0.5 * ex.component_mul(&weights.q_diag).dot(&ex)
        + 0.5 * eu.component_mul(&weights.r_diag).dot(&eu)
}

/// Friction-cone margin `μ(F_z + F_mag) − √(F_x² + F_y² + ε)` of a contact
/// force, with `F = C_TI·λ`; non-negative means feasible.
pub fn friction_cone_residual(
    lambda: &Vector3<f64>,
    c_ti: &Matrix3<f64>,
    params: &FrictionParams,
) -> f64 {
    let f = c_ti * lambda;
    params.mu * (f.z + params.f_mag) - (f.x * f.x + f.y * f.y + params.epsilon).sqrt()
}

/// Press-on margin `F_z − F_min` during the attachment window.
pub fn attach_force_residual(lambda: &Vector3<f64>, c_ti: &Matrix3<f64>, f_min: f64) -> f64 {
    (c_ti * lambda).z - f_min
}

/// Relaxed logarithmic barrier: `−μ_b ln h` above the relaxation point and a
/// C¹ quadratic extension below it, finite for all `h`.
pub fn relaxed_barrier(h: f64, mu_b: f64, delta_b: f64) -> f64 {
    if h >= delta_b {
        -mu_b * h.ln()
    } else {
        let z = (h - 2.0 * delta_b) / delta_b;
        mu_b * (0.5 * (z * z - 1.0) - delta_b.ln())
    }
}

fn relaxed_barrier_d1(h: f64, mu_b: f64, delta_b: f64) -> f64 {
    if h >= delta_b {
        -mu_b / h
    } else {
        mu_b * (h - 2.0 * delta_b) / (delta_b * delta_b)
    }
}

fn relaxed_barrier_d2(h: f64, mu_b: f64, delta_b: f64) -> f64 {
    if h >= delta_b {
        mu_b / (h * h)
    } else {
        mu_b / (delta_b * delta_b)
    }
}

/// Stance equality residual: the world velocity of a stance foot.
pub fn stance_constraint(
    model: &RobotModel,
    state: &State,
    input: &Input,
    foot: LegId,
) -> Vector3<f64> {
    stance_foot_velocity(model, state, input, foot)
}

/// Swing equality residuals: normal-direction position error against the
/// swing reference, and the (must-be-zero) contact force.
pub fn swing_constraints(
    model: &RobotModel,
    state: &State,
    input: &Input,
    foot: LegId,
    normal: &Vector3<f64>,
    normal_target: f64,
) -> (f64, Vector3<f64>) {
    let p_foot = crate::kinematics::foot_position(model, state, foot);
    (normal.dot(&p_foot) - normal_target, input.forces[foot.index()])
}

/// Per-node targets for an operator velocity command: the base reference
/// integrates the command, joints hold the nominal pose at zero rate, and
/// the supported weight is split equally over the scheduled stance feet.
pub fn target_generator(
    cmd: &OperatorCommand,
    schedule: &ContactSchedule,
    model: &RobotModel,
    t0: f64,
    settings: &OcpSettings,
) -> Result<Vec<NodeTarget>, MpcError> {
    let n = settings.intervals()?;
    let total_mass = model.mass_kg + cmd.extra_mass;
    let weight_force = -total_mass * model.gravity_vec;
    let n_surf = cmd.surface_normal;
    let base_quat = rotation_to_quat(&cmd.attitude);

    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = t0 + k as f64 * settings.dt_s;
        let dt = t - t0;
        let yaw = cmd.yaw_rate * dt;
        let half = yaw / 2.0;
        let yaw_quat = Quaternion::new(
            half.cos(),
            half.sin() * n_surf.x,
            half.sin() * n_surf.y,
            half.sin() * n_surf.z,
        );
        let xi_t = normalized(&quat_product(&yaw_quat, &base_quat));
        let c_t = quat_to_rot_unchecked(&xi_t);

        let stance: Vec<LegId> = LegId::ALL
            .iter()
            .copied()
            .filter(|leg| schedule.in_stance(*leg, t))
            .collect();
        if stance.is_empty() {
            return Err(MpcError::NoStanceFeet { node: k });
        }

        let mut state = State::rest(model.nominal_joint_angles);
        state.p = cmd.reference_position + cmd.linear_velocity * dt;
        state.v = cmd.linear_velocity;
        state.xi = xi_t;
        state.omega = c_t.transpose() * (cmd.yaw_rate * n_surf);

        let mut input = Input::zero();
        for leg in &stance {
            input.forces[leg.index()] = weight_force / stance.len() as f64;
        }
        out.push(NodeTarget { state, input });
    }
    Ok(out)
}

fn rotation_to_quat(c: &Matrix3<f64>) -> Quaternion<f64> {
    let r = nalgebra::Rotation3::from_matrix_unchecked(*c);
    *nalgebra::UnitQuaternion::from_rotation_matrix(&r).quaternion()
}

/// Transcribe the receding-horizon problem at `t0`: per-node contact plans,
/// swing references, magnet-dependent cone parameters, and targets.
#[allow(clippy::too_many_arguments)]
pub fn assemble_ocp<'a>(
    x_est: &State,
    t0: f64,
    schedule: &ContactSchedule,
    targets: Vec<NodeTarget>,
    env: &Environment,
    model: &'a RobotModel,
    magnet: &MagnetParams,
    payload: Option<Payload>,
    weights: CostWeights,
    settings: OcpSettings,
) -> Result<OcpProblem<'a>, MpcError> {
    let n = settings.intervals()?;
    if settings.horizon_s + 1e-9 < schedule.params.swing_duration_s {
        return Err(MpcError::HorizonTooShort {
            horizon_s: settings.horizon_s,
            swing_s: schedule.params.swing_duration_s,
        });
    }
    let t1 = t0 + settings.horizon_s;
    if !schedule.covers(t0, t1) {
        return Err(MpcError::ScheduleGap { t0, t1 });
    }
    assert_eq!(targets.len(), n + 1, "one target per node");

    // Assign each foot to the nearest patch at the current estimate.
    let mut patches = [0usize; LEG_COUNT];
    for leg in LegId::ALL {
        let p_foot = crate::kinematics::foot_position(model, x_est, leg);
        let idx = env
            .patch_near(&p_foot, 0.1)
            .map(|(i, _)| i)
            .or_else(|| {
                env.patches
                    .iter()
                    .enumerate()
                    .filter(|(_, patch)| patch.contains_projection(&p_foot))
                    .min_by(|a, b| {
                        a.1.signed_distance(&p_foot)
                            .abs()
                            .total_cmp(&b.1.signed_distance(&p_foot).abs())
                    })
                    .map(|(i, _)| i)
            })
            .ok_or(MpcError::NoSupportingPatch { foot: leg })?;
        patches[leg.index()] = idx;
    }

    let timeline = magnet_timeline(schedule, magnet);
    let nominal_body: [Vector3<f64>; LEG_COUNT] = core::array::from_fn(|i| {
        let chain = LegChain::new(model, LegId::from_index(i).unwrap());
        chain.foot_position_body(&Vector3::new(
            model.nominal_joint_angles[3 * i],
            model.nominal_joint_angles[3 * i + 1],
            model.nominal_joint_angles[3 * i + 2],
        ))
    });

    let mut nodes = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = t0 + k as f64 * settings.dt_s;
        let feet = core::array::from_fn(|i| {
            let leg = LegId::from_index(i).unwrap();
            let patch = &env.patches[patches[i]];
            match schedule.phase_at(leg, t) {
                Phase::Stance => {
                    let f_mag = magnet.f_hold_normal_n
                        * patch.quality
                        * timeline.force_fraction(schedule, magnet, leg, t);
                    let attach_window = schedule
                        .touchdown_time(leg, t)
                        .map(|td| {
                            (td - schedule.t0).abs() > 1e-9
                                && t - td < magnet.time_to_full_force()
                        })
                        .unwrap_or(false);
                    FootPlan::Stance {
                        c_ti: patch.terrain_rotation(),
                        friction: FrictionParams {
                            mu: patch.mu,
                            epsilon: 1.0,
                            f_mag,
                            f_min: magnet.f_min_attach_n,
                        },
                        attach_window,
                    }
                }
                Phase::Swing => {
                    let iv = schedule.interval_at(leg, t).expect("covered");
                    let duration = iv.end - iv.start;
                    let (bump, _) =
                        swing_reference(duration, schedule.params.swing_apex_m, t - iv.start);
                    let plane_offset = patch.normal.dot(&patch.point);
                    // Touchdown placement cost on the last node of the swing.
                    let last_swing_node = iv.end <= t + settings.dt_s + 1e-9 && iv.end <= t1 + 1e-9;
                    let touchdown_target = if last_swing_node {
                        let td_node = (((iv.end - t0) / settings.dt_s).round() as usize).min(n);
                        let target = &targets[td_node].state;
                        let c_t = quat_to_rot_unchecked(&target.xi);
                        Some(patch.clamp_into(&(target.p + c_t * nominal_body[i]), 0.02))
                    } else {
                        None
                    };
                    FootPlan::Swing {
                        normal: patch.normal,
                        normal_target: plane_offset + bump,
                        touchdown_target,
                    }
                }
            }
        });
        nodes.push(NodePlan { time: t, feet });
    }

    Ok(OcpProblem {
        model,
        payload,
        x0: *x_est,
        t0,
        nodes,
        targets,
        weights,
        settings,
    })
}

// ---------------------------------------------------------------------------
// Reduced-coordinate helpers: the QP works in a 24-dimensional tangent space
// with the attitude perturbation δθ applied as ξ ← ξ ∘ exp(δθ).

fn quat_exp(theta: &Vector3<f64>) -> Quaternion<f64> {
    let angle = theta.norm();
    if angle < 1e-12 {
        normalized(&Quaternion::new(1.0, theta.x / 2.0, theta.y / 2.0, theta.z / 2.0))
    } else {
        let half = angle / 2.0;
        let s = half.sin() / angle;
        Quaternion::new(half.cos(), s * theta.x, s * theta.y, s * theta.z)
    }
}

/// `∂x/∂δx` of the retraction at `x` (25×24).
fn tangent_lift(xi: &Quaternion<f64>) -> LiftMat {
    let mut t = LiftMat::zeros();
    t.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
    t.fixed_view_mut::<3, 3>(3, 3).fill_with_identity();
    let l = quat_left_matrix(xi);
    t.fixed_view_mut::<4, 3>(6, 6)
        .copy_from(&(0.5 * l.fixed_view::<4, 3>(0, 1).into_owned()));
    t.fixed_view_mut::<3, 3>(10, 9).fill_with_identity();
    t.fixed_view_mut::<12, 12>(13, 12).fill_with_identity();
    t
}

/// Left inverse of [`tangent_lift`] (24×25).
fn tangent_proj(xi: &Quaternion<f64>) -> ProjMat {
    let mut p = ProjMat::zeros();
    p.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
    p.fixed_view_mut::<3, 3>(3, 3).fill_with_identity();
    let l = quat_left_matrix(xi);
    p.fixed_view_mut::<3, 4>(6, 6)
        .copy_from(&(2.0 * l.fixed_view::<4, 3>(0, 1).transpose()));
    p.fixed_view_mut::<3, 3>(9, 10).fill_with_identity();
    p.fixed_view_mut::<12, 12>(12, 13).fill_with_identity();
    p
}

fn retract(state: &State, dx: &RVec) -> State {
    let mut s = *state;
    s.p += dx.fixed_rows::<3>(0).into_owned();
    s.v += dx.fixed_rows::<3>(3).into_owned();
    s.xi = normalized(&quat_product(
        &state.xi,
        &quat_exp(&dx.fixed_rows::<3>(6).into_owned()),
    ));
    s.omega += dx.fixed_rows::<3>(9).into_owned();
    s.q_j += dx.fixed_rows::<12>(12).into_owned();
    s
}

fn apply_input_step(input: &Input, du: &UVec) -> Input {
    let mut u = *input;
    for i in 0..LEG_COUNT {
        u.forces[i] += du.fixed_rows::<3>(3 * i).into_owned();
    }
    u.joint_vel += du.fixed_rows::<12>(12).into_owned();
    u
}

// ---------------------------------------------------------------------------
// Node cost: true value for the merit function, quadratic model for the QP.

struct NodeQuad {
    qxx: RMat,
    qx: RVec,
    ruu: UMat,
    ru: UVec,
    /// Cross term, d²ℓ/dδx dδu.
    mxu: SMatrix<f64, REDUCED_STATE_DIM, 24>,
}

/// Stage weight: integral costs scale with dt; the terminal node reuses dt.
fn stage_weight(settings: &OcpSettings) -> f64 {
    settings.dt_s
}

fn node_cost(
    problem: &OcpProblem,
    chains: &[LegChain; LEG_COUNT],
    k: usize,
    state: &State,
    input: Option<&Input>,
) -> f64 {
    let plan = &problem.nodes[k];
    let target = &problem.targets[k];
    let set = &problem.settings;
    let w = stage_weight(set);
    let model = problem.model;

    let mut cost = match input {
        Some(u) => w * tracking_cost(state, u, &target.state, &target.input, &problem.weights),
        None => {
            let ex = state_error(state, &target.state);
            w * 0.5 * ex.component_mul(&problem.weights.q_diag).dot(&ex)
        }
    };

    for i in 0..LEG_COUNT {
        let leg = LegId::from_index(i).unwrap();
        match &plan.feet[i] {
            FootPlan::Stance {
                c_ti,
                friction,
                attach_window,
            } => {
                if let Some(u) = input {
                    let h = friction_cone_residual(&u.forces[i], c_ti, friction);
                    cost += w * relaxed_barrier(h, set.barrier_weight, set.barrier_relaxation);
                    if *attach_window {
                        let ha = attach_force_residual(&u.forces[i], c_ti, friction.f_min);
                        cost +=
                            w * relaxed_barrier(ha, set.barrier_weight, set.barrier_relaxation);
                    }
                    let r = stance_constraint(model, state, u, leg);
                    cost += w * 0.5 * set.eq_penalty * r.norm_squared();
                }
            }
            FootPlan::Swing {
                normal,
                normal_target,
                touchdown_target,
            } => {
                let q = state.joint_angles(leg);
                let c = quat_to_rot_unchecked(&state.xi);
                let p_foot = state.p + c * chains[i].foot_position_body(&q);
                let rn = normal.dot(&p_foot) - normal_target;
                cost += w * 0.5 * set.eq_penalty * rn * rn;
                if let Some(u) = input {
                    cost += w * 0.5 * set.eq_penalty * u.forces[i].norm_squared();
                }
                if let Some(td) = touchdown_target {
                    let tangent = Matrix3::identity() - normal * normal.transpose();
                    let e = tangent * (p_foot - td);
                    cost += w * 0.5 * set.touchdown_weight * e.norm_squared();
                }
            }
        }
    }

    // Joint-limit barriers.
    for i in 0..LEG_COUNT {
        for j in 0..3 {
            let lim = &model.joint_limits[i][j];
            let q = state.q_j[3 * i + j];
            cost += w * relaxed_barrier(q - lim.pos_min_rad, set.barrier_weight, set.barrier_relaxation);
            cost += w * relaxed_barrier(lim.pos_max_rad - q, set.barrier_weight, set.barrier_relaxation);
        }
    }
    cost
}

/// Jacobian of the world foot position w.r.t. the reduced state.
fn foot_position_jacobian(
    chains: &[LegChain; LEG_COUNT],
    state: &State,
    leg: LegId,
) -> SMatrix<f64, 3, REDUCED_STATE_DIM> {
    let i = leg.index();
    let q = state.joint_angles(leg);
    let c = quat_to_rot_unchecked(&state.xi);
    let r_b = chains[i].foot_position_body(&q);
    let mut j = SMatrix::<f64, 3, REDUCED_STATE_DIM>::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
    j.fixed_view_mut::<3, 3>(0, 6).copy_from(&(-c * skew(&r_b)));
    j.fixed_view_mut::<3, 3>(0, 12 + 3 * i)
        .copy_from(&(c * chains[i].jacobian_body(&q)));
    j
}

fn node_quadratic(
    problem: &OcpProblem,
    chains: &[LegChain; LEG_COUNT],
    k: usize,
    state: &State,
    input: Option<&Input>,
) -> NodeQuad {
    let plan = &problem.nodes[k];
    let target = &problem.targets[k];
    let set = &problem.settings;
    let w = stage_weight(set);
    let model = problem.model;

    let mut quad = NodeQuad {
        qxx: RMat::zeros(),
        qx: RVec::zeros(),
        ruu: UMat::zeros(),
        ru: UVec::zeros(),
        mxu: SMatrix::zeros(),
    };

    // Tracking: ε_x Jacobian is identity except in the attitude block.
    let ex = state_error(state, &target.state);
    let err_full = quat_product(&state.xi, &target.state.xi.conjugate());
    let sign = if err_full.w < 0.0 { -1.0 } else { 1.0 };
    // d(ξ∘η∘ξ_t*) = R(ξ_t*)·L(ξ)·dη, dη = ½H dδθ; take the vector rows.
    let e_mat = crate::dynamics::quat_right_matrix(&target.state.xi.conjugate())
        * quat_left_matrix(&state.xi);
    let j_q: Matrix3<f64> = (sign * 0.5) * e_mat.fixed_view::<3, 3>(1, 1).into_owned();

    let mut jx = RMat::identity();
    jx.fixed_view_mut::<3, 3>(6, 6).copy_from(&j_q);
    let q_weighted = {
        let mut m = jx.transpose();
        for c in 0..REDUCED_STATE_DIM {
            let mut col = m.column_mut(c);
            col *= problem.weights.q_diag[c];
        }
        m
    };
    quad.qxx += w * (&q_weighted * jx);
    quad.qx += w * (q_weighted * ex);

    if let Some(u) = input {
        let eu = input_error(u, &target.input);
        for c in 0..24 {
            quad.ruu[(c, c)] += w * problem.weights.r_diag[c];
            quad.ru[c] += w * problem.weights.r_diag[c] * eu[c];
        }
    }

    let c_rot = quat_to_rot_unchecked(&state.xi);
    for i in 0..LEG_COUNT {
        let leg = LegId::from_index(i).unwrap();
        match &plan.feet[i] {
            FootPlan::Stance {
                c_ti,
                friction,
                attach_window,
            } => {
                let Some(u) = input else { continue };
                // Cone and attachment barriers act on λ_i only.
                let lambda = u.forces[i];
                let f = c_ti * lambda;
                let s = (f.x * f.x + f.y * f.y + friction.epsilon).sqrt();
                let dh_df = Vector3::new(-f.x / s, -f.y / s, friction.mu);
                let grad_h: Vector3<f64> = c_ti.transpose() * dh_df;
                let h = friction.mu * (f.z + friction.f_mag) - s;
                let b1 = relaxed_barrier_d1(h, set.barrier_weight, set.barrier_relaxation);
                let b2 = relaxed_barrier_d2(h, set.barrier_weight, set.barrier_relaxation);
                let mut ru_block = w * b1 * grad_h;
                let mut ruu_block: Matrix3<f64> = w * b2 * grad_h * grad_h.transpose();
                if *attach_window {
                    let grad_a: Vector3<f64> = c_ti.transpose() * Vector3::z();
                    let ha = f.z - friction.f_min;
                    let a1 = relaxed_barrier_d1(ha, set.barrier_weight, set.barrier_relaxation);
                    let a2 = relaxed_barrier_d2(ha, set.barrier_weight, set.barrier_relaxation);
                    ru_block += w * a1 * grad_a;
                    ruu_block += w * a2 * grad_a * grad_a.transpose();
                }
                {
                    let mut v = quad.ru.fixed_rows_mut::<3>(3 * i);
                    v += ru_block;
                    let mut m = quad.ruu.fixed_view_mut::<3, 3>(3 * i, 3 * i);
                    m += ruu_block;
                }

                // Stance-velocity penalty couples state and input.
                let r = stance_constraint(model, state, u, leg);
                let q = state.joint_angles(leg);
                let r_b = chains[i].foot_position_body(&q);
                let j_b = chains[i].jacobian_body(&q);
                let qd = u.joint_vel(leg);
                let a_body = state.omega.cross(&r_b) + j_b * qd;
                let mut jrx = SMatrix::<f64, 3, REDUCED_STATE_DIM>::zeros();
                jrx.fixed_view_mut::<3, 3>(0, 3).fill_with_identity();
                jrx.fixed_view_mut::<3, 3>(0, 6)
                    .copy_from(&(-c_rot * skew(&a_body)));
                jrx.fixed_view_mut::<3, 3>(0, 9)
                    .copy_from(&(-c_rot * skew(&r_b)));
                // Joint-angle columns by forward differences.
                let hq = 1e-7;
                for j in 0..3 {
                    let mut sp = *state;
                    sp.q_j[3 * i + j] += hq;
                    let rp = stance_constraint(model, &sp, u, leg);
                    jrx.fixed_view_mut::<3, 1>(0, 12 + 3 * i + j)
                        .copy_from(&((rp - r) / hq));
                }
                let mut jru = SMatrix::<f64, 3, 24>::zeros();
                jru.fixed_view_mut::<3, 3>(0, 12 + 3 * i)
                    .copy_from(&(c_rot * j_b));

                let wp = w * set.eq_penalty;
                quad.qxx += wp * jrx.transpose() * jrx;
                quad.qx += wp * jrx.transpose() * r;
                quad.ruu += wp * jru.transpose() * jru;
                quad.ru += wp * jru.transpose() * r;
                quad.mxu += wp * jrx.transpose() * jru;
            }
            FootPlan::Swing {
                normal,
                normal_target,
                touchdown_target,
            } => {
                let j_foot = foot_position_jacobian(chains, state, leg);
                let q = state.joint_angles(leg);
                let p_foot = state.p + c_rot * chains[i].foot_position_body(&q);
                let rn = normal.dot(&p_foot) - normal_target;
                let jn: SVector<f64, REDUCED_STATE_DIM> =
                    (normal.transpose() * &j_foot).transpose();
                let wp = w * set.eq_penalty;
                quad.qxx += wp * jn * jn.transpose();
                quad.qx += wp * rn * jn;

                if input.is_some() {
                    // λ = 0 equality.
                    let u = input.unwrap();
                    for j in 0..3 {
                        quad.ruu[(3 * i + j, 3 * i + j)] += wp;
                        quad.ru[3 * i + j] += wp * u.forces[i][j];
                    }
                }

                if let Some(td) = touchdown_target {
                    let tangent = Matrix3::identity() - normal * normal.transpose();
                    let e = tangent * (p_foot - td);
                    let jt = tangent * &j_foot;
                    let wt = w * set.touchdown_weight;
                    quad.qxx += wt * jt.transpose() * &jt;
                    quad.qx += wt * jt.transpose() * e;
                }
            }
        }
    }

    // Joint-limit barriers (diagonal in q_j).
    for i in 0..LEG_COUNT {
        for j in 0..3 {
            let lim = &model.joint_limits[i][j];
            let q = state.q_j[3 * i + j];
            let idx = 12 + 3 * i + j;
            let h_lo = q - lim.pos_min_rad;
            let h_hi = lim.pos_max_rad - q;
            quad.qx[idx] += w
                * (relaxed_barrier_d1(h_lo, set.barrier_weight, set.barrier_relaxation)
                    - relaxed_barrier_d1(h_hi, set.barrier_weight, set.barrier_relaxation));
            quad.qxx[(idx, idx)] += w
                * (relaxed_barrier_d2(h_lo, set.barrier_weight, set.barrier_relaxation)
                    + relaxed_barrier_d2(h_hi, set.barrier_weight, set.barrier_relaxation));
        }
    }

    quad
}

// ---------------------------------------------------------------------------
// Solver.

struct Iterate {
    states: Vec<State>,
    inputs: Vec<Input>,
}

fn total_cost(problem: &OcpProblem, chains: &[LegChain; LEG_COUNT], it: &Iterate) -> f64 {
    let n = it.inputs.len();
    let mut c = 0.0;
    for k in 0..n {
        c += node_cost(problem, chains, k, &it.states[k], Some(&it.inputs[k]));
    }
    c += node_cost(problem, chains, n, &it.states[n], None);
    c
}

fn defects(
    problem: &OcpProblem,
    ctx: &DynamicsContext,
    it: &Iterate,
) -> Vec<SVector<f64, 25>> {
    let dt = problem.settings.dt_s;
    (0..it.inputs.len())
        .map(|k| {
            let pred = integrate(&it.states[k], &it.inputs[k], dt, ctx)
                .expect("iterate quaternions stay unit");
            pack_state(&pred) - pack_state(&it.states[k + 1])
        })
        .collect()
}

fn merit(
    problem: &OcpProblem,
    chains: &[LegChain; LEG_COUNT],
    ctx: &DynamicsContext,
    it: &Iterate,
) -> f64 {
    let mut phi = total_cost(problem, chains, it);
    for d in defects(problem, ctx, it) {
        phi += problem.settings.merit_penalty * d.abs().sum();
    }
    phi
}

/// Solve the transcribed problem by multiple-shooting Gauss–Newton SQP with
/// a Riccati backward pass and an ℓ1-merit line search. Deterministic for
/// identical inputs; warm starts resume from a previous solution.
pub fn solve(problem: &OcpProblem, warm_start: Option<&Solution>) -> Solution {
    #[cfg(feature = "std")]
    let t_start = std::time::Instant::now();

    let set = &problem.settings;
    let n = problem.nodes.len() - 1;
    let dt = set.dt_s;
    let ctx = match problem.payload {
        Some(p) => DynamicsContext::with_payload(problem.model, p),
        None => DynamicsContext::new(problem.model),
    };
    let chains: [LegChain; LEG_COUNT] =
        core::array::from_fn(|i| LegChain::new(problem.model, LegId::from_index(i).unwrap()));

    // Initial iterate: warm start when shapes match, else hold the estimate
    // and apply the target inputs.
    let mut it = match warm_start {
        Some(sol) if sol.states.len() == n + 1 => Iterate {
            states: sol.states.clone(),
            inputs: sol.inputs[..n].to_vec(),
        },
        _ => Iterate {
            states: alloc::vec![problem.x0; n + 1],
            inputs: (0..n).map(|k| problem.targets[k].input).collect(),
        },
    };
    it.states[0] = problem.x0;

    let mut iterations = 0;
    let mut converged = false;
    let mut kkt = f64::INFINITY;

    while iterations < set.max_iterations {
        iterations += 1;

        // Linearize dynamics and reduce to tangent coordinates.
        let mut a_r: Vec<RMat> = Vec::with_capacity(n);
        let mut b_r: Vec<SMatrix<f64, REDUCED_STATE_DIM, 24>> = Vec::with_capacity(n);
        let mut d_r: Vec<RVec> = Vec::with_capacity(n);
        let mut max_defect = 0.0_f64;
        for k in 0..n {
            let (x_pred, a_d, b_d) = discrete_transition(&it.states[k], &it.inputs[k], dt, &ctx);
            let d_full = x_pred - pack_state(&it.states[k + 1]);
            max_defect = max_defect.max(d_full.abs().max());
            let proj = tangent_proj(&it.states[k + 1].xi);
            let lift = tangent_lift(&it.states[k].xi);
            a_r.push(&proj * a_d * lift);
            b_r.push(&proj * b_d);
            d_r.push(proj * d_full);
        }

        // Quadratize the cost.
        let quads: Vec<NodeQuad> = (0..=n)
            .map(|k| {
                let u = if k < n { Some(&it.inputs[k]) } else { None };
                node_quadratic(problem, &chains, k, &it.states[k], u)
            })
            .collect();

        // Riccati backward pass.
        let mut p_mat = quads[n].qxx;
        let mut p_vec = quads[n].qx;
        let mut gains: Vec<(UVec, SMatrix<f64, 24, REDUCED_STATE_DIM>)> = Vec::with_capacity(n);
        let mut stationarity = 0.0_f64;
        let mut reg = 0.0;
        for k in (0..n).rev() {
            let a = &a_r[k];
            let b = &b_r[k];
            let pd = p_vec + &p_mat * d_r[k];
            let qx = quads[k].qx + a.transpose() * pd;
            let qu = quads[k].ru + b.transpose() * pd;
            let qxx = quads[k].qxx + a.transpose() * &p_mat * a;
            let mut quu = quads[k].ruu + b.transpose() * &p_mat * b;
            let qux = quads[k].mxu.transpose() + b.transpose() * &p_mat * a;
            stationarity = stationarity.max(qu.amax());

            let chol = loop {
                match (quu + reg * UMat::identity()).cholesky() {
                    Some(c) => break c,
                    None => {
                        reg = (reg * 10.0).max(1e-9);
                        if reg > 1e12 {
                            break (UMat::identity() * reg).cholesky().unwrap();
                        }
                    }
                }
            };
            if reg > 0.0 {
                quu += reg * UMat::identity();
            }
            let k_ff: UVec = -chol.solve(&qu);
            let k_fb: SMatrix<f64, 24, REDUCED_STATE_DIM> = -chol.solve(&qux);

            p_mat = qxx + k_fb.transpose() * &quu * &k_fb
                + k_fb.transpose() * &qux
                + qux.transpose() * &k_fb;
            p_mat = 0.5 * (p_mat + p_mat.transpose());
            p_vec = qx + k_fb.transpose() * (&quu * k_ff + qu) + qux.transpose() * k_ff;
            gains.push((k_ff, k_fb));
        }
        gains.reverse();

        kkt = stationarity.max(max_defect);
        if kkt < set.kkt_tolerance {
            converged = true;
            break;
        }

        // Full-step direction from the linear rollout with defects.
        let mut dx = RVec::zeros();
        let mut dxs: Vec<RVec> = Vec::with_capacity(n + 1);
        let mut dus: Vec<UVec> = Vec::with_capacity(n);
        dxs.push(dx);
        for k in 0..n {
            let du = gains[k].0 + gains[k].1 * dx;
            dx = a_r[k] * dx + b_r[k] * du + d_r[k];
            dus.push(du);
            dxs.push(dx);
        }

        // Backtracking line search on the ℓ1 merit.
        let phi0 = merit(problem, &chains, &ctx, &it);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let cand = Iterate {
                states: (0..=n)
                    .map(|k| retract(&it.states[k], &(alpha * dxs[k])))
                    .collect(),
                inputs: (0..n)
                    .map(|k| apply_input_step(&it.inputs[k], &(alpha * dus[k])))
                    .collect(),
            };
            if merit(problem, &chains, &ctx, &cand) < phi0 - 1e-12 {
                it = cand;
                it.states[0] = problem.x0;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let final_defects = defects(problem, &ctx, &it);
    let max_defect = final_defects
        .iter()
        .map(|d| d.abs().max())
        .fold(0.0_f64, f64::max);
    let cost = total_cost(problem, &chains, &it);
    let stance: Vec<[bool; LEG_COUNT]> = problem
        .nodes
        .iter()
        .map(|node| core::array::from_fn(|i| node.feet[i].is_stance()))
        .collect();
    let mut inputs = it.inputs;
    inputs.push(*inputs.last().expect("at least one interval"));

    #[cfg(feature = "std")]
    let solve_time_s = t_start.elapsed().as_secs_f64();
    #[cfg(not(feature = "std"))]
    let solve_time_s = 0.0;

    Solution {
        t0: problem.t0,
        dt,
        states: it.states,
        inputs,
        stance,
        iterations,
        kkt_residual: kkt,
        converged,
        cost,
        max_defect,
        solve_time_s,
    }
}

/// Tracking references at `t`: joint positions/velocities and force
/// feedforward, linearly interpolated between nodes; swing feet get zero
/// feedforward.
pub fn extract_policy(
    solution: &Solution,
    t: f64,
) -> Result<(crate::model::JointVector, crate::model::JointVector, [Vector3<f64>; LEG_COUNT]), MpcError>
{
    let t1 = solution.horizon_end();
    if t < solution.t0 - 1e-9 || t > t1 + 1e-9 {
        return Err(MpcError::TimeOutOfHorizon {
            t,
            t0: solution.t0,
            t1,
        });
    }
    let s = ((t - solution.t0) / solution.dt).clamp(0.0, (solution.states.len() - 1) as f64);
    let k = (s.floor() as usize).min(solution.states.len() - 2);
    let frac = s - k as f64;

    let q = solution.states[k].q_j * (1.0 - frac) + solution.states[k + 1].q_j * frac;
    let qd = solution.inputs[k].joint_vel * (1.0 - frac) + solution.inputs[k + 1].joint_vel * frac;
    let mask_node = if frac < 0.5 { k } else { k + 1 };
    let lambda: [Vector3<f64>; LEG_COUNT] = core::array::from_fn(|i| {
        if solution.stance[mask_node][i] {
            solution.inputs[k].forces[i] * (1.0 - frac) + solution.inputs[k + 1].forces[i] * frac
        } else {
            Vector3::zeros()
        }
    });
    Ok((q, qd, lambda))
}
