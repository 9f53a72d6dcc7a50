//! Physical parameters, the state/input vector layout, and configuration
//! loading with validation.
//!
//! All units are SI; angles are radians everywhere, including in config
//! files. The state is `[p, v, ξ, ω, q_j]` (dimension 25, quaternion stored
//! scalar-first) and the input is `[λ₁..λ₄, q̇_j]` (dimension 24).

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::string::{String, ToString};
use nalgebra::{Matrix3, Quaternion, SVector, Vector3};
use serde::{Deserialize, Serialize};


/// Flat dimension of [`State`].
pub const STATE_DIM: usize = 25;
/// Flat dimension of [`Input`].
pub const INPUT_DIM: usize = 24;
/// Number of legs.
pub const LEG_COUNT: usize = 4;
/// Actuated joints per leg (hip yaw, hip pitch, knee).
pub const JOINTS_PER_LEG: usize = 3;
/// Total actuated joints.
pub const JOINT_COUNT: usize = LEG_COUNT * JOINTS_PER_LEG;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type InputVector = SVector<f64, INPUT_DIM>;
pub type JointVector = SVector<f64, { JOINT_COUNT }>;

/// Leg identifiers, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LegId {
    LeftFront = 0,
    RightFront = 1,
    LeftHind = 2,
    RightHind = 3,
}

impl LegId {
    pub const ALL: [LegId; LEG_COUNT] = [
        LegId::LeftFront,
        LegId::RightFront,
        LegId::LeftHind,
        LegId::RightHind,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<LegId> {
        LegId::ALL.get(i).copied()
    }

    pub fn short_name(self) -> &'static str {
        match self {
            LegId::LeftFront => "LF",
            LegId::RightFront => "RF",
            LegId::LeftHind => "LH",
            LegId::RightHind => "RH",
        }
    }
}

/// Position, velocity, and torque bounds of one joint.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JointLimit {
    pub pos_min_rad: f64,
    pub pos_max_rad: f64,
    pub vel_max_rad_s: f64,
    pub torque_max_nm: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinkLengths {
    /// Hip yaw axis to hip pitch axis.
    pub hip_m: f64,
    pub upper_m: f64,
    pub lower_m: f64,
}

/// Validated physical model of the robot.
#[derive(Debug, Clone)]
pub struct RobotModel {
    pub mass_kg: f64,
    /// Body-frame inertia tensor, kg·m².
    pub inertia_tensor: Matrix3<f64>,
    /// Gravity in the inertial frame, m/s².
    pub gravity_vec: Vector3<f64>,
    pub leg_count: usize,
    /// Hip yaw joint origins in the body frame.
    pub hip_offsets: [Vector3<f64>; LEG_COUNT],
    /// Yaw angle of each leg's zero configuration, measured from body +x.
    pub yaw_zero_rad: [f64; LEG_COUNT],
    pub link_lengths: [LinkLengths; LEG_COUNT],
    /// Per joint, grouped by leg.
    pub joint_limits: [[JointLimit; JOINTS_PER_LEG]; LEG_COUNT],
    /// Joint angles of the default standing configuration.
    pub nominal_joint_angles: JointVector,
    pub gear_ratio: f64,
    pub actuator_peak_torque_nm: f64,
    /// Converted once from rpm at load time.
    pub actuator_max_speed_rad_s: f64,
}

impl RobotModel {
    /// Inverse of the inertia tensor; the tensor is validated PD at load.
    pub fn inertia_inverse(&self) -> Matrix3<f64> {
        self.inertia_tensor
            .try_inverse()
            .expect("inertia validated positive definite at load")
    }
}

/// Electro-permanent magnet parameters.
#[derive(Debug, Clone, Copy)]
pub struct MagnetParams {
    /// Maximum adhesion force on a flat surface, N.
    pub f_max_flat_n: f64,
    /// Normal holding force with the friction ring preloaded, N.
    pub f_hold_normal_n: f64,
    /// Lateral holding force, N.
    pub f_hold_lateral_n: f64,
    /// Switch-on (magnetize pulse) duration, s.
    pub t_switch_on_s: f64,
    /// Switch-off duration, s.
    pub t_switch_off_s: f64,
    /// Pulses required on-surface before the full force is available.
    pub pulses_for_full_force: u32,
    /// Minimum press-on force during magnetization, N.
    pub f_min_attach_n: f64,
}

impl MagnetParams {
    /// Friction coefficient implied by the lateral vs normal holding forces.
    pub fn friction_coefficient(&self) -> f64 {
        self.f_hold_lateral_n / self.f_hold_normal_n
    }

    /// Time from touchdown until the full adhesion force is available.
    pub fn time_to_full_force(&self) -> f64 {
        self.pulses_for_full_force as f64 * self.t_switch_on_s
    }
}

/// Base and joint state, Eq.-of-motion layout `[p, v, ξ, ω, q_j]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    /// Base position, inertial frame, m.
    pub p: Vector3<f64>,
    /// Base linear velocity, inertial frame, m/s.
    pub v: Vector3<f64>,
    /// Base orientation, unit quaternion (body to inertial).
    pub xi: Quaternion<f64>,
    /// Angular velocity, body frame, rad/s.
    pub omega: Vector3<f64>,
    /// Joint angles, rad.
    pub q_j: JointVector,
}

impl State {
    /// Rest state at the origin with identity orientation.
    pub fn rest(q_j: JointVector) -> State {
        State {
            p: Vector3::zeros(),
            v: Vector3::zeros(),
            xi: Quaternion::new(1.0, 0.0, 0.0, 0.0),
            omega: Vector3::zeros(),
            q_j,
        }
    }

    pub fn joint_angles(&self, leg: LegId) -> Vector3<f64> {
        let i = leg.index() * JOINTS_PER_LEG;
        Vector3::new(self.q_j[i], self.q_j[i + 1], self.q_j[i + 2])
    }
}

/// Ground reaction forces and joint velocities, layout `[λ₁..λ₄, q̇_j]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Input {
    /// Ground reaction force per foot, inertial frame, N.
    pub forces: [Vector3<f64>; LEG_COUNT],
    /// Joint velocities, rad/s.
    pub joint_vel: JointVector,
}

impl Input {
    pub fn zero() -> Input {
        Input {
            forces: [Vector3::zeros(); LEG_COUNT],
            joint_vel: JointVector::zeros(),
        }
    }

    pub fn joint_vel(&self, leg: LegId) -> Vector3<f64> {
        let i = leg.index() * JOINTS_PER_LEG;
        Vector3::new(
            self.joint_vel[i],
            self.joint_vel[i + 1],
            self.joint_vel[i + 2],
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("config parse failure: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        key,
        reason: reason.into(),
    }
}

/// Flatten a state to its 25-vector layout.
pub fn pack_state(state: &State) -> StateVector {
    let mut x = StateVector::zeros();
    x.fixed_rows_mut::<3>(0).copy_from(&state.p);
    x.fixed_rows_mut::<3>(3).copy_from(&state.v);
    x[6] = state.xi.w;
    x[7] = state.xi.i;
    x[8] = state.xi.j;
    x[9] = state.xi.k;
    x.fixed_rows_mut::<3>(10).copy_from(&state.omega);
    x.fixed_rows_mut::<12>(13).copy_from(&state.q_j);
    x
}

/// Inverse of [`pack_state`]; rejects slices that are not length 25.
pub fn unpack_state(x: &[f64]) -> Result<State, ModelError> {
    if x.len() != STATE_DIM {
        return Err(ModelError::DimensionMismatch {
            expected: STATE_DIM,
            got: x.len(),
        });
    }
    Ok(State {
        p: Vector3::new(x[0], x[1], x[2]),
        v: Vector3::new(x[3], x[4], x[5]),
        xi: Quaternion::new(x[6], x[7], x[8], x[9]),
        omega: Vector3::new(x[10], x[11], x[12]),
        q_j: JointVector::from_column_slice(&x[13..25]),
    })
}

/// Flatten an input to its 24-vector layout.
pub fn pack_input(input: &Input) -> InputVector {
    let mut u = InputVector::zeros();
    for (i, f) in input.forces.iter().enumerate() {
        u.fixed_rows_mut::<3>(3 * i).copy_from(f);
    }
    u.fixed_rows_mut::<12>(12).copy_from(&input.joint_vel);
    u
}

/// Inverse of [`pack_input`]; rejects slices that are not length 24.
pub fn unpack_input(u: &[f64]) -> Result<Input, ModelError> {
    if u.len() != INPUT_DIM {
        return Err(ModelError::DimensionMismatch {
            expected: INPUT_DIM,
            got: u.len(),
        });
    }
    let mut forces = [Vector3::zeros(); LEG_COUNT];
    for (i, f) in forces.iter_mut().enumerate() {
        *f = Vector3::new(u[3 * i], u[3 * i + 1], u[3 * i + 2]);
    }
    Ok(Input {
        forces,
        joint_vel: JointVector::from_column_slice(&u[12..24]),
    })
}

// ---------------------------------------------------------------------------
// Configuration

/// Raw robot configuration as read from JSON. Every key is optional and
/// defaults to the documented desk-scale model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    pub mass_kg: f64,
    /// Body box dimensions (x, y, z), m; drives the default inertia and hip
    /// placement.
    pub body_size_m: [f64; 3],
    /// Explicit inertia tensor (row-major 3×3); when absent, a homogeneous
    /// box of `body_size_m` and `mass_kg` is used.
    pub inertia_tensor: Option<[[f64; 3]; 3]>,
    pub gravity: [f64; 3],
    pub link_lengths: LinkLengths,
    /// Yaw splay of the zero configuration, rad from body +x, one per leg
    /// (LF, RF, LH, RH).
    pub yaw_zero_rad: [f64; 4],
    pub hip_yaw_limit_rad: [f64; 2],
    pub hip_pitch_limit_rad: [f64; 2],
    pub knee_limit_rad: [f64; 2],
    /// Nominal standing joint angles (yaw, pitch, knee), shared by all legs.
    pub nominal_leg_angles_rad: [f64; 3],
    pub gear_ratio: f64,
    pub actuator_peak_torque_nm: f64,
    pub actuator_max_speed_rpm: f64,
    pub magnet: MagnetConfig,
}

impl Default for RobotConfig {
    fn default() -> Self {
        RobotConfig {
            mass_kg: 11.3,
            body_size_m: [0.30, 0.30, 0.10],
            inertia_tensor: None,
            gravity: [0.0, 0.0, -9.81],
            link_lengths: LinkLengths {
                hip_m: 0.08,
                upper_m: 0.22,
                lower_m: 0.22,
            },
            yaw_zero_rad: [
                core::f64::consts::FRAC_PI_4,
                -core::f64::consts::FRAC_PI_4,
                3.0 * core::f64::consts::FRAC_PI_4,
                -3.0 * core::f64::consts::FRAC_PI_4,
            ],
            hip_yaw_limit_rad: [-1.57, 1.57],
            hip_pitch_limit_rad: [-2.9, 2.9],
            knee_limit_rad: [-2.9, 2.9],
            nominal_leg_angles_rad: [0.0, -0.6, 2.2],
            gear_ratio: 18.0,
            actuator_peak_torque_nm: 40.0,
            actuator_max_speed_rpm: 100.0,
            magnet: MagnetConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MagnetConfig {
    pub f_max_flat_n: f64,
    pub f_hold_normal_n: f64,
    pub f_hold_lateral_n: f64,
    pub t_switch_on_s: f64,
    pub t_switch_off_s: f64,
    pub pulses_for_full_force: u32,
    pub f_min_attach_n: f64,
}

impl Default for MagnetConfig {
    fn default() -> Self {
        MagnetConfig {
            f_max_flat_n: 380.0,
            f_hold_normal_n: 280.0,
            f_hold_lateral_n: 160.0,
            t_switch_on_s: 0.18,
            t_switch_off_s: 0.35,
            pulses_for_full_force: 2,
            f_min_attach_n: 20.0,
        }
    }
}

/// Parse and validate a JSON robot configuration.
pub fn load_model(config_text: &str) -> Result<(RobotModel, MagnetParams), ModelError> {
    let config: RobotConfig =
        serde_json::from_str(config_text).map_err(|e| ModelError::Parse(e.to_string()))?;
    build_model(&config)
}

/// Validate a parsed configuration and construct the model.
pub fn build_model(config: &RobotConfig) -> Result<(RobotModel, MagnetParams), ModelError> {
    if !(config.mass_kg > 0.0 && config.mass_kg.is_finite()) {
        return Err(invalid("mass_kg", format!("{} must be > 0", config.mass_kg)));
    }
    for (i, &d) in config.body_size_m.iter().enumerate() {
        if !(d > 0.0 && d.is_finite()) {
            return Err(invalid("body_size_m", format!("component {i} = {d} must be > 0")));
        }
    }
    let ll = &config.link_lengths;
    for (name, v) in [("hip_m", ll.hip_m), ("upper_m", ll.upper_m), ("lower_m", ll.lower_m)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid("link_lengths", format!("{name} = {v} must be > 0")));
        }
    }
    if !config.gravity.iter().all(|g| g.is_finite()) {
        return Err(invalid("gravity", "components must be finite"));
    }

    let inertia = match config.inertia_tensor {
        Some(rows) => Matrix3::from_fn(|r, c| rows[r][c]),
        None => box_inertia(config.mass_kg, config.body_size_m),
    };
    validate_inertia(&inertia)?;

    let limit_pairs = [
        ("hip_yaw_limit_rad", config.hip_yaw_limit_rad),
        ("hip_pitch_limit_rad", config.hip_pitch_limit_rad),
        ("knee_limit_rad", config.knee_limit_rad),
    ];
    for (key, [lo, hi]) in limit_pairs {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid_limit(key, lo, hi));
        }
    }
    if !(config.actuator_peak_torque_nm > 0.0) {
        return Err(invalid("actuator_peak_torque_nm", "must be > 0"));
    }
    if !(config.actuator_max_speed_rpm > 0.0) {
        return Err(invalid("actuator_max_speed_rpm", "must be > 0"));
    }
    if !(config.gear_ratio > 0.0) {
        return Err(invalid("gear_ratio", "must be > 0"));
    }

    let vel_max = config.actuator_max_speed_rpm * core::f64::consts::PI / 30.0;
    let joint_limit = |bounds: [f64; 2]| JointLimit {
        pos_min_rad: bounds[0],
        pos_max_rad: bounds[1],
        vel_max_rad_s: vel_max,
        torque_max_nm: config.actuator_peak_torque_nm,
    };
    let leg_limits = [
        joint_limit(config.hip_yaw_limit_rad),
        joint_limit(config.hip_pitch_limit_rad),
        joint_limit(config.knee_limit_rad),
    ];

    let hx = config.body_size_m[0] / 2.0;
    let hy = config.body_size_m[1] / 2.0;
    let hip_offsets = [
        Vector3::new(hx, hy, 0.0),
        Vector3::new(hx, -hy, 0.0),
        Vector3::new(-hx, hy, 0.0),
        Vector3::new(-hx, -hy, 0.0),
    ];

    let mut nominal = JointVector::zeros();
    for leg in 0..LEG_COUNT {
        for j in 0..JOINTS_PER_LEG {
            let a = config.nominal_leg_angles_rad[j];
            let lim = &leg_limits[j];
            if a < lim.pos_min_rad || a > lim.pos_max_rad {
                return Err(invalid(
                    "nominal_leg_angles_rad",
                    format!("joint {j} angle {a} outside limits"),
                ));
            }
            nominal[leg * JOINTS_PER_LEG + j] = a;
        }
    }

    let magnet = build_magnet_params(&config.magnet)?;

    let model = RobotModel {
        mass_kg: config.mass_kg,
        inertia_tensor: inertia,
        gravity_vec: Vector3::from_column_slice(&config.gravity),
        leg_count: LEG_COUNT,
        hip_offsets,
        yaw_zero_rad: config.yaw_zero_rad,
        link_lengths: [*ll; LEG_COUNT],
        joint_limits: [leg_limits; LEG_COUNT],
        nominal_joint_angles: nominal,
        gear_ratio: config.gear_ratio,
        actuator_peak_torque_nm: config.actuator_peak_torque_nm,
        actuator_max_speed_rad_s: vel_max,
    };
    Ok((model, magnet))
}

fn invalid_limit(key: &'static str, lo: f64, hi: f64) -> ModelError {
    invalid(key, format!("bounds [{lo}, {hi}] must be finite with min < max"))
}

fn build_magnet_params(c: &MagnetConfig) -> Result<MagnetParams, ModelError> {
    if !(c.f_hold_normal_n > 0.0 && c.f_hold_normal_n <= c.f_max_flat_n) {
        return Err(invalid(
            "magnet.f_hold_normal_n",
            format!("{} must be in (0, f_max_flat = {}]", c.f_hold_normal_n, c.f_max_flat_n),
        ));
    }
    if !(c.f_hold_lateral_n > 0.0) {
        return Err(invalid("magnet.f_hold_lateral_n", "must be > 0"));
    }
    if !(c.t_switch_on_s > 0.0 && c.t_switch_off_s > 0.0) {
        return Err(invalid("magnet.t_switch_on_s", "switching times must be > 0"));
    }
    if c.pulses_for_full_force == 0 {
        return Err(invalid("magnet.pulses_for_full_force", "must be >= 1"));
    }
    if !(c.f_min_attach_n > 0.0) {
        return Err(invalid("magnet.f_min_attach_n", "must be > 0"));
    }
    Ok(MagnetParams {
        f_max_flat_n: c.f_max_flat_n,
        f_hold_normal_n: c.f_hold_normal_n,
        f_hold_lateral_n: c.f_hold_lateral_n,
        t_switch_on_s: c.t_switch_on_s,
        t_switch_off_s: c.t_switch_off_s,
        pulses_for_full_force: c.pulses_for_full_force,
        f_min_attach_n: c.f_min_attach_n,
    })
}

/// Homogeneous-box inertia about the body origin.
fn box_inertia(mass: f64, [a, b, c]: [f64; 3]) -> Matrix3<f64> {
    let k = mass / 12.0;
    Matrix3::from_diagonal(&Vector3::new(
        k * (b * b + c * c),
        k * (a * a + c * c),
        k * (a * a + b * b),
    ))
}

fn validate_inertia(inertia: &Matrix3<f64>) -> Result<(), ModelError> {
    if !inertia.iter().all(|v| v.is_finite()) {
        return Err(invalid("inertia_tensor", "components must be finite"));
    }
    let asym = (inertia - inertia.transpose()).norm();
    if asym > 1e-9 {
        return Err(invalid("inertia_tensor", format!("not symmetric (‖I−Iᵀ‖ = {asym})")));
    }
    if inertia.cholesky().is_none() {
        return Err(invalid("inertia_tensor", "not positive definite"));
    }
    Ok(())
}

/// Convenience default model, equivalent to `load_model("{}")`.
pub fn default_model() -> (RobotModel, MagnetParams) {
    build_model(&RobotConfig::default()).expect("default config is valid")
}
