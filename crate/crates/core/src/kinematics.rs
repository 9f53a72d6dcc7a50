//! Leg forward kinematics, Jacobians, the torque map for ground reaction
//! force feedforward, and the differential inverse kinematics baseline.
//!
//! Each leg is a serial hip-yaw → hip-pitch → knee chain. The hip yaw axis
//! is perpendicular to the body plane; hip pitch and knee axes are parallel
//! to each other. In the zero configuration the legs are splayed in yaw and
//! stretched horizontally.

#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::model::{Input, JointVector, LegId, RobotModel, State, JOINTS_PER_LEG, LEG_COUNT};
use crate::spatial::quat_to_rot_unchecked;

/// Geometry of one leg's kinematic chain in the body frame.
#[derive(Debug, Clone, Copy)]
pub struct LegChain {
    pub leg: LegId,
    /// Hip yaw joint origin, body frame.
    pub hip_offset: Vector3<f64>,
    /// Yaw of the leg's zero configuration from body +x.
    pub yaw_zero_rad: f64,
    /// Hip yaw rotation axis (perpendicular to the body plane).
    pub yaw_axis: Vector3<f64>,
    pub link_hip_m: f64,
    pub link_upper_m: f64,
    pub link_lower_m: f64,
}

impl LegChain {
    pub fn new(model: &RobotModel, leg: LegId) -> LegChain {
        let i = leg.index();
        LegChain {
            leg,
            hip_offset: model.hip_offsets[i],
            yaw_zero_rad: model.yaw_zero_rad[i],
            yaw_axis: Vector3::z(),
            link_hip_m: model.link_lengths[i].hip_m,
            link_upper_m: model.link_lengths[i].upper_m,
            link_lower_m: model.link_lengths[i].lower_m,
        }
    }

    /// Joint origins and the foot position, body frame.
    fn chain_points(&self, q: &Vector3<f64>) -> ChainPoints {
        let r_yaw = Rotation3::from_axis_angle(&Vector3::z_axis(), self.yaw_zero_rad + q.x);
        let pitch_axis = r_yaw * Vector3::y();
        let r_upper = r_yaw * Rotation3::from_axis_angle(&Vector3::y_axis(), q.y);
        let r_lower = r_upper * Rotation3::from_axis_angle(&Vector3::y_axis(), q.z);
        let hip_pitch = self.hip_offset + r_yaw * Vector3::new(self.link_hip_m, 0.0, 0.0);
        let knee = hip_pitch + r_upper * Vector3::new(self.link_upper_m, 0.0, 0.0);
        let foot = knee + r_lower * Vector3::new(self.link_lower_m, 0.0, 0.0);
        ChainPoints {
            hip_pitch,
            knee,
            foot,
            pitch_axis,
        }
    }

    /// Foot position in the body frame.
    pub fn foot_position_body(&self, q: &Vector3<f64>) -> Vector3<f64> {
        self.chain_points(q).foot
    }

    /// Jacobian of the body-frame foot position with respect to the three
    /// leg joints.
    pub fn jacobian_body(&self, q: &Vector3<f64>) -> Matrix3<f64> {
        let pts = self.chain_points(q);
        let c0 = self.yaw_axis.cross(&(pts.foot - self.hip_offset));
        let c1 = pts.pitch_axis.cross(&(pts.foot - pts.hip_pitch));
        let c2 = pts.pitch_axis.cross(&(pts.foot - pts.knee));
        Matrix3::from_columns(&[c0, c1, c2])
    }
}

struct ChainPoints {
    hip_pitch: Vector3<f64>,
    knee: Vector3<f64>,
    foot: Vector3<f64>,
    pitch_axis: Vector3<f64>,
}

/// Foot position in the inertial frame.
pub fn foot_position(model: &RobotModel, state: &State, leg: LegId) -> Vector3<f64> {
    let chain = LegChain::new(model, leg);
    let c = quat_to_rot_unchecked(&state.xi);
    state.p + c * chain.foot_position_body(&state.joint_angles(leg))
}

/// Inertial-frame foot Jacobian with respect to the leg's three joints.
pub fn foot_jacobian(model: &RobotModel, state: &State, leg: LegId) -> Matrix3<f64> {
    let chain = LegChain::new(model, leg);
    let c = quat_to_rot_unchecked(&state.xi);
    c * chain.jacobian_body(&state.joint_angles(leg))
}

/// Map ground reaction forces to feedforward joint torques, `τ = −Jᵀλ`.
///
/// `λ` is the force the world exerts on the foot (inertial frame); the
/// commanded torque opposes it. Legs with zero force get zero torque.
pub fn feedforward_torques(
    model: &RobotModel,
    state: &State,
    forces: &[Vector3<f64>; LEG_COUNT],
) -> JointVector {
    let mut tau = JointVector::zeros();
    for leg in LegId::ALL {
        let j = foot_jacobian(model, state, leg);
        let t = -j.transpose() * forces[leg.index()];
        tau.fixed_rows_mut::<3>(leg.index() * JOINTS_PER_LEG)
            .copy_from(&t);
    }
    tau
}

/// Commanded base twist, inertial frame.
#[derive(Debug, Clone, Copy)]
pub struct BaseTwist {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

impl BaseTwist {
    pub fn zero() -> BaseTwist {
        BaseTwist {
            linear: Vector3::zeros(),
            angular: Vector3::zeros(),
        }
    }
}

/// Per-foot task for the differential IK step.
#[derive(Debug, Clone, Copy)]
pub enum FootIkTarget {
    /// Hold the foot at a fixed inertial position.
    Stance { position: Vector3<f64> },
    /// Track a swing trajectory sample.
    Swing {
        position: Vector3<f64>,
        velocity: Vector3<f64>,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct DiffIkGains {
    /// Damping applied to singular directions (`λ_dls`).
    pub damping: f64,
    /// Singular values below this threshold are treated as singular.
    pub sigma_threshold: f64,
    /// Proportional gain on foot position error, 1/s.
    pub k_foot: f64,
}

impl Default for DiffIkGains {
    fn default() -> Self {
        DiffIkGains {
            damping: 1e-3,
            sigma_threshold: 1e-2,
            k_foot: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiffIkResult {
    pub joint_vel: JointVector,
    /// Set when every stance leg is singular; the command is zeroed.
    pub all_stance_singular: bool,
    /// Smallest stance-leg singular value encountered.
    pub min_singular_value: f64,
}

/// One damped-least-squares differential IK step.
///
/// Stance feet are driven to stay at their fixed targets while the base
/// follows `twist`; swing feet track their trajectory samples. Joint
/// velocities are uniformly scaled into the actuator speed limit.
pub fn diff_ik_step(
    model: &RobotModel,
    state: &State,
    twist: &BaseTwist,
    targets: &[FootIkTarget; LEG_COUNT],
    gains: &DiffIkGains,
    dt: f64,
) -> DiffIkResult {
    let c = quat_to_rot_unchecked(&state.xi);
    let mut joint_vel = JointVector::zeros();
    let mut stance_count = 0usize;
    let mut singular_stance = 0usize;
    let mut min_sigma = f64::INFINITY;

    // Never command more correction than would close the error within one
    // control period.
    let k_eff = gains.k_foot.min(1.0 / dt.max(1e-6));

    for leg in LegId::ALL {
        let chain = LegChain::new(model, leg);
        let q = state.joint_angles(leg);
        let foot_body = chain.foot_position_body(&q);
        let foot_world = state.p + c * foot_body;
        let j_world = c * chain.jacobian_body(&q);

        let desired = match targets[leg.index()] {
            FootIkTarget::Stance { position } => k_eff * (position - foot_world),
            FootIkTarget::Swing { position, velocity } => {
                velocity + k_eff * (position - foot_world)
            }
        };
        // ẋ_foot = v + ω×(C r) + J q̇  ⇒  J q̇ = ẋ_des − v − ω×(C r)
        let rhs = desired - twist.linear - twist.angular.cross(&(c * foot_body));

        let svd = j_world.svd(true, true);
        let sigma_min = svd.singular_values[2];
        if matches!(targets[leg.index()], FootIkTarget::Stance { .. }) {
            stance_count += 1;
            min_sigma = min_sigma.min(sigma_min);
            if sigma_min < gains.sigma_threshold {
                singular_stance += 1;
            }
        }
        let qd = damped_pinv_solve(&svd, &rhs, gains);
        joint_vel
            .fixed_rows_mut::<3>(leg.index() * JOINTS_PER_LEG)
            .copy_from(&qd);
    }

    if stance_count > 0 && singular_stance == stance_count {
        return DiffIkResult {
            joint_vel: JointVector::zeros(),
            all_stance_singular: true,
            min_singular_value: min_sigma,
        };
    }

    // Uniform scaling into the velocity limit keeps the motion direction.
    let vel_max = model.actuator_max_speed_rad_s;
    let peak = joint_vel.amax();
    if peak > vel_max {
        joint_vel *= vel_max / peak;
    }

    DiffIkResult {
        joint_vel,
        all_stance_singular: false,
        min_singular_value: min_sigma,
    }
}

/// Solve `J q̇ = rhs` through the SVD. Well-conditioned directions are
/// inverted exactly; directions with σ below the threshold are damped with
/// `λ_dls` so the output stays bounded.
fn damped_pinv_solve(
    svd: &nalgebra::SVD<f64, nalgebra::U3, nalgebra::U3>,
    rhs: &Vector3<f64>,
    gains: &DiffIkGains,
) -> Vector3<f64> {
    let u = svd.u.as_ref().expect("svd computed with u");
    let vt = svd.v_t.as_ref().expect("svd computed with v_t");
    let mut qd = Vector3::zeros();
    for i in 0..3 {
        let s = svd.singular_values[i];
        let gain = if s >= gains.sigma_threshold {
            1.0 / s
        } else {
            s / (s * s + gains.damping)
        };
        let coeff = u.column(i).dot(rhs) * gain;
        qd += coeff * vt.row(i).transpose();
    }
    qd
}

/// Joint velocities that keep every foot of `input` consistent with the
/// stance constraint; used by tests and the stance-constraint residual.
pub fn stance_foot_velocity(
    model: &RobotModel,
    state: &State,
    input: &Input,
    leg: LegId,
) -> Vector3<f64> {
    let chain = LegChain::new(model, leg);
    let c = quat_to_rot_unchecked(&state.xi);
    let q = state.joint_angles(leg);
    let foot_body = chain.foot_position_body(&q);
    state.v + c * state.omega.cross(&foot_body) + c * chain.jacobian_body(&q) * input.joint_vel(leg)
}
