//! Single-rigid-body + kinematics ODE, its RK4 integration, and its
//! linearization for the solver.
//!
//! The state rate stacks `[ṗ, v̇, ξ̇, ω̇, q̇_j]`: the base translates under
//! gravity and the summed ground reaction forces, the attitude follows the
//! quaternion kinematics, and the Euler equation turns foot torques (about
//! the CoM, taken at the base origin) into body-frame angular acceleration.
//! Joint velocities pass through from the input.

#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{Matrix3, Matrix4, Quaternion, SMatrix, Vector3};

use crate::kinematics::LegChain;
use crate::model::{
    pack_state, unpack_state, Input, LegId, RobotModel, State, StateVector, INPUT_DIM, STATE_DIM,
};
use crate::spatial::{
    normalized, quat_derivative, quat_to_rot_unchecked, skew, SpatialError, UNIT_NORM_TOL,
};

/// Rigidly attached point mass used by the plant for model-mismatch
/// experiments. The controller model never carries one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Payload {
    pub mass_kg: f64,
    /// Attachment point in the body frame.
    pub offset_body: Vector3<f64>,
}

/// Evaluation context for the ODE. Foot lever arms are recomputed from the
/// current state on every call.
#[derive(Clone)]
pub struct DynamicsContext<'a> {
    pub model: &'a RobotModel,
    pub payload: Option<Payload>,
}

impl<'a> DynamicsContext<'a> {
    pub fn new(model: &'a RobotModel) -> Self {
        DynamicsContext {
            model,
            payload: None,
        }
    }

    pub fn with_payload(model: &'a RobotModel, payload: Payload) -> Self {
        DynamicsContext {
            model,
            payload: Some(payload),
        }
    }

    fn total_mass(&self) -> f64 {
        self.model.mass_kg + self.payload.map_or(0.0, |p| p.mass_kg)
    }

    /// Inertia about the base origin including the payload point mass.
    fn total_inertia(&self) -> Matrix3<f64> {
        let mut inertia = self.model.inertia_tensor;
        if let Some(p) = self.payload {
            let o = p.offset_body;
            inertia += p.mass_kg * (Matrix3::identity() * o.norm_squared() - o * o.transpose());
        }
        inertia
    }
}

/// State rate of the SRBD + kinematics model, flat 25-vector layout.
///
/// Errors when the state quaternion deviates from unit norm by more than
/// the spatial tolerance.
pub fn srbd_derivative(
    state: &State,
    input: &Input,
    ctx: &DynamicsContext,
) -> Result<StateVector, SpatialError> {
    let norm = state.xi.norm();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(SpatialError::NonUnitQuaternion { norm });
    }
    Ok(derivative_unchecked(state, input, ctx))
}

/// Same as [`srbd_derivative`] without the unit-norm gate; rotation matrices
/// are built from the normalized quaternion so intermediate RK4 stages stay
/// well defined.
pub fn derivative_unchecked(state: &State, input: &Input, ctx: &DynamicsContext) -> StateVector {
    let model = ctx.model;
    let c = quat_to_rot_unchecked(&normalized(&state.xi));
    let mass = ctx.total_mass();
    let inertia = ctx.total_inertia();

    let mut force_sum = Vector3::zeros();
    let mut torque_body = Vector3::zeros();
    for leg in LegId::ALL {
        let lambda = input.forces[leg.index()];
        force_sum += lambda;
        let r_body = LegChain::new(model, leg).foot_position_body(&state.joint_angles(leg));
        // Cᵀ((C r_b) × λ) = r_b × (Cᵀ λ)
        torque_body += r_body.cross(&(c.transpose() * lambda));
    }
    if let Some(p) = ctx.payload {
        torque_body += p.offset_body.cross(&(c.transpose() * (p.mass_kg * model.gravity_vec)));
    }

    let v_dot = model.gravity_vec + force_sum / mass;
    let omega = state.omega;
    let omega_dot = inertia
        .cholesky()
        .expect("inertia validated PD")
        .solve(&(torque_body - omega.cross(&(inertia * omega))));
    let xi_dot = quat_derivative(&state.xi, &omega);

    let mut rate = StateVector::zeros();
    rate.fixed_rows_mut::<3>(0).copy_from(&state.v);
    rate.fixed_rows_mut::<3>(3).copy_from(&v_dot);
    rate[6] = xi_dot.w;
    rate[7] = xi_dot.i;
    rate[8] = xi_dot.j;
    rate[9] = xi_dot.k;
    rate.fixed_rows_mut::<3>(10).copy_from(&omega_dot);
    rate.fixed_rows_mut::<12>(13).copy_from(&input.joint_vel);
    rate
}

/// One RK4 step of the SRBD ODE followed by quaternion renormalization.
pub fn integrate(
    state: &State,
    input: &Input,
    dt: f64,
    ctx: &DynamicsContext,
) -> Result<State, SpatialError> {
    let norm = state.xi.norm();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(SpatialError::NonUnitQuaternion { norm });
    }
    let x0 = pack_state(state);
    let eval = |x: &StateVector| {
        let s = unpack_state(x.as_slice()).expect("fixed dimension");
        derivative_unchecked(&s, input, ctx)
    };
    let k1 = eval(&x0);
    let k2 = eval(&(x0 + 0.5 * dt * k1));
    let k3 = eval(&(x0 + 0.5 * dt * k2));
    let k4 = eval(&(x0 + dt * k3));
    let mut x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    let xi = normalized(&Quaternion::new(x1[6], x1[7], x1[8], x1[9]));
    x1[6] = xi.w;
    x1[7] = xi.i;
    x1[8] = xi.j;
    x1[9] = xi.k;
    Ok(unpack_state(x1.as_slice()).expect("fixed dimension"))
}

/// Left-multiplication matrix: `∂(a∘b)/∂b = L(a)`.
pub(crate) fn quat_left_matrix(a: &Quaternion<f64>) -> Matrix4<f64> {
    Matrix4::new(
        a.w, -a.i, -a.j, -a.k, //
        a.i, a.w, -a.k, a.j, //
        a.j, a.k, a.w, -a.i, //
        a.k, -a.j, a.i, a.w,
    )
}

/// Right-multiplication matrix: `∂(a∘b)/∂a = R(b)`.
pub(crate) fn quat_right_matrix(b: &Quaternion<f64>) -> Matrix4<f64> {
    Matrix4::new(
        b.w, -b.i, -b.j, -b.k, //
        b.i, b.w, b.k, -b.j, //
        b.j, -b.k, b.w, b.i, //
        b.k, b.j, -b.i, b.w,
    )
}

/// Continuous-time Jacobians `(A, B)` of [`srbd_derivative`].
///
/// All blocks are analytic except `∂ω̇/∂ξ`, which is finite-differenced.
pub fn linearize(
    state: &State,
    input: &Input,
    ctx: &DynamicsContext,
) -> (
    SMatrix<f64, STATE_DIM, STATE_DIM>,
    SMatrix<f64, STATE_DIM, INPUT_DIM>,
) {
    let model = ctx.model;
    let mass = ctx.total_mass();
    let inertia = ctx.total_inertia();
    let inertia_inv = inertia.try_inverse().expect("inertia validated PD");
    let c = quat_to_rot_unchecked(&normalized(&state.xi));

    let mut a = SMatrix::<f64, STATE_DIM, STATE_DIM>::zeros();
    let mut b = SMatrix::<f64, STATE_DIM, INPUT_DIM>::zeros();

    // ṗ = v
    a.fixed_view_mut::<3, 3>(0, 3).copy_from(&Matrix3::identity());

    // v̇ = g + Σλ/m
    for i in 0..4 {
        b.fixed_view_mut::<3, 3>(3, 3 * i)
            .copy_from(&(Matrix3::identity() / mass));
    }

    // ξ̇ = ½ ξ ∘ (0, ω)
    let omega_quat = Quaternion::new(0.0, state.omega.x, state.omega.y, state.omega.z);
    let dxidot_dxi = 0.5 * quat_right_matrix(&omega_quat);
    a.fixed_view_mut::<4, 4>(6, 6).copy_from(&dxidot_dxi);
    let l = quat_left_matrix(&state.xi);
    // (0, ω) selector: columns 1..4 of L.
    let dxidot_domega = 0.5 * l.fixed_view::<4, 3>(0, 1).into_owned();
    a.fixed_view_mut::<4, 3>(6, 10).copy_from(&dxidot_domega);

    // ω̇ = I⁻¹(Cᵀ Σ rᵢ×λᵢ − ω×(Iω))  (+ constant payload torque)
    let domega_dot_domega =
        inertia_inv * (skew(&(inertia * state.omega)) - skew(&state.omega) * inertia);
    a.fixed_view_mut::<3, 3>(10, 10).copy_from(&domega_dot_domega);
    for leg in LegId::ALL {
        let i = leg.index();
        let chain = LegChain::new(model, leg);
        let q = state.joint_angles(leg);
        let r_world = c * chain.foot_position_body(&q);
        let block = inertia_inv * c.transpose() * skew(&r_world);
        b.fixed_view_mut::<3, 3>(10, 3 * i).copy_from(&block);
        // Through the lever arm: d(rᵢ×λᵢ)/dq = −[λᵢ]× C J_b
        let j_body = chain.jacobian_body(&q);
        let dq_block =
            inertia_inv * c.transpose() * (-skew(&input.forces[i])) * c * j_body;
        a.fixed_view_mut::<3, 3>(10, 13 + 3 * i).copy_from(&dq_block);
    }

    // ∂ω̇/∂ξ by central differences on the quaternion entries.
    let h = 1e-6;
    let x0 = pack_state(state);
    for col in 0..4 {
        let mut xp = x0;
        let mut xm = x0;
        xp[6 + col] += h;
        xm[6 + col] -= h;
        let fp = derivative_unchecked(&unpack_state(xp.as_slice()).unwrap(), input, ctx);
        let fm = derivative_unchecked(&unpack_state(xm.as_slice()).unwrap(), input, ctx);
        let d = (fp.fixed_rows::<3>(10) - fm.fixed_rows::<3>(10)) / (2.0 * h);
        a.fixed_view_mut::<3, 1>(10, 6 + col).copy_from(&d);
    }

    // q̇_j passthrough.
    b.fixed_view_mut::<12, 12>(13, 12)
        .copy_from(&SMatrix::<f64, 12, 12>::identity());

    (a, b)
}

/// RK4 discrete transition `x⁺ = F(x, u)` and its sensitivities, chained
/// from the continuous Jacobians. The trailing quaternion renormalization
/// is not differentiated; its Jacobian is identity to first order on the
/// unit sphere.
pub fn discrete_transition(
    state: &State,
    input: &Input,
    dt: f64,
    ctx: &DynamicsContext,
) -> (
    StateVector,
    SMatrix<f64, STATE_DIM, STATE_DIM>,
    SMatrix<f64, STATE_DIM, INPUT_DIM>,
) {
    type MatA = SMatrix<f64, STATE_DIM, STATE_DIM>;
    type MatB = SMatrix<f64, STATE_DIM, INPUT_DIM>;

    let x0 = pack_state(state);
    let stage = |x: &StateVector| -> (StateVector, MatA, MatB) {
        let s = unpack_state(x.as_slice()).expect("fixed dimension");
        let f = derivative_unchecked(&s, input, ctx);
        let (a, b) = linearize(&s, input, ctx);
        (f, a, b)
    };

    let (k1, a1, b1) = stage(&x0);
    let (k2, a2, b2) = stage(&(x0 + 0.5 * dt * k1));
    let (k3, a3, b3) = stage(&(x0 + 0.5 * dt * k2));
    let (k4, a4, b4) = stage(&(x0 + dt * k3));

    // dkᵢ/dx and dkᵢ/du via the chain rule through the stage states.
    let dk1_dx = a1;
    let dk1_du = b1;
    let dk2_dx = a2 * (MatA::identity() + 0.5 * dt * dk1_dx);
    let dk2_du = a2 * (0.5 * dt * dk1_du) + b2;
    let dk3_dx = a3 * (MatA::identity() + 0.5 * dt * dk2_dx);
    let dk3_du = a3 * (0.5 * dt * dk2_du) + b3;
    let dk4_dx = a4 * (MatA::identity() + dt * dk3_dx);
    let dk4_du = a4 * (dt * dk3_du) + b4;

    let mut x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    let xi = normalized(&Quaternion::new(x1[6], x1[7], x1[8], x1[9]));
    x1[6] = xi.w;
    x1[7] = xi.i;
    x1[8] = xi.j;
    x1[9] = xi.k;

    let a_d = MatA::identity() + dt / 6.0 * (dk1_dx + 2.0 * dk2_dx + 2.0 * dk3_dx + dk4_dx);
    let b_d = dt / 6.0 * (dk1_du + 2.0 * dk2_du + 2.0 * dk3_du + dk4_du);
    (x1, a_d, b_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::foot_position;
    use crate::model::{default_model, pack_input, unpack_input, InputVector, JointVector};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use nalgebra::{UnitQuaternion, UnitVector3};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_state(rng: &mut StdRng) -> State {
        let axis = UnitVector3::new_normalize(Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0f64),
        ));
        let q = UnitQuaternion::from_axis_angle(&axis, rng.gen_range(-3.0..3.0));
        State {
            p: Vector3::from_fn(|_, _| rng.gen_range(-2.0..2.0)),
            v: Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0)),
            xi: *q.quaternion(),
            omega: Vector3::from_fn(|_, _| rng.gen_range(-3.0..3.0)),
            q_j: JointVector::from_fn(|_, _| rng.gen_range(-1.4..1.4)),
        }
    }

    fn random_input(rng: &mut StdRng) -> Input {
        Input {
            forces: [
                Vector3::from_fn(|_, _| rng.gen_range(-60.0..60.0)),
                Vector3::from_fn(|_, _| rng.gen_range(-60.0..60.0)),
                Vector3::from_fn(|_, _| rng.gen_range(-60.0..60.0)),
                Vector3::from_fn(|_, _| rng.gen_range(-60.0..60.0)),
            ],
            joint_vel: JointVector::from_fn(|_, _| rng.gen_range(-5.0..5.0)),
        }
    }

    #[test]
    fn static_equilibrium_under_symmetric_forces() {
        let (model, _) = default_model();
        let ctx = DynamicsContext::new(&model);
        let state = State::rest(model.nominal_joint_angles);
        let per_foot = model.mass_kg * 9.81 / 4.0;
        assert_relative_eq!(per_foot, 27.713, epsilon = 5e-4);
        let mut input = Input::zero();
        for f in input.forces.iter_mut() {
            *f = Vector3::new(0.0, 0.0, per_foot);
        }
        let rate = srbd_derivative(&state, &input, &ctx).unwrap();
        assert_abs_diff_eq!(rate.fixed_rows::<3>(3).norm(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rate.fixed_rows::<3>(10).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn free_fall_acceleration() {
        let (model, _) = default_model();
        let ctx = DynamicsContext::new(&model);
        let state = State::rest(model.nominal_joint_angles);
        let rate = srbd_derivative(&state, &Input::zero(), &ctx).unwrap();
        assert_relative_eq!(
            Vector3::from(rate.fixed_rows::<3>(3)),
            Vector3::new(0.0, 0.0, -9.81),
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_foot_torque_matches_cross_product_oracle() {
        let (model, _) = default_model();
        let ctx = DynamicsContext::new(&model);
        let state = State::rest(model.nominal_joint_angles);
        let force = Vector3::new(0.0, 0.0, 30.0);
        let mut input = Input::zero();
        input.forces[0] = force;
        let rate = srbd_derivative(&state, &input, &ctx).unwrap();
        // Oracle: ω̇ = I⁻¹(r × λ) with r from FK, solved independently.
        let r = foot_position(&model, &state, LegId::LeftFront) - state.p;
        let expected = model
            .inertia_tensor
            .lu()
            .solve(&r.cross(&force))
            .unwrap();
        assert_relative_eq!(
            Vector3::from(rate.fixed_rows::<3>(10)),
            expected,
            epsilon = 1e-10
        );
    }

    #[test]
    fn non_unit_quaternion_rejected() {
        let (model, _) = default_model();
        let ctx = DynamicsContext::new(&model);
        let mut state = State::rest(model.nominal_joint_angles);
        state.xi = Quaternion::new(1.1, 0.0, 0.0, 0.0);
        assert!(srbd_derivative(&state, &Input::zero(), &ctx).is_err());
        assert!(integrate(&state, &Input::zero(), 0.01, &ctx).is_err());
    }

    #[test]
    fn free_fall_velocity_after_one_second() {
        let (model, _) = default_model();
        let ctx = DynamicsContext::new(&model);
        let mut state = State::rest(model.nominal_joint_angles);
        for _ in 0..100 {
            state = integrate(&state, &Input::zero(), 0.01, &ctx).unwrap();
        }
        assert_abs_diff_eq!(state.v.z, -9.81, epsilon = 1e-9);
    }

    #[test]
    fn constant_rotation_matches_axis_angle() {
        let (model, _) = default_model();
        let ctx = DynamicsContext::new(&model);
        // Spin about z with spherical inertia so ω stays constant.
        let mut config = crate::model::RobotConfig::default();
        config.inertia_tensor = Some([[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.1]]);
        let (sph_model, _) = crate::model::build_model(&config).unwrap();
        let sph_ctx = DynamicsContext::new(&sph_model);
        let _ = ctx;
        let mut state = State::rest(model.nominal_joint_angles);
        state.omega = Vector3::new(0.0, 0.0, 1.0);
        let steps = 3142;
        let dt = core::f64::consts::PI / steps as f64;
        for _ in 0..steps {
            state = integrate(&state, &Input::zero(), dt, &sph_ctx).unwrap();
        }
        // 180° about z.
        let expected = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), core::f64::consts::PI);
        let c_got = quat_to_rot_unchecked(&state.xi);
        let c_exp = expected.to_rotation_matrix();
        assert_relative_eq!(c_got, *c_exp.matrix(), epsilon = 1e-6);
    }

    #[test]
    fn zero_input_zero_velocity_keeps_pose_and_joints() {
        let (model, _) = default_model();
        let ctx = DynamicsContext::new(&model);
        let state = State::rest(model.nominal_joint_angles);
        let next = integrate(&state, &Input::zero(), 0.01, &ctx).unwrap();
        assert_eq!(next.p.x, state.p.x);
        assert_eq!(next.p.y, state.p.y);
        assert_eq!(next.q_j, state.q_j);
        assert_eq!(next.xi, state.xi);
    }

    #[test]
    fn trivial_linearization_blocks() {
        let (model, _) = default_model();
        let ctx = DynamicsContext::new(&model);
        let mut rng = StdRng::seed_from_u64(21);
        let state = random_state(&mut rng);
        let input = random_input(&mut rng);
        let (a, b) = linearize(&state, &input, &ctx);
        // ∂ṗ/∂v = I exactly.
        assert_eq!(a.fixed_view::<3, 3>(0, 3).into_owned(), Matrix3::identity());
        // ∂v̇/∂λᵢ = I/m exactly.
        for i in 0..4 {
            assert_eq!(
                b.fixed_view::<3, 3>(3, 3 * i).into_owned(),
                Matrix3::identity() / model.mass_kg
            );
        }
    }

    #[test]
    fn linearization_matches_finite_differences() {
        let (model, _) = default_model();
        let ctx = DynamicsContext::new(&model);
        let mut rng = StdRng::seed_from_u64(22);
        let h = 1e-6;
        for _ in 0..100 {
            let state = random_state(&mut rng);
            let input = random_input(&mut rng);
            let (a, b) = linearize(&state, &input, &ctx);

            let x0 = pack_state(&state);
            let u0 = pack_input(&input);
            let mut a_fd = SMatrix::<f64, STATE_DIM, STATE_DIM>::zeros();
            for col in 0..STATE_DIM {
                let mut xp = x0;
                let mut xm = x0;
                xp[col] += h;
                xm[col] -= h;
                let fp =
                    derivative_unchecked(&unpack_state(xp.as_slice()).unwrap(), &input, &ctx);
                let fm =
                    derivative_unchecked(&unpack_state(xm.as_slice()).unwrap(), &input, &ctx);
                a_fd.set_column(col, &((fp - fm) / (2.0 * h)));
            }
            let mut b_fd = SMatrix::<f64, STATE_DIM, INPUT_DIM>::zeros();
            for col in 0..INPUT_DIM {
                let mut up = u0;
                let mut um = u0;
                up[col] += h;
                um[col] -= h;
                let fp =
                    derivative_unchecked(&state, &unpack_input(up.as_slice()).unwrap(), &ctx);
                let fm =
                    derivative_unchecked(&state, &unpack_input(um.as_slice()).unwrap(), &ctx);
                b_fd.set_column(col, &((fp - fm) / (2.0 * h)));
            }
            let rel_a = (a - a_fd).norm() / a_fd.norm().max(1.0);
            let rel_b = (b - b_fd).norm() / b_fd.norm().max(1.0);
            assert!(rel_a < 1e-5, "A mismatch: rel err {rel_a}");
            assert!(rel_b < 1e-5, "B mismatch: rel err {rel_b}");
        }
    }

    #[test]
    fn discrete_transition_sensitivities_match_fd() {
        let (model, _) = default_model();
        let ctx = DynamicsContext::new(&model);
        let mut rng = StdRng::seed_from_u64(23);
        let dt = 0.02;
        let h = 1e-6;
        for _ in 0..10 {
            let state = random_state(&mut rng);
            let input = random_input(&mut rng);
            let (_, a_d, b_d) = discrete_transition(&state, &input, dt, &ctx);
            // Raw RK4 step without the trailing renormalization, whose
            // radial projection the returned sensitivities do not model.
            let step = |x: &StateVector, u: &InputVector| -> StateVector {
                let inp = unpack_input(u.as_slice()).unwrap();
                let eval = |y: &StateVector| {
                    derivative_unchecked(&unpack_state(y.as_slice()).unwrap(), &inp, &ctx)
                };
                let k1 = eval(x);
                let k2 = eval(&(x + 0.5 * dt * k1));
                let k3 = eval(&(x + 0.5 * dt * k2));
                let k4 = eval(&(x + dt * k3));
                x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            };
            let x0 = pack_state(&state);
            let u0 = pack_input(&input);
            for col in [0usize, 4, 7, 11, 15, 24] {
                let mut xp = x0;
                let mut xm = x0;
                xp[col] += h;
                xm[col] -= h;
                // Keep perturbed quaternions valid for the norm gate.
                let fd = (step(&xp, &u0) - step(&xm, &u0)) / (2.0 * h);
                let diff = (a_d.column(col) - fd).norm();
                assert!(diff < 2e-4, "A_d col {col}: err {diff}");
            }
            for col in [0usize, 5, 13, 20] {
                let mut up = u0;
                let mut um = u0;
                up[col] += h;
                um[col] -= h;
                let fd = (step(&x0, &up) - step(&x0, &um)) / (2.0 * h);
                let diff = (b_d.column(col) - fd).norm();
                assert!(diff < 2e-4, "B_d col {col}: err {diff}");
            }
        }
    }

    #[test]
    fn spherical_inertia_conserves_spin_magnitude() {
        let mut config = crate::model::RobotConfig::default();
        config.inertia_tensor = Some([[0.15, 0.0, 0.0], [0.0, 0.15, 0.0], [0.0, 0.0, 0.15]]);
        let (model, _) = crate::model::build_model(&config).unwrap();
        let ctx = DynamicsContext::new(&model);
        let mut state = State::rest(model.nominal_joint_angles);
        state.omega = Vector3::new(1.2, -0.7, 0.4);
        let norm0 = state.omega.norm();
        for _ in 0..100 {
            state = integrate(&state, &Input::zero(), 0.01, &ctx).unwrap();
        }
        assert_abs_diff_eq!(state.omega.norm(), norm0, epsilon = 1e-8);
    }

    #[test]
    fn free_rotation_conserves_inertial_angular_momentum() {
        let (model, _) = default_model();
        let ctx = DynamicsContext::new(&model);
        let mut state = State::rest(model.nominal_joint_angles);
        state.omega = Vector3::new(1.5, -0.9, 0.6);
        let momentum = |s: &State| {
            quat_to_rot_unchecked(&s.xi) * (model.inertia_tensor * s.omega)
        };
        let l0 = momentum(&state);
        for _ in 0..100 {
            state = integrate(&state, &Input::zero(), 0.01, &ctx).unwrap();
        }
        assert_relative_eq!(momentum(&state), l0, epsilon = 1e-6);
    }

    #[test]
    fn quaternion_norm_after_integration() {
        let (model, _) = default_model();
        let ctx = DynamicsContext::new(&model);
        let mut rng = StdRng::seed_from_u64(24);
        for _ in 0..50 {
            let state = random_state(&mut rng);
            let input = random_input(&mut rng);
            let next = integrate(&state, &input, 0.02, &ctx).unwrap();
            assert_abs_diff_eq!(next.xi.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn payload_shifts_dynamics() {
        let (model, _) = default_model();
        let payload = Payload {
            mass_kg: 7.5,
            offset_body: Vector3::new(0.05, 0.0, 0.08),
        };
        let ctx = DynamicsContext::with_payload(&model, payload);
        let base_ctx = DynamicsContext::new(&model);
        let state = State::rest(model.nominal_joint_angles);
        let mut input = Input::zero();
        for f in input.forces.iter_mut() {
            *f = Vector3::new(0.0, 0.0, model.mass_kg * 9.81 / 4.0);
        }
        // Forces that balance the bare model no longer balance the loaded one.
        let rate = srbd_derivative(&state, &input, &ctx).unwrap();
        let bare = srbd_derivative(&state, &input, &base_ctx).unwrap();
        assert_abs_diff_eq!(bare.fixed_rows::<3>(3).norm(), 0.0, epsilon = 1e-10);
        assert!(rate.fixed_rows::<3>(3).norm() > 1.0);
        assert!(rate.fixed_rows::<3>(10).norm() > 0.1);

        // Zero-mass payload is bitwise neutral.
        let zero_ctx = DynamicsContext::with_payload(
            &model,
            Payload {
                mass_kg: 0.0,
                offset_body: Vector3::new(0.1, 0.0, 0.0),
            },
        );
        let with_zero = srbd_derivative(&state, &input, &zero_ctx).unwrap();
        assert_eq!(with_zero, bare);
    }
}
