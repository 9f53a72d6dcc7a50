//! Quaternion and rotation algebra for the base attitude.
//!
//! Quaternions are Hamilton convention, scalar-first `(w, x, y, z)`, with the
//! angular velocity expressed in the body frame. `C(ξ)` maps body-frame
//! vectors into the inertial frame.

#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{Matrix3, Quaternion, Vector3};

/// Tolerance on `|‖ξ‖ − 1|` beyond which a quaternion is rejected as non-unit.
pub const UNIT_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SpatialError {
    #[error("quaternion norm {norm} deviates from 1 by more than {UNIT_NORM_TOL}")]
    NonUnitQuaternion { norm: f64 },
}

/// Hamilton product `a ∘ b`.
pub fn quat_product(a: &Quaternion<f64>, b: &Quaternion<f64>) -> Quaternion<f64> {
    Quaternion::new(
        a.w * b.w - a.i * b.i - a.j * b.j - a.k * b.k,
        a.w * b.i + a.i * b.w + a.j * b.k - a.k * b.j,
        a.w * b.j - a.i * b.k + a.j * b.w + a.k * b.i,
        a.w * b.k + a.i * b.j - a.j * b.i + a.k * b.w,
    )
}

/// Rotation matrix `C(ξ)` of a unit quaternion, checked against [`UNIT_NORM_TOL`].
pub fn quat_to_rot(xi: &Quaternion<f64>) -> Result<Matrix3<f64>, SpatialError> {
    let norm = xi.norm();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(SpatialError::NonUnitQuaternion { norm });
    }
    Ok(quat_to_rot_unchecked(xi))
}

/// Rotation matrix of a quaternion assumed unit (no norm check).
pub fn quat_to_rot_unchecked(xi: &Quaternion<f64>) -> Matrix3<f64> {
    let (w, x, y, z) = (xi.w, xi.i, xi.j, xi.k);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Orientation error 3-vector between `xi` and `xi_ref`.
///
/// Vector part of `ξ ∘ ξ_ref*`, with the sign flipped onto the shortest
/// rotation so the antipodal pair `±ξ` maps to the same error.
pub fn quat_error(xi: &Quaternion<f64>, xi_ref: &Quaternion<f64>) -> Vector3<f64> {
    let err = quat_product(xi, &xi_ref.conjugate());
    let v = Vector3::new(err.i, err.j, err.k);
    if err.w < 0.0 {
        -v
    } else {
        v
    }
}

/// Kinematic quaternion rate `ξ̇ = ½ ξ ∘ (0, ω)` with body-frame `ω`.
pub fn quat_derivative(xi: &Quaternion<f64>, omega: &Vector3<f64>) -> Quaternion<f64> {
    let omega_quat = Quaternion::new(0.0, omega.x, omega.y, omega.z);
    0.5 * quat_product(xi, &omega_quat)
}

/// Renormalized copy; leaves an exactly-zero quaternion untouched.
pub fn normalized(xi: &Quaternion<f64>) -> Quaternion<f64> {
    let n = xi.norm();
    if n == 0.0 {
        *xi
    } else {
        xi / n
    }
}

/// Skew-symmetric cross-product matrix `[v]×`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_quat(rng: &mut StdRng) -> Quaternion<f64> {
        Quaternion::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
    }

    fn random_unit_quat(rng: &mut StdRng) -> Quaternion<f64> {
        loop {
            let q = random_quat(rng);
            if q.norm() > 1e-3 {
                return normalized(&q);
            }
        }
    }

    #[test]
    fn product_identity() {
        let id = Quaternion::new(1.0, 0.0, 0.0, 0.0);
        let q = Quaternion::new(0.3, -0.1, 0.7, 0.2);
        assert_eq!(quat_product(&id, &q), q);
        assert_eq!(quat_product(&q, &id), q);
    }

    #[test]
    fn product_i_squared_is_minus_one() {
        let i = Quaternion::new(0.0, 1.0, 0.0, 0.0);
        let p = quat_product(&i, &i);
        assert_eq!(p, Quaternion::new(-1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn product_norm_multiplicative() {
        // Oracle: ‖a∘b‖ = ‖a‖·‖b‖, so unit inputs give a unit product.
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..200 {
            let a = random_unit_quat(&mut rng);
            let b = random_unit_quat(&mut rng);
            assert_abs_diff_eq!(quat_product(&a, &b).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rot_of_identity() {
        let id = Quaternion::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(quat_to_rot(&id).unwrap(), Matrix3::identity());
    }

    #[test]
    fn rot_quarter_turn_about_z() {
        let half = core::f64::consts::FRAC_PI_4;
        let q = Quaternion::new(half.cos(), 0.0, 0.0, half.sin());
        let c = quat_to_rot(&q).unwrap();
        let mapped = c * Vector3::new(1.0, 0.0, 0.0);
        assert_relative_eq!(mapped, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn rot_is_orthonormal() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..200 {
            let q = random_unit_quat(&mut rng);
            let c = quat_to_rot(&q).unwrap();
            assert_relative_eq!(c.transpose() * c, Matrix3::identity(), epsilon = 1e-12);
            assert_abs_diff_eq!(c.determinant(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rot_rejects_non_unit() {
        let q = Quaternion::new(1.1, 0.0, 0.0, 0.0);
        assert!(quat_to_rot(&q).is_err());
    }

    #[test]
    fn error_zero_for_equal_and_antipodal() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let q = random_unit_quat(&mut rng);
            assert_abs_diff_eq!(quat_error(&q, &q).norm(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(quat_error(&(-q), &q).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn error_matches_log_map_for_small_angles() {
        // Oracle: for ξ = exp(θ/2 · a) and identity reference, the
        // rotation-vector log map gives θ·a, while the error vector is
        // sin(θ/2)·a. Recover θ·a from the error and compare.
        let id = Quaternion::new(1.0, 0.0, 0.0, 0.0);
        for &theta in &[1e-4, 1e-3, 1e-2, 0.05, 0.1] {
            let q = Quaternion::new((theta / 2.0).cos(), (theta / 2.0).sin(), 0.0, 0.0);
            let e = quat_error(&q, &id);
            let recovered = 2.0 * e.norm().asin();
            assert_relative_eq!(recovered, theta, max_relative = 1e-9);
            assert_relative_eq!(e / e.norm(), Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_direct_case() {
        let id = Quaternion::new(1.0, 0.0, 0.0, 0.0);
        let rate = quat_derivative(&id, &Vector3::new(0.0, 0.0, 2.0));
        assert_eq!(rate, Quaternion::new(0.0, 0.0, 0.0, 1.0));
        assert_eq!(
            quat_derivative(&id, &Vector3::zeros()),
            Quaternion::new(0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn derivative_tangent_to_unit_sphere() {
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..200 {
            let q = random_unit_quat(&mut rng);
            let w = Vector3::new(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            );
            let dq = quat_derivative(&q, &w);
            let inner = q.w * dq.w + q.i * dq.i + q.j * dq.j + q.k * dq.k;
            assert_abs_diff_eq!(inner, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rot_is_product_homomorphism() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let a = random_unit_quat(&mut rng);
            let b = random_unit_quat(&mut rng);
            let lhs = quat_to_rot(&normalized(&quat_product(&a, &b))).unwrap();
            let rhs = quat_to_rot(&a).unwrap() * quat_to_rot(&b).unwrap();
            assert_relative_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn rk4_constant_rate_matches_axis_angle() {
        // Integrate ξ̇ = ½ξ∘(0,ω) for constant ω with RK4 at dt = 1e-3 and
        // compare against the closed-form axis-angle rotation ωt.
        let omega = Vector3::new(0.4, -0.8, 0.3);
        let t_end = 1.0;
        let dt = 1e-3;
        let mut q = Quaternion::new(1.0, 0.0, 0.0, 0.0);
        let steps = (t_end / dt) as usize;
        for _ in 0..steps {
            let k1 = quat_derivative(&q, &omega);
            let k2 = quat_derivative(&(q + 0.5 * dt * k1), &omega);
            let k3 = quat_derivative(&(q + 0.5 * dt * k2), &omega);
            let k4 = quat_derivative(&(q + dt * k3), &omega);
            q = normalized(&(q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)));
        }
        let angle = omega.norm() * t_end;
        let axis = omega / omega.norm();
        let half = angle / 2.0;
        let expected = Quaternion::new(
            half.cos(),
            half.sin() * axis.x,
            half.sin() * axis.y,
            half.sin() * axis.z,
        );
        let c_got = quat_to_rot(&q).unwrap();
        let c_exp = quat_to_rot(&expected).unwrap();
        assert_relative_eq!(c_got, c_exp, epsilon = 1e-6);
    }
}
