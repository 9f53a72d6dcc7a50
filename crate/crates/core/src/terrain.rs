//! Surfaces and environments: planar ferrous patches, local terrain frames,
//! synthetic depth sensing with least-squares plane fitting, and the planner
//! for 90° concave corner transitions.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix3, Rotation3, UnitQuaternion, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gait::{quintic_step, swing_reference, GaitParams};
use crate::kinematics::LegChain;
use crate::model::{LegId, RobotModel, LEG_COUNT};

/// Lateral vs normal holding force of the magnetic foot.
pub const DEFAULT_MU: f64 = 160.0 / 280.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TerrainError {
    #[error("surface normal must be nonzero")]
    ZeroNormal,
    #[error("need at least 3 points to fit a plane, got {0}")]
    TooFewPoints(usize),
    #[error("points are collinear or otherwise degenerate")]
    DegeneratePoints,
    #[error("target plane is not ferrous")]
    NotFerrous,
    #[error("corner angle {found_deg:.1}° is outside 90° ± {tol_deg:.0}°")]
    CornerAngle { found_deg: f64, tol_deg: f64 },
    #[error("detected plane does not face the robot (not a concave corner)")]
    NotConcave,
    #[error("invalid patch: {0}")]
    InvalidPatch(&'static str),
}

/// Finite planar surface patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanePatch {
    /// A point on the plane, m.
    pub point: Vector3<f64>,
    /// Unit outward normal (towards the robot side).
    pub normal: Vector3<f64>,
    /// Boundary polygon in the tangent coordinates of [`terrain_frame`],
    /// relative to `point`.
    pub bounds: Vec<Vector2<f64>>,
    /// Surface friction coefficient.
    pub mu: f64,
    /// Whether magnets can attach at all.
    pub ferrous: bool,
    /// Adhesion derating in `[0, 1]` for dirty or cracked surfaces.
    pub quality: f64,
}

impl PlanePatch {
    /// Rectangular patch centered on `point` with the given tangent half-extents.
    pub fn rect(
        point: Vector3<f64>,
        normal: Vector3<f64>,
        half_x: f64,
        half_y: f64,
    ) -> Result<PlanePatch, TerrainError> {
        if half_x <= 0.0 || half_y <= 0.0 {
            return Err(TerrainError::InvalidPatch("degenerate bounds"));
        }
        let n = normal.norm();
        if n < 1e-12 {
            return Err(TerrainError::ZeroNormal);
        }
        Ok(PlanePatch {
            point,
            normal: normal / n,
            bounds: alloc::vec![
                Vector2::new(-half_x, -half_y),
                Vector2::new(half_x, -half_y),
                Vector2::new(half_x, half_y),
                Vector2::new(-half_x, half_y),
            ],
            mu: DEFAULT_MU,
            ferrous: true,
            quality: 1.0,
        })
    }

    /// Terrain-frame rotation `C_TI` of this patch.
    pub fn terrain_rotation(&self) -> Matrix3<f64> {
        terrain_frame(&self.normal).expect("patch normal validated at construction")
    }

    /// Signed distance of a world point along the normal.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(&(p - self.point))
    }

    /// Orthogonal projection of a world point onto the plane.
    pub fn project(&self, p: &Vector3<f64>) -> Vector3<f64> {
        p - self.signed_distance(p) * self.normal
    }

    /// Tangent coordinates of a world point in this patch's terrain frame.
    pub fn local_coords(&self, p: &Vector3<f64>) -> Vector2<f64> {
        let local = self.terrain_rotation() * (p - self.point);
        Vector2::new(local.x, local.y)
    }

    /// Whether the in-plane projection of `p` falls inside the bounds polygon.
    pub fn contains_projection(&self, p: &Vector3<f64>) -> bool {
        point_in_polygon(&self.local_coords(p), &self.bounds)
    }

    /// Clamp a world point into the patch interior (with `margin` from the
    /// boundary), assuming rectangular-ish bounds.
    pub fn clamp_into(&self, p: &Vector3<f64>, margin: f64) -> Vector3<f64> {
        let local = self.local_coords(&self.project(p));
        let (mut lo, mut hi) = (self.bounds[0], self.bounds[0]);
        for b in &self.bounds {
            lo = lo.inf(b);
            hi = hi.sup(b);
        }
        let clamped = Vector2::new(
            local.x.clamp(lo.x + margin, hi.x - margin),
            local.y.clamp(lo.y + margin, hi.y - margin),
        );
        let c = self.terrain_rotation().transpose();
        self.point + c * Vector3::new(clamped.x, clamped.y, 0.0)
    }
}

/// Even-odd point-in-polygon test.
fn point_in_polygon(p: &Vector2<f64>, poly: &[Vector2<f64>]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Collection of patches forming a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub patches: Vec<PlanePatch>,
}

impl Environment {
    /// Flat ferrous ground at z = 0.
    pub fn ground() -> Environment {
        Environment {
            patches: alloc::vec![PlanePatch::rect(
                Vector3::zeros(),
                Vector3::z(),
                10.0,
                10.0
            )
            .unwrap()],
        }
    }

    /// Vertical wall in the y-z plane at x = 0, normal pointing −x; the robot
    /// climbs on the −x side.
    pub fn wall() -> Environment {
        Environment {
            patches: alloc::vec![PlanePatch::rect(
                Vector3::new(0.0, 0.0, 2.5),
                -Vector3::x(),
                2.5,
                2.0
            )
            .unwrap()],
        }
    }

    /// Ferrous ceiling at the given height, normal pointing down.
    pub fn ceiling(height: f64) -> Environment {
        Environment {
            patches: alloc::vec![PlanePatch::rect(
                Vector3::new(0.0, 0.0, height),
                -Vector3::z(),
                10.0,
                10.0
            )
            .unwrap()],
        }
    }

    /// Concave 90° corner: ground running up to a wall at `x = wall_x`.
    pub fn corner(wall_x: f64) -> Environment {
        let ground = PlanePatch::rect(
            Vector3::new(wall_x - 5.0, 0.0, 0.0),
            Vector3::z(),
            5.0,
            5.0,
        )
        .unwrap();
        let wall = PlanePatch::rect(
            Vector3::new(wall_x, 0.0, 2.5),
            -Vector3::x(),
            2.5,
            2.0,
        )
        .unwrap();
        debug_assert!(ground.normal.dot(&wall.normal).abs() < 1e-9);
        Environment {
            patches: alloc::vec![ground, wall],
        }
    }

    /// Patch whose surface passes within `tol` of `p` (projection in bounds).
    pub fn patch_near(&self, p: &Vector3<f64>, tol: f64) -> Option<(usize, &PlanePatch)> {
        self.patches
            .iter()
            .enumerate()
            .filter(|(_, patch)| {
                patch.signed_distance(p).abs() <= tol && patch.contains_projection(p)
            })
            .min_by(|a, b| {
                a.1.signed_distance(p)
                    .abs()
                    .total_cmp(&b.1.signed_distance(p).abs())
            })
    }

    /// First patch hit by the ray `origin + t·dir`, `t > 0`; returns `(t, index)`.
    pub fn raycast(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, patch) in self.patches.iter().enumerate() {
            let denom = patch.normal.dot(dir);
            if denom.abs() < 1e-12 {
                continue;
            }
            let t = patch.normal.dot(&(patch.point - origin)) / denom;
            if t <= 1e-9 {
                continue;
            }
            if patch.contains_projection(&(origin + t * dir))
                && best.map_or(true, |(bt, _)| t < bt)
            {
                best = Some((t, i));
            }
        }
        best
    }
}

/// Rotation `C_TI` from the inertial frame into the local terrain frame.
///
/// The third row is the unit normal, so `(C_TI · λ).z` is the normal force
/// component. The first row is the projection of inertial x onto the tangent
/// plane (inertial y when the normal is parallel to x); right-handed.
pub fn terrain_frame(normal: &Vector3<f64>) -> Result<Matrix3<f64>, TerrainError> {
    let n_norm = normal.norm();
    if n_norm < 1e-12 {
        return Err(TerrainError::ZeroNormal);
    }
    let n = normal / n_norm;
    let mut t1 = Vector3::x() - n.x * n;
    if t1.norm() < 1e-6 {
        t1 = Vector3::y() - n.y * n;
    }
    t1.normalize_mut();
    let t2 = n.cross(&t1);
    Ok(Matrix3::from_rows(&[
        t1.transpose(),
        t2.transpose(),
        n.transpose(),
    ]))
}

/// Depth camera pose; the optical axis is camera +z, image x right, image y down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: Vector3<f64>,
    /// Camera-to-inertial rotation.
    pub rotation: Matrix3<f64>,
}

impl CameraPose {
    /// Aim the optical axis from `position` at `target`, with image-up
    /// opposing `up`.
    pub fn look_at(position: Vector3<f64>, target: Vector3<f64>, up: Vector3<f64>) -> CameraPose {
        let z = (target - position).normalize();
        let x = up.cross(&z).normalize();
        let y = z.cross(&x);
        CameraPose {
            position,
            rotation: Matrix3::from_columns(&[x, y, z]),
        }
    }
}

/// Organized depth scan: row-major `width × height` grid of hit points.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthCloud {
    pub width: usize,
    pub height: usize,
    pub camera: CameraPose,
    /// `None` where the ray escaped the scene.
    pub pixels: Vec<Option<Vector3<f64>>>,
}

impl DepthCloud {
    pub fn points(&self) -> impl Iterator<Item = &Vector3<f64>> {
        self.pixels.iter().flatten()
    }

    /// Ray range (camera to point) at a pixel.
    pub fn range(&self, col: usize, row: usize) -> Option<f64> {
        self.pixels[row * self.width + col].map(|p| (p - self.camera.position).norm())
    }

    /// Hit points of the central window covering `fraction` of each image axis.
    pub fn central_points(&self, fraction: f64) -> Vec<Vector3<f64>> {
        let half_w = fraction.clamp(0.0, 1.0) * self.width as f64 / 2.0;
        let half_h = fraction.clamp(0.0, 1.0) * self.height as f64 / 2.0;
        let (cx, cy) = ((self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0);
        let mut out = Vec::new();
        for row in 0..self.height {
            for col in 0..self.width {
                if (col as f64 - cx).abs() <= half_w
                    && (row as f64 - cy).abs() <= half_h
                {
                    if let Some(p) = self.pixels[row * self.width + col] {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

/// Ray-cast a synthetic depth image against the environment.
///
/// `fov_rad` is the horizontal field of view; the vertical one scales by the
/// aspect ratio. Gaussian noise of standard deviation `noise_sigma` perturbs
/// each range along its ray; the result is deterministic for a given seed.
pub fn synth_point_cloud(
    camera: &CameraPose,
    env: &Environment,
    fov_rad: f64,
    resolution: (usize, usize),
    noise_sigma: f64,
    seed: u64,
) -> DepthCloud {
    let (width, height) = resolution;
    assert!(width > 0 && height > 0, "resolution must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = Vec::with_capacity(width * height);
    let half_fov = fov_rad / 2.0;
    let aspect = height as f64 / width as f64;
    for row in 0..height {
        for col in 0..width {
            let ax = ((col as f64 + 0.5) / width as f64 * 2.0 - 1.0) * half_fov;
            let ay = ((row as f64 + 0.5) / height as f64 * 2.0 - 1.0) * half_fov * aspect;
            let dir_cam = Vector3::new(ax.tan(), ay.tan(), 1.0).normalize();
            let dir = camera.rotation * dir_cam;
            match env.raycast(&camera.position, &dir) {
                Some((t, _)) => {
                    let range = t + noise_sigma * standard_normal(&mut rng);
                    pixels.push(Some(camera.position + range * dir));
                }
                None => pixels.push(None),
            }
        }
    }
    DepthCloud {
        width,
        height,
        camera: *camera,
        pixels,
    }
}

/// Box–Muller standard normal sample.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

/// Least-squares plane through `points`, normal oriented towards `toward`.
///
/// The normal is the right singular vector of the centered point matrix with
/// the smallest singular value.
pub fn fit_plane_points(
    points: &[Vector3<f64>],
    toward: &Vector3<f64>,
) -> Result<PlanePatch, TerrainError> {
    if points.len() < 3 {
        return Err(TerrainError::TooFewPoints(points.len()));
    }
    let centroid: Vector3<f64> = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let mut m = DMatrix::zeros(points.len(), 3);
    for (i, p) in points.iter().enumerate() {
        m.set_row(i, &(p - centroid).transpose());
    }
    let svd = m.svd(false, true);
    let sigma = &svd.singular_values;
    // Collinear clouds have a rank-1 centered matrix.
    if sigma[1] < 1e-9 * sigma[0].max(1e-30) {
        return Err(TerrainError::DegeneratePoints);
    }
    let v_t = svd.v_t.expect("requested");
    let mut normal = Vector3::new(v_t[(2, 0)], v_t[(2, 1)], v_t[(2, 2)]);
    if normal.dot(&(toward - centroid)) < 0.0 {
        normal = -normal;
    }
    // Bounds: bounding box of the in-plane spread.
    let frame = terrain_frame(&normal)?;
    let mut half = Vector2::new(1e-3_f64, 1e-3_f64);
    for p in points {
        let local = frame * (p - centroid);
        half.x = half.x.max(local.x.abs());
        half.y = half.y.max(local.y.abs());
    }
    PlanePatch::rect(centroid, normal, half.x, half.y)
}

/// Fit a plane to the central window of an organized depth scan.
pub fn fit_plane(cloud: &DepthCloud, central_fraction: f64) -> Result<PlanePatch, TerrainError> {
    let points = cloud.central_points(central_fraction);
    fit_plane_points(&points, &cloud.camera.position)
}

/// Base pose waypoint of a transition plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    /// Body-to-inertial rotation.
    pub rotation: Matrix3<f64>,
}

impl Pose {
    /// Pitch of the body x-axis above the horizontal plane.
    pub fn pitch_rad(&self) -> f64 {
        let x_b = self.rotation.column(0);
        x_b.z.asin()
    }
}

/// One foot relocation during a corner transition.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionStep {
    pub foot: LegId,
    pub start_foothold: Vector3<f64>,
    pub target_foothold: Vector3<f64>,
    /// Normal of the plane the foot lands on.
    pub target_normal: Vector3<f64>,
    /// Normal of the plane the foot lifts off from.
    pub start_normal: Vector3<f64>,
    pub base_start: Pose,
    pub base_end: Pose,
    pub start_time_s: f64,
    pub duration_s: f64,
}

/// Ordered six-step corner transition plan with sampled trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPlan {
    pub steps: Vec<TransitionStep>,
    pub swing_apex_m: f64,
    pub duration_s: f64,
    /// Footholds before the first step.
    pub initial_footholds: [Vector3<f64>; LEG_COUNT],
    pub initial_base: Pose,
}

/// Fraction of each step spent in swing, centered in the step.
const SWING_WINDOW: (f64, f64) = (0.2, 0.8);

impl TransitionPlan {
    fn step_index(&self, t: f64) -> usize {
        let mut acc = 0.0;
        for (i, s) in self.steps.iter().enumerate() {
            acc += s.duration_s;
            if t < acc {
                return i;
            }
        }
        self.steps.len() - 1
    }

    /// Base pose reference at plan time `t`.
    pub fn base_pose(&self, t: f64) -> Pose {
        let k = self.step_index(t.max(0.0));
        let step = &self.steps[k];
        let tau = ((t - step.start_time_s) / step.duration_s).clamp(0.0, 1.0);
        let s = quintic_step(tau);
        let position = step.base_start.position.lerp(&step.base_end.position, s);
        let qa = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
            step.base_start.rotation,
        ));
        let qb = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
            step.base_end.rotation,
        ));
        let rotation = qa.slerp(&qb, s).to_rotation_matrix().into_inner();
        Pose { position, rotation }
    }

    /// Foot position references at plan time `t`.
    pub fn foot_positions(&self, t: f64) -> [Vector3<f64>; LEG_COUNT] {
        let mut feet = self.initial_footholds;
        let k = self.step_index(t.max(0.0));
        for step in &self.steps[..k] {
            feet[step.foot.index()] = step.target_foothold;
        }
        let step = &self.steps[k];
        let tau = ((t - step.start_time_s) / step.duration_s).clamp(0.0, 1.0);
        let (w0, w1) = SWING_WINDOW;
        if tau >= w1 {
            feet[step.foot.index()] = step.target_foothold;
        } else if tau > w0 {
            let swing_t = (tau - w0) / (w1 - w0);
            let s = quintic_step(swing_t);
            let chord = step
                .start_foothold
                .lerp(&step.target_foothold, s);
            let bump_n = (step.start_normal + step.target_normal).normalize();
            let (height, _) = swing_reference(1.0, self.swing_apex_m, swing_t);
            feet[step.foot.index()] = chord + height * bump_n;
        }
        feet
    }

    /// Which feet are attached at plan time `t` (the swinging foot is not).
    pub fn attached(&self, t: f64) -> [bool; LEG_COUNT] {
        let mut attached = [true; LEG_COUNT];
        let k = self.step_index(t.max(0.0));
        let step = &self.steps[k];
        let tau = (t - step.start_time_s) / step.duration_s;
        if tau > SWING_WINDOW.0 && tau < SWING_WINDOW.1 {
            attached[step.foot.index()] = false;
        }
        attached
    }
}

/// Current support configuration the transition starts from.
#[derive(Debug, Clone, PartialEq)]
pub struct StanceDescription {
    pub base: Pose,
    pub footholds: [Vector3<f64>; LEG_COUNT],
    /// Normal of the surface currently stood on.
    pub surface_normal: Vector3<f64>,
}

pub const CORNER_ANGLE_TOL_DEG: f64 = 15.0;

/// Plan a six-step transition onto a detected plane forming a ~90° concave
/// corner with the current surface.
///
/// Order: both front feet onto the new plane, two adjustment steps bringing
/// the hind feet towards the corner on the old plane, then both hind feet
/// onto the new plane. The base pose follows the blended surface normal of
/// the attached feet, so the reorientation interleaves with the steps.
pub fn plan_transition(
    stance: &StanceDescription,
    detected: &PlanePatch,
    model: &RobotModel,
    gait: &GaitParams,
    step_duration_s: f64,
) -> Result<TransitionPlan, TerrainError> {
    if !detected.ferrous {
        return Err(TerrainError::NotFerrous);
    }
    let cos = stance.surface_normal.dot(&detected.normal).clamp(-1.0, 1.0);
    let angle_deg = cos.acos().to_degrees();
    if (angle_deg - 90.0).abs() > CORNER_ANGLE_TOL_DEG {
        return Err(TerrainError::CornerAngle {
            found_deg: angle_deg,
            tol_deg: CORNER_ANGLE_TOL_DEG,
        });
    }
    if detected.signed_distance(&stance.base.position) < 0.0 {
        return Err(TerrainError::NotConcave);
    }

    // Standing height above the current surface, reused on the new plane.
    let centroid: Vector3<f64> =
        stance.footholds.iter().sum::<Vector3<f64>>() / LEG_COUNT as f64;
    let height = stance.surface_normal.dot(&(stance.base.position - centroid));

    // Nominal foothold of each leg in the body frame.
    let nominal_body: [Vector3<f64>; LEG_COUNT] = core::array::from_fn(|i| {
        let leg = LegId::from_index(i).unwrap();
        let chain = LegChain::new(model, leg);
        let q = Vector3::new(
            model.nominal_joint_angles[3 * i],
            model.nominal_joint_angles[3 * i + 1],
            model.nominal_joint_angles[3 * i + 2],
        );
        chain.foot_position_body(&q)
    });

    let old_normal = stance.surface_normal;
    let new_normal = detected.normal;
    let order = [
        LegId::LeftFront,
        LegId::RightFront,
        LegId::LeftHind,
        LegId::RightHind,
        LegId::LeftHind,
        LegId::RightHind,
    ];
    // Surface each step lands on: front feet and the final hind steps go to
    // the new plane; the adjustment steps stay on the old one.
    let to_new = [true, true, false, false, true, true];

    let mut footholds = stance.footholds;
    let mut normals = [old_normal; LEG_COUNT];
    let mut base_prev = stance.base;
    let mut steps: Vec<TransitionStep> = Vec::with_capacity(order.len());
    for (k, (&foot, &lands_new)) in order.iter().zip(&to_new).enumerate() {
        let start_foothold = footholds[foot.index()];
        let start_normal = normals[foot.index()];
        let target_normal = if lands_new { new_normal } else { old_normal };

        // Predicted attachment mix after this step sets the base attitude.
        let mut post_normals = normals;
        post_normals[foot.index()] = target_normal;
        let n_avg = post_normals
            .iter()
            .sum::<Vector3<f64>>()
            .normalize();
        let rotation = attitude_from_normal(&n_avg);

        // Fixed point between base placement and nominal-foothold projection.
        let mut post_feet = footholds;
        post_feet[foot.index()] = if lands_new {
            detected.project(&start_foothold)
        } else {
            start_foothold
        };
        let mut base_pos = base_prev.position;
        for _ in 0..4 {
            let c = post_feet.iter().sum::<Vector3<f64>>() / LEG_COUNT as f64;
            base_pos = c + height * n_avg;
            let pose = Pose {
                position: base_pos,
                rotation,
            };
            let nominal_world = pose.position + pose.rotation * nominal_body[foot.index()];
            let target = if lands_new {
                detected.clamp_into(&nominal_world, 0.02)
            } else {
                nominal_world - old_normal.dot(&(nominal_world - centroid)) * old_normal
            };
            post_feet[foot.index()] = target;
        }

        let base_end = Pose {
            position: base_pos,
            rotation,
        };
        steps.push(TransitionStep {
            foot,
            start_foothold,
            target_foothold: post_feet[foot.index()],
            target_normal,
            start_normal,
            base_start: base_prev,
            base_end,
            start_time_s: k as f64 * step_duration_s,
            duration_s: step_duration_s,
        });
        footholds = post_feet;
        normals = post_normals;
        base_prev = base_end;
    }

    Ok(TransitionPlan {
        duration_s: steps.len() as f64 * step_duration_s,
        steps,
        swing_apex_m: gait.swing_apex_m,
        initial_footholds: stance.footholds,
        initial_base: stance.base,
    })
}

/// Body attitude whose z-axis matches the support normal, heading chosen so
/// the body y-axis stays lateral (the robot walks toward, then up, the corner).
fn attitude_from_normal(n: &Vector3<f64>) -> Matrix3<f64> {
    let z_b = n.normalize();
    let x_b = z_b.cross(&Vector3::new(0.0, -1.0, 0.0)).normalize();
    let y_b = z_b.cross(&x_b);
    Matrix3::from_columns(&[x_b, y_b, z_b])
}
