//! Ground-to-wall transition: perceive the wall from a synthetic depth
//! cloud, plan the six-step foothold sequence, and play it back
//! kinematically while checking support and reach.

use nalgebra::Vector3;
use serde::Serialize;

use magnecko_core::kinematics::LegChain;
use magnecko_core::model::{LegId, RobotModel, LEG_COUNT};
use magnecko_core::terrain::{
    fit_plane, plan_transition, synth_point_cloud, CameraPose, Environment, Pose,
    StanceDescription, TerrainError, TransitionPlan,
};

use crate::scenario::{stand_height, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum TransitionError {
    #[error("terrain: {0}")]
    Terrain(#[from] TerrainError),
    #[error("playback check failed: {0}")]
    Playback(String),
}

/// Summary of one planned and kinematically replayed transition.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionReport {
    pub steps: usize,
    pub duration_s: f64,
    /// Angle between the true wall normal and the fitted plane, rad.
    pub normal_error_rad: f64,
    /// Fewest feet attached at any playback sample.
    pub min_attached: usize,
    /// Largest hip-to-foot distance over the playback, m.
    pub max_reach_m: f64,
    /// Kinematic reach limit (sum of link lengths), m.
    pub reach_limit_m: f64,
    /// Final base pitch above horizontal, rad (≈ π/2 on the wall).
    pub final_pitch_rad: f64,
}

/// Nominal stance on flat ground with the base at `base_x`.
pub fn ground_stance(model: &RobotModel, base_x: f64) -> StanceDescription {
    let base = Pose {
        position: Vector3::new(base_x, 0.0, stand_height(model)),
        rotation: nalgebra::Matrix3::identity(),
    };
    let mut footholds = [Vector3::zeros(); LEG_COUNT];
    for leg in LegId::ALL {
        let chain = LegChain::new(model, leg);
        let i = leg.index();
        let q = Vector3::new(
            model.nominal_joint_angles[3 * i],
            model.nominal_joint_angles[3 * i + 1],
            model.nominal_joint_angles[3 * i + 2],
        );
        footholds[i] = base.position + base.rotation * chain.foot_position_body(&q);
    }
    StanceDescription {
        base,
        footholds,
        surface_normal: Vector3::z(),
    }
}

/// Perceive the wall of a corner environment from the robot's viewpoint.
pub fn perceive_wall(
    env: &Environment,
    base: &Pose,
    wall_x: f64,
    seed: u64,
) -> Result<magnecko_core::terrain::PlanePatch, TerrainError> {
    let camera = CameraPose::look_at(
        base.position + Vector3::new(0.1, 0.0, 0.05),
        Vector3::new(wall_x, 0.0, base.position.z + 0.3),
        Vector3::z(),
    );
    let cloud = synth_point_cloud(&camera, env, 60f64.to_radians(), (48, 36), 0.002, seed);
    fit_plane(&cloud, 0.5)
}

/// Plan the corner transition of `scenario` and replay it kinematically.
pub fn run_transition(scenario: &Scenario) -> Result<TransitionReport, TransitionError> {
    let (model, _magnet) = crate::scenario::scenario_model();
    run_transition_with(&model, scenario)
}

pub fn run_transition_with(
    model: &RobotModel,
    scenario: &Scenario,
) -> Result<TransitionReport, TransitionError> {
    let wall_x = scenario.corner_distance_m;
    let env = Environment::corner(wall_x);
    let stance = ground_stance(model, 0.0);
    let detected = perceive_wall(&env, &stance.base, wall_x, scenario.seed)?;
    let normal_error_rad = detected
        .normal
        .dot(&-Vector3::x())
        .clamp(-1.0, 1.0)
        .acos();

    let gait = scenario.gait();
    let plan = plan_transition(&stance, &detected, model, &gait, 3.0)?;
    let report = playback(model, &plan)?;
    Ok(TransitionReport {
        steps: plan.steps.len(),
        duration_s: plan.duration_s,
        normal_error_rad,
        min_attached: report.0,
        max_reach_m: report.1,
        reach_limit_m: reach_limit(model),
        final_pitch_rad: plan.base_pose(plan.duration_s).pitch_rad(),
    })
}

fn reach_limit(model: &RobotModel) -> f64 {
    let ll = &model.link_lengths[0];
    ll.hip_m + ll.upper_m + ll.lower_m
}

/// Sample the plan and verify support and reach throughout; returns
/// `(min_attached, max_reach)`.
fn playback(model: &RobotModel, plan: &TransitionPlan) -> Result<(usize, f64), TransitionError> {
    let limit = reach_limit(model);
    let mut min_attached = LEG_COUNT;
    let mut max_reach = 0.0f64;
    let samples = (plan.duration_s / 0.02).ceil() as usize;
    for k in 0..=samples {
        let t = plan.duration_s * k as f64 / samples as f64;
        let base = plan.base_pose(t);
        let feet = plan.foot_positions(t);
        let attached = plan.attached(t);
        let n_attached = attached.iter().filter(|a| **a).count();
        min_attached = min_attached.min(n_attached);
        if n_attached < LEG_COUNT - 1 {
            return Err(TransitionError::Playback(format!(
                "only {n_attached} feet attached at t = {t:.2}"
            )));
        }
        for leg in LegId::ALL {
            let hip = base.position + base.rotation * model.hip_offsets[leg.index()];
            let reach = (feet[leg.index()] - hip).norm();
            max_reach = max_reach.max(reach);
            if reach > limit {
                return Err(TransitionError::Playback(format!(
                    "{} foothold {reach:.3} m exceeds reach {limit:.3} m at t = {t:.2}",
                    leg.short_name()
                )));
            }
        }
    }
    Ok((min_attached, max_reach))
}
