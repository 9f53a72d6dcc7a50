//! Scenario configuration: canonical JSON files describing one closed-loop
//! run, plus the world/state construction they imply.

use std::path::PathBuf;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use magnecko_core::dynamics::Payload;
use magnecko_core::gait::GaitParams;
use magnecko_core::kinematics::LegChain;
use magnecko_core::model::{default_model, LegId, MagnetParams, RobotModel, State, LEG_COUNT};
use magnecko_core::sim::SimState;
use magnecko_core::terrain::Environment;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentKind {
    Ground,
    Wall,
    Ceiling,
    /// Ground running into a vertical wall; used by the transition planner.
    Corner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Mpc,
    DiffIk,
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ControllerKind::Mpc => write!(f, "mpc"),
            ControllerKind::DiffIk => write!(f, "diff_ik"),
        }
    }
}

fn default_swing_duration() -> f64 {
    0.4
}
fn default_swing_apex() -> f64 {
    0.05
}
fn default_control_rate() -> f64 {
    25.0
}
fn default_duration() -> f64 {
    20.0
}
fn default_ceiling_height() -> f64 {
    0.8
}
fn default_corner_distance() -> f64 {
    0.55
}

/// One closed-loop run, loadable from canonical JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub environment: EnvironmentKind,
    pub controller: ControllerKind,
    /// Commanded surface-tangent speed, m/s.
    pub speed_m_s: f64,
    /// All-feet stance phase between swings, s.
    pub full_stance_s: f64,
    #[serde(default = "default_swing_duration")]
    pub swing_duration_s: f64,
    #[serde(default = "default_swing_apex")]
    pub swing_apex_m: f64,
    /// Plant-only payload; the controller model never includes it.
    #[serde(default)]
    pub payload_kg: f64,
    #[serde(default)]
    pub payload_offset_m: [f64; 3],
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_control_rate")]
    pub control_rate_hz: f64,
    /// Ceiling scenarios hang at this height, m.
    #[serde(default = "default_ceiling_height")]
    pub ceiling_height_m: f64,
    /// Corner scenarios place the wall this far ahead of the base, m.
    #[serde(default = "default_corner_distance")]
    pub corner_distance_m: f64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Scenario, ScenarioError> {
        Scenario::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.speed_m_s < 0.0 {
            return Err(ScenarioError::Invalid("speed_m_s must be >= 0".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(ScenarioError::Invalid("duration_s must be > 0".into()));
        }
        if !(self.swing_duration_s > 0.0) || self.full_stance_s < 0.0 {
            return Err(ScenarioError::Invalid("invalid gait timing".into()));
        }
        if !(self.control_rate_hz > 0.0) {
            return Err(ScenarioError::Invalid("control_rate_hz must be > 0".into()));
        }
        if self.payload_kg < 0.0 {
            return Err(ScenarioError::Invalid("payload_kg must be >= 0".into()));
        }
        Ok(())
    }

    pub fn gait(&self) -> GaitParams {
        GaitParams {
            swing_duration_s: self.swing_duration_s,
            full_stance_s: self.full_stance_s,
            swing_apex_m: self.swing_apex_m,
            ..GaitParams::default()
        }
        .with_speed(self.speed_m_s)
    }

    pub fn payload(&self) -> Option<Payload> {
        if self.payload_kg > 0.0 {
            Some(Payload {
                mass_kg: self.payload_kg,
                offset_body: Vector3::new(
                    self.payload_offset_m[0],
                    self.payload_offset_m[1],
                    self.payload_offset_m[2],
                ),
            })
        } else {
            None
        }
    }

    pub fn environment(&self) -> Environment {
        match self.environment {
            EnvironmentKind::Ground => Environment::ground(),
            EnvironmentKind::Wall => Environment::wall(),
            EnvironmentKind::Ceiling => Environment::ceiling(self.ceiling_height_m),
            EnvironmentKind::Corner => Environment::corner(self.corner_distance_m),
        }
    }
}

/// Body pose and motion frame implied by a supporting surface.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceFrame {
    /// Body-to-inertial attitude when standing on the surface.
    pub attitude: Matrix3<f64>,
    /// Outward surface normal.
    pub normal: Vector3<f64>,
    /// Unit travel direction for positive commanded speed.
    pub travel: Vector3<f64>,
    /// Point on the surface below/behind the starting base position.
    pub origin: Vector3<f64>,
}

/// Standing height of the base over the surface at the nominal posture.
pub fn stand_height(model: &RobotModel) -> f64 {
    let chain = LegChain::new(model, LegId::LeftFront);
    -chain
        .foot_position_body(&Vector3::new(
            model.nominal_joint_angles[0],
            model.nominal_joint_angles[1],
            model.nominal_joint_angles[2],
        ))
        .z
}

pub fn surface_frame(kind: EnvironmentKind, scenario: &Scenario) -> SurfaceFrame {
    match kind {
        EnvironmentKind::Ground | EnvironmentKind::Corner => SurfaceFrame {
            attitude: Matrix3::identity(),
            normal: Vector3::z(),
            travel: Vector3::x(),
            origin: Vector3::zeros(),
        },
        // Wall in the y-z plane at x = 0, normal −x; the robot climbs in +z
        // with its belly towards the wall.
        EnvironmentKind::Wall => SurfaceFrame {
            attitude: Matrix3::from_columns(&[
                Vector3::z(),         // body x: up the wall
                Vector3::y(),         // body y
                -Vector3::x(),        // body z: off the wall
            ]),
            normal: -Vector3::x(),
            travel: Vector3::z(),
            origin: Vector3::new(0.0, 0.0, 1.0),
        },
        // Hanging upside down under the ceiling, travelling in +x.
        EnvironmentKind::Ceiling => SurfaceFrame {
            attitude: Matrix3::from_columns(&[
                Vector3::x(),
                -Vector3::y(),
                -Vector3::z(),
            ]),
            normal: -Vector3::z(),
            travel: Vector3::x(),
            origin: Vector3::new(0.0, 0.0, scenario.ceiling_height_m),
        },
    }
}

/// Initial plant state: nominal posture standing on the scenario surface
/// with every foot attached at full holding force.
pub fn initial_sim_state(
    scenario: &Scenario,
    model: &RobotModel,
    magnet: &MagnetParams,
    env: &Environment,
) -> Result<(SimState, SurfaceFrame), ScenarioError> {
    let frame = surface_frame(scenario.environment, scenario);
    let q = UnitQuaternion::from_matrix(&frame.attitude);
    let mut state = State::rest(model.nominal_joint_angles);
    state.xi = Quaternion::new(q.w, q.i, q.j, q.k);
    state.p = frame.origin + stand_height(model) * frame.normal;
    let mut sim = SimState::new(state, scenario.payload());
    let attached = sim.attach_nearby(model, env, magnet, 1e-6);
    if attached != LEG_COUNT {
        return Err(ScenarioError::Invalid(format!(
            "only {attached} feet reach the surface at the start pose"
        )));
    }
    Ok((sim, frame))
}

/// Model pair used by every scenario.
pub fn scenario_model() -> (RobotModel, MagnetParams) {
    default_model()
}
