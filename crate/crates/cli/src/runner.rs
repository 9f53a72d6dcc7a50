//! Closed-loop scenario execution and the trajectory CSV log.
//!
//! # CSV schema
//!
//! One row per logged instant (every `LOG_PERIOD_S`), comma separated, with
//! a fixed header. Floats use Rust's shortest round-trip formatting, so a
//! parsed file reproduces the in-memory values bit for bit. Columns:
//!
//! | columns | content |
//! |---|---|
//! | `t` | simulation time, s |
//! | `px,py,pz` | base position, m |
//! | `vx,vy,vz` | base velocity, m/s |
//! | `qw,qx,qy,qz` | base orientation quaternion (scalar first) |
//! | `wx,wy,wz` | body angular velocity, rad/s |
//! | `j0..j11` | joint angles, rad |
//! | `jd0..jd11` | applied joint velocities, rad/s |
//! | `f{leg}{x,y,z}` for leg 0..3 | ground-reaction force per foot, N |
//! | `m0..m3` | magnet holding capacity per foot, N |
//! | `s0..s3` | foot status: 0 detached, 1 attaching, 2 attached |
//! | `tau0..tau11` | joint torques, N·m |
//! | `rx,ry,rz` | commanded reference base position, m |
//! | `events` | `;`-joined `FOOT:kind` tokens for this interval, may be empty |

use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;

use magnecko_core::model::{JointVector, LegId, State, JOINT_COUNT, LEG_COUNT};
use magnecko_core::sim::{
    sim_step, ActuatorModel, FootStatus, SimEvent, SimEventKind, SimState, DEFAULT_SIM_DT_S,
};

use crate::controller::{Controller, ControllerStats, IkController, MpcController};
use crate::metrics::MetricsReport;
use crate::scenario::{initial_sim_state, scenario_model, ControllerKind, Scenario, SurfaceFrame};

/// Interval between trajectory log rows, s.
pub const LOG_PERIOD_S: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("scenario error: {0}")]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error("controller failed at t = {time_s:.3} s: {message}")]
    Controller { time_s: f64, message: String },
    #[error("controller diverged at t = {time_s:.3} s (KKT residual blow-up)")]
    Divergence { time_s: f64 },
    #[error("adhesion failure: {count} slip/pull-off events, first at t = {first_s:.3} s")]
    AdhesionFailure { count: usize, first_s: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed trajectory log: {0}")]
    Malformed(String),
}

/// One logged instant of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub state: State,
    /// Joint velocities applied by the plant at this instant.
    pub joint_vel: JointVector,
    pub foot_forces: [Vector3<f64>; LEG_COUNT],
    pub magnet_forces: [f64; LEG_COUNT],
    pub foot_status: [u8; LEG_COUNT],
    pub joint_torques: JointVector,
    pub reference_position: Vector3<f64>,
    pub events: Vec<(LegId, String)>,
}

/// Everything produced by one closed-loop run.
#[derive(Debug)]
pub struct RunOutcome {
    pub rows: Vec<TrajectoryRow>,
    pub events: Vec<SimEvent>,
    pub metrics: MetricsReport,
    pub stats: ControllerStats,
    pub final_state: SimState,
}

fn status_code(status: FootStatus) -> u8 {
    match status {
        FootStatus::Detached => 0,
        FootStatus::Attaching { .. } => 1,
        FootStatus::Attached => 2,
    }
}

fn event_token(kind: &SimEventKind) -> String {
    match kind {
        SimEventKind::Touchdown { patch_index } => format!("touchdown@{patch_index}"),
        SimEventKind::AttachComplete => "attach_complete".to_string(),
        SimEventKind::Released => "released".to_string(),
        SimEventKind::Slip => "slip".to_string(),
        SimEventKind::PullOff => "pull_off".to_string(),
    }
}

/// Run a scenario closed loop. Adhesion failures and solver divergence are
/// returned as errors *after* the outcome has been assembled, so callers that
/// want the partial trajectory can use [`run_scenario_outcome`].
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutcome, RunError> {
    let outcome = run_scenario_outcome(scenario)?;
    if let Some(t) = outcome.stats.divergence_at_s {
        return Err(RunError::Divergence { time_s: t });
    }
    let failures: Vec<&SimEvent> = outcome
        .events
        .iter()
        .filter(|e| matches!(e.kind, SimEventKind::Slip | SimEventKind::PullOff))
        .collect();
    if let Some(first) = failures.first() {
        return Err(RunError::AdhesionFailure {
            count: failures.len(),
            first_s: first.time_s,
        });
    }
    Ok(outcome)
}

/// Run a scenario to completion (or divergence) and return the outcome
/// regardless of failure events.
pub fn run_scenario_outcome(scenario: &Scenario) -> Result<RunOutcome, RunError> {
    scenario.validate()?;
    let (model, magnet) = scenario_model();
    let env = scenario.environment();
    let (sim, frame) = initial_sim_state(scenario, &model, &magnet, &env)?;
    let gait_params = scenario.gait();
    let velocity = scenario.speed_m_s * frame.travel;

    let mut controller: Box<dyn Controller> = match scenario.controller {
        ControllerKind::Mpc => Box::new(
            MpcController::new(
                model.clone(),
                magnet,
                env.clone(),
                &gait_params,
                scenario.duration_s,
                velocity,
                frame.attitude,
                frame.normal,
                sim.state.p,
                scenario.control_rate_hz,
            )
            .map_err(|e| RunError::Controller {
                time_s: 0.0,
                message: e.to_string(),
            })?,
        ),
        ControllerKind::DiffIk => Box::new(
            IkController::new(
                model.clone(),
                magnet,
                env.clone(),
                &gait_params,
                scenario.duration_s,
                velocity,
                frame.normal,
            )
            .map_err(|e| RunError::Controller {
                time_s: 0.0,
                message: e.to_string(),
            })?,
        ),
    };

    run_loop(
        scenario, &model, &magnet, &env, frame, sim, velocity, controller.as_mut(),
    )
}

#[allow(clippy::too_many_arguments)]
fn run_loop(
    scenario: &Scenario,
    model: &magnecko_core::model::RobotModel,
    magnet: &magnecko_core::model::MagnetParams,
    env: &magnecko_core::terrain::Environment,
    _frame: SurfaceFrame,
    mut sim: SimState,
    velocity: Vector3<f64>,
    controller: &mut dyn Controller,
) -> Result<RunOutcome, RunError> {
    let actuators = ActuatorModel::default();
    let dt = DEFAULT_SIM_DT_S;
    let steps = (scenario.duration_s / dt).round() as usize;
    let log_every = (LOG_PERIOD_S / dt).round().max(1.0) as usize;
    let anchor = sim.state.p;

    let mut rows = Vec::with_capacity(steps / log_every + 1);
    let mut all_events = Vec::new();
    let mut pending_events: Vec<(LegId, String)> = Vec::new();
    let mut last_forces = [Vector3::zeros(); LEG_COUNT];
    let mut last_torques = JointVector::zeros();

    let log_row = |sim: &SimState,
                   forces: &[Vector3<f64>; LEG_COUNT],
                   torques: &JointVector,
                   events: Vec<(LegId, String)>| TrajectoryRow {
        t: sim.time_s,
        state: sim.state,
        joint_vel: sim.last_joint_vel,
        foot_forces: *forces,
        magnet_forces: core::array::from_fn(|i| sim.feet[i].magnet_force_n),
        foot_status: core::array::from_fn(|i| status_code(sim.feet[i].status)),
        joint_torques: *torques,
        reference_position: anchor + velocity * sim.time_s,
        events,
    };

    rows.push(log_row(&sim, &last_forces, &last_torques, Vec::new()));
    for k in 0..steps {
        let cmd = controller.control(&sim).map_err(|e| RunError::Controller {
            time_s: sim.time_s,
            message: e.to_string(),
        })?;
        let out = sim_step(&sim, &cmd, &actuators, model, magnet, env, dt);
        controller.observe(&out.events);
        for e in &out.events {
            if std::env::var_os("MAGNECKO_DEBUG").is_some() {
                eprintln!("event t={:.4} {} {:?}", e.time_s, e.foot.short_name(), e.kind);
            }
            pending_events.push((e.foot, event_token(&e.kind)));
            all_events.push(*e);
        }
        sim = out.state;
        last_forces = out.foot_forces;
        last_torques = out.joint_torques;
        if (k + 1) % log_every == 0 {
            rows.push(log_row(
                &sim,
                &last_forces,
                &last_torques,
                std::mem::take(&mut pending_events),
            ));
        }
        if controller.stats().divergence_at_s.is_some() {
            break;
        }
    }

    let metrics = MetricsReport::from_rows(&rows, env, model, velocity, scenario.duration_s);
    Ok(RunOutcome {
        rows,
        events: all_events,
        metrics,
        stats: controller.stats().clone(),
        final_state: sim,
    })
}

/// Serialize rows to the documented CSV schema.
pub fn write_csv<W: Write>(rows: &[TrajectoryRow], mut w: W) -> std::io::Result<()> {
    let mut header: Vec<String> = vec!["t".into()];
    for c in ["px", "py", "pz", "vx", "vy", "vz", "qw", "qx", "qy", "qz", "wx", "wy", "wz"] {
        header.push(c.into());
    }
    for j in 0..JOINT_COUNT {
        header.push(format!("j{j}"));
    }
    for j in 0..JOINT_COUNT {
        header.push(format!("jd{j}"));
    }
    for leg in 0..LEG_COUNT {
        for ax in ["x", "y", "z"] {
            header.push(format!("f{leg}{ax}"));
        }
    }
    for leg in 0..LEG_COUNT {
        header.push(format!("m{leg}"));
    }
    for leg in 0..LEG_COUNT {
        header.push(format!("s{leg}"));
    }
    for j in 0..JOINT_COUNT {
        header.push(format!("tau{j}"));
    }
    for c in ["rx", "ry", "rz"] {
        header.push(c.into());
    }
    header.push("events".into());
    writeln!(w, "{}", header.join(","))?;

    for row in rows {
        let mut fields: Vec<String> = Vec::with_capacity(header.len());
        fields.push(row.t.to_string());
        let s = &row.state;
        for v in [s.p, s.v] {
            fields.extend([v.x.to_string(), v.y.to_string(), v.z.to_string()]);
        }
        fields.extend([
            s.xi.w.to_string(),
            s.xi.i.to_string(),
            s.xi.j.to_string(),
            s.xi.k.to_string(),
        ]);
        fields.extend([s.omega.x.to_string(), s.omega.y.to_string(), s.omega.z.to_string()]);
        for j in 0..JOINT_COUNT {
            fields.push(s.q_j[j].to_string());
        }
        for j in 0..JOINT_COUNT {
            fields.push(row.joint_vel[j].to_string());
        }
        for f in &row.foot_forces {
            fields.extend([f.x.to_string(), f.y.to_string(), f.z.to_string()]);
        }
        for m in &row.magnet_forces {
            fields.push(m.to_string());
        }
        for st in &row.foot_status {
            fields.push(st.to_string());
        }
        for j in 0..JOINT_COUNT {
            fields.push(row.joint_torques[j].to_string());
        }
        let r = &row.reference_position;
        fields.extend([r.x.to_string(), r.y.to_string(), r.z.to_string()]);
        let events = row
            .events
            .iter()
            .map(|(leg, kind)| format!("{}:{kind}", leg.short_name()))
            .collect::<Vec<_>>()
            .join(";");
        fields.push(events);
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_csv_file(rows: &[TrajectoryRow], path: &Path) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(file))
}

fn leg_from_short(s: &str) -> Option<LegId> {
    LegId::ALL.into_iter().find(|l| l.short_name() == s)
}

/// Parse a trajectory CSV back into rows; exact inverse of [`write_csv`].
pub fn read_csv(text: &str) -> Result<Vec<TrajectoryRow>, RunError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| RunError::Malformed("empty file".into()))?;
    let expected_cols = header.split(',').count();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected_cols {
            return Err(RunError::Malformed(format!(
                "line {}: {} fields, expected {expected_cols}",
                lineno + 2,
                fields.len()
            )));
        }
        let mut idx = 0usize;
        let mut next = || {
            let f = fields[idx];
            idx += 1;
            f.parse::<f64>()
                .map_err(|e| RunError::Malformed(format!("line {}: {e}", lineno + 2)))
        };
        let t = next()?;
        let p = Vector3::new(next()?, next()?, next()?);
        let v = Vector3::new(next()?, next()?, next()?);
        let xi = nalgebra::Quaternion::new(next()?, next()?, next()?, next()?);
        let omega = Vector3::new(next()?, next()?, next()?);
        let mut q_j = JointVector::zeros();
        for j in 0..JOINT_COUNT {
            q_j[j] = next()?;
        }
        let mut joint_vel = JointVector::zeros();
        for j in 0..JOINT_COUNT {
            joint_vel[j] = next()?;
        }
        let mut foot_forces = [Vector3::zeros(); LEG_COUNT];
        for f in foot_forces.iter_mut() {
            *f = Vector3::new(next()?, next()?, next()?);
        }
        let mut magnet_forces = [0.0; LEG_COUNT];
        for m in magnet_forces.iter_mut() {
            *m = next()?;
        }
        let mut foot_status = [0u8; LEG_COUNT];
        for s in foot_status.iter_mut() {
            *s = next()? as u8;
        }
        let mut joint_torques = JointVector::zeros();
        for j in 0..JOINT_COUNT {
            joint_torques[j] = next()?;
        }
        let reference_position = Vector3::new(next()?, next()?, next()?);
        let events_field = fields[idx];
        let events = if events_field.is_empty() {
            Vec::new()
        } else {
            events_field
                .split(';')
                .map(|tok| {
                    let (leg, kind) = tok.split_once(':').ok_or_else(|| {
                        RunError::Malformed(format!("bad event token {tok:?}"))
                    })?;
                    let leg = leg_from_short(leg)
                        .ok_or_else(|| RunError::Malformed(format!("bad leg {leg:?}")))?;
                    Ok((leg, kind.to_string()))
                })
                .collect::<Result<Vec<_>, RunError>>()?
        };
        rows.push(TrajectoryRow {
            t,
            state: State {
                p,
                v,
                xi,
                omega,
                q_j,
            },
            joint_vel,
            foot_forces,
            magnet_forces,
            foot_status,
            joint_torques,
            reference_position,
            events,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Quaternion;

    fn sample_rows() -> Vec<TrajectoryRow> {
        let mut state = State::rest(JointVector::from_fn(|i, _| 0.01 * i as f64 - 0.3));
        state.p = Vector3::new(0.1, -0.2, 0.5);
        state.v = Vector3::new(0.15, 1e-17, -3.0e200);
        state.xi = Quaternion::new(0.5, 0.5, -0.5, 0.5);
        state.omega = Vector3::new(-0.1, 0.2, f64::MIN_POSITIVE);
        vec![
            TrajectoryRow {
                t: 0.0,
                state,
                joint_vel: JointVector::from_fn(|i, _| 0.05 * i as f64),
                foot_forces: [
                    Vector3::new(1.0, 2.0, 27.713),
                    Vector3::zeros(),
                    Vector3::new(-5.0, 0.25, 100.0),
                    Vector3::zeros(),
                ],
                magnet_forces: [280.0, 140.0, 0.0, 280.0],
                foot_status: [2, 1, 0, 2],
                joint_torques: JointVector::from_fn(|i, _| (i as f64).sin()),
                reference_position: Vector3::new(0.1, 0.0, 0.5),
                events: vec![
                    (LegId::LeftFront, "touchdown@0".to_string()),
                    (LegId::RightHind, "slip".to_string()),
                ],
            },
            TrajectoryRow {
                t: 0.01,
                state,
                joint_vel: JointVector::zeros(),
                foot_forces: [Vector3::zeros(); LEG_COUNT],
                magnet_forces: [0.0; LEG_COUNT],
                foot_status: [0; LEG_COUNT],
                joint_torques: JointVector::zeros(),
                reference_position: Vector3::zeros(),
                events: Vec::new(),
            },
        ]
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let rows = sample_rows();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let parsed = read_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(rows, parsed);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(read_csv("").is_err());
        let mut buf = Vec::new();
        write_csv(&sample_rows(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text
            .lines()
            .enumerate()
            .map(|(i, l)| {
                if i == 1 {
                    l.rsplit_once(',').unwrap().0.to_string()
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        assert!(read_csv(&truncated).is_err());
    }
}
