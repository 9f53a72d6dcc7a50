//! Deterministic SVG emission for the standard run figures: the contact
//! force scatter against the adhesion friction cone, the joint torque and
//! speed distributions, and the base speed trace.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use magnecko_core::kinematics::foot_position;
use magnecko_core::model::{LegId, RobotModel, JOINT_COUNT};
use magnecko_core::terrain::Environment;

use crate::metrics::Histogram;
use crate::runner::TrajectoryRow;

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("empty trajectory log")]
    EmptyLog,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

struct Axes {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Axes {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let px = MARGIN + (x - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - 2.0 * MARGIN);
        let py = HEIGHT - MARGIN - (y - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - 2.0 * MARGIN);
        (px, py)
    }
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        s,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>",
        WIDTH / 2.0
    );
    s
}

fn axes_frame(s: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{x_label}</text>",
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{y_label}</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
}

/// Tangential vs (normal + magnet) contact force scatter with the friction
/// boundary `|F_t| = μ·(F_n + F_mag)`.
pub fn force_scatter_svg(
    rows: &[TrajectoryRow],
    env: &Environment,
    model: &RobotModel,
) -> Result<String, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::EmptyLog);
    }
    let mut points = Vec::new();
    let mut mu = magnecko_core::terrain::DEFAULT_MU;
    for row in rows {
        for leg in LegId::ALL {
            let i = leg.index();
            if row.foot_status[i] == 0 {
                continue;
            }
            let p_foot = foot_position(model, &row.state, leg);
            let Some((_, patch)) = env.patch_near(&p_foot, 0.05) else {
                continue;
            };
            mu = patch.mu;
            let f = patch.terrain_rotation() * row.foot_forces[i];
            let augmented = f.z + row.magnet_forces[i];
            let tangential = f.xy().norm();
            points.push((augmented, tangential));
        }
    }
    let x_hi = points
        .iter()
        .map(|p| p.0)
        .fold(1.0f64, f64::max)
        .max(300.0);
    let axes = Axes {
        x_lo: 0.0,
        x_hi: x_hi * 1.05,
        y_lo: 0.0,
        y_hi: (mu * x_hi * 1.05).max(1.0),
    };
    let mut s = svg_open("Contact forces vs adhesion friction cone");
    axes_frame(&mut s, "normal + magnet force [N]", "tangential force [N]");
    let (x0, y0) = axes.map(0.0, 0.0);
    let (x1, y1) = axes.map(axes.x_hi, mu * axes.x_hi);
    let _ = writeln!(
        s,
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y1:.2}\" stroke=\"red\" stroke-dasharray=\"6 4\"/>"
    );
    for (x, y) in &points {
        let (px, py) = axes.map(*x, *y);
        let _ = writeln!(
            s,
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"1.5\" fill=\"steelblue\" fill-opacity=\"0.5\"/>"
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn histogram_svg(hist: &Histogram, title: &str, x_label: &str) -> String {
    let mut s = svg_open(title);
    axes_frame(&mut s, x_label, "fraction of samples");
    let total = hist.total().max(1) as f64;
    let peak = hist
        .counts
        .iter()
        .copied()
        .max()
        .unwrap_or(0)
        .max(1) as f64
        / total;
    let axes = Axes {
        x_lo: hist.lo,
        x_hi: hist.hi,
        y_lo: 0.0,
        y_hi: peak * 1.1,
    };
    let bin_w = (hist.hi - hist.lo) / hist.counts.len() as f64;
    for (i, &c) in hist.counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let frac = c as f64 / total;
        let (px, py) = axes.map(hist.lo + i as f64 * bin_w, frac);
        let (px1, base_y) = axes.map(hist.lo + (i + 1) as f64 * bin_w, 0.0);
        let _ = writeln!(
            s,
            "<rect x=\"{px:.2}\" y=\"{py:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"steelblue\" stroke=\"black\" stroke-width=\"0.5\"/>",
            px1 - px,
            base_y - py
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Base speed along the commanded direction over time, with the command line.
pub fn speed_trace_svg(
    rows: &[TrajectoryRow],
    direction: nalgebra::Vector3<f64>,
    command_m_s: f64,
) -> Result<String, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::EmptyLog);
    }
    let dir = if direction.norm() > 1e-12 {
        direction.normalize()
    } else {
        direction
    };
    let speeds: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.state.v.dot(&dir))).collect();
    let y_hi = speeds
        .iter()
        .map(|p| p.1)
        .fold(command_m_s, f64::max)
        .max(1e-3);
    let y_lo = speeds.iter().map(|p| p.1).fold(0.0f64, f64::min);
    let axes = Axes {
        x_lo: speeds[0].0,
        x_hi: speeds.last().unwrap().0.max(speeds[0].0 + 1e-6),
        y_lo: y_lo * 1.1 - 1e-3,
        y_hi: y_hi * 1.1,
    };
    let mut s = svg_open("Base speed along command");
    axes_frame(&mut s, "time [s]", "speed [m/s]");
    let (cx0, cy) = axes.map(axes.x_lo, command_m_s);
    let (cx1, _) = axes.map(axes.x_hi, command_m_s);
    let _ = writeln!(
        s,
        "<line x1=\"{cx0:.2}\" y1=\"{cy:.2}\" x2=\"{cx1:.2}\" y2=\"{cy:.2}\" stroke=\"red\" stroke-dasharray=\"6 4\"/>"
    );
    let path: Vec<String> = speeds
        .iter()
        .enumerate()
        .map(|(i, (t, v))| {
            let (px, py) = axes.map(*t, *v);
            format!("{}{px:.2},{py:.2}", if i == 0 { "M" } else { "L" })
        })
        .collect();
    let _ = writeln!(
        s,
        "<path d=\"{}\" fill=\"none\" stroke=\"steelblue\"/>",
        path.join(" ")
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Emit the standard plot set plus their backing histogram CSVs; returns the
/// created file paths.
pub fn emit_plots(
    rows: &[TrajectoryRow],
    env: &Environment,
    model: &RobotModel,
    direction: nalgebra::Vector3<f64>,
    command_m_s: f64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::EmptyLog);
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let mut torque_hist = Histogram::new(0.0, 40.0, 40);
    let mut speed_hist = Histogram::new(0.0, 12.0, 48);
    for row in rows {
        for j in 0..JOINT_COUNT {
            torque_hist.add(row.joint_torques[j].abs());
            speed_hist.add(row.joint_vel[j].abs());
        }
    }

    let files: Vec<(&str, String)> = vec![
        ("forces.svg", force_scatter_svg(rows, env, model)?),
        (
            "torques.svg",
            histogram_svg(&torque_hist, "Joint torque distribution", "|torque| [N·m]"),
        ),
        (
            "joint_speeds.svg",
            histogram_svg(
                &speed_hist,
                "Joint speed distribution",
                "|joint speed| [rad/s]",
            ),
        ),
        ("speed.svg", speed_trace_svg(rows, direction, command_m_s)?),
        ("torques.csv", histogram_csv(&torque_hist)),
        ("joint_speeds.csv", histogram_csv(&speed_hist)),
    ];
    for (name, content) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, content)?;
        written.push(path);
    }
    Ok(written)
}

fn histogram_csv(hist: &Histogram) -> String {
    let mut s = String::from("bin_lo,bin_hi,count\n");
    let bin_w = (hist.hi - hist.lo) / hist.counts.len() as f64;
    for (i, c) in hist.counts.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{c}",
            hist.lo + i as f64 * bin_w,
            hist.lo + (i + 1) as f64 * bin_w
        );
    }
    let _ = writeln!(s, "{},inf,{}", hist.hi, hist.overflow);
    s
}
