//! Run metrics mirroring the reference experiments: achieved speed, contact
//! force margins, torque/velocity distributions, tracking error, and the
//! event log. Every quantity is recomputable from the trajectory CSV alone.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use magnecko_core::kinematics::foot_position;
use magnecko_core::model::{LegId, RobotModel, JOINT_COUNT, LEG_COUNT};
use magnecko_core::mpc::{friction_cone_residual, FrictionParams};
use magnecko_core::terrain::Environment;

use crate::runner::TrajectoryRow;

/// Fixed-bin histogram over `[lo, hi)` with an overflow bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Histogram {
        Histogram {
            lo,
            hi,
            counts: vec![0; bins],
            overflow: 0,
        }
    }

    pub fn add(&mut self, x: f64) {
        if x >= self.hi {
            self.overflow += 1;
            return;
        }
        let f = (x - self.lo) / (self.hi - self.lo) * self.counts.len() as f64;
        let idx = (f.floor().max(0.0) as usize).min(self.counts.len() - 1);
        self.counts[idx] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }
}

/// Counts of the discrete events found in a trajectory log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventCounts {
    pub touchdowns: usize,
    pub attach_completes: usize,
    pub releases: usize,
    pub slips: usize,
    pub pull_offs: usize,
}

/// Aggregate metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub duration_s: f64,
    /// Net displacement along the commanded direction over the run time.
    pub mean_speed_m_s: f64,
    /// Peak base velocity along the commanded direction.
    pub max_speed_m_s: f64,
    /// Smallest friction-cone margin seen per foot, N (∞ if never loaded).
    pub min_cone_margin_n: [f64; LEG_COUNT],
    /// Largest normal tension carried by any foot, N.
    pub max_normal_tension_n: f64,
    pub max_torque_nm: f64,
    pub max_joint_speed_rad_s: f64,
    pub torque_histogram: Histogram,
    pub joint_speed_histogram: Histogram,
    /// RMS and max of the base position error against the commanded path, m.
    pub tracking_rms_m: f64,
    pub tracking_max_m: f64,
    pub events: EventCounts,
}

impl MetricsReport {
    /// Compute the report from logged rows. `velocity_cmd` is the commanded
    /// inertial velocity (defines the speed direction); `duration_s` the
    /// nominal run length.
    pub fn from_rows(
        rows: &[TrajectoryRow],
        env: &Environment,
        model: &RobotModel,
        velocity_cmd: Vector3<f64>,
        duration_s: f64,
    ) -> MetricsReport {
        let dir = if velocity_cmd.norm() > 1e-12 {
            velocity_cmd.normalize()
        } else {
            Vector3::zeros()
        };

        let mut report = MetricsReport {
            duration_s,
            mean_speed_m_s: 0.0,
            max_speed_m_s: 0.0,
            min_cone_margin_n: [f64::INFINITY; LEG_COUNT],
            max_normal_tension_n: 0.0,
            max_torque_nm: 0.0,
            max_joint_speed_rad_s: 0.0,
            torque_histogram: Histogram::new(0.0, 40.0, 40),
            joint_speed_histogram: Histogram::new(0.0, 12.0, 48),
            tracking_rms_m: 0.0,
            tracking_max_m: 0.0,
            events: EventCounts::default(),
        };
        let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
            return report;
        };
        let span = last.t - first.t;
        if span > 0.0 {
            report.mean_speed_m_s = (last.state.p - first.state.p).dot(&dir) / span;
        }

        let mut err_sq_sum = 0.0;
        for row in rows {
            report.max_speed_m_s = report.max_speed_m_s.max(row.state.v.dot(&dir));
            let err = (row.state.p - row.reference_position).norm();
            err_sq_sum += err * err;
            report.tracking_max_m = report.tracking_max_m.max(err);

            for j in 0..JOINT_COUNT {
                let tau = row.joint_torques[j].abs();
                report.max_torque_nm = report.max_torque_nm.max(tau);
                report.torque_histogram.add(tau);
                let qd = row.joint_vel[j].abs();
                report.max_joint_speed_rad_s = report.max_joint_speed_rad_s.max(qd);
                report.joint_speed_histogram.add(qd);
            }

            for leg in LegId::ALL {
                let i = leg.index();
                if row.foot_status[i] == 0 {
                    continue;
                }
                let p_foot = foot_position(model, &row.state, leg);
                let Some((_, patch)) = env.patch_near(&p_foot, 0.05) else {
                    continue;
                };
                let lambda = row.foot_forces[i];
                let tension = (-lambda.dot(&patch.normal)).max(0.0);
                report.max_normal_tension_n = report.max_normal_tension_n.max(tension);
                let friction = FrictionParams {
                    mu: patch.mu,
                    epsilon: 0.0,
                    f_mag: row.magnet_forces[i],
                    f_min: 0.0,
                };
                let margin =
                    friction_cone_residual(&lambda, &patch.terrain_rotation(), &friction);
                report.min_cone_margin_n[i] = report.min_cone_margin_n[i].min(margin);
            }

            for (_, kind) in &row.events {
                if kind.starts_with("touchdown") {
                    report.events.touchdowns += 1;
                } else {
                    match kind.as_str() {
                        "attach_complete" => report.events.attach_completes += 1,
                        "released" => report.events.releases += 1,
                        "slip" => report.events.slips += 1,
                        "pull_off" => report.events.pull_offs += 1,
                        _ => {}
                    }
                }
            }
        }
        report.tracking_rms_m = (err_sq_sum / rows.len() as f64).sqrt();
        report
    }

    pub fn adhesion_failures(&self) -> usize {
        self.events.slips + self.events.pull_offs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_bins_and_overflow() {
        let mut h = Histogram::new(0.0, 10.0, 10);
        h.add(0.0);
        h.add(0.999);
        h.add(5.0);
        h.add(9.999);
        h.add(10.0);
        h.add(25.0);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[5], 1);
        assert_eq!(h.counts[9], 1);
        assert_eq!(h.overflow, 2);
        assert_eq!(h.total(), 6);
    }

    #[test]
    fn empty_rows_give_zeroed_report() {
        let (model, _) = magnecko_core::model::default_model();
        let env = Environment::ground();
        let r = MetricsReport::from_rows(&[], &env, &model, Vector3::x(), 1.0);
        assert_eq!(r.mean_speed_m_s, 0.0);
        assert_eq!(r.events, EventCounts::default());
    }
}
