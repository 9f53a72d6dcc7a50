//! Controller comparison: bisect for the highest stable crawl speed per
//! surface orientation, for both the predictive controller and the
//! differential-IK baseline.

use serde::{Deserialize, Serialize};

use crate::metrics::MetricsReport;
use crate::runner::{run_scenario_outcome, RunError};
use crate::scenario::{ControllerKind, EnvironmentKind, Scenario};

/// Number of bisection halvings; resolves the speed to `(hi-lo)/2^5`.
pub const BISECTION_STEPS: usize = 5;
/// Tracking RMS above this disqualifies a run even without adhesion events.
pub const STABLE_TRACKING_RMS_M: f64 = 0.05;

/// Outcome of the sweep for one orientation/controller pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub environment: EnvironmentKind,
    pub controller: ControllerKind,
    pub max_stable_speed_m_s: f64,
    /// Half-width of the final bisection bracket.
    pub resolution_m_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
}

impl SweepReport {
    pub fn entry(
        &self,
        environment: EnvironmentKind,
        controller: ControllerKind,
    ) -> Option<&SweepEntry> {
        self.entries
            .iter()
            .find(|e| e.environment == environment && e.controller == controller)
    }
}

/// A run is stable when it finishes without any slip or pull-off and tracks
/// the commanded path to within [`STABLE_TRACKING_RMS_M`].
pub fn is_stable(result: &Result<MetricsReport, RunError>) -> bool {
    match result {
        Ok(m) => m.adhesion_failures() == 0 && m.tracking_rms_m < STABLE_TRACKING_RMS_M,
        Err(_) => false,
    }
}

/// Bisect the highest stable speed in `[0, hi_m_s]` with `BISECTION_STEPS`
/// halvings, given an oracle. Speed 0 is assumed stable; if even the first
/// midpoint fails the bracket collapses towards zero.
pub fn bisect_max_speed<F>(hi_m_s: f64, mut stable: F) -> (f64, f64)
where
    F: FnMut(f64) -> bool,
{
    let mut lo = 0.0;
    let mut hi = hi_m_s;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, 0.5 * (hi - lo))
}

/// Longest step the legs can reach; above the speed where the nominal cycle
/// would exceed this, the sweep shortens the cycle instead of the stride.
pub const SWEEP_STEP_CAP_M: f64 = 0.32;
/// Shortest full-stance dwell the sweep will schedule.
const SWEEP_MIN_FULL_STANCE_S: f64 = 0.005;
/// Nominal swing duration shared by both controllers.
const SWEEP_SWING_S: f64 = 0.4;

fn sweep_scenario(
    environment: EnvironmentKind,
    controller: ControllerKind,
    duration_s: f64,
    speed_m_s: f64,
) -> Scenario {
    let full_nominal_s = match environment {
        EnvironmentKind::Ground | EnvironmentKind::Corner => 0.2,
        EnvironmentKind::Wall | EnvironmentKind::Ceiling => 0.6,
    };
    // Cap the stride at what the legs can reach: past the cap the cadence
    // rises (shorter dwell, then shorter swing) instead of the step length.
    let cycle_nominal_s = 4.0 * (full_nominal_s + SWEEP_SWING_S);
    let (full_stance_s, swing_duration_s) = if speed_m_s * cycle_nominal_s > SWEEP_STEP_CAP_M {
        let slot = SWEEP_STEP_CAP_M / speed_m_s / 4.0;
        let swing = SWEEP_SWING_S
            .min(slot - SWEEP_MIN_FULL_STANCE_S)
            .max(0.05);
        ((slot - swing).max(SWEEP_MIN_FULL_STANCE_S), swing)
    } else {
        (full_nominal_s, SWEEP_SWING_S)
    };
    Scenario {
        name: format!("sweep_{environment:?}_{controller}").to_lowercase(),
        environment,
        controller,
        speed_m_s,
        full_stance_s,
        swing_duration_s,
        swing_apex_m: 0.05,
        payload_kg: 0.0,
        payload_offset_m: [0.0; 3],
        duration_s,
        seed: 0,
        control_rate_hz: 25.0,
        ceiling_height_m: 0.8,
        corner_distance_m: 0.55,
        out_dir: None,
    }
}

/// Evaluate one candidate speed with a full closed-loop run.
pub fn speed_is_stable(
    environment: EnvironmentKind,
    controller: ControllerKind,
    duration_s: f64,
    speed_m_s: f64,
) -> bool {
    if speed_m_s == 0.0 {
        return true;
    }
    let scenario = sweep_scenario(environment, controller, duration_s, speed_m_s);
    let result = run_scenario_outcome(&scenario).map(|o| o.metrics);
    is_stable(&result)
}

/// Upper bisection bracket per orientation: comfortably above the best
/// achievable crawl so the sweep is not clipped.
pub fn sweep_bracket(environment: EnvironmentKind) -> f64 {
    match environment {
        EnvironmentKind::Ground | EnvironmentKind::Corner => 0.64,
        EnvironmentKind::Wall | EnvironmentKind::Ceiling => 0.32,
    }
}

/// Full sweep over the given orientations for both controllers.
pub fn compare_controllers(
    environments: &[EnvironmentKind],
    duration_s: f64,
) -> SweepReport {
    let mut entries = Vec::new();
    for &environment in environments {
        for controller in [ControllerKind::Mpc, ControllerKind::DiffIk] {
            let (speed, resolution) = bisect_max_speed(sweep_bracket(environment), |v| {
                speed_is_stable(environment, controller, duration_s, v)
            });
            entries.push(SweepEntry {
                environment,
                controller,
                max_stable_speed_m_s: speed,
                resolution_m_s: resolution,
            });
        }
    }
    SweepReport { entries }
}
