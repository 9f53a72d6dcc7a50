//! Crawl-gait contact scheduling, touchdown correction, electro-permanent
//! magnet command timing, and the swing-height reference profile.
//!
//! The crawl moves one foot at a time. Each cycle slot is a full-stance
//! phase (all four feet attached, long enough for safe magnet switching)
//! followed by one leg's swing; four slots make a cycle.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use crate::model::{LegId, MagnetParams, LEG_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Stance,
    Swing,
}

/// Half-open phase interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseInterval {
    pub phase: Phase,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitParams {
    /// Swing duration of one leg, s.
    pub swing_duration_s: f64,
    /// All-feet stance phase between two swings, s.
    pub full_stance_s: f64,
    /// Body travel per full gait cycle, m.
    pub step_length_m: f64,
    /// Peak swing height above the surface, m.
    pub swing_apex_m: f64,
    /// Crawl sequence; must be a permutation of all four legs.
    pub leg_order: [LegId; LEG_COUNT],
}

impl Default for GaitParams {
    fn default() -> Self {
        GaitParams {
            swing_duration_s: 0.4,
            full_stance_s: 0.6,
            step_length_m: 0.2,
            swing_apex_m: 0.05,
            // Diagonal recovery order.
            leg_order: [
                LegId::LeftFront,
                LegId::RightHind,
                LegId::RightFront,
                LegId::LeftHind,
            ],
        }
    }
}

impl GaitParams {
    /// Climbing cadence: 0.6 s full stance so three feet always hold full
    /// adhesion force while the magnets switch.
    pub fn climbing() -> GaitParams {
        GaitParams::default()
    }

    /// Ground cadence: a 0.2 s full-stance phase is sufficient without the
    /// full adhesion force.
    pub fn ground() -> GaitParams {
        GaitParams {
            full_stance_s: 0.2,
            ..GaitParams::default()
        }
    }

    pub fn cycle_time_s(&self) -> f64 {
        LEG_COUNT as f64 * (self.swing_duration_s + self.full_stance_s)
    }

    /// Step length that realizes `speed` at this cadence.
    pub fn with_speed(mut self, speed_m_s: f64) -> GaitParams {
        self.step_length_m = speed_m_s * self.cycle_time_s();
        self
    }

    pub fn speed_m_s(&self) -> f64 {
        self.step_length_m / self.cycle_time_s()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaitError {
    #[error("invalid gait parameter: {0}")]
    InvalidParams(&'static str),
    #[error("correction rejected: {0}")]
    CorrectionRejected(&'static str),
    #[error("time {t} is outside foot {foot:?}'s current swing window")]
    NotInSwingWindow { foot: LegId, t: f64 },
}

/// Timed stance/swing assignment per foot over a finite window.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactSchedule {
    pub feet: [Vec<PhaseInterval>; LEG_COUNT],
    pub params: GaitParams,
    pub t0: f64,
    pub t_end: f64,
}

impl ContactSchedule {
    pub fn is_empty(&self) -> bool {
        self.t_end <= self.t0
    }

    /// Interval containing `t`, clamped into the schedule window.
    pub fn interval_at(&self, foot: LegId, t: f64) -> Option<PhaseInterval> {
        self.feet[foot.index()]
            .iter()
            .find(|iv| t >= iv.start && t < iv.end)
            .copied()
    }

    pub fn phase_at(&self, foot: LegId, t: f64) -> Phase {
        self.interval_at(foot, t).map_or(Phase::Stance, |iv| iv.phase)
    }

    pub fn in_stance(&self, foot: LegId, t: f64) -> bool {
        self.phase_at(foot, t) == Phase::Stance
    }

    pub fn stance_count(&self, t: f64) -> usize {
        LegId::ALL.iter().filter(|l| self.in_stance(**l, t)).count()
    }

    /// Start of the stance interval containing `t`, i.e. the most recent
    /// touchdown (or the schedule start for the initial stance).
    pub fn touchdown_time(&self, foot: LegId, t: f64) -> Option<f64> {
        let iv = self.interval_at(foot, t)?;
        (iv.phase == Phase::Stance).then_some(iv.start)
    }

    /// All swing intervals of one foot.
    pub fn swings(&self, foot: LegId) -> impl Iterator<Item = &PhaseInterval> {
        self.feet[foot.index()]
            .iter()
            .filter(|iv| iv.phase == Phase::Swing)
    }

    /// Covers the query window without gaps.
    pub fn covers(&self, start: f64, end: f64) -> bool {
        start >= self.t0 - 1e-9 && end <= self.t_end + 1e-9
    }

    /// All-stance schedule for standing in place.
    pub fn stand(params: &GaitParams, t0: f64, duration: f64) -> ContactSchedule {
        let t_end = t0 + duration.max(0.0);
        let mut feet: [Vec<PhaseInterval>; LEG_COUNT] = Default::default();
        if duration > 0.0 {
            for list in feet.iter_mut() {
                list.push(PhaseInterval {
                    phase: Phase::Stance,
                    start: t0,
                    end: t_end,
                });
            }
        }
        ContactSchedule {
            feet,
            params: *params,
            t0,
            t_end,
        }
    }
}

/// Build a crawl schedule over `[t0, t0 + duration]`.
///
/// Every slot is `full_stance` followed by one leg's swing; at most one
/// foot swings at a time, so at least three feet are always in stance.
pub fn build_schedule(
    params: &GaitParams,
    t0: f64,
    duration: f64,
) -> Result<ContactSchedule, GaitError> {
    if !(params.swing_duration_s > 0.0) {
        return Err(GaitError::InvalidParams("swing_duration_s must be > 0"));
    }
    if !(params.full_stance_s >= 0.0) {
        return Err(GaitError::InvalidParams("full_stance_s must be >= 0"));
    }
    if !(params.swing_apex_m > 0.0) {
        return Err(GaitError::InvalidParams("swing_apex_m must be > 0"));
    }
    let mut seen = [false; LEG_COUNT];
    for leg in params.leg_order {
        seen[leg.index()] = true;
    }
    if seen != [true; LEG_COUNT] {
        return Err(GaitError::InvalidParams("leg_order must be a permutation"));
    }

    let mut feet: [Vec<PhaseInterval>; LEG_COUNT] = Default::default();
    let t_end = t0 + duration.max(0.0);
    if duration <= 0.0 {
        return Ok(ContactSchedule {
            feet,
            params: *params,
            t0,
            t_end: t0,
        });
    }

    let slot = params.swing_duration_s + params.full_stance_s;
    // Collect every swing window per foot, then fill stance in between.
    let mut swing_windows: [Vec<(f64, f64)>; LEG_COUNT] = Default::default();
    let mut cycle_start = t0;
    'outer: loop {
        for (j, leg) in params.leg_order.iter().enumerate() {
            let swing_start = cycle_start + j as f64 * slot + params.full_stance_s;
            if swing_start >= t_end {
                break 'outer;
            }
            let swing_end = (swing_start + params.swing_duration_s).min(t_end);
            swing_windows[leg.index()].push((swing_start, swing_end));
        }
        cycle_start += params.cycle_time_s();
    }

    for leg in LegId::ALL {
        let list = &mut feet[leg.index()];
        let mut cursor = t0;
        for &(s, e) in &swing_windows[leg.index()] {
            if s > cursor {
                list.push(PhaseInterval {
                    phase: Phase::Stance,
                    start: cursor,
                    end: s,
                });
            }
            list.push(PhaseInterval {
                phase: Phase::Swing,
                start: s,
                end: e,
            });
            cursor = e;
        }
        if cursor < t_end {
            list.push(PhaseInterval {
                phase: Phase::Stance,
                start: cursor,
                end: t_end,
            });
        }
    }

    Ok(ContactSchedule {
        feet,
        params: *params,
        t0,
        t_end,
    })
}

/// Observed touchdown timing relative to the plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TouchdownEvent {
    Early,
    Late,
}

/// Re-time the schedule after an early or late touchdown of `foot` at `t`.
///
/// The foot's current swing is truncated (early) or extended (late) to end
/// at `t`, and every later phase of every foot shifts by the same amount.
/// Phases that already elapsed are never modified.
pub fn correct_schedule(
    schedule: &ContactSchedule,
    foot: LegId,
    event: TouchdownEvent,
    t: f64,
) -> Result<ContactSchedule, GaitError> {
    const TOL: f64 = 1e-6;
    let swing = schedule
        .feet[foot.index()]
        .iter()
        .find(|iv| {
            iv.phase == Phase::Swing
                && match event {
                    TouchdownEvent::Early => t >= iv.start - TOL && t < iv.end + TOL,
                    // A late event is reported just after the planned end.
                    TouchdownEvent::Late => t >= iv.start - TOL && iv.end <= t + TOL,
                }
        })
        .copied()
        .ok_or(GaitError::NotInSwingWindow { foot, t })?;

    let shift = t - swing.end;
    if matches!(event, TouchdownEvent::Early) && t <= swing.start + TOL {
        return Err(GaitError::CorrectionRejected(
            "touchdown before swing start would leave no swing phase",
        ));
    }

    let mut feet = schedule.feet.clone();
    for (i, list) in feet.iter_mut().enumerate() {
        for iv in list.iter_mut() {
            let is_current_swing =
                i == foot.index() && iv.phase == Phase::Swing && (iv.start - swing.start).abs() < TOL;
            if is_current_swing {
                iv.end = t;
            } else if iv.start >= swing.end - TOL {
                iv.start += shift;
                iv.end += shift;
            } else if iv.end >= swing.end - TOL && iv.phase == Phase::Stance {
                // Stance running up to the next phase boundary stretches with it.
                iv.end += shift;
            }
        }
        list.retain(|iv| iv.end - iv.start > TOL);
    }

    let corrected = ContactSchedule {
        feet,
        params: schedule.params,
        t0: schedule.t0,
        t_end: schedule.t_end + shift,
    };

    // A crawl keeps ≥3 feet in stance; verify at phase boundaries.
    let mut checkpoints: Vec<f64> = Vec::new();
    for list in &corrected.feet {
        for iv in list {
            checkpoints.push(iv.start + TOL);
        }
    }
    for &cp in &checkpoints {
        if cp < corrected.t_end && corrected.stance_count(cp) < 3 {
            return Err(GaitError::CorrectionRejected(
                "correction would drop below 3 stance feet",
            ));
        }
    }
    Ok(corrected)
}

/// One commanded magnet action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MagnetAction {
    Demagnetize,
    /// Zero-based pulse of a touchdown magnetization sequence.
    MagnetizePulse { pulse: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetEvent {
    pub time: f64,
    pub action: MagnetAction,
}

/// Per-foot magnet command timeline derived from a contact schedule.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MagnetTimeline {
    pub feet: [Vec<MagnetEvent>; LEG_COUNT],
}

impl MagnetTimeline {
    /// Fraction of the full holding force available at `t`, judging only by
    /// the command timeline (feet start fully magnetized). During a
    /// switch-off the force is held until the planned liftoff completes it.
    pub fn force_fraction(
        &self,
        schedule: &ContactSchedule,
        magnet: &MagnetParams,
        foot: LegId,
        t: f64,
    ) -> f64 {
        if schedule.phase_at(foot, t) == Phase::Swing {
            return 0.0;
        }
        match schedule.touchdown_time(foot, t) {
            None => 0.0,
            Some(td) if (td - schedule.t0).abs() < 1e-9 => 1.0, // pre-attached at start
            Some(td) => {
                let pulses_done = ((t - td) / magnet.t_switch_on_s)
                    .floor()
                    .clamp(0.0, magnet.pulses_for_full_force as f64);
                pulses_done / magnet.pulses_for_full_force as f64
            }
        }
    }
}

/// Derive the magnet commands: demagnetize one switch-off time before each
/// planned liftoff, then pulse at touchdown until the full force is rebuilt.
pub fn magnet_timeline(schedule: &ContactSchedule, magnet: &MagnetParams) -> MagnetTimeline {
    let mut timeline = MagnetTimeline::default();
    for leg in LegId::ALL {
        let events = &mut timeline.feet[leg.index()];
        for swing in schedule.swings(leg) {
            events.push(MagnetEvent {
                time: swing.start - magnet.t_switch_off_s,
                action: MagnetAction::Demagnetize,
            });
            for pulse in 0..magnet.pulses_for_full_force {
                events.push(MagnetEvent {
                    time: swing.end + pulse as f64 * magnet.t_switch_on_s,
                    action: MagnetAction::MagnetizePulse { pulse },
                });
            }
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
    }
    timeline
}

/// Surface-normal swing profile: two quintic segments with zero velocity
/// and acceleration at lift-off, apex, and touchdown.
///
/// Returns `(normal displacement, normal velocity)` at `t ∈ [0, duration]`.
pub fn swing_reference(duration: f64, apex: f64, t: f64) -> (f64, f64) {
    let t = t.clamp(0.0, duration);
    let half = duration / 2.0;
    let (tau, rising) = if t < half {
        (t / half, true)
    } else {
        ((t - half) / half, false)
    };
    let s = quintic_step(tau);
    let ds = quintic_step_rate(tau) / half;
    if rising {
        (apex * s, apex * ds)
    } else {
        (apex * (1.0 - s), -apex * ds)
    }
}

/// Minimum-jerk step `10τ³ − 15τ⁴ + 6τ⁵`.
pub fn quintic_step(tau: f64) -> f64 {
    let t2 = tau * tau;
    t2 * tau * (10.0 - 15.0 * tau + 6.0 * t2)
}

pub fn quintic_step_rate(tau: f64) -> f64 {
    let t2 = tau * tau;
    30.0 * t2 * (1.0 - 2.0 * tau + t2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_model;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn climbing_params() -> GaitParams {
        GaitParams {
            swing_duration_s: 0.8,
            full_stance_s: 0.6,
            ..GaitParams::default()
        }
    }

    fn magnet() -> MagnetParams {
        default_model().1
    }

    #[test]
    fn cycle_time_example() {
        let p = climbing_params();
        assert_abs_diff_eq!(p.cycle_time_s(), 4.0 * (0.8 + 0.6), epsilon = 1e-12);
        assert_abs_diff_eq!(p.with_speed(0.15).step_length_m, 0.84, epsilon = 1e-12);
    }

    #[test]
    fn zero_duration_gives_empty_schedule() {
        let s = build_schedule(&climbing_params(), 1.0, 0.0).unwrap();
        assert!(s.is_empty());
        assert!(s.feet.iter().all(|f| f.is_empty()));
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = climbing_params();
        p.swing_duration_s = 0.0;
        assert!(matches!(
            build_schedule(&p, 0.0, 1.0),
            Err(GaitError::InvalidParams(_))
        ));
        let mut p = climbing_params();
        p.leg_order = [LegId::LeftFront; 4];
        assert!(build_schedule(&p, 0.0, 1.0).is_err());
    }

    #[test]
    fn crawl_order_and_timing() {
        // Slot layout: 0.6 stance then 0.8 swing, order LF, RH, RF, LH.
        let s = build_schedule(&climbing_params(), 0.0, 11.2).unwrap();
        let expected = [
            (LegId::LeftFront, 0.6),
            (LegId::RightHind, 2.0),
            (LegId::RightFront, 3.4),
            (LegId::LeftHind, 4.8),
        ];
        for (leg, start) in expected {
            let swing = s.swings(leg).next().unwrap();
            assert_abs_diff_eq!(swing.start, start, epsilon = 1e-12);
            assert_abs_diff_eq!(swing.end, start + 0.8, epsilon = 1e-12);
            // Second cycle repeats one cycle later.
            let swing2 = s.swings(leg).nth(1).unwrap();
            assert_abs_diff_eq!(swing2.start, start + 5.6, epsilon = 1e-12);
        }
    }

    #[test]
    fn intervals_tile_window_per_foot() {
        let s = build_schedule(&climbing_params(), 0.3, 9.0).unwrap();
        for leg in LegId::ALL {
            let list = &s.feet[leg.index()];
            assert_abs_diff_eq!(list.first().unwrap().start, 0.3, epsilon = 1e-12);
            assert_abs_diff_eq!(list.last().unwrap().end, 9.3, epsilon = 1e-12);
            for pair in list.windows(2) {
                assert_abs_diff_eq!(pair[0].end, pair[1].start, epsilon = 1e-12);
                assert!(pair[0].phase != pair[1].phase || pair[0].phase == Phase::Stance);
            }
        }
    }

    #[test]
    fn at_least_three_feet_in_stance_always() {
        for params in [climbing_params(), GaitParams::ground()] {
            let s = build_schedule(&params, 0.0, 3.0 * params.cycle_time_s()).unwrap();
            let mut t = s.t0;
            while t < s.t_end {
                assert!(s.stance_count(t) >= 3, "stance dropped below 3 at t={t}");
                t += 1e-2;
            }
        }
    }

    #[test]
    fn magnet_events_example() {
        // LF lifts off at 2.0 in the second cycle's... use RH first swing:
        // liftoff 2.0 ⇒ demagnetize command at 1.65; touchdown 2.8 ⇒ pulses
        // at 2.8 and 2.98, full force from 3.16.
        let s = build_schedule(&climbing_params(), 0.0, 11.2).unwrap();
        let tl = magnet_timeline(&s, &magnet());
        let rh = &tl.feet[LegId::RightHind.index()];
        assert_abs_diff_eq!(rh[0].time, 2.0 - 0.35, epsilon = 1e-12);
        assert_eq!(rh[0].action, MagnetAction::Demagnetize);
        assert_abs_diff_eq!(rh[1].time, 2.8, epsilon = 1e-12);
        assert_eq!(rh[1].action, MagnetAction::MagnetizePulse { pulse: 0 });
        assert_abs_diff_eq!(rh[2].time, 2.98, epsilon = 1e-12);
        let m = magnet();
        assert_abs_diff_eq!(
            rh[1].time + m.time_to_full_force(),
            2.8 + 0.36,
            epsilon = 1e-12
        );
    }

    #[test]
    fn force_fraction_rebuild_profile() {
        let s = build_schedule(&climbing_params(), 0.0, 11.2).unwrap();
        let tl = magnet_timeline(&s, &magnet());
        let m = magnet();
        let leg = LegId::LeftFront; // swing [0.6, 1.4]
        assert_abs_diff_eq!(tl.force_fraction(&s, &m, leg, 0.2), 1.0);
        assert_abs_diff_eq!(tl.force_fraction(&s, &m, leg, 1.0), 0.0);
        assert_abs_diff_eq!(tl.force_fraction(&s, &m, leg, 1.45), 0.0);
        assert_abs_diff_eq!(tl.force_fraction(&s, &m, leg, 1.4 + 0.2), 0.5);
        assert_abs_diff_eq!(tl.force_fraction(&s, &m, leg, 1.4 + 0.37), 1.0);
    }

    #[test]
    fn at_least_three_feet_at_full_force_when_climbing() {
        // The 0.6 s full-stance phase exceeds the 0.36 s force rebuild, so a
        // foot always regains full holding force before the next liftoff.
        let params = climbing_params();
        let s = build_schedule(&params, 0.0, 3.0 * params.cycle_time_s()).unwrap();
        let tl = magnet_timeline(&s, &magnet());
        let m = magnet();
        let mut t = s.t0;
        while t < s.t_end {
            let full = LegId::ALL
                .iter()
                .filter(|l| tl.force_fraction(&s, &m, **l, t) >= 1.0)
                .count();
            assert!(full >= 3, "only {full} feet at full force at t={t}");
            t += 1e-2;
        }
    }

    #[test]
    fn early_touchdown_shifts_downstream() {
        let s = build_schedule(&climbing_params(), 0.0, 11.2).unwrap();
        // LF planned swing [0.6, 1.4]; actual touchdown at 1.3.
        let c = correct_schedule(&s, LegId::LeftFront, TouchdownEvent::Early, 1.3).unwrap();
        let lf = c.swings(LegId::LeftFront).next().unwrap();
        assert_abs_diff_eq!(lf.end, 1.3, epsilon = 1e-12);
        let rh = c.swings(LegId::RightHind).next().unwrap();
        assert_abs_diff_eq!(rh.start, 2.0 - 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(c.t_end, 11.2 - 0.1, epsilon = 1e-12);
        // The elapsed phase before the event is untouched.
        assert_abs_diff_eq!(c.feet[LegId::LeftFront.index()][0].start, 0.0);
        assert_abs_diff_eq!(c.feet[LegId::LeftFront.index()][1].start, 0.6);
    }

    #[test]
    fn late_touchdown_extends_swing() {
        let s = build_schedule(&climbing_params(), 0.0, 11.2).unwrap();
        let c = correct_schedule(&s, LegId::LeftFront, TouchdownEvent::Late, 1.55).unwrap();
        let lf = c.swings(LegId::LeftFront).next().unwrap();
        assert_abs_diff_eq!(lf.end, 1.55, epsilon = 1e-12);
        let rh = c.swings(LegId::RightHind).next().unwrap();
        assert_abs_diff_eq!(rh.start, 2.15, epsilon = 1e-12);
        let mut t = c.t0;
        while t < c.t_end {
            assert!(c.stance_count(t) >= 3);
            t += 1e-2;
        }
    }

    #[test]
    fn corrections_compose() {
        // Correcting two consecutive touchdowns matches building the same
        // schedule and applying the total shift in one pass.
        let s = build_schedule(&climbing_params(), 0.0, 11.2).unwrap();
        let a = correct_schedule(&s, LegId::LeftFront, TouchdownEvent::Early, 1.3).unwrap();
        let b = correct_schedule(&a, LegId::RightHind, TouchdownEvent::Late, 2.85).unwrap();
        // RH swing after first correction: [1.9, 2.7]; late by 0.15.
        let rf = b.swings(LegId::RightFront).next().unwrap();
        assert_abs_diff_eq!(rf.start, 3.4 - 0.1 + 0.15, epsilon = 1e-9);
        assert_abs_diff_eq!(b.t_end, 11.2 - 0.1 + 0.15, epsilon = 1e-9);
    }

    #[test]
    fn rejects_touchdown_outside_window() {
        let s = build_schedule(&climbing_params(), 0.0, 11.2).unwrap();
        assert!(matches!(
            correct_schedule(&s, LegId::LeftFront, TouchdownEvent::Early, 0.3),
            Err(GaitError::NotInSwingWindow { .. })
        ));
    }

    #[test]
    fn swing_reference_boundary_and_apex() {
        let (h, dur) = (0.05, 0.8);
        let (p0, v0) = swing_reference(dur, h, 0.0);
        assert_abs_diff_eq!(p0, 0.0);
        assert_abs_diff_eq!(v0, 0.0);
        let (pm, vm) = swing_reference(dur, h, dur / 2.0);
        assert_abs_diff_eq!(pm, h, epsilon = 1e-12);
        assert_abs_diff_eq!(vm, 0.0, epsilon = 1e-12);
        let (p1, v1) = swing_reference(dur, h, dur);
        assert_abs_diff_eq!(p1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v1, 0.0, epsilon = 1e-12);
        // Monotone rise and symmetric fall.
        for i in 1..40 {
            let t = i as f64 / 40.0 * dur / 2.0;
            assert!(swing_reference(dur, h, t).0 > swing_reference(dur, h, t - 1e-3).0);
            let (pa, _) = swing_reference(dur, h, t);
            let (pb, _) = swing_reference(dur, h, dur - t);
            assert_abs_diff_eq!(pa, pb, epsilon = 1e-12);
        }
    }

    #[test]
    fn swing_reference_velocity_matches_finite_difference() {
        let (h, dur) = (0.07, 0.5);
        let eps = 1e-6;
        for i in 1..100 {
            let t = i as f64 / 100.0 * dur;
            if (t - dur / 2.0).abs() < 2.0 * eps || t + eps > dur {
                continue;
            }
            let (_, v) = swing_reference(dur, h, t);
            let (pp, _) = swing_reference(dur, h, t + eps);
            let (pmn, _) = swing_reference(dur, h, t - eps);
            assert_relative_eq!(v, (pp - pmn) / (2.0 * eps), epsilon = 1e-6, max_relative = 1e-5);
        }
    }
}
