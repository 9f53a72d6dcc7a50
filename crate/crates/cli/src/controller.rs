//! Closed-loop controllers: the predictive controller wrapping the OCP
//! solver, and the differential-IK baseline it is compared against.

use nalgebra::{Matrix3, Vector3};

use magnecko_core::gait::{
    build_schedule, correct_schedule, ContactSchedule, GaitParams, Phase, TouchdownEvent,
};
use magnecko_core::kinematics::{
    diff_ik_step, foot_position, BaseTwist, DiffIkGains, FootIkTarget, LegChain,
};
use magnecko_core::model::{
    LegId, MagnetParams, RobotModel, JOINTS_PER_LEG, LEG_COUNT,
};
use magnecko_core::mpc::{
    assemble_ocp, extract_policy, solve, target_generator, CostWeights, OcpSettings,
    OperatorCommand, Solution,
};
use magnecko_core::sim::{SimCommand, SimEvent, SimEventKind, SimState};
use magnecko_core::{gait, terrain::Environment};

/// Diagnostics shared by both controllers.
#[derive(Debug, Clone, Default)]
pub struct ControllerStats {
    /// Wall-clock OCP solve times (empty for the IK baseline).
    pub solve_times_s: Vec<f64>,
    /// Applied gait-schedule corrections.
    pub corrections: usize,
    /// First time the solver stopped making progress, if ever.
    pub divergence_at_s: Option<f64>,
}

pub trait Controller {
    /// Produce the plant command for the current instant.
    fn control(&mut self, sim: &SimState) -> anyhow::Result<SimCommand>;
    /// Consume plant events raised since the last call.
    fn observe(&mut self, events: &[SimEvent]);
    fn stats(&self) -> &ControllerStats;
}

/// Approach speed for a foot pressed onto its patch after a late or missed
/// touchdown, m/s.
const PRESS_ON_SPEED_M_S: f64 = 0.05;

/// All feet start attached, so swings the schedule phasing places before
/// t = 0 never happen: mark them as stance.
fn cancel_past_swings(schedule: &mut ContactSchedule) {
    for intervals in schedule.feet.iter_mut() {
        for iv in intervals.iter_mut() {
            if iv.phase == Phase::Swing && iv.start < 0.0 {
                iv.phase = Phase::Stance;
            }
        }
    }
}

/// Once a release is in flight, re-engaging no earlier than this after the
/// planned liftoff lets the plant's switch-off complete instead of being
/// cancelled; this only matters when the swing is shorter than the
/// demagnetization delay.
const MAGNET_REARM_S: f64 = 0.02;

/// Magnet engage/release pattern implied by a contact schedule: release one
/// switch-off time before planned liftoff (so demagnetization completes at
/// liftoff), re-engage one switch-off time before planned touchdown, or just
/// after liftoff when the swing is shorter than the switch-off delay.
fn magnet_commands(
    schedule: &ContactSchedule,
    magnet: &MagnetParams,
    t: f64,
) -> [bool; LEG_COUNT] {
    core::array::from_fn(|i| {
        let leg = LegId::from_index(i).expect("leg index");
        match schedule.swings(leg).find(|sw| sw.end > t) {
            None => true,
            Some(sw) if t < sw.start => sw.start - t > magnet.t_switch_off_s,
            Some(sw) => t >= (sw.end - magnet.t_switch_off_s).max(sw.start + MAGNET_REARM_S),
        }
    })
}

/// Predictive controller: re-solves the receding-horizon OCP at the control
/// rate and interpolates its policy at the plant rate.
pub struct MpcController {
    model: RobotModel,
    magnet: MagnetParams,
    env: Environment,
    weights: CostWeights,
    settings: OcpSettings,
    schedule: ContactSchedule,
    velocity: Vector3<f64>,
    attitude: Matrix3<f64>,
    normal: Vector3<f64>,
    /// Commanded path start; the reference position is `anchor + v·t`.
    anchor: Vector3<f64>,
    control_dt_s: f64,
    next_solve_s: f64,
    solution: Option<Solution>,
    stats: ControllerStats,
}

impl MpcController {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: RobotModel,
        magnet: MagnetParams,
        env: Environment,
        gait_params: &GaitParams,
        duration_s: f64,
        velocity: Vector3<f64>,
        attitude: Matrix3<f64>,
        normal: Vector3<f64>,
        anchor: Vector3<f64>,
        control_rate_hz: f64,
    ) -> anyhow::Result<MpcController> {
        let settings = OcpSettings::default();
        // Phase the cycle so the very first magnet release can lead its
        // liftoff by the full demagnetization delay; the schedule starts one
        // cycle in the past to keep t = 0 covered.
        let t0 = magnet.t_switch_off_s - gait_params.cycle_time_s();
        let mut schedule = build_schedule(
            gait_params,
            t0,
            duration_s + settings.horizon_s + 2.0 * gait_params.cycle_time_s(),
        )?;
        cancel_past_swings(&mut schedule);
        Ok(MpcController {
            model,
            magnet,
            env,
            // Slightly stronger joint-velocity regularization than the
            // library default keeps swing speeds inside the actuator
            // envelope without hurting tracking.
            weights: CostWeights::from_groups(1e3, 1e1, 1e3, 1e1, 1e0, 1e-3, 3e-1),
            settings,
            schedule,
            velocity,
            attitude,
            normal,
            anchor,
            control_dt_s: 1.0 / control_rate_hz,
            next_solve_s: 0.0,
            solution: None,
            stats: ControllerStats::default(),
        })
    }

    pub fn schedule(&self) -> &ContactSchedule {
        &self.schedule
    }

    fn command(&self, t: f64) -> OperatorCommand {
        OperatorCommand {
            linear_velocity: self.velocity,
            yaw_rate: 0.0,
            reference_position: self.anchor + self.velocity * t,
            attitude: self.attitude,
            surface_normal: self.normal,
            extra_mass: 0.0,
        }
    }

    /// Extend the current swing of feet whose planned touchdown has passed
    /// without contact.
    fn handle_late_feet(&mut self, sim: &SimState) {
        let t = sim.time_s;
        for leg in LegId::ALL {
            if sim.feet[leg.index()].is_pinned() {
                continue;
            }
            if self.schedule.phase_at(leg, t) == Phase::Stance
                && self.schedule.touchdown_time(leg, t).is_some()
            {
                if let Ok(fixed) =
                    correct_schedule(&self.schedule, leg, TouchdownEvent::Late, t)
                {
                    self.schedule = fixed;
                    self.stats.corrections += 1;
                }
            }
        }
    }
}

impl Controller for MpcController {
    fn control(&mut self, sim: &SimState) -> anyhow::Result<SimCommand> {
        let t = sim.time_s;
        self.handle_late_feet(sim);
        if self.solution.is_none() || t + 1e-9 >= self.next_solve_s {
            let cmd = self.command(t);
            let targets = target_generator(&cmd, &self.schedule, &self.model, t, &self.settings)?;
            let problem = assemble_ocp(
                &sim.state,
                t,
                &self.schedule,
                targets,
                &self.env,
                &self.model,
                &self.magnet,
                None,
                self.weights.clone(),
                self.settings.clone(),
            )?;
            let sol = solve(&problem, self.solution.as_ref());
            if std::env::var_os("MAGNECKO_DEBUG").is_some() {
                let pinned: Vec<bool> = sim.feet.iter().map(|f| f.is_pinned()).collect();
                let stance: Vec<bool> = LegId::ALL
                    .iter()
                    .map(|&l| self.schedule.in_stance(l, t))
                    .collect();
                let foot_z: Vec<f64> = LegId::ALL
                    .iter()
                    .map(|&l| foot_position(&self.model, &sim.state, l).z)
                    .collect();
                eprintln!(
                    "t={t:.3} it={} kkt={:.3e} cost={:.3e} defect={:.3e} conv={} p=({:.3},{:.3},{:.3}) pinned={pinned:?} stance={stance:?} foot_z={foot_z:.4?}",
                    sol.iterations,
                    sol.kkt_residual,
                    sol.cost,
                    sol.max_defect,
                    sol.converged,
                    sim.state.p.x,
                    sim.state.p.y,
                    sim.state.p.z,
                );
            }
            if !sol.converged && sol.kkt_residual > 1e2 && self.stats.divergence_at_s.is_none() {
                self.stats.divergence_at_s = Some(t);
            }
            self.stats.solve_times_s.push(sol.solve_time_s);
            self.solution = Some(sol);
            self.next_solve_s = t + self.control_dt_s;
        }
        let solution = self.solution.as_ref().expect("solved above");
        let (mut q_ref, mut qd_ref, forces) = extract_policy(solution, t)?;
        // Just before a liftoff the policy interpolates into the first swing
        // node, which would drag the still-pinned foot through its contact.
        // Track the constraint instead for that final interval.
        for leg in LegId::ALL {
            if !sim.feet[leg.index()].is_pinned() {
                continue;
            }
            let near_liftoff = match self.schedule.interval_at(leg, t) {
                Some(iv) => iv.phase == Phase::Swing || iv.end - t <= self.settings.dt_s,
                None => false,
            };
            if near_liftoff {
                let base = leg.index() * JOINTS_PER_LEG;
                q_ref
                    .fixed_rows_mut::<JOINTS_PER_LEG>(base)
                    .copy_from(&sim.state.joint_angles(leg));
                qd_ref.fixed_rows_mut::<JOINTS_PER_LEG>(base).fill(0.0);
            }
        }
        // A foot past its planned touchdown that has not made contact (the
        // base sagged or pitched under disturbance) is pressed along the
        // surface normal until it lands; holding it at the policy reference
        // would stall the gait a few millimetres short of the patch.
        for leg in LegId::ALL {
            let i = leg.index();
            if sim.feet[i].is_pinned() || self.schedule.phase_at(leg, t) != Phase::Stance {
                continue;
            }
            let p_foot = foot_position(&self.model, &sim.state, leg);
            let Some(patch) = self
                .env
                .patches
                .iter()
                .min_by(|a, b| {
                    a.signed_distance(&p_foot)
                        .abs()
                        .total_cmp(&b.signed_distance(&p_foot).abs())
                })
            else {
                continue;
            };
            let c = magnecko_core::spatial::quat_to_rot(&sim.state.xi)?;
            let q = sim.state.joint_angles(leg);
            let chain = LegChain::new(&self.model, leg);
            let j = chain.jacobian_body(&q);
            // Foot velocity towards the surface, resolved to joint rates.
            let v_body = c.transpose() * (-PRESS_ON_SPEED_M_S * patch.normal);
            let jtj: Matrix3<f64> = j.transpose() * j + 1e-9 * Matrix3::identity();
            let qd = jtj
                .lu()
                .solve(&(j.transpose() * v_body))
                .unwrap_or_else(Vector3::zeros);
            let base = i * JOINTS_PER_LEG;
            let dt = magnecko_core::sim::DEFAULT_SIM_DT_S;
            q_ref.fixed_rows_mut::<JOINTS_PER_LEG>(base).copy_from(&(q + qd * dt));
            qd_ref.fixed_rows_mut::<JOINTS_PER_LEG>(base).copy_from(&qd);
        }
        Ok(SimCommand {
            joint_pos_ref: q_ref,
            joint_vel_ref: qd_ref,
            feedforward_forces: forces,
            magnet_on: magnet_commands(&self.schedule, &self.magnet, t),
        })
    }

    fn observe(&mut self, events: &[SimEvent]) {
        for e in events {
            if let SimEventKind::Touchdown { .. } = e.kind {
                if self.schedule.phase_at(e.foot, e.time_s) == Phase::Swing {
                    if let Ok(fixed) =
                        correct_schedule(&self.schedule, e.foot, TouchdownEvent::Early, e.time_s)
                    {
                        self.schedule = fixed;
                        self.stats.corrections += 1;
                    }
                }
            }
        }
    }

    fn stats(&self) -> &ControllerStats {
        &self.stats
    }
}

#[derive(Debug, Clone, Copy)]
struct SwingPlan {
    start: f64,
    end: f64,
    liftoff: Vector3<f64>,
    target: Vector3<f64>,
}

/// Differential-IK baseline: velocity-level whole-body IK with naive
/// body-frame foothold placement. Footholds are projected from the nominal
/// stance at swing start without predicting base travel, so placement lags
/// the commanded speed, and the contact schedule is followed open-loop.
pub struct IkController {
    model: RobotModel,
    magnet: MagnetParams,
    env: Environment,
    schedule: ContactSchedule,
    gait_params: GaitParams,
    velocity: Vector3<f64>,
    normal: Vector3<f64>,
    gains: DiffIkGains,
    swing_plans: [Option<SwingPlan>; LEG_COUNT],
    nominal_feet_body: [Vector3<f64>; LEG_COUNT],
    stats: ControllerStats,
}

impl IkController {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: RobotModel,
        magnet: MagnetParams,
        env: Environment,
        gait_params: &GaitParams,
        duration_s: f64,
        velocity: Vector3<f64>,
        normal: Vector3<f64>,
    ) -> anyhow::Result<IkController> {
        let mut schedule = build_schedule(
            gait_params,
            magnet.t_switch_off_s - gait_params.cycle_time_s(),
            duration_s + 2.0 * gait_params.cycle_time_s(),
        )?;
        cancel_past_swings(&mut schedule);
        let nominal_feet_body = core::array::from_fn(|i| {
            let leg = LegId::from_index(i).expect("leg index");
            LegChain::new(&model, leg).foot_position_body(&Vector3::new(
                model.nominal_joint_angles[i * JOINTS_PER_LEG],
                model.nominal_joint_angles[i * JOINTS_PER_LEG + 1],
                model.nominal_joint_angles[i * JOINTS_PER_LEG + 2],
            ))
        });
        Ok(IkController {
            model,
            magnet,
            env,
            schedule,
            gait_params: gait_params.clone(),
            velocity,
            normal,
            gains: DiffIkGains::default(),
            swing_plans: [None; LEG_COUNT],
            nominal_feet_body,
            stats: ControllerStats::default(),
        })
    }
}

impl Controller for IkController {
    fn control(&mut self, sim: &SimState) -> anyhow::Result<SimCommand> {
        let t = sim.time_s;
        let state = &sim.state;
        let c = magnecko_core::spatial::quat_to_rot(&state.xi)?;
        let mut targets = [FootIkTarget::Stance {
            position: Vector3::zeros(),
        }; LEG_COUNT];
        for leg in LegId::ALL {
            let i = leg.index();
            targets[i] = match self.schedule.interval_at(leg, t) {
                // A foot that touched down early is held where it landed even
                // though the open-loop schedule still says swing; commanding
                // the airborne reference against the pin would tear it off.
                Some(iv) if iv.phase == Phase::Swing && !sim.feet[i].is_pinned() => {
                    let fresh = match self.swing_plans[i] {
                        Some(p) => (p.start - iv.start).abs() > 1e-9,
                        None => true,
                    };
                    if fresh {
                        // Naive placement: nominal foothold under the body
                        // *now*, with no allowance for travel during the
                        // swing.
                        let nominal = state.p + c * self.nominal_feet_body[i];
                        let (_, patch) = self
                            .env
                            .patch_near(&nominal, f64::INFINITY)
                            .ok_or_else(|| anyhow::anyhow!("no patch under foothold"))?;
                        self.swing_plans[i] = Some(SwingPlan {
                            start: iv.start,
                            end: iv.end,
                            liftoff: foot_position(&self.model, state, leg),
                            target: patch.clamp_into(&nominal, 0.02),
                        });
                    }
                    let plan = self.swing_plans[i].expect("created above");
                    let dur = plan.end - plan.start;
                    let tau = ((t - plan.start) / dur).clamp(0.0, 1.0);
                    let chord = plan.liftoff.lerp(&plan.target, gait::quintic_step(tau));
                    let chord_rate =
                        (plan.target - plan.liftoff) * gait::quintic_step_rate(tau) / dur;
                    let (h, h_rate) =
                        gait::swing_reference(dur, self.gait_params.swing_apex_m, t - plan.start);
                    FootIkTarget::Swing {
                        position: chord + h * self.normal,
                        velocity: chord_rate + h_rate * self.normal,
                    }
                }
                _ => {
                    let position = if sim.feet[i].is_pinned() {
                        sim.feet[i].attachment_point
                    } else if let Some(plan) = self.swing_plans[i] {
                        // Late contact: keep pressing at the planned foothold.
                        plan.target - 0.002 * self.normal
                    } else {
                        foot_position(&self.model, state, leg)
                    };
                    FootIkTarget::Stance { position }
                }
            };
        }

        if std::env::var_os("MAGNECKO_DEBUG").is_some()
            && ((t * 2000.0).round() as i64).rem_euclid(40) == 0
        {
            let pinned: Vec<bool> = sim.feet.iter().map(|f| f.is_pinned()).collect();
            let feet: Vec<f64> = LegId::ALL
                .iter()
                .map(|&l| foot_position(&self.model, state, l).x)
                .collect();
            eprintln!(
                "ik t={t:.3} p=({:.3},{:.3},{:.3}) pinned={pinned:?} foot_x={feet:.4?} targets={targets:.3?}",
                state.p.x, state.p.y, state.p.z
            );
        }
        let twist = BaseTwist {
            linear: self.velocity,
            angular: Vector3::zeros(),
        };
        let dt = magnecko_core::sim::DEFAULT_SIM_DT_S;
        let ik = diff_ik_step(&self.model, state, &twist, &targets, &self.gains, dt);

        // Static feedforward: least-norm force distribution over the pinned
        // feet balancing both the weight and its moment about the base. On a
        // wall this supplies the upper-foot tension / lower-foot compression
        // couple that a plain per-foot weight split misses entirely.
        let pinned: Vec<usize> = (0..LEG_COUNT)
            .filter(|&i| sim.feet[i].is_pinned())
            .collect();
        let mut forces = [Vector3::zeros(); LEG_COUNT];
        if !pinned.is_empty() {
            let mut a = nalgebra::SMatrix::<f64, 6, 12>::zeros();
            for (k, &i) in pinned.iter().enumerate() {
                let leg = LegId::from_index(i).expect("leg index");
                let r = foot_position(&self.model, state, leg) - state.p;
                a.fixed_view_mut::<3, 3>(0, 3 * k)
                    .copy_from(&Matrix3::identity());
                a.fixed_view_mut::<3, 3>(3, 3 * k)
                    .copy_from(&magnecko_core::spatial::skew(&r));
            }
            let mut b = nalgebra::SVector::<f64, 6>::zeros();
            b.fixed_rows_mut::<3>(0)
                .copy_from(&(-self.model.mass_kg * self.model.gravity_vec));
            let aat = a * a.transpose();
            if let Some(y) = aat.lu().solve(&b) {
                let lambda = a.transpose() * y;
                for (k, &i) in pinned.iter().enumerate() {
                    forces[i] = lambda.fixed_rows::<3>(3 * k).into_owned();
                }
            }
        }

        Ok(SimCommand {
            joint_pos_ref: state.q_j + ik.joint_vel * dt,
            joint_vel_ref: ik.joint_vel,
            feedforward_forces: forces,
            magnet_on: magnet_commands(&self.schedule, &self.magnet, t),
        })
    }

    fn observe(&mut self, _events: &[SimEvent]) {
        // The baseline follows its schedule open loop.
    }

    fn stats(&self) -> &ControllerStats {
        &self.stats
    }
}
