//! Discrete-time point-mass fleet simulation.
//!
//! N UAVs fly cyclic waypoint circuits over an M x M area. Each step a UAV
//! moves toward its current waypoint at cruise speed, gets displaced by wind
//! and gusts, consumes energy, and executes tasks when it captures a task
//! waypoint. An audit unit observes task outcomes with some uncertainty and
//! samples expected-vs-reported positions; every evaluation interval the
//! detector scores each cluster. Runs are fully deterministic for a given
//! config and seed: every UAV draws from its own per-purpose RNG streams, so
//! an attack perturbs only the channels it owns even across paired runs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{combined_effects, validate_schedule, AttackEffects, AttackKind, AttackSchedule, ScheduleError};
use crate::detector::{
    classify_interval, evaluate_cluster, mission_reset, ClusterVerdict, DetectorConfig,
    DetectorError, TrustHistory, UavObservation,
};
use crate::positioning::{solve_position, synthesize_receive_times, DistanceStation, PositioningError};
use crate::trust::{EvidenceCounts, PositionSample};
use crate::{UavId, Vec3};

/// Distance at which a waypoint counts as reached and the plan advances.
pub const WAYPOINT_CAPTURE_RADIUS: f64 = 5.0;

/// Range the mission area side is drawn from when not configured, meters.
pub const AREA_SIDE_RANGE: (f64, f64) = (1500.0, 2500.0);

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Positioning(#[from] PositioningError),
}

/// Physical and observation parameters of one mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Side of the square mission area, meters. Drawn uniformly from
    /// [`AREA_SIDE_RANGE`] per run when unset.
    pub area_side: Option<f64>,
    pub uav_count: usize,
    /// Simulation timestep, seconds.
    pub timestep: f64,
    /// Commanded speed toward the current waypoint, m/s.
    pub cruise_speed: f64,
    /// Hover/avionics power, watts.
    pub base_power: f64,
    /// Extra power per unit of commanded speed, W/(m/s).
    pub move_power_per_speed: f64,
    /// Energy per task at unit kind multiplier, joules.
    pub task_energy: f64,
    /// Probability a task attempt succeeds under normal conditions.
    #[serde(default = "default_task_success_prob")]
    pub task_success_prob: f64,
    /// Probability the audit unit records an outcome as uncertain.
    pub obs_uncertainty_prob: f64,
    /// Mission length, seconds.
    #[serde(default = "default_mission_duration")]
    pub mission_duration: f64,
    pub rng_seed: u64,
}

fn default_task_success_prob() -> f64 {
    0.95
}

fn default_mission_duration() -> f64 {
    1200.0
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            area_side: None,
            uav_count: 3,
            timestep: 1.0,
            cruise_speed: 12.0,
            base_power: 60.0,
            move_power_per_speed: 6.0,
            task_energy: 500.0,
            task_success_prob: default_task_success_prob(),
            obs_uncertainty_prob: 0.1,
            mission_duration: default_mission_duration(),
            rng_seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if let Some(side) = self.area_side {
            if side <= 0.0 {
                return Err(SimError::InvalidConfig("area_side must be positive".into()));
            }
        }
        if self.uav_count == 0 {
            return Err(SimError::InvalidConfig("uav_count must be at least 1".into()));
        }
        for (name, v) in [
            ("timestep", self.timestep),
            ("cruise_speed", self.cruise_speed),
            ("base_power", self.base_power),
            ("move_power_per_speed", self.move_power_per_speed),
            ("task_energy", self.task_energy),
            ("mission_duration", self.mission_duration),
        ] {
            if v <= 0.0 {
                return Err(SimError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        for (name, p) in [
            ("task_success_prob", self.task_success_prob),
            ("obs_uncertainty_prob", self.obs_uncertainty_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidConfig(format!("{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// What a task physically is; kinds differ in how much energy they burn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Survey,
    Delivery,
    Photography,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Survey, TaskKind::Delivery, TaskKind::Photography];

    pub fn energy_multiplier(self) -> f64 {
        match self {
            TaskKind::Survey => 1.0,
            TaskKind::Delivery => 1.5,
            TaskKind::Photography => 0.5,
        }
    }
}

/// A task bound to one waypoint of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub waypoint: usize,
    pub kind: TaskKind,
}

/// Cyclic waypoint circuit plus the tasks performed at its waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionPlan {
    pub waypoints: Vec<Vec3>,
    pub tasks: Vec<TaskSpec>,
}

impl MissionPlan {
    pub fn validate(&self, area_side: f64) -> Result<(), SimError> {
        if self.waypoints.is_empty() {
            return Err(SimError::InvalidConfig("mission plan has no waypoints".into()));
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            let in_area = (0.0..=area_side).contains(&w.x)
                && (0.0..=area_side).contains(&w.y)
                && w.z >= 0.0;
            if !in_area {
                return Err(SimError::InvalidConfig(format!(
                    "waypoint {i} at ({}, {}, {}) outside the {area_side} m area",
                    w.x, w.y, w.z
                )));
            }
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if t.waypoint >= self.waypoints.len() {
                return Err(SimError::InvalidConfig(format!(
                    "task {i} references waypoint {} of {}",
                    t.waypoint,
                    self.waypoints.len()
                )));
            }
        }
        Ok(())
    }

    /// Indices of tasks attached to `waypoint`.
    pub fn tasks_at(&self, waypoint: usize) -> impl Iterator<Item = (usize, TaskKind)> + '_ {
        self.tasks
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.waypoint == waypoint)
            .map(|(i, t)| (i, t.kind))
    }
}

/// Shared weather inside one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindField {
    pub mean_wind: Vec3,
    /// Per-axis gust standard deviation, m/s.
    pub gust_std: f64,
    /// Multiplier on propulsion power, >= 1 in bad weather.
    pub energy_factor: f64,
}

impl WindField {
    pub fn calm() -> Self {
        Self {
            mean_wind: Vec3::zeros(),
            gust_std: 0.0,
            energy_factor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.gust_std < 0.0 {
            return Err(SimError::InvalidConfig("gust_std must be non-negative".into()));
        }
        if self.energy_factor < 1.0 {
            return Err(SimError::InvalidConfig("energy_factor must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for WindField {
    fn default() -> Self {
        Self::calm()
    }
}

/// Live state of one UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct UavState {
    pub id: UavId,
    /// Physical location.
    pub true_position: Vec3,
    /// Location as seen by the audit unit.
    pub reported_position: Vec3,
    pub energy_consumed: f64,
    /// Audited task outcome counts for the current mission.
    pub evidence: EvidenceCounts,
    /// Index of the waypoint currently steered for (wraps around).
    pub plan_cursor: usize,
    /// Accumulated displacement injected by GPS spoofing; the UAV itself
    /// believes it is at `true_position - spoof_offset`.
    pub spoof_offset: Vec3,
    /// Attack currently acting on this UAV, if any.
    pub active_attack: Option<AttackKind>,
}

impl UavState {
    pub fn new(id: UavId, plan: &MissionPlan) -> Self {
        let start = plan.waypoints[0];
        Self {
            id,
            true_position: start,
            reported_position: start,
            energy_consumed: 0.0,
            evidence: EvidenceCounts::default(),
            plan_cursor: 0,
            spoof_offset: Vec3::zeros(),
            active_attack: None,
        }
    }

    /// Where the UAV believes it is (guidance input).
    pub fn believed_position(&self) -> Vec3 {
        self.true_position - self.spoof_offset
    }
}

/// Result of one kinematic step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMotion {
    /// Commanded speed actually flown this step, m/s.
    pub speed: f64,
    /// Waypoints captured during the step, in capture order.
    pub captured: Vec<usize>,
}

/// Moves a UAV for one timestep: steer toward the current waypoint at cruise
/// speed, drift with `wind_velocity`, and accumulate any spoofing offset.
/// The expected (undisturbed) trajectory is obtained by stepping a twin
/// state with zero wind and identity effects.
pub fn step_kinematics(
    state: &mut UavState,
    plan: &MissionPlan,
    cruise_speed: f64,
    wind_velocity: Vec3,
    dt: f64,
    effects: &AttackEffects,
) -> StepMotion {
    debug_assert!(dt > 0.0);
    let mut nav = state.believed_position();
    let mut captured = Vec::new();
    let mut moved = 0.0;

    if !plan.waypoints.is_empty() {
        // Capture anything already inside the radius, at most one full lap.
        let mut guard = 0;
        while guard < plan.waypoints.len()
            && (nav - plan.waypoints[state.plan_cursor]).norm() <= WAYPOINT_CAPTURE_RADIUS
        {
            captured.push(state.plan_cursor);
            state.plan_cursor = (state.plan_cursor + 1) % plan.waypoints.len();
            guard += 1;
        }

        if guard < plan.waypoints.len() {
            let mut budget = cruise_speed * dt;
            let mut hops = 0;
            while budget > 0.0 && hops <= plan.waypoints.len() {
                let target = plan.waypoints[state.plan_cursor];
                let to_target = target - nav;
                let dist = to_target.norm();
                if dist <= budget {
                    nav = target;
                    moved += dist;
                    budget -= dist;
                    captured.push(state.plan_cursor);
                    state.plan_cursor = (state.plan_cursor + 1) % plan.waypoints.len();
                    hops += 1;
                } else {
                    nav += to_target * (budget / dist);
                    moved += budget;
                    budget = 0.0;
                }
            }
        }
    }

    nav += wind_velocity * dt;

    if let Some(drift) = effects.drift_velocity {
        state.spoof_offset += drift * dt;
    }
    state.true_position = nav + state.spoof_offset;
    state.reported_position = if effects.falsify_report {
        nav
    } else {
        state.true_position
    };

    StepMotion {
        speed: moved / dt,
        captured,
    }
}

/// Energy added over one step: `(base + move_per_speed * speed) * wind
/// factor * dt` plus per-task energy, plus whatever an active attack
/// injects (flood power, spoof drag, selfish under-spend).
pub fn consume_energy(
    cfg: &SimConfig,
    speed: f64,
    wind: &WindField,
    tasks_done: &[TaskKind],
    dt: f64,
    effects: &AttackEffects,
) -> f64 {
    debug_assert!(dt > 0.0);
    let rate = (cfg.base_power + cfg.move_power_per_speed * (speed + effects.extra_speed))
        * wind.energy_factor
        * effects.energy_factor;
    let task_energy: f64 = tasks_done
        .iter()
        .map(|k| cfg.task_energy * k.energy_multiplier())
        .sum();
    rate * dt + task_energy + effects.extra_power * dt
}

/// Ground-truth outcome of one task attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskOutcome {
    Success,
    Fail,
}

/// What the audit unit writes down for a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservedOutcome {
    Success,
    Fail,
    Uncertain,
}

/// Attempts one task; succeeds with `success_prob`.
pub fn execute_task(success_prob: f64, rng: &mut ChaCha8Rng) -> TaskOutcome {
    if rng.gen_bool(success_prob.clamp(0.0, 1.0)) {
        TaskOutcome::Success
    } else {
        TaskOutcome::Fail
    }
}

/// The audit unit never trusts self-reports: with `uncertainty_prob` the
/// observation is inconclusive, otherwise it reflects the true outcome.
pub fn audit_observe(
    outcome: TaskOutcome,
    uncertainty_prob: f64,
    rng: &mut ChaCha8Rng,
) -> ObservedOutcome {
    if rng.gen_bool(uncertainty_prob.clamp(0.0, 1.0)) {
        ObservedOutcome::Uncertain
    } else {
        match outcome {
            TaskOutcome::Success => ObservedOutcome::Success,
            TaskOutcome::Fail => ObservedOutcome::Fail,
        }
    }
}

/// One telemetry row: where the UAV should be, where it was seen, and what
/// happened during the step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelemetryRecord {
    pub time: f64,
    pub uav: UavId,
    pub expected_position: Vec3,
    pub reported_position: Vec3,
    /// Energy consumed during this step, joules.
    pub interval_energy: f64,
    /// (task index in the plan, true outcome) for tasks executed this step.
    pub task_events: Vec<(usize, TaskOutcome)>,
}

/// Full product of one mission run.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionOutput {
    pub telemetry: Vec<TelemetryRecord>,
    /// Verdicts in interval order; for multiple clusters, cluster order
    /// within each interval follows the cluster list.
    pub verdicts: Vec<ClusterVerdict>,
    /// Area side actually used (drawn when the config leaves it unset).
    pub area_side: f64,
}

const STREAM_AREA: u64 = 0;
const STREAM_GUST: u64 = 1;
const STREAM_TASK: u64 = 2;
const STREAM_AUDIT: u64 = 3;
const STREAM_ATTACK: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent, reproducible RNG stream per (seed, uav, purpose).
fn stream_rng(seed: u64, uav: u32, stream: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(seed ^ splitmix64(uav as u64 + 1)) ^ stream);
    ChaCha8Rng::seed_from_u64(mixed)
}

struct UavRngs {
    gust: ChaCha8Rng,
    task: ChaCha8Rng,
    audit: ChaCha8Rng,
    attack: ChaCha8Rng,
}

/// Runs one mission end to end and evaluates every cluster at each
/// evaluation interval. Deterministic for a given config and seed.
pub fn run_mission(
    cfg: &SimConfig,
    plans: &[MissionPlan],
    wind: &WindField,
    attacks: &[AttackSchedule],
    clusters: &[Vec<UavId>],
    detector: &DetectorConfig,
    stations: Option<&[DistanceStation]>,
) -> Result<MissionOutput, SimError> {
    cfg.validate()?;
    wind.validate()?;
    detector.validate()?;
    if plans.len() != cfg.uav_count {
        return Err(SimError::InvalidConfig(format!(
            "{} plans for {} UAVs",
            plans.len(),
            cfg.uav_count
        )));
    }
    if clusters.is_empty() {
        return Err(SimError::InvalidConfig("no clusters defined".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for cluster in clusters {
        if cluster.len() < 3 {
            return Err(SimError::InvalidConfig(format!(
                "cluster of {} UAVs, at least 3 required",
                cluster.len()
            )));
        }
        for id in cluster {
            if id.0 as usize >= cfg.uav_count {
                return Err(SimError::InvalidConfig(format!(
                    "cluster references unknown UAV {id}"
                )));
            }
            if !seen.insert(*id) {
                return Err(SimError::InvalidConfig(format!(
                    "UAV {id} appears in more than one cluster"
                )));
            }
        }
    }
    validate_schedule(attacks, clusters)?;
    for a in attacks {
        if a.start < 0.0 || a.end > cfg.mission_duration {
            return Err(SimError::InvalidConfig(format!(
                "attack window [{}, {}) outside the {} s mission",
                a.start, a.end, cfg.mission_duration
            )));
        }
    }

    let area_side = match cfg.area_side {
        Some(side) => side,
        None => {
            let mut rng = stream_rng(cfg.rng_seed, u32::MAX, STREAM_AREA);
            rng.gen_range(AREA_SIDE_RANGE.0..=AREA_SIDE_RANGE.1)
        }
    };
    for plan in plans {
        plan.validate(area_side)?;
    }

    let steps_per_eval = (detector.evaluation_interval / cfg.timestep).round();
    if steps_per_eval < 1.0
        || (steps_per_eval * cfg.timestep - detector.evaluation_interval).abs() > 1e-9
    {
        return Err(SimError::InvalidConfig(
            "evaluation_interval must be a positive multiple of the timestep".into(),
        ));
    }
    let steps_per_eval = steps_per_eval as usize;
    let total_steps = (cfg.mission_duration / cfg.timestep).round() as usize;

    let n = cfg.uav_count;
    let mut states: Vec<UavState> = (0..n)
        .map(|i| UavState::new(UavId(i as u32), &plans[i]))
        .collect();
    // Undisturbed twin of each UAV: same guidance, calm air, no attacks.
    let mut ideal: Vec<UavState> = states.clone();
    let mut rngs: Vec<UavRngs> = (0..n)
        .map(|i| UavRngs {
            gust: stream_rng(cfg.rng_seed, i as u32, STREAM_GUST),
            task: stream_rng(cfg.rng_seed, i as u32, STREAM_TASK),
            audit: stream_rng(cfg.rng_seed, i as u32, STREAM_AUDIT),
            attack: stream_rng(cfg.rng_seed, i as u32, STREAM_ATTACK),
        })
        .collect();

    let gust_dist = if wind.gust_std > 0.0 {
        Some(Normal::new(0.0, wind.gust_std).expect("validated gust_std"))
    } else {
        None
    };

    let mut samples: Vec<Vec<PositionSample>> = vec![Vec::with_capacity(total_steps); n];
    let mut telemetry = Vec::with_capacity(total_steps * n);
    let mut verdicts = Vec::new();
    let mut histories: Vec<TrustHistory> = clusters.iter().map(|_| TrustHistory::new()).collect();
    let identity = AttackEffects::default();

    for step in 1..=total_steps {
        let t = step as f64 * cfg.timestep;
        let t_start = t - cfg.timestep;

        for i in 0..n {
            let id = states[i].id;
            let effects = combined_effects(id, attacks, t_start);

            let gust = match &gust_dist {
                Some(dist) => Vec3::new(
                    dist.sample(&mut rngs[i].gust),
                    dist.sample(&mut rngs[i].gust),
                    dist.sample(&mut rngs[i].gust),
                ),
                None => Vec3::zeros(),
            };

            step_kinematics(
                &mut ideal[i],
                &plans[i],
                cfg.cruise_speed,
                Vec3::zeros(),
                cfg.timestep,
                &identity,
            );
            let motion = step_kinematics(
                &mut states[i],
                &plans[i],
                cfg.cruise_speed,
                wind.mean_wind + gust,
                cfg.timestep,
                &effects,
            );

            let mut executed_kinds = Vec::new();
            let mut task_events = Vec::new();
            for waypoint in &motion.captured {
                for (task_index, kind) in plans[i].tasks_at(*waypoint) {
                    let skipped = effects.task_skip_prob > 0.0
                        && rngs[i].attack.gen_bool(effects.task_skip_prob);
                    let outcome = if skipped {
                        TaskOutcome::Fail
                    } else {
                        let mut outcome = execute_task(cfg.task_success_prob, &mut rngs[i].task);
                        if effects.task_fail_prob > 0.0
                            && rngs[i].attack.gen_bool(effects.task_fail_prob)
                        {
                            outcome = TaskOutcome::Fail;
                        }
                        executed_kinds.push(kind);
                        outcome
                    };
                    match audit_observe(outcome, cfg.obs_uncertainty_prob, &mut rngs[i].audit) {
                        ObservedOutcome::Success => states[i].evidence.record_success(),
                        ObservedOutcome::Fail => states[i].evidence.record_failure(),
                        ObservedOutcome::Uncertain => states[i].evidence.record_uncertain(),
                    }
                    task_events.push((task_index, outcome));
                }
            }

            let joules = consume_energy(
                cfg,
                motion.speed,
                wind,
                &executed_kinds,
                cfg.timestep,
                &effects,
            );
            states[i].energy_consumed += joules;
            states[i].active_attack = active_kind(id, attacks, t_start);

            if let Some(stations) = stations {
                let times = synthesize_receive_times(stations, &states[i].true_position, 0.0);
                let fix = solve_position(stations, &times)?;
                states[i].reported_position = fix.position;
            }

            samples[i].push(PositionSample {
                time: t,
                expected: ideal[i].true_position,
                actual: states[i].reported_position,
            });
            telemetry.push(TelemetryRecord {
                time: t,
                uav: id,
                expected_position: ideal[i].true_position,
                reported_position: states[i].reported_position,
                interval_energy: joules,
                task_events,
            });
        }

        if step % steps_per_eval == 0 {
            let interval_index = step / steps_per_eval - 1;
            for (c, cluster) in clusters.iter().enumerate() {
                let observations: BTreeMap<UavId, UavObservation> = cluster
                    .iter()
                    .map(|id| {
                        let i = id.0 as usize;
                        (
                            *id,
                            UavObservation {
                                evidence: states[i].evidence,
                                energy: states[i].energy_consumed,
                                samples: &samples[i],
                            },
                        )
                    })
                    .collect();
                let mut verdict = evaluate_cluster(&observations, interval_index, detector)?;
                verdict.classification =
                    classify_interval(&mut histories[c], &verdict, detector.persistence);
                verdicts.push(verdict);
            }
        }
    }

    // Trust does not carry across missions.
    for history in &mut histories {
        mission_reset(history);
    }

    Ok(MissionOutput {
        telemetry,
        verdicts,
        area_side,
    })
}

fn active_kind(uav: UavId, attacks: &[AttackSchedule], t: f64) -> Option<AttackKind> {
    attacks
        .iter()
        .find(|s| s.is_active(uav, t))
        .map(|s| s.kind.clone())
}
