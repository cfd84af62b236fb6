//! Attack effects on the simulated fleet.
//!
//! Each attack kind perturbs exactly the behavioral channels it is known
//! for: flooding burns extra energy, GPS spoofing drags the true track off
//! the planned path, a man-in-the-middle sabotages task outcomes, and a
//! selfish or hijacked UAV skips work while under-spending energy. Outside
//! its activation window an attack is an exact identity on every channel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{UavId, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("attack window [{start}, {end}) is empty or reversed")]
    EmptyWindow { start: f64, end: f64 },
    #[error("UAVs {first} and {second} are attacked concurrently in the same cluster")]
    ConcurrentAttacksInCluster { first: UavId, second: UavId },
    #[error("attack targets UAV {0} which belongs to no cluster")]
    UnknownTarget(UavId),
    #[error("invalid attack parameter: {0}")]
    InvalidParameter(String),
}

/// The modeled attack classes and their knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackKind {
    /// Keeps the victim's radio saturated: adds `flood_power` watts to its
    /// consumption and touches nothing else.
    DdosFlooding { flood_power: f64 },
    /// Steers the victim toward a false target: the true track diverges
    /// from the believed one at `spoof_offset_rate` m/s along
    /// `drift_direction`, and the extra distance flown costs energy. The
    /// reported position is falsified to the believed track only when
    /// `falsify_report` is set; by default the audit unit sees the true,
    /// deviated track.
    GpsSpoofing {
        spoof_offset_rate: f64,
        #[serde(default = "default_drift_direction")]
        drift_direction: Vec3,
        #[serde(default)]
        falsify_report: bool,
    },
    /// Intercepts tasking: each task additionally fails with
    /// `task_drop_prob`. Outcome channel only.
    ManInTheMiddle { task_drop_prob: f64 },
    /// The victim skips tasks with `skip_prob` and spends only
    /// `energy_factor` (< 1) of its normal per-step energy.
    SelfishHijack { skip_prob: f64, energy_factor: f64 },
}

fn default_drift_direction() -> Vec3 {
    Vec3::new(1.0, 0.0, 0.0)
}

/// One attack bound to a victim and a time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSchedule {
    pub target: UavId,
    #[serde(flatten)]
    pub kind: AttackKind,
    /// Activation window start, seconds from mission start (inclusive).
    pub start: f64,
    /// Activation window end, seconds from mission start (exclusive).
    pub end: f64,
}

impl AttackSchedule {
    pub fn is_active(&self, uav: UavId, t: f64) -> bool {
        uav == self.target && t >= self.start && t < self.end
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        // partial_cmp keeps NaN windows rejected.
        if self.start.partial_cmp(&self.end) != Some(std::cmp::Ordering::Less) {
            return Err(ScheduleError::EmptyWindow {
                start: self.start,
                end: self.end,
            });
        }
        match &self.kind {
            AttackKind::DdosFlooding { flood_power } => {
                if *flood_power < 0.0 {
                    return Err(ScheduleError::InvalidParameter(
                        "flood_power must be non-negative".into(),
                    ));
                }
            }
            AttackKind::GpsSpoofing {
                spoof_offset_rate,
                drift_direction,
                ..
            } => {
                if *spoof_offset_rate < 0.0 {
                    return Err(ScheduleError::InvalidParameter(
                        "spoof_offset_rate must be non-negative".into(),
                    ));
                }
                if drift_direction.norm() < 1e-12 {
                    return Err(ScheduleError::InvalidParameter(
                        "drift_direction must be non-zero".into(),
                    ));
                }
            }
            AttackKind::ManInTheMiddle { task_drop_prob } => {
                if !(0.0..=1.0).contains(task_drop_prob) {
                    return Err(ScheduleError::InvalidParameter(
                        "task_drop_prob must be in [0, 1]".into(),
                    ));
                }
            }
            AttackKind::SelfishHijack {
                skip_prob,
                energy_factor,
            } => {
                if !(0.0..=1.0).contains(skip_prob) {
                    return Err(ScheduleError::InvalidParameter(
                        "skip_prob must be in [0, 1]".into(),
                    ));
                }
                if !(*energy_factor > 0.0 && *energy_factor <= 1.0) {
                    return Err(ScheduleError::InvalidParameter(
                        "energy_factor must be in (0, 1]".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Per-step channel deltas an active attack applies to its victim.
///
/// The default value is the identity on every channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackEffects {
    /// Extra power drawn each step, watts.
    pub extra_power: f64,
    /// Multiplier on the per-step propulsion energy.
    pub energy_factor: f64,
    /// Additional airspeed spent fighting the spoofed guidance, m/s.
    pub extra_speed: f64,
    /// Velocity at which the true position drifts off the believed track.
    pub drift_velocity: Option<Vec3>,
    /// Additional probability that an executed task fails.
    pub task_fail_prob: f64,
    /// Probability that an assigned task is skipped outright.
    pub task_skip_prob: f64,
    /// Report the believed (clean) position instead of the true one.
    pub falsify_report: bool,
}

impl Default for AttackEffects {
    fn default() -> Self {
        Self {
            extra_power: 0.0,
            energy_factor: 1.0,
            extra_speed: 0.0,
            drift_velocity: None,
            task_fail_prob: 0.0,
            task_skip_prob: 0.0,
            falsify_report: false,
        }
    }
}

impl AttackEffects {
    pub fn is_identity(&self) -> bool {
        self == &Self::default()
    }
}

/// Channel deltas for `uav` at mission time `t`; the identity whenever the
/// schedule targets someone else or the window is not active.
pub fn apply_attack_effects(uav: UavId, schedule: &AttackSchedule, t: f64) -> AttackEffects {
    if !schedule.is_active(uav, t) {
        return AttackEffects::default();
    }
    let mut fx = AttackEffects::default();
    match &schedule.kind {
        AttackKind::DdosFlooding { flood_power } => {
            fx.extra_power = *flood_power;
        }
        AttackKind::GpsSpoofing {
            spoof_offset_rate,
            drift_direction,
            falsify_report,
        } => {
            let dir = drift_direction.normalize();
            fx.drift_velocity = Some(dir * *spoof_offset_rate);
            fx.extra_speed = *spoof_offset_rate;
            fx.falsify_report = *falsify_report;
        }
        AttackKind::ManInTheMiddle { task_drop_prob } => {
            fx.task_fail_prob = *task_drop_prob;
        }
        AttackKind::SelfishHijack {
            skip_prob,
            energy_factor,
        } => {
            fx.task_skip_prob = *skip_prob;
            fx.energy_factor = *energy_factor;
        }
    }
    fx
}

/// Folds all schedules that touch `uav` at time `t` into one effect set.
pub fn combined_effects(uav: UavId, schedules: &[AttackSchedule], t: f64) -> AttackEffects {
    let mut fx = AttackEffects::default();
    for schedule in schedules {
        let e = apply_attack_effects(uav, schedule, t);
        if e.is_identity() {
            continue;
        }
        fx.extra_power += e.extra_power;
        fx.energy_factor *= e.energy_factor;
        fx.extra_speed += e.extra_speed;
        fx.drift_velocity = match (fx.drift_velocity, e.drift_velocity) {
            (Some(a), Some(b)) => Some(a + b),
            (a, b) => a.or(b),
        };
        fx.task_fail_prob = 1.0 - (1.0 - fx.task_fail_prob) * (1.0 - e.task_fail_prob);
        fx.task_skip_prob = 1.0 - (1.0 - fx.task_skip_prob) * (1.0 - e.task_skip_prob);
        fx.falsify_report |= e.falsify_report;
    }
    fx
}

/// Rejects configurations where two attacks run concurrently inside one
/// cluster; the detector's range comparison assumes a single attacker.
pub fn validate_schedule(
    schedules: &[AttackSchedule],
    clusters: &[Vec<UavId>],
) -> Result<(), ScheduleError> {
    for schedule in schedules {
        schedule.validate()?;
        if !clusters.iter().any(|c| c.contains(&schedule.target)) {
            return Err(ScheduleError::UnknownTarget(schedule.target));
        }
    }
    for cluster in clusters {
        let in_cluster: Vec<&AttackSchedule> = schedules
            .iter()
            .filter(|s| cluster.contains(&s.target))
            .collect();
        for (i, a) in in_cluster.iter().enumerate() {
            for b in &in_cluster[i + 1..] {
                let overlap = a.start < b.end && b.start < a.end;
                if overlap {
                    return Err(ScheduleError::ConcurrentAttacksInCluster {
                        first: a.target,
                        second: b.target,
                    });
                }
            }
        }
    }
    Ok(())
}
