//! Seeded Monte Carlo replication of a scenario and metric aggregation.
//!
//! Replication `r` runs with seed `base_seed + r`; replications are
//! independent, so they may execute on any number of worker threads without
//! changing the aggregated report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

use uav_trust_core::detector::Classification;
use uav_trust_core::sim::{run_mission, MissionOutput, MissionPlan, SimError, TaskKind};
use uav_trust_core::trust::TrustComponents;
use uav_trust_core::UavId;

use crate::scenario::{ScenarioError, ScenarioSpec};

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Mean trust components of every UAV at one evaluation interval, averaged
/// over all replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalMeans {
    pub interval_index: usize,
    pub per_uav: Vec<UavMeanTrust>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavMeanTrust {
    pub uav: UavId,
    pub trust: TrustComponents,
}

/// Compact record of one replication's verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationVerdicts {
    pub seed: u64,
    pub verdicts: Vec<VerdictSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub interval_index: usize,
    pub flagged: Option<UavId>,
    pub classification: Classification,
    pub ambiguous: bool,
}

/// Aggregated result of all replications.
///
/// `detection_rate` is the fraction of replications whose set of
/// attack-flagged UAVs is exactly the set of attacked UAVs; it is 0 by
/// construction for scenarios without attacks. `false_alarm_rate` is the
/// fraction of clean (attack-free) replications with any flag.
/// `environmental_accuracy` applies to wind-only scenarios: a replication
/// counts when nothing was flagged and at least half of its intervals were
/// classified as an environmental shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub scenario: String,
    pub replications: usize,
    pub detection_rate: f64,
    pub false_alarm_rate: f64,
    pub environmental_accuracy: f64,
    pub per_interval_mean_trust: Vec<IntervalMeans>,
    pub per_replication: Vec<ReplicationVerdicts>,
}

impl MonteCarloReport {
    fn mean_of(&self, uav: UavId, pick: impl Fn(&TrustComponents) -> f64) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for interval in &self.per_interval_mean_trust {
            for entry in &interval.per_uav {
                if entry.uav == uav {
                    sum += pick(&entry.trust);
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Mean total trust of one UAV across intervals and replications.
    pub fn mean_total_trust(&self, uav: UavId) -> f64 {
        self.mean_of(uav, |tc| tc.total_trust)
    }

    pub fn mean_task_trust(&self, uav: UavId) -> f64 {
        self.mean_of(uav, |tc| tc.task_trust)
    }

    pub fn mean_energy_trust(&self, uav: UavId) -> f64 {
        self.mean_of(uav, |tc| tc.energy_trust)
    }

    pub fn uav_ids(&self) -> Vec<UavId> {
        self.per_interval_mean_trust
            .first()
            .map(|i| i.per_uav.iter().map(|e| e.uav).collect())
            .unwrap_or_default()
    }
}

/// Report plus the first replication kept in full for figure data.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRun {
    pub report: MonteCarloReport,
    pub exemplar: MissionOutput,
}

struct RepOutcome {
    seed: u64,
    verdicts: Vec<uav_trust_core::detector::ClusterVerdict>,
    full: Option<MissionOutput>,
}

fn kinds_for_replication(spec: &ScenarioSpec, seed: u64) -> Vec<MissionPlan> {
    let mut plans = spec.plans.clone();
    if !spec.randomize_task_kinds {
        return plans;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x7461_736b);
    for cluster in &spec.clusters {
        let slots = cluster
            .first()
            .map(|id| plans[id.0 as usize].tasks.len())
            .unwrap_or(0);
        let kinds: Vec<TaskKind> = (0..slots)
            .map(|_| TaskKind::ALL[rng.gen_range(0..TaskKind::ALL.len())])
            .collect();
        for id in cluster {
            for (slot, kind) in kinds.iter().enumerate() {
                plans[id.0 as usize].tasks[slot].kind = *kind;
            }
        }
    }
    plans
}

fn run_replication(spec: &ScenarioSpec, rep: usize) -> Result<RepOutcome, MonteCarloError> {
    let seed = spec.base_seed + rep as u64;
    let mut cfg = spec.sim.clone();
    cfg.rng_seed = seed;
    let plans = kinds_for_replication(spec, seed);
    let output = run_mission(
        &cfg,
        &plans,
        &spec.wind,
        &spec.attacks,
        &spec.clusters,
        &spec.detector,
        spec.distance_stations.as_deref(),
    )?;
    Ok(RepOutcome {
        seed,
        verdicts: output.verdicts.clone(),
        full: if rep == 0 { Some(output) } else { None },
    })
}

/// Runs all replications (in parallel when a rayon pool is available) and
/// aggregates the detection metrics. Deterministic for a given `base_seed`
/// regardless of worker count.
pub fn run_monte_carlo(spec: &ScenarioSpec) -> Result<MonteCarloRun, MonteCarloError> {
    spec.validate()?;

    let mut outcomes: Vec<RepOutcome> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| run_replication(spec, rep))
        .collect::<Result<_, _>>()?;

    let targets: BTreeSet<UavId> = spec.attacks.iter().map(|a| a.target).collect();
    let wind_only = targets.is_empty()
        && (spec.wind.mean_wind.norm() > 0.0 || spec.wind.energy_factor > 1.0);

    let mut detected = 0usize;
    let mut false_alarms = 0usize;
    let mut environmental = 0usize;
    let mut per_replication = Vec::with_capacity(outcomes.len());

    // interval -> uav -> (sum of components, count)
    let mut sums: Vec<std::collections::BTreeMap<UavId, (TrustComponents, usize)>> = Vec::new();

    for outcome in &outcomes {
        let mut flagged_set = BTreeSet::new();
        let mut env_intervals = 0usize;
        let mut summaries = Vec::with_capacity(outcome.verdicts.len());
        for v in &outcome.verdicts {
            if v.classification == Classification::AttackFlagged {
                if let Some(id) = v.flagged {
                    flagged_set.insert(id);
                }
            }
            if v.classification == Classification::EnvironmentalShift {
                env_intervals += 1;
            }
            if v.interval_index >= sums.len() {
                sums.resize_with(v.interval_index + 1, Default::default);
            }
            for (id, tc) in &v.trust {
                let entry = sums[v.interval_index]
                    .entry(*id)
                    .or_insert((TrustComponents::default(), 0));
                entry.0.task_trust += tc.task_trust;
                entry.0.energy_trust += tc.energy_trust;
                entry.0.deviation_trust += tc.deviation_trust;
                entry.0.total_trust += tc.total_trust;
                entry.1 += 1;
            }
            summaries.push(VerdictSummary {
                interval_index: v.interval_index,
                flagged: v.flagged,
                classification: v.classification,
                ambiguous: v.ambiguous,
            });
        }

        if !targets.is_empty() && flagged_set == targets {
            detected += 1;
        }
        if targets.is_empty() && !flagged_set.is_empty() {
            false_alarms += 1;
        }
        if flagged_set.is_empty() && 2 * env_intervals >= outcome.verdicts.len() {
            environmental += 1;
        }
        per_replication.push(ReplicationVerdicts {
            seed: outcome.seed,
            verdicts: summaries,
        });
    }

    let reps = outcomes.len() as f64;
    let per_interval_mean_trust = sums
        .into_iter()
        .enumerate()
        .map(|(interval_index, by_uav)| IntervalMeans {
            interval_index,
            per_uav: by_uav
                .into_iter()
                .map(|(uav, (sum, count))| UavMeanTrust {
                    uav,
                    trust: TrustComponents {
                        task_trust: sum.task_trust / count as f64,
                        energy_trust: sum.energy_trust / count as f64,
                        deviation_trust: sum.deviation_trust / count as f64,
                        total_trust: sum.total_trust / count as f64,
                    },
                })
                .collect(),
        })
        .collect();

    let report = MonteCarloReport {
        scenario: spec.name.clone(),
        replications: spec.replications,
        detection_rate: if targets.is_empty() {
            0.0
        } else {
            detected as f64 / reps
        },
        false_alarm_rate: if targets.is_empty() {
            false_alarms as f64 / reps
        } else {
            0.0
        },
        environmental_accuracy: if wind_only {
            environmental as f64 / reps
        } else {
            0.0
        },
        per_interval_mean_trust,
        per_replication,
    };

    let exemplar = outcomes
        .first_mut()
        .and_then(|o| o.full.take())
        .expect("at least one replication");

    Ok(MonteCarloRun { report, exemplar })
}
