//! Cluster-level anomaly detection.
//!
//! Every evaluation interval the audit unit computes the trust components of
//! all cluster members and compares each member's total score against its
//! peers. A member is flagged only when it sits out of range of peers that
//! agree with each other, which is what keeps a cluster-wide shift (strong
//! wind) from being reported as an attack. At most one UAV per cluster is
//! ever flagged, matching the single-attacker assumption.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trust::{
    deviation_trust, energy_trust, opinion_from_evidence, task_trust, total_trust, EnergyLedger,
    EvidenceCounts, PositionSample, TrustComponents, TrustError, TrustWeights,
};
use crate::UavId;

#[derive(Debug, Error, PartialEq)]
pub enum DetectorError {
    #[error("cluster has {size} members, at least 3 required for range comparison")]
    ClusterTooSmall { size: usize },
    #[error(transparent)]
    Trust(#[from] TrustError),
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
}

/// Tuning knobs of the periodic evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Seconds between cluster evaluations.
    pub evaluation_interval: f64,
    /// Out-of-range threshold tau on total trust scores.
    pub range_threshold: f64,
    /// Deviation window length in samples.
    pub alpha: usize,
    pub weights: TrustWeights,
    /// Number of consecutive intervals the same UAV must be flagged before
    /// the flag counts as a confirmed attack.
    #[serde(default = "default_persistence")]
    pub persistence: u32,
    /// Minimum windowed deviation (meters) that every member must show for
    /// an unflagged interval to be classified as an environmental shift.
    #[serde(default = "default_env_deviation_threshold")]
    pub env_deviation_threshold: f64,
}

fn default_persistence() -> u32 {
    1
}

fn default_env_deviation_threshold() -> f64 {
    30.0
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            evaluation_interval: 240.0,
            range_threshold: 0.15,
            alpha: 10,
            weights: TrustWeights::default(),
            persistence: default_persistence(),
            env_deviation_threshold: default_env_deviation_threshold(),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectorError> {
        if self.evaluation_interval <= 0.0 {
            return Err(DetectorError::InvalidConfig(
                "evaluation_interval must be positive".into(),
            ));
        }
        if self.range_threshold <= 0.0 {
            return Err(DetectorError::InvalidConfig(
                "range_threshold must be positive".into(),
            ));
        }
        if self.alpha == 0 {
            return Err(DetectorError::InvalidConfig("alpha must be at least 1".into()));
        }
        if self.persistence == 0 {
            return Err(DetectorError::InvalidConfig(
                "persistence must be at least 1".into(),
            ));
        }
        if self.env_deviation_threshold < 0.0 {
            return Err(DetectorError::InvalidConfig(
                "env_deviation_threshold must be non-negative".into(),
            ));
        }
        self.weights.validate()?;
        Ok(())
    }
}

/// Interval outcome for one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Scores in range, nothing to report.
    Clear,
    /// One member out of range of mutually consistent peers.
    AttackFlagged,
    /// Cluster-wide consistent shift with significant deviation everywhere.
    EnvironmentalShift,
}

/// Verdict of one cluster evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterVerdict {
    pub interval_index: usize,
    pub trust: BTreeMap<UavId, TrustComponents>,
    /// The single out-of-range member, if any.
    pub flagged: Option<UavId>,
    pub classification: Classification,
    /// Set when the score pattern fits no single-attacker explanation
    /// (e.g. two separated pairs) and the verdict fell back to clear.
    pub ambiguous: bool,
}

/// Everything the audit unit has observed about one UAV since mission start.
#[derive(Debug, Clone)]
pub struct UavObservation<'a> {
    pub evidence: EvidenceCounts,
    /// Cumulative consumed energy in Joules.
    pub energy: f64,
    /// Position samples since mission start, strictly increasing in time.
    pub samples: &'a [PositionSample],
}

/// Result of the peer-range comparison on a set of total trust scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutlierDecision {
    /// Everyone within `tau` of everyone else (or no candidate stands out
    /// while the spread is still small).
    InRange,
    /// Exactly this UAV is out of range of mutually consistent peers.
    Outlier(UavId),
    /// Spread exceeds `tau` but no member satisfies the single-outlier
    /// condition; out of model for the one-attacker assumption.
    Ambiguous,
}

/// Flags the member whose score differs from the mean of its peers by more
/// than `tau` while those peers stay pairwise within `tau` of one another.
///
/// If several members satisfy the condition the one with the largest
/// separation wins; ties break toward the smallest id for determinism.
pub fn range_outlier(scores: &[(UavId, f64)], tau: f64) -> OutlierDecision {
    debug_assert!(scores.len() >= 3);
    let spread = |vals: &[f64]| -> f64 {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in vals {
            min = min.min(*v);
            max = max.max(*v);
        }
        max - min
    };

    let mut best: Option<(UavId, f64)> = None;
    for (i, (id, score)) in scores.iter().enumerate() {
        let peers: Vec<f64> = scores
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, (_, s))| *s)
            .collect();
        if spread(&peers) > tau {
            continue;
        }
        let peer_mean = peers.iter().sum::<f64>() / peers.len() as f64;
        let separation = (score - peer_mean).abs();
        if separation > tau {
            let better = match best {
                None => true,
                Some((best_id, best_sep)) => {
                    separation > best_sep || (separation == best_sep && *id < best_id)
                }
            };
            if better {
                best = Some((*id, separation));
            }
        }
    }

    match best {
        Some((id, _)) => OutlierDecision::Outlier(id),
        None => {
            let all: Vec<f64> = scores.iter().map(|(_, s)| *s).collect();
            if spread(&all) <= tau {
                OutlierDecision::InRange
            } else {
                OutlierDecision::Ambiguous
            }
        }
    }
}

/// Computes every member's trust components and runs the peer-range
/// comparison for one evaluation interval.
pub fn evaluate_cluster(
    observations: &BTreeMap<UavId, UavObservation<'_>>,
    interval_index: usize,
    cfg: &DetectorConfig,
) -> Result<ClusterVerdict, DetectorError> {
    let k = observations.len();
    if k < 3 {
        return Err(DetectorError::ClusterTooSmall { size: k });
    }

    let ledger: EnergyLedger = observations
        .iter()
        .map(|(id, obs)| (*id, obs.energy))
        .collect();

    let mut trust = BTreeMap::new();
    for (id, obs) in observations {
        let op = opinion_from_evidence(&obs.evidence);
        let t_task = task_trust(&op);
        let peer_mean = ledger.peer_mean_energy(*id)?;
        let t_ene = energy_trust(obs.energy, peer_mean);
        // No samples yet (mission just started): no deviation evidence.
        let t_dev = if obs.samples.is_empty() {
            0.0
        } else {
            deviation_trust(obs.samples, cfg.alpha)?
        };
        trust.insert(
            *id,
            TrustComponents {
                task_trust: t_task,
                energy_trust: t_ene,
                deviation_trust: t_dev,
                total_trust: total_trust(t_task, t_ene, t_dev, &cfg.weights),
            },
        );
    }

    let scores: Vec<(UavId, f64)> = trust.iter().map(|(id, tc)| (*id, tc.total_trust)).collect();
    let (flagged, classification, ambiguous) = match range_outlier(&scores, cfg.range_threshold) {
        OutlierDecision::Outlier(id) => (Some(id), Classification::AttackFlagged, false),
        OutlierDecision::Ambiguous => (None, Classification::Clear, true),
        OutlierDecision::InRange => {
            let everyone_deviating = trust
                .values()
                .all(|tc| tc.deviation_trust >= cfg.env_deviation_threshold);
            let class = if everyone_deviating {
                Classification::EnvironmentalShift
            } else {
                Classification::Clear
            };
            (None, class, false)
        }
    };

    Ok(ClusterVerdict {
        interval_index,
        trust,
        flagged,
        classification,
        ambiguous,
    })
}

/// Per-UAV trust time series within the current mission, plus the recent
/// flag trail used by the persistence rule.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrustHistory {
    records: BTreeMap<UavId, Vec<TrustComponents>>,
    flags: Vec<Option<UavId>>,
}

impl TrustHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty() && self.flags.is_empty()
    }

    pub fn components_of(&self, uav: UavId) -> Option<&[TrustComponents]> {
        self.records.get(&uav).map(|v| v.as_slice())
    }

    pub fn intervals_recorded(&self) -> usize {
        self.flags.len()
    }

    /// Length of the current trailing run of intervals flagging `uav`.
    fn flag_streak(&self, uav: UavId) -> u32 {
        self.flags
            .iter()
            .rev()
            .take_while(|f| **f == Some(uav))
            .count() as u32
    }
}

/// Records the verdict into the mission history and applies the persistence
/// rule: a flag becomes a confirmed attack only once the same UAV has been
/// flagged in `persistence` consecutive intervals.
pub fn classify_interval(
    history: &mut TrustHistory,
    verdict: &ClusterVerdict,
    persistence: u32,
) -> Classification {
    for (id, tc) in &verdict.trust {
        history.records.entry(*id).or_default().push(*tc);
    }
    history.flags.push(verdict.flagged);

    match verdict.flagged {
        Some(id) if history.flag_streak(id) >= persistence => Classification::AttackFlagged,
        Some(_) => Classification::Clear,
        None => verdict.classification,
    }
}

/// Clears everything at a mission boundary; trust does not carry over.
pub fn mission_reset(history: &mut TrustHistory) {
    history.records.clear();
    history.flags.clear();
}
