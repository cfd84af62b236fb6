//! Trust scoring primitives.
//!
//! Four independent pieces feed the total trust score of a UAV: a
//! subjective-logic opinion derived from audited task outcomes, a
//! peer-relative energy consumption ratio, a windowed mean of the distance
//! between expected and actual positions, and a weighted fusion of the three.
//! Everything here is a pure function of its inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{UavId, Vec3};

/// Energies below this are treated as "no consumption yet" when the peer
/// mean would otherwise divide by zero.
pub const ZERO_ENERGY_EPSILON: f64 = 1e-9;

/// Cap applied to the energy trust ratio when the peer mean is zero but the
/// UAV itself has consumed energy.
pub const ENERGY_TRUST_CAP: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum TrustError {
    #[error("cluster has {size} members, at least {min} required")]
    ClusterTooSmall { size: usize, min: usize },
    #[error("UAV {0} is not present in the energy ledger")]
    UnknownUav(UavId),
    #[error("deviation window is empty")]
    EmptyWindow,
    #[error("invalid trust weights: {0}")]
    InvalidWeights(String),
}

/// Audited task outcome counters for one UAV within the current mission.
///
/// Counts only grow during a mission and are reset at mission boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvidenceCounts {
    pub successful: u64,
    pub failed: u64,
    pub uncertain: u64,
}

impl EvidenceCounts {
    pub fn new(successful: u64, failed: u64, uncertain: u64) -> Self {
        Self {
            successful,
            failed,
            uncertain,
        }
    }

    pub fn total(&self) -> u64 {
        self.successful + self.failed + self.uncertain
    }

    pub fn record_success(&mut self) {
        self.successful += 1;
    }

    pub fn record_failure(&mut self) {
        self.failed += 1;
    }

    pub fn record_uncertain(&mut self) {
        self.uncertain += 1;
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// Subjective-logic opinion: belief, disbelief and uncertainty summing to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpinionVector {
    pub belief: f64,
    pub disbelief: f64,
    pub uncertainty: f64,
}

/// Derives the opinion vector from task evidence.
///
/// With no evidence at all the opinion is fully uncertain, which puts the
/// task trust at its 0.5 midpoint at mission start.
pub fn opinion_from_evidence(ev: &EvidenceCounts) -> OpinionVector {
    let total = ev.total();
    if total == 0 {
        return OpinionVector {
            belief: 0.0,
            disbelief: 0.0,
            uncertainty: 1.0,
        };
    }
    let total = total as f64;
    OpinionVector {
        belief: ev.successful as f64 / total,
        disbelief: ev.failed as f64 / total,
        uncertainty: ev.uncertain as f64 / total,
    }
}

/// Task success rate trust for the binary reliable/unreliable statement:
/// `(2b + u) / 2`, always inside `[0, 1]`.
pub fn task_trust(op: &OpinionVector) -> f64 {
    (2.0 * op.belief + op.uncertainty) / 2.0
}

/// Cumulative energy consumed by each member of one cluster.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    energies: BTreeMap<UavId, f64>,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds consumed energy for a UAV, creating its entry on first use.
    pub fn record(&mut self, uav: UavId, joules: f64) {
        debug_assert!(joules >= 0.0, "energy increments must be non-negative");
        *self.energies.entry(uav).or_insert(0.0) += joules;
    }

    pub fn set(&mut self, uav: UavId, joules: f64) {
        debug_assert!(joules >= 0.0);
        self.energies.insert(uav, joules);
    }

    pub fn energy_of(&self, uav: UavId) -> Option<f64> {
        self.energies.get(&uav).copied()
    }

    /// Number of UAVs tracked by this ledger (`K`).
    pub fn cluster_size(&self) -> usize {
        self.energies.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (UavId, f64)> + '_ {
        self.energies.iter().map(|(id, e)| (*id, *e))
    }

    /// Mean energy of all cluster members except `uav`.
    pub fn peer_mean_energy(&self, uav: UavId) -> Result<f64, TrustError> {
        if !self.energies.contains_key(&uav) {
            return Err(TrustError::UnknownUav(uav));
        }
        let k = self.cluster_size();
        if k < 2 {
            return Err(TrustError::ClusterTooSmall { size: k, min: 2 });
        }
        let sum: f64 = self
            .energies
            .iter()
            .filter(|(id, _)| **id != uav)
            .map(|(_, e)| *e)
            .sum();
        Ok(sum / (k - 1) as f64)
    }
}

impl FromIterator<(UavId, f64)> for EnergyLedger {
    fn from_iter<T: IntoIterator<Item = (UavId, f64)>>(iter: T) -> Self {
        Self {
            energies: iter.into_iter().collect(),
        }
    }
}

/// Relative absolute deviation of a UAV's consumption from its peers:
/// `|own - peer_mean| / peer_mean`.
///
/// A zero peer mean cannot be divided through; in that case the ratio is 0
/// when the UAV itself has consumed nothing and [`ENERGY_TRUST_CAP`]
/// otherwise, keeping scores bounded.
pub fn energy_trust(own: f64, peer_mean: f64) -> f64 {
    debug_assert!(own >= 0.0 && peer_mean >= 0.0);
    if peer_mean < ZERO_ENERGY_EPSILON {
        if own < ZERO_ENERGY_EPSILON {
            0.0
        } else {
            ENERGY_TRUST_CAP
        }
    } else {
        (own - peer_mean).abs() / peer_mean
    }
}

/// One audited position observation: where the UAV should have been and
/// where it was seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionSample {
    /// Mission time in seconds. Samples for one UAV are strictly increasing.
    pub time: f64,
    pub expected: Vec3,
    pub actual: Vec3,
}

impl PositionSample {
    pub fn distance(&self) -> f64 {
        (self.expected - self.actual).norm()
    }
}

/// Mean expected-vs-actual distance over the `alpha` most recent samples.
///
/// Early in a mission fewer than `alpha` samples exist; the mean is then
/// taken over whatever is available.
pub fn deviation_trust(samples: &[PositionSample], alpha: usize) -> Result<f64, TrustError> {
    let window = alpha.min(samples.len());
    if window == 0 {
        return Err(TrustError::EmptyWindow);
    }
    let recent = &samples[samples.len() - window..];
    debug_assert!(recent.windows(2).all(|w| w[0].time < w[1].time));
    let sum: f64 = recent.iter().map(PositionSample::distance).sum();
    Ok(sum / window as f64)
}

/// Fusion weights plus the meter scale that makes the deviation term
/// commensurable with the two unitless terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustWeights {
    pub w_task: f64,
    pub w_ene: f64,
    pub w_dev: f64,
    /// Deviation normalizer in meters: the fusion uses `T_dev / deviation_scale`.
    pub deviation_scale: f64,
}

impl TrustWeights {
    pub fn new(w_task: f64, w_ene: f64, w_dev: f64, deviation_scale: f64) -> Result<Self, TrustError> {
        let w = Self {
            w_task,
            w_ene,
            w_dev,
            deviation_scale,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), TrustError> {
        let sum = self.w_task + self.w_ene + self.w_dev;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TrustError::InvalidWeights(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        for (name, w) in [
            ("w_task", self.w_task),
            ("w_ene", self.w_ene),
            ("w_dev", self.w_dev),
        ] {
            if !(0.0..=1.0).contains(&w) {
                return Err(TrustError::InvalidWeights(format!(
                    "{name} = {w} outside [0, 1]"
                )));
            }
        }
        if self.deviation_scale <= 0.0 {
            return Err(TrustError::InvalidWeights(format!(
                "deviation_scale = {} must be positive",
                self.deviation_scale
            )));
        }
        Ok(())
    }
}

impl Default for TrustWeights {
    fn default() -> Self {
        Self {
            w_task: 0.4,
            w_ene: 0.3,
            w_dev: 0.3,
            deviation_scale: 100.0,
        }
    }
}

/// All trust factors of one UAV for one evaluation interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrustComponents {
    pub task_trust: f64,
    pub energy_trust: f64,
    /// Windowed mean path deviation in meters (pre-normalization).
    pub deviation_trust: f64,
    pub total_trust: f64,
}

/// Weighted fusion of the three factors. The deviation term is subtracted,
/// so a heavily deviating UAV can end up with a negative score.
pub fn total_trust(task: f64, energy: f64, deviation_m: f64, w: &TrustWeights) -> f64 {
    w.w_task * task + w.w_ene * energy - w.w_dev * (deviation_m / w.deviation_scale)
}
