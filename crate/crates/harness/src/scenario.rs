//! Scenario files: a JSON document mirroring [`ScenarioSpec`] field for
//! field. The bundled set covers the normal, attack and weather cases; they
//! double as schema documentation.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use uav_trust_core::attack::{validate_schedule, AttackSchedule};
use uav_trust_core::detector::DetectorConfig;
use uav_trust_core::positioning::DistanceStation;
use uav_trust_core::sim::{MissionPlan, SimConfig, WindField};
use uav_trust_core::UavId;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Validation(String),
}

/// One fully specified experiment: fleet, weather, attacks, detector and
/// the Monte Carlo replication plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub sim: SimConfig,
    /// One plan per UAV, indexed by UAV id.
    pub plans: Vec<MissionPlan>,
    pub wind: WindField,
    /// Attack schedules; empty for clean scenarios.
    #[serde(default)]
    pub attacks: Vec<AttackSchedule>,
    pub detector: DetectorConfig,
    pub clusters: Vec<Vec<UavId>>,
    pub replications: usize,
    pub base_seed: u64,
    /// Redraw each task slot's kind per replication (shared across a
    /// cluster so members keep an identical task mix).
    #[serde(default)]
    pub randomize_task_kinds: bool,
    /// When set, reported positions come from the distance-station solver
    /// instead of direct GPS readout.
    #[serde(default)]
    pub distance_stations: Option<Vec<DistanceStation>>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |msg: String| ScenarioError::Validation(msg);

        self.sim
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.wind.validate().map_err(|e| invalid(e.to_string()))?;
        self.detector
            .validate()
            .map_err(|e| invalid(e.to_string()))?;

        if self.replications < 1 {
            return Err(invalid("replications must be at least 1".into()));
        }
        if self.plans.len() != self.sim.uav_count {
            return Err(invalid(format!(
                "{} plans for {} UAVs",
                self.plans.len(),
                self.sim.uav_count
            )));
        }
        // Plans must fit the smallest possible area when the side is drawn
        // at run time.
        let area = self
            .sim
            .area_side
            .unwrap_or(uav_trust_core::sim::AREA_SIDE_RANGE.0);
        for plan in &self.plans {
            plan.validate(area).map_err(|e| invalid(e.to_string()))?;
        }

        if self.clusters.is_empty() {
            return Err(invalid("at least one cluster is required".into()));
        }
        let mut seen = BTreeSet::new();
        for cluster in &self.clusters {
            if cluster.len() < 3 {
                return Err(invalid(format!(
                    "cluster of {} UAVs, at least 3 required",
                    cluster.len()
                )));
            }
            for id in cluster {
                if id.0 as usize >= self.sim.uav_count {
                    return Err(invalid(format!("cluster references unknown UAV {id}")));
                }
                if !seen.insert(*id) {
                    return Err(invalid(format!("UAV {id} appears in more than one cluster")));
                }
            }
        }

        validate_schedule(&self.attacks, &self.clusters)
            .map_err(|e| invalid(e.to_string()))?;
        for a in &self.attacks {
            if a.start < 0.0 || a.end > self.sim.mission_duration {
                return Err(invalid(format!(
                    "attack window [{}, {}) outside the {} s mission",
                    a.start, a.end, self.sim.mission_duration
                )));
            }
        }

        if self.randomize_task_kinds {
            for cluster in &self.clusters {
                let counts: BTreeSet<usize> = cluster
                    .iter()
                    .map(|id| self.plans[id.0 as usize].tasks.len())
                    .collect();
                if counts.len() > 1 {
                    return Err(invalid(
                        "randomize_task_kinds requires an identical task count within each cluster"
                            .into(),
                    ));
                }
            }
        }

        if let Some(stations) = &self.distance_stations {
            if stations.len() < 4 {
                return Err(invalid(format!(
                    "{} distance stations configured, at least 4 required",
                    stations.len()
                )));
            }
        }
        Ok(())
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let spec: ScenarioSpec = serde_json::from_str(text)?;
    spec.validate()?;
    Ok(spec)
}

/// Loads a scenario from a file path.
pub fn load_scenario<P: AsRef<Path>>(path: P) -> Result<ScenarioSpec, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

const BUNDLED: &[(&str, &str)] = &[
    ("normal", include_str!("bundled/normal.json")),
    ("ddos", include_str!("bundled/ddos.json")),
    ("gps-spoof", include_str!("bundled/gps_spoof.json")),
    ("mitm", include_str!("bundled/mitm.json")),
    ("selfish", include_str!("bundled/selfish.json")),
    ("wind", include_str!("bundled/wind.json")),
    ("wind+gps-spoof", include_str!("bundled/wind_gps_spoof.json")),
];

/// Names of the scenarios shipped with the binary, in listing order.
pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(name, _)| *name).collect()
}

/// Parses a bundled scenario by name.
pub fn bundled_scenario(name: &str) -> Option<Result<ScenarioSpec, ScenarioError>> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_scenario(text))
}
