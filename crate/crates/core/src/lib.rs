//! Fleet-level trust monitoring for UAV swarms.
//!
//! A ground-station audit unit periodically scores every UAV in a cluster on
//! three behavioral channels (task delivery, energy consumption, path
//! deviation), fuses them into a total trust score, and flags the single
//! cluster member whose score falls out of range of its peers. The crate
//! bundles the scoring math, the cluster detector, a deterministic
//! discrete-time fleet simulator with pluggable attack effects, and a
//! distance-station positioning solver.

pub mod attack;
pub mod detector;
pub mod positioning;
pub mod sim;
pub mod trust;

use serde::{Deserialize, Serialize};

/// 3-D position or velocity vector in meters / meters-per-second.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Identifier of a single UAV within a fleet.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct UavId(pub u32);

impl std::fmt::Display for UavId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
