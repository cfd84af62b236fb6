//! Scenario configuration, Monte Carlo replication and report emission for
//! the UAV trust monitor. The `uav-trust` binary is a thin CLI over this
//! library; the bundled scenarios reproduce the standard attack and weather
//! cases as data files.

pub mod montecarlo;
pub mod output;
pub mod scenario;

pub use montecarlo::{run_monte_carlo, MonteCarloReport, MonteCarloRun};
pub use scenario::{bundled_names, bundled_scenario, load_scenario, ScenarioError, ScenarioSpec};
