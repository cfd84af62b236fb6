//! Distance-station ranging and position solving.
//!
//! Ground stations at known positions broadcast timestamped signals; the
//! receiver clock carries an unknown bias, so each receive time yields a
//! pseudorange rather than a true range. With four or more stations the
//! 3-D position and the clock bias are solved jointly by iteratively
//! linearized least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec3;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Position update norm below which the solve is considered converged.
pub const SOLVE_TOLERANCE_M: f64 = 1e-6;

/// Iteration cap for the linearized solve.
pub const MAX_SOLVE_ITERATIONS: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum PositioningError {
    #[error("propagation time is negative: t - beta - s = {0} s")]
    NegativePropagation(f64),
    #[error("{got} stations provided, at least {needed} required")]
    InsufficientStations { got: usize, needed: usize },
    #[error("{stations} stations but {times} receive times")]
    MismatchedMeasurements { stations: usize, times: usize },
    #[error("degenerate station geometry: linearized system is rank-deficient")]
    DegenerateGeometry,
    #[error("solver did not converge within {0} iterations")]
    NotConverged(usize),
}

/// A ground transmitter at a known position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStation {
    pub id: u32,
    pub position: Vec3,
    /// Signal transmit time on the station clock, seconds.
    pub transmit_time: f64,
}

/// One station's timing converted to a range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeMeasurement {
    pub station: u32,
    pub receive_time: f64,
    pub derived_range: f64,
}

/// A solved position with its clock bias and fit quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionFix {
    pub position: Vec3,
    /// Receiver clock bias in seconds.
    pub clock_bias: f64,
    /// RMS of the pseudorange residuals at the solution, meters.
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Converts signal timing to a range: `(t_i - beta - s_i) * c`.
pub fn range_from_timing(receive_time: f64, transmit_time: f64, beta: f64) -> Result<f64, PositioningError> {
    let propagation = receive_time - beta - transmit_time;
    if propagation < 0.0 {
        return Err(PositioningError::NegativePropagation(propagation));
    }
    Ok(propagation * SPEED_OF_LIGHT)
}

fn pseudoranges(
    stations: &[DistanceStation],
    receive_times: &[f64],
) -> Result<Vec<f64>, PositioningError> {
    if stations.len() < 4 {
        return Err(PositioningError::InsufficientStations {
            got: stations.len(),
            needed: 4,
        });
    }
    if stations.len() != receive_times.len() {
        return Err(PositioningError::MismatchedMeasurements {
            stations: stations.len(),
            times: receive_times.len(),
        });
    }
    // Pseudoranges keep the unsolved bias inside: rho = range + c*beta.
    // They may be negative for a negative receiver bias, so no causality
    // check applies here (unlike range_from_timing, where beta is removed).
    Ok(stations
        .iter()
        .zip(receive_times)
        .map(|(s, t)| (t - s.transmit_time) * SPEED_OF_LIGHT)
        .collect())
}

fn residuals(stations: &[DistanceStation], rho: &[f64], position: &Vec3, c_beta: f64) -> DVector<f64> {
    DVector::from_iterator(
        stations.len(),
        stations
            .iter()
            .zip(rho)
            .map(|(s, r)| r - ((position - s.position).norm() + c_beta)),
    )
}

fn rms(v: &DVector<f64>) -> f64 {
    (v.dot(v) / v.len() as f64).sqrt()
}

/// Solves position and clock bias from at least four station timings.
///
/// Starts from the station centroid with zero bias and applies damped
/// Gauss-Newton steps until the position update drops below
/// [`SOLVE_TOLERANCE_M`].
pub fn solve_position(
    stations: &[DistanceStation],
    receive_times: &[f64],
) -> Result<PositionFix, PositioningError> {
    let rho = pseudoranges(stations, receive_times)?;
    let n = stations.len();

    let mut position = stations
        .iter()
        .fold(Vec3::zeros(), |acc, s| acc + s.position)
        / n as f64;
    let mut c_beta = 0.0;
    let mut current = residuals(stations, &rho, &position, c_beta);
    let mut current_rms = rms(&current);

    for iteration in 1..=MAX_SOLVE_ITERATIONS {
        let mut jacobian = DMatrix::zeros(n, 4);
        for (i, s) in stations.iter().enumerate() {
            let delta = position - s.position;
            let dist = delta.norm().max(1e-9);
            jacobian[(i, 0)] = delta.x / dist;
            jacobian[(i, 1)] = delta.y / dist;
            jacobian[(i, 2)] = delta.z / dist;
            jacobian[(i, 3)] = 1.0;
        }

        let svd = jacobian.svd(true, true);
        let max_singular = svd.singular_values.max();
        if svd.rank(max_singular * 1e-12) < 4 {
            return Err(PositioningError::DegenerateGeometry);
        }
        let step = svd
            .solve(&current, max_singular * 1e-12)
            .map_err(|_| PositioningError::DegenerateGeometry)?;

        // Backtrack if a full step would increase the residual; keeps the
        // returned fix at least as good as every earlier iterate.
        let step_position = Vec3::new(step[0], step[1], step[2]);
        let mut scale = 1.0;
        let mut accepted = None;
        while scale >= 1.0 / 1024.0 {
            let candidate_position = position + step_position * scale;
            let candidate_c_beta = c_beta + step[3] * scale;
            let res = residuals(stations, &rho, &candidate_position, candidate_c_beta);
            let r = rms(&res);
            if r <= current_rms {
                accepted = Some((candidate_position, candidate_c_beta, res, r));
                break;
            }
            scale *= 0.5;
        }
        let Some((next_position, next_c_beta, next_res, next_rms)) = accepted else {
            // The Gauss-Newton direction is a descent direction whenever the
            // Jacobian has full rank, so failing to improve at any damping
            // level means the gradient is numerically zero: converged.
            return Ok(PositionFix {
                position,
                clock_bias: c_beta / SPEED_OF_LIGHT,
                residual_rms: current_rms,
                iterations: iteration,
            });
        };

        let update_norm = step_position.norm() * scale;
        position = next_position;
        c_beta = next_c_beta;
        current = next_res;
        current_rms = next_rms;

        if update_norm < SOLVE_TOLERANCE_M {
            return Ok(PositionFix {
                position,
                clock_bias: c_beta / SPEED_OF_LIGHT,
                residual_rms: current_rms,
                iterations: iteration,
            });
        }
    }

    Err(PositioningError::NotConverged(MAX_SOLVE_ITERATIONS))
}

/// Receive times a station set would observe for a receiver at `position`
/// with clock bias `beta`.
pub fn synthesize_receive_times(stations: &[DistanceStation], position: &Vec3, beta: f64) -> Vec<f64> {
    stations
        .iter()
        .map(|s| s.transmit_time + (position - s.position).norm() / SPEED_OF_LIGHT + beta)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn station(id: u32, x: f64, y: f64, z: f64) -> DistanceStation {
        DistanceStation {
            id,
            position: Vec3::new(x, y, z),
            transmit_time: 0.0,
        }
    }

    fn test_stations() -> Vec<DistanceStation> {
        vec![
            station(0, 0.0, 0.0, 0.0),
            station(1, 1000.0, 50.0, 30.0),
            station(2, 40.0, 1000.0, -20.0),
            station(3, 300.0, 400.0, 900.0),
        ]
    }

    #[test]
    fn range_examples() {
        assert_eq!(range_from_timing(1.0, 1.0, 0.0).unwrap(), 0.0);
        let r = range_from_timing(1e-6, 0.0, 0.0).unwrap();
        assert!((r - 299.792458).abs() < 1e-9);
        assert!(matches!(
            range_from_timing(1.0, 1.0, 1e-9),
            Err(PositioningError::NegativePropagation(_))
        ));
    }

    #[test]
    fn exact_round_trip_without_bias() {
        let stations = test_stations();
        let truth = Vec3::new(420.0, 310.0, 125.0);
        let times = synthesize_receive_times(&stations, &truth, 0.0);
        let fix = solve_position(&stations, &times).unwrap();
        assert!((fix.position - truth).norm() < 1e-6, "error {}", (fix.position - truth).norm());
        assert!(fix.clock_bias.abs() < 1e-9);
        assert!(fix.residual_rms < 1e-6);
    }

    #[test]
    fn clock_bias_is_recovered() {
        let stations = test_stations();
        let truth = Vec3::new(420.0, 310.0, 125.0);
        let beta = 1e-5;
        let times = synthesize_receive_times(&stations, &truth, beta);
        let fix = solve_position(&stations, &times).unwrap();
        assert!((fix.position - truth).norm() < 1e-6);
        assert!((fix.clock_bias - beta).abs() < 1e-9);
    }

    #[test]
    fn three_stations_are_insufficient() {
        let stations = &test_stations()[..3];
        let err = solve_position(stations, &[0.0, 0.0, 0.0]);
        assert_eq!(
            err,
            Err(PositioningError::InsufficientStations { got: 3, needed: 4 })
        );
    }

    #[test]
    fn mismatched_times_are_rejected() {
        let stations = test_stations();
        let err = solve_position(&stations, &[0.0, 0.0, 0.0]);
        assert_eq!(
            err,
            Err(PositioningError::MismatchedMeasurements { stations: 4, times: 3 })
        );
    }

    #[test]
    fn coplanar_stations_are_degenerate() {
        // All stations in the z = 0 plane: altitude is unobservable.
        let stations = vec![
            station(0, 0.0, 0.0, 0.0),
            station(1, 1000.0, 0.0, 0.0),
            station(2, 0.0, 1000.0, 0.0),
            station(3, 1000.0, 1000.0, 0.0),
        ];
        let truth = Vec3::new(500.0, 500.0, 0.0);
        let times = synthesize_receive_times(&stations, &truth, 0.0);
        let result = solve_position(&stations, &times);
        assert!(matches!(
            result,
            Err(PositioningError::DegenerateGeometry) | Err(PositioningError::NotConverged(_))
        ));
    }

    #[test]
    fn residual_never_exceeds_the_initial_guess() {
        let stations = test_stations();
        let truth = Vec3::new(120.0, 640.0, 250.0);
        // Corrupt the times so a nonzero residual survives at the solution.
        let mut times = synthesize_receive_times(&stations, &truth, 2e-6);
        times[0] += 40.0 / SPEED_OF_LIGHT;
        times[2] -= 25.0 / SPEED_OF_LIGHT;

        let centroid = stations
            .iter()
            .fold(Vec3::zeros(), |acc, s| acc + s.position)
            / stations.len() as f64;
        let initial_rms = {
            let sq: f64 = stations
                .iter()
                .zip(&times)
                .map(|(s, t)| {
                    let rho = (t - s.transmit_time) * SPEED_OF_LIGHT;
                    let predicted = (centroid - s.position).norm();
                    (rho - predicted).powi(2)
                })
                .sum();
            (sq / stations.len() as f64).sqrt()
        };

        let fix = solve_position(&stations, &times).unwrap();
        assert!(fix.residual_rms <= initial_rms);
        assert!(fix.residual_rms > 0.0);
    }

    #[test]
    fn common_time_shift_moves_only_the_bias() {
        let stations = test_stations();
        let truth = Vec3::new(420.0, 310.0, 125.0);
        let times = synthesize_receive_times(&stations, &truth, 0.0);
        let shifted: Vec<f64> = times.iter().map(|t| t + 3e-6).collect();
        let a = solve_position(&stations, &times).unwrap();
        let b = solve_position(&stations, &shifted).unwrap();
        assert!((a.position - b.position).norm() < 1e-6);
        assert!((b.clock_bias - a.clock_bias - 3e-6).abs() < 1e-9);
    }
}
