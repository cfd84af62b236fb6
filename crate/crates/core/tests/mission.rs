//! End-to-end mission runs: determinism, evaluation-interval arithmetic, and
//! per-attack channel isolation against a paired clean run on the same seed.

use uav_trust_core::attack::{AttackKind, AttackSchedule};
use uav_trust_core::detector::{Classification, DetectorConfig};
use uav_trust_core::positioning::DistanceStation;
use uav_trust_core::sim::{
    run_mission, MissionOutput, MissionPlan, SimConfig, TaskKind, TaskSpec, WindField,
    WAYPOINT_CAPTURE_RADIUS,
};
use uav_trust_core::{UavId, Vec3};

fn square_plan(cx: f64, cy: f64, half: f64, z: f64) -> MissionPlan {
    MissionPlan {
        waypoints: vec![
            Vec3::new(cx - half, cy - half, z),
            Vec3::new(cx + half, cy - half, z),
            Vec3::new(cx + half, cy + half, z),
            Vec3::new(cx - half, cy + half, z),
        ],
        tasks: vec![
            TaskSpec { waypoint: 0, kind: TaskKind::Survey },
            TaskSpec { waypoint: 1, kind: TaskKind::Photography },
            TaskSpec { waypoint: 2, kind: TaskKind::Delivery },
            TaskSpec { waypoint: 3, kind: TaskKind::Survey },
        ],
    }
}

fn plans() -> Vec<MissionPlan> {
    vec![
        square_plan(300.0, 300.0, 150.0, 100.0),
        square_plan(700.0, 300.0, 150.0, 100.0),
        square_plan(1100.0, 300.0, 150.0, 100.0),
    ]
}

fn cfg(seed: u64) -> SimConfig {
    SimConfig {
        area_side: Some(1500.0),
        rng_seed: seed,
        ..SimConfig::default()
    }
}

fn clusters() -> Vec<Vec<UavId>> {
    vec![vec![UavId(0), UavId(1), UavId(2)]]
}

fn run(
    cfg: &SimConfig,
    wind: &WindField,
    attacks: &[AttackSchedule],
) -> MissionOutput {
    run_mission(
        cfg,
        &plans(),
        wind,
        attacks,
        &clusters(),
        &DetectorConfig::default(),
        None,
    )
    .unwrap()
}

#[test]
fn same_seed_is_bit_identical() {
    let a = run(&cfg(42), &WindField::calm(), &[]);
    let b = run(&cfg(42), &WindField::calm(), &[]);
    assert_eq!(a, b);

    let c = run(&cfg(43), &WindField::calm(), &[]);
    assert_ne!(a.telemetry, c.telemetry);
}

#[test]
fn twelve_minute_mission_yields_three_verdicts() {
    let mut config = cfg(1);
    config.mission_duration = 720.0;
    let out = run(&config, &WindField::calm(), &[]);
    assert_eq!(out.verdicts.len(), 3);
    assert_eq!(
        out.verdicts.iter().map(|v| v.interval_index).collect::<Vec<_>>(),
        vec![0, 1, 2]
    );
}

#[test]
fn clean_calm_mission_is_all_clear() {
    let out = run(&cfg(7), &WindField::calm(), &[]);
    for v in &out.verdicts {
        assert_eq!(v.flagged, None);
        assert_eq!(v.classification, Classification::Clear);
        assert!(!v.ambiguous);
    }
    // With zero wind the flown track equals the expected one exactly.
    for r in &out.telemetry {
        assert_eq!(r.expected_position, r.reported_position);
    }
    // Path-following bound: windowed deviation stays below the capture radius.
    for v in &out.verdicts {
        for tc in v.trust.values() {
            assert!(tc.deviation_trust < WAYPOINT_CAPTURE_RADIUS);
        }
    }
}

#[test]
fn energy_is_monotone_per_uav() {
    let wind = WindField {
        mean_wind: Vec3::new(4.0, 1.5, 0.0),
        gust_std: 1.0,
        energy_factor: 1.4,
    };
    let out = run(&cfg(3), &wind, &[]);
    for uav in 0..3u32 {
        let mut last = 0.0;
        for r in out.telemetry.iter().filter(|r| r.uav == UavId(uav)) {
            assert!(r.interval_energy >= 0.0);
            let cumulative = last + r.interval_energy;
            assert!(cumulative >= last);
            last = cumulative;
        }
        assert!(last > 0.0);
    }
}

fn per_uav(out: &MissionOutput, uav: u32) -> Vec<&uav_trust_core::sim::TelemetryRecord> {
    out.telemetry.iter().filter(|r| r.uav == UavId(uav)).collect()
}

fn cumulative_energy(out: &MissionOutput, uav: u32) -> f64 {
    per_uav(out, uav).iter().map(|r| r.interval_energy).sum()
}

#[test]
fn ddos_perturbs_only_the_energy_channel() {
    let clean = run(&cfg(11), &WindField::calm(), &[]);
    let attack = AttackSchedule {
        target: UavId(0),
        kind: AttackKind::DdosFlooding { flood_power: 200.0 },
        start: 0.0,
        end: 240.0,
    };
    let attacked = run(&cfg(11), &WindField::calm(), &[attack]);

    for uav in 1..3u32 {
        assert_eq!(per_uav(&clean, uav), per_uav(&attacked, uav));
    }
    let clean_rows = per_uav(&clean, 0);
    let attacked_rows = per_uav(&attacked, 0);
    for (c, a) in clean_rows.iter().zip(&attacked_rows) {
        assert_eq!(c.expected_position, a.expected_position);
        assert_eq!(c.reported_position, a.reported_position);
        assert_eq!(c.task_events, a.task_events);
    }
    let extra = cumulative_energy(&attacked, 0) - cumulative_energy(&clean, 0);
    assert!((extra - 48_000.0).abs() < 1e-6, "extra energy {extra}");
}

#[test]
fn mitm_perturbs_only_task_outcomes() {
    let clean = run(&cfg(13), &WindField::calm(), &[]);
    let attack = AttackSchedule {
        target: UavId(1),
        kind: AttackKind::ManInTheMiddle { task_drop_prob: 0.6 },
        start: 0.0,
        end: 1200.0,
    };
    let attacked = run(&cfg(13), &WindField::calm(), &[attack]);

    assert_eq!(per_uav(&clean, 0), per_uav(&attacked, 0));
    assert_eq!(per_uav(&clean, 2), per_uav(&attacked, 2));

    let clean_rows = per_uav(&clean, 1);
    let attacked_rows = per_uav(&attacked, 1);
    let mut clean_fails = 0;
    let mut attacked_fails = 0;
    for (c, a) in clean_rows.iter().zip(&attacked_rows) {
        assert_eq!(c.reported_position, a.reported_position);
        assert_eq!(c.interval_energy, a.interval_energy);
        clean_fails += c
            .task_events
            .iter()
            .filter(|(_, o)| *o == uav_trust_core::sim::TaskOutcome::Fail)
            .count();
        attacked_fails += a
            .task_events
            .iter()
            .filter(|(_, o)| *o == uav_trust_core::sim::TaskOutcome::Fail)
            .count();
    }
    assert!(attacked_fails > clean_fails);
}

#[test]
fn selfish_hijack_never_increases_energy_and_keeps_the_path() {
    let clean = run(&cfg(17), &WindField::calm(), &[]);
    let attack = AttackSchedule {
        target: UavId(2),
        kind: AttackKind::SelfishHijack { skip_prob: 0.7, energy_factor: 0.5 },
        start: 0.0,
        end: 1200.0,
    };
    let attacked = run(&cfg(17), &WindField::calm(), &[attack]);

    assert_eq!(per_uav(&clean, 0), per_uav(&attacked, 0));
    assert_eq!(per_uav(&clean, 1), per_uav(&attacked, 1));

    let clean_rows = per_uav(&clean, 2);
    let attacked_rows = per_uav(&attacked, 2);
    for (c, a) in clean_rows.iter().zip(&attacked_rows) {
        assert_eq!(c.reported_position, a.reported_position);
        assert!(a.interval_energy <= c.interval_energy + 1e-12);
    }
    assert!(cumulative_energy(&attacked, 2) < cumulative_energy(&clean, 2));
}

#[test]
fn gps_spoofing_diverges_the_track_and_costs_energy() {
    let clean = run(&cfg(19), &WindField::calm(), &[]);
    let attack = AttackSchedule {
        target: UavId(0),
        kind: AttackKind::GpsSpoofing {
            spoof_offset_rate: 2.0,
            drift_direction: Vec3::new(1.0, 0.0, 0.0),
            falsify_report: false,
        },
        start: 0.0,
        end: 1200.0,
    };
    let attacked = run(&cfg(19), &WindField::calm(), &[attack]);

    for uav in 1..3u32 {
        assert_eq!(per_uav(&clean, uav), per_uav(&attacked, uav));
    }
    let clean_rows = per_uav(&clean, 0);
    let attacked_rows = per_uav(&attacked, 0);
    for (c, a) in clean_rows.iter().zip(&attacked_rows) {
        // Evidence channel untouched: same task outcomes.
        assert_eq!(c.task_events, a.task_events);
        // True track diverges at the configured rate.
        let offset = (a.reported_position - c.reported_position).norm();
        assert!((offset - 2.0 * a.time).abs() < 1e-6, "offset {offset} at t={}", a.time);
        assert!(a.interval_energy > c.interval_energy);
    }
}

#[test]
fn spoof_deviation_over_a_covered_window_averages_half_the_ramp() {
    // 2 m/s drift over 240 s with the window spanning the whole interval:
    // the windowed deviation is the mean of a linear ramp, about 240 m.
    let attack = AttackSchedule {
        target: UavId(0),
        kind: AttackKind::GpsSpoofing {
            spoof_offset_rate: 2.0,
            drift_direction: Vec3::new(1.0, 0.0, 0.0),
            falsify_report: false,
        },
        start: 0.0,
        end: 240.0,
    };
    let mut config = cfg(31);
    config.mission_duration = 240.0;
    let out = run_mission(
        &config,
        &plans(),
        &WindField::calm(),
        &[attack],
        &clusters(),
        &DetectorConfig {
            alpha: 240,
            ..DetectorConfig::default()
        },
        None,
    )
    .unwrap();
    let samples: Vec<uav_trust_core::trust::PositionSample> = per_uav(&out, 0)
        .iter()
        .map(|r| uav_trust_core::trust::PositionSample {
            time: r.time,
            expected: r.expected_position,
            actual: r.reported_position,
        })
        .collect();
    let dev = uav_trust_core::trust::deviation_trust(&samples, 240).unwrap();
    assert!((dev - 240.0).abs() < 5.0, "windowed deviation {dev}");
    // The detector saw the same number through the verdict.
    let verdict = &out.verdicts[0];
    let tc = &verdict.trust[&UavId(0)];
    assert!((tc.deviation_trust - dev).abs() < 1e-9);
}

#[test]
fn unset_area_side_is_drawn_from_the_documented_range() {
    let mut config = cfg(5);
    config.area_side = None;
    config.mission_duration = 240.0;
    let a = run(&config, &WindField::calm(), &[]);
    assert!(
        (uav_trust_core::sim::AREA_SIDE_RANGE.0..=uav_trust_core::sim::AREA_SIDE_RANGE.1)
            .contains(&a.area_side)
    );
    let b = run(&config, &WindField::calm(), &[]);
    assert_eq!(a.area_side, b.area_side);
    config.rng_seed = 6;
    let c = run(&config, &WindField::calm(), &[]);
    assert_ne!(a.area_side, c.area_side);
}

#[test]
fn spoof_with_falsified_report_hides_the_deviation() {
    let attack = AttackSchedule {
        target: UavId(0),
        kind: AttackKind::GpsSpoofing {
            spoof_offset_rate: 2.0,
            drift_direction: Vec3::new(1.0, 0.0, 0.0),
            falsify_report: true,
        },
        start: 0.0,
        end: 1200.0,
    };
    let out = run(&cfg(23), &WindField::calm(), &[attack]);
    for r in per_uav(&out, 0) {
        assert_eq!(r.expected_position, r.reported_position);
    }
}

#[test]
fn reported_position_comes_from_the_solver_when_stations_are_set() {
    let stations: Vec<DistanceStation> = [
        (0.0, 0.0, 0.0),
        (1500.0, 100.0, 40.0),
        (80.0, 1500.0, -30.0),
        (700.0, 600.0, 1200.0),
        (1400.0, 1400.0, 300.0),
    ]
    .iter()
    .enumerate()
    .map(|(i, (x, y, z))| DistanceStation {
        id: i as u32,
        position: Vec3::new(*x, *y, *z),
        transmit_time: 0.0,
    })
    .collect();

    let mut config = cfg(29);
    config.mission_duration = 120.0;
    let out = run_mission(
        &config,
        &plans(),
        &WindField::calm(),
        &[],
        &clusters(),
        &DetectorConfig::default(),
        Some(&stations),
    )
    .unwrap();
    for r in &out.telemetry {
        assert!((r.reported_position - r.expected_position).norm() < 1e-3);
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let detector = DetectorConfig::default();
    let wind = WindField::calm();

    // Too few plans.
    let err = run_mission(&cfg(1), &plans()[..2], &wind, &[], &clusters(), &detector, None);
    assert!(err.is_err());

    // Cluster too small.
    let err = run_mission(
        &cfg(1),
        &plans(),
        &wind,
        &[],
        &[vec![UavId(0), UavId(1)]],
        &detector,
        None,
    );
    assert!(err.is_err());

    // Bad weights surface as config errors.
    let mut bad_detector = DetectorConfig::default();
    bad_detector.weights.w_task = 0.9;
    let err = run_mission(&cfg(1), &plans(), &wind, &[], &clusters(), &bad_detector, None);
    assert!(err.is_err());
}
