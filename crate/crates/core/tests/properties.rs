//! Property tests for the trust math and the peer-range comparison.

use proptest::prelude::*;

use uav_trust_core::detector::{range_outlier, OutlierDecision};
use uav_trust_core::trust::{
    deviation_trust, energy_trust, opinion_from_evidence, task_trust, total_trust, EvidenceCounts,
    OpinionVector, PositionSample, TrustWeights,
};
use uav_trust_core::{UavId, Vec3};

fn arb_evidence() -> impl Strategy<Value = EvidenceCounts> {
    (0u64..10_000, 0u64..10_000, 0u64..10_000)
        .prop_map(|(s, f, x)| EvidenceCounts::new(s, f, x))
}

proptest! {
    #[test]
    fn opinion_is_on_the_simplex(ev in arb_evidence()) {
        let op = opinion_from_evidence(&ev);
        prop_assert!(op.belief >= 0.0 && op.belief <= 1.0);
        prop_assert!(op.disbelief >= 0.0 && op.disbelief <= 1.0);
        prop_assert!(op.uncertainty >= 0.0 && op.uncertainty <= 1.0);
        prop_assert!((op.belief + op.disbelief + op.uncertainty - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn task_trust_stays_in_unit_interval(ev in arb_evidence()) {
        let t = task_trust(&opinion_from_evidence(&ev));
        prop_assert!((0.0..=1.0).contains(&t));
    }

    #[test]
    fn task_trust_monotone_in_belief_for_fixed_uncertainty(
        u in 0.0f64..1.0,
        b1 in 0.0f64..1.0,
        b2 in 0.0f64..1.0,
    ) {
        let scale = 1.0 - u;
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let op_lo = OpinionVector { belief: lo * scale, disbelief: (1.0 - lo) * scale, uncertainty: u };
        let op_hi = OpinionVector { belief: hi * scale, disbelief: (1.0 - hi) * scale, uncertainty: u };
        prop_assert!(task_trust(&op_lo) <= task_trust(&op_hi));
    }

    #[test]
    fn extra_success_never_lowers_task_trust(ev in arb_evidence()) {
        let before = task_trust(&opinion_from_evidence(&ev));
        let mut more = ev;
        more.record_success();
        let after = task_trust(&opinion_from_evidence(&more));
        prop_assert!(after >= before - 1e-12);
    }

    #[test]
    fn energy_trust_identity_and_scale_invariance(
        own in 1e-6f64..1e9,
        peers in 1e-6f64..1e9,
        lambda in 1e-3f64..1e3,
    ) {
        prop_assert_eq!(energy_trust(own, own), 0.0);
        let base = energy_trust(own, peers);
        let scaled = energy_trust(lambda * own, lambda * peers);
        prop_assert!((base - scaled).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn deviation_zero_iff_perfect_and_translation_invariant(
        offsets in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), 1..20),
        shift in (-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3),
        alpha in 1usize..30,
    ) {
        let samples: Vec<PositionSample> = offsets
            .iter()
            .enumerate()
            .map(|(i, (dx, dy, dz))| PositionSample {
                time: i as f64,
                expected: Vec3::new(10.0 * i as f64, 5.0, 80.0),
                actual: Vec3::new(10.0 * i as f64 + dx, 5.0 + dy, 80.0 + dz),
            })
            .collect();
        let dev = deviation_trust(&samples, alpha).unwrap();
        let window = alpha.min(samples.len());
        let perfect = samples[samples.len() - window..]
            .iter()
            .all(|s| s.actual == s.expected);
        prop_assert_eq!(dev == 0.0, perfect);

        let shift = Vec3::new(shift.0, shift.1, shift.2);
        let shifted: Vec<PositionSample> = samples
            .iter()
            .map(|s| PositionSample {
                time: s.time,
                expected: s.expected + shift,
                actual: s.actual + shift,
            })
            .collect();
        let dev_shifted = deviation_trust(&shifted, alpha).unwrap();
        prop_assert!((dev - dev_shifted).abs() <= 1e-9);
    }

    #[test]
    fn total_trust_is_linear_with_the_stated_signs(
        task in 0.0f64..1.0,
        energy in 0.0f64..5.0,
        dev in 0.0f64..1000.0,
        extra in 1e-3f64..100.0,
    ) {
        let w = TrustWeights::default();
        let base = total_trust(task, energy, dev, &w);
        // More deviation strictly lowers the score when w_dev > 0.
        prop_assert!(total_trust(task, energy, dev + extra, &w) < base);
        // More task trust or energy ratio raises it.
        prop_assert!(total_trust(task + extra, energy, dev, &w) > base);
        prop_assert!(total_trust(task, energy + extra, dev, &w) > base);
    }

    #[test]
    fn outlier_decision_invariants(
        scores in prop::collection::vec(-2.0f64..2.0, 3..6),
        shift in -5.0f64..5.0,
    ) {
        let tau = 0.15;
        let labeled: Vec<(UavId, f64)> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| (UavId(i as u32), *s))
            .collect();
        let decision = range_outlier(&labeled, tau);

        // Identical inputs never flag anyone.
        let identical: Vec<(UavId, f64)> =
            labeled.iter().map(|(id, _)| (*id, 0.7)).collect();
        prop_assert_eq!(range_outlier(&identical, tau), OutlierDecision::InRange);

        // Translating every score leaves the decision unchanged.
        let translated: Vec<(UavId, f64)> = labeled
            .iter()
            .map(|(id, s)| (*id, s + shift))
            .collect();
        prop_assert_eq!(range_outlier(&translated, tau), decision);

        // Relabeling ids permutes nothing but the name of the outlier.
        let relabeled: Vec<(UavId, f64)> = labeled
            .iter()
            .map(|(id, s)| (UavId(100 + id.0), *s))
            .collect();
        let expected = match decision {
            OutlierDecision::Outlier(id) => OutlierDecision::Outlier(UavId(100 + id.0)),
            other => other,
        };
        prop_assert_eq!(range_outlier(&relabeled, tau), expected);
    }
}
