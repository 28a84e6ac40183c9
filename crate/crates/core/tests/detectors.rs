use magic_net::detectors::{
    build_schedule, expected_counts, measure_schedule, round_half_up, Tag, TP_WINDOW,
};
use magic_net::error::Error;
use proptest::prelude::*;

fn oracle_counts(n: usize, precision: f64, recall: f64) -> (usize, usize) {
    // exact decimal rounding on a 1e-9 grid, halves go up
    let half_up = |x: f64| {
        let scaled = (x * 1e9).round() as u64;
        ((scaled + 500_000_000) / 1_000_000_000) as usize
    };
    let tp = half_up(recall * n as f64);
    (tp, half_up(tp as f64 / precision))
}

fn setting() -> impl Strategy<Value = (Vec<usize>, usize, f64, f64, usize, u64)> {
    (1usize..12, 3000usize..12_000, 1u32..=20, 1u32..=20, 1usize..60, any::<u64>()).prop_map(
        |(n, spacing, p, r, gap, seed)| {
            let drifts = (1..=n).map(|i| i * spacing).collect();
            (drifts, (n + 1) * spacing, f64::from(p) / 20.0, f64::from(r) / 20.0, gap, seed)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn schedules_honour_their_contract((drifts, len, p, r, gap, seed) in setting()) {
        let s = match build_schedule(&drifts, p, r, len, gap, seed) {
            Ok(s) => s,
            Err(Error::InfeasibleSchedule { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let (tp, total) = oracle_counts(drifts.len(), p, r);
        prop_assert_eq!(expected_counts(drifts.len(), p, r), (tp, total));
        prop_assert_eq!(s.len(), total);
        let tps: Vec<_> = s.detections.iter().filter(|d| d.tag == Tag::TruePositive).collect();
        prop_assert_eq!(tps.len(), tp);
        prop_assert!(s.detections.windows(2).all(|w| w[0].t < w[1].t));
        prop_assert!(s.detections.iter().all(|d| d.t < len));

        let mut hit = vec![false; drifts.len()];
        for d in &tps {
            let i = d.drift.expect("true positive names its drift");
            prop_assert!(!hit[i]);
            hit[i] = true;
            prop_assert!(d.t > drifts[i] && d.t <= drifts[i] + TP_WINDOW);
        }
        for d in s.detections.iter().filter(|d| d.tag == Tag::FalsePositive) {
            prop_assert!(d.drift.is_none());
            prop_assert!(drifts.iter().all(|&x| !(d.t > x && d.t <= x + TP_WINDOW)));
            for o in &s.detections {
                if o.t != d.t {
                    prop_assert!(o.t.abs_diff(d.t) >= gap, "{} and {} closer than {}", o.t, d.t, gap);
                }
            }
        }

        let (mp, mr) = measure_schedule(&s, &drifts);
        let want_p = if total == 0 { 1.0 } else { tp as f64 / total as f64 };
        prop_assert_eq!(mp, want_p);
        prop_assert_eq!(mr, tp as f64 / drifts.len() as f64);
    }

    #[test]
    fn rounding_is_half_up(k in 0u32..10_000) {
        let x = f64::from(k) / 4.0;
        let want = (k / 4 + u32::from(k % 4 >= 2)) as usize;
        prop_assert_eq!(round_half_up(x), want);
    }
}

#[test]
fn invalid_rates_are_rejected() {
    for (p, r) in [(0.0, 1.0), (1.0, 0.0), (1.2, 0.5), (0.5, f64::NAN)] {
        let err = build_schedule(&[100], p, r, 5000, 10, 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "({p}, {r}): {err}");
    }
    let outside = build_schedule(&[6000], 1.0, 1.0, 5000, 10, 0).unwrap_err();
    assert!(matches!(outside, Error::Config(_)));
}

#[test]
fn detector_grid_counts() {
    // ten drifts, the four detector settings used throughout
    assert_eq!(expected_counts(10, 1.0, 1.0), (10, 10));
    assert_eq!(expected_counts(10, 1.0, 0.7), (7, 7));
    assert_eq!(expected_counts(10, 0.7, 1.0), (10, 14));
    assert_eq!(expected_counts(10, 0.7, 0.7), (7, 10));
    // 3 drifts at recall 0.5 round 1.5 up
    assert_eq!(expected_counts(3, 1.0, 0.5), (2, 2));
}
