use std::fs;
use std::path::Path;

use magic_net::error::Error;
use magic_net::streams::{
    build_configuration, ingest_csv, label_real, mode_labels, read_dump, temporal_augment,
    write_dump, CsvSchema, LabelFunction, LabelKind, LabeledPoint, Labeler, OnlineStandardizer,
    RealSource, Segmentation, SourceSpec, MODE_WINDOW, STD_EPSILON,
};
use proptest::prelude::*;

fn lf(kind: LabelKind, plus: bool) -> LabelFunction {
    LabelFunction { kind, plus, k: 2 }
}

#[test]
fn label_functions_on_a_hand_series() {
    let v = [1.0, 3.0, 2.0, 5.0, 4.0, 6.0];
    let cases = [
        (LabelKind::F1, vec![None, Some(1), Some(0), Some(1), Some(0), Some(1)]),
        (LabelKind::F2, vec![None, None, Some(0), Some(1), Some(1), Some(1)]),
        (LabelKind::F3, vec![None, None, Some(1), Some(1), Some(1), Some(1)]),
        (LabelKind::F4, vec![None, None, Some(0), Some(1), Some(0), Some(1)]),
        (LabelKind::F5, vec![None, None, None, Some(1), Some(0), Some(1)]),
    ];
    for (kind, plus_labels) in cases {
        assert_eq!(label_real(&v, lf(kind, true)), plus_labels, "{kind:?}+");
        let minus: Vec<Option<u8>> = plus_labels.iter().map(|l| l.map(|y| 1 - y)).collect();
        assert_eq!(label_real(&v, lf(kind, false)), minus, "{kind:?}-");
    }
}

fn mode_oracle(raw: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    for t in 0..raw.len() {
        let window = &raw[t.saturating_sub(MODE_WINDOW - 1)..=t];
        let ones = window.iter().map(|&y| usize::from(y)).sum::<usize>();
        let zeros = window.len() - ones;
        out.push(if ones > zeros {
            1
        } else if zeros > ones {
            0
        } else {
            raw[t]
        });
    }
    out
}

fn standardizer_oracle(xs: &[f64]) -> Vec<f64> {
    (1..=xs.len())
        .map(|n| {
            let seen = &xs[..n];
            let mean = seen.iter().sum::<f64>() / n as f64;
            let var = seen.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            (xs[n - 1] - mean) / (var + STD_EPSILON).sqrt()
        })
        .collect()
}

proptest! {
    #[test]
    fn mode_matches_window_majority(raw in prop::collection::vec(0u8..2, 0..200)) {
        prop_assert_eq!(mode_labels(&raw), mode_oracle(&raw));
    }

    #[test]
    fn standardizer_uses_only_the_past(xs in prop::collection::vec(-50.0f64..50.0, 1..100)) {
        let mut s = OnlineStandardizer::new(1);
        let got: Vec<f64> = xs.iter().map(|&x| s.transform(&[x])[0]).collect();
        for (a, b) in got.iter().zip(standardizer_oracle(&xs)) {
            prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn augmentation_appends_lagged_labels(
        ys in prop::collection::vec(0u8..2, 1..60), order in 0usize..5,
    ) {
        let pts: Vec<LabeledPoint> = ys
            .iter()
            .enumerate()
            .map(|(t, &y)| LabeledPoint { t, x: vec![t as f64 * 0.5], y })
            .collect();
        let aug = temporal_augment(&pts, order);
        for (t, p) in aug.iter().enumerate() {
            prop_assert_eq!(p.x.len(), 1 + order);
            prop_assert_eq!(p.x[0], t as f64 * 0.5);
            for lag in 1..=order {
                let want = if t >= lag { f64::from(ys[t - lag]) } else { 0.0 };
                prop_assert_eq!(p.x[lag], want);
            }
            prop_assert_eq!(p.y, ys[t]);
        }
    }

    #[test]
    fn minus_variants_complement_plus(
        v in prop::collection::vec(-10.0f64..10.0, 0..40), k in 1usize..6,
    ) {
        for pair in LabelFunction::all(k).chunks(2) {
            let plus = label_real(&v, pair[0]);
            let minus = label_real(&v, pair[1]);
            for (a, b) in plus.iter().zip(&minus) {
                prop_assert_eq!(a.is_some(), b.is_some());
                if let (Some(a), Some(b)) = (a, b) {
                    prop_assert_eq!(a + b, 1);
                }
            }
        }
    }
}

#[test]
fn srw_streams_are_seeded() {
    let spec = SourceSpec::Srw { recurrence: false };
    let a = build_configuration(&spec, 4, 1000, 11).unwrap();
    let b = build_configuration(&spec, 4, 1000, 11).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.meta.true_drifts, [1000, 2000, 3000]);
    assert!(a.points.iter().all(|p| p.x.iter().all(|v| (0.0..1.0).contains(v) && *v > 0.0)));
    let c = build_configuration(&spec, 4, 1000, 12).unwrap();
    assert_ne!(a.points, c.points);
}

#[test]
fn too_many_distinct_concepts_is_a_config_error() {
    let err = build_configuration(&SourceSpec::Srw { recurrence: false }, 33, 10, 0).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

fn write_csv(dir: &Path, name: &str, rows: &[String]) -> std::path::PathBuf {
    let path = dir.join(name);
    let mut text = String::from("time,temp,pressure,load\n");
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(&path, text).unwrap();
    path
}

fn schema() -> CsvSchema {
    CsvSchema {
        features: vec!["temp".into(), "pressure".into()],
        target: "load".into(),
        missing: Some("NA".into()),
        tumbling: 1,
    }
}

#[test]
fn csv_ingestion_interpolates_missing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let rows = [
        "0,1.0,10,5".to_string(),
        "1,,NA,6".to_string(),
        "2,3.0,30,NA".to_string(),
        "3,4.0,40,8".to_string(),
    ];
    let path = write_csv(dir.path(), "a.csv", &rows);
    let s = ingest_csv(&path, &schema()).unwrap();
    assert_eq!(s.features, [[1.0, 10.0], [2.0, 20.0], [3.0, 30.0], [4.0, 40.0]]);
    assert_eq!(s.target, [5.0, 6.0, 7.0, 8.0]);

    let tumbled = ingest_csv(&path, &CsvSchema { tumbling: 2, ..schema() }).unwrap();
    assert_eq!(tumbled.target, [5.5, 7.5]);
    assert_eq!(tumbled.features, [[1.5, 15.0], [3.5, 35.0]]);
}

#[test]
fn csv_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(dir.path(), "a.csv", &["0,1,2,3".into(), "1,1,oops,3".into()]);
    match ingest_csv(&path, &schema()) {
        Err(Error::Parse { row, column, value }) => {
            assert_eq!((row, column.as_str(), value.as_str()), (2, "pressure", "oops"));
        }
        other => panic!("unexpected {other:?}"),
    }
    let unknown = CsvSchema {
        target: "power".into(),
        ..schema()
    };
    match ingest_csv(&path, &unknown) {
        Err(Error::UnknownColumn { column, available }) => {
            assert_eq!(column, "power");
            assert!(available.contains("load"));
        }
        other => panic!("unexpected {other:?}"),
    }
    let missing = ingest_csv(&dir.path().join("nope.csv"), &schema()).unwrap_err();
    assert!(matches!(missing, Error::Io { .. }), "{missing}");
}

fn real_rows(n: usize, phase: f64) -> Vec<String> {
    (0..n)
        .map(|i| {
            let t = i as f64;
            format!(
                "{i},{},{},{}",
                (t * 0.1 + phase).sin() * 10.0,
                1000.0 + (t * 0.03).cos(),
                (t * 0.2 + phase).sin() + 0.01 * t
            )
        })
        .collect()
}

#[test]
fn real_source_builds_labelled_concepts() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_csv(dir.path(), "a.csv", &real_rows(300, 0.0));
    let b = write_csv(dir.path(), "b.csv", &real_rows(300, 1.0));
    let k = 4;
    let src = RealSource {
        paths: vec![a.clone(), b.clone()],
        schema: schema(),
        segmentation: Segmentation::PerFile,
        k,
    };
    let spec = SourceSpec::Csv(src.clone());
    let s = build_configuration(&spec, 2, 0, 3).unwrap();
    assert_eq!(s.len(), 2 * (300 - (k + 1)));
    assert_eq!(s.meta.true_drifts, [300 - (k + 1)]);
    assert_eq!(s.input_dim(), 2);
    assert!(s.points.iter().enumerate().all(|(t, p)| p.t == t));

    // labels follow each concept's labelling function on the raw target
    for (c, file) in s.concepts().iter().zip([&a, &b]) {
        let Labeler::Real(f) = c.labeler else {
            panic!("real concept with a boundary labeller")
        };
        let raw = ingest_csv(file, &schema()).unwrap();
        let want: Vec<u8> = label_real(&raw.target, f)
            .into_iter()
            .skip(k + 1)
            .map(Option::unwrap)
            .collect();
        let got: Vec<u8> = s.points[c.start..c.end()].iter().map(|p| p.y).collect();
        assert_eq!(got, want);
    }
    assert_ne!(s.concepts()[0].labeler, s.concepts()[1].labeler);

    let equal = SourceSpec::Csv(RealSource {
        segmentation: Segmentation::Equal,
        ..src
    });
    let e = build_configuration(&equal, 3, 100, 3).unwrap();
    assert_eq!(e.len(), 300);
    assert_eq!(e.meta.true_drifts, [100, 200]);
    let short = build_configuration(&equal, 3, 500, 3).unwrap_err();
    assert!(matches!(short, Error::InsufficientData { .. }), "{short}");
}

#[test]
fn augmented_real_stream_survives_a_dump() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_csv(dir.path(), "a.csv", &real_rows(200, 0.3));
    let spec = SourceSpec::Csv(RealSource {
        paths: vec![a],
        schema: schema(),
        segmentation: Segmentation::Equal,
        k: 3,
    });
    let s = build_configuration(&spec, 2, 0, 8).unwrap().augmented(2);
    assert_eq!(s.input_dim(), 4);
    assert_eq!(s.meta.augment_order, 2);
    let path = dir.path().join("dump.csv");
    write_dump(&s, &path).unwrap();
    assert_eq!(read_dump(&path).unwrap(), s);
}
