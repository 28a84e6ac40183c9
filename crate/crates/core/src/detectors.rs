//! Simulated drift detectors with a target precision and recall.

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A detection within this many points after a true drift is a true positive.
pub const TP_WINDOW: usize = 1000;

const MAX_FP_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "TP")]
    TruePositive,
    #[serde(rename = "FP")]
    FalsePositive,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::TruePositive => "TP",
            Tag::FalsePositive => "FP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub t: usize,
    pub tag: Tag,
    /// Index into the true drifts for a true positive.
    pub drift: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSchedule {
    pub detections: Vec<Detection>,
    pub target_precision: f64,
    pub target_recall: f64,
    pub stream_length: usize,
}

impl DetectionSchedule {
    /// A schedule that never fires.
    pub fn empty(stream_length: usize) -> Self {
        Self {
            detections: Vec::new(),
            target_precision: 1.0,
            target_recall: 0.0,
            stream_length,
        }
    }

    pub fn timestamps(&self) -> Vec<usize> {
        self.detections.iter().map(|d| d.t).collect()
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// Round half up, for non-negative values.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// `(TP, total)` detections for `n` true drifts: TP = round(recall n),
/// total = round(TP / precision).
pub fn expected_counts(n_drifts: usize, precision: f64, recall: f64) -> (usize, usize) {
    let tp = round_half_up(recall * n_drifts as f64);
    (tp, round_half_up(tp as f64 / precision))
}

fn in_window(t: usize, drift: usize) -> bool {
    t > drift && t <= drift + TP_WINDOW
}

/// Draws a detection schedule.
///
/// True positives hit distinct drifts chosen uniformly, each uniformly inside
/// `(drift, drift + 1000]`. False positives are uniform over the points
/// outside every such window and keep at least `min_gap` points from every
/// other detection.
pub fn build_schedule(
    true_drifts: &[usize],
    precision: f64,
    recall: f64,
    stream_length: usize,
    min_gap: usize,
    seed: u64,
) -> Result<DetectionSchedule> {
    if !(precision > 0.0 && precision <= 1.0) || !(recall > 0.0 && recall <= 1.0) {
        return Err(Error::Config(format!(
            "detector: precision and recall must lie in (0, 1], got ({precision}, {recall})"
        )));
    }
    if let Some(&d) = true_drifts.iter().find(|&&d| d >= stream_length) {
        return Err(Error::Config(format!(
            "detector: drift at {d} lies outside a stream of {stream_length} points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (tp, total) = expected_counts(true_drifts.len(), precision, recall);
    let fp = total - tp;

    let mut chosen = sample(&mut rng, true_drifts.len(), tp).into_vec();
    chosen.sort_unstable();
    let mut detections: Vec<Detection> = chosen
        .into_iter()
        .map(|i| {
            let d = true_drifts[i];
            let hi = (d + TP_WINDOW).min(stream_length - 1);
            if hi <= d {
                return Err(Error::InfeasibleSchedule {
                    needed: 1,
                    stream_length,
                });
            }
            Ok(Detection {
                t: rng.gen_range(d + 1..=hi),
                tag: Tag::TruePositive,
                drift: Some(i),
            })
        })
        .collect::<Result<_>>()?;

    let allowed = |t: usize, placed: &[Detection]| {
        !true_drifts.iter().any(|&d| in_window(t, d))
            && placed.iter().all(|p| p.t.abs_diff(t) >= min_gap.max(1))
    };
    let mut placed_fp = 0;
    let mut attempts = 0;
    while placed_fp < fp {
        attempts += 1;
        if attempts > MAX_FP_ATTEMPTS {
            return Err(Error::InfeasibleSchedule {
                needed: fp,
                stream_length,
            });
        }
        let t = rng.gen_range(0..stream_length);
        if allowed(t, &detections) {
            detections.push(Detection {
                t,
                tag: Tag::FalsePositive,
                drift: None,
            });
            placed_fp += 1;
        }
    }
    detections.sort_by_key(|d| d.t);
    Ok(DetectionSchedule {
        detections,
        target_precision: precision,
        target_recall: recall,
        stream_length,
    })
}

/// Precision and recall recomputed from the window rule alone. Each true
/// drift is claimed by at most one detection (the earliest in its window).
/// An empty schedule has precision 1 by convention; no drifts give recall 1.
pub fn measure_schedule(schedule: &DetectionSchedule, true_drifts: &[usize]) -> (f64, f64) {
    let mut claimed = vec![false; true_drifts.len()];
    let mut tp = 0usize;
    for det in &schedule.detections {
        if let Some(i) = (0..true_drifts.len()).find(|&i| !claimed[i] && in_window(det.t, true_drifts[i])) {
            claimed[i] = true;
            tp += 1;
        }
    }
    let precision = if schedule.detections.is_empty() {
        1.0
    } else {
        tp as f64 / schedule.detections.len() as f64
    };
    let recall = if true_drifts.is_empty() {
        1.0
    } else {
        tp as f64 / true_drifts.len() as f64
    };
    (precision, recall)
}
