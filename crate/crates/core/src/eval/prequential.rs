use serde::{Deserialize, Serialize};

use super::KappaAccumulator;
use crate::detectors::DetectionSchedule;
use crate::error::{Error, Result};
use crate::learners::{ModelSnapshot, StreamLearner};
use crate::streams::{LabeledPoint, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrequentialConfig {
    /// Mini-batch size `B`; start scores are taken `start_batches * B` points
    /// after a detection.
    pub batch_size: usize,
    pub start_batches: usize,
    /// Points at the end of every concept held out as its test set.
    pub test_size: usize,
    /// Record a per-point trace.
    pub trace: bool,
}

impl Default for PrequentialConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            start_batches: 50,
            test_size: 2000,
            trace: false,
        }
    }
}

/// Scores for one concept that saw a detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftScore {
    pub concept: usize,
    /// First detection inside the concept's scored region.
    pub detection: usize,
    /// Position at which `start_kappa` was read.
    pub start_at: usize,
    pub start_kappa: f64,
    pub end_kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: usize,
    pub prediction: f64,
    pub label: u8,
    pub running_kappa: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrequentialReport {
    pub drifts: Vec<DriftScore>,
    pub trace: Vec<TracePoint>,
}

impl PrequentialReport {
    /// Mean start score over concepts with a detection.
    pub fn start(&self) -> Option<f64> {
        mean(self.drifts.iter().map(|d| d.start_kappa))
    }

    pub fn end(&self) -> Option<f64> {
        mean(self.drifts.iter().map(|d| d.end_kappa))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// The points held out at the end of one concept.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    pub concept: usize,
    pub points: Vec<LabeledPoint>,
}

#[derive(Debug, Clone)]
pub struct PrequentialOutcome {
    pub report: PrequentialReport,
    /// One snapshot per concept, taken at the concept's end.
    pub checkpoints: Vec<ModelSnapshot>,
    pub test_sets: Vec<TestSet>,
    /// Learner size at each concept end.
    pub param_counts: Vec<usize>,
}

/// Test-then-train over the whole stream.
///
/// Each scored point is predicted, scored and then learned. The last
/// `test_size` points of each concept are only observed. The Kappa
/// accumulator restarts at every detection.
pub fn run_prequential(
    learner: &mut dyn StreamLearner,
    stream: &Stream,
    schedule: &DetectionSchedule,
    cfg: &PrequentialConfig,
) -> Result<PrequentialOutcome> {
    if schedule.stream_length != stream.len() {
        return Err(Error::LengthMismatch {
            schedule: schedule.stream_length,
            stream: stream.len(),
        });
    }
    if let Some(c) = stream.concepts().iter().find(|c| c.length <= cfg.test_size) {
        return Err(Error::InsufficientData {
            required: cfg.test_size + 1,
            available: c.length,
        });
    }
    let detections = schedule.timestamps();
    let start_offset = cfg.start_batches * cfg.batch_size;
    let mut next_det = 0;
    let mut acc = KappaAccumulator::new();
    let mut out = PrequentialOutcome {
        report: PrequentialReport::default(),
        checkpoints: Vec::with_capacity(stream.concepts().len()),
        test_sets: Vec::with_capacity(stream.concepts().len()),
        param_counts: Vec::with_capacity(stream.concepts().len()),
    };

    for (ci, concept) in stream.concepts().iter().enumerate() {
        let scored_end = concept.end() - cfg.test_size;
        let mut anchor: Option<usize> = None;
        let mut start: Option<(usize, f64)> = None;
        for t in concept.start..concept.end() {
            while next_det < detections.len() && detections[next_det] <= t {
                learner.on_drift_detected();
                acc.reset(t);
                if ci > 0 && anchor.is_none() && t < scored_end {
                    anchor = Some(t);
                }
                next_det += 1;
            }
            let p = &stream.points[t];
            if t >= scored_end {
                learner.observe(&p.x);
                continue;
            }
            let prob = learner.predict_one(&p.x);
            acc.update(prob, p.y);
            learner.learn_one(&p.x, p.y);
            if cfg.trace {
                out.report.trace.push(TracePoint {
                    t,
                    prediction: prob,
                    label: p.y,
                    running_kappa: acc.kappa(),
                });
            }
            if let Some(a) = anchor {
                if start.is_none() && t + 1 == a + start_offset {
                    start = Some((t + 1, acc.kappa()));
                }
            }
        }
        if let Some(a) = anchor {
            let end_kappa = acc.kappa();
            let (start_at, start_kappa) = start.unwrap_or((scored_end, end_kappa));
            out.report.drifts.push(DriftScore {
                concept: ci,
                detection: a,
                start_at,
                start_kappa,
                end_kappa,
            });
        }
        out.checkpoints.push(learner.snapshot());
        out.param_counts.push(learner.param_count());
        out.test_sets.push(TestSet {
            concept: ci,
            points: stream.points[scored_end..concept.end()].to_vec(),
        });
    }
    // detections past the last point are never delivered
    Ok(out)
}
