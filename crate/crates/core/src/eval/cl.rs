use serde::{Deserialize, Serialize};

use super::{cohen_kappa, Confusion, KappaAccumulator, TestSet, DECISION_THRESHOLD};
use crate::learners::{ModelSnapshot, RollingWindow};
use crate::numcore::SeqBatch;

/// Points during which every candidate of a checkpoint competes.
pub const SELECTION_POINTS: usize = 500;

/// Lower-triangular score matrix: `R[i][j]` is the checkpoint after concept
/// `i` evaluated on the test set of concept `j <= i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RMatrix {
    rows: Vec<Vec<f64>>,
}

impl RMatrix {
    /// Panics unless row `i` has exactly `i + 1` entries.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), i + 1, "RMatrix: row {i} must have {} entries", i + 1);
        }
        Self { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Mean over the lower triangle including the diagonal.
pub fn avg_metric(r: &RMatrix) -> f64 {
    let n = r.n() as f64;
    let sum: f64 = r.rows.iter().flatten().sum();
    sum / (n * (n + 1.0) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bwt {
    pub value: f64,
    /// `false` for a single concept, where the value is reported as 0.
    pub defined: bool,
}

/// Mean of `R[i][j] - R[j][j]` over the strict lower triangle.
pub fn bwt_metric(r: &RMatrix) -> Bwt {
    let n = r.n();
    if n < 2 {
        return Bwt {
            value: 0.0,
            defined: false,
        };
    }
    let mut sum = 0.0;
    for i in 1..n {
        for j in 0..i {
            sum += r.get(i, j) - r.get(j, j);
        }
    }
    Bwt {
        value: sum / ((n * (n - 1)) as f64 / 2.0),
        defined: true,
    }
}

/// Outcome of one checkpoint on one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRace {
    pub kappa: f64,
    /// Candidate that answered after the selection phase.
    pub leader: usize,
    /// Each candidate's Kappa over the selection phase.
    pub selection_kappas: Vec<f64>,
}

fn argmax_latest(acc: &[KappaAccumulator]) -> usize {
    let mut best = acc.len() - 1;
    for i in (0..acc.len()).rev() {
        if acc[i].kappa() > acc[best].kappa() {
            best = i;
        }
    }
    best
}

/// Runs a checkpoint over a test set from a cold window.
///
/// While fewer than `selection` points have been seen, the candidate with the
/// best Kappa so far answers (ties go to the most recent candidate); after
/// that the leader of the selection phase answers alone.
pub fn evaluate_checkpoint(
    snapshot: &ModelSnapshot,
    points: &[crate::streams::LabeledPoint],
    window: usize,
    selection: usize,
) -> CandidateRace {
    if points.is_empty() {
        return CandidateRace {
            kappa: 0.0,
            leader: snapshot.candidate_count() - 1,
            selection_kappas: vec![0.0; snapshot.candidate_count()],
        };
    }
    let mut rolling = RollingWindow::new(window, snapshot.input_dim());
    let seqs: Vec<Vec<Vec<f64>>> = points
        .iter()
        .map(|p| {
            rolling.push(&p.x);
            rolling.padded()
        })
        .collect();
    let probs = snapshot.candidate_probabilities(&SeqBatch::from_sequences(&seqs));
    let mut race = vec![KappaAccumulator::new(); probs.len()];
    let mut emitted = Confusion::default();
    let mut leader = probs.len() - 1;
    for (t, p) in points.iter().enumerate() {
        if t <= selection {
            leader = argmax_latest(&race);
        }
        emitted.record(probs[leader][t] >= DECISION_THRESHOLD, p.y == 1);
        if t < selection {
            for (acc, cand) in race.iter_mut().zip(&probs) {
                acc.update(cand[t], p.y);
            }
        }
    }
    CandidateRace {
        kappa: cohen_kappa(&emitted),
        leader: argmax_latest(&race),
        selection_kappas: race.iter().map(KappaAccumulator::kappa).collect(),
    }
}

/// Scores every checkpoint `i` on every test set `j <= i`.
pub fn run_cl_eval(
    checkpoints: &[ModelSnapshot],
    test_sets: &[TestSet],
    window: usize,
    selection: usize,
) -> RMatrix {
    assert_eq!(
        checkpoints.len(),
        test_sets.len(),
        "run_cl_eval: one test set per checkpoint"
    );
    let rows = checkpoints
        .iter()
        .enumerate()
        .map(|(i, ck)| {
            test_sets[..=i]
                .iter()
                .map(|ts| evaluate_checkpoint(ck, &ts.points, window, selection).kappa)
                .collect()
        })
        .collect();
    RMatrix::from_rows(rows)
}
