use serde::{Deserialize, Serialize};

use super::{cpnn_forward, cpnn_logits_batch, LearnerKind};
use crate::masking::MaskRecord;
use crate::numcore::{forward_batch, predict_logit, sigmoid, NetParams, SeqBatch};

/// Frozen, inference-only copy of a learner.
///
/// Candidates are the models a snapshot can answer with on an old concept:
/// the single network for cGRU, one stored model per concept for MAGIC Net,
/// one head per column for cPNN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelSnapshot {
    CGru { net: NetParams },
    Magic { records: Vec<MaskRecord> },
    Cpnn { columns: Vec<NetParams> },
}

impl ModelSnapshot {
    pub fn kind(&self) -> LearnerKind {
        match self {
            ModelSnapshot::CGru { .. } => LearnerKind::CGru,
            ModelSnapshot::Magic { .. } => LearnerKind::Magic,
            ModelSnapshot::Cpnn { .. } => LearnerKind::Cpnn,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ModelSnapshot::CGru { net } => net.input_dim(),
            ModelSnapshot::Magic { records } => records[0].snapshot.input_dim(),
            ModelSnapshot::Cpnn { columns } => columns[0].input_dim(),
        }
    }

    pub fn candidate_count(&self) -> usize {
        match self {
            ModelSnapshot::CGru { .. } => 1,
            ModelSnapshot::Magic { records } => records.len(),
            ModelSnapshot::Cpnn { columns } => columns.len(),
        }
    }

    /// P(y = 1) from the model that was answering when the snapshot was taken.
    pub fn predict_window<S: AsRef<[f64]>>(&self, seq: &[S]) -> f64 {
        match self {
            ModelSnapshot::CGru { net } => sigmoid(predict_logit(seq, net)),
            ModelSnapshot::Magic { records } => {
                sigmoid(predict_logit(seq, &records.last().expect("records").snapshot))
            }
            ModelSnapshot::Cpnn { columns } => {
                sigmoid(*cpnn_forward(columns, seq).last().expect("columns"))
            }
        }
    }

    /// `out[c][n]`: probability of candidate `c` on sequence `n`.
    pub fn candidate_probabilities(&self, batch: &SeqBatch) -> Vec<Vec<f64>> {
        let probs = |logits: Vec<f64>| logits.into_iter().map(sigmoid).collect::<Vec<_>>();
        match self {
            ModelSnapshot::CGru { net } => vec![probs(forward_batch(batch, net).logits)],
            ModelSnapshot::Magic { records } => records
                .iter()
                .map(|r| probs(forward_batch(batch, &r.snapshot).logits))
                .collect(),
            ModelSnapshot::Cpnn { columns } => cpnn_logits_batch(columns, batch)
                .into_iter()
                .map(probs)
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            ModelSnapshot::CGru { net } => net.param_count(),
            ModelSnapshot::Magic { records } => {
                records.iter().map(|r| r.snapshot.param_count()).sum()
            }
            ModelSnapshot::Cpnn { columns } => columns.iter().map(NetParams::param_count).sum(),
        }
    }
}
