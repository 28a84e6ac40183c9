use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fit_net, Hyperparams, LearnerKind, MiniBatch, ModelSnapshot, RollingWindow};
use super::{StreamLearner, TrainEvent};
use crate::numcore::gru::{batch_hidden_states, hidden_states};
use crate::numcore::{forward_batch, predict_logit, sigmoid, AdamState, Matrix, NetParams, SeqBatch};

/// Column stack of a progressive network. Column `k > 0` reads the features
/// concatenated with column `k - 1`'s hidden state at the same time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpnnColumns {
    columns: Vec<NetParams>,
}

impl CpnnColumns {
    /// Panics if a column's input width does not match the lateral layout.
    pub fn new(columns: Vec<NetParams>) -> Self {
        assert!(!columns.is_empty(), "CpnnColumns: no columns");
        let x = columns[0].input_dim();
        for pair in columns.windows(2) {
            assert_eq!(
                pair[1].input_dim(),
                x + pair[0].hidden_dim(),
                "CpnnColumns: lateral input width"
            );
        }
        Self { columns }
    }

    pub fn columns(&self) -> &[NetParams] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.columns[0].input_dim()
    }

    pub fn into_inner(self) -> Vec<NetParams> {
        self.columns
    }
}

/// Logit of every column's head for one sequence, first column first.
pub fn cpnn_forward<S: AsRef<[f64]>>(columns: &[NetParams], seq: &[S]) -> Vec<f64> {
    let mut inputs: Vec<Vec<f64>> = seq.iter().map(|x| x.as_ref().to_vec()).collect();
    let mut logits = Vec::with_capacity(columns.len());
    for (k, col) in columns.iter().enumerate() {
        logits.push(predict_logit(&inputs, col));
        if k + 1 < columns.len() {
            let states = hidden_states(&inputs, &col.gru);
            inputs = seq
                .iter()
                .zip(states)
                .map(|(x, h)| [x.as_ref(), h.as_slice()].concat())
                .collect();
        }
    }
    logits
}

/// Input batch seen by the column that follows `columns`.
fn lateral_batch(columns: &[NetParams], batch: &SeqBatch) -> SeqBatch {
    let mut current = batch.clone();
    for col in columns {
        let states = batch_hidden_states(&current, &col.gru);
        let steps = batch
            .steps
            .iter()
            .zip(&states)
            .map(|(x, h)| hconcat(x, h))
            .collect();
        current = SeqBatch { steps };
    }
    current
}

fn hconcat(a: &Matrix, b: &Matrix) -> Matrix {
    let cols = a.cols() + b.cols();
    let mut out = Matrix::zeros(a.rows(), cols);
    for r in 0..a.rows() {
        let row = out.row_mut(r);
        row[..a.cols()].copy_from_slice(a.row(r));
        row[a.cols()..].copy_from_slice(b.row(r));
    }
    out
}

/// Per-column logits for a batch: `out[k][n]` is column `k` on sequence `n`.
pub fn cpnn_logits_batch(columns: &[NetParams], batch: &SeqBatch) -> Vec<Vec<f64>> {
    (0..columns.len())
        .map(|k| {
            let input = lateral_batch(&columns[..k], batch);
            forward_batch(&input, &columns[k]).logits
        })
        .collect()
}

/// Continual progressive network: a new column per detected drift, earlier
/// columns frozen and reachable through lateral connections.
#[derive(Debug, Clone)]
pub struct Cpnn {
    hyper: Hyperparams,
    input_dim: usize,
    rng: ChaCha8Rng,
    frozen: Vec<NetParams>,
    live: NetParams,
    adam: AdamState,
    window: RollingWindow,
    batch: MiniBatch,
}

impl Cpnn {
    pub fn new(input_dim: usize, hyper: Hyperparams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let live = NetParams::glorot(input_dim, hyper.hidden, &mut rng);
        Self {
            input_dim,
            rng,
            frozen: Vec::new(),
            live,
            adam: AdamState::new(hyper.adam()),
            window: RollingWindow::new(hyper.window, input_dim),
            batch: MiniBatch::new(hyper.batch_size, hyper.window),
            hyper,
        }
    }

    pub fn column_count(&self) -> usize {
        self.frozen.len() + 1
    }

    pub fn frozen_columns(&self) -> &[NetParams] {
        &self.frozen
    }

    pub fn live_column(&self) -> &NetParams {
        &self.live
    }

    fn all_columns(&self) -> Vec<NetParams> {
        let mut cols = self.frozen.clone();
        cols.push(self.live.clone());
        cols
    }
}

impl StreamLearner for Cpnn {
    fn kind(&self) -> LearnerKind {
        LearnerKind::Cpnn
    }

    fn predict_one(&mut self, x: &[f64]) -> f64 {
        self.window.push(x);
        let seq = self.window.padded();
        if self.frozen.is_empty() {
            return sigmoid(predict_logit(&seq, &self.live));
        }
        let mut inputs = seq.clone();
        for col in &self.frozen {
            let states = hidden_states(&inputs, &col.gru);
            inputs = seq
                .iter()
                .zip(states)
                .map(|(x, h)| [x.as_slice(), h.as_slice()].concat())
                .collect();
        }
        sigmoid(predict_logit(&inputs, &self.live))
    }

    fn observe(&mut self, x: &[f64]) {
        self.window.push(x);
    }

    fn learn_one(&mut self, x: &[f64], y: u8) -> Option<TrainEvent> {
        let set = self.batch.push(x, y)?;
        let input = lateral_batch(&self.frozen, &set.batch);
        let losses = fit_net(
            &mut self.live,
            &mut self.adam,
            &input,
            &set.targets,
            self.hyper.epochs,
        );
        Some(TrainEvent {
            sequences: set.targets.len(),
            losses,
        })
    }

    fn on_drift_detected(&mut self) {
        let width = self.input_dim + self.live.hidden_dim();
        let fresh = NetParams::glorot(width, self.hyper.hidden, &mut self.rng);
        self.frozen.push(std::mem::replace(&mut self.live, fresh));
        self.adam = AdamState::new(self.hyper.adam());
        self.batch.flush();
    }

    fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot::Cpnn {
            columns: self.all_columns(),
        }
    }

    fn param_count(&self) -> usize {
        self.frozen.iter().map(NetParams::param_count).sum::<usize>() + self.live.param_count()
    }
}
