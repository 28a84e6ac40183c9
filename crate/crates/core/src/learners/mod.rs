//! Streaming learners: the continuously trained GRU, MAGIC Net and cPNN.
//!
//! Every learner follows the same per-point contract driven by the evaluation
//! loop: `predict_one` (which also advances the rolling window), then
//! `learn_one` once the label is revealed. Training fires whenever the
//! mini-batch fills.

mod buffer;
mod cgru;
mod cpnn;
mod magic;
mod snapshot;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::numcore::{AdamConfig, AdamState, NetParams, SeqBatch};

pub use buffer::{MiniBatch, RollingWindow, TrainingSet};
pub use cgru::CGru;
pub use cpnn::{cpnn_forward, cpnn_logits_batch, Cpnn, CpnnColumns};
pub use magic::{EnsembleStatus, MagicNet, MagicStats, Mode};
pub use snapshot::ModelSnapshot;

/// Training hyperparameters shared by all learners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Sequence length `W`.
    pub window: usize,
    /// Mini-batch size `B`.
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub hidden: usize,
    /// Units added by `Expand`.
    pub exp_size: usize,
    /// Training mini-batches an ensemble lives before committing.
    pub num_batches: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self::srw()
    }
}

impl Hyperparams {
    /// Defaults for synthetic SineRW streams.
    pub fn srw() -> Self {
        Self::with_hidden(50, 10)
    }

    /// Defaults for the real data sources with the given window.
    pub fn real(window: usize) -> Self {
        Self::with_hidden(25, window)
    }

    pub fn with_hidden(hidden: usize, window: usize) -> Self {
        Self {
            window,
            batch_size: 128,
            epochs: 10,
            lr: 0.01,
            hidden,
            exp_size: hidden / 2,
            num_batches: 30,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    #[serde(rename = "cgru")]
    CGru,
    Magic,
    Cpnn,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [LearnerKind::CGru, LearnerKind::Magic, LearnerKind::Cpnn];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::CGru => "cgru",
            LearnerKind::Magic => "magic",
            LearnerKind::Cpnn => "cpnn",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            LearnerKind::CGru => 0,
            LearnerKind::Magic => 1,
            LearnerKind::Cpnn => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown learner `{s}` (allowed: cgru, magic, cpnn)"))
    }
}

/// Emitted when a full mini-batch has been trained.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainEvent {
    /// Number of windows built from the batch.
    pub sequences: usize,
    /// Mean loss per epoch of the answering model.
    pub losses: Vec<f64>,
}

/// A learner driven point by point by the prequential loop.
pub trait StreamLearner: Send {
    fn kind(&self) -> LearnerKind;

    /// Advances the rolling window with `x` and returns P(y = 1).
    fn predict_one(&mut self, x: &[f64]) -> f64;

    /// Advances the rolling window without predicting (points held out for testing).
    fn observe(&mut self, x: &[f64]);

    /// Adds the labelled point to the mini-batch, training when it fills.
    /// Uses the prediction of the latest `predict_one` for any internal scoring.
    fn learn_one(&mut self, x: &[f64], y: u8) -> Option<TrainEvent>;

    fn on_drift_detected(&mut self);

    /// Immutable inference-only copy.
    fn snapshot(&self) -> ModelSnapshot;

    /// Number of stored real values (model size).
    fn param_count(&self) -> usize;
}

/// Builds a fresh learner of the given kind.
pub fn new_learner(
    kind: LearnerKind,
    input_dim: usize,
    hyper: Hyperparams,
    seed: u64,
) -> Box<dyn StreamLearner> {
    match kind {
        LearnerKind::CGru => Box::new(CGru::new(input_dim, hyper, seed)),
        LearnerKind::Magic => Box::new(MagicNet::new(input_dim, hyper, seed)),
        LearnerKind::Cpnn => Box::new(Cpnn::new(input_dim, hyper, seed)),
    }
}

/// Plain Adam training of a network on one training set. Returns per-epoch losses.
pub(crate) fn fit_net(
    net: &mut NetParams,
    adam: &mut AdamState,
    batch: &SeqBatch,
    targets: &[f64],
    epochs: usize,
) -> Vec<f64> {
    (0..epochs)
        .map(|_| {
            let cache = crate::numcore::forward_batch(batch, net);
            let (loss, g) = crate::numcore::backward_batch(batch, net, &cache, targets);
            adam.step_net(net, &g);
            loss
        })
        .collect()
}
