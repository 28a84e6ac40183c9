//! MAGIC Net: a continuously trained GRU that, on each detection, freezes its
//! weights and races three options for `num_batches` mini-batches:
//!
//! * `MaskFineTune` - masks starting from the previous concept's masks,
//! * `MaskRandom` - freshly initialised masks,
//! * `Expand` - fresh masks plus `exp_size` new hidden units.
//!
//! Every option scores every point; the one with the best prequential Kappa
//! since the detection answers. Once the ensemble phase ends only the leader
//! keeps training. At the next detection the committed option is baked into a
//! new frozen base and its effective weights are stored as that concept's model.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{fit_net, Hyperparams, LearnerKind, MiniBatch, ModelSnapshot, RollingWindow};
use super::{StreamLearner, TrainEvent, TrainingSet};
use crate::eval::KappaAccumulator;
use crate::masking::{
    build_expanded, compose_winner, init_mask_finetune, init_mask_random, FrozenBase, MaskRecord,
    MaskStore, MaskedNet, OptionKind,
};
use crate::numcore::{predict_logit, sigmoid, AdamState, NetParams};

/// Observable phase of the learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Initial fully learnable GRU.
    Plastic,
    /// Three options live after a detection.
    Ensemble,
    /// A single option survives.
    Committed,
}

/// Counters describing the learner's history.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MagicStats {
    pub detections: usize,
    /// Winning option of every finished ensemble, in order.
    pub commits: Vec<OptionKind>,
    /// Detections where `MaskFineTune` had no previous mask to copy.
    pub finetune_fallbacks: usize,
}

impl MagicStats {
    pub fn expansions(&self) -> usize {
        self.commits
            .iter()
            .filter(|k| **k == OptionKind::Expand)
            .count()
    }
}

/// Snapshot of one live ensemble option.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStatus {
    pub kind: OptionKind,
    pub kappa: f64,
    pub hidden_dim: usize,
}

#[derive(Debug, Clone)]
struct OptionSlot {
    kind: OptionKind,
    net: MaskedNet,
    adam: AdamState,
    effective: NetParams,
    kappa: KappaAccumulator,
    last_prob: f64,
}

impl OptionSlot {
    fn new(kind: OptionKind, net: MaskedNet, hyper: &Hyperparams) -> Self {
        Self {
            kind,
            effective: net.effective(),
            net,
            adam: AdamState::new(hyper.adam()),
            kappa: KappaAccumulator::new(),
            last_prob: 0.5,
        }
    }

    fn fit(&mut self, set: &TrainingSet, epochs: usize) -> Vec<f64> {
        let losses = (0..epochs)
            .map(|_| {
                let eff = self.net.effective();
                let cache = crate::numcore::forward_batch(&set.batch, &eff);
                let (loss, g) =
                    crate::numcore::backward_batch(&set.batch, &eff, &cache, &set.targets);
                self.net.adam_step(&mut self.adam, &g);
                loss
            })
            .collect();
        self.effective = self.net.effective();
        losses
    }

    fn record(&self, concept_index: usize) -> MaskRecord {
        MaskRecord {
            concept_index,
            snapshot: self.effective.clone(),
            mask: Some(self.net.mask().clone()),
            option: self.kind,
        }
    }
}

#[derive(Debug, Clone)]
enum State {
    Plastic { net: NetParams, adam: AdamState },
    Ensemble { options: Vec<OptionSlot>, batches: usize },
    Committed { slot: OptionSlot },
}

/// Index of the best option: highest Kappa, ties to the earliest slot
/// (slots are ordered `MaskFineTune`, `MaskRandom`, `Expand`).
fn leader_index(options: &[OptionSlot]) -> usize {
    let mut best = 0;
    for (i, o) in options.iter().enumerate().skip(1) {
        if o.kappa.kappa() > options[best].kappa.kappa() {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct MagicNet {
    hyper: Hyperparams,
    rng: ChaCha8Rng,
    state: State,
    store: MaskStore,
    window: RollingWindow,
    batch: MiniBatch,
    stats: MagicStats,
}

impl MagicNet {
    pub fn new(input_dim: usize, hyper: Hyperparams, seed: u64) -> Self {
        // Same draw order as `CGru::new`, so both start from identical weights.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = NetParams::glorot(input_dim, hyper.hidden, &mut rng);
        Self {
            state: State::Plastic {
                net,
                adam: AdamState::new(hyper.adam()),
            },
            rng,
            store: MaskStore::new(),
            window: RollingWindow::new(hyper.window, input_dim),
            batch: MiniBatch::new(hyper.batch_size, hyper.window),
            stats: MagicStats::default(),
            hyper,
        }
    }

    pub fn mode(&self) -> Mode {
        match self.state {
            State::Plastic { .. } => Mode::Plastic,
            State::Ensemble { .. } => Mode::Ensemble,
            State::Committed { .. } => Mode::Committed,
        }
    }

    pub fn stats(&self) -> &MagicStats {
        &self.stats
    }

    pub fn mask_store(&self) -> &MaskStore {
        &self.store
    }

    /// Live options (one outside the ensemble phase, none while plastic).
    pub fn options(&self) -> Vec<EnsembleStatus> {
        let status = |o: &OptionSlot| EnsembleStatus {
            kind: o.kind,
            kappa: o.kappa.kappa(),
            hidden_dim: o.net.hidden_dim(),
        };
        match &self.state {
            State::Plastic { .. } => Vec::new(),
            State::Ensemble { options, .. } => options.iter().map(status).collect(),
            State::Committed { slot } => vec![status(slot)],
        }
    }

    /// Training batches seen by the current ensemble, if one is running.
    pub fn ensemble_batches(&self) -> Option<usize> {
        match self.state {
            State::Ensemble { batches, .. } => Some(batches),
            _ => None,
        }
    }

    /// The frozen base the current options mask, if any.
    pub fn frozen_base(&self) -> Option<&Arc<FrozenBase>> {
        match &self.state {
            State::Plastic { .. } => None,
            State::Ensemble { options, .. } => Some(options[0].net.base()),
            State::Committed { slot } => Some(slot.net.base()),
        }
    }

    /// Weights of the model that currently answers.
    pub fn answering_net(&self) -> &NetParams {
        match &self.state {
            State::Plastic { net, .. } => net,
            State::Ensemble { options, .. } => &options[leader_index(options)].effective,
            State::Committed { slot } => &slot.effective,
        }
    }

    fn live_record(&self) -> MaskRecord {
        let concept_index = self.store.len();
        match &self.state {
            State::Plastic { net, .. } => MaskRecord {
                concept_index,
                snapshot: net.clone(),
                mask: None,
                option: OptionKind::Plastic,
            },
            State::Ensemble { options, .. } => options[leader_index(options)].record(concept_index),
            State::Committed { slot } => slot.record(concept_index),
        }
    }

    /// Ends a running ensemble, keeping its current leader.
    fn commit_leader(&mut self) {
        let state = std::mem::replace(
            &mut self.state,
            State::Plastic {
                net: NetParams::zeros(0, 0),
                adam: AdamState::new(self.hyper.adam()),
            },
        );
        self.state = match state {
            State::Ensemble { mut options, .. } => {
                let slot = options.swap_remove(leader_index(&options));
                self.stats.commits.push(slot.kind);
                State::Committed { slot }
            }
            other => other,
        };
    }

    fn spawn_ensemble(&mut self, base: Arc<FrozenBase>) {
        let (ft_mask, fell_back) =
            init_mask_finetune(self.store.last_mask(), base.net(), &mut self.rng);
        if fell_back {
            self.stats.finetune_fallbacks += 1;
        }
        let rnd_mask = init_mask_random(base.net(), &mut self.rng);
        let expanded = build_expanded(base.clone(), self.hyper.exp_size, &mut self.rng);
        let options = vec![
            OptionSlot::new(
                OptionKind::MaskFineTune,
                MaskedNet::masked(base.clone(), ft_mask),
                &self.hyper,
            ),
            OptionSlot::new(
                OptionKind::MaskRandom,
                MaskedNet::masked(base, rnd_mask),
                &self.hyper,
            ),
            OptionSlot::new(OptionKind::Expand, expanded, &self.hyper),
        ];
        self.state = State::Ensemble {
            options,
            batches: 0,
        };
    }
}

impl StreamLearner for MagicNet {
    fn kind(&self) -> LearnerKind {
        LearnerKind::Magic
    }

    fn predict_one(&mut self, x: &[f64]) -> f64 {
        self.window.push(x);
        let seq = self.window.padded();
        match &mut self.state {
            State::Plastic { net, .. } => sigmoid(predict_logit(&seq, net)),
            State::Ensemble { options, .. } => {
                for o in options.iter_mut() {
                    o.last_prob = sigmoid(predict_logit(&seq, &o.effective));
                }
                options[leader_index(options)].last_prob
            }
            State::Committed { slot } => {
                slot.last_prob = sigmoid(predict_logit(&seq, &slot.effective));
                slot.last_prob
            }
        }
    }

    fn observe(&mut self, x: &[f64]) {
        self.window.push(x);
    }

    fn learn_one(&mut self, x: &[f64], y: u8) -> Option<TrainEvent> {
        if let State::Ensemble { options, .. } = &mut self.state {
            for o in options.iter_mut() {
                o.kappa.update(o.last_prob, y);
            }
        }
        let set = self.batch.push(x, y)?;
        let epochs = self.hyper.epochs;
        let sequences = set.targets.len();
        let mut finished = false;
        let losses = match &mut self.state {
            State::Plastic { net, adam } => fit_net(net, adam, &set.batch, &set.targets, epochs),
            State::Ensemble { options, batches } => {
                let mut all: Vec<Vec<f64>> =
                    options.par_iter_mut().map(|o| o.fit(&set, epochs)).collect();
                *batches += 1;
                finished = *batches >= self.hyper.num_batches;
                all.swap_remove(leader_index(options))
            }
            State::Committed { slot } => slot.fit(&set, epochs),
        };
        if finished {
            self.commit_leader();
        }
        Some(TrainEvent { sequences, losses })
    }

    fn on_drift_detected(&mut self) {
        self.stats.detections += 1;
        if matches!(self.state, State::Ensemble { .. }) {
            self.commit_leader();
        }
        let record = self.live_record();
        let base = match &self.state {
            State::Plastic { net, .. } => FrozenBase::new(net.clone()),
            State::Committed { slot } => compose_winner(&slot.net),
            State::Ensemble { .. } => unreachable!("ensemble committed above"),
        };
        self.store.push(record);
        self.spawn_ensemble(Arc::new(base));
        self.batch.flush();
    }

    fn snapshot(&self) -> ModelSnapshot {
        let mut records = self.store.records().to_vec();
        records.push(self.live_record());
        ModelSnapshot::Magic { records }
    }

    fn param_count(&self) -> usize {
        let stored: usize = self
            .store
            .records()
            .iter()
            .map(|r| {
                r.snapshot.param_count()
                    + r.mask
                        .as_ref()
                        .map_or(0, |m| m.pre_activations().param_count())
            })
            .sum();
        let live = match &self.state {
            State::Plastic { net, .. } => net.param_count(),
            State::Ensemble { options, .. } => options.iter().map(|o| o.net.param_count()).sum(),
            State::Committed { slot } => slot.net.param_count(),
        };
        stored + live
    }
}
