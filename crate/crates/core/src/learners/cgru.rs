use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{fit_net, Hyperparams, LearnerKind, MiniBatch, ModelSnapshot, RollingWindow};
use super::{StreamLearner, TrainEvent};
use crate::numcore::{predict_logit, sigmoid, AdamState, NetParams};

/// Continuously trained single-layer GRU. Ignores drift detections.
#[derive(Debug, Clone)]
pub struct CGru {
    hyper: Hyperparams,
    net: NetParams,
    adam: AdamState,
    window: RollingWindow,
    batch: MiniBatch,
}

impl CGru {
    pub fn new(input_dim: usize, hyper: Hyperparams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_net(NetParams::glorot(input_dim, hyper.hidden, &mut rng), hyper)
    }

    pub fn from_net(net: NetParams, hyper: Hyperparams) -> Self {
        let input_dim = net.input_dim();
        Self {
            adam: AdamState::new(hyper.adam()),
            window: RollingWindow::new(hyper.window, input_dim),
            batch: MiniBatch::new(hyper.batch_size, hyper.window),
            net,
            hyper,
        }
    }

    pub fn net(&self) -> &NetParams {
        &self.net
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }
}

impl StreamLearner for CGru {
    fn kind(&self) -> LearnerKind {
        LearnerKind::CGru
    }

    fn predict_one(&mut self, x: &[f64]) -> f64 {
        self.window.push(x);
        sigmoid(predict_logit(&self.window.padded(), &self.net))
    }

    fn observe(&mut self, x: &[f64]) {
        self.window.push(x);
    }

    fn learn_one(&mut self, x: &[f64], y: u8) -> Option<TrainEvent> {
        let set = self.batch.push(x, y)?;
        let losses = fit_net(
            &mut self.net,
            &mut self.adam,
            &set.batch,
            &set.targets,
            self.hyper.epochs,
        );
        Some(TrainEvent {
            sequences: set.targets.len(),
            losses,
        })
    }

    fn on_drift_detected(&mut self) {}

    fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot::CGru {
            net: self.net.clone(),
        }
    }

    fn param_count(&self) -> usize {
        self.net.param_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Hyperparams {
        Hyperparams {
            batch_size: 8,
            window: 3,
            hidden: 4,
            exp_size: 2,
            epochs: 2,
            ..Hyperparams::srw()
        }
    }

    #[test]
    fn zero_params_predict_half() {
        let mut m = CGru::from_net(NetParams::zeros(2, 4), tiny());
        assert_eq!(m.predict_one(&[0.3, 0.9]), 0.5);
    }

    #[test]
    fn trains_exactly_when_batch_fills() {
        let mut m = CGru::new(2, tiny(), 1);
        for i in 0..7 {
            m.predict_one(&[0.1 * i as f64, 0.2]);
            assert!(m.learn_one(&[0.1 * i as f64, 0.2], (i % 2) as u8).is_none());
        }
        let ev = m.learn_one(&[0.8, 0.2], 1).expect("eighth point trains");
        assert_eq!(ev.sequences, 6);
        assert_eq!(ev.losses.len(), 2);
    }

    #[test]
    fn detections_are_ignored() {
        let mut a = CGru::new(2, tiny(), 5);
        let before = a.net().clone();
        a.on_drift_detected();
        assert_eq!(a.net(), &before);
    }
}
