use serde::{Deserialize, Serialize};

/// 2x2 confusion counts for binary predictions against binary labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    /// predicted 1, label 1
    pub tp: u64,
    /// predicted 0, label 1
    pub fn_: u64,
    /// predicted 1, label 0
    pub fp: u64,
    /// predicted 0, label 0
    pub tn: u64,
}

impl Confusion {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        Self { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn record(&mut self, predicted: bool, label: bool) {
        match (predicted, label) {
            (true, true) => self.tp += 1,
            (false, true) => self.fn_ += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// Swaps the roles of predictions and labels.
    pub fn transposed(&self) -> Self {
        Self::new(self.tp, self.fp, self.fn_, self.tn)
    }

    /// Renames class 0 to 1 and vice versa.
    pub fn relabeled(&self) -> Self {
        Self::new(self.tn, self.fp, self.fn_, self.tp)
    }
}

/// Cohen's Kappa `(p_o - p_e) / (1 - p_e)`.
///
/// Returns 0 for an empty confusion and whenever `p_e = 1` (a single class on
/// both sides), where the statistic is undefined.
pub fn cohen_kappa(c: &Confusion) -> f64 {
    let n = c.total();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let p_o = (c.tp + c.tn) as f64 / n;
    let pred1 = (c.tp + c.fp) as f64 / n;
    let label1 = (c.tp + c.fn_) as f64 / n;
    let p_e = pred1 * label1 + (1.0 - pred1) * (1.0 - label1);
    if p_e >= 1.0 {
        return 0.0;
    }
    (p_o - p_e) / (1.0 - p_e)
}

/// Probabilities at or above this threshold count as a positive prediction.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Running Kappa over a resettable window of the stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KappaAccumulator {
    confusion: Confusion,
    /// Stream position of the last reset.
    since: usize,
}

impl KappaAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, probability: f64, label: u8) {
        self.confusion
            .record(probability >= DECISION_THRESHOLD, label == 1);
    }

    pub fn reset(&mut self, at: usize) {
        self.confusion = Confusion::default();
        self.since = at;
    }

    pub fn kappa(&self) -> f64 {
        cohen_kappa(&self.confusion)
    }

    pub fn confusion(&self) -> Confusion {
        self.confusion
    }

    pub fn count(&self) -> u64 {
        self.confusion.total()
    }

    pub fn since(&self) -> usize {
        self.since
    }
}
