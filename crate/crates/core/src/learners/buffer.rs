use std::collections::VecDeque;

use crate::numcore::SeqBatch;

/// The last `W` feature vectors, for many-to-one inference.
#[derive(Debug, Clone)]
pub struct RollingWindow {
    capacity: usize,
    dim: usize,
    items: VecDeque<Vec<f64>>,
}

impl RollingWindow {
    pub fn new(capacity: usize, dim: usize) -> Self {
        assert!(capacity >= 1, "window size must be at least 1");
        Self {
            capacity,
            dim,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dim, "feature dimension");
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(x.to_vec());
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Full-length sequence, left-padded with zero vectors while cold.
    pub fn padded(&self) -> Vec<Vec<f64>> {
        let missing = self.capacity - self.items.len();
        let mut out = Vec::with_capacity(self.capacity);
        out.extend(std::iter::repeat_n(vec![0.0; self.dim], missing));
        out.extend(self.items.iter().cloned());
        out
    }
}

/// Training sequences built from one full mini-batch.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub batch: SeqBatch,
    pub targets: Vec<f64>,
}

/// Accumulates labelled points into mini-batches of size `B` and turns each
/// full batch into stride-1 windows of length `W`.
///
/// The last `W - 1` points of the previous batch are kept as a tail so windows
/// span batch boundaries.
#[derive(Debug, Clone)]
pub struct MiniBatch {
    size: usize,
    window: usize,
    points: Vec<(Vec<f64>, f64)>,
    tail: Vec<(Vec<f64>, f64)>,
}

impl MiniBatch {
    pub fn new(size: usize, window: usize) -> Self {
        assert!(size >= 1 && window >= 1);
        Self {
            size,
            window,
            points: Vec::with_capacity(size),
            tail: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Adds a point; returns the training set once the batch is full.
    pub fn push(&mut self, x: &[f64], y: u8) -> Option<TrainingSet> {
        self.points.push((x.to_vec(), f64::from(y)));
        if self.points.len() < self.size {
            return None;
        }
        let all: Vec<&(Vec<f64>, f64)> = self.tail.iter().chain(&self.points).collect();
        let set = windows(&all, self.window);
        let keep = (self.window - 1).min(all.len());
        self.tail = all[all.len() - keep..].iter().map(|p| (*p).clone()).collect();
        self.points.clear();
        set
    }

    /// Drops the partial batch and the tail.
    pub fn flush(&mut self) {
        self.points.clear();
        self.tail.clear();
    }
}

fn windows(all: &[&(Vec<f64>, f64)], w: usize) -> Option<TrainingSet> {
    if all.len() < w {
        return None;
    }
    let seqs: Vec<Vec<&[f64]>> = (w - 1..all.len())
        .map(|end| all[end + 1 - w..=end].iter().map(|p| p.0.as_slice()).collect())
        .collect();
    let targets = (w - 1..all.len()).map(|end| all[end].1).collect();
    Some(TrainingSet {
        batch: SeqBatch::from_sequences(&seqs),
        targets,
    })
}
