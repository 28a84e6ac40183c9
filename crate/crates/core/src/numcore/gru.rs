//! GRU recurrence, many-to-one output head and exact backpropagation through time.
//!
//! Gate equations:
//!
//! ```text
//! z  = sigmoid(Wz x + Uz h + bz)
//! r  = sigmoid(Wr x + Ur h + br)
//! h~ = tanh(Wh x + Uh (r * h) + bh)
//! h' = (1 - z) * h + z * h~
//! ```
//!
//! Two code paths exist. The vector path ([`gru_cell_forward`], [`predict_logit`])
//! serves per-point inference. The batched path ([`forward_batch`],
//! [`backward_batch`]) runs many windows at once through `dgemm` for training.

use super::matrix::{gemm, Trans};
use super::{GradBundle, GruParams, Matrix, NetParams};
use crate::error::{Error, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit against a {0,1} target, computed stably.
pub fn bce_with_logit(logit: f64, target: f64) -> f64 {
    logit.max(0.0) - target * logit + (-logit.abs()).exp().ln_1p()
}

/// Activations of one cell step, enough for backprop.
#[derive(Debug, Clone)]
pub struct CellCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub h_cand: Vec<f64>,
}

/// One GRU step on a single vector.
pub fn gru_cell_forward(x: &[f64], h_prev: &[f64], p: &GruParams) -> (Vec<f64>, CellCache) {
    let h = p.hidden_dim();
    assert_eq!(x.len(), p.input_dim(), "gru_cell_forward: input dimension");
    assert_eq!(h_prev.len(), h, "gru_cell_forward: hidden dimension");

    let mut z = p.bz.clone();
    p.wz.matvec_acc(x, &mut z);
    p.uz.matvec_acc(h_prev, &mut z);
    z.iter_mut().for_each(|v| *v = sigmoid(*v));

    let mut r = p.br.clone();
    p.wr.matvec_acc(x, &mut r);
    p.ur.matvec_acc(h_prev, &mut r);
    r.iter_mut().for_each(|v| *v = sigmoid(*v));

    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
    let mut cand = p.bh.clone();
    p.wh.matvec_acc(x, &mut cand);
    p.uh.matvec_acc(&rh, &mut cand);
    cand.iter_mut().for_each(|v| *v = v.tanh());

    let h_new = (0..h)
        .map(|i| (1.0 - z[i]) * h_prev[i] + z[i] * cand[i])
        .collect();
    let cache = CellCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        z,
        r,
        h_cand: cand,
    };
    (h_new, cache)
}

/// Runs the recurrence from a zero state and returns every hidden state
/// (`states[t]` is the state after consuming `seq[t]`).
pub fn hidden_states<S: AsRef<[f64]>>(seq: &[S], p: &GruParams) -> Vec<Vec<f64>> {
    let mut h = vec![0.0; p.hidden_dim()];
    let mut out = Vec::with_capacity(seq.len());
    for x in seq {
        h = gru_cell_forward(x.as_ref(), &h, p).0;
        out.push(h.clone());
    }
    out
}

/// Many-to-one logit via the vector path. Panics on an empty sequence.
pub fn predict_logit<S: AsRef<[f64]>>(seq: &[S], net: &NetParams) -> f64 {
    assert!(!seq.is_empty(), "predict_logit: empty sequence");
    let mut h = vec![0.0; net.hidden_dim()];
    for x in seq {
        h = gru_cell_forward(x.as_ref(), &h, &net.gru).0;
    }
    head_logit(&h, net)
}

fn head_logit(h: &[f64], net: &NetParams) -> f64 {
    let mut acc = 0.0;
    for (w, v) in net.head.w.iter().zip(h) {
        acc += w * v;
    }
    acc + net.head.b
}

/// A batch of equal-length sequences, stored time-major: `steps[t]` is `n x input_dim`.
#[derive(Debug, Clone)]
pub struct SeqBatch {
    pub steps: Vec<Matrix>,
}

impl SeqBatch {
    /// Builds a batch from per-sequence slices of feature vectors.
    pub fn from_sequences<S: AsRef<[f64]>>(seqs: &[Vec<S>]) -> Self {
        assert!(!seqs.is_empty(), "SeqBatch: no sequences");
        let len = seqs[0].len();
        let dim = seqs[0][0].as_ref().len();
        let mut steps = vec![Matrix::zeros(seqs.len(), dim); len];
        for (n, seq) in seqs.iter().enumerate() {
            assert_eq!(seq.len(), len, "SeqBatch: ragged sequences");
            for (t, x) in seq.iter().enumerate() {
                steps[t].row_mut(n).copy_from_slice(x.as_ref());
            }
        }
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn batch_size(&self) -> usize {
        self.steps.first().map_or(0, |m| m.rows())
    }
}

/// Per-step activations of a batched forward pass.
#[derive(Debug, Clone)]
pub struct BatchCache {
    /// `states[0]` is the zero initial state; `states[t + 1]` follows step `t`.
    pub states: Vec<Matrix>,
    z: Vec<Matrix>,
    r: Vec<Matrix>,
    h_cand: Vec<Matrix>,
    rh: Vec<Matrix>,
    pub logits: Vec<f64>,
}

impl BatchCache {
    pub fn final_state(&self) -> &Matrix {
        self.states.last().expect("at least the initial state")
    }
}

/// Hidden-state trajectory of a batch with no output head and no cache.
pub fn batch_hidden_states(batch: &SeqBatch, p: &GruParams) -> Vec<Matrix> {
    let cache = run_batch(batch, p);
    cache.states.into_iter().skip(1).collect()
}

fn run_batch(batch: &SeqBatch, p: &GruParams) -> BatchCache {
    let n = batch.batch_size();
    let h = p.hidden_dim();
    let len = batch.len();
    let mut states = Vec::with_capacity(len + 1);
    states.push(Matrix::zeros(n, h));
    let (mut zs, mut rs, mut cs, mut rhs) = (
        Vec::with_capacity(len),
        Vec::with_capacity(len),
        Vec::with_capacity(len),
        Vec::with_capacity(len),
    );
    for x in &batch.steps {
        assert_eq!(x.cols(), p.input_dim(), "forward_batch: input dimension");
        let hp = states.last().unwrap();

        let mut z = Matrix::zeros(n, h);
        gemm(x, Trans::No, &p.wz, Trans::Yes, 0.0, &mut z);
        gemm(hp, Trans::No, &p.uz, Trans::Yes, 1.0, &mut z);
        z.add_row_vector(&p.bz);
        z.data_mut().iter_mut().for_each(|v| *v = sigmoid(*v));

        let mut r = Matrix::zeros(n, h);
        gemm(x, Trans::No, &p.wr, Trans::Yes, 0.0, &mut r);
        gemm(hp, Trans::No, &p.ur, Trans::Yes, 1.0, &mut r);
        r.add_row_vector(&p.br);
        r.data_mut().iter_mut().for_each(|v| *v = sigmoid(*v));

        let mut rh = r.clone();
        rh.data_mut()
            .iter_mut()
            .zip(hp.data())
            .for_each(|(a, b)| *a *= b);

        let mut c = Matrix::zeros(n, h);
        gemm(x, Trans::No, &p.wh, Trans::Yes, 0.0, &mut c);
        gemm(&rh, Trans::No, &p.uh, Trans::Yes, 1.0, &mut c);
        c.add_row_vector(&p.bh);
        c.data_mut().iter_mut().for_each(|v| *v = v.tanh());

        let mut hn = Matrix::zeros(n, h);
        for (((o, zv), hv), cv) in hn
            .data_mut()
            .iter_mut()
            .zip(z.data())
            .zip(hp.data())
            .zip(c.data())
        {
            *o = (1.0 - zv) * hv + zv * cv;
        }
        zs.push(z);
        rs.push(r);
        cs.push(c);
        rhs.push(rh);
        states.push(hn);
    }
    BatchCache {
        states,
        z: zs,
        r: rs,
        h_cand: cs,
        rh: rhs,
        logits: Vec::new(),
    }
}

/// Batched many-to-one forward pass. Panics on an empty batch.
pub fn forward_batch(batch: &SeqBatch, net: &NetParams) -> BatchCache {
    assert!(!batch.is_empty(), "forward_batch: empty sequence");
    let mut cache = run_batch(batch, &net.gru);
    let hw = cache.final_state();
    let logits = (0..hw.rows()).map(|i| head_logit(hw.row(i), net)).collect();
    cache.logits = logits;
    cache
}

/// Exact gradients of the mean BCE loss over the batch. Returns `(loss, grads)`.
pub fn backward_batch(
    batch: &SeqBatch,
    net: &NetParams,
    cache: &BatchCache,
    targets: &[f64],
) -> (f64, GradBundle) {
    let n = batch.batch_size();
    assert_eq!(targets.len(), n, "backward_batch: target count");
    let h = net.hidden_dim();
    let p = &net.gru;
    let inv_n = 1.0 / n as f64;
    let mut g = net.zeros_like();

    let mut loss = 0.0;
    let dlogit: Vec<f64> = cache
        .logits
        .iter()
        .zip(targets)
        .map(|(&l, &y)| {
            loss += bce_with_logit(l, y);
            (sigmoid(l) - y) * inv_n
        })
        .collect();
    loss *= inv_n;

    let hw = cache.final_state();
    let mut dh = Matrix::zeros(n, h);
    for (i, &dl) in dlogit.iter().enumerate() {
        g.head.b += dl;
        let row = hw.row(i);
        for j in 0..h {
            g.head.w[j] += dl * row[j];
        }
        for (d, w) in dh.row_mut(i).iter_mut().zip(&net.head.w) {
            *d = dl * w;
        }
    }

    let mut da = Matrix::zeros(n, h);
    let mut drh = Matrix::zeros(n, h);
    for t in (0..batch.len()).rev() {
        let x = &batch.steps[t];
        let hp = &cache.states[t];
        let (z, r, c, rh) = (&cache.z[t], &cache.r[t], &cache.h_cand[t], &cache.rh[t]);

        let mut dh_prev = Matrix::zeros(n, h);
        let mut dz = Matrix::zeros(n, h);
        // candidate pre-activation gradient into `da`
        for k in 0..n * h {
            let (dhv, zv, cv, hv) = (dh.data()[k], z.data()[k], c.data()[k], hp.data()[k]);
            dz.data_mut()[k] = dhv * (cv - hv) * zv * (1.0 - zv);
            dh_prev.data_mut()[k] = dhv * (1.0 - zv);
            da.data_mut()[k] = dhv * zv * (1.0 - cv * cv);
        }
        gemm(&da, Trans::Yes, x, Trans::No, 1.0, &mut g.gru.wh);
        gemm(&da, Trans::Yes, rh, Trans::No, 1.0, &mut g.gru.uh);
        da.col_sums_acc(&mut g.gru.bh);
        gemm(&da, Trans::No, &p.uh, Trans::No, 0.0, &mut drh);

        // reset gate: d(rh) splits into dr (times h_prev) and dh_prev (times r)
        for k in 0..n * h {
            let (d, rv, hv) = (drh.data()[k], r.data()[k], hp.data()[k]);
            dh_prev.data_mut()[k] += d * rv;
            da.data_mut()[k] = d * hv * rv * (1.0 - rv);
        }
        gemm(&da, Trans::Yes, x, Trans::No, 1.0, &mut g.gru.wr);
        gemm(&da, Trans::Yes, hp, Trans::No, 1.0, &mut g.gru.ur);
        da.col_sums_acc(&mut g.gru.br);
        gemm(&da, Trans::No, &p.ur, Trans::No, 1.0, &mut dh_prev);

        gemm(&dz, Trans::Yes, x, Trans::No, 1.0, &mut g.gru.wz);
        gemm(&dz, Trans::Yes, hp, Trans::No, 1.0, &mut g.gru.uz);
        dz.col_sums_acc(&mut g.gru.bz);
        gemm(&dz, Trans::No, &p.uz, Trans::No, 1.0, &mut dh_prev);

        dh = dh_prev;
    }
    (loss, g)
}

/// Mean BCE of a batch without computing gradients.
pub fn batch_loss(batch: &SeqBatch, net: &NetParams, targets: &[f64]) -> f64 {
    let cache = forward_batch(batch, net);
    let s: f64 = cache
        .logits
        .iter()
        .zip(targets)
        .map(|(&l, &y)| bce_with_logit(l, y))
        .sum();
    s / targets.len() as f64
}

/// Many-to-one forward on one sequence, starting from the zero state.
pub fn forward_sequence<S: AsRef<[f64]>>(
    seq: &[S],
    net: &NetParams,
) -> Result<(f64, SequenceCache)> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let batch = SeqBatch::from_sequences(&[seq.iter().map(|s| s.as_ref()).collect::<Vec<_>>()]);
    let cache = forward_batch(&batch, net);
    Ok((cache.logits[0], SequenceCache { batch, cache }))
}

/// Cache of [`forward_sequence`].
#[derive(Debug, Clone)]
pub struct SequenceCache {
    batch: SeqBatch,
    cache: BatchCache,
}

/// Exact BCE gradients for the sequence cached by [`forward_sequence`].
pub fn backward_sequence(net: &NetParams, cache: &SequenceCache, target: f64) -> GradBundle {
    backward_batch(&cache.batch, net, &cache.cache, &[target]).1
}
