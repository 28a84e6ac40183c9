//! Sigmoid-valued masks over frozen weights and the `Expand` growth block.
//!
//! A masked weight is `frozen * sigmoid(m)` for a learnable pre-activation `m`,
//! so every effective entry lies strictly between zero and the frozen value.
//! `Expand` additionally grows the hidden layer by `exp_size` units whose
//! weights are learned directly (implicit mask 1).

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numcore::{sigmoid, AdamState, GradBundle, Matrix, NetParams, TENSOR_COUNT};

/// Half-width of the uniform range for fresh mask pre-activations.
pub const MASK_INIT_RANGE: f64 = 0.1;

/// Network weights that no longer train. Shared read-only between ensemble options.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenBase {
    net: NetParams,
}

impl FrozenBase {
    pub fn new(net: NetParams) -> Self {
        Self { net }
    }

    pub fn net(&self) -> &NetParams {
        &self.net
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.net.hidden_dim()
    }
}

/// Mask pre-activations, one per frozen entry (biases and output head included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSet {
    pre: NetParams,
}

impl MaskSet {
    pub fn from_pre_activations(pre: NetParams) -> Self {
        Self { pre }
    }

    pub fn constant(shape: &NetParams, value: f64) -> Self {
        let mut pre = shape.zeros_like();
        for t in pre.tensors_mut() {
            t.iter_mut().for_each(|v| *v = value);
        }
        Self { pre }
    }

    pub fn pre_activations(&self) -> &NetParams {
        &self.pre
    }

    pub fn pre_activations_mut(&mut self) -> &mut NetParams {
        &mut self.pre
    }

    pub fn hidden_dim(&self) -> usize {
        self.pre.hidden_dim()
    }
}

/// Which ensemble option (or the initial plastic network) produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptionKind {
    Plastic,
    MaskFineTune,
    MaskRandom,
    Expand,
}

impl OptionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OptionKind::Plastic => "plastic",
            OptionKind::MaskFineTune => "mask_finetune",
            OptionKind::MaskRandom => "mask_random",
            OptionKind::Expand => "expand",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            OptionKind::Plastic => 0,
            OptionKind::MaskFineTune => 1,
            OptionKind::MaskRandom => 2,
            OptionKind::Expand => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => OptionKind::Plastic,
            1 => OptionKind::MaskFineTune,
            2 => OptionKind::MaskRandom,
            3 => OptionKind::Expand,
            _ => return None,
        })
    }
}

/// Effective weights: every entry is `base * sigmoid(mask)`.
pub fn apply_mask(base: &FrozenBase, mask: &MaskSet) -> NetParams {
    assert!(
        base.net.same_shape(&mask.pre),
        "apply_mask: mask shape does not match frozen base"
    );
    let mut eff = base.net.clone();
    for (e, m) in eff.tensors_mut().into_iter().zip(mask.pre.tensors()) {
        for (w, &p) in e.iter_mut().zip(m) {
            *w *= sigmoid(p);
        }
    }
    eff
}

/// Fresh pre-activations drawn uniformly from `[-0.1, 0.1]`.
pub fn init_mask_random<R: Rng + ?Sized>(shape: &NetParams, rng: &mut R) -> MaskSet {
    let mut pre = shape.zeros_like();
    for t in pre.tensors_mut() {
        t.iter_mut()
            .for_each(|v| *v = rng.gen_range(-MASK_INIT_RANGE..=MASK_INIT_RANGE));
    }
    MaskSet { pre }
}

/// Starts from the previous concept's mask.
///
/// Without a previous mask this falls back to [`init_mask_random`] and returns
/// `fell_back = true`. If the previous mask covers a smaller network (the last
/// winner grew), its values are copied into the overlapping block and the
/// remaining entries are drawn fresh.
pub fn init_mask_finetune<R: Rng + ?Sized>(
    previous: Option<&MaskSet>,
    shape: &NetParams,
    rng: &mut R,
) -> (MaskSet, bool) {
    let fresh = init_mask_random(shape, rng);
    let Some(prev) = previous else {
        return (fresh, true);
    };
    if prev.pre.same_shape(shape) {
        return (prev.clone(), false);
    }
    let mut out = fresh;
    let shapes_new = shape.shapes();
    let shapes_old = prev.pre.shapes();
    for (k, (dst, src)) in out
        .pre
        .tensors_mut()
        .into_iter()
        .zip(prev.pre.tensors())
        .enumerate()
    {
        let (rn, cn) = shapes_new[k];
        let (ro, co) = shapes_old[k];
        for r in 0..ro.min(rn) {
            for c in 0..co.min(cn) {
                dst[r * cn + c] = src[r * co + c];
            }
        }
    }
    (out, false)
}

/// Learnable weights of the grown units.
///
/// Stored at the full expanded size; entries inside the frozen block (and the
/// output bias) are unused and stay exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Growth {
    exp_size: usize,
    params: NetParams,
}

impl Growth {
    pub fn exp_size(&self) -> usize {
        self.exp_size
    }

    pub fn params(&self) -> &NetParams {
        &self.params
    }

    /// Entries that are actually learnable (new unit rows, cross blocks, head extension).
    pub fn learnable_count(&self) -> usize {
        let h = self.params.hidden_dim() - self.exp_size;
        self.params.param_count() - frozen_block_count(self.params.input_dim(), h)
    }
}

fn frozen_block_count(input_dim: usize, h: usize) -> usize {
    3 * h * input_dim + 3 * h * h + 3 * h + h + 1
}

/// One ensemble option: a mask over a shared frozen base, optionally grown.
#[derive(Debug, Clone)]
pub struct MaskedNet {
    base: Arc<FrozenBase>,
    mask: MaskSet,
    growth: Option<Growth>,
}

/// Spec-facing name for the `Expand` option's parameters.
pub type ExpandedParams = MaskedNet;

impl MaskedNet {
    pub fn masked(base: Arc<FrozenBase>, mask: MaskSet) -> Self {
        assert!(base.net.same_shape(&mask.pre), "MaskedNet: mask shape");
        Self {
            base,
            mask,
            growth: None,
        }
    }

    pub fn base(&self) -> &Arc<FrozenBase> {
        &self.base
    }

    pub fn mask(&self) -> &MaskSet {
        &self.mask
    }

    pub fn growth(&self) -> Option<&Growth> {
        self.growth.as_ref()
    }

    pub fn hidden_dim(&self) -> usize {
        self.base.hidden_dim() + self.growth.as_ref().map_or(0, |g| g.exp_size)
    }

    /// Stored size of this option: frozen base, mask, and grown weights.
    pub fn param_count(&self) -> usize {
        2 * self.base.net.param_count() + self.growth.as_ref().map_or(0, Growth::learnable_count)
    }

    /// Weights seen by the forward pass.
    pub fn effective(&self) -> NetParams {
        let masked = apply_mask(&self.base, &self.mask);
        let Some(growth) = &self.growth else {
            return masked;
        };
        let mut eff = growth.params.clone();
        let big = eff.shapes();
        let small = masked.shapes();
        for (k, (dst, src)) in eff
            .tensors_mut()
            .into_iter()
            .zip(masked.tensors())
            .enumerate()
        {
            let (rows, cols) = small[k];
            let big_cols = big[k].1;
            for r in 0..rows {
                dst[r * big_cols..r * big_cols + cols].copy_from_slice(&src[r * cols..(r + 1) * cols]);
            }
        }
        eff
    }

    /// Maps gradients on the effective weights onto the learnable variables:
    /// `dL/dm = dL/dw_eff * base * s(1 - s)` for masks, identity for grown weights.
    pub fn split_gradient(&self, g_eff: &GradBundle) -> (NetParams, Option<NetParams>) {
        let base = &self.base.net;
        let mut g_mask = base.zeros_like();
        let g_big = g_eff.shapes();
        for k in 0..TENSOR_COUNT {
            let (rows_small, cols_small) = base.shapes()[k];
            let cols_big = g_big[k].1;
            let gm = &mut g_mask.tensors_mut()[k];
            let m = self.mask.pre.tensors()[k];
            let b = base.tensors()[k];
            let ge = g_eff.tensors()[k];
            for r in 0..rows_small {
                for c in 0..cols_small {
                    let i = r * cols_small + c;
                    let s = sigmoid(m[i]);
                    gm[i] = ge[r * cols_big + c] * b[i] * s * (1.0 - s);
                }
            }
        }
        let g_grow = self.growth.as_ref().map(|_| {
            let mut g = g_eff.clone();
            let small = base.shapes();
            for (k, t) in g.tensors_mut().into_iter().enumerate() {
                let cols = g_big[k].1;
                let (rs, cs) = small[k];
                for r in 0..rs {
                    for c in 0..cs {
                        t[r * cols + c] = 0.0;
                    }
                }
            }
            g
        });
        (g_mask, g_grow)
    }

    /// One Adam step on masks (and grown weights) from effective-weight gradients.
    /// The frozen base is never written.
    pub fn adam_step(&mut self, state: &mut AdamState, g_eff: &GradBundle) {
        let (g_mask, g_grow) = self.split_gradient(g_eff);
        match (&mut self.growth, g_grow) {
            (Some(growth), Some(gg)) => {
                let mut params: Vec<&mut [f64]> = self.mask.pre.tensors_mut().into_iter().collect();
                params.extend(growth.params.tensors_mut());
                let mut grads: Vec<&[f64]> = g_mask.tensors().into_iter().collect();
                grads.extend(gg.tensors());
                state.update(&mut params, &grads);
            }
            _ => {
                let mut params = self.mask.pre.tensors_mut();
                state.update(&mut params, &g_mask.tensors());
            }
        }
    }
}

/// Builds the `Expand` option: random mask over the frozen block plus
/// `exp_size` new units.
///
/// New unit rows are Glorot-initialised; the blocks through which old units
/// read new state, and the head extension, start at zero so the expanded
/// network initially computes exactly what the masked base computes.
pub fn build_expanded<R: Rng + ?Sized>(
    base: Arc<FrozenBase>,
    exp_size: usize,
    rng: &mut R,
) -> ExpandedParams {
    assert!(exp_size >= 1, "build_expanded: exp_size must be at least 1");
    let mask = init_mask_random(base.net(), rng);
    let (i, h) = (base.input_dim(), base.hidden_dim());
    let big_h = h + exp_size;
    let mut params = NetParams::zeros(i, big_h);
    {
        let g = &mut params.gru;
        for w in [&mut g.wz, &mut g.wr, &mut g.wh] {
            let fresh = Matrix::glorot(big_h, i, rng);
            for r in h..big_h {
                w.row_mut(r).copy_from_slice(fresh.row(r));
            }
        }
        for u in [&mut g.uz, &mut g.ur, &mut g.uh] {
            let fresh = Matrix::glorot(big_h, big_h, rng);
            for r in h..big_h {
                u.row_mut(r).copy_from_slice(fresh.row(r));
            }
        }
    }
    MaskedNet {
        base,
        mask,
        growth: Some(Growth { exp_size, params }),
    }
}

/// Bakes a finished option into a new frozen base: the effective weights,
/// at the option's full hidden size.
pub fn compose_winner(winner: &MaskedNet) -> FrozenBase {
    FrozenBase::new(winner.effective())
}

/// One completed concept in persistent memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub concept_index: usize,
    pub snapshot: NetParams,
    pub mask: Option<MaskSet>,
    pub option: OptionKind,
}

/// Per-concept models kept for inference on earlier concepts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MaskStore {
    records: Vec<MaskRecord>,
}

impl MaskStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: MaskRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[MaskRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Most recent stored mask, if the last concept ended on a mask-bearing option.
    pub fn last_mask(&self) -> Option<&MaskSet> {
        self.records.last().and_then(|r| r.mask.as_ref())
    }
}
