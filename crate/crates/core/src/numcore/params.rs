use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;

/// Weights of a single-layer GRU.
///
/// Input matrices are `hidden x input`, recurrent matrices `hidden x hidden`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub wz: Matrix,
    pub wr: Matrix,
    pub wh: Matrix,
    pub uz: Matrix,
    pub ur: Matrix,
    pub uh: Matrix,
    pub bz: Vec<f64>,
    pub br: Vec<f64>,
    pub bh: Vec<f64>,
}

/// Single-logit output head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub w: Vec<f64>,
    pub b: f64,
}

/// A GRU plus its output head: the unit every learner trains, masks and stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub gru: GruParams,
    pub head: LinearParams,
}

/// Gradients share the parameter layout.
pub type GradBundle = NetParams;

/// Number of tensors returned by [`NetParams::tensors`].
pub const TENSOR_COUNT: usize = 11;

/// Names in [`NetParams::tensors`] order.
pub const TENSOR_NAMES: [&str; TENSOR_COUNT] = [
    "wz", "wr", "wh", "uz", "ur", "uh", "bz", "br", "bh", "out_w", "out_b",
];

impl GruParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            wz: Matrix::zeros(hidden_dim, input_dim),
            wr: Matrix::zeros(hidden_dim, input_dim),
            wh: Matrix::zeros(hidden_dim, input_dim),
            uz: Matrix::zeros(hidden_dim, hidden_dim),
            ur: Matrix::zeros(hidden_dim, hidden_dim),
            uh: Matrix::zeros(hidden_dim, hidden_dim),
            bz: vec![0.0; hidden_dim],
            br: vec![0.0; hidden_dim],
            bh: vec![0.0; hidden_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.wz.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.wz.rows()
    }
}

impl NetParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            gru: GruParams::zeros(input_dim, hidden_dim),
            head: LinearParams {
                w: vec![0.0; hidden_dim],
                b: 0.0,
            },
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let (i, h) = (input_dim, hidden_dim);
        let gru = GruParams {
            wz: Matrix::glorot(h, i, rng),
            wr: Matrix::glorot(h, i, rng),
            wh: Matrix::glorot(h, i, rng),
            uz: Matrix::glorot(h, h, rng),
            ur: Matrix::glorot(h, h, rng),
            uh: Matrix::glorot(h, h, rng),
            bz: vec![0.0; h],
            br: vec![0.0; h],
            bh: vec![0.0; h],
        };
        let head = LinearParams {
            w: Matrix::glorot(1, h, rng).data().to_vec(),
            b: 0.0,
        };
        Self { gru, head }
    }

    pub fn input_dim(&self) -> usize {
        self.gru.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.gru.hidden_dim()
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden_dim())
    }

    pub fn tensors(&self) -> [&[f64]; TENSOR_COUNT] {
        let g = &self.gru;
        [
            g.wz.data(),
            g.wr.data(),
            g.wh.data(),
            g.uz.data(),
            g.ur.data(),
            g.uh.data(),
            &g.bz,
            &g.br,
            &g.bh,
            &self.head.w,
            std::slice::from_ref(&self.head.b),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; TENSOR_COUNT] {
        let g = &mut self.gru;
        [
            g.wz.data_mut(),
            g.wr.data_mut(),
            g.wh.data_mut(),
            g.uz.data_mut(),
            g.ur.data_mut(),
            g.uh.data_mut(),
            &mut g.bz,
            &mut g.br,
            &mut g.bh,
            &mut self.head.w,
            std::slice::from_mut(&mut self.head.b),
        ]
    }

    /// `(rows, cols)` of every tensor; vectors are `(len, 1)`.
    pub fn shapes(&self) -> [(usize, usize); TENSOR_COUNT] {
        let (i, h) = (self.input_dim(), self.hidden_dim());
        [
            (h, i),
            (h, i),
            (h, i),
            (h, h),
            (h, h),
            (h, h),
            (h, 1),
            (h, 1),
            (h, 1),
            (h, 1),
            (1, 1),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn same_shape(&self, other: &NetParams) -> bool {
        self.shapes() == other.shapes()
    }

    /// Flattened copy in tensor order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.iter().copied()).collect()
    }

    /// Panics if `flat` has the wrong length.
    pub fn load_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut off = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[off..off + t.len()]);
            off += t.len();
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &NetParams, scale: f64) {
        assert!(self.same_shape(other), "add_scaled: shape mismatch");
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = NetParams::glorot(3, 4, &mut rng);
        let flat = p.to_flat();
        assert_eq!(flat.len(), p.param_count());
        assert_eq!(p.param_count(), 3 * 4 * 3 + 4 * 4 * 3 + 3 * 4 + 4 + 1);
        let mut q = p.zeros_like();
        q.load_flat(&flat);
        assert_eq!(p, q);
    }

    #[test]
    fn glorot_biases_are_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = NetParams::glorot(2, 6, &mut rng);
        assert!(p.gru.bz.iter().chain(&p.gru.br).chain(&p.gru.bh).all(|&b| b == 0.0));
        assert_eq!(p.head.b, 0.0);
    }
}
