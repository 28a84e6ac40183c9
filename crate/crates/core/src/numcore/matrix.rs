use rand::Rng;
use serde::{Deserialize, Serialize};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "matrix data length {} does not match {rows}x{cols}",
            data.len()
        );
        Self { rows, cols, data }
    }

    /// Glorot-uniform: entries drawn from U(-l, l), l = sqrt(6 / (rows + cols)).
    pub fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `out[i] += sum_j self[i][j] * x[j]`, accumulated left to right.
    ///
    /// The fixed summation order matters: appending zero columns must not
    /// change the result bit-for-bit.
    pub fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec: input length");
        assert_eq!(out.len(), self.rows, "matvec: output length");
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *o += acc;
        }
    }

    /// Adds `bias` to every row.
    pub fn add_row_vector(&mut self, bias: &[f64]) {
        assert_eq!(bias.len(), self.cols);
        for row in self.data.chunks_exact_mut(self.cols) {
            for (v, b) in row.iter_mut().zip(bias) {
                *v += b;
            }
        }
    }

    /// Accumulates the column sums into `out`.
    pub fn col_sums_acc(&self, out: &mut [f64]) {
        assert_eq!(out.len(), self.cols);
        for row in self.data.chunks_exact(self.cols) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Trans {
    No,
    Yes,
}

/// Contiguous-slice loops for products too small to amortise packing.
fn small_gemm(a: &Matrix, ta: Trans, b: &Matrix, tb: Trans, beta: f64, c: &mut Matrix) {
    if beta == 0.0 {
        c.data.iter_mut().for_each(|v| *v = 0.0);
    } else if beta != 1.0 {
        c.data.iter_mut().for_each(|v| *v *= beta);
    }
    let n = c.cols;
    match (ta, tb) {
        (Trans::No, Trans::Yes) => {
            for (i, crow) in c.data.chunks_exact_mut(n).enumerate() {
                let arow = a.row(i);
                for (j, o) in crow.iter_mut().enumerate() {
                    *o += dot(arow, b.row(j));
                }
            }
        }
        (Trans::No, Trans::No) => {
            for (i, crow) in c.data.chunks_exact_mut(n).enumerate() {
                for (l, &x) in a.row(i).iter().enumerate() {
                    axpy(x, b.row(l), crow);
                }
            }
        }
        (Trans::Yes, Trans::No) => {
            for l in 0..a.rows {
                let brow = b.row(l);
                for (i, &x) in a.row(l).iter().enumerate() {
                    axpy(x, brow, &mut c.data[i * n..(i + 1) * n]);
                }
            }
        }
        (Trans::Yes, Trans::Yes) => {
            for i in 0..c.rows {
                for j in 0..n {
                    let mut acc = 0.0;
                    for l in 0..a.rows {
                        acc += a.data[l * a.cols + i] * b.data[j * b.cols + l];
                    }
                    c.data[i * n + j] += acc;
                }
            }
        }
    }
}

/// Element `k` accumulates in lane `k % 4`, so trailing zeros leave the result bit-identical.
#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    let (x, y) = (&x[..n], &y[..n]);
    let (mut a0, mut a1, mut a2, mut a3) = (0.0, 0.0, 0.0, 0.0);
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        a0 += a[0] * b[0];
        a1 += a[1] * b[1];
        a2 += a[2] * b[2];
        a3 += a[3] * b[3];
    }
    let r = xr.len();
    if r > 0 {
        a0 += xr[0] * yr[0];
    }
    if r > 1 {
        a1 += xr[1] * yr[1];
    }
    if r > 2 {
        a2 += xr[2] * yr[2];
    }
    (a0 + a1) + (a2 + a3)
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (o, v) in y.iter_mut().zip(x) {
        *o += alpha * v;
    }
}

/// Products up to this many multiply-adds skip the packed kernel.
const SMALL_GEMM: usize = 1 << 15;

/// `c = beta * c + op(a) * op(b)`.
pub(crate) fn gemm(a: &Matrix, ta: Trans, b: &Matrix, tb: Trans, beta: f64, c: &mut Matrix) {
    let (m, k, rsa, csa) = match ta {
        Trans::No => (a.rows, a.cols, a.cols as isize, 1),
        Trans::Yes => (a.cols, a.rows, 1, a.cols as isize),
    };
    let (kb, n, rsb, csb) = match tb {
        Trans::No => (b.rows, b.cols, b.cols as isize, 1),
        Trans::Yes => (b.cols, b.rows, 1, b.cols as isize),
    };
    assert_eq!(k, kb, "gemm: inner dimensions differ");
    assert_eq!((c.rows, c.cols), (m, n), "gemm: output shape");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.data.iter_mut().for_each(|v| *v *= beta);
        return;
    }
    if m * n * k <= SMALL_GEMM {
        small_gemm(a, ta, b, tb, beta, c);
        return;
    }
    // SAFETY: strides and extents are derived from the matrices' own shapes,
    // checked above; `c` does not alias `a` or `b` (distinct borrows).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}
