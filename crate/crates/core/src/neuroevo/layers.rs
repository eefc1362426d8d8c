//! Forward-only layers over flat parameter slices. Matrices stored in a
//! genome are row-major.

use nalgebra::DMatrix;

use crate::channel::CMatrix;
use crate::error::{Error, Result};

/// Layer-norm stabiliser.
pub const LN_EPS: f64 = 1e-5;

/// Axis along which [`stack_real`] places the imaginary part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackAxis {
    /// `[Re; Im]`, shape `2R x C`.
    Rows,
    /// `[Re Im]`, shape `R x 2C`.
    Cols,
}

pub fn stack_real(h: &CMatrix, axis: StackAxis) -> DMatrix<f64> {
    let (r, c) = h.shape();
    match axis {
        StackAxis::Rows => DMatrix::from_fn(2 * r, c, |i, j| {
            if i < r {
                h[(i, j)].re
            } else {
                h[(i - r, j)].im
            }
        }),
        StackAxis::Cols => DMatrix::from_fn(r, 2 * c, |i, j| {
            if j < c {
                h[(i, j)].re
            } else {
                h[(i, j - c)].im
            }
        }),
    }
}

/// Inverse of [`stack_real`].
pub fn unstack_real(x: &DMatrix<f64>, axis: StackAxis) -> CMatrix {
    match axis {
        StackAxis::Rows => {
            let r = x.nrows() / 2;
            CMatrix::from_fn(r, x.ncols(), |i, j| {
                num_complex::Complex64::new(x[(i, j)], x[(i + r, j)])
            })
        }
        StackAxis::Cols => {
            let c = x.ncols() / 2;
            CMatrix::from_fn(x.nrows(), c, |i, j| {
                num_complex::Complex64::new(x[(i, j)], x[(i, j + c)])
            })
        }
    }
}

/// Divides by the root-mean-square entry so inputs are O(1) regardless of
/// pathloss. An all-zero matrix is returned unchanged.
pub fn rms_normalize(mut x: DMatrix<f64>) -> DMatrix<f64> {
    let n = x.len().max(1) as f64;
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    if rms > 0.0 {
        x /= rms;
    }
    x
}

/// Softmax over every entry of the matrix at once.
pub fn global_softmax(x: &DMatrix<f64>) -> DMatrix<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut e = x.map(|v| (v - max).exp());
    let total: f64 = e.iter().sum();
    e /= total;
    e
}

/// `A = softmax(Q K^T / sqrt(d)) P` with `Q = Wq X`, `K = Wk X`,
/// `P = Wv X` and the softmax normalised over the whole score matrix.
pub fn attention_layer(
    x: &DMatrix<f64>,
    wq: &DMatrix<f64>,
    wk: &DMatrix<f64>,
    wv: &DMatrix<f64>,
    d: f64,
) -> Result<DMatrix<f64>> {
    let r = x.nrows();
    for (name, w) in [
        ("attention: Wq", wq),
        ("attention: Wk", wk),
        ("attention: Wv", wv),
    ] {
        if w.shape() != (r, r) {
            return Err(Error::dim(
                name,
                format!("{r}x{r}"),
                format!("{:?}", w.shape()),
            ));
        }
    }
    let q = wq * x;
    let k = wk * x;
    let p = wv * x;
    let s = global_softmax(&((q * k.transpose()) / d.sqrt()));
    Ok(s * p)
}

/// Zero-mean, unit-variance normalisation over all entries, no affine.
pub fn layer_norm(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.len().max(1) as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let inv = 1.0 / (var + LN_EPS).sqrt();
    x.map(|v| (v - mean) * inv)
}

/// `W x + b` with `W` row-major `out x in`.
pub fn dense(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    debug_assert_eq!(w.len(), b.len() * n_in);
    b.iter()
        .zip(w.chunks_exact(n_in))
        .map(|(bi, row)| bi + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect()
}

pub fn relu_inplace(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// Same-padded 2-D convolution over `[channel][row][col]` feature maps.
/// Weights are `[out][in][kh][kw]` followed by one bias per output channel.
pub fn conv2d_same(
    input: &[DMatrix<f64>],
    w: &[f64],
    b: &[f64],
    kernel: usize,
) -> Vec<DMatrix<f64>> {
    let c_in = input.len();
    let (rows, cols) = input[0].shape();
    let half = (kernel / 2) as isize;
    let per_out = c_in * kernel * kernel;
    b.iter()
        .enumerate()
        .map(|(o, &bias)| {
            let wo = &w[o * per_out..(o + 1) * per_out];
            DMatrix::from_fn(rows, cols, |i, j| {
                let mut acc = bias;
                for (ci, x) in input.iter().enumerate() {
                    let wc = &wo[ci * kernel * kernel..(ci + 1) * kernel * kernel];
                    for di in 0..kernel {
                        let ii = i as isize + di as isize - half;
                        if ii < 0 || ii >= rows as isize {
                            continue;
                        }
                        for dj in 0..kernel {
                            let jj = j as isize + dj as isize - half;
                            if jj < 0 || jj >= cols as isize {
                                continue;
                            }
                            acc += wc[di * kernel + dj] * x[(ii as usize, jj as usize)];
                        }
                    }
                }
                acc
            })
        })
        .collect()
}
