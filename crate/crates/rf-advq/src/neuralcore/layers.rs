//! Layer set: 1-D convolution (plain and transposed), dense, ReLU,
//! per-channel activation normalization, and global average pooling.
//!
//! Activation layout is `(batch, channels, length)` for convolutional stages
//! and `(batch, features)` after pooling. Convolutions are lowered to GEMM via
//! im2col so the matmul kernel carries the arithmetic.

use super::matmul::{matmul, transpose};
use super::tensor::{Real, Tensor};
use crate::error::{Result, RfError};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
pub enum Layer<T: Real> {
    Conv1d {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        /// (out_ch, in_ch * kernel)
        w: Tensor<T>,
        b: Tensor<T>,
    },
    ConvT1d {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        /// (in_ch, out_ch * kernel)
        w: Tensor<T>,
        b: Tensor<T>,
    },
    Dense {
        in_f: usize,
        out_f: usize,
        /// (out_f, in_f)
        w: Tensor<T>,
        b: Tensor<T>,
    },
    Relu,
    /// Normalizes each channel over the length axis (per sample) with a
    /// learnable per-channel affine.
    ChannelNorm {
        ch: usize,
        gamma: Tensor<T>,
        beta: Tensor<T>,
    },
    GlobalAvgPool,
}

fn xavier<T: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize, fan_out: usize) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data: Vec<T> = (0..rows * cols)
        .map(|_| T::from_f64(rng.random_range(-limit..limit)))
        .collect();
    Tensor::from_vec(&[rows, cols], data).unwrap()
}

impl<T: Real> Layer<T> {
    pub fn conv1d(
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Layer::Conv1d {
            in_ch,
            out_ch,
            kernel,
            stride,
            pad,
            w: xavier(rng, out_ch, in_ch * kernel, in_ch * kernel, out_ch * kernel),
            b: Tensor::zeros(&[out_ch]),
        }
    }

    pub fn conv_t1d(
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Layer::ConvT1d {
            in_ch,
            out_ch,
            kernel,
            stride,
            pad,
            w: xavier(rng, in_ch, out_ch * kernel, in_ch * kernel, out_ch * kernel),
            b: Tensor::zeros(&[out_ch]),
        }
    }

    pub fn dense(in_f: usize, out_f: usize, rng: &mut ChaCha8Rng) -> Self {
        Layer::Dense {
            in_f,
            out_f,
            w: xavier(rng, out_f, in_f, in_f, out_f),
            b: Tensor::zeros(&[out_f]),
        }
    }

    pub fn channel_norm(ch: usize) -> Self {
        Layer::ChannelNorm {
            ch,
            gamma: Tensor::from_vec(&[ch], vec![T::one(); ch]).unwrap(),
            beta: Tensor::zeros(&[ch]),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv1d { .. } => "conv1d",
            Layer::ConvT1d { .. } => "conv_t1d",
            Layer::Dense { .. } => "dense",
            Layer::Relu => "relu",
            Layer::ChannelNorm { .. } => "channel_norm",
            Layer::GlobalAvgPool => "global_avg_pool",
        }
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        match self {
            Layer::Conv1d { w, b, .. } | Layer::ConvT1d { w, b, .. } | Layer::Dense { w, b, .. } => {
                vec![w, b]
            }
            Layer::ChannelNorm { gamma, beta, .. } => vec![gamma, beta],
            _ => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            Layer::Conv1d { w, b, .. } | Layer::ConvT1d { w, b, .. } | Layer::Dense { w, b, .. } => {
                vec![w, b]
            }
            Layer::ChannelNorm { gamma, beta, .. } => vec![gamma, beta],
            _ => vec![],
        }
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn out_shape(&self, in_shape: &[usize]) -> Result<Vec<usize>> {
        let bad = |msg: String| Err(RfError::Shape(msg));
        match self {
            Layer::Conv1d {
                in_ch,
                out_ch,
                kernel,
                stride,
                pad,
                ..
            } => {
                if in_shape.len() != 2 || in_shape[0] != *in_ch {
                    return bad(format!("conv1d expects ({in_ch}, L), got {in_shape:?}"));
                }
                let l_in = in_shape[1];
                if l_in + 2 * pad < *kernel {
                    return bad(format!("conv1d kernel {kernel} exceeds padded length"));
                }
                Ok(vec![*out_ch, (l_in + 2 * pad - kernel) / stride + 1])
            }
            Layer::ConvT1d {
                in_ch,
                out_ch,
                kernel,
                stride,
                pad,
                ..
            } => {
                if in_shape.len() != 2 || in_shape[0] != *in_ch {
                    return bad(format!("conv_t1d expects ({in_ch}, L), got {in_shape:?}"));
                }
                let l_in = in_shape[1];
                let full = (l_in - 1) * stride + kernel;
                if full < 2 * pad {
                    return bad("conv_t1d padding larger than output".into());
                }
                Ok(vec![*out_ch, full - 2 * pad])
            }
            Layer::Dense { in_f, out_f, .. } => {
                if in_shape != [*in_f] {
                    return bad(format!("dense expects ({in_f},), got {in_shape:?}"));
                }
                Ok(vec![*out_f])
            }
            Layer::Relu => Ok(in_shape.to_vec()),
            Layer::ChannelNorm { ch, .. } => {
                if in_shape.len() != 2 || in_shape[0] != *ch {
                    return bad(format!("channel_norm expects ({ch}, L), got {in_shape:?}"));
                }
                Ok(in_shape.to_vec())
            }
            Layer::GlobalAvgPool => {
                if in_shape.len() != 2 {
                    return bad(format!("global_avg_pool expects (C, L), got {in_shape:?}"));
                }
                Ok(vec![in_shape[0]])
            }
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let batch = x.shape()[0];
        let per_sample = self.out_shape(&x.shape()[1..])?;
        let mut out_shape = vec![batch];
        out_shape.extend_from_slice(&per_sample);
        let y = match self {
            Layer::Conv1d {
                in_ch,
                out_ch,
                kernel,
                stride,
                pad,
                w,
                b,
            } => {
                let l_in = x.shape()[2];
                let l_out = per_sample[1];
                let m = im2col(x.data(), batch, *in_ch, l_in, *kernel, *stride, *pad, l_out);
                let m_t = transpose(&m, batch * l_out, in_ch * kernel);
                // (out_ch, B*l_out) = (out_ch, in_ch*k) @ (in_ch*k, B*l_out)
                let y2 = matmul(w.data(), &m_t, *out_ch, in_ch * kernel, batch * l_out);
                let mut y = vec![T::zero(); batch * out_ch * l_out];
                scatter_rows_to_batch(&y2, &mut y, batch, *out_ch, l_out, b.data());
                Tensor::from_vec(&out_shape, y)?
            }
            Layer::ConvT1d {
                in_ch,
                out_ch,
                kernel,
                stride,
                pad,
                w,
                b,
            } => {
                let l_in = x.shape()[2];
                let l_out = per_sample[1];
                // X2 (in_ch, B*l_in)
                let x2 = batch_to_rows(x.data(), batch, *in_ch, l_in);
                let w_t = transpose(w.data(), *in_ch, out_ch * kernel);
                // U (out_ch*k, B*l_in) = w^T @ X2
                let u = matmul(&w_t, &x2, out_ch * kernel, *in_ch, batch * l_in);
                let mut y = vec![T::zero(); batch * out_ch * l_out];
                col2im_transposed(&u, &mut y, batch, *out_ch, l_in, l_out, *kernel, *stride, *pad);
                add_channel_bias(&mut y, batch, *out_ch, l_out, b.data());
                Tensor::from_vec(&out_shape, y)?
            }
            Layer::Dense { in_f, out_f, w, b } => {
                let w_t = transpose(w.data(), *out_f, *in_f);
                // (B, out_f) = (B, in_f) @ (in_f, out_f)
                let mut y = matmul(x.data(), &w_t, batch, *in_f, *out_f);
                for row in y.chunks_mut(*out_f) {
                    for (v, bias) in row.iter_mut().zip(b.data()) {
                        *v += *bias;
                    }
                }
                Tensor::from_vec(&out_shape, y)?
            }
            Layer::Relu => {
                let y: Vec<T> = x.data().iter().map(|&v| v.max(T::zero())).collect();
                Tensor::from_vec(&out_shape, y)?
            }
            Layer::ChannelNorm { gamma, beta, .. } => {
                let l = x.shape()[2];
                let eps = T::from_f64(NORM_EPS);
                let mut y = vec![T::zero(); x.len()];
                let ch = x.shape()[1];
                y.par_chunks_mut(l)
                    .zip(x.data().par_chunks(l))
                    .enumerate()
                    .for_each(|(row, (yrow, xrow))| {
                        let c = row % ch;
                        let (mean, inv_std) = row_stats(xrow, eps);
                        let g = gamma.data()[c];
                        let bt = beta.data()[c];
                        for (yv, &xv) in yrow.iter_mut().zip(xrow) {
                            *yv = (xv - mean) * inv_std * g + bt;
                        }
                    });
                Tensor::from_vec(&out_shape, y)?
            }
            Layer::GlobalAvgPool => {
                let ch = x.shape()[1];
                let l = x.shape()[2];
                let inv = T::from_f64(1.0 / l as f64);
                let mut y = vec![T::zero(); batch * ch];
                for (yv, xrow) in y.iter_mut().zip(x.data().chunks(l)) {
                    *yv = xrow.iter().copied().sum::<T>() * inv;
                }
                Tensor::from_vec(&out_shape, y)?
            }
        };
        Ok(y)
    }

    /// Returns (param gradients in `params()` order, input gradient).
    pub fn backward(&self, x: &Tensor<T>, dy: &Tensor<T>) -> (Vec<Tensor<T>>, Tensor<T>) {
        let batch = x.shape()[0];
        match self {
            Layer::Conv1d {
                in_ch,
                out_ch,
                kernel,
                stride,
                pad,
                w,
                ..
            } => {
                let l_in = x.shape()[2];
                let l_out = dy.shape()[2];
                let ck = in_ch * kernel;
                // dY2 (out_ch, B*l_out)
                let dy2 = batch_to_rows(dy.data(), batch, *out_ch, l_out);
                let db: Vec<T> = dy2
                    .chunks(batch * l_out)
                    .map(|row| row.iter().copied().sum())
                    .collect();
                let m = im2col(x.data(), batch, *in_ch, l_in, *kernel, *stride, *pad, l_out);
                // dW (out_ch, ck) = dY2 @ M
                let dw = matmul(&dy2, &m, *out_ch, batch * l_out, ck);
                // dM_t (ck, B*l_out) = W^T @ dY2
                let w_t = transpose(w.data(), *out_ch, ck);
                let dm_t = matmul(&w_t, &dy2, ck, *out_ch, batch * l_out);
                let mut dx = vec![T::zero(); batch * in_ch * l_in];
                col2im_accumulate(&dm_t, &mut dx, batch, *in_ch, l_in, l_out, *kernel, *stride, *pad);
                (
                    vec![
                        Tensor::from_vec(&[*out_ch, ck], dw).unwrap(),
                        Tensor::from_vec(&[*out_ch], db).unwrap(),
                    ],
                    Tensor::from_vec(x.shape(), dx).unwrap(),
                )
            }
            Layer::ConvT1d {
                in_ch,
                out_ch,
                kernel,
                stride,
                pad,
                w,
                ..
            } => {
                let l_in = x.shape()[2];
                let l_out = dy.shape()[2];
                let ok = out_ch * kernel;
                // dU (out_ch*k, B*l_in): gather from dy at the scatter targets
                let du = gather_transposed(dy.data(), batch, *out_ch, l_in, l_out, *kernel, *stride, *pad);
                let db: Vec<T> = (0..*out_ch)
                    .map(|oc| {
                        let mut s = T::zero();
                        for bi in 0..batch {
                            let base = (bi * out_ch + oc) * l_out;
                            s += dy.data()[base..base + l_out].iter().copied().sum();
                        }
                        s
                    })
                    .collect();
                // dW (in_ch, out_ch*k) = X2 @ dU^T
                let x2 = batch_to_rows(x.data(), batch, *in_ch, l_in);
                let du_t = transpose(&du, ok, batch * l_in);
                let dw = matmul(&x2, &du_t, *in_ch, batch * l_in, ok);
                // dX2 (in_ch, B*l_in) = W @ dU
                let dx2 = matmul(w.data(), &du, *in_ch, ok, batch * l_in);
                let dx = rows_to_batch(&dx2, batch, *in_ch, l_in);
                (
                    vec![
                        Tensor::from_vec(&[*in_ch, ok], dw).unwrap(),
                        Tensor::from_vec(&[*out_ch], db).unwrap(),
                    ],
                    Tensor::from_vec(x.shape(), dx).unwrap(),
                )
            }
            Layer::Dense { in_f, out_f, w, .. } => {
                // dW (out_f, in_f) = dY^T @ X
                let dy_t = transpose(dy.data(), batch, *out_f);
                let dw = matmul(&dy_t, x.data(), *out_f, batch, *in_f);
                let db: Vec<T> = (0..*out_f)
                    .map(|j| (0..batch).map(|bi| dy.data()[bi * out_f + j]).sum())
                    .collect();
                // dX (B, in_f) = dY @ W
                let dx = matmul(dy.data(), w.data(), batch, *out_f, *in_f);
                (
                    vec![
                        Tensor::from_vec(&[*out_f, *in_f], dw).unwrap(),
                        Tensor::from_vec(&[*out_f], db).unwrap(),
                    ],
                    Tensor::from_vec(x.shape(), dx).unwrap(),
                )
            }
            Layer::Relu => {
                let dx: Vec<T> = x
                    .data()
                    .iter()
                    .zip(dy.data())
                    .map(|(&xv, &dv)| if xv > T::zero() { dv } else { T::zero() })
                    .collect();
                (vec![], Tensor::from_vec(x.shape(), dx).unwrap())
            }
            Layer::ChannelNorm { ch, gamma, .. } => {
                let l = x.shape()[2];
                let eps = T::from_f64(NORM_EPS);
                let inv_l = T::from_f64(1.0 / l as f64);
                let rows = batch * ch;
                let mut dx = vec![T::zero(); x.len()];
                let mut dgamma = vec![T::zero(); *ch];
                let mut dbeta = vec![T::zero(); *ch];
                // per-(sample, channel) row reductions; channel grads summed after
                let partials: Vec<(usize, T, T)> = (0..rows)
                    .into_par_iter()
                    .map(|row| {
                        let c = row % ch;
                        let xrow = &x.data()[row * l..(row + 1) * l];
                        let dyrow = &dy.data()[row * l..(row + 1) * l];
                        let (mean, inv_std) = row_stats(xrow, eps);
                        let mut sum_dy = T::zero();
                        let mut sum_dy_xhat = T::zero();
                        for (&dv, &xv) in dyrow.iter().zip(xrow) {
                            let xhat = (xv - mean) * inv_std;
                            sum_dy += dv;
                            sum_dy_xhat += dv * xhat;
                        }
                        (c, sum_dy, sum_dy_xhat)
                    })
                    .collect();
                for &(c, sum_dy, sum_dy_xhat) in &partials {
                    dbeta[c] += sum_dy;
                    dgamma[c] += sum_dy_xhat;
                }
                dx.par_chunks_mut(l).enumerate().for_each(|(row, dxrow)| {
                    let c = row % ch;
                    let xrow = &x.data()[row * l..(row + 1) * l];
                    let dyrow = &dy.data()[row * l..(row + 1) * l];
                    let (mean, inv_std) = row_stats(xrow, eps);
                    let (_, sum_dy, sum_dy_xhat) = partials[row];
                    let g = gamma.data()[c];
                    let mean_dy = sum_dy * inv_l;
                    let mean_dy_xhat = sum_dy_xhat * inv_l;
                    for ((dxv, &dv), &xv) in dxrow.iter_mut().zip(dyrow).zip(xrow) {
                        let xhat = (xv - mean) * inv_std;
                        *dxv = g * inv_std * (dv - mean_dy - xhat * mean_dy_xhat);
                    }
                });
                (
                    vec![
                        Tensor::from_vec(&[*ch], dgamma).unwrap(),
                        Tensor::from_vec(&[*ch], dbeta).unwrap(),
                    ],
                    Tensor::from_vec(x.shape(), dx).unwrap(),
                )
            }
            Layer::GlobalAvgPool => {
                let ch = x.shape()[1];
                let l = x.shape()[2];
                let inv = T::from_f64(1.0 / l as f64);
                let mut dx = vec![T::zero(); x.len()];
                for (row, dxrow) in dx.chunks_mut(l).enumerate() {
                    let g = dy.data()[row] * inv;
                    let _ = ch;
                    for v in dxrow {
                        *v = g;
                    }
                }
                (vec![], Tensor::from_vec(x.shape(), dx).unwrap())
            }
        }
    }

    pub fn cast<U: Real>(&self) -> Layer<U> {
        match self {
            Layer::Conv1d {
                in_ch,
                out_ch,
                kernel,
                stride,
                pad,
                w,
                b,
            } => Layer::Conv1d {
                in_ch: *in_ch,
                out_ch: *out_ch,
                kernel: *kernel,
                stride: *stride,
                pad: *pad,
                w: w.cast(),
                b: b.cast(),
            },
            Layer::ConvT1d {
                in_ch,
                out_ch,
                kernel,
                stride,
                pad,
                w,
                b,
            } => Layer::ConvT1d {
                in_ch: *in_ch,
                out_ch: *out_ch,
                kernel: *kernel,
                stride: *stride,
                pad: *pad,
                w: w.cast(),
                b: b.cast(),
            },
            Layer::Dense { in_f, out_f, w, b } => Layer::Dense {
                in_f: *in_f,
                out_f: *out_f,
                w: w.cast(),
                b: b.cast(),
            },
            Layer::Relu => Layer::Relu,
            Layer::ChannelNorm { ch, gamma, beta } => Layer::ChannelNorm {
                ch: *ch,
                gamma: gamma.cast(),
                beta: beta.cast(),
            },
            Layer::GlobalAvgPool => Layer::GlobalAvgPool,
        }
    }
}

fn row_stats<T: Real>(row: &[T], eps: T) -> (T, T) {
    let inv_l = T::from_f64(1.0 / row.len() as f64);
    let mean = row.iter().copied().sum::<T>() * inv_l;
    let var = row
        .iter()
        .map(|&v| {
            let d = v - mean;
            d * d
        })
        .sum::<T>()
        * inv_l;
    (mean, (var + eps).sqrt().recip())
}

/// im2col in (B*l_out, in_ch*k) layout.
#[allow(clippy::too_many_arguments)]
fn im2col<T: Real>(
    x: &[T],
    batch: usize,
    in_ch: usize,
    l_in: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    l_out: usize,
) -> Vec<T> {
    let ck = in_ch * kernel;
    let mut m = vec![T::zero(); batch * l_out * ck];
    m.par_chunks_mut(l_out * ck).enumerate().for_each(|(bi, mb)| {
        let xb = &x[bi * in_ch * l_in..(bi + 1) * in_ch * l_in];
        for p in 0..l_out {
            let row = &mut mb[p * ck..(p + 1) * ck];
            let start = (p * stride) as isize - pad as isize;
            for ic in 0..in_ch {
                let xc = &xb[ic * l_in..(ic + 1) * l_in];
                for kk in 0..kernel {
                    let ip = start + kk as isize;
                    if ip >= 0 && (ip as usize) < l_in {
                        row[ic * kernel + kk] = xc[ip as usize];
                    }
                }
            }
        }
    });
    m
}

/// Scatter-add of im2col-layout gradients back to the input, inverse of `im2col`.
#[allow(clippy::too_many_arguments)]
fn col2im_accumulate<T: Real>(
    dm_t: &[T], // (in_ch*k, B*l_out)
    dx: &mut [T],
    batch: usize,
    in_ch: usize,
    l_in: usize,
    l_out: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
) {
    let n = batch * l_out;
    dx.par_chunks_mut(in_ch * l_in).enumerate().for_each(|(bi, dxb)| {
        for ic in 0..in_ch {
            let dxc = &mut dxb[ic * l_in..(ic + 1) * l_in];
            for kk in 0..kernel {
                let src = &dm_t[(ic * kernel + kk) * n + bi * l_out..(ic * kernel + kk) * n + (bi + 1) * l_out];
                for (p, &g) in src.iter().enumerate() {
                    let ip = (p * stride) as isize + kk as isize - pad as isize;
                    if ip >= 0 && (ip as usize) < l_in {
                        dxc[ip as usize] += g;
                    }
                }
            }
        }
    });
}

/// (B, C, L) -> (C, B*L)
fn batch_to_rows<T: Real>(x: &[T], batch: usize, ch: usize, l: usize) -> Vec<T> {
    let mut out = vec![T::zero(); x.len()];
    out.par_chunks_mut(batch * l).enumerate().for_each(|(c, orow)| {
        for bi in 0..batch {
            let src = &x[(bi * ch + c) * l..(bi * ch + c + 1) * l];
            orow[bi * l..(bi + 1) * l].copy_from_slice(src);
        }
    });
    out
}

/// (C, B*L) -> (B, C, L)
fn rows_to_batch<T: Real>(x2: &[T], batch: usize, ch: usize, l: usize) -> Vec<T> {
    let mut out = vec![T::zero(); x2.len()];
    out.par_chunks_mut(ch * l).enumerate().for_each(|(bi, ob)| {
        for c in 0..ch {
            let src = &x2[c * batch * l + bi * l..c * batch * l + (bi + 1) * l];
            ob[c * l..(c + 1) * l].copy_from_slice(src);
        }
    });
    out
}

/// (out_ch, B*l_out) rows plus bias -> (B, out_ch, l_out)
fn scatter_rows_to_batch<T: Real>(
    y2: &[T],
    y: &mut [T],
    batch: usize,
    out_ch: usize,
    l_out: usize,
    bias: &[T],
) {
    y.par_chunks_mut(out_ch * l_out).enumerate().for_each(|(bi, yb)| {
        for oc in 0..out_ch {
            let src = &y2[oc * batch * l_out + bi * l_out..oc * batch * l_out + (bi + 1) * l_out];
            let dst = &mut yb[oc * l_out..(oc + 1) * l_out];
            let bv = bias[oc];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = s + bv;
            }
        }
    });
}

fn add_channel_bias<T: Real>(y: &mut [T], batch: usize, out_ch: usize, l_out: usize, bias: &[T]) {
    for bi in 0..batch {
        for oc in 0..out_ch {
            let dst = &mut y[(bi * out_ch + oc) * l_out..(bi * out_ch + oc + 1) * l_out];
            let bv = bias[oc];
            for d in dst {
                *d += bv;
            }
        }
    }
}

/// Transposed-conv scatter: U (out_ch*k, B*l_in) -> y (B, out_ch, l_out).
#[allow(clippy::too_many_arguments)]
fn col2im_transposed<T: Real>(
    u: &[T],
    y: &mut [T],
    batch: usize,
    out_ch: usize,
    l_in: usize,
    l_out: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
) {
    let n = batch * l_in;
    y.par_chunks_mut(out_ch * l_out).enumerate().for_each(|(bi, yb)| {
        for oc in 0..out_ch {
            let yc = &mut yb[oc * l_out..(oc + 1) * l_out];
            for kk in 0..kernel {
                let src = &u[(oc * kernel + kk) * n + bi * l_in..(oc * kernel + kk) * n + (bi + 1) * l_in];
                for (p, &v) in src.iter().enumerate() {
                    let op = (p * stride + kk) as isize - pad as isize;
                    if op >= 0 && (op as usize) < l_out {
                        yc[op as usize] += v;
                    }
                }
            }
        }
    });
}

/// Gradient gather for the transposed conv, inverse of `col2im_transposed`.
#[allow(clippy::too_many_arguments)]
fn gather_transposed<T: Real>(
    dy: &[T],
    batch: usize,
    out_ch: usize,
    l_in: usize,
    l_out: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let n = batch * l_in;
    let mut du = vec![T::zero(); out_ch * kernel * n];
    du.par_chunks_mut(n).enumerate().for_each(|(rowidx, durow)| {
        let oc = rowidx / kernel;
        let kk = rowidx % kernel;
        for bi in 0..batch {
            let dyc = &dy[(bi * out_ch + oc) * l_out..(bi * out_ch + oc + 1) * l_out];
            let dst = &mut durow[bi * l_in..(bi + 1) * l_in];
            for (p, d) in dst.iter_mut().enumerate() {
                let op = (p * stride + kk) as isize - pad as isize;
                if op >= 0 && (op as usize) < l_out {
                    *d = dyc[op as usize];
                }
            }
        }
    });
    du
}
