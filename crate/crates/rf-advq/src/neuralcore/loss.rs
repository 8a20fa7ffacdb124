//! Loss heads: softmax cross-entropy (log-sum-exp stabilized) and mean
//! squared error. Each returns the loss together with the gradient w.r.t.
//! its input so graphs stay loss-agnostic.

use super::tensor::{Real, Tensor};
use crate::error::{Result, RfError};

/// Per-sample cross-entropy of a batch of logits `(B, K)` against integer
/// labels. Returns per-sample losses and per-sample gradients (each row of
/// the gradient is d(loss_b)/d(logits_b), NOT scaled by 1/B).
pub fn softmax_xent<T: Real>(logits: &Tensor<T>, labels: &[usize]) -> Result<(Vec<T>, Tensor<T>)> {
    if logits.shape().len() != 2 {
        return Err(RfError::Shape(format!(
            "softmax_xent expects (B, K), got {:?}",
            logits.shape()
        )));
    }
    let (batch, k) = (logits.shape()[0], logits.shape()[1]);
    if labels.len() != batch {
        return Err(RfError::Shape(format!(
            "{} labels for batch of {}",
            labels.len(),
            batch
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return Err(RfError::InvalidArg(format!("label {bad} out of range [0,{k})")));
    }
    let mut losses = Vec::with_capacity(batch);
    let mut grad = vec![T::zero(); batch * k];
    for (bi, row) in logits.data().chunks(k).enumerate() {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let sum_exp: T = row.iter().map(|&v| (v - m).exp()).sum();
        let lse = m + sum_exp.ln();
        losses.push(lse - row[labels[bi]]);
        let grow = &mut grad[bi * k..(bi + 1) * k];
        for (j, (&v, g)) in row.iter().zip(grow.iter_mut()).enumerate() {
            let p = (v - lse).exp();
            *g = if j == labels[bi] { p - T::one() } else { p };
        }
    }
    Ok((losses, Tensor::from_vec(logits.shape(), grad)?))
}

/// Softmax probabilities for a single logits row.
pub fn softmax_row<T: Real>(row: &[T]) -> Vec<T> {
    let m = row.iter().copied().fold(T::neg_infinity(), T::max);
    let sum_exp: T = row.iter().map(|&v| (v - m).exp()).sum();
    let lse = m + sum_exp.ln();
    row.iter().map(|&v| (v - lse).exp()).collect()
}

/// Mean squared error over every element: loss = mean((pred - target)^2).
/// Returns the loss and d(loss)/d(pred).
pub fn mse<T: Real>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    if pred.shape() != target.shape() {
        return Err(RfError::Shape(format!(
            "mse shapes differ: {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = T::from_f64(pred.len() as f64);
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); pred.len()];
    for ((g, &p), &t) in grad.iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p - t;
        loss += d * d;
        *g = (d + d) / n;
    }
    Ok((loss / n, Tensor::from_vec(pred.shape(), grad)?))
}
