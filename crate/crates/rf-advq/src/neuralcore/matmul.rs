//! Small GEMM kernel backing the convolution and dense layers.
//!
//! Row-parallel: each output row is produced by exactly one task with a fixed
//! inner accumulation order, so results are bit-identical regardless of how
//! rayon schedules the chunks.

use super::tensor::Real;
use rayon::prelude::*;

/// Work threshold below which threading costs more than it saves.
const PAR_FLOP_THRESHOLD: usize = 1 << 18;

/// c (m x n) += a (m x k) @ b (k x n), all row-major.
pub fn matmul_acc<T: Real>(a: &[T], b: &[T], c: &mut [T], m: usize, k: usize, n: usize) {
    assert_eq!(a.len(), m * k, "lhs size");
    assert_eq!(b.len(), k * n, "rhs size");
    assert_eq!(c.len(), m * n, "out size");
    if m * k * n >= PAR_FLOP_THRESHOLD && m > 1 {
        c.par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, crow)| row_kernel(&a[i * k..(i + 1) * k], b, crow, n));
    } else {
        for (i, crow) in c.chunks_mut(n).enumerate() {
            row_kernel(&a[i * k..(i + 1) * k], b, crow, n);
        }
    }
}

/// c = a @ b with c freshly zeroed.
pub fn matmul<T: Real>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * n];
    matmul_acc(a, b, &mut c, m, k, n);
    c
}

#[inline]
fn row_kernel<T: Real>(arow: &[T], b: &[T], crow: &mut [T], n: usize) {
    for (kk, &aik) in arow.iter().enumerate() {
        if aik == T::zero() {
            continue;
        }
        let brow = &b[kk * n..kk * n + n];
        for (cv, &bv) in crow.iter_mut().zip(brow) {
            *cv += aik * bv;
        }
    }
}

/// Row-major transpose: (rows x cols) -> (cols x rows).
pub fn transpose<T: Real>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    assert_eq!(a.len(), rows * cols);
    let mut out = vec![T::zero(); rows * cols];
    const BLK: usize = 32;
    for r0 in (0..rows).step_by(BLK) {
        for c0 in (0..cols).step_by(BLK) {
            for r in r0..(r0 + BLK).min(rows) {
                for c in c0..(c0 + BLK).min(cols) {
                    out[c * rows + r] = a[r * cols + c];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for kk in 0..k {
                    c[i * n + j] += a[i * k + kk] * b[kk * n + j];
                }
            }
        }
        c
    }

    #[test]
    fn matches_naive_product() {
        let (m, k, n) = (7, 13, 9);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.11).cos()).collect();
        let got = matmul(&a, &b, m, k, n);
        let want = naive(&a, &b, m, k, n);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_path_is_deterministic() {
        let (m, k, n) = (128, 64, 64);
        let a: Vec<f32> = (0..m * k).map(|i| (i as f32 * 0.013).sin()).collect();
        let b: Vec<f32> = (0..k * n).map(|i| (i as f32 * 0.029).cos()).collect();
        let c1 = matmul(&a, &b, m, k, n);
        let c2 = matmul(&a, &b, m, k, n);
        assert_eq!(c1, c2);
    }

    #[test]
    fn transpose_roundtrip() {
        let a: Vec<f32> = (0..6 * 5).map(|i| i as f32).collect();
        let t = transpose(&a, 6, 5);
        let back = transpose(&t, 5, 6);
        assert_eq!(a, back);
        assert_eq!(t[0 * 6 + 2], a[2 * 5 + 0]);
    }
}
