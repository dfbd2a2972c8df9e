//! Seeded random streams and random test matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::densela::Matrix;

pub type LabRng = ChaCha8Rng;

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream(seed: u64, stream: u64) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable 64-bit id for a label, used to derive per-arm streams.
pub fn label_id(label: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| normal(rng)).expect("valid dims")
}

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi)).expect("valid dims")
}

/// Log-uniform sample in `[lo, hi]`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let (a, b) = (lo.ln(), hi.ln());
    (a + (b - a) * rng.random::<f64>()).exp()
}

/// Random matrix with orthonormal columns (`rows >= cols`) via Gram–Schmidt
/// on a Gaussian draw.
pub fn orthonormal_columns(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    assert!(rows >= cols);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while q.len() < cols {
        let mut v: Vec<f64> = (0..rows).map(|_| normal(rng)).collect();
        for _ in 0..2 {
            for u in &q {
                let p: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= p * ui;
                }
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            q.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    Matrix::from_fn(rows, cols, |i, j| q[j][i]).expect("valid dims")
}

/// Symmetric positive definite matrix `Q diag(λ) Qᵀ` with eigenvalues
/// log-spaced from `1` to `kappa`.
pub fn spd_with_condition(rng: &mut impl Rng, n: usize, kappa: f64) -> Matrix {
    let q = orthonormal_columns(rng, n, n);
    let lambda: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                1.0
            } else {
                kappa.powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect();
    let mut out = Matrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| q.get(i, k) * lambda[k] * q.get(j, k)).sum()
    })
    .expect("finite");
    // exact symmetry
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (out.get(i, j) + out.get(j, i));
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densela::{condition_number, frobenius_norm, matmul_tn};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream(7, 1).random()).collect();
        let mut r1 = stream(7, 1);
        let mut r2 = stream(7, 2);
        let x: u64 = r1.random();
        let y: u64 = r2.random();
        assert_eq!(a[0], x);
        assert_ne!(x, y);
    }

    #[test]
    fn spd_fixture_has_requested_condition() {
        let mut rng = stream(3, 0);
        let a = spd_with_condition(&mut rng, 6, 1e4);
        let k = condition_number(&a, 1e-14).unwrap();
        assert!((k / 1e4 - 1.0).abs() < 1e-8, "{k}");
        let q = orthonormal_columns(&mut rng, 5, 3);
        let g = matmul_tn(&q, &q).unwrap();
        let i3 = Matrix::identity(3).unwrap();
        assert!(frobenius_norm(&g.sub(&i3).unwrap()) < 1e-12);
    }
}
