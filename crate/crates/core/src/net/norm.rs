//! Batch normalization and the public weight-reparameterization baselines.

use crate::densela::{col_norms2, Matrix};
use crate::error::{Error, Result};
use crate::net::weights::{self, Axis};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-feature affine parameters and running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BnCache {
    xhat: Matrix,
    inv_std: Vec<f64>,
    /// Batch statistics when computed in training mode.
    pub batch_mean: Option<Vec<f64>>,
    pub batch_var: Option<Vec<f64>>,
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        Self {
            gamma: vec![1.0; features],
            beta: vec![0.0; features],
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    /// Normalizes each column of `z`. Training mode uses batch statistics and
    /// needs at least two rows; otherwise the running statistics are used.
    pub fn forward(&self, z: &Matrix, training: bool) -> Result<(Matrix, BnCache)> {
        let (m, f) = z.shape();
        if f != self.features() {
            return Err(Error::invalid("batch norm feature count mismatch"));
        }
        let (mean, var, stats) = if training {
            if m < 2 {
                return Err(Error::invalid("batch norm in training mode needs a batch of at least 2"));
            }
            let mut mean = vec![0.0; f];
            for i in 0..m {
                for (mu, x) in mean.iter_mut().zip(z.row(i)) {
                    *mu += x;
                }
            }
            mean.iter_mut().for_each(|x| *x /= m as f64);
            let mut var = vec![0.0; f];
            for i in 0..m {
                for ((v, x), mu) in var.iter_mut().zip(z.row(i)).zip(&mean) {
                    *v += (x - mu) * (x - mu);
                }
            }
            var.iter_mut().for_each(|x| *x /= m as f64);
            (mean.clone(), var.clone(), Some((mean, var)))
        } else {
            (self.running_mean.clone(), self.running_var.clone(), None)
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let mut xhat = z.clone();
        let mut out = z.clone();
        for i in 0..m {
            let xr = xhat.row_mut(i);
            for j in 0..f {
                xr[j] = (xr[j] - mean[j]) * inv_std[j];
            }
            let or = out.row_mut(i);
            for j in 0..f {
                or[j] = self.gamma[j] * xr[j] + self.beta[j];
            }
        }
        let (batch_mean, batch_var) = match stats {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        };
        Ok((
            out,
            BnCache {
                xhat,
                inv_std,
                batch_mean,
                batch_var,
            },
        ))
    }

    /// Returns `(dz, dgamma, dbeta)`.
    pub fn backward(&self, dy: &Matrix, cache: &BnCache) -> (Matrix, Vec<f64>, Vec<f64>) {
        let (m, f) = dy.shape();
        let mut dgamma = vec![0.0; f];
        let mut dbeta = vec![0.0; f];
        for i in 0..m {
            for j in 0..f {
                dgamma[j] += dy.get(i, j) * cache.xhat.get(i, j);
                dbeta[j] += dy.get(i, j);
            }
        }
        let mut dz = dy.clone();
        let training = cache.batch_mean.is_some();
        for i in 0..m {
            let row = dz.row_mut(i);
            for j in 0..f {
                let g = self.gamma[j] * cache.inv_std[j];
                row[j] = if training {
                    g * (row[j] - dbeta[j] / m as f64 - cache.xhat.get(i, j) * dgamma[j] / m as f64)
                } else {
                    g * row[j]
                };
            }
        }
        (dz, dgamma, dbeta)
    }

    /// Folds batch statistics into the running estimates (unbiased variance).
    pub fn update_running(&mut self, cache: &BnCache, batch_rows: usize) {
        if let (Some(mean), Some(var)) = (&cache.batch_mean, &cache.batch_var) {
            let corr = batch_rows as f64 / (batch_rows as f64 - 1.0);
            for j in 0..self.features() {
                self.running_mean[j] = (1.0 - BN_MOMENTUM) * self.running_mean[j] + BN_MOMENTUM * mean[j];
                self.running_var[j] = (1.0 - BN_MOMENTUM) * self.running_var[j] + BN_MOMENTUM * var[j] * corr;
            }
        }
    }
}

/// Standardizes each column (fan-in vector of an `inputs × outputs` weight)
/// to mean 0 and variance 1.
pub fn weight_standardize(w: &Matrix) -> Matrix {
    weights::standardize(w, Axis::Cols).0
}

/// `g_j · v_:j / ‖v_:j‖` for every column `j`.
pub fn weight_normalize(v: &Matrix, g: &[f64]) -> Result<Matrix> {
    if g.len() != v.cols() {
        return Err(Error::invalid("weight-norm gain length must equal the number of columns"));
    }
    Ok(weights::normalize_with_gain(v, g, Axis::Cols).0)
}

/// The gain that makes [`weight_normalize`] the identity: the column norms.
pub fn initial_gain(v: &Matrix) -> Vec<f64> {
    col_norms2(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn standardized_batch_is_unchanged() {
        // columns with mean 0 and biased variance 1 − ε, the fixed point of
        // the ε-regularized standardization
        let a = (1.0 - BN_EPS).sqrt();
        let z = Matrix::from_rows(&[[a, -a], [-a, a], [a, a], [-a, -a]]).unwrap();
        let (y, _) = BatchNorm::new(2).forward(&z, true).unwrap();
        for (p, q) in y.as_slice().iter().zip(z.as_slice()) {
            assert!((p - q).abs() < 1e-7);
        }
        // unit variance shrinks by 1/√(1 + ε), about 5e-6
        let u = Matrix::from_rows(&[[1.0], [-1.0]]).unwrap();
        let (y, _) = BatchNorm::new(1).forward(&u, true).unwrap();
        assert!((y.get(0, 0) - 1.0 / (1.0 + BN_EPS).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn batch_of_one_is_rejected_in_training() {
        let z = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(BatchNorm::new(2).forward(&z, true).is_err());
        assert!(BatchNorm::new(2).forward(&z, false).is_ok());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut r = rng::stream(2, 2);
        let z = rng::normal_matrix(&mut r, 5, 3);
        let dy = rng::normal_matrix(&mut r, 5, 3);
        let mut bn = BatchNorm::new(3);
        bn.gamma = vec![0.5, 1.5, -2.0];
        bn.beta = vec![0.1, 0.2, 0.3];
        let f = |zz: &Matrix| -> f64 {
            let (y, _) = bn.forward(zz, true).unwrap();
            y.as_slice().iter().zip(dy.as_slice()).map(|(a, b)| a * b).sum()
        };
        let (_, c) = bn.forward(&z, true).unwrap();
        let (dz, _, _) = bn.backward(&dy, &c);
        let h = 1e-6;
        for i in 0..5 {
            for j in 0..3 {
                let mut p = z.clone();
                let mut m = z.clone();
                p.set(i, j, z.get(i, j) + h);
                m.set(i, j, z.get(i, j) - h);
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                assert!((fd - dz.get(i, j)).abs() < 1e-6, "{i},{j}");
            }
        }
    }

    #[test]
    fn weight_standardize_idempotent_and_normalize_identity() {
        let mut r = rng::stream(8, 1);
        let w = rng::normal_matrix(&mut r, 7, 3);
        let once = weight_standardize(&w);
        let twice = weight_standardize(&once);
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            assert!((a - b).abs() < 1e-4);
        }
        let g = initial_gain(&w);
        let wn = weight_normalize(&w, &g).unwrap();
        for (a, b) in wn.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
