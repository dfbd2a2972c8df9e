use serde::{Deserialize, Serialize};

use crate::densela::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean of squared errors over all `N·m` outputs.
    Mse,
    /// Binary cross-entropy on logits, averaged over all outputs.
    Bce,
}

/// `max(z,0) − z·t + ln(1 + e^{−|z|})`, finite for any finite `z`.
#[inline]
pub fn bce_logits(z: f64, t: f64) -> f64 {
    z.max(0.0) - z * t + (-z.abs()).exp().ln_1p()
}

impl LossKind {
    fn check(y: &Matrix, t: &Matrix) -> Result<()> {
        if y.shape() != t.shape() {
            return Err(Error::invalid(format!(
                "prediction shape {:?} differs from target shape {:?}",
                y.shape(),
                t.shape()
            )));
        }
        if y.rows() == 0 {
            return Err(Error::invalid("empty batch"));
        }
        Ok(())
    }

    pub fn value(self, y: &Matrix, t: &Matrix) -> Result<f64> {
        Self::check(y, t)?;
        let n = y.as_slice().len() as f64;
        let it = y.as_slice().iter().zip(t.as_slice());
        let s: f64 = match self {
            LossKind::Mse => it.map(|(a, b)| (a - b) * (a - b)).sum(),
            LossKind::Bce => it.map(|(z, t)| bce_logits(*z, *t)).sum(),
        };
        Ok(s / n)
    }

    pub fn value_and_grad(self, y: &Matrix, t: &Matrix) -> Result<(f64, Matrix)> {
        let v = self.value(y, t)?;
        let n = y.as_slice().len() as f64;
        let mut g = y.clone();
        for (gi, ti) in g.as_mut_slice().iter_mut().zip(t.as_slice()) {
            *gi = match self {
                LossKind::Mse => 2.0 * (*gi - ti) / n,
                LossKind::Bce => (crate::net::spec::sigmoid(*gi) - ti) / n,
            };
        }
        Ok((v, g))
    }
}

/// Fraction of logits on the correct side of zero for 0/1 targets.
pub fn binary_accuracy(logits: &Matrix, t: &Matrix) -> f64 {
    let hits = logits
        .as_slice()
        .iter()
        .zip(t.as_slice())
        .filter(|(z, t)| (**z > 0.0) == (**t > 0.5))
        .count();
    hits as f64 / logits.as_slice().len().max(1) as f64
}
