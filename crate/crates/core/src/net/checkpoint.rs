//! Versioned plain-text network checkpoints.
//!
//! Floats are written in Rust's shortest round-trip form, so loading a saved
//! network reproduces every parameter bit for bit.

use std::fmt::Write as _;

use crate::densela::Matrix;
use crate::error::{Error, Result};
use crate::net::network::{Layer, Network};
use crate::net::norm::BatchNorm;
use crate::net::spec::LayerSpec;

pub const MAGIC: &str = "weightcond-checkpoint";
pub const VERSION: u32 = 1;

fn floats(out: &mut String, key: &str, v: &[f64]) {
    let _ = write!(out, "{key} {}", v.len());
    for x in v {
        let _ = write!(out, " {x:?}");
    }
    out.push('\n');
}

pub fn to_text(net: &Network) -> Result<String> {
    let mut out = format!("{MAGIC} v{VERSION}\nseed {}\nlayers {}\n", net.seed(), net.layers().len());
    for l in net.layers() {
        let _ = writeln!(out, "spec {}", serde_json::to_string(&l.spec)?);
        let (r, c) = l.weight.shape();
        let _ = writeln!(out, "shape {r} {c}");
        floats(&mut out, "weight", l.weight.as_slice());
        floats(&mut out, "gain", &l.gain);
        floats(&mut out, "bias", &l.bias);
        match &l.bn {
            Some(b) => {
                floats(&mut out, "gamma", &b.gamma);
                floats(&mut out, "beta", &b.beta);
                floats(&mut out, "running_mean", &b.running_mean);
                floats(&mut out, "running_var", &b.running_var);
            }
            None => out.push_str("bn none\n"),
        }
    }
    Ok(out)
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    /// Next line, split after its leading keyword, which must equal `key`.
    fn expect(&mut self, key: &str) -> Result<&'a str> {
        let (i, l) = self.it.next().ok_or_else(|| self.err(format!("missing `{key}`")))?;
        self.line = i + 1;
        let (k, rest) = l.split_once(' ').unwrap_or((l, ""));
        if k != key {
            return Err(self.err(format!("expected `{key}`, found `{k}`")));
        }
        Ok(rest)
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let s = self.expect(key)?;
        s.trim().parse().map_err(|_| self.err(format!("bad value for `{key}`")))
    }

    fn floats(&mut self, key: &str) -> Result<Vec<f64>> {
        let s = self.expect(key)?;
        let mut parts = s.split_ascii_whitespace();
        let n: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| self.err("missing length"))?;
        let v = parts
            .map(|p| p.parse::<f64>().map_err(|_| self.err(format!("bad float `{p}`"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != n {
            return Err(self.err(format!("`{key}` declares {n} values, found {}", v.len())));
        }
        Ok(v)
    }
}

pub fn from_text(text: &str) -> Result<Network> {
    let mut ls = Lines {
        it: text.lines().enumerate(),
        line: 0,
    };
    let version = ls.expect(MAGIC)?;
    if version.trim() != format!("v{VERSION}") {
        return Err(ls.err(format!("unsupported checkpoint version `{}`", version.trim())));
    }
    let seed: u64 = ls.number("seed")?;
    let n: usize = ls.number("layers")?;
    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        let spec: LayerSpec = serde_json::from_str(ls.expect("spec")?).map_err(|e| ls.err(e.to_string()))?;
        let shape = ls.expect("shape")?;
        let dims: Vec<usize> = shape.split_ascii_whitespace().filter_map(|p| p.parse().ok()).collect();
        let [r, c] = dims[..] else {
            return Err(ls.err("shape needs two integers"));
        };
        let weight = Matrix::new(r, c, ls.floats("weight")?)?;
        let gain = ls.floats("gain")?;
        let bias = ls.floats("bias")?;
        let bn = if spec.normalization.batch_norm {
            Some(BatchNorm {
                gamma: ls.floats("gamma")?,
                beta: ls.floats("beta")?,
                running_mean: ls.floats("running_mean")?,
                running_var: ls.floats("running_var")?,
            })
        } else {
            ls.expect("bn")?;
            None
        };
        layers.push(Layer {
            spec,
            weight,
            gain,
            bias,
            bn,
        });
    }
    Network::from_layers(layers, seed)
}
