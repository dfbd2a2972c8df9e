use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerKind {
    Dense {
        inputs: usize,
        outputs: usize,
    },
    /// Input rows are `in_channels × height × width`, channel-major.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        height: usize,
        width: usize,
    },
}

impl LayerKind {
    pub fn dense(inputs: usize, outputs: usize) -> Self {
        LayerKind::Dense { inputs, outputs }
    }

    pub fn input_width(&self) -> usize {
        match *self {
            LayerKind::Dense { inputs, .. } => inputs,
            LayerKind::Conv2d {
                in_channels,
                height,
                width,
                ..
            } => in_channels * height * width,
        }
    }

    pub fn output_width(&self) -> usize {
        match *self {
            LayerKind::Dense { outputs, .. } => outputs,
            LayerKind::Conv2d { out_channels, .. } => {
                let (oh, ow) = self.conv_output_hw().expect("conv");
                out_channels * oh * ow
            }
        }
    }

    pub(crate) fn conv_output_hw(&self) -> Option<(usize, usize)> {
        match *self {
            LayerKind::Conv2d {
                kernel,
                stride,
                padding,
                height,
                width,
                ..
            } => Some((
                (height + 2 * padding - kernel) / stride + 1,
                (width + 2 * padding - kernel) / stride + 1,
            )),
            LayerKind::Dense { .. } => None,
        }
    }

    /// Shape of the stored weight: `inputs × outputs` for dense layers,
    /// `out_channels × (in_channels·k·k)` for convolutions.
    pub fn weight_shape(&self) -> (usize, usize) {
        match *self {
            LayerKind::Dense { inputs, outputs } => (inputs, outputs),
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => (out_channels, in_channels * kernel * kernel),
        }
    }

    /// Number of output units (dense outputs or conv channels).
    pub fn units(&self) -> usize {
        match *self {
            LayerKind::Dense { outputs, .. } => outputs,
            LayerKind::Conv2d { out_channels, .. } => out_channels,
        }
    }

    pub(crate) fn fan_in_out(&self) -> (usize, usize) {
        match *self {
            LayerKind::Dense { inputs, outputs } => (inputs, outputs),
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => (in_channels * kernel * kernel, out_channels * kernel * kernel),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            LayerKind::Dense { inputs, outputs } => {
                if inputs == 0 || outputs == 0 {
                    return Err(Error::invalid("dense layer with zero width"));
                }
            }
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                height,
                width,
            } => {
                if in_channels == 0 || out_channels == 0 || kernel == 0 || stride == 0 {
                    return Err(Error::invalid("conv layer with zero channels, kernel or stride"));
                }
                if height + 2 * padding < kernel || width + 2 * padding < kernel {
                    return Err(Error::invalid("conv kernel larger than padded input"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Reparameterization applied to each output unit's fan-in weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightReparam {
    #[default]
    None,
    /// Zero mean, unit variance per fan-in vector.
    Standardize,
    /// `g · v/‖v‖` per fan-in vector with a trainable gain.
    Normalize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    #[serde(default)]
    pub batch_norm: bool,
    #[serde(default)]
    pub weight: WeightReparam,
}

impl Normalization {
    pub const NONE: Normalization = Normalization {
        batch_norm: false,
        weight: WeightReparam::None,
    };

    pub fn batch_norm() -> Self {
        Self {
            batch_norm: true,
            weight: WeightReparam::None,
        }
    }

    pub fn with_weight(mut self, weight: WeightReparam) -> Self {
        self.weight = weight;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    #[default]
    None,
    /// Weights replaced by `E(W)·W` once, at construction.
    EquilibrateStatic,
    /// `E(W)·W` recomputed on every forward pass, with gradients through `E`.
    EquilibrateReparam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub kind: LayerKind,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub conditioning: Conditioning,
}

impl LayerSpec {
    pub fn dense(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            kind: LayerKind::dense(inputs, outputs),
            activation,
            normalization: Normalization::NONE,
            conditioning: Conditioning::None,
        }
    }

    pub fn with_conditioning(mut self, c: Conditioning) -> Self {
        self.conditioning = c;
        self
    }

    pub fn with_normalization(mut self, n: Normalization) -> Self {
        self.normalization = n;
        self
    }
}

/// Builds a dense MLP spec from widths, `act` on hidden layers and identity
/// on the output layer.
pub fn mlp(widths: &[usize], act: Activation) -> Vec<LayerSpec> {
    let n = widths.len().saturating_sub(1);
    (0..n)
        .map(|i| {
            let a = if i + 1 == n { Activation::Identity } else { act };
            LayerSpec::dense(widths[i], widths[i + 1], a)
        })
        .collect()
}

pub fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::invalid("network needs at least one layer"));
    }
    for (i, s) in specs.iter().enumerate() {
        s.kind.validate().map_err(|e| e.at_stage("layer validation"))?;
        if i > 0 && specs[i - 1].kind.output_width() != s.kind.input_width() {
            return Err(Error::invalid(format!(
                "layer {} outputs {} values but layer {i} expects {}",
                i - 1,
                specs[i - 1].kind.output_width(),
                s.kind.input_width()
            )));
        }
    }
    let last = specs.last().expect("nonempty");
    if last.activation != Activation::Identity {
        return Err(Error::invalid(
            "the output layer must use the identity activation (BCE applies the sigmoid inside the loss)",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_shapes() {
        let k = LayerKind::Conv2d {
            in_channels: 2,
            out_channels: 3,
            kernel: 3,
            stride: 1,
            padding: 1,
            height: 5,
            width: 4,
        };
        assert_eq!(k.conv_output_hw(), Some((5, 4)));
        assert_eq!(k.output_width(), 60);
        assert_eq!(k.weight_shape(), (3, 18));
        assert_eq!(k.input_width(), 40);
    }

    #[test]
    fn validation() {
        assert!(validate_specs(&mlp(&[2, 3, 1], Activation::Tanh)).is_ok());
        let mut bad = mlp(&[2, 3, 1], Activation::Tanh);
        bad[1].activation = Activation::Sigmoid;
        assert!(validate_specs(&bad).is_err());
        let mismatch = vec![
            LayerSpec::dense(2, 3, Activation::Tanh),
            LayerSpec::dense(4, 1, Activation::Identity),
        ];
        assert!(validate_specs(&mismatch).is_err());
        assert!(validate_specs(&[]).is_err());
    }

    #[test]
    fn spec_json_rejects_unknown_keys() {
        let ok = r#"{"kind":{"type":"dense","inputs":2,"outputs":1},"activation":"tanh"}"#;
        let s: LayerSpec = serde_json::from_str(ok).unwrap();
        assert_eq!(s.conditioning, Conditioning::None);
        let bad = r#"{"kind":{"type":"dense","inputs":2,"outputs":1},"activaton":"tanh"}"#;
        assert!(serde_json::from_str::<LayerSpec>(bad).is_err());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(0.0), 0.5);
    }
}
