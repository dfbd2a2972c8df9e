#![allow(dead_code)]

use weightcond::net::spec::{Activation, Conditioning, LayerKind, LayerSpec, Normalization, WeightReparam};
use weightcond::net::{Dataset, LossKind, Network};
use weightcond::{hesslab, rng};

pub const ACTIVATIONS: [Activation; 4] = [Activation::Identity, Activation::Relu, Activation::Tanh, Activation::Sigmoid];
pub const CONDITIONINGS: [Conditioning; 3] =
    [Conditioning::None, Conditioning::EquilibrateStatic, Conditioning::EquilibrateReparam];

pub fn normalizations() -> Vec<Normalization> {
    let mut out = Vec::new();
    for bn in [false, true] {
        for w in [WeightReparam::None, WeightReparam::Standardize, WeightReparam::Normalize] {
            out.push(Normalization { batch_norm: bn, weight: w });
        }
    }
    out
}

/// A two-layer network whose first layer is dense or convolutional and
/// carries the activation and normalization under test; conditioning goes on
/// both layers.
pub fn combo_specs(conv: bool, act: Activation, norm: Normalization, cond: Conditioning) -> Vec<LayerSpec> {
    let first = if conv {
        LayerKind::Conv2d {
            in_channels: 2,
            out_channels: 3,
            kernel: 2,
            stride: 1,
            padding: 1,
            height: 3,
            width: 3,
        }
    } else {
        LayerKind::dense(3, 4)
    };
    let hidden = first.output_width();
    vec![
        LayerSpec {
            kind: first,
            activation: act,
            normalization: norm,
            conditioning: cond,
        },
        LayerSpec::dense(hidden, 2, Activation::Identity).with_conditioning(cond),
    ]
}

/// Worst gradient-check error of one combination over the given seeds.
pub fn combo_gradient_error(conv: bool, act: Activation, norm: Normalization, cond: Conditioning, seeds: std::ops::Range<u64>) -> f64 {
    let specs = combo_specs(conv, act, norm, cond);
    let mut worst: f64 = 0.0;
    for seed in seeds {
        let net = Network::new(&specs, seed).expect("valid combo");
        let mut r = rng::stream(seed, 99);
        let x = rng::normal_matrix(&mut r, 5, net.input_width());
        let y = rng::normal_matrix(&mut r, 5, 2);
        let data = Dataset::new(x, y).unwrap();
        // move off the initialization so gains/biases/BN parameters are generic
        let mut theta = net.params();
        for t in theta.iter_mut() {
            *t += 0.1 * rng::normal(&mut r);
        }
        let obj = hesslab::NetObjective::new(net, &data, LossKind::Mse);
        let e = hesslab::gradient_check(&obj, &theta, 20, seed).expect("finite loss");
        worst = worst.max(e);
    }
    worst
}
