use crate::densela::{condition_number, matmul, matmul_nt, matmul_tn, Matrix, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::net::conv::{col2im, im2col, positions_to_rows, rows_to_positions, ConvGeom};
use crate::net::loss::LossKind;
use crate::net::norm::{BatchNorm, BnCache};
use crate::net::spec::{validate_specs, Conditioning, LayerKind, LayerSpec, WeightReparam};
use crate::net::weights::{self, Axis, NormalizeCache, StandardizeCache, NORM_FLOOR};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch norm uses batch statistics.
    Train,
    /// Batch norm uses running statistics.
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    /// `inputs × outputs` (dense) or `out_channels × in·k·k` (conv).
    pub weight: Matrix,
    /// Weight-normalization gains, one per output unit; empty otherwise.
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
    pub bn: Option<BatchNorm>,
}

#[derive(Debug, Clone)]
struct WeightCache {
    cond: Option<(Matrix, Vec<f64>)>,
    ws: Option<StandardizeCache>,
    wn: Option<NormalizeCache>,
    w_eff: Matrix,
}

impl Layer {
    fn geom(&self) -> Option<ConvGeom> {
        ConvGeom::from_kind(&self.spec.kind)
    }

    /// Axis along which fan-in vectors lie in the stored weight.
    fn fan_in_axis(&self) -> Axis {
        match self.spec.kind {
            LayerKind::Dense { .. } => Axis::Cols,
            LayerKind::Conv2d { .. } => Axis::Rows,
        }
    }

    fn param_count(&self) -> usize {
        let bn = self.bn.as_ref().map_or(0, |b| 2 * b.features());
        self.weight.as_slice().len() + self.gain.len() + self.bias.len() + bn
    }

    fn weight_transform(&self) -> WeightCache {
        let mut w = self.weight.clone();
        let mut cache = WeightCache {
            cond: None,
            ws: None,
            wn: None,
            w_eff: Matrix::from_raw(0, 0, Vec::new()),
        };
        if self.spec.conditioning == Conditioning::EquilibrateReparam {
            let (u, norms) = weights::unit_rows(&w);
            warn_floor(&norms, "reparameterized");
            w = u.clone();
            cache.cond = Some((u, norms));
        }
        match self.spec.normalization.weight {
            WeightReparam::None => {}
            WeightReparam::Standardize => {
                let (y, c) = weights::standardize(&w, self.fan_in_axis());
                w = y;
                cache.ws = Some(c);
            }
            WeightReparam::Normalize => {
                let (y, c) = weights::normalize_with_gain(&w, &self.gain, self.fan_in_axis());
                w = y;
                cache.wn = Some(c);
            }
        }
        cache.w_eff = w;
        cache
    }

    fn weight_backward(&self, d_eff: Matrix, cache: &WeightCache) -> (Matrix, Vec<f64>) {
        let mut d = d_eff;
        let mut dgain = Vec::new();
        if let Some(c) = &cache.ws {
            d = weights::standardize_backward(&d, c, self.fan_in_axis());
        }
        if let Some(c) = &cache.wn {
            let (dv, dg) = weights::normalize_with_gain_backward(&d, &self.gain, c, self.fan_in_axis());
            d = dv;
            dgain = dg;
        }
        if let Some((u, norms)) = &cache.cond {
            d = weights::unit_rows_backward(&d, u, norms);
        }
        (d, dgain)
    }

    /// The weight actually used in the forward pass.
    pub fn effective_weight(&self) -> Matrix {
        self.weight_transform().w_eff
    }
}

fn warn_floor(norms: &[f64], what: &str) {
    for (i, n) in norms.iter().enumerate() {
        if *n < NORM_FLOOR {
            log::warn!("{what} conditioning: row {i} has norm {n:e}; clamped at {NORM_FLOOR:e}");
        }
    }
}

fn static_condition(w: &Matrix) -> Matrix {
    let (u, norms) = weights::unit_rows(w);
    warn_floor(&norms, "static");
    u
}

#[derive(Debug, Clone)]
struct LayerCache {
    input_rows: usize,
    a: Matrix,
    wc: WeightCache,
    bn: Option<BnCache>,
    pre: Matrix,
    post: Matrix,
}

/// Everything `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    pub output: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    seed: u64,
}

/// Seeded initial weights, uniform in ±√(6/(fan_in+fan_out)), before any
/// conditioning. Depends only on the layer shapes and the seed.
pub fn initial_weights(specs: &[LayerSpec], seed: u64) -> Vec<Matrix> {
    let mut r = rng::stream(seed, rng::label_id("init"));
    specs
        .iter()
        .map(|s| {
            let (fi, fo) = s.kind.fan_in_out();
            let limit = (6.0 / (fi + fo) as f64).sqrt();
            let (rows, cols) = s.kind.weight_shape();
            rng::uniform_matrix(&mut r, rows, cols, -limit, limit)
        })
        .collect()
}

impl Network {
    pub fn new(specs: &[LayerSpec], seed: u64) -> Result<Self> {
        validate_specs(specs)?;
        let layers = specs
            .iter()
            .zip(initial_weights(specs, seed))
            .map(|(s, w)| {
                let weight = match s.conditioning {
                    Conditioning::EquilibrateStatic => static_condition(&w),
                    _ => w,
                };
                let units = s.kind.units();
                let mut layer = Layer {
                    spec: *s,
                    weight,
                    gain: Vec::new(),
                    bias: vec![0.0; units],
                    bn: s.normalization.batch_norm.then(|| BatchNorm::new(units)),
                };
                if s.normalization.weight == WeightReparam::Normalize {
                    // gain = ‖v‖ so the reparameterization starts as the identity
                    let mut v = layer.weight.clone();
                    if s.conditioning == Conditioning::EquilibrateReparam {
                        v = weights::unit_rows(&v).0;
                    }
                    layer.gain = match layer.fan_in_axis() {
                        Axis::Rows => crate::densela::row_norms2(&v),
                        Axis::Cols => crate::densela::col_norms2(&v),
                    };
                }
                layer
            })
            .collect();
        Ok(Self { layers, seed })
    }

    /// Builds a network from explicit layers (used by checkpoints and tests).
    pub fn from_layers(layers: Vec<Layer>, seed: u64) -> Result<Self> {
        let specs: Vec<LayerSpec> = layers.iter().map(|l| l.spec).collect();
        validate_specs(&specs)?;
        for (k, l) in layers.iter().enumerate() {
            let units = l.spec.kind.units();
            let bad = l.weight.shape() != l.spec.kind.weight_shape()
                || l.bias.len() != units
                || l.gain.len() != if l.spec.normalization.weight == WeightReparam::Normalize { units } else { 0 }
                || l.bn.as_ref().map(|b| b.features()) != l.spec.normalization.batch_norm.then_some(units)
                || l.bn.as_ref().is_some_and(|b| {
                    b.beta.len() != units || b.running_mean.len() != units || b.running_var.len() != units
                });
            if bad {
                return Err(Error::invalid(format!("layer {k} parameters do not match its spec")));
            }
        }
        Ok(Self { layers, seed })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].spec.kind.input_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("nonempty").spec.kind.output_width()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Parameters flattened per layer as W, gain, b, γ, β.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.gain);
            out.extend_from_slice(&l.bias);
            if let Some(b) = &l.bn {
                out.extend_from_slice(&b.gamma);
                out.extend_from_slice(&b.beta);
            }
        }
        out
    }

    pub fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                theta.len()
            )));
        }
        if let Some(index) = theta.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let mut it = theta.iter().copied();
        let mut fill = |dst: &mut [f64]| dst.iter_mut().for_each(|x| *x = it.next().expect("length checked"));
        for l in &mut self.layers {
            fill(l.weight.as_mut_slice());
            fill(&mut l.gain);
            fill(&mut l.bias);
            if let Some(b) = &mut l.bn {
                fill(&mut b.gamma);
                fill(&mut b.beta);
            }
        }
        Ok(())
    }

    /// The weights used in the forward pass, one per layer.
    pub fn effective_weights(&self) -> Vec<Matrix> {
        self.layers.iter().map(Layer::effective_weight).collect()
    }

    /// The same architecture with every layer's conditioning replaced, and
    /// the same parameters. Static conditioning is not applied here.
    pub fn with_conditioning(&self, c: Conditioning) -> Network {
        let mut out = self.clone();
        for l in &mut out.layers {
            l.spec.conditioning = c;
        }
        out
    }

    /// Replaces every stored weight by `E(W)·W` (unit rows); biases and
    /// architecture are untouched.
    pub fn condition_weights(&self) -> Network {
        let mut out = self.clone();
        for l in &mut out.layers {
            l.weight = static_condition(&l.weight);
        }
        out
    }

    /// Per-layer `(κ(W_k), κ(E_kW_k))` of the stored weights; infinite when
    /// rank-deficient.
    pub fn weight_kappas(&self) -> Vec<(f64, f64)> {
        let k = |m: &Matrix| condition_number(m, DEFAULT_RANK_TOL).unwrap_or(f64::INFINITY);
        self.layers
            .iter()
            .map(|l| (k(&l.weight), k(&weights::unit_rows(&l.weight).0)))
            .collect()
    }

    pub fn forward(&self, x: &Matrix, mode: Mode) -> Result<ForwardCache> {
        if x.cols() != self.input_width() {
            return Err(Error::invalid(format!(
                "input has {} columns, network expects {}",
                x.cols(),
                self.input_width()
            )));
        }
        let n = x.rows();
        let mut cur = x.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (k, l) in self.layers.iter().enumerate() {
            let wc = l.weight_transform();
            let geom = l.geom();
            let (a, mut z) = match &geom {
                None => {
                    let z = matmul(&cur, &wc.w_eff)?;
                    (cur, z)
                }
                Some(g) => {
                    let a = im2col(&cur, g)?;
                    let z = matmul_nt(&a, &wc.w_eff)?;
                    (a, z)
                }
            };
            for i in 0..z.rows() {
                for (v, b) in z.row_mut(i).iter_mut().zip(&l.bias) {
                    *v += b;
                }
            }
            let bn_cache = match &l.bn {
                Some(bn) => {
                    let (y, c) = bn.forward(&z, mode == Mode::Train)?;
                    z = y;
                    Some(c)
                }
                None => None,
            };
            let mut post = z.clone();
            let act = l.spec.activation;
            post.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
            if !post.is_finite() {
                return Err(Error::NonFiniteActivation { layer: k });
            }
            cur = match &geom {
                None => post.clone(),
                Some(g) => positions_to_rows(&post, n, g),
            };
            caches.push(LayerCache {
                input_rows: n,
                a,
                wc,
                bn: bn_cache,
                pre: z,
                post,
            });
        }
        Ok(ForwardCache {
            layers: caches,
            output: cur,
        })
    }

    /// Network output only.
    pub fn predict(&self, x: &Matrix, mode: Mode) -> Result<Matrix> {
        Ok(self.forward(x, mode)?.output)
    }

    /// Gradient of the loss with respect to [`Network::params`], given
    /// `∂L/∂output`.
    pub fn backward(&self, cache: &ForwardCache, d_out: &Matrix) -> Result<Vec<f64>> {
        if d_out.shape() != cache.output.shape() {
            return Err(Error::invalid("output gradient shape mismatch"));
        }
        let mut per_layer: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len()];
        let mut d = d_out.clone();
        for (k, (l, c)) in self.layers.iter().zip(&cache.layers).enumerate().rev() {
            let geom = l.geom();
            let mut dz = match &geom {
                None => d,
                Some(g) => rows_to_positions(&d, g),
            };
            let act = l.spec.activation;
            for ((dv, x), y) in dz.as_mut_slice().iter_mut().zip(c.pre.as_slice()).zip(c.post.as_slice()) {
                *dv *= act.derivative(*x, *y);
            }
            let mut bn_grads = None;
            if let (Some(bn), Some(bc)) = (&l.bn, &c.bn) {
                let (dzz, dg, db) = bn.backward(&dz, bc);
                dz = dzz;
                bn_grads = Some((dg, db));
            }
            let mut dbias = vec![0.0; l.bias.len()];
            for i in 0..dz.rows() {
                for (s, v) in dbias.iter_mut().zip(dz.row(i)) {
                    *s += v;
                }
            }
            let d_eff = match geom {
                None => matmul_tn(&c.a, &dz)?,
                Some(_) => matmul_tn(&dz, &c.a)?,
            };
            if k > 0 {
                d = match &geom {
                    None => matmul_nt(&dz, &c.wc.w_eff)?,
                    Some(g) => col2im(&matmul(&dz, &c.wc.w_eff)?, c.input_rows, g),
                };
            } else {
                d = Matrix::from_raw(0, 0, Vec::new());
            }
            let (dw, dgain) = l.weight_backward(d_eff, &c.wc);
            let g = &mut per_layer[k];
            g.extend_from_slice(dw.as_slice());
            g.extend_from_slice(&dgain);
            g.extend_from_slice(&dbias);
            if let Some((dg, db)) = bn_grads {
                g.extend_from_slice(&dg);
                g.extend_from_slice(&db);
            }
        }
        Ok(per_layer.concat())
    }

    /// Loss and its gradient on one batch.
    pub fn loss_and_grad(&self, x: &Matrix, t: &Matrix, loss: LossKind, mode: Mode) -> Result<(f64, Vec<f64>)> {
        let cache = self.forward(x, mode)?;
        let (value, d_out) = loss.value_and_grad(&cache.output, t)?;
        let g = self.backward(&cache, &d_out)?;
        Ok((value, g))
    }

    pub fn loss(&self, x: &Matrix, t: &Matrix, loss: LossKind, mode: Mode) -> Result<f64> {
        loss.value(&self.predict(x, mode)?, t)
    }

    /// Folds the batch statistics of a training-mode forward pass into the
    /// batch-norm running estimates.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        for (l, c) in self.layers.iter_mut().zip(&cache.layers) {
            if let (Some(bn), Some(bc)) = (&mut l.bn, &c.bn) {
                bn.update_running(bc, c.pre.rows());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densela::norm2;
    use crate::net::spec::{mlp, Activation, Normalization};

    fn fixture_input() -> Matrix {
        Matrix::from_rows(&[[0.5, -1.0], [1.5, 0.25], [-0.75, 2.0], [0.0, 0.0]]).unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let specs = [LayerSpec::dense(2, 2, Activation::Identity)];
        let mut net = Network::new(&specs, 0).unwrap();
        net.set_params(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let x = fixture_input();
        assert_eq!(net.predict(&x, Mode::Eval).unwrap(), x);
    }

    #[test]
    fn dead_relu_gives_zero_output() {
        let specs = [
            LayerSpec::dense(2, 3, Activation::Relu),
            LayerSpec::dense(3, 1, Activation::Identity),
        ];
        let mut net = Network::new(&specs, 0).unwrap();
        let mut theta = net.params();
        // first layer: all weights 0, biases −1 → every pre-activation is −1
        theta[..6].iter_mut().for_each(|x| *x = 0.0);
        theta[6..9].iter_mut().for_each(|x| *x = -1.0);
        net.set_params(&theta).unwrap();
        let y = net.predict(&fixture_input(), Mode::Eval).unwrap();
        assert!(y.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn seeded_231_tanh_matches_straight_line_oracle() {
        let net = Network::new(&mlp(&[2, 3, 1], Activation::Tanh), 42).unwrap();
        let th = net.params();
        let (w1, b1, w2, b2) = (&th[0..6], &th[6..9], &th[9..12], th[12]);
        let x = fixture_input();
        let y = net.predict(&x, Mode::Eval).unwrap();
        for n in 0..x.rows() {
            let (x0, x1) = (x.get(n, 0), x.get(n, 1));
            let mut out = b2;
            for j in 0..3 {
                let h = (x0 * w1[j] + x1 * w1[3 + j] + b1[j]).tanh();
                out += h * w2[j];
            }
            assert!((y.get(n, 0) - out).abs() < 1e-12);
        }
    }

    #[test]
    fn orthonormal_rows_are_a_fixed_point() {
        let specs = [LayerSpec::dense(2, 2, Activation::Identity)];
        let mut net = Network::new(&specs, 0).unwrap();
        let (c, s) = (0.6, 0.8);
        net.set_params(&[c, -s, s, c, 0.1, 0.2]).unwrap();
        let cond = net.condition_weights();
        for (a, b) in cond.params().iter().zip(net.params()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn conditioning_keeps_parameter_count_and_biases() {
        let specs = mlp(&[3, 5, 4, 1], Activation::Relu);
        let net = Network::new(&specs, 1).unwrap();
        let cond = net.condition_weights();
        assert_eq!(net.param_count(), cond.param_count());
        let stat = Network::new(
            &specs
                .iter()
                .map(|s| s.with_conditioning(Conditioning::EquilibrateStatic))
                .collect::<Vec<_>>(),
            1,
        )
        .unwrap();
        assert_eq!(stat.param_count(), net.param_count());
        assert_eq!(stat.params(), cond.params());
        for (l, c) in net.layers().iter().zip(cond.layers()) {
            assert_eq!(l.bias, c.bias);
        }
    }

    #[test]
    fn reparam_rows_are_unit_and_scale_invariant() {
        let specs: Vec<_> = mlp(&[3, 4, 2], Activation::Tanh)
            .into_iter()
            .map(|s| s.with_conditioning(Conditioning::EquilibrateReparam))
            .collect();
        let net = Network::new(&specs, 5).unwrap();
        for w in net.effective_weights() {
            for i in 0..w.rows() {
                assert!((norm2(w.row(i)) - 1.0).abs() < 1e-14);
            }
        }
        let x = Matrix::from_rows(&[[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]]).unwrap();
        let before = net.predict(&x, Mode::Eval).unwrap();
        let mut scaled = net.clone();
        for x in scaled.layers[0].weight.row_mut(1) {
            *x *= 3.7;
        }
        let after = scaled.predict(&x, Mode::Eval).unwrap();
        for (a, b) in before.as_slice().iter().zip(after.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn one_row_layer_gradient_has_no_radial_part() {
        // dense 1→3: the weight is a single row
        let specs = [LayerSpec::dense(1, 3, Activation::Identity).with_conditioning(Conditioning::EquilibrateReparam)];
        let net = Network::new(&specs, 2).unwrap();
        let x = Matrix::from_rows(&[[1.0], [-2.0]]).unwrap();
        let t = Matrix::from_rows(&[[0.3, 0.1, -0.2], [0.0, 1.0, 2.0]]).unwrap();
        let (_, g) = net.loss_and_grad(&x, &t, LossKind::Mse, Mode::Train).unwrap();
        let w = net.layers()[0].weight.row(0);
        let radial: f64 = w.iter().zip(&g[..3]).map(|(a, b)| a * b).sum();
        assert!(radial.abs() < 1e-15);
    }

    #[test]
    fn weight_norm_starts_as_plain_forward() {
        let plain = Network::new(&mlp(&[2, 4, 1], Activation::Tanh), 9).unwrap();
        let specs: Vec<_> = plain
            .specs()
            .into_iter()
            .map(|s| s.with_normalization(Normalization::NONE.with_weight(WeightReparam::Normalize)))
            .collect();
        let wn = Network::new(&specs, 9).unwrap();
        let x = fixture_input();
        let a = plain.predict(&x, Mode::Eval).unwrap();
        let b = wn.predict(&x, Mode::Eval).unwrap();
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn non_finite_activation_names_the_layer() {
        let mut net = Network::new(&mlp(&[1, 1, 1], Activation::Identity), 0).unwrap();
        net.set_params(&[1e200, 0.0, 1e200, 0.0]).unwrap();
        let x = Matrix::from_rows(&[[1e200]]).unwrap();
        match net.forward(&x, Mode::Eval) {
            Err(Error::NonFiniteActivation { layer }) => assert_eq!(layer, 0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
