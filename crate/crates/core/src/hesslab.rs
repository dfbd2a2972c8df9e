//! Finite-difference Hessians of losses and the plain-versus-equilibrated
//! Hessian conditioning comparison.

use rayon::prelude::*;
use serde::Serialize;

use crate::densela::{frobenius_norm, svd, Matrix};
use crate::error::{Error, Result};
use crate::net::data::Dataset;
use crate::net::loss::LossKind;
use crate::net::network::{Mode, Network};
use crate::net::spec::{Conditioning, LayerSpec};
use crate::net::train::{train, TrainConfig};
use crate::quadlab::QuadraticProblem;
use crate::rng;

/// Desk-scale cap on the Hessian dimension.
pub const MAX_PARAMS: usize = 2000;
pub const DEFAULT_HESSIAN_RANK_TOL: f64 = 1e-8;
pub const GRADIENT_CHECK_TOL: f64 = 1e-5;
/// Slack in the ordering test `κ_eq ≤ κ_plain·(1 + slack)`.
pub const ORDERING_SLACK: f64 = 1e-6;

/// A scalar loss with an analytic gradient. Implementations must be pure so
/// Hessian columns can be evaluated concurrently.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn loss(&self, theta: &[f64]) -> Result<f64>;
    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>>;
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        QuadraticProblem::dim(self)
    }
    fn loss(&self, theta: &[f64]) -> Result<f64> {
        QuadraticProblem::loss(self, theta)
    }
    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        QuadraticProblem::gradient(self, theta)
    }
}

/// Full-batch network loss as a function of the flattened parameters.
#[derive(Debug, Clone)]
pub struct NetObjective<'a> {
    pub net: Network,
    pub data: &'a Dataset,
    pub loss: LossKind,
    pub mode: Mode,
}

impl<'a> NetObjective<'a> {
    pub fn new(net: Network, data: &'a Dataset, loss: LossKind) -> Self {
        Self {
            net,
            data,
            loss,
            mode: Mode::Train,
        }
    }

    fn at(&self, theta: &[f64]) -> Result<Network> {
        let mut n = self.net.clone();
        n.set_params(theta)?;
        Ok(n)
    }
}

impl Objective for NetObjective<'_> {
    fn dim(&self) -> usize {
        self.net.param_count()
    }
    fn loss(&self, theta: &[f64]) -> Result<f64> {
        self.at(theta)?.loss(&self.data.x, &self.data.y, self.loss, self.mode)
    }
    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.at(theta)?.loss_and_grad(&self.data.x, &self.data.y, self.loss, self.mode)?.1)
    }
}

/// `½‖θ − c‖²`, a calibration objective with Hessian `I`.
#[derive(Debug, Clone)]
pub struct HalfSquaredNorm {
    pub center: Vec<f64>,
}

impl Objective for HalfSquaredNorm {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn loss(&self, theta: &[f64]) -> Result<f64> {
        Ok(0.5 * theta.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
    }
    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(theta.iter().zip(&self.center).map(|(a, b)| a - b).collect())
    }
}

/// Relative disagreement between analytic and central-difference
/// directional derivatives along `n_dirs` seeded random unit directions:
/// `‖a − f‖ / max(‖a‖, ‖f‖)` over the vector of derivatives.
pub fn gradient_check(obj: &dyn Objective, theta: &[f64], n_dirs: usize, seed: u64) -> Result<f64> {
    let g = obj.gradient(theta)?;
    let mut r = rng::stream(seed, rng::label_id("gradient-check"));
    let scale = theta.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let h = 1e-6 * scale;
    let (mut num, mut den_a, mut den_f) = (0.0, 0.0, 0.0);
    for _ in 0..n_dirs {
        let mut d: Vec<f64> = (0..theta.len()).map(|_| rng::normal(&mut r)).collect();
        let n = crate::densela::norm2(&d);
        d.iter_mut().for_each(|x| *x /= n);
        let step = |s: f64| -> Vec<f64> { theta.iter().zip(&d).map(|(t, di)| t + s * di).collect() };
        let f = (obj.loss(&step(h))? - obj.loss(&step(-h))?) / (2.0 * h);
        let a: f64 = g.iter().zip(&d).map(|(x, y)| x * y).sum();
        num += (a - f) * (a - f);
        den_a += a * a;
        den_f += f * f;
    }
    let den = den_a.sqrt().max(den_f.sqrt());
    Ok(if den == 0.0 { 0.0 } else { num.sqrt() / den })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianEstimate {
    /// Symmetrized `(H + Hᵀ)/2`.
    pub h: Matrix,
    pub theta: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub grad_norm: f64,
    /// `‖H − Hᵀ‖_F / ‖H‖_F` before symmetrization.
    pub asymmetry: f64,
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_PARAMS {
        return Err(Error::invalid(format!("Hessian dimension {n} outside 1..={MAX_PARAMS}")));
    }
    Ok(())
}

fn symmetrize(cols: Vec<Vec<f64>>) -> Result<(Matrix, f64)> {
    let n = cols.len();
    // cols[j][i] = H_ij
    let raw = Matrix::from_fn(n, n, |i, j| cols[j][i])?;
    let mut skew = 0.0;
    let sym = Matrix::from_fn(n, n, |i, j| {
        let d = raw.get(i, j) - raw.get(j, i);
        skew += d * d;
        0.5 * (raw.get(i, j) + raw.get(j, i))
    })?;
    let nf = frobenius_norm(&raw);
    let asym = if nf == 0.0 { 0.0 } else { skew.sqrt() / nf };
    Ok((sym, asym))
}

/// Hessian by central differences of the analytic gradient with steps
/// `hᵢ = ∛ε·max(1, |θᵢ|)`, after a gradient self-check at `theta`.
pub fn fd_hessian(obj: &dyn Objective, theta: &[f64]) -> Result<HessianEstimate> {
    let n = obj.dim();
    check_dim(n)?;
    if theta.len() != n {
        return Err(Error::invalid("theta length differs from objective dimension"));
    }
    let rel = gradient_check(obj, theta, 20, 0)?;
    if rel > GRADIENT_CHECK_TOL {
        return Err(Error::GradientCheck {
            rel_error: rel,
            tolerance: GRADIENT_CHECK_TOL,
        });
    }
    let g0 = obj.gradient(theta)?;
    let cbrt_eps = f64::EPSILON.cbrt();
    let steps: Vec<f64> = theta.iter().map(|t| cbrt_eps * t.abs().max(1.0)).collect();
    let cols = (0..n)
        .into_par_iter()
        .map(|j| -> Result<Vec<f64>> {
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[j] += steps[j];
            tm[j] -= steps[j];
            // the actual representable step
            let h2 = tp[j] - tm[j];
            let gp = obj.gradient(&tp)?;
            let gm = obj.gradient(&tm)?;
            let col: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / h2).collect();
            if col.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteHessian { index: j });
            }
            Ok(col)
        })
        .collect::<Result<Vec<_>>>()?;
    let (h, asymmetry) = symmetrize(cols)?;
    Ok(HessianEstimate {
        h,
        theta: theta.to_vec(),
        step_sizes: steps,
        grad_norm: crate::densela::norm2(&g0),
        asymmetry,
    })
}

/// Independent oracle from second differences of the loss alone
/// (`O(n²)` loss evaluations), steps `ε^¼·max(1, |θᵢ|)`.
pub fn fd_hessian_loss_only(obj: &dyn Objective, theta: &[f64]) -> Result<Matrix> {
    let n = obj.dim();
    check_dim(n)?;
    let steps: Vec<f64> = theta.iter().map(|t| f64::EPSILON.powf(0.25) * t.abs().max(1.0)).collect();
    let f0 = obj.loss(theta)?;
    let eval = |moves: &[(usize, f64)]| -> Result<f64> {
        let mut t = theta.to_vec();
        for &(i, s) in moves {
            t[i] += s * steps[i];
        }
        obj.loss(&t)
    };
    let rows = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            (0..n)
                .map(|j| {
                    if i == j {
                        let v = eval(&[(i, 1.0)])? - 2.0 * f0 + eval(&[(i, -1.0)])?;
                        Ok(v / (steps[i] * steps[i]))
                    } else {
                        let v = eval(&[(i, 1.0), (j, 1.0)])? - eval(&[(i, 1.0), (j, -1.0)])?
                            - eval(&[(i, -1.0), (j, 1.0)])?
                            + eval(&[(i, -1.0), (j, -1.0)])?;
                        Ok(v / (4.0 * steps[i] * steps[j]))
                    }
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Matrix::new(n, n, rows.concat())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HessianKappa {
    FullRank {
        kappa: f64,
    },
    /// `pseudo_kappa` is σ₁ over the smallest singular value above the
    /// tolerance.
    RankDeficient {
        surviving: usize,
        pseudo_kappa: f64,
    },
}

impl HessianKappa {
    pub fn is_full_rank(&self) -> bool {
        matches!(self, HessianKappa::FullRank { .. })
    }

    /// κ when full rank, pseudo-κ otherwise.
    pub fn value(&self) -> f64 {
        match *self {
            HessianKappa::FullRank { kappa } => kappa,
            HessianKappa::RankDeficient { pseudo_kappa, .. } => pseudo_kappa,
        }
    }
}

/// Condition number from singular values, or a rank-deficiency flag when
/// `σ_n ≤ rank_tol·σ₁`.
pub fn hessian_kappa(h: &Matrix, rank_tol: f64) -> Result<HessianKappa> {
    let s = svd(h)?.sigma;
    let s1 = s.first().copied().unwrap_or(0.0);
    if s1 == 0.0 {
        return Ok(HessianKappa::RankDeficient {
            surviving: 0,
            pseudo_kappa: f64::NAN,
        });
    }
    let surviving: Vec<f64> = s.iter().copied().filter(|x| *x > rank_tol * s1).collect();
    let last = *surviving.last().expect("σ₁ survives");
    if surviving.len() == s.len() {
        Ok(HessianKappa::FullRank { kappa: s1 / last })
    } else {
        Ok(HessianKappa::RankDeficient {
            surviving: surviving.len(),
            pseudo_kappa: s1 / last,
        })
    }
}

/// One sampled parameter point of the comparison, including points where a
/// Hessian failed the rank test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub theta_seed: u64,
    pub phase: String,
    pub plain: HessianKappa,
    pub eq: HessianKappa,
    pub rank_tol: f64,
}

/// A point where both Hessians are numerically full rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaComparison {
    pub kappa_plain: f64,
    pub kappa_eq: f64,
    pub theta_seed: u64,
    pub numerically_full_rank: (bool, bool),
    pub rank_tol: f64,
}

impl KappaComparison {
    pub fn ordered(&self) -> bool {
        self.kappa_eq <= self.kappa_plain * (1.0 + ORDERING_SLACK)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Study {
    pub points: Vec<PointRecord>,
    pub comparisons: Vec<KappaComparison>,
}

impl Theorem2Study {
    pub const CSV_HEADER: [&'static str; 6] = ["seed", "phase", "kappa_plain", "kappa_eq", "rank_ok_plain", "rank_ok_eq"];

    /// Fraction of full-rank points with `κ_eq ≤ κ_plain·(1 + 1e-6)`.
    pub fn satisfied_fraction(&self) -> f64 {
        if self.comparisons.is_empty() {
            return f64::NAN;
        }
        self.comparisons.iter().filter(|c| c.ordered()).count() as f64 / self.comparisons.len() as f64
    }

    /// Ordering of pseudo-κ values over all points, a diagnostic for when the
    /// full-rank hypothesis fails.
    pub fn pseudo_satisfied_fraction(&self) -> f64 {
        let ok: Vec<_> = self
            .points
            .iter()
            .filter(|p| p.plain.value().is_finite() && p.eq.value().is_finite())
            .collect();
        if ok.is_empty() {
            return f64::NAN;
        }
        ok.iter()
            .filter(|p| p.eq.value() <= p.plain.value() * (1.0 + ORDERING_SLACK))
            .count() as f64
            / ok.len() as f64
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for p in &self.points {
            w.write_record([
                p.theta_seed.to_string(),
                p.phase.clone(),
                format!("{:e}", p.plain.value()),
                format!("{:e}", p.eq.value()),
                p.plain.is_full_rank().to_string(),
                p.eq.is_full_rank().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Settings for [`compare_theorem2`].
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Options {
    pub rank_tol: f64,
    /// Reference SGD run used for mid-training snapshots.
    pub reference: TrainConfig,
}

fn with_conditioning(specs: &[LayerSpec], c: Conditioning) -> Vec<LayerSpec> {
    specs.iter().map(|s| s.with_conditioning(c)).collect()
}

/// [`sample_theorem2`], failing with [`Error::AllRankDeficient`] when no
/// sampled point has two numerically full-rank Hessians.
pub fn compare_theorem2(
    specs: &[LayerSpec],
    data: &Dataset,
    loss: LossKind,
    n_points: usize,
    seed: u64,
    opts: &Theorem2Options,
) -> Result<Theorem2Study> {
    let study = sample_theorem2(specs, data, loss, n_points, seed, opts)?;
    if n_points > 0 && study.comparisons.is_empty() {
        return Err(Error::AllRankDeficient);
    }
    Ok(study)
}

/// Samples `n_points` parameter vectors (half from the initialization
/// distribution, half from SGD snapshots at 25/50/75% of reference runs of
/// the plain network) and compares the Hessian condition numbers of the
/// plain loss and the reparameterized equilibrated loss at each.
pub fn sample_theorem2(
    specs: &[LayerSpec],
    data: &Dataset,
    loss: LossKind,
    n_points: usize,
    seed: u64,
    opts: &Theorem2Options,
) -> Result<Theorem2Study> {
    let plain_specs = with_conditioning(specs, Conditioning::None);
    let eq_specs = with_conditioning(specs, Conditioning::EquilibrateReparam);
    let template = Network::new(&plain_specs, seed)?;
    if template.param_count() > MAX_PARAMS {
        return Err(Error::invalid(format!(
            "{} parameters exceed the Hessian cap of {MAX_PARAMS}",
            template.param_count()
        )));
    }
    if n_points == 0 {
        return Ok(Theorem2Study {
            points: Vec::new(),
            comparisons: Vec::new(),
        });
    }
    let n_init = n_points.div_ceil(2);
    let mut samples: Vec<(u64, String, Vec<f64>)> = (0..n_init)
        .map(|i| {
            let s = seed.wrapping_add(i as u64);
            Ok((s, "init".to_string(), Network::new(&plain_specs, s)?.params()))
        })
        .collect::<Result<_>>()?;

    let epochs = opts.reference.epochs.max(4);
    let marks = [epochs / 4, epochs / 2, 3 * epochs / 4];
    let n_snap = n_points - n_init;
    let runs = n_snap.div_ceil(3);
    let snaps: Vec<Vec<(u64, String, Vec<f64>)>> = (0..runs)
        .into_par_iter()
        .map(|j| -> Result<Vec<_>> {
            let s = seed.wrapping_add(1_000 + j as u64);
            let mut net = Network::new(&plain_specs, s)?;
            let cfg = TrainConfig {
                epochs,
                seed: s,
                snapshot_epochs: marks.to_vec(),
                ..opts.reference.clone()
            };
            let trace = train(&mut net, data, None, &cfg)?;
            if trace.diverged || trace.snapshots.len() < 3 {
                return Err(Error::invalid(format!("reference run {s} diverged; lower its learning rate")));
            }
            Ok(trace
                .snapshots
                .into_iter()
                .zip(["sgd25", "sgd50", "sgd75"])
                .map(|((_, th), ph)| (s, ph.to_string(), th))
                .collect())
        })
        .collect::<Result<_>>()?;
    samples.extend(snaps.into_iter().flatten().take(n_snap));

    let plain_net = template.clone();
    let eq_net = Network::new(&eq_specs, seed)?;
    let points = samples
        .into_par_iter()
        .map(|(s, phase, theta)| -> Result<PointRecord> {
            let hp = fd_hessian(&NetObjective::new(plain_net.clone(), data, loss), &theta)?;
            let he = fd_hessian(&NetObjective::new(eq_net.clone(), data, loss), &theta)?;
            Ok(PointRecord {
                theta_seed: s,
                phase,
                plain: hessian_kappa(&hp.h, opts.rank_tol)?,
                eq: hessian_kappa(&he.h, opts.rank_tol)?,
                rank_tol: opts.rank_tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let comparisons: Vec<KappaComparison> = points
        .iter()
        .filter(|p| p.plain.is_full_rank() && p.eq.is_full_rank())
        .map(|p| KappaComparison {
            kappa_plain: p.plain.value(),
            kappa_eq: p.eq.value(),
            theta_seed: p.theta_seed,
            numerically_full_rank: (true, true),
            rank_tol: p.rank_tol,
        })
        .collect();
    for c in comparisons.iter().filter(|c| !c.ordered()) {
        log::info!(
            "ordering violated at seed {}: kappa_eq {:e} > kappa_plain {:e}",
            c.theta_seed,
            c.kappa_eq,
            c.kappa_plain
        );
    }
    Ok(Theorem2Study { points, comparisons })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::spec::{mlp, Activation};

    fn rel(a: &Matrix, b: &Matrix) -> f64 {
        frobenius_norm(&a.sub(b).unwrap()) / frobenius_norm(b)
    }

    #[test]
    fn quadratic_hessian_is_recovered() {
        for kappa in [1.0, 1e3, 1e6] {
            let mut r = rng::stream(5, 5);
            let a = rng::spd_with_condition(&mut r, 6, kappa);
            let b: Vec<f64> = (0..6).map(|_| rng::normal(&mut r)).collect();
            let p = QuadraticProblem::new(a.clone(), b).unwrap();
            let theta: Vec<f64> = (0..6).map(|_| rng::normal(&mut r)).collect();
            let h = fd_hessian(&p, &theta).unwrap();
            assert!(rel(&h.h, &a) < 1e-6, "kappa {kappa}");
        }
    }

    #[test]
    fn half_squared_norm_gives_identity() {
        let obj = HalfSquaredNorm {
            center: vec![1.0, -2.0, 3.0],
        };
        let h = fd_hessian(&obj, &[0.5, 0.5, 100.0]).unwrap();
        let i = Matrix::identity(3).unwrap();
        assert!(rel(&h.h, &i) < 1e-6);
        assert_eq!(hessian_kappa(&i, 1e-8).unwrap(), HessianKappa::FullRank { kappa: 1.0 });
    }

    #[test]
    fn threshold_case_is_flagged() {
        let h = Matrix::from_diag(&[10.0, 1.0, 1e-12]).unwrap();
        match hessian_kappa(&h, 1e-8).unwrap() {
            HessianKappa::RankDeficient { surviving, pseudo_kappa } => {
                assert_eq!(surviving, 2);
                assert!((pseudo_kappa - 10.0).abs() < 1e-12);
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn kappa_invariant_under_loss_scaling() {
        let mut r = rng::stream(2, 9);
        let a = rng::spd_with_condition(&mut r, 5, 1e3);
        let base = hessian_kappa(&a, 1e-8).unwrap().value();
        for c in [1e-3, 0.5, 7.0, 1e4] {
            let k = hessian_kappa(&a.scale(c), 1e-8).unwrap().value();
            assert!((k - base).abs() <= 1e-10 * base);
        }
    }

    #[test]
    fn net_hessian_matches_loss_only_oracle() {
        let data = crate::net::data::two_moons(12, 0.1, 1).unwrap();
        let net = Network::new(&mlp(&[2, 3, 1], Activation::Tanh), 4).unwrap();
        let theta = net.params();
        let obj = NetObjective::new(net, &data, LossKind::Mse);
        let h = fd_hessian(&obj, &theta).unwrap();
        assert!(h.asymmetry < 1e-4);
        let oracle = fd_hessian_loss_only(&obj, &theta).unwrap();
        // compare on the dominant 10 eigendirections: ‖Vᵀ(H − O)V‖ relative
        let s = svd(&h.h).unwrap();
        let diff = h.h.sub(&oracle).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..10 {
            let v = s.right_vector(i);
            let dv = diff.mul_vec(v).unwrap();
            worst = worst.max(crate::densela::norm2(&dv) / s.sigma[0]);
        }
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn zero_points_gives_empty_study() {
        let data = crate::net::data::two_moons(8, 0.1, 1).unwrap();
        let opts = Theorem2Options {
            rank_tol: 1e-8,
            reference: TrainConfig {
                loss: LossKind::Mse,
                lr: 0.1,
                momentum: 0.0,
                epochs: 8,
                batch_size: 8,
                seed: 0,
                snapshot_epochs: vec![],
            },
        };
        let s = compare_theorem2(&mlp(&[2, 3, 1], Activation::Tanh), &data, LossKind::Mse, 0, 1, &opts).unwrap();
        assert!(s.points.is_empty() && s.comparisons.is_empty());
    }

    /// Single linear layer, whitened inputs, unit-row weights: E = I, so the
    /// two losses agree there, but the reparameterized loss is flat along
    /// each row's radial direction and its Hessian is not the plain one.
    #[test]
    fn identity_equilibration_point() {
        use crate::net::spec::{Conditioning, LayerSpec};
        let n = 32;
        let mut r = rng::stream(1, 1);
        let x = rng::orthonormal_columns(&mut r, n, 3).scale((n as f64).sqrt());
        let data = Dataset::new(x, rng::normal_matrix(&mut r, n, 2)).unwrap();
        let w = [0.6, 0.8, 1.0, 0.0, 0.0, -1.0];
        let at = |cond| {
            let specs = vec![LayerSpec::dense(3, 2, Activation::Identity).with_conditioning(cond)];
            let net = Network::new(&specs, 0).unwrap();
            let mut theta = net.params();
            theta[..6].copy_from_slice(&w);
            let obj = NetObjective::new(net, &data, LossKind::Mse);
            (obj.loss(&theta).unwrap(), fd_hessian(&obj, &theta).unwrap().h)
        };
        let (lp, hp) = at(Conditioning::None);
        let (le, he) = at(Conditioning::EquilibrateReparam);
        assert!((lp - le).abs() <= 1e-14 * lp.abs().max(1.0));
        let scale = svd(&he).unwrap().sigma[0];
        for row in 0..3 {
            let mut d = vec![0.0; 8];
            d[2 * row..2 * row + 2].copy_from_slice(&w[2 * row..2 * row + 2]);
            let hd = he.mul_vec(&d).unwrap();
            let curv: f64 = d.iter().zip(&hd).map(|(a, b)| a * b).sum();
            assert!(curv.abs() <= 1e-6 * scale, "radial curvature {curv}");
        }
        let kp = hessian_kappa(&hp, DEFAULT_HESSIAN_RANK_TOL).unwrap().value();
        let ke = hessian_kappa(&he, DEFAULT_HESSIAN_RANK_TOL).unwrap().value();
        assert!(kp < 2.0 && ke > 10.0 * kp, "{kp} vs {ke}");
    }
}
