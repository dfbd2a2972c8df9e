//! The experiments behind each config kind. Each `*_compare`/`*_sweep`
//! function computes results in memory; [`run`] writes them to disk.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::*;
use super::output::{fmt_f64, RunDir, RunManifest};
use super::svg::{emit_svg, PlotOptions, Series};
use crate::densela::Matrix;
use crate::error::{Error, Result};
use crate::hesslab::{sample_theorem2, Theorem2Options, Theorem2Study};
use crate::net::data::Dataset;
use crate::net::network::initial_weights;
use crate::net::{train, LossKind, Mode, Network, TrainConfig, TrainTrace};
use crate::precond::{
    self, column_equilibrate, conditioning_report, jacobi_precondition, row_equilibrate, DiagonalPreconditioner,
    Side, VdsRecord, VdsSummary,
};
use crate::quadlab::{preconditioned_problem, run_gd, QuadraticProblem};
use crate::rng;

// ---------------------------------------------------------------- quadratic

#[derive(Debug, Clone, Serialize)]
pub struct QuadRun {
    pub arm: QuadArm,
    pub rho: f64,
    pub eta: f64,
    pub sigma_max: f64,
    pub kappa: f64,
    /// Iterations until the loss gap falls below `tol` times its initial value.
    pub iterations: Option<usize>,
    pub diverged: bool,
    /// `L(θᵗ) − L*` per iteration.
    pub loss_gap: Vec<f64>,
}

fn quad_problem(p: &QuadParams, seed: u64) -> Result<QuadraticProblem> {
    let a = match &p.matrix {
        Some(rows) => Matrix::from_rows(rows)?,
        None => {
            if !(p.scale >= 1.0 && p.scale.is_finite()) {
                return Err(Error::Config("scale must be finite and >= 1".into()));
            }
            let mut r = rng::stream(seed, rng::label_id("quad_a"));
            let b = rng::spd_with_condition(&mut r, p.n, p.kappa);
            let d: Vec<f64> = (0..p.n).map(|_| rng::log_uniform(&mut r, 1.0 / p.scale, p.scale)).collect();
            Matrix::from_fn(p.n, p.n, |i, j| d[i] * b.get(i, j) * d[j])?
        }
    };
    let b = match &p.b {
        Some(b) => b.clone(),
        None => {
            let mut r = rng::stream(seed, rng::label_id("quad_b"));
            (0..a.rows()).map(|_| rng::normal(&mut r)).collect()
        }
    };
    QuadraticProblem::new(a, b)
}

fn quad_arm_problem(p: &QuadraticProblem, arm: QuadArm) -> Result<QuadraticProblem> {
    let a = p.a();
    let pc = match arm {
        QuadArm::None => return Ok(p.clone()),
        QuadArm::Jacobi => jacobi_precondition(a)?.0,
        QuadArm::RowEquilibration => row_equilibrate(a)?.0,
        // the column scales, applied from the left like the others
        QuadArm::ColumnEquilibration => {
            let c = column_equilibrate(a)?.1;
            DiagonalPreconditioner::new(c.diag().to_vec(), Side::Left, c.kind())?
        }
    };
    Ok(preconditioned_problem(p, &pc)?.as_quadratic().clone())
}

/// Gradient descent from a shared seeded start on every arm × relative rate.
pub fn quad_compare(params: &QuadParams, seed: u64) -> Result<Vec<QuadRun>> {
    if params.rho.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Config("rho values must be positive".into()));
    }
    let base = quad_problem(params, seed)?;
    let mut r = rng::stream(seed, rng::label_id("quad_theta0"));
    let theta0: Vec<f64> = (0..base.dim()).map(|_| rng::normal(&mut r)).collect();
    let mut runs = Vec::new();
    for &arm in &params.arms {
        let q = quad_arm_problem(&base, arm).map_err(|e| e.at_stage(arm.as_str()))?;
        let min_loss = q.loss(q.minimizer())?;
        for &rho in &params.rho {
            let eta = rho * 2.0 / q.sigma()[0];
            let trace = run_gd(&q, &theta0, eta, params.iterations)?;
            runs.push(QuadRun {
                arm,
                rho,
                eta,
                sigma_max: q.sigma()[0],
                kappa: q.kappa(),
                iterations: if trace.diverged {
                    None
                } else {
                    trace.iterations_to_tolerance(min_loss, params.tol)
                },
                diverged: trace.diverged,
                loss_gap: trace.losses.iter().map(|l| l - min_loss).collect(),
            });
        }
    }
    Ok(runs)
}

// ----------------------------------------------------------------- training

#[derive(Debug, Clone, Serialize)]
pub struct ArmRun {
    pub arm: Arm,
    pub trace: TrainTrace,
    pub init_hash: String,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub arm: Arm,
    pub lr: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainCompareResult {
    pub loss: LossKind,
    pub data_hash: String,
    pub runs: Vec<ArmRun>,
    pub sweep: Vec<SweepPoint>,
    /// Largest rate below the first diverging one on the sorted grid.
    pub max_stable_lr: BTreeMap<Arm, Option<f64>>,
    /// Seconds per optimizer step, measured sequentially after training.
    pub step_seconds: BTreeMap<Arm, f64>,
}

impl TrainCompareResult {
    pub fn run(&self, arm: Arm) -> Option<&ArmRun> {
        self.runs.iter().find(|r| r.arm == arm)
    }

    /// The loss every arm is timed against: the final loss of the plain arm,
    /// or of the first arm when there is no plain one.
    pub fn reference_loss(&self) -> f64 {
        self.run(Arm::None)
            .or(self.runs.first())
            .map(|r| r.trace.final_loss())
            .unwrap_or(f64::NAN)
    }
}

fn hash_matrices<'a>(ms: impl IntoIterator<Item = &'a Matrix>) -> String {
    let mut h = Sha256::new();
    for m in ms {
        h.update((m.rows() as u64).to_le_bytes());
        h.update((m.cols() as u64).to_le_bytes());
        for x in m.as_slice() {
            h.update(x.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// A sweep run counts as diverged when it blew up or ended no lower than it
/// started.
fn sweep_diverged(t: &TrainTrace) -> bool {
    t.diverged || !(t.final_loss() < t.initial_loss)
}

pub fn max_stable_lr(points: &[SweepPoint]) -> Option<f64> {
    let mut pts: Vec<&SweepPoint> = points.iter().collect();
    pts.sort_by(|a, b| a.lr.total_cmp(&b.lr));
    pts.iter().take_while(|p| !p.diverged).last().map(|p| p.lr)
}

/// Wall time of one SGD step on a fixed batch, per arm. Arms are timed in
/// alternation over several rounds and each keeps its fastest round, so
/// slow drift on the machine affects all arms alike.
fn time_steps(arms: &[(Arm, Vec<crate::net::LayerSpec>)], data: &Dataset, cfg: &TrainConfig, steps: usize) -> Result<BTreeMap<Arm, f64>> {
    const ROUNDS: usize = 15;
    let idx: Vec<usize> = (0..cfg.batch_size.min(data.len())).collect();
    let (x, y) = data.batch(&idx);
    let step = |net: &mut Network| -> Result<()> {
        let cache = net.forward(&x, Mode::Train)?;
        let (_, d) = cfg.loss.value_and_grad(&cache.output, &y)?;
        let g = net.backward(&cache, &d)?;
        let theta: Vec<f64> = net.params().iter().zip(&g).map(|(t, g)| t - cfg.lr * g).collect();
        net.update_running_stats(&cache);
        // a diverging arm keeps its last finite parameters; timing is unaffected
        let _ = net.set_params(&theta);
        Ok(())
    };
    let mut nets = arms
        .iter()
        .map(|(_, specs)| Network::new(specs, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    for net in nets.iter_mut() {
        for _ in 0..steps.min(10) {
            step(net)?;
        }
    }
    let mut best = vec![f64::INFINITY; arms.len()];
    for _ in 0..ROUNDS {
        for (net, b) in nets.iter_mut().zip(best.iter_mut()) {
            let t = Instant::now();
            for _ in 0..steps {
                step(net)?;
            }
            *b = b.min(t.elapsed().as_secs_f64() / steps as f64);
        }
    }
    Ok(arms.iter().map(|(a, _)| *a).zip(best).collect())
}

/// Trains every arm from the same initial draw, data and batch order.
pub fn train_compare(params: &TrainCompareParams, seed: u64) -> Result<TrainCompareResult> {
    if params.arms.is_empty() {
        return Err(Error::Config("at least one arm is required".into()));
    }
    let (data, eval) = params.task.load(seed, params.eval_samples)?;
    let loss = params.loss.unwrap_or_else(|| params.task.default_loss());
    let base = architecture(&data, &params.hidden, params.activation);
    let cfg = TrainConfig {
        loss,
        lr: params.lr,
        momentum: params.momentum,
        epochs: params.epochs,
        batch_size: params.batch_size,
        seed,
        snapshot_epochs: Vec::new(),
    };

    let runs: Vec<ArmRun> = params
        .arms
        .par_iter()
        .map(|&arm| -> Result<ArmRun> {
            let specs = arm.apply(&base);
            let mut net = Network::new(&specs, seed)?;
            let start = Instant::now();
            let trace = train(&mut net, &data, eval.as_ref(), &cfg).map_err(|e| e.at_stage(arm.as_str()))?;
            Ok(ArmRun {
                arm,
                trace,
                init_hash: hash_matrices(&initial_weights(&specs, seed)),
                wall_seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<_>>()?;
    let first = &runs[0];
    for r in &runs[1..] {
        if r.init_hash != first.init_hash || r.trace.order_hash != first.trace.order_hash {
            return Err(Error::invalid(format!(
                "arm {} does not share the initial weights or batch order of arm {}",
                r.arm.as_str(),
                first.arm.as_str()
            )));
        }
    }

    let sweep_cfg = TrainConfig {
        epochs: params.sweep_epochs.unwrap_or(params.epochs),
        ..cfg.clone()
    };
    let jobs: Vec<(Arm, f64)> = params
        .arms
        .iter()
        .flat_map(|&a| params.lr_sweep.iter().map(move |&lr| (a, lr)))
        .collect();
    let sweep: Vec<SweepPoint> = jobs
        .par_iter()
        .map(|&(arm, lr)| -> Result<SweepPoint> {
            let mut net = Network::new(&arm.apply(&base), seed)?;
            let t = train(&mut net, &data, None, &TrainConfig { lr, ..sweep_cfg.clone() })?;
            Ok(SweepPoint {
                arm,
                lr,
                initial_loss: t.initial_loss,
                final_loss: t.final_loss(),
                diverged: sweep_diverged(&t),
            })
        })
        .collect::<Result<_>>()?;
    let max_stable_lr = if params.lr_sweep.is_empty() {
        BTreeMap::new()
    } else {
        params
            .arms
            .iter()
            .map(|&a| {
                let pts: Vec<SweepPoint> = sweep.iter().filter(|p| p.arm == a).copied().collect();
                (a, self::max_stable_lr(&pts))
            })
            .collect()
    };

    let step_seconds = if params.timing_steps > 0 {
        let arms: Vec<_> = params.arms.iter().map(|&a| (a, a.apply(&base))).collect();
        time_steps(&arms, &data, &cfg, params.timing_steps)?
    } else {
        BTreeMap::new()
    };

    Ok(TrainCompareResult {
        loss,
        data_hash: hash_matrices([&data.x, &data.y]),
        runs,
        sweep,
        max_stable_lr,
        step_seconds,
    })
}

// ------------------------------------------------------------------ hessian

pub fn hessian_compare(params: &HessianParams, seed: u64) -> Result<Theorem2Study> {
    let (data, _) = params.task.load(seed, 0)?;
    let loss = params.loss.unwrap_or_else(|| params.task.default_loss());
    let specs = architecture(&data, &params.hidden, params.activation);
    let opts = Theorem2Options {
        rank_tol: params.rank_tol,
        reference: TrainConfig {
            loss,
            lr: params.reference_lr,
            momentum: 0.0,
            epochs: params.reference_epochs,
            batch_size: params.reference_batch_size,
            seed,
            snapshot_epochs: Vec::new(),
        },
    };
    sample_theorem2(&specs, &data, loss, params.points, seed, &opts)
}

// ---------------------------------------------------------------- reporting

pub fn cond_matrix(params: &CondParams, seed: u64) -> Result<Matrix> {
    match &params.matrix_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Matrix::parse_text(&text)
        }
        None => Ok(precond::imbalanced_rows(
            &mut rng::stream(seed, rng::label_id("cond")),
            params.rows,
            params.cols,
        )),
    }
}

// --------------------------------------------------------------------- runs

/// What a finished run left behind.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    /// Short human-readable digest of the results.
    pub summary: String,
}

#[derive(Default)]
struct ArmStats {
    diverged: BTreeMap<String, bool>,
    wall: BTreeMap<String, f64>,
}

fn opt_usize(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Runs the experiment and writes its outputs under
/// `root/<kind>-<config hash>`. Experiments that fail after producing
/// diagnostics write them (and the manifest) before returning the error.
pub fn run(config: &ExperimentConfig, root: &Path) -> Result<RunOutcome> {
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let dir_path = config.run_dir(root);
    let mut dir = RunDir::create(&dir_path)?;
    dir.write_json("config.json", config)?;
    let mut stats = ArmStats::default();
    let seed = config.seed;

    let (summary, deferred) = match &config.experiment {
        Experiment::Vds(p) => (run_vds(&mut dir, p, seed)?, None),
        Experiment::Quad(p) => (run_quad(&mut dir, p, seed, &mut stats)?, None),
        Experiment::TrainCompare(p) => (run_train(&mut dir, p, seed, &mut stats)?, None),
        Experiment::HessianCompare(p) => run_hessian(&mut dir, p, seed)?,
        Experiment::CondReport(p) => (run_cond(&mut dir, p, seed)?, None),
    };

    let manifest = dir.finish(RunManifest {
        tool: "wcond".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        kind: config.experiment.kind().into(),
        config_hash: config.hash(),
        seed,
        started_at: started.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
        files: Vec::new(),
        diverged: stats.diverged,
        wall_time_seconds: stats.wall,
        total_wall_time_seconds: clock.elapsed().as_secs_f64(),
    })?;
    if let Some(err) = deferred {
        return Err(err);
    }
    Ok(RunOutcome {
        dir: dir_path,
        manifest,
        summary,
    })
}

fn run_vds(dir: &mut RunDir, p: &VdsParams, seed: u64) -> Result<String> {
    let records: Vec<VdsRecord> = precond::vds_sweep_against(p.trials, p.n, seed, p.opponent);
    let summary: VdsSummary = precond::summarize_vds(&records, p.n);
    dir.write_csv(
        "vds.csv",
        &["trial", "seed", "kappa_a", "kappa_ea", "kappa_pa", "ratio", "full_rank"],
        records.iter().map(|r| {
            vec![
                r.trial.to_string(),
                r.seed.to_string(),
                fmt_f64(r.kappa_a),
                fmt_f64(r.kappa_ea),
                fmt_f64(r.kappa_pa),
                fmt_f64(r.ratio()),
                r.full_rank.to_string(),
            ]
        }),
        None,
    )?;
    dir.write_json("vds_summary.json", &summary)?;
    Ok(format!(
        "{} trials, n = {}: kappa(EA) <= kappa(PA) in {:.4} of full-rank trials, <= sqrt(n) kappa(PA) in {:.4}; max ratio {:.4}",
        summary.trials, summary.n, summary.unrelaxed_fraction, summary.relaxed_fraction, summary.max_ratio
    ))
}

fn run_quad(dir: &mut RunDir, p: &QuadParams, seed: u64, stats: &mut ArmStats) -> Result<String> {
    let runs = quad_compare(p, seed)?;
    let label = |r: &QuadRun| format!("{} rho={}", r.arm.as_str(), r.rho);
    let mut curves = Vec::new();
    for r in &runs {
        let gap0 = r.loss_gap.first().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
        for (t, g) in r.loss_gap.iter().enumerate() {
            curves.push(vec![
                r.arm.as_str().to_string(),
                fmt_f64(r.rho),
                t.to_string(),
                fmt_f64(*g),
                fmt_f64(g / gap0),
            ]);
        }
        stats.diverged.insert(label(r), r.diverged);
    }
    dir.write_csv("quad_curves.csv", &["arm", "rho", "iter", "loss_gap", "relative_gap"], curves, None)?;
    dir.write_csv(
        "quad_iterations.csv",
        &["arm", "rho", "eta", "sigma_max", "kappa", "iterations_to_tol", "diverged"],
        runs.iter().map(|r| {
            vec![
                r.arm.as_str().to_string(),
                fmt_f64(r.rho),
                fmt_f64(r.eta),
                fmt_f64(r.sigma_max),
                fmt_f64(r.kappa),
                opt_usize(r.iterations),
                r.diverged.to_string(),
            ]
        }),
        None,
    )?;
    let series: Vec<Series> = runs
        .iter()
        .map(|r| {
            let g0 = r.loss_gap.first().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
            let ys: Vec<f64> = r.loss_gap.iter().map(|g| g / g0).collect();
            Series::indexed(label(r), &ys)
        })
        .collect();
    let svg = emit_svg(
        &series,
        &PlotOptions {
            title: "Gradient descent on the quadratic".into(),
            x_label: "iteration".into(),
            y_label: "relative loss gap".into(),
            log_y: true,
        },
    );
    dir.write("quad_loss.svg", svg.as_bytes(), None)?;
    let lines: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "{:<22} eta={:<12.4e} kappa={:<12.4e} iterations={}{}",
                label(r),
                r.eta,
                r.kappa,
                r.iterations.map(|i| i.to_string()).unwrap_or_else(|| "-".into()),
                if r.diverged { " (diverged)" } else { "" }
            )
        })
        .collect();
    Ok(lines.join("\n"))
}

fn run_train(dir: &mut RunDir, p: &TrainCompareParams, seed: u64, stats: &mut ArmStats) -> Result<String> {
    let res = train_compare(p, seed)?;
    let reference = res.reference_loss();
    let layers = res.runs[0].trace.kappa_w.first().map(Vec::len).unwrap_or(0);
    for r in &res.runs {
        let t = &r.trace;
        let mut header: Vec<String> = ["epoch", "train_loss", "eval_loss", "accuracy"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..layers).map(|l| format!("kappa_w_{l}")));
        header.extend((0..layers).map(|l| format!("kappa_ew_{l}")));
        let rows = (0..t.epochs()).map(|e| {
            let mut row = vec![
                (e + 1).to_string(),
                fmt_f64(t.train_loss[e]),
                fmt_f64(t.eval_loss[e]),
                opt_f64(t.accuracy[e]),
            ];
            row.extend(t.kappa_w[e].iter().map(|k| fmt_f64(*k)));
            row.extend(t.kappa_ew[e].iter().map(|k| fmt_f64(*k)));
            row
        });
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        dir.write_csv(&format!("train_{}.csv", r.arm.as_str()), &h, rows, Some(r.arm.as_str()))?;
        stats.diverged.insert(r.arm.as_str().into(), t.diverged);
        stats.wall.insert(r.arm.as_str().into(), r.wall_seconds);
    }
    dir.write_csv(
        "summary.csv",
        &[
            "arm",
            "epochs_run",
            "initial_loss",
            "final_train_loss",
            "final_eval_loss",
            "final_accuracy",
            "epochs_to_reference_loss",
            "diverged",
            "max_stable_lr",
        ],
        res.runs.iter().map(|r| {
            let t = &r.trace;
            vec![
                r.arm.as_str().to_string(),
                t.epochs().to_string(),
                fmt_f64(t.initial_loss),
                fmt_f64(t.final_loss()),
                t.eval_loss.last().map(|v| fmt_f64(*v)).unwrap_or_default(),
                opt_f64(t.accuracy.last().copied().flatten()),
                opt_usize(t.epochs_to_loss(reference)),
                t.diverged.to_string(),
                opt_f64(res.max_stable_lr.get(&r.arm).copied().flatten()),
            ]
        }),
        None,
    )?;
    let series: Vec<Series> = res
        .runs
        .iter()
        .map(|r| {
            let mut ys = vec![r.trace.initial_loss];
            ys.extend(&r.trace.train_loss);
            Series::indexed(r.arm.as_str(), &ys)
        })
        .collect();
    let svg = emit_svg(
        &series,
        &PlotOptions {
            title: "Training loss".into(),
            x_label: "epoch".into(),
            y_label: "loss".into(),
            log_y: true,
        },
    );
    dir.write("train_loss.svg", svg.as_bytes(), None)?;
    if !res.sweep.is_empty() {
        dir.write_csv(
            "lr_sweep.csv",
            &["arm", "lr", "initial_loss", "final_loss", "diverged"],
            res.sweep.iter().map(|s| {
                vec![
                    s.arm.as_str().to_string(),
                    fmt_f64(s.lr),
                    fmt_f64(s.initial_loss),
                    fmt_f64(s.final_loss),
                    s.diverged.to_string(),
                ]
            }),
            None,
        )?;
    }
    if !res.step_seconds.is_empty() {
        let timing: BTreeMap<&str, f64> = res.step_seconds.iter().map(|(a, s)| (a.as_str(), *s)).collect();
        dir.write_json("timing.json", &timing)?;
    }
    let mut lines = vec![format!("reference loss {reference:.6e}")];
    for r in &res.runs {
        lines.push(format!(
            "{:<10} final {:<12.6e} epochs to reference {:<6} diverged {}{}{}",
            r.arm.as_str(),
            r.trace.final_loss(),
            r.trace.epochs_to_loss(reference).map(|e| e.to_string()).unwrap_or_else(|| "-".into()),
            r.trace.diverged,
            res.max_stable_lr
                .get(&r.arm)
                .map(|l| format!("  max stable lr {}", opt_f64(*l)))
                .unwrap_or_default(),
            res.step_seconds
                .get(&r.arm)
                .map(|s| format!("  {:.3e} s/step", s))
                .unwrap_or_default(),
        ));
    }
    Ok(lines.join("\n"))
}

#[derive(Serialize)]
struct HessianSummary {
    points: usize,
    full_rank_points: usize,
    rank_deficient_plain: usize,
    rank_deficient_eq: usize,
    satisfied_fraction: Option<f64>,
    pseudo_satisfied_fraction: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn run_hessian(dir: &mut RunDir, p: &HessianParams, seed: u64) -> Result<(String, Option<Error>)> {
    let study = hessian_compare(p, seed)?;
    let mut csv = Vec::new();
    study.write_csv(&mut csv)?;
    dir.write("hessian.csv", &csv, None)?;
    let summary = HessianSummary {
        points: study.points.len(),
        full_rank_points: study.comparisons.len(),
        rank_deficient_plain: study.points.iter().filter(|q| !q.plain.is_full_rank()).count(),
        rank_deficient_eq: study.points.iter().filter(|q| !q.eq.is_full_rank()).count(),
        satisfied_fraction: finite(study.satisfied_fraction()),
        pseudo_satisfied_fraction: finite(study.pseudo_satisfied_fraction()),
    };
    dir.write_json("hessian_summary.json", &summary)?;
    let text = format!(
        "{} points, {} with both Hessians full rank; ordering holds at {} of them (pseudo-kappa ordering {})",
        summary.points,
        summary.full_rank_points,
        summary.satisfied_fraction.map(|f| format!("{f:.3}")).unwrap_or_else(|| "-".into()),
        summary.pseudo_satisfied_fraction.map(|f| format!("{f:.3}")).unwrap_or_else(|| "-".into()),
    );
    let err = (p.points > 0 && study.comparisons.is_empty()).then_some(Error::AllRankDeficient);
    Ok((text, err))
}

fn run_cond(dir: &mut RunDir, p: &CondParams, seed: u64) -> Result<String> {
    let a = cond_matrix(p, seed)?;
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for &kind in &p.kinds {
        match conditioning_report(&a, kind) {
            Ok(r) => {
                lines.push(format!(
                    "{:<26} kappa {:.6e} -> {:.6e}",
                    kind.as_str(),
                    r.kappa_before,
                    r.kappa_after
                ));
                rows.push(vec![
                    kind.as_str().to_string(),
                    r.rows.to_string(),
                    r.cols.to_string(),
                    fmt_f64(r.kappa_before),
                    fmt_f64(r.kappa_after),
                    String::new(),
                ]);
            }
            Err(e) => {
                lines.push(format!("{:<26} skipped: {e}", kind.as_str()));
                rows.push(vec![
                    kind.as_str().to_string(),
                    a.rows().to_string(),
                    a.cols().to_string(),
                    String::new(),
                    String::new(),
                    e.to_string(),
                ]);
            }
        }
    }
    dir.write_csv(
        "cond_report.csv",
        &["kind", "rows", "cols", "kappa_before", "kappa_after", "error"],
        rows,
        None,
    )?;
    Ok(lines.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_quadratic_iteration_gain() {
        let p = QuadParams {
            matrix: Some(vec![vec![1.0, 0.0], vec![0.0, 100.0]]),
            b: Some(vec![1.0, 1.0]),
            arms: vec![QuadArm::None, QuadArm::RowEquilibration],
            rho: vec![0.5],
            iterations: 5000,
            ..Default::default()
        };
        let runs = quad_compare(&p, 0).unwrap();
        let plain = runs[0].iterations.unwrap();
        let eq = runs[1].iterations.unwrap();
        assert!(plain >= 10 * eq.max(1), "{plain} vs {eq}");
    }

    #[test]
    fn rate_past_the_stability_limit_diverges() {
        let p = QuadParams {
            matrix: Some(vec![vec![1.0, 0.0], vec![0.0, 100.0]]),
            b: Some(vec![1.0, 1.0]),
            arms: vec![QuadArm::None],
            rho: vec![1.01],
            iterations: 5000,
            ..Default::default()
        };
        let runs = quad_compare(&p, 0).unwrap();
        assert!(runs[0].diverged && runs[0].iterations.is_none());
    }

    #[test]
    fn max_stable_lr_stops_at_first_divergence() {
        let pt = |lr, diverged| SweepPoint {
            arm: Arm::None,
            lr,
            initial_loss: 1.0,
            final_loss: 0.5,
            diverged,
        };
        assert_eq!(max_stable_lr(&[pt(0.4, false), pt(0.1, false), pt(0.2, true)]), Some(0.1));
        assert_eq!(max_stable_lr(&[pt(0.1, true), pt(0.2, false)]), None);
        assert_eq!(max_stable_lr(&[]), None);
    }
}
