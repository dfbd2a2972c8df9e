//! Experiment configuration files (JSON, unknown keys rejected).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::net::data::{self, Dataset, TeacherSpec};
use crate::net::spec::{mlp, Activation, Conditioning, LayerSpec, Normalization, WeightReparam};
use crate::net::LossKind;
use crate::precond::{PreconditionerKind, VdsOpponent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Root under which the per-config run directory is created.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Vds(VdsParams),
    Quad(QuadParams),
    TrainCompare(TrainCompareParams),
    HessianCompare(HessianParams),
    CondReport(CondParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Vds(_) => "vds",
            Experiment::Quad(_) => "quad",
            Experiment::TrainCompare(_) => "train_compare",
            Experiment::HessianCompare(_) => "hessian_compare",
            Experiment::CondReport(_) => "cond_report",
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        Self {
            seed,
            output_dir: None,
            experiment,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// sha256 of the canonical JSON form, excluding the output root.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig {
            output_dir: None,
            ..self.clone()
        };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// `<root>/<kind>-<first 16 hex digits of the hash>`.
    pub fn run_dir(&self, root: &Path) -> PathBuf {
        root.join(format!("{}-{}", self.experiment.kind(), &self.hash()[..16]))
    }
}

fn default_vds_trials() -> usize {
    1000
}
fn default_vds_n() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VdsParams {
    #[serde(default = "default_vds_trials")]
    pub trials: usize,
    #[serde(default = "default_vds_n")]
    pub n: usize,
    #[serde(default)]
    pub opponent: VdsOpponent,
}

impl Default for VdsParams {
    fn default() -> Self {
        Self {
            trials: default_vds_trials(),
            n: default_vds_n(),
            opponent: VdsOpponent::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadArm {
    None,
    Jacobi,
    RowEquilibration,
    ColumnEquilibration,
}

impl QuadArm {
    pub fn as_str(self) -> &'static str {
        match self {
            QuadArm::None => "none",
            QuadArm::Jacobi => "jacobi",
            QuadArm::RowEquilibration => "row_equilibration",
            QuadArm::ColumnEquilibration => "column_equilibration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadParams {
    /// Explicit symmetric matrix; otherwise `D·B·D` with `B` a seeded SPD
    /// matrix of size `n` and condition number `kappa`, and `D` a diagonal
    /// with log-uniform entries in `[1/scale, scale]`.
    pub matrix: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
    pub n: usize,
    pub kappa: f64,
    pub scale: f64,
    pub arms: Vec<QuadArm>,
    /// Relative learning rates: each arm runs at `η = ρ·2/σ₁` of its own
    /// operator.
    pub rho: Vec<f64>,
    pub iterations: usize,
    /// Relative loss-gap tolerance for the iterations table.
    pub tol: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            matrix: None,
            b: None,
            n: 8,
            kappa: 1.5,
            scale: 10.0,
            arms: vec![
                QuadArm::None,
                QuadArm::Jacobi,
                QuadArm::RowEquilibration,
                QuadArm::ColumnEquilibration,
            ],
            rho: vec![0.5],
            iterations: 2000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TaskSpec {
    TeacherStudent(TeacherSpec),
    TwoMoons(MoonsSpec),
    Idx(IdxSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoonsSpec {
    pub samples: usize,
    #[serde(default)]
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdxSpec {
    pub images: PathBuf,
    pub labels: PathBuf,
    /// Use only the first `limit` samples.
    #[serde(default)]
    pub limit: Option<usize>,
}

impl TaskSpec {
    pub fn default_loss(&self) -> LossKind {
        match self {
            TaskSpec::TwoMoons(_) => LossKind::Bce,
            _ => LossKind::Mse,
        }
    }

    /// Training data from `seed`; `eval_samples > 0` draws a disjoint
    /// evaluation set from an independent seed (synthetic tasks only).
    pub fn load(&self, seed: u64, eval_samples: usize) -> Result<(Dataset, Option<Dataset>)> {
        let eval_seed = seed ^ 0x0E7A_1000_0000_0000;
        match self {
            TaskSpec::TeacherStudent(t) => {
                let train = data::teacher_student(t, seed)?;
                let eval = if eval_samples > 0 {
                    // same teacher, fresh inputs
                    let all = data::teacher_student(
                        &TeacherSpec {
                            samples: t.samples + eval_samples,
                            ..*t
                        },
                        seed,
                    )?;
                    let idx: Vec<usize> = (t.samples..t.samples + eval_samples).collect();
                    let (x, y) = all.batch(&idx);
                    Some(Dataset::new(x, y)?)
                } else {
                    None
                };
                Ok((train, eval))
            }
            TaskSpec::TwoMoons(m) => {
                let train = data::two_moons(m.samples, m.noise, seed)?;
                let eval = if eval_samples > 0 {
                    Some(data::two_moons(eval_samples, m.noise, eval_seed)?)
                } else {
                    None
                };
                Ok((train, eval))
            }
            TaskSpec::Idx(spec) => {
                let images = data::read_idx_file(&spec.images)?;
                let labels = data::read_idx_file(&spec.labels)?;
                let mut ds = data::idx_dataset(&images, &labels)?;
                if let Some(limit) = spec.limit {
                    let idx: Vec<usize> = (0..limit.min(ds.len())).collect();
                    let (x, y) = ds.batch(&idx);
                    ds = Dataset::new(x, y)?;
                }
                Ok((ds, None))
            }
        }
    }
}

/// Normalization and conditioning arms of a training comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    None,
    Bn,
    BnWs,
    BnW,
    BnE,
    EStatic,
    EReparam,
}

impl Arm {
    pub const ALL: [Arm; 7] = [
        Arm::None,
        Arm::Bn,
        Arm::BnWs,
        Arm::BnW,
        Arm::BnE,
        Arm::EStatic,
        Arm::EReparam,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Arm::None => "none",
            Arm::Bn => "bn",
            Arm::BnWs => "bn_ws",
            Arm::BnW => "bn_w",
            Arm::BnE => "bn_e",
            Arm::EStatic => "e_static",
            Arm::EReparam => "e_reparam",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Arm::None => "plain network",
            Arm::Bn => "batch norm on hidden layers",
            Arm::BnWs => "batch norm + weight standardization",
            Arm::BnW => "batch norm + weight normalization",
            Arm::BnE => "batch norm + equilibrated weights, recomputed every forward pass",
            Arm::EStatic => "equilibrated weights, applied once at initialization",
            Arm::EReparam => "equilibrated weights, recomputed every forward pass",
        }
    }

    /// Batch norm goes on hidden layers only; weight reparameterizations and
    /// conditioning go on every layer.
    pub fn apply(self, specs: &[LayerSpec]) -> Vec<LayerSpec> {
        let last = specs.len().saturating_sub(1);
        specs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let bn = i < last && matches!(self, Arm::Bn | Arm::BnWs | Arm::BnW | Arm::BnE);
                let weight = match self {
                    Arm::BnWs => WeightReparam::Standardize,
                    Arm::BnW => WeightReparam::Normalize,
                    _ => WeightReparam::None,
                };
                let cond = match self {
                    Arm::BnE | Arm::EReparam => Conditioning::EquilibrateReparam,
                    Arm::EStatic => Conditioning::EquilibrateStatic,
                    _ => Conditioning::None,
                };
                s.with_normalization(Normalization { batch_norm: bn, weight })
                    .with_conditioning(cond)
            })
            .collect()
    }
}

/// Dense architecture: data width → `hidden` → target width.
pub fn architecture(data: &Dataset, hidden: &[usize], activation: Activation) -> Vec<LayerSpec> {
    let mut widths = vec![data.x.cols()];
    widths.extend_from_slice(hidden);
    widths.push(data.y.cols());
    mlp(&widths, activation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainCompareParams {
    pub task: TaskSpec,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub arms: Vec<Arm>,
    /// Defaults to MSE for regression tasks and BCE for two moons.
    pub loss: Option<LossKind>,
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub eval_samples: usize,
    /// Learning rates for the divergence sweep; empty skips the sweep.
    pub lr_sweep: Vec<f64>,
    /// Epochs per sweep run (defaults to `epochs`).
    pub sweep_epochs: Option<usize>,
    /// Optimizer steps per timing repeat.
    pub timing_steps: usize,
}

impl Default for TrainCompareParams {
    fn default() -> Self {
        Self {
            task: TaskSpec::TeacherStudent(TeacherSpec {
                inputs: 2,
                hidden: 8,
                outputs: 1,
                kappa: 1e3,
                samples: 256,
                noise: 0.0,
            }),
            hidden: vec![8],
            activation: Activation::Tanh,
            arms: vec![Arm::None, Arm::EReparam],
            loss: None,
            lr: 0.05,
            momentum: 0.0,
            epochs: 100,
            batch_size: 16,
            eval_samples: 0,
            lr_sweep: Vec::new(),
            sweep_epochs: None,
            timing_steps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HessianParams {
    pub task: TaskSpec,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub loss: Option<LossKind>,
    pub points: usize,
    pub rank_tol: f64,
    pub reference_lr: f64,
    pub reference_epochs: usize,
    pub reference_batch_size: usize,
}

impl Default for HessianParams {
    fn default() -> Self {
        Self {
            task: TaskSpec::TeacherStudent(TeacherSpec {
                inputs: 2,
                hidden: 8,
                outputs: 1,
                kappa: 1e3,
                samples: 64,
                noise: 0.0,
            }),
            hidden: vec![8],
            activation: Activation::Tanh,
            loss: None,
            points: 40,
            rank_tol: crate::hesslab::DEFAULT_HESSIAN_RANK_TOL,
            reference_lr: 0.05,
            reference_epochs: 40,
            reference_batch_size: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CondParams {
    /// Text matrix file (`rows cols` header, then rows); otherwise a seeded
    /// matrix with imbalanced row scales.
    pub matrix_file: Option<PathBuf>,
    pub rows: usize,
    pub cols: usize,
    pub kinds: Vec<PreconditionerKind>,
}

impl Default for CondParams {
    fn default() -> Self {
        Self {
            matrix_file: None,
            rows: 8,
            cols: 8,
            kinds: vec![
                PreconditionerKind::Jacobi,
                PreconditionerKind::RowEquilibration,
                PreconditionerKind::ColumnEquilibration,
                PreconditionerKind::RowColumnEquilibration,
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let ok = r#"{"seed": 3, "experiment": {"kind": "vds", "trials": 10}}"#;
        let c = ExperimentConfig::from_json(ok).unwrap();
        assert_eq!(
            c.experiment,
            Experiment::Vds(VdsParams {
                trials: 10,
                ..Default::default()
            })
        );
        for bad in [
            r#"{"seed": 3, "experiment": {"kind": "vds", "trails": 10}}"#,
            r#"{"seed": 3, "colour": 1, "experiment": {"kind": "vds"}}"#,
            r#"{"experiment": {"kind": "train_compare", "task": {"type": "two_moons", "samples": 10, "nosie": 0.1}}}"#,
            r#"{"experiment": {"kind": "warp"}}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
        let nested = r#"{"experiment": {"kind": "train_compare", "task": {"type": "teacher_student", "inputs": 2, "hidden": 4, "outputs": 1, "kappa": 10.0, "samples": 8}, "arms": ["none", "bn_e"]}}"#;
        assert!(ExperimentConfig::from_json(nested).is_ok());
    }

    #[test]
    fn hash_tracks_config_but_not_output_root() {
        let a = ExperimentConfig::new(Experiment::Vds(VdsParams::default()), 1);
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::new(Experiment::Vds(VdsParams::default()), 2);
        assert_ne!(a.hash(), c.hash());
        assert_ne!(a.run_dir(Path::new("r")), c.run_dir(Path::new("r")));
    }

    #[test]
    fn arms_share_parameter_shapes() {
        let specs = mlp(&[2, 8, 1], Activation::Tanh);
        for arm in Arm::ALL {
            let s = arm.apply(&specs);
            assert_eq!(s.len(), 2);
            assert!(!s[1].normalization.batch_norm);
            assert_eq!(s[0].kind, specs[0].kind);
        }
    }
}
