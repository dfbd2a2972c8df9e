//! Diagonal preconditioners: Jacobi, row, column and row-column
//! equilibration, plus the sweeps that test how equilibration compares with
//! arbitrary diagonal scalings.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::densela::{condition_number, row_norms2, transpose, Matrix, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerKind {
    Jacobi,
    RowEquilibration,
    ColumnEquilibration,
    RowColumnEquilibration,
    Custom,
}

impl PreconditionerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PreconditionerKind::Jacobi => "jacobi",
            PreconditionerKind::RowEquilibration => "row_equilibration",
            PreconditionerKind::ColumnEquilibration => "column_equilibration",
            PreconditionerKind::RowColumnEquilibration => "row_column_equilibration",
            PreconditionerKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Diagonal scaling applied on one side of a matrix.
///
/// Entries are strictly positive, except for [`PreconditionerKind::Jacobi`]
/// which only requires them to be nonzero (inverse diagonals may be negative).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPreconditioner {
    diag: Vec<f64>,
    side: Side,
    kind: PreconditionerKind,
}

impl DiagonalPreconditioner {
    pub fn new(diag: Vec<f64>, side: Side, kind: PreconditionerKind) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("empty preconditioner"));
        }
        for (i, &d) in diag.iter().enumerate() {
            if !d.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            let ok = match kind {
                PreconditionerKind::Jacobi => d != 0.0,
                _ => d > 0.0,
            };
            if !ok {
                return Err(Error::invalid(format!(
                    "{} preconditioner entry {i} = {d} is not admissible",
                    kind.as_str()
                )));
            }
        }
        Ok(Self { diag, side, kind })
    }

    pub fn identity(n: usize, side: Side) -> Self {
        Self {
            diag: vec![1.0; n],
            side,
            kind: PreconditionerKind::Custom,
        }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `c · P`, keeping side and kind.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.diag.iter().map(|d| d * c).collect(), self.side, self.kind)
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_diag(&self.diag).expect("validated entries")
    }

    /// `P·A` for a left preconditioner, `A·P` for a right one.
    pub fn apply(&self, a: &Matrix) -> Result<Matrix> {
        match self.side {
            Side::Left => scale_rows(a, &self.diag),
            Side::Right => scale_cols(a, &self.diag),
        }
    }

    /// `P·v` for vectors.
    pub fn apply_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.diag.len() {
            return Err(Error::invalid(format!(
                "vector length {} vs preconditioner size {}",
                v.len(),
                self.diag.len()
            )));
        }
        Ok(v.iter().zip(&self.diag).map(|(x, d)| x * d).collect())
    }
}

pub fn scale_rows(a: &Matrix, d: &[f64]) -> Result<Matrix> {
    if d.len() != a.rows() {
        return Err(Error::invalid(format!(
            "left scaling of size {} on {} rows",
            d.len(),
            a.rows()
        )));
    }
    let mut out = a.clone();
    for (i, &s) in d.iter().enumerate() {
        for x in out.row_mut(i) {
            *x *= s;
        }
    }
    Ok(out)
}

pub fn scale_cols(a: &Matrix, d: &[f64]) -> Result<Matrix> {
    if d.len() != a.cols() {
        return Err(Error::invalid(format!(
            "right scaling of size {} on {} columns",
            d.len(),
            a.cols()
        )));
    }
    let mut out = a.clone();
    for i in 0..a.rows() {
        for (x, &s) in out.row_mut(i).iter_mut().zip(d) {
            *x *= s;
        }
    }
    Ok(out)
}

/// Row equilibration: `E = diag(1/‖A_i:‖₂)`, returning `(E, E·A)`.
pub fn row_equilibrate(a: &Matrix) -> Result<(DiagonalPreconditioner, Matrix)> {
    row_equilibrate_impl(a, None)
}

/// Row equilibration with row norms clamped below at `floor` (ε ≥ 0).
///
/// With `floor > 0` a zero row stays zero instead of failing.
pub fn row_equilibrate_with_floor(a: &Matrix, floor: f64) -> Result<(DiagonalPreconditioner, Matrix)> {
    if !(floor >= 0.0 && floor.is_finite()) {
        return Err(Error::invalid(format!("floor {floor} must be finite and >= 0")));
    }
    row_equilibrate_impl(a, Some(floor))
}

fn row_equilibrate_impl(a: &Matrix, floor: Option<f64>) -> Result<(DiagonalPreconditioner, Matrix)> {
    let norms = row_norms2(a);
    let mut diag = Vec::with_capacity(norms.len());
    for (i, &n) in norms.iter().enumerate() {
        let eff = match floor {
            Some(f) => n.max(f),
            None => n,
        };
        if eff == 0.0 {
            return Err(Error::ZeroRow { index: i });
        }
        diag.push(1.0 / eff);
    }
    let e = DiagonalPreconditioner::new(diag, Side::Left, PreconditionerKind::RowEquilibration)?;
    let ea = e.apply(a)?;
    Ok((e, ea))
}

/// Column equilibration: `C = diag(1/‖A_:j‖₂)`, returning `(A·C, C)`.
pub fn column_equilibrate(a: &Matrix) -> Result<(Matrix, DiagonalPreconditioner)> {
    let (e, _) = row_equilibrate(&transpose(a)).map_err(|err| match err {
        Error::ZeroRow { index } => Error::ZeroColumn { index },
        other => other,
    })?;
    let c = DiagonalPreconditioner::new(e.diag, Side::Right, PreconditionerKind::ColumnEquilibration)?;
    let ac = c.apply(a)?;
    Ok((ac, c))
}

/// Row equilibration followed by column equilibration of the row-scaled
/// matrix: returns `(E, E·A·C, C)` with `C` computed from `E·A`.
pub fn row_column_equilibrate(
    a: &Matrix,
) -> Result<(DiagonalPreconditioner, Matrix, DiagonalPreconditioner)> {
    let (e, ea) = row_equilibrate(a).map_err(|err| err.at_stage("row stage"))?;
    let (eac, c) = column_equilibrate(&ea).map_err(|err| err.at_stage("column stage"))?;
    Ok((e, eac, c))
}

/// Jacobi scaling `D = diag(A)⁻¹`, returning `(D, D·A)`.
pub fn jacobi_precondition(a: &Matrix) -> Result<(DiagonalPreconditioner, Matrix)> {
    if a.rows() != a.cols() {
        return Err(Error::invalid(format!(
            "Jacobi preconditioner needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut diag = Vec::with_capacity(a.rows());
    for (i, d) in a.diagonal().into_iter().enumerate() {
        if d == 0.0 {
            return Err(Error::ZeroDiagonal { index: i });
        }
        diag.push(1.0 / d);
    }
    let p = DiagonalPreconditioner::new(diag, Side::Left, PreconditionerKind::Jacobi)?;
    let pa = p.apply(a)?;
    Ok((p, pa))
}

/// One Van der Sluis trial: `κ(E·A)` against `κ(P·A)` for the same `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdsTrial {
    pub kappa_ea: f64,
    pub kappa_pa: f64,
}

impl VdsTrial {
    pub fn ratio(&self) -> f64 {
        self.kappa_ea / self.kappa_pa
    }
}

pub fn vds_trial(a: &Matrix, p: &DiagonalPreconditioner) -> Result<VdsTrial> {
    if p.len() != a.rows() {
        return Err(Error::invalid(format!(
            "preconditioner size {} for {} rows",
            p.len(),
            a.rows()
        )));
    }
    if p.diag().iter().any(|d| *d <= 0.0) {
        return Err(Error::invalid("Van der Sluis trials need a positive diagonal"));
    }
    let (_, ea) = row_equilibrate(a)?;
    let pa = scale_rows(a, p.diag())?;
    Ok(VdsTrial {
        kappa_ea: condition_number(&ea, DEFAULT_RANK_TOL)?,
        kappa_pa: condition_number(&pa, DEFAULT_RANK_TOL)?,
    })
}

/// Condition number before and after a preconditioner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditioningReport {
    pub kind: PreconditionerKind,
    pub rows: usize,
    pub cols: usize,
    pub kappa_before: f64,
    pub kappa_after: f64,
}

impl ConditioningReport {
    pub const CSV_HEADER: [&'static str; 6] =
        ["kind", "rows", "cols", "kappa_before", "kappa_after", "seed"];

    pub fn csv_record(&self, seed: u64) -> Vec<String> {
        vec![
            self.kind.as_str().to_string(),
            self.rows.to_string(),
            self.cols.to_string(),
            self.kappa_before.to_string(),
            self.kappa_after.to_string(),
            seed.to_string(),
        ]
    }
}

/// Applies `kind` to `a` and measures both condition numbers.
pub fn conditioning_report(a: &Matrix, kind: PreconditionerKind) -> Result<ConditioningReport> {
    let after = match kind {
        PreconditionerKind::RowEquilibration => row_equilibrate(a)?.1,
        PreconditionerKind::ColumnEquilibration => column_equilibrate(a)?.0,
        PreconditionerKind::RowColumnEquilibration => row_column_equilibrate(a)?.1,
        PreconditionerKind::Jacobi => jacobi_precondition(a)?.1,
        PreconditionerKind::Custom => {
            return Err(Error::invalid("a custom preconditioner needs explicit entries"))
        }
    };
    Ok(ConditioningReport {
        kind,
        rows: a.rows(),
        cols: a.cols(),
        kappa_before: condition_number(a, DEFAULT_RANK_TOL)?,
        kappa_after: condition_number(&after, DEFAULT_RANK_TOL)?,
    })
}

/// Random matrix with standard normal entries whose rows are multiplied by
/// log-uniform factors in `[1e-3, 1e3]`.
pub fn imbalanced_rows(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let mut a = rng::normal_matrix(rng, rows, cols);
    for i in 0..rows {
        let s = rng::log_uniform(rng, 1e-3, 1e3);
        for x in a.row_mut(i) {
            *x *= s;
        }
    }
    a
}

/// Result of testing `κ(E·A) ≤ κ(A)·(1+tol)` on one seeded matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionTrial {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub kappa_a: f64,
    pub kappa_ea: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ReductionSweep {
    pub trials: Vec<ReductionTrial>,
    pub rank_deficient: usize,
    pub violations: Vec<ReductionTrial>,
}

impl ReductionSweep {
    pub fn satisfied_fraction(&self) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        1.0 - self.violations.len() as f64 / self.trials.len() as f64
    }
}

/// Tests whether row equilibration never worsens the condition number over
/// `n_trials` seeded imbalanced-row matrices (shapes cycle square, wide and
/// tall). Trial `i` is reproducible from seed `base_seed + i`.
pub fn reduction_sweep(n_trials: usize, base_seed: u64, max_dim: usize, rel_tol: f64) -> ReductionSweep {
    use rayon::prelude::*;
    let results: Vec<Option<ReductionTrial>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let mut r = rng::stream(seed, 0x5052_4f50);
            let small = r.random_range(2..=max_dim.max(2));
            let large = r.random_range(small..=max_dim.max(small));
            let (rows, cols) = match i % 3 {
                0 => (small, small),
                1 => (small, large),
                _ => (large, small),
            };
            let a = imbalanced_rows(&mut r, rows, cols);
            let kappa_a = condition_number(&a, DEFAULT_RANK_TOL).ok()?;
            let (_, ea) = row_equilibrate(&a).ok()?;
            let kappa_ea = condition_number(&ea, DEFAULT_RANK_TOL).ok()?;
            Some(ReductionTrial {
                seed,
                rows,
                cols,
                kappa_a,
                kappa_ea,
            })
        })
        .collect();
    let mut sweep = ReductionSweep::default();
    for t in results {
        match t {
            None => sweep.rank_deficient += 1,
            Some(t) => {
                if t.kappa_ea > t.kappa_a * (1.0 + rel_tol) {
                    log::info!(
                        "equilibration increased kappa: seed {} ({}x{}) {} -> {}",
                        t.seed,
                        t.rows,
                        t.cols,
                        t.kappa_a,
                        t.kappa_ea
                    );
                    sweep.violations.push(t.clone());
                }
                sweep.trials.push(t);
            }
        }
    }
    sweep
}

/// Regenerates the matrix of a [`reduction_sweep`] trial from its seed.
pub fn reduction_fixture(seed: u64, trial_index: usize, max_dim: usize) -> Matrix {
    let mut r = rng::stream(seed, 0x5052_4f50);
    let small = r.random_range(2..=max_dim.max(2));
    let large = r.random_range(small..=max_dim.max(small));
    let (rows, cols) = match trial_index % 3 {
        0 => (small, small),
        1 => (small, large),
        _ => (large, small),
    };
    imbalanced_rows(&mut r, rows, cols)
}

/// One row of a Van der Sluis sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VdsRecord {
    pub trial: usize,
    pub seed: u64,
    pub kappa_a: f64,
    pub kappa_ea: f64,
    pub kappa_pa: f64,
    pub full_rank: bool,
}

impl VdsRecord {
    pub fn ratio(&self) -> f64 {
        self.kappa_ea / self.kappa_pa
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VdsSummary {
    pub n: usize,
    pub trials: usize,
    pub rank_deficient: usize,
    pub max_ratio: f64,
    /// Fraction with `κ(EA) ≤ κ(PA)·(1+1e-9)`.
    pub unrelaxed_fraction: f64,
    /// Fraction with `κ(EA) ≤ √n·κ(PA)`.
    pub relaxed_fraction: f64,
}

/// Positive diagonal with log-uniform entries in `[1e-3, 1e3]`.
pub fn random_positive_diagonal(rng: &mut impl Rng, n: usize) -> DiagonalPreconditioner {
    let d = (0..n).map(|_| rng::log_uniform(rng, 1e-3, 1e3)).collect();
    DiagonalPreconditioner::new(d, Side::Left, PreconditionerKind::Custom).expect("positive")
}

/// The diagonal scaling that equilibration is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VdsOpponent {
    /// Log-uniform positive diagonal in `[1e-3, 1e3]`.
    #[default]
    RandomDiagonal,
    /// Equilibration itself, the equality case.
    Equilibration,
}

/// Seeded (A, P) pairs: `A` is `n×n` with imbalanced rows, `P` a random
/// positive diagonal. Trial `i` uses seed `base_seed + i`.
pub fn vds_sweep(n_trials: usize, n: usize, base_seed: u64) -> Vec<VdsRecord> {
    vds_sweep_against(n_trials, n, base_seed, VdsOpponent::RandomDiagonal)
}

pub fn vds_sweep_against(n_trials: usize, n: usize, base_seed: u64, opponent: VdsOpponent) -> Vec<VdsRecord> {
    use rayon::prelude::*;
    (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let seed = base_seed.wrapping_add(trial as u64);
            let mut r = rng::stream(seed, 0x5644_5353);
            let a = imbalanced_rows(&mut r, n, n);
            let random = random_positive_diagonal(&mut r, n);
            let p = match opponent {
                VdsOpponent::RandomDiagonal => random,
                VdsOpponent::Equilibration => match row_equilibrate(&a) {
                    Ok((e, _)) => e,
                    Err(_) => random,
                },
            };
            let kappa_a = condition_number(&a, DEFAULT_RANK_TOL).unwrap_or(f64::INFINITY);
            match vds_trial(&a, &p) {
                Ok(t) => VdsRecord {
                    trial,
                    seed,
                    kappa_a,
                    kappa_ea: t.kappa_ea,
                    kappa_pa: t.kappa_pa,
                    full_rank: true,
                },
                Err(_) => VdsRecord {
                    trial,
                    seed,
                    kappa_a,
                    kappa_ea: f64::NAN,
                    kappa_pa: f64::NAN,
                    full_rank: false,
                },
            }
        })
        .collect()
}

pub fn summarize_vds(records: &[VdsRecord], n: usize) -> VdsSummary {
    let full: Vec<&VdsRecord> = records.iter().filter(|r| r.full_rank).collect();
    let bound = (n as f64).sqrt();
    let count = |pred: &dyn Fn(&VdsRecord) -> bool| full.iter().filter(|r| pred(r)).count();
    let frac = |c: usize| if full.is_empty() { 0.0 } else { c as f64 / full.len() as f64 };
    VdsSummary {
        n,
        trials: records.len(),
        rank_deficient: records.len() - full.len(),
        max_ratio: full.iter().map(|r| r.ratio()).fold(f64::NEG_INFINITY, f64::max),
        unrelaxed_fraction: frac(count(&|r| r.kappa_ea <= r.kappa_pa * (1.0 + 1e-9))),
        relaxed_fraction: frac(count(&|r| r.kappa_ea <= bound * r.kappa_pa)),
    }
}

/// Unit-norm check used by tests and the net module: max |‖row‖₂ − 1|.
pub fn max_row_norm_defect(a: &Matrix) -> f64 {
    row_norms2(a).into_iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
}
