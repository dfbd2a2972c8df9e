//! Quadratic model `L(θ) = ½θᵀAθ − bᵀθ`: gradient descent, its mode
//! decomposition in the right-singular basis, the learning-rate stability
//! bound, and the diagonally preconditioned objective `θᵀPAθ − (Pb)ᵀθ`.

use std::io::Write;

use crate::densela::{
    self, asymmetry, condition_number, norm2, svd, Matrix, SvdResult, DEFAULT_RANK_TOL,
};
use crate::error::{Error, Result};
use crate::precond::DiagonalPreconditioner;

/// Divergence threshold on ‖θ‖₂.
pub const DIVERGENCE_NORM: f64 = 1e12;

const MAX_ITERS: usize = 1_000_000;

/// Symmetric full-rank quadratic objective.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    a: Matrix,
    b: Vec<f64>,
    svd: SvdResult,
    /// Signed eigenvalues aligned with the singular triplets.
    curvature: Vec<f64>,
    minimizer: Vec<f64>,
}

impl QuadraticProblem {
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::invalid(format!("A must be square, got {}x{}", n, a.cols())));
        }
        if b.len() != n {
            return Err(Error::invalid(format!("b has length {}, expected {n}", b.len())));
        }
        if let Some(index) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let asym = asymmetry(&a);
        if asym > 1e-12 {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let svd = svd(&a)?;
        densela::kappa_from_sigma(&svd.sigma, DEFAULT_RANK_TOL)?;
        // For symmetric A each right singular vector is an eigenvector and
        // the eigenvalue sign is the sign of uᵢ·vᵢ.
        let curvature = (0..n)
            .map(|i| {
                let ui = svd.u.column(i);
                let s = densela::dot(&ui, svd.right_vector(i));
                if s < 0.0 {
                    -svd.sigma[i]
                } else {
                    svd.sigma[i]
                }
            })
            .collect();
        let minimizer = match densela::solve_spd(&a, &b) {
            Ok(x) => x,
            Err(Error::NotPositiveDefinite { .. }) => densela::solve_svd(&a, &b, DEFAULT_RANK_TOL)?,
            Err(e) => return Err(e),
        };
        Ok(Self {
            a,
            b,
            svd,
            curvature,
            minimizer,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// The Hessian, which is `A` itself.
    pub fn hessian(&self) -> &Matrix {
        &self.a
    }

    pub fn svd(&self) -> &SvdResult {
        &self.svd
    }

    pub fn sigma(&self) -> &[f64] {
        &self.svd.sigma
    }

    /// Eigenvalues of `A` in singular-value order (equal to `sigma` for SPD).
    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn kappa(&self) -> f64 {
        self.sigma()[0] / self.sigma()[self.dim() - 1]
    }

    /// `θ* = A⁻¹b`.
    pub fn minimizer(&self) -> &[f64] {
        &self.minimizer
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::invalid(format!(
                "theta has length {}, expected {}",
                theta.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        self.check_len(theta)?;
        let at = self.a.mul_vec(theta)?;
        Ok(0.5 * densela::dot(theta, &at) - densela::dot(&self.b, theta))
    }

    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_len(theta)?;
        let mut g = self.a.mul_vec(theta)?;
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi -= bi;
        }
        Ok(g)
    }

    /// `x = Vᵀ(θ − θ*)`.
    pub fn mode_coefficients(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_len(theta)?;
        let diff: Vec<f64> = theta.iter().zip(&self.minimizer).map(|(t, s)| t - s).collect();
        self.svd.vt.mul_vec(&diff)
    }
}

/// Per-iteration record of a gradient-descent run.
#[derive(Debug, Clone)]
pub struct GdTrace {
    pub iterates: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
    pub mode_coeffs: Vec<Vec<f64>>,
    pub eta: f64,
    pub sigma: Vec<f64>,
    pub kappa: f64,
    pub diverged: bool,
}

impl GdTrace {
    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    /// First iteration whose loss gap `L(θᵗ) − L*` is at most
    /// `tol · max(L(θ⁰) − L*, tiny)`.
    pub fn iterations_to_tolerance(&self, min_loss: f64, tol: f64) -> Option<usize> {
        let gap0 = (self.losses[0] - min_loss).max(f64::MIN_POSITIVE);
        self.losses
            .iter()
            .position(|l| (l - min_loss) <= tol * gap0)
    }

    /// CSV with a `#` metadata line: `iter,loss,theta_norm,mode_0,...`.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let sigma: Vec<String> = self.sigma.iter().map(|s| s.to_string()).collect();
        writeln!(
            out,
            "# eta={} sigma=[{}] kappa={} diverged={}",
            self.eta,
            sigma.join(" "),
            self.kappa,
            self.diverged
        )
        .map_err(|e| Error::io("<gd trace>", e))?;
        let mut w = csv::Writer::from_writer(out);
        let n = self.sigma.len();
        let mut header = vec!["iter".to_string(), "loss".into(), "theta_norm".into()];
        header.extend((0..n).map(|i| format!("mode_{i}")));
        w.write_record(&header)?;
        for (t, ((theta, loss), modes)) in self
            .iterates
            .iter()
            .zip(&self.losses)
            .zip(&self.mode_coeffs)
            .enumerate()
        {
            let mut rec = vec![t.to_string(), loss.to_string(), norm2(theta).to_string()];
            rec.extend(modes.iter().map(|m| m.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<gd trace>", e))?;
        Ok(())
    }
}

/// Plain gradient descent `θᵗ⁺¹ = θᵗ − η∇L(θᵗ)`.
///
/// Stops early with `diverged = true` once ‖θ‖ exceeds [`DIVERGENCE_NORM`]
/// or an iterate stops being finite.
pub fn run_gd(p: &QuadraticProblem, theta0: &[f64], eta: f64, iters: usize) -> Result<GdTrace> {
    p.check_len(theta0)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("learning rate {eta} must be positive")));
    }
    if iters == 0 || iters > MAX_ITERS {
        return Err(Error::invalid(format!("iters {iters} outside 1..={MAX_ITERS}")));
    }
    let mut theta = theta0.to_vec();
    let mut trace = GdTrace {
        iterates: vec![theta.clone()],
        losses: vec![p.loss(&theta)?],
        mode_coeffs: vec![p.mode_coefficients(&theta)?],
        eta,
        sigma: p.sigma().to_vec(),
        kappa: p.kappa(),
        diverged: false,
    };
    for _ in 0..iters {
        let g = p.gradient(&theta)?;
        for (t, gi) in theta.iter_mut().zip(&g) {
            *t -= eta * gi;
        }
        let norm = norm2(&theta);
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            trace.diverged = true;
            break;
        }
        trace.losses.push(p.loss(&theta)?);
        trace.mode_coeffs.push(p.mode_coefficients(&theta)?);
        trace.iterates.push(theta.clone());
    }
    Ok(trace)
}

/// Closed-form mode coefficients `xᵢ⁰(1 − ηλᵢ)ᵗ`.
pub fn predicted_modes(p: &QuadraticProblem, theta0: &[f64], eta: f64, t: u32) -> Result<Vec<f64>> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("learning rate {eta} must be finite and >= 0")));
    }
    let x0 = p.mode_coefficients(theta0)?;
    let t = i32::try_from(t).map_err(|_| Error::invalid("t too large"))?;
    Ok(x0
        .iter()
        .zip(p.curvature())
        .map(|(x, lam)| x * (1.0 - eta * lam).powi(t))
        .collect())
}

/// `2/σ₁(A)`.
pub fn max_stable_lr(p: &QuadraticProblem) -> f64 {
    2.0 / p.sigma()[0]
}

/// `L_P(θ) = θᵀ(PA)θ − (Pb)ᵀθ`.
///
/// Because the printed form has no ½, this is the quadratic with Hessian
/// `S = PA + (PA)ᵀ` and linear term `Pb`; it is stored as such so that every
/// gradient-descent tool above applies unchanged.
#[derive(Debug, Clone)]
pub struct PreconditionedProblem {
    pa: Matrix,
    pb: Vec<f64>,
    inner: QuadraticProblem,
    kappa_a: f64,
    kappa_pa: f64,
}

impl PreconditionedProblem {
    pub fn pa(&self) -> &Matrix {
        &self.pa
    }

    pub fn pb(&self) -> &[f64] {
        &self.pb
    }

    /// The equivalent `½θᵀSθ − (Pb)ᵀθ` problem.
    pub fn as_quadratic(&self) -> &QuadraticProblem {
        &self.inner
    }

    pub fn kappa_a(&self) -> f64 {
        self.kappa_a
    }

    pub fn kappa_pa(&self) -> f64 {
        self.kappa_pa
    }

    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        self.inner.check_len(theta)?;
        let pat = self.pa.mul_vec(theta)?;
        Ok(densela::dot(theta, &pat) - densela::dot(&self.pb, theta))
    }

    /// `(PA + (PA)ᵀ)θ − Pb`.
    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.inner.gradient(theta)
    }
}

pub fn preconditioned_problem(
    p: &QuadraticProblem,
    pc: &DiagonalPreconditioner,
) -> Result<PreconditionedProblem> {
    if pc.len() != p.dim() {
        return Err(Error::invalid(format!(
            "preconditioner size {} for a {}-dimensional problem",
            pc.len(),
            p.dim()
        )));
    }
    let pa = crate::precond::scale_rows(&p.a, pc.diag())?;
    let pb = pc.apply_vec(&p.b)?;
    let s = pa.add(&densela::transpose(&pa))?;
    let kappa_pa = condition_number(&pa, DEFAULT_RANK_TOL)?;
    let inner = QuadraticProblem::new(s, pb.clone())?;
    Ok(PreconditionedProblem {
        pa,
        pb,
        inner,
        kappa_a: p.kappa(),
        kappa_pa,
    })
}
