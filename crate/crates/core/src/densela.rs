//! Dense row-major matrices, one-sided Jacobi SVD, condition numbers and a
//! Cholesky solver.

use std::fmt;

use crate::error::{Error, Result};

/// Largest dimension accepted by [`Matrix`] constructors.
pub const MAX_DIM: usize = 4096;

/// Default relative rank tolerance for [`condition_number`].
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

const SVD_MAX_SWEEPS: usize = 60;

/// Dense row-major `f64` matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut m = Self::zeros(n, n)?;
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        if let Some(index) = diag.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(m)
    }

    /// Builds a matrix from row slices; rejects ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != c {
                return Err(Error::invalid(format!(
                    "ragged rows: row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Skips validation; callers guarantee shape and finiteness.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix::from_raw(self.rows, self.cols, self.data.iter().map(|v| v * c).collect())
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::invalid(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Matrix::from_raw(self.rows, self.cols, data))
    }

    /// `self · v` for a vector `v`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::invalid(format!(
                "vector length {} does not match {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `selfᵀ · v` for a vector `v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::invalid(format!(
                "vector length {} does not match {} rows",
                v.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            axpy(vi, self.row(i), &mut out);
        }
        Ok(out)
    }

    /// Parses the fixture text format: a `rows cols` header followed by one
    /// whitespace-separated row per line.
    pub fn parse_text(text: &str) -> Result<Matrix> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hline,
                message: format!("bad header: {e}"),
            })?;
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: hline,
                message: "header must be `rows cols`".into(),
            });
        }
        let (rows, cols) = (dims[0], dims[1]);
        check_dims(rows, cols)?;
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for (line, content) in lines {
            if seen == rows {
                return Err(Error::Parse {
                    line,
                    message: format!("more than {rows} rows"),
                });
            }
            let before = data.len();
            for tok in content.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad number `{tok}`"),
                })?;
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(Error::Parse {
                    line,
                    message: format!("ragged row: {} entries, expected {cols}", data.len() - before),
                });
            }
            seen += 1;
        }
        if seen != rows {
            return Err(Error::Parse {
                line: hline,
                message: format!("expected {rows} rows, found {seen}"),
            });
        }
        Matrix::new(rows, cols, data)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!("dimension zero ({rows}x{cols})")));
    }
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::invalid(format!(
            "{rows}x{cols} exceeds the {MAX_DIM}x{MAX_DIM} cap"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    // scaled to avoid overflow/underflow on extreme rows
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::invalid(format!(
            "matmul: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = vec![0.0; a.rows * b.cols];
    for i in 0..a.rows {
        let orow = &mut out[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik != 0.0 {
                axpy(aik, b.row(k), orow);
            }
        }
    }
    Ok(Matrix::from_raw(a.rows, b.cols, out))
}

/// `aᵀ · b` without materialising the transpose.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows != b.rows {
        return Err(Error::invalid(format!(
            "matmul_tn: ({}x{})ᵀ times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = vec![0.0; a.cols * b.cols];
    for k in 0..a.rows {
        let brow = b.row(k);
        for (i, &aki) in a.row(k).iter().enumerate() {
            if aki != 0.0 {
                axpy(aki, brow, &mut out[i * b.cols..(i + 1) * b.cols]);
            }
        }
    }
    Ok(Matrix::from_raw(a.cols, b.cols, out))
}

/// `a · bᵀ` without materialising the transpose.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.cols {
        return Err(Error::invalid(format!(
            "matmul_nt: {}x{} times ({}x{})ᵀ",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Vec::with_capacity(a.rows * b.rows);
    for i in 0..a.rows {
        let arow = a.row(i);
        for j in 0..b.rows {
            out.push(dot(arow, b.row(j)));
        }
    }
    Ok(Matrix::from_raw(a.rows, b.rows, out))
}

pub fn transpose(a: &Matrix) -> Matrix {
    let mut out = vec![0.0; a.rows * a.cols];
    for i in 0..a.rows {
        for j in 0..a.cols {
            out[j * a.rows + i] = a.data[i * a.cols + j];
        }
    }
    Matrix::from_raw(a.cols, a.rows, out)
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    norm2(&a.data)
}

pub fn row_norms2(a: &Matrix) -> Vec<f64> {
    (0..a.rows).map(|i| norm2(a.row(i))).collect()
}

pub fn col_norms2(a: &Matrix) -> Vec<f64> {
    (0..a.cols).map(|j| norm2(&a.column(j))).collect()
}

/// Relative asymmetry `‖A − Aᵀ‖_F / ‖A‖_F` (0 for the zero matrix).
pub fn asymmetry(a: &Matrix) -> f64 {
    if a.rows != a.cols {
        return f64::INFINITY;
    }
    let norm = frobenius_norm(a);
    if norm == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..a.rows {
        for j in (i + 1)..a.cols {
            let d = a.get(i, j) - a.get(j, i);
            acc += 2.0 * d * d;
        }
    }
    acc.sqrt() / norm
}

/// Thin singular value decomposition `A = U · diag(sigma) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// n×k, orthonormal columns.
    pub u: Matrix,
    /// k values, descending, non-negative.
    pub sigma: Vec<f64>,
    /// k×m, orthonormal rows.
    pub vt: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let k = self.sigma.len();
        let mut us = self.u.clone();
        for i in 0..us.rows {
            for j in 0..k {
                let v = us.get(i, j) * self.sigma[j];
                us.set(i, j, v);
            }
        }
        matmul(&us, &self.vt).expect("conformable by construction")
    }

    /// Column `i` of V.
    pub fn right_vector(&self, i: usize) -> &[f64] {
        self.vt.row(i)
    }
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Columns of a working copy are rotated pairwise until mutually orthogonal
/// to working precision; the column norms are then the singular values.
/// Right singular vectors are sign-normalised so that their first nonzero
/// component is positive.
pub fn svd(a: &Matrix) -> Result<SvdResult> {
    check_dims(a.rows, a.cols)?;
    if !a.is_finite() {
        return Err(Error::invalid("svd input has non-finite entries"));
    }
    if a.rows >= a.cols {
        jacobi_svd_tall(a)
    } else {
        let t = jacobi_svd_tall(&transpose(a))?;
        // Aᵀ = U Σ Vᵀ  ⇒  A = V Σ Uᵀ
        let mut out = SvdResult {
            u: transpose(&t.vt),
            sigma: t.sigma,
            vt: transpose(&t.u),
        };
        fix_signs(&mut out);
        Ok(out)
    }
}

fn jacobi_svd_tall(a: &Matrix) -> Result<SvdResult> {
    let (n, m) = a.shape();
    // Work on columns stored contiguously: w[j] is column j of A.
    let mut w: Vec<Vec<f64>> = (0..m).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();

    let tol = f64::EPSILON;
    let mut converged = m < 2;
    for _sweep in 0..SVD_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..m - 1 {
            for j in (i + 1)..m {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                let gamma = dot(&w[i], &w[j]);
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = w.split_at_mut(j);
                rotate(&mut lo[i], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(j);
                rotate(&mut lo[i], &mut hi[0], c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        log::warn!("one-sided Jacobi SVD hit the {SVD_MAX_SWEEPS}-sweep cap on a {n}x{m} matrix");
    }

    let mut sigma: Vec<f64> = w.iter().map(|col| norm2(col)).collect();
    let mut order: Vec<usize> = (0..m).collect();
    // stable sort keeps ties deterministic
    order.sort_by(|&p, &q| sigma[q].partial_cmp(&sigma[p]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted_sigma: Vec<f64> = order.iter().map(|&p| sigma[p]).collect();
    let smax = sorted_sigma.first().copied().unwrap_or(0.0);

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut zero_slots = Vec::new();
    for (slot, &p) in order.iter().enumerate() {
        let s = sigma[p];
        if s > 0.0 && s > smax * f64::EPSILON * (n as f64) {
            u_cols.push(w[p].iter().map(|x| x / s).collect());
        } else {
            u_cols.push(vec![0.0; n]);
            zero_slots.push(slot);
        }
    }
    // Complete U for (numerically) zero singular values with Gram–Schmidt
    // over the canonical basis.
    for slot in zero_slots {
        let mut filled = false;
        for e in 0..n {
            let mut cand = vec![0.0; n];
            cand[e] = 1.0;
            for _ in 0..2 {
                for (other, col) in u_cols.iter().enumerate() {
                    if other == slot {
                        continue;
                    }
                    let proj = dot(col, &cand);
                    axpy(-proj, col, &mut cand);
                }
            }
            let nrm = norm2(&cand);
            if nrm > 0.5 {
                u_cols[slot] = cand.into_iter().map(|x| x / nrm).collect();
                filled = true;
                break;
            }
        }
        debug_assert!(filled);
    }
    sigma = sorted_sigma;

    let mut u = Matrix::from_raw(n, m, vec![0.0; n * m]);
    for (j, col) in u_cols.iter().enumerate() {
        for i in 0..n {
            u.set(i, j, col[i]);
        }
    }
    let mut vt_data = Vec::with_capacity(m * m);
    for &p in &order {
        vt_data.extend_from_slice(&v[p]);
    }
    let mut out = SvdResult {
        u,
        sigma,
        vt: Matrix::from_raw(m, m, vt_data),
    };
    fix_signs(&mut out);
    Ok(out)
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let a = *xi;
        let b = *yi;
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

fn fix_signs(out: &mut SvdResult) {
    let k = out.sigma.len();
    for i in 0..k {
        let first = out.vt.row(i).iter().copied().find(|x| *x != 0.0).unwrap_or(1.0);
        if first < 0.0 {
            for x in out.vt.row_mut(i) {
                *x = -*x;
            }
            for r in 0..out.u.rows {
                let v = -out.u.get(r, i);
                out.u.set(r, i, v);
            }
        }
    }
}

/// `σ₁/σ_k` of a full-rank matrix.
///
/// Fails with [`Error::RankDeficient`] when `σ_k ≤ rank_tol · σ₁`.
pub fn condition_number(a: &Matrix, rank_tol: f64) -> Result<f64> {
    let s = svd(a)?;
    kappa_from_sigma(&s.sigma, rank_tol)
}

pub(crate) fn kappa_from_sigma(sigma: &[f64], rank_tol: f64) -> Result<f64> {
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::invalid(format!("rank_tol {rank_tol} outside (0, 1)")));
    }
    let smax = sigma[0];
    let smin = *sigma.last().expect("k >= 1");
    if smax == 0.0 {
        return Err(Error::invalid("condition number of the zero matrix"));
    }
    if smin <= rank_tol * smax {
        return Err(Error::RankDeficient {
            sigma_max: smax,
            sigma_min: smin,
        });
    }
    Ok(smax / smin)
}

/// Solves `A x = b` for symmetric positive definite `A` via Cholesky.
pub fn solve_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::invalid("solve_spd needs a square matrix"));
    }
    if b.len() != n {
        return Err(Error::invalid(format!("rhs length {} for {n}x{n} system", b.len())));
    }
    let asym = asymmetry(a);
    if asym > 1e-12 {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    #[cfg(debug_assertions)]
    {
        let r = a.mul_vec(&x)?;
        let res: Vec<f64> = r.iter().zip(b).map(|(p, q)| p - q).collect();
        // backward-stable bound: residual scales with ‖A‖·‖x‖
        let tol = 1e-9 * norm2(b).max(1.0).max(frobenius_norm(a) * norm2(&x));
        debug_assert!(norm2(&res) <= tol, "solve_spd residual {} > {}", norm2(&res), tol);
    }
    Ok(x)
}

/// Solves a square nonsingular system through its SVD.
pub fn solve_svd(a: &Matrix, b: &[f64], rank_tol: f64) -> Result<Vec<f64>> {
    if a.rows != a.cols || b.len() != a.rows {
        return Err(Error::invalid("solve_svd needs a square system"));
    }
    let s = svd(a)?;
    kappa_from_sigma(&s.sigma, rank_tol)?;
    let utb = s.u.tr_mul_vec(b)?;
    let scaled: Vec<f64> = utb.iter().zip(&s.sigma).map(|(x, sg)| x / sg).collect();
    s.vt.tr_mul_vec(&scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn orthonormality_defect(q: &Matrix) -> f64 {
        let g = matmul_tn(q, q).unwrap();
        frobenius_norm(&g.sub(&Matrix::identity(g.rows()).unwrap()).unwrap())
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(Matrix::new(2, 2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(Matrix::zeros(0, 3).is_err());
        assert!(Matrix::zeros(MAX_DIM + 1, 1).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let s = svd(&Matrix::identity(3).unwrap()).unwrap();
        assert_eq!(s.sigma, vec![1.0, 1.0, 1.0]);
        let s = svd(&m(&[&[3.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(s.sigma, vec![3.0, 1.0]);
        let s = svd(&m(&[&[1.0, 0.0], &[0.0, 3.0]])).unwrap();
        assert_eq!(s.sigma, vec![3.0, 1.0]);
    }

    // σ² are the roots of λ² − tr(AᵀA)λ + det(AᵀA).
    fn sigma_2x2_oracle(a: &Matrix) -> (f64, f64) {
        let (p, q, r, s) = (a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1));
        let g11 = p * p + r * r;
        let g22 = q * q + s * s;
        let g12 = p * q + r * s;
        let tr = g11 + g22;
        let det = g11 * g22 - g12 * g12;
        let disc = (tr * tr / 4.0 - det).sqrt();
        ((tr / 2.0 + disc).sqrt(), (tr / 2.0 - disc).max(0.0).sqrt())
    }

    #[test]
    fn svd_2x2_matches_characteristic_polynomial() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let (s1, s2) = sigma_2x2_oracle(&a);
        assert_relative_eq!(s1, 5.464985704219043, max_relative = 1e-14);
        assert_relative_eq!(s2, 0.365966190626258, max_relative = 1e-12);
        let s = svd(&a).unwrap();
        assert_relative_eq!(s.sigma[0], s1, max_relative = 1e-13);
        assert_relative_eq!(s.sigma[1], s2, max_relative = 1e-12);
    }

    #[test]
    fn svd_reconstructs_and_is_orthonormal_for_wide_tall_and_singular() {
        let cases = [
            m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]),
            m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]),
            m(&[&[1.0, 2.0], &[2.0, 4.0]]),
            m(&[&[0.0, 0.0], &[0.0, 0.0]]),
            m(&[&[7.0]]),
        ];
        for a in &cases {
            let s = svd(a).unwrap();
            let k = s.sigma.len();
            assert_eq!(k, a.rows().min(a.cols()));
            let err = frobenius_norm(&s.reconstruct().sub(a).unwrap());
            assert!(err <= 1e-10 * frobenius_norm(a).max(1.0), "{a:?}: {err}");
            assert!(orthonormality_defect(&s.u) <= 1e-10 * k as f64);
            assert!(orthonormality_defect(&transpose(&s.vt)) <= 1e-10 * k as f64);
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_is_deterministic_and_sign_normalised() {
        let a = m(&[&[2.0, -1.0, 0.5], &[-1.0, 3.0, 1.0], &[0.5, 1.0, 4.0]]);
        let s1 = svd(&a).unwrap();
        let s2 = svd(&a).unwrap();
        assert_eq!(s1.sigma, s2.sigma);
        assert_eq!(s1.vt, s2.vt);
        for i in 0..3 {
            let first = s1.vt.row(i).iter().find(|x| **x != 0.0).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn condition_number_examples() {
        assert_eq!(condition_number(&Matrix::identity(5).unwrap(), DEFAULT_RANK_TOL).unwrap(), 1.0);
        let d = Matrix::from_diag(&[100.0, 1.0]).unwrap();
        assert_eq!(condition_number(&d, DEFAULT_RANK_TOL).unwrap(), 100.0);
        // AᵀA = [[9,12],[12,41]] has eigenvalues 45 and 5.
        let a = m(&[&[3.0, 4.0], &[0.0, 5.0]]);
        let (s1, s2) = sigma_2x2_oracle(&a);
        assert_relative_eq!(s1 / s2, 3.0, max_relative = 1e-14);
        assert_relative_eq!(condition_number(&a, DEFAULT_RANK_TOL).unwrap(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn condition_number_rejects_rank_deficient_and_bad_tol() {
        let a = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        match condition_number(&a, DEFAULT_RANK_TOL) {
            Err(Error::RankDeficient { sigma_max, sigma_min }) => {
                assert!(sigma_max > 4.0);
                assert!(sigma_min <= 1e-12 * sigma_max);
            }
            other => panic!("expected rank-deficient, got {other:?}"),
        }
        assert!(condition_number(&Matrix::identity(2).unwrap(), 0.0).is_err());
        assert!(condition_number(&Matrix::identity(2).unwrap(), 1.0).is_err());
        assert!(condition_number(&Matrix::zeros(2, 2).unwrap(), 1e-12).is_err());
    }

    #[test]
    fn plumbing_examples() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(matmul(&Matrix::identity(2).unwrap(), &a).unwrap(), a);
        let b = m(&[&[3.0, 4.0], &[0.0, 5.0]]);
        assert_eq!(row_norms2(&b), vec![5.0, 5.0]);
        let c = col_norms2(&b);
        assert_eq!(c[0], 3.0);
        assert_relative_eq!(c[1], 41f64.sqrt(), max_relative = 1e-15);
        assert!(matmul(&a, &m(&[&[1.0, 2.0, 3.0]])).is_err());
        assert_eq!(transpose(&transpose(&a)), a);
        assert_eq!(matmul_tn(&a, &b).unwrap(), matmul(&transpose(&a), &b).unwrap());
        assert_eq!(matmul_nt(&a, &b).unwrap(), matmul(&a, &transpose(&b)).unwrap());
        assert_relative_eq!(frobenius_norm(&a), 30f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn solve_spd_examples() {
        let x = solve_spd(&Matrix::identity(3).unwrap(), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
        let x = solve_spd(&Matrix::from_diag(&[2.0, 4.0]).unwrap(), &[2.0, 8.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(x[1], 2.0, max_relative = 1e-15);
        let x = solve_spd(&m(&[&[4.0, 1.0], &[1.0, 3.0]]), &[1.0, 2.0]).unwrap();
        assert_relative_eq!(x[0], 1.0 / 11.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], 7.0 / 11.0, max_relative = 1e-14);
    }

    #[test]
    fn solve_spd_names_failed_check() {
        assert!(matches!(
            solve_spd(&m(&[&[1.0, 2.0], &[0.0, 1.0]]), &[1.0, 1.0]),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            solve_spd(&m(&[&[1.0, 2.0], &[2.0, 1.0]]), &[1.0, 1.0]),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn solve_svd_handles_indefinite_symmetric() {
        let a = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let x = solve_svd(&a, &[3.0, 3.0], DEFAULT_RANK_TOL).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-13);
        assert_relative_eq!(x[1], 1.0, max_relative = 1e-13);
    }

    #[test]
    fn text_format_round_trip_and_ragged_rejection() {
        let a = m(&[&[1.5, -2e-3], &[3.25e10, 4.0]]);
        let back = Matrix::parse_text(&a.to_text()).unwrap();
        assert_eq!(back, a);
        let parsed = Matrix::parse_text("2 2\n1 2\n3.0e0 4\n").unwrap();
        assert_eq!(parsed, m(&[&[1.0, 2.0], &[3.0, 4.0]]));
        assert!(Matrix::parse_text("2 2\n1 2\n3\n").is_err());
        assert!(Matrix::parse_text("2 2\n1 2\n").is_err());
        assert!(Matrix::parse_text("1 2\n1 2\n3 4\n").is_err());
        assert!(Matrix::parse_text("1 x\n1\n").is_err());
    }
}
