//! Row-group weight transforms and their vector-Jacobian products.
//!
//! Every transform acts independently on each row of a matrix; callers that
//! need column groups transpose around the call.

use crate::densela::{dot, norm2, transpose, Matrix};

/// Epsilon inside the weight-standardization square root.
pub const WS_EPS: f64 = 1e-5;

/// Row norms below this are clamped when equilibrating or normalizing.
pub const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

fn to_rows(m: &Matrix, axis: Axis) -> Matrix {
    match axis {
        Axis::Rows => m.clone(),
        Axis::Cols => transpose(m),
    }
}

fn from_rows(m: Matrix, axis: Axis) -> Matrix {
    match axis {
        Axis::Rows => m,
        Axis::Cols => transpose(&m),
    }
}

/// Per-group standardization `(w − mean)/√(var + ε)` (biased variance).
#[derive(Debug, Clone)]
pub struct StandardizeCache {
    pub inv_std: Vec<f64>,
    /// Standardized output in row-group orientation.
    y: Matrix,
}

pub fn standardize(w: &Matrix, axis: Axis) -> (Matrix, StandardizeCache) {
    let mut y = to_rows(w, axis);
    let m = y.cols() as f64;
    let mut inv_std = Vec::with_capacity(y.rows());
    for i in 0..y.rows() {
        let row = y.row_mut(i);
        let mean = row.iter().sum::<f64>() / m;
        let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
        let is = 1.0 / (var + WS_EPS).sqrt();
        for x in row.iter_mut() {
            *x = (*x - mean) * is;
        }
        inv_std.push(is);
    }
    let out = from_rows(y.clone(), axis);
    (out, StandardizeCache { inv_std, y })
}

pub fn standardize_backward(dy: &Matrix, cache: &StandardizeCache, axis: Axis) -> Matrix {
    let mut d = to_rows(dy, axis);
    let m = d.cols() as f64;
    for i in 0..d.rows() {
        let yrow = cache.y.row(i);
        let drow = d.row_mut(i);
        let mean_d = drow.iter().sum::<f64>() / m;
        let mean_dy = dot(drow, yrow) / m;
        let is = cache.inv_std[i];
        for (dx, y) in drow.iter_mut().zip(yrow) {
            *dx = is * (*dx - mean_d - y * mean_dy);
        }
    }
    from_rows(d, axis)
}

/// `g_i · v_i/‖v_i‖` per group.
#[derive(Debug, Clone)]
pub struct NormalizeCache {
    norms: Vec<f64>,
    /// `v_i/‖v_i‖` in row-group orientation.
    unit: Matrix,
}

pub fn normalize_with_gain(v: &Matrix, gain: &[f64], axis: Axis) -> (Matrix, NormalizeCache) {
    let (unit, norms) = unit_rows(&to_rows(v, axis));
    let mut y = unit.clone();
    for (i, &g) in gain.iter().enumerate() {
        for x in y.row_mut(i) {
            *x *= g;
        }
    }
    (from_rows(y, axis), NormalizeCache { norms, unit })
}

/// Returns `(dv, dgain)`.
pub fn normalize_with_gain_backward(
    dy: &Matrix,
    gain: &[f64],
    cache: &NormalizeCache,
    axis: Axis,
) -> (Matrix, Vec<f64>) {
    let mut d = to_rows(dy, axis);
    let mut dgain = Vec::with_capacity(d.rows());
    for i in 0..d.rows() {
        let u = cache.unit.row(i);
        let n = cache.norms[i];
        let drow = d.row_mut(i);
        let radial = dot(drow, u);
        dgain.push(radial);
        let scale = gain[i] / n.max(NORM_FLOOR);
        if n >= NORM_FLOOR {
            for (dx, ui) in drow.iter_mut().zip(u) {
                *dx = scale * (*dx - radial * ui);
            }
        } else {
            for dx in drow.iter_mut() {
                *dx *= scale;
            }
        }
    }
    (from_rows(d, axis), dgain)
}

/// Rows scaled to unit 2-norm, norms clamped at [`NORM_FLOOR`]; returns the
/// unclamped norms too.
pub fn unit_rows(w: &Matrix) -> (Matrix, Vec<f64>) {
    let mut out = w.clone();
    let mut norms = Vec::with_capacity(w.rows());
    for i in 0..w.rows() {
        let n = norm2(w.row(i));
        let inv = 1.0 / n.max(NORM_FLOOR);
        for x in out.row_mut(i) {
            *x *= inv;
        }
        norms.push(n);
    }
    (out, norms)
}

/// Jacobian-transpose of [`unit_rows`]: `(I − ŵŵᵀ)/‖w‖ · dŵ` per row.
pub fn unit_rows_backward(dy: &Matrix, unit: &Matrix, norms: &[f64]) -> Matrix {
    let mut d = dy.clone();
    for (i, &n) in norms.iter().enumerate() {
        let u = unit.row(i);
        let drow = d.row_mut(i);
        if n >= NORM_FLOOR {
            let radial = dot(drow, u);
            for (dx, ui) in drow.iter_mut().zip(u) {
                *dx = (*dx - radial * ui) / n;
            }
        } else {
            for dx in drow.iter_mut() {
                *dx /= NORM_FLOOR;
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn fd_vjp(f: impl Fn(&Matrix) -> Matrix, w: &Matrix, dy: &Matrix) -> Matrix {
        let h = 1e-6;
        Matrix::from_fn(w.rows(), w.cols(), |i, j| {
            let mut p = w.clone();
            let mut m = w.clone();
            p.set(i, j, w.get(i, j) + h);
            m.set(i, j, w.get(i, j) - h);
            let fp = f(&p);
            let fm = f(&m);
            fp.as_slice()
                .iter()
                .zip(fm.as_slice())
                .zip(dy.as_slice())
                .map(|((a, b), d)| (a - b) / (2.0 * h) * d)
                .sum()
        })
        .unwrap()
    }

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn vjps_match_finite_differences() {
        let mut r = rng::stream(1, 2);
        let w = rng::normal_matrix(&mut r, 4, 5);
        let dy = rng::normal_matrix(&mut r, 4, 5);
        for axis in [Axis::Rows, Axis::Cols] {
            let (_, c) = standardize(&w, axis);
            let an = standardize_backward(&dy, &c, axis);
            let fd = fd_vjp(|m| standardize(m, axis).0, &w, &dy);
            assert!(max_abs_diff(&an, &fd) < 1e-7, "standardize {axis:?}");

            let groups = if axis == Axis::Rows { 4 } else { 5 };
            let gain: Vec<f64> = (0..groups).map(|i| 0.5 + i as f64).collect();
            let (_, c) = normalize_with_gain(&w, &gain, axis);
            let (an, _) = normalize_with_gain_backward(&dy, &gain, &c, axis);
            let fd = fd_vjp(|m| normalize_with_gain(m, &gain, axis).0, &w, &dy);
            assert!(max_abs_diff(&an, &fd) < 1e-7, "normalize {axis:?}");
        }
        let (u, n) = unit_rows(&w);
        let an = unit_rows_backward(&dy, &u, &n);
        let fd = fd_vjp(|m| unit_rows(m).0, &w, &dy);
        assert!(max_abs_diff(&an, &fd) < 1e-7);
    }

    #[test]
    fn radial_component_is_killed() {
        let w = Matrix::from_rows(&[[3.0, 4.0]]).unwrap();
        let (u, n) = unit_rows(&w);
        let d = unit_rows_backward(&u, &u, &n);
        assert!(d.as_slice().iter().all(|x| x.abs() < 1e-16));
    }

    #[test]
    fn standardize_is_nearly_idempotent() {
        let mut r = rng::stream(4, 4);
        let w = rng::normal_matrix(&mut r, 6, 3);
        let (once, _) = standardize(&w, Axis::Cols);
        let (twice, _) = standardize(&once, Axis::Cols);
        // second pass only divides by √(1 − ε/var + ε) ≈ 1
        assert!(max_abs_diff(&once, &twice) < 1e-4);
    }
}
