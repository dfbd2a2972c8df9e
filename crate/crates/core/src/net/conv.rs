//! im2col convolution and per-filter kernel conditioning.

use crate::densela::Matrix;
use crate::error::{Error, Result};
use crate::net::spec::LayerKind;
use crate::net::weights::{unit_rows, NORM_FLOOR};

/// Geometry of a 2-D convolution over channel-major `C × H × W` inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub height: usize,
    pub width: usize,
}

impl ConvGeom {
    pub fn from_kind(kind: &LayerKind) -> Option<Self> {
        match *kind {
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                height,
                width,
            } => Some(Self {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                height,
                width,
            }),
            LayerKind::Dense { .. } => None,
        }
    }

    pub fn out_hw(&self) -> (usize, usize) {
        (
            (self.height + 2 * self.padding - self.kernel) / self.stride + 1,
            (self.width + 2 * self.padding - self.kernel) / self.stride + 1,
        )
    }

    pub fn patch_len(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    fn input_len(&self) -> usize {
        self.in_channels * self.height * self.width
    }

    /// Input offset read by patch element `(c, ki, kj)` at output `(oi, oj)`,
    /// or `None` when it falls into the zero padding.
    #[inline]
    fn source(&self, c: usize, ki: usize, kj: usize, oi: usize, oj: usize) -> Option<usize> {
        let r = (oi * self.stride + ki) as isize - self.padding as isize;
        let s = (oj * self.stride + kj) as isize - self.padding as isize;
        if r < 0 || s < 0 || r >= self.height as isize || s >= self.width as isize {
            return None;
        }
        Some((c * self.height + r as usize) * self.width + s as usize)
    }
}

/// Expands `N × (C·H·W)` input into `(N·oh·ow) × (C·k·k)` patches.
pub fn im2col(x: &Matrix, g: &ConvGeom) -> Result<Matrix> {
    if x.cols() != g.input_len() {
        return Err(Error::invalid(format!(
            "conv input has {} columns, expected {}",
            x.cols(),
            g.input_len()
        )));
    }
    let (oh, ow) = g.out_hw();
    let k = g.kernel;
    let pl = g.patch_len();
    let mut out = vec![0.0; x.rows() * oh * ow * pl];
    for n in 0..x.rows() {
        let xr = x.row(n);
        for oi in 0..oh {
            for oj in 0..ow {
                let base = ((n * oh + oi) * ow + oj) * pl;
                for c in 0..g.in_channels {
                    for ki in 0..k {
                        for kj in 0..k {
                            if let Some(src) = g.source(c, ki, kj, oi, oj) {
                                out[base + (c * k + ki) * k + kj] = xr[src];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(Matrix::from_raw(x.rows() * oh * ow, pl, out))
}

/// Adjoint of [`im2col`]: accumulates patch gradients back onto the input.
pub fn col2im(p: &Matrix, n: usize, g: &ConvGeom) -> Matrix {
    let (oh, ow) = g.out_hw();
    let k = g.kernel;
    let il = g.input_len();
    let mut out = vec![0.0; n * il];
    for s in 0..n {
        let dst = &mut out[s * il..(s + 1) * il];
        for oi in 0..oh {
            for oj in 0..ow {
                let row = p.row((s * oh + oi) * ow + oj);
                for c in 0..g.in_channels {
                    for ki in 0..k {
                        for kj in 0..k {
                            if let Some(src) = g.source(c, ki, kj, oi, oj) {
                                dst[src] += row[(c * k + ki) * k + kj];
                            }
                        }
                    }
                }
            }
        }
    }
    Matrix::from_raw(n, il, out)
}

/// `(N·oh·ow) × C_out` position-major values to `N × (C_out·oh·ow)` rows.
pub fn positions_to_rows(z: &Matrix, n: usize, g: &ConvGeom) -> Matrix {
    let (oh, ow) = g.out_hw();
    let hw = oh * ow;
    let co = g.out_channels;
    let mut out = vec![0.0; n * co * hw];
    for s in 0..n {
        for p in 0..hw {
            let src = z.row(s * hw + p);
            for c in 0..co {
                out[s * co * hw + c * hw + p] = src[c];
            }
        }
    }
    Matrix::from_raw(n, co * hw, out)
}

/// Inverse of [`positions_to_rows`].
pub fn rows_to_positions(y: &Matrix, g: &ConvGeom) -> Matrix {
    let (oh, ow) = g.out_hw();
    let hw = oh * ow;
    let co = g.out_channels;
    let n = y.rows();
    let mut out = vec![0.0; n * hw * co];
    for s in 0..n {
        let src = y.row(s);
        for c in 0..co {
            for p in 0..hw {
                out[(s * hw + p) * co + c] = src[c * hw + p];
            }
        }
    }
    Matrix::from_raw(n * hw, co, out)
}

/// A convolution kernel as a 4-axis array `[out][in][k][k]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub out_channels: usize,
    pub in_channels: usize,
    pub size: usize,
    pub data: Vec<f64>,
}

impl Kernel {
    pub fn new(out_channels: usize, in_channels: usize, size: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != out_channels * in_channels * size * size {
            return Err(Error::invalid("kernel data length does not match its shape"));
        }
        Ok(Self {
            out_channels,
            in_channels,
            size,
            data,
        })
    }

    #[inline]
    pub fn get(&self, o: usize, c: usize, i: usize, j: usize) -> f64 {
        self.data[((o * self.in_channels + c) * self.size + i) * self.size + j]
    }

    /// The `out × (in·k·k)` view, one filter per row.
    pub fn unrolled(&self) -> Matrix {
        Matrix::from_raw(
            self.out_channels,
            self.in_channels * self.size * self.size,
            self.data.clone(),
        )
    }

    pub fn from_unrolled(m: &Matrix, in_channels: usize, size: usize) -> Result<Self> {
        if m.cols() != in_channels * size * size {
            return Err(Error::invalid("unrolled kernel width does not match in_channels·k·k"));
        }
        Self::new(m.rows(), in_channels, size, m.as_slice().to_vec())
    }
}

/// Row-equilibrates the unrolled kernel so every filter has unit 2-norm.
///
/// Zero filters are clamped at the norm floor and stay zero.
pub fn conv_condition(kernel: &Kernel) -> Kernel {
    let (u, norms) = unit_rows(&kernel.unrolled());
    for (i, n) in norms.iter().enumerate() {
        if *n < NORM_FLOOR {
            log::warn!("conv filter {i} has norm {n:e}; clamped at {NORM_FLOOR:e}");
        }
    }
    Kernel {
        data: u.into_vec(),
        ..kernel.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densela::{condition_number, matmul_nt};
    use crate::rng;

    fn geom() -> ConvGeom {
        ConvGeom {
            in_channels: 2,
            out_channels: 3,
            kernel: 3,
            stride: 2,
            padding: 1,
            height: 5,
            width: 4,
        }
    }

    /// Direct nested-loop convolution used as an oracle.
    fn direct(x: &Matrix, k: &Kernel, g: &ConvGeom) -> Matrix {
        let (oh, ow) = g.out_hw();
        Matrix::from_fn(x.rows(), g.out_channels * oh * ow, |n, idx| {
            let (o, p) = (idx / (oh * ow), idx % (oh * ow));
            let (oi, oj) = (p / ow, p % ow);
            let mut s = 0.0;
            for c in 0..g.in_channels {
                for i in 0..g.kernel {
                    for j in 0..g.kernel {
                        let r = (oi * g.stride + i) as isize - g.padding as isize;
                        let q = (oj * g.stride + j) as isize - g.padding as isize;
                        if r >= 0 && q >= 0 && (r as usize) < g.height && (q as usize) < g.width {
                            let v = x.get(n, (c * g.height + r as usize) * g.width + q as usize);
                            s += k.get(o, c, i, j) * v;
                        }
                    }
                }
            }
            s
        })
        .unwrap()
    }

    #[test]
    fn im2col_matches_direct_convolution() {
        let g = geom();
        let mut r = rng::stream(3, 0);
        let x = rng::normal_matrix(&mut r, 2, 40);
        let k = Kernel::from_unrolled(&rng::normal_matrix(&mut r, 3, 18), 2, 3).unwrap();
        let z = matmul_nt(&im2col(&x, &g).unwrap(), &k.unrolled()).unwrap();
        let y = positions_to_rows(&z, 2, &g);
        let d = direct(&x, &k, &g);
        for (a, b) in y.as_slice().iter().zip(d.as_slice()) {
            assert!((a - b).abs() < 1e-13);
        }
        assert_eq!(rows_to_positions(&y, &g), z);
    }

    #[test]
    fn col2im_is_adjoint() {
        let g = geom();
        let mut r = rng::stream(3, 1);
        let x = rng::normal_matrix(&mut r, 2, 40);
        let p = im2col(&x, &g).unwrap();
        let q = rng::normal_matrix(&mut r, p.rows(), p.cols());
        let lhs: f64 = p.as_slice().iter().zip(q.as_slice()).map(|(a, b)| a * b).sum();
        let back = col2im(&q, 2, &g);
        let rhs: f64 = x.as_slice().iter().zip(back.as_slice()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn single_tap_kernel_becomes_one() {
        let k = Kernel::new(1, 1, 1, vec![7.0]).unwrap();
        assert_eq!(conv_condition(&k).data, vec![1.0]);
    }

    #[test]
    fn conditioning_does_not_raise_kappa() {
        for seed in 0..20 {
            let mut r = rng::stream(seed, 5);
            let m = crate::precond::imbalanced_rows(&mut r, 4, 18);
            let k = Kernel::from_unrolled(&m, 2, 3).unwrap();
            let c = conv_condition(&k);
            let before = condition_number(&k.unrolled(), 1e-12).unwrap();
            let after = condition_number(&c.unrolled(), 1e-12).unwrap();
            assert!(after <= before * (1.0 + 1e-9), "seed {seed}");
        }
    }

    #[test]
    fn conditioned_conv_equals_dense_on_patches() {
        let g = geom();
        let mut r = rng::stream(9, 2);
        let x = rng::normal_matrix(&mut r, 3, 40);
        let k = conv_condition(&Kernel::from_unrolled(&rng::normal_matrix(&mut r, 3, 18), 2, 3).unwrap());
        let conv = direct(&x, &k, &g);
        let dense = positions_to_rows(&matmul_nt(&im2col(&x, &g).unwrap(), &k.unrolled()).unwrap(), 3, &g);
        for (a, b) in conv.as_slice().iter().zip(dense.as_slice()) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
