//! Seeded synthetic datasets and the IDX image format.

use serde::{Deserialize, Serialize};

use crate::densela::{matmul, Matrix};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Matrix,
}

impl Dataset {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::invalid("inputs and targets have different row counts"));
        }
        if x.rows() == 0 {
            return Err(Error::invalid("dataset is empty"));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    /// Rows `idx` of inputs and targets.
    pub fn batch(&self, idx: &[usize]) -> (Matrix, Matrix) {
        let pick = |m: &Matrix| {
            let mut data = Vec::with_capacity(idx.len() * m.cols());
            for &i in idx {
                data.extend_from_slice(m.row(i));
            }
            Matrix::from_raw(idx.len(), m.cols(), data)
        };
        (pick(&self.x), pick(&self.y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherSpec {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    /// Condition number of the teacher's first weight matrix.
    pub kappa: f64,
    pub samples: usize,
    #[serde(default)]
    pub noise: f64,
}

/// The teacher's first-layer weight: orthonormal rows scaled log-uniformly
/// from `2/κ` to `2`, so its condition number is exactly `κ` when
/// `inputs ≤ hidden`.
pub fn teacher_first_layer(r: &mut rng::LabRng, inputs: usize, hidden: usize, kappa: f64) -> Matrix {
    let q = if inputs <= hidden {
        crate::densela::transpose(&rng::orthonormal_columns(r, hidden, inputs))
    } else {
        rng::orthonormal_columns(r, inputs, hidden)
    };
    let scale = |i: usize| {
        let t = if inputs > 1 { i as f64 / (inputs - 1) as f64 } else { 1.0 };
        2.0 * kappa.powf(t - 1.0)
    };
    Matrix::from_fn(inputs, hidden, |i, j| scale(i) * q.get(i, j)).expect("finite")
}

/// Regression targets `tanh(x W₁ + b₁) W₂ + b₂ (+ noise)` with `x ~ N(0, I)`.
pub fn teacher_student(spec: &TeacherSpec, seed: u64) -> Result<Dataset> {
    if spec.inputs == 0 || spec.hidden == 0 || spec.outputs == 0 || spec.samples == 0 {
        return Err(Error::invalid("teacher dimensions and sample count must be positive"));
    }
    if !(spec.kappa >= 1.0 && spec.kappa.is_finite()) {
        return Err(Error::invalid("teacher kappa must be finite and >= 1"));
    }
    let mut r = rng::stream(seed, rng::label_id("teacher"));
    let w1 = teacher_first_layer(&mut r, spec.inputs, spec.hidden, spec.kappa);
    let b1: Vec<f64> = (0..spec.hidden).map(|_| 0.1 * rng::normal(&mut r)).collect();
    let w2 = rng::normal_matrix(&mut r, spec.hidden, spec.outputs).scale(1.0 / (spec.hidden as f64).sqrt());
    let b2: Vec<f64> = (0..spec.outputs).map(|_| 0.1 * rng::normal(&mut r)).collect();

    let mut d = rng::stream(seed, rng::label_id("teacher-data"));
    let x = rng::normal_matrix(&mut d, spec.samples, spec.inputs);
    let mut h = matmul(&x, &w1)?;
    for i in 0..h.rows() {
        for (v, b) in h.row_mut(i).iter_mut().zip(&b1) {
            *v = (*v + b).tanh();
        }
    }
    let mut y = matmul(&h, &w2)?;
    for i in 0..y.rows() {
        for (v, b) in y.row_mut(i).iter_mut().zip(&b2) {
            *v += b + spec.noise * rng::normal(&mut d);
        }
    }
    Dataset::new(x, y)
}

/// Two interleaved half-circles with 0/1 labels and Gaussian jitter.
pub fn two_moons(samples: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if samples < 2 {
        return Err(Error::invalid("two moons needs at least two samples"));
    }
    let mut r = rng::stream(seed, rng::label_id("two-moons"));
    let outer = samples / 2;
    let inner = samples - outer;
    let mut x = Vec::with_capacity(2 * samples);
    let mut y = Vec::with_capacity(samples);
    let lin = |i: usize, n: usize| if n > 1 { std::f64::consts::PI * i as f64 / (n - 1) as f64 } else { 0.0 };
    for i in 0..outer {
        let t = lin(i, outer);
        x.push(t.cos() + noise * rng::normal(&mut r));
        x.push(t.sin() + noise * rng::normal(&mut r));
        y.push(0.0);
    }
    for i in 0..inner {
        let t = lin(i, inner);
        x.push(1.0 - t.cos() + noise * rng::normal(&mut r));
        x.push(0.5 - t.sin() + noise * rng::normal(&mut r));
        y.push(1.0);
    }
    Dataset::new(Matrix::new(samples, 2, x)?, Matrix::new(samples, 1, y)?)
}

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// An unsigned-byte IDX array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn be_u32(b: &[u8], at: usize) -> Result<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_be_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| Error::invalid("IDX file truncated in header"))
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxArray> {
    let magic = be_u32(bytes, 0)?;
    let ndim = match magic {
        IDX_IMAGES_MAGIC => 3,
        IDX_LABELS_MAGIC => 1,
        m => return Err(Error::invalid(format!("unsupported IDX magic {m:#010x}"))),
    };
    let dims = (0..ndim)
        .map(|i| be_u32(bytes, 4 + 4 * i).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let len = dims
        .iter()
        .try_fold(1usize, |a, d| a.checked_mul(*d))
        .ok_or_else(|| Error::invalid("IDX dimensions overflow"))?;
    let start = 4 + 4 * ndim;
    let data = bytes
        .get(start..)
        .filter(|d| d.len() == len)
        .ok_or_else(|| Error::invalid(format!("IDX payload should have {len} bytes, found {}", bytes.len() - start)))?;
    Ok(IdxArray {
        dims,
        data: data.to_vec(),
    })
}

pub fn write_idx(a: &IdxArray) -> Result<Vec<u8>> {
    let magic = match a.dims.len() {
        3 => IDX_IMAGES_MAGIC,
        1 => IDX_LABELS_MAGIC,
        _ => return Err(Error::invalid("IDX arrays here are 1-D labels or 3-D images")),
    };
    if a.dims.iter().product::<usize>() != a.data.len() {
        return Err(Error::invalid("IDX data length does not match dims"));
    }
    let mut out = magic.to_be_bytes().to_vec();
    for d in &a.dims {
        let d = u32::try_from(*d).map_err(|_| Error::invalid("IDX dimension exceeds u32"))?;
        out.extend_from_slice(&d.to_be_bytes());
    }
    out.extend_from_slice(&a.data);
    Ok(out)
}

/// Images scaled to `[0, 1]`, one flattened image per row, and the label as
/// a single target column.
pub fn idx_dataset(images: &IdxArray, labels: &IdxArray) -> Result<Dataset> {
    if images.dims.len() != 3 || labels.dims.len() != 1 || images.dims[0] != labels.dims[0] {
        return Err(Error::invalid("IDX images and labels disagree on sample count"));
    }
    let (n, px) = (images.dims[0], images.dims[1] * images.dims[2]);
    let x = Matrix::new(n, px, images.data.iter().map(|&b| f64::from(b) / 255.0).collect())?;
    let y = Matrix::new(n, 1, labels.data.iter().map(|&b| f64::from(b)).collect())?;
    Dataset::new(x, y)
}

pub fn read_idx_file(path: &std::path::Path) -> Result<IdxArray> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx(&bytes)
}
