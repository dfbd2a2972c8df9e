//! C interface: opaque matrix and network handles, status codes, and a
//! per-thread last-error message.
//!
//! Every function returns a [`WcStatus`] (or a plain value for infallible
//! accessors), never unwinds across the boundary, and leaves output
//! arguments untouched on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use weightcond::net::spec::{mlp, Activation, Conditioning};
use weightcond::net::{Mode, Network};
use weightcond::{precond, Error, Matrix, PreconditionerKind};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    RankDeficient = 3,
    NonFinite = 4,
    ZeroRowOrColumn = 5,
    Io = 6,
    Panic = 7,
    Other = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcPreconditioner {
    Jacobi = 0,
    RowEquilibration = 1,
    ColumnEquilibration = 2,
    RowColumnEquilibration = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcActivation {
    Identity = 0,
    Relu = 1,
    Tanh = 2,
    Sigmoid = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcConditioning {
    None = 0,
    EquilibrateStatic = 1,
    EquilibrateReparam = 2,
}

/// Opaque dense matrix.
pub struct WcMatrix(Matrix);

/// Opaque feed-forward network.
pub struct WcNetwork(Network);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|b| *b != 0);
    let c = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> WcStatus {
    match e {
        Error::InvalidArgument(_) | Error::NotSymmetric { .. } | Error::Config(_) => WcStatus::InvalidArgument,
        Error::RankDeficient { .. } | Error::NotPositiveDefinite { .. } | Error::AllRankDeficient => {
            WcStatus::RankDeficient
        }
        Error::NonFinite { .. } | Error::NonFiniteActivation { .. } | Error::NonFiniteHessian { .. } => {
            WcStatus::NonFinite
        }
        Error::ZeroRow { .. } | Error::ZeroColumn { .. } | Error::ZeroDiagonal { .. } => WcStatus::ZeroRowOrColumn,
        Error::Io { .. } | Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => WcStatus::Io,
        Error::Stage { source, .. } => status_of(source),
        _ => WcStatus::Other,
    }
}

/// Runs `f`, turning errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), (WcStatus, String)>) -> WcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            WcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WcStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (WcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (WcStatus, String) {
    (WcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (WcStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], (WcStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn matrix<'a>(m: *const WcMatrix) -> Result<&'a Matrix, (WcStatus, String)> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null("matrix"))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wc_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or "" after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn wc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a `rows × cols` matrix from row-major `data`.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn wc_matrix_new(rows: usize, cols: usize, data: *const f64, out: *mut *mut WcMatrix) -> WcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = rows.checked_mul(cols).ok_or((WcStatus::InvalidArgument, "size overflow".into()))?;
        let d = slice(data, len, "data")?;
        let m = Matrix::new(rows, cols, d.to_vec()).map_err(lib_err)?;
        emit(out, WcMatrix(m));
        Ok(())
    })
}

/// Releases a matrix; null is ignored.
///
/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wc_matrix_free(m: *mut WcMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Row count, or 0 for null.
///
/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn wc_matrix_rows(m: *const WcMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// Column count, or 0 for null.
///
/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn wc_matrix_cols(m: *const WcMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// Copies the row-major entries into `out`, which holds `len` doubles.
///
/// # Safety
/// `m` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wc_matrix_copy_data(m: *const WcMatrix, out: *mut f64, len: usize) -> WcStatus {
    guard(|| {
        let m = matrix(m)?;
        let n = m.as_slice().len();
        if len != n {
            return Err((WcStatus::InvalidArgument, format!("buffer holds {len} values, matrix has {n}")));
        }
        slice_mut(out, len, "out")?.copy_from_slice(m.as_slice());
        Ok(())
    })
}

/// `σ₁/σ_k` over singular values above `rank_tol·σ₁`; fails with
/// `RANK_DEFICIENT` when any fall below.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_condition_number(m: *const WcMatrix, rank_tol: f64, out: *mut f64) -> WcStatus {
    guard(|| {
        let m = matrix(m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = weightcond::condition_number(m, rank_tol).map_err(lib_err)?;
        Ok(())
    })
}

/// Writes the `min(rows, cols)` singular values, descending, into `out`.
///
/// # Safety
/// `m` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wc_singular_values(m: *const WcMatrix, out: *mut f64, len: usize) -> WcStatus {
    guard(|| {
        let m = matrix(m)?;
        let s = weightcond::svd(m).map_err(lib_err)?.sigma;
        if len != s.len() {
            return Err((WcStatus::InvalidArgument, format!("buffer holds {len} values, need {}", s.len())));
        }
        slice_mut(out, len, "out")?.copy_from_slice(&s);
        Ok(())
    })
}

/// Applies a diagonal preconditioner and returns the scaled matrix as a new
/// handle.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_precondition(m: *const WcMatrix, kind: WcPreconditioner, out: *mut *mut WcMatrix) -> WcStatus {
    guard(|| {
        let a = matrix(m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let scaled = match kind {
            WcPreconditioner::Jacobi => precond::jacobi_precondition(a).map(|r| r.1),
            WcPreconditioner::RowEquilibration => precond::row_equilibrate(a).map(|r| r.1),
            WcPreconditioner::ColumnEquilibration => precond::column_equilibrate(a).map(|r| r.0),
            WcPreconditioner::RowColumnEquilibration => precond::row_column_equilibrate(a).map(|r| r.1),
        }
        .map_err(lib_err)?;
        emit(out, WcMatrix(scaled));
        Ok(())
    })
}

/// Condition numbers before and after a preconditioner.
///
/// # Safety
/// `m` must be a live handle; `before` and `after` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_conditioning_report(
    m: *const WcMatrix,
    kind: WcPreconditioner,
    before: *mut f64,
    after: *mut f64,
) -> WcStatus {
    guard(|| {
        let a = matrix(m)?;
        if before.is_null() || after.is_null() {
            return Err(null("before/after"));
        }
        let k = match kind {
            WcPreconditioner::Jacobi => PreconditionerKind::Jacobi,
            WcPreconditioner::RowEquilibration => PreconditionerKind::RowEquilibration,
            WcPreconditioner::ColumnEquilibration => PreconditionerKind::ColumnEquilibration,
            WcPreconditioner::RowColumnEquilibration => PreconditionerKind::RowColumnEquilibration,
        };
        let r = precond::conditioning_report(a, k).map_err(lib_err)?;
        *before = r.kappa_before;
        *after = r.kappa_after;
        Ok(())
    })
}

/// Builds a dense network with layer widths `widths[0..n_widths]`, the
/// given hidden activation (identity output) and conditioning on every
/// layer, initialized from `seed`.
///
/// # Safety
/// `widths` must point to `n_widths` readable values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wc_network_new_mlp(
    widths: *const usize,
    n_widths: usize,
    activation: WcActivation,
    conditioning: WcConditioning,
    seed: u64,
    out: *mut *mut WcNetwork,
) -> WcStatus {
    guard(|| {
        if widths.is_null() || out.is_null() {
            return Err(null("widths/out"));
        }
        if n_widths < 2 {
            return Err((WcStatus::InvalidArgument, "need at least input and output widths".into()));
        }
        let w = std::slice::from_raw_parts(widths, n_widths);
        let act = match activation {
            WcActivation::Identity => Activation::Identity,
            WcActivation::Relu => Activation::Relu,
            WcActivation::Tanh => Activation::Tanh,
            WcActivation::Sigmoid => Activation::Sigmoid,
        };
        let cond = match conditioning {
            WcConditioning::None => Conditioning::None,
            WcConditioning::EquilibrateStatic => Conditioning::EquilibrateStatic,
            WcConditioning::EquilibrateReparam => Conditioning::EquilibrateReparam,
        };
        let specs: Vec<_> = mlp(w, act).into_iter().map(|s| s.with_conditioning(cond)).collect();
        let net = Network::new(&specs, seed).map_err(lib_err)?;
        emit(out, WcNetwork(net));
        Ok(())
    })
}

/// Releases a network; null is ignored.
///
/// # Safety
/// `net` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wc_network_free(net: *mut WcNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of trainable parameters, or 0 for null.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wc_network_param_count(net: *const WcNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.param_count())
}

/// Evaluation-mode forward pass of `rows` inputs (row-major `x`); writes
/// `rows × output width` values into `out`.
///
/// # Safety
/// `net` must be a live handle, `x` readable for `x_len` doubles and `out`
/// writable for `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wc_network_forward(
    net: *const WcNetwork,
    x: *const f64,
    rows: usize,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> WcStatus {
    guard(|| {
        let net = &net.as_ref().ok_or_else(|| null("network"))?.0;
        let cols = net.input_width();
        if rows.checked_mul(cols) != Some(x_len) {
            return Err((WcStatus::InvalidArgument, format!("x must hold rows x {cols} values")));
        }
        if rows * net.output_width() != out_len {
            return Err((
                WcStatus::InvalidArgument,
                format!("out must hold rows x {} values", net.output_width()),
            ));
        }
        let xm = Matrix::new(rows, cols, slice(x, x_len, "x")?.to_vec()).map_err(lib_err)?;
        let y = net.predict(&xm, Mode::Eval).map_err(lib_err)?;
        slice_mut(out, out_len, "out")?.copy_from_slice(y.as_slice());
        Ok(())
    })
}

/// Writes `(κ(W_k), κ(E_k W_k))` per layer into `out` as interleaved pairs;
/// `len` must be twice the layer count.
///
/// # Safety
/// `net` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn wc_network_weight_kappas(net: *const WcNetwork, out: *mut f64, len: usize) -> WcStatus {
    guard(|| {
        let net = &net.as_ref().ok_or_else(|| null("network"))?.0;
        let k = net.weight_kappas();
        if len != 2 * k.len() {
            return Err((WcStatus::InvalidArgument, format!("buffer holds {len} values, need {}", 2 * k.len())));
        }
        let o = slice_mut(out, len, "out")?;
        for (i, (a, b)) in k.into_iter().enumerate() {
            o[2 * i] = a;
            o[2 * i + 1] = b;
        }
        Ok(())
    })
}
