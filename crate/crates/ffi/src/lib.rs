//! C interface to `swapreg`.
//!
//! Designs and swap traces are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns a
//! [`SwapregStatus`]; on failure a description is available from
//! [`swapreg_last_error`] on the same thread. Index arrays are `size_t`,
//! numeric arrays `double`, and matrices column-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use swapreg::solvers::SolverChoice;
use swapreg::theory::esd;
use swapreg::{fit_support, swap_run, DesignMatrix, Error, SupportSet, SwapOptions, SwapTrace};

/// Result codes. `SWAPREG_STATUS_OK` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwapregStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidSupport = 4,
    RankDeficient = 5,
    NonFinite = 6,
    TooLarge = 7,
    Panic = 8,
    Other = 9,
}

/// An `n × p` design matrix.
pub struct SwapregDesign {
    inner: DesignMatrix,
}

/// The iterates of one swap run.
pub struct SwapregTrace {
    inner: SwapTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(SwapregStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::DimensionMismatch(_) => SwapregStatus::DimensionMismatch,
            Error::InvalidSupport(_) => SwapregStatus::InvalidSupport,
            Error::RankDeficient { .. } | Error::ZeroColumn(_) => SwapregStatus::RankDeficient,
            Error::NonFinite => SwapregStatus::NonFinite,
            Error::CombinatorialBlowup { .. } => SwapregStatus::TooLarge,
            Error::InvalidSpec(_) | Error::Domain(_) | Error::TooFewSamples { .. } => SwapregStatus::InvalidArgument,
            _ => SwapregStatus::Other,
        };
        Fail(code, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SwapregStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records any error or panic, and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SwapregStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SwapregStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            SwapregStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller promises `len` readable elements at `p`.
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn design<'a>(d: *const SwapregDesign) -> Result<&'a DesignMatrix, Fail> {
    d.as_ref().map(|d| &d.inner).ok_or_else(|| null("design"))
}

unsafe fn response(d: &DesignMatrix, y: *const f64) -> Result<ndarray::ArrayView1<'_, f64>, Fail> {
    Ok(ndarray::ArrayView1::from(slice(y, d.n(), "y")?))
}

unsafe fn support(d: &DesignMatrix, s: *const usize, k: usize) -> Result<SupportSet, Fail> {
    Ok(SupportSet::new(slice(s, k, "support")?.iter().copied(), d.p())?)
}

unsafe fn write_support(s: &SupportSet, out: *mut usize) -> Result<(), Fail> {
    if out.is_null() && !s.is_empty() {
        return Err(null("output support"));
    }
    if !s.is_empty() {
        ptr::copy_nonoverlapping(s.as_slice().as_ptr(), out, s.len());
    }
    Ok(())
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn swapreg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn swapreg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies a column-major `n × p` matrix into a new design. With
/// `normalize` set, columns are rescaled to `‖X_j‖² = n`.
///
/// # Safety
/// `data` must point to `n * p` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swapreg_design_new(
    data: *const f64,
    n: usize,
    p: usize,
    normalize: bool,
    out: *mut *mut SwapregDesign,
) -> SwapregStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n
            .checked_mul(p)
            .ok_or_else(|| Fail(SwapregStatus::TooLarge, format!("{n} x {p} overflows")))?;
        let values = slice(data, len, "data")?.to_vec();
        let mut x = DesignMatrix::from_column_major(n, p, values)?;
        if normalize {
            x = x.normalize_columns()?;
        }
        *out = Box::into_raw(Box::new(SwapregDesign { inner: x }));
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a handle from [`swapreg_design_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swapreg_design_free(d: *mut SwapregDesign) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be a live design; `n` and `p` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn swapreg_design_dims(d: *const SwapregDesign, n: *mut usize, p: *mut usize) -> SwapregStatus {
    guard(|| {
        let x = design(d)?;
        if let Some(n) = n.as_mut() {
            *n = x.n();
        }
        if let Some(p) = p.as_mut() {
            *p = x.p();
        }
        Ok(())
    })
}

/// Least-squares loss `‖y − P_S y‖²` of the support `support_in[0..k]`.
///
/// # Safety
/// `y` holds `n` doubles, `support_in` holds `k` indices, `loss` is writable.
#[no_mangle]
pub unsafe extern "C" fn swapreg_fit_loss(
    d: *const SwapregDesign,
    y: *const f64,
    support_in: *const usize,
    k: usize,
    loss: *mut f64,
) -> SwapregStatus {
    guard(|| {
        let x = design(d)?;
        let s = support(x, support_in, k)?;
        let l = fit_support(response(x, y)?, x, &s)?.loss();
        *loss.as_mut().ok_or_else(|| null("loss"))? = l;
        Ok(())
    })
}

/// Swaps from `s_init[0..k]` until no single swap lowers the loss.
/// `max_iterations = 0` keeps the default cap of `p·k`.
///
/// # Safety
/// `y` holds `n` doubles, `s_init` holds `k` indices, `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn swapreg_swap_run(
    d: *const SwapregDesign,
    y: *const f64,
    s_init: *const usize,
    k: usize,
    max_iterations: usize,
    out: *mut *mut SwapregTrace,
) -> SwapregStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let x = design(d)?;
        let s = support(x, s_init, k)?;
        let opts = SwapOptions {
            max_iterations: (max_iterations > 0).then_some(max_iterations),
            ..SwapOptions::default()
        };
        let trace = swap_run(response(x, y)?, x, &s, &opts)?;
        *out = Box::into_raw(Box::new(SwapregTrace { inner: trace }));
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a handle from [`swapreg_swap_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swapreg_trace_free(t: *mut SwapregTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of iterates, the initial support included. Zero for null.
///
/// # Safety
/// `t` must be null or a live trace.
#[no_mangle]
pub unsafe extern "C" fn swapreg_trace_len(t: *const SwapregTrace) -> usize {
    t.as_ref().map_or(0, |t| t.inner.iterates.len())
}

/// Whether the run stopped because no swap improved the loss.
///
/// # Safety
/// `t` must be null or a live trace.
#[no_mangle]
pub unsafe extern "C" fn swapreg_trace_converged(t: *const SwapregTrace) -> bool {
    t.as_ref().is_some_and(|t| t.inner.converged)
}

/// Copies iterate `step` into `support_out` (`k` entries, ascending) and its
/// loss into `loss` (may be null).
///
/// # Safety
/// `t` must be a live trace, `support_out` must have room for `k` indices.
#[no_mangle]
pub unsafe extern "C" fn swapreg_trace_step(
    t: *const SwapregTrace,
    step: usize,
    support_out: *mut usize,
    loss: *mut f64,
) -> SwapregStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trace"))?;
        let it = t.inner.iterates.get(step).ok_or_else(|| {
            Fail(
                SwapregStatus::InvalidArgument,
                format!("step {step} out of range for {} iterates", t.inner.iterates.len()),
            )
        })?;
        write_support(&it.support, support_out)?;
        if let Some(l) = loss.as_mut() {
            *l = it.loss;
        }
        Ok(())
    })
}

/// Exhaustive search over all size-`k` supports.
///
/// # Safety
/// `y` holds `n` doubles, `support_out` has room for `k` indices, `loss`
/// is writable or null.
#[no_mangle]
pub unsafe extern "C" fn swapreg_esd(
    d: *const SwapregDesign,
    y: *const f64,
    k: usize,
    support_out: *mut usize,
    loss: *mut f64,
) -> SwapregStatus {
    guard(|| {
        let x = design(d)?;
        let e = esd(response(x, y)?, x, k)?;
        write_support(&e.support, support_out)?;
        if let Some(l) = loss.as_mut() {
            *l = e.loss;
        }
        Ok(())
    })
}

/// Size-`k` support from a named solver with default settings: "lasso",
/// "tlasso", "foba", "cosamp", "omp", "mar" or "random". `seed` drives
/// cross-validation folds and random draws.
///
/// # Safety
/// `solver` is a NUL-terminated string, `y` holds `n` doubles and
/// `support_out` has room for `k` indices.
#[no_mangle]
pub unsafe extern "C" fn swapreg_solve(
    d: *const SwapregDesign,
    y: *const f64,
    k: usize,
    solver: *const c_char,
    seed: u64,
    support_out: *mut usize,
) -> SwapregStatus {
    guard(|| {
        let x = design(d)?;
        if solver.is_null() {
            return Err(null("solver"));
        }
        let name = CStr::from_ptr(solver)
            .to_str()
            .map_err(|_| Fail(SwapregStatus::InvalidArgument, "solver name is not UTF-8".into()))?;
        let out = SolverChoice::from_name(name)?.solve(response(x, y)?, x, k, seed)?;
        write_support(&out.support, support_out)
    })
}
