//! C ABI for `shapesmooth`.
//!
//! Piecewise polynomials cross the boundary as opaque handles
//! (`ShapesmoothPpf *`) created by the constructors here and released with
//! [`shapesmooth_ppf_free`]. Every fallible call returns a
//! [`ShapesmoothStatus`]; on failure [`shapesmooth_last_error_message`] holds
//! a description until the next call on the same thread. Panics are caught
//! and reported as `SHAPESMOOTH_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use shapesmooth::io;
use shapesmooth::smoothing::smooth;
use shapesmooth::{Error, Partition, PiecewisePoly, Pipeline, Polynomial, RemeshChoice, ShapeSpec, SmoothOptions};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapesmoothStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidPartition = 3,
    /// The input is not `q`-monotone (or not monotone/convex).
    NotInShapeClass = 4,
    InsufficientSmoothness = 5,
    ShapeCertificationFailed = 6,
    GlueFailed = 7,
    MeshTooCoarse = 8,
    NotARemesh = 9,
    Json = 10,
    Io = 11,
    Panic = 99,
}

/// Opaque piecewise polynomial.
pub struct ShapesmoothPpf(PiecewisePoly);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ShapesmoothStatus {
    match e {
        Error::InvalidPartition { .. } | Error::DomainMismatch { .. } => ShapesmoothStatus::InvalidPartition,
        Error::NotInShapeClass { .. } | Error::NotConvex { .. } | Error::NotMonotone { .. } | Error::NotNonnegative { .. } | Error::ShapeViolated { .. } => {
            ShapesmoothStatus::NotInShapeClass
        }
        Error::InsufficientSmoothness { .. } => ShapesmoothStatus::InsufficientSmoothness,
        Error::ShapeCertificationFailed { .. } => ShapesmoothStatus::ShapeCertificationFailed,
        Error::GlueFailed { .. } => ShapesmoothStatus::GlueFailed,
        Error::MeshTooCoarse { .. } => ShapesmoothStatus::MeshTooCoarse,
        Error::NotARemesh { .. } => ShapesmoothStatus::NotARemesh,
        Error::Json { .. } => ShapesmoothStatus::Json,
        Error::Io { .. } => ShapesmoothStatus::Io,
        Error::InvalidN { .. } | Error::InvalidP { .. } | Error::InvalidT { .. } | Error::InvalidArgument { .. } | Error::BadKnotCount { .. } => {
            ShapesmoothStatus::InvalidArgument
        }
    }
}

/// Runs `f`, recording errors and panics.
fn guard<F: FnOnce() -> Result<(), (ShapesmoothStatus, String)>>(f: F) -> ShapesmoothStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ShapesmoothStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ShapesmoothStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (ShapesmoothStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (ShapesmoothStatus, String) {
    (ShapesmoothStatus::NullPointer, format!("{what} is null"))
}

fn emit(out: *mut *mut ShapesmoothPpf, s: PiecewisePoly) {
    // SAFETY: callers check `out` for null before computing `s`.
    unsafe { *out = Box::into_raw(Box::new(ShapesmoothPpf(s))) };
}

/// Description of the last failure on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn shapesmooth_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn shapesmooth_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a piecewise polynomial from `n_intervals + 1` breakpoints and a
/// row-major `n_intervals × (degree + 1)` coefficient table; row `i` holds
/// the coefficients of piece `i` in powers of `x - breakpoints[i]`.
///
/// # Safety
/// `breakpoints` and `coeffs` must point to arrays of the stated sizes and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn shapesmooth_ppf_new(
    breakpoints: *const f64,
    n_intervals: usize,
    coeffs: *const f64,
    degree: usize,
    out: *mut *mut ShapesmoothPpf,
) -> ShapesmoothStatus {
    guard(|| {
        if breakpoints.is_null() || coeffs.is_null() || out.is_null() {
            return Err(null("an argument"));
        }
        if n_intervals == 0 {
            return Err(lib_err(Error::InvalidN { n: 0 }));
        }
        let bp = std::slice::from_raw_parts(breakpoints, n_intervals + 1).to_vec();
        let table = std::slice::from_raw_parts(coeffs, n_intervals * (degree + 1));
        let pieces = table.chunks(degree + 1).zip(&bp).map(|(c, &z)| Polynomial::new(z, c.to_vec())).collect();
        let s = Partition::new(bp).and_then(|p| PiecewisePoly::new(p, pieces)).map_err(lib_err)?;
        emit(out, s);
        Ok(())
    })
}

/// Parses the JSON form `{"breakpoints": [...], "pieces": [{"center": c,
/// "coeffs": [...]}, ...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shapesmooth_ppf_from_json(json: *const c_char, out: *mut *mut ShapesmoothPpf) -> ShapesmoothStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return Err(null("an argument"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| (ShapesmoothStatus::InvalidArgument, e.to_string()))?;
        let s: PiecewisePoly = io::from_json(text).map_err(lib_err)?;
        emit(out, s);
        Ok(())
    })
}

/// Serializes to pretty JSON; release the string with [`shapesmooth_string_free`].
///
/// # Safety
/// `ppf` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shapesmooth_ppf_to_json(ppf: *const ShapesmoothPpf, out: *mut *mut c_char) -> ShapesmoothStatus {
    guard(|| {
        if ppf.is_null() || out.is_null() {
            return Err(null("an argument"));
        }
        let text = io::to_json(&(*ppf).0).map_err(lib_err)?;
        let c = CString::new(text).map_err(|e| (ShapesmoothStatus::Json, e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn shapesmooth_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `ppf` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn shapesmooth_ppf_free(ppf: *mut ShapesmoothPpf) {
    if !ppf.is_null() {
        drop(Box::from_raw(ppf));
    }
}

/// Number of intervals; 0 for null.
///
/// # Safety
/// `ppf` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn shapesmooth_ppf_num_intervals(ppf: *const ShapesmoothPpf) -> usize {
    ppf.as_ref().map_or(0, |p| p.0.n())
}

/// Copies up to `len` breakpoints into `buf`; returns how many exist.
///
/// # Safety
/// `ppf` must be null or a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn shapesmooth_ppf_breakpoints(ppf: *const ShapesmoothPpf, buf: *mut f64, len: usize) -> usize {
    let Some(p) = ppf.as_ref() else { return 0 };
    let bp = p.0.breakpoints();
    if !buf.is_null() {
        let k = len.min(bp.len());
        ptr::copy_nonoverlapping(bp.as_ptr(), buf, k);
    }
    bp.len()
}

/// `s(x)`, using the right piece at interior breakpoints.
///
/// # Safety
/// `ppf` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shapesmooth_ppf_eval(ppf: *const ShapesmoothPpf, x: f64, out: *mut f64) -> ShapesmoothStatus {
    guard(|| {
        let p = ppf.as_ref().ok_or_else(|| null("ppf"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = p.0.eval(x);
        Ok(())
    })
}

/// Certifies `q`-monotonicity with the default tolerance.
///
/// # Safety
/// `ppf` must be a live handle and `holds` writable.
#[no_mangle]
pub unsafe extern "C" fn shapesmooth_ppf_is_q_monotone(ppf: *const ShapesmoothPpf, q: usize, holds: *mut bool) -> ShapesmoothStatus {
    guard(|| {
        let p = ppf.as_ref().ok_or_else(|| null("ppf"))?;
        if holds.is_null() {
            return Err(null("holds"));
        }
        let spec = ShapeSpec::new(q).map_err(lib_err)?;
        *holds = p.0.is_q_monotone(&spec).map_err(lib_err)?;
        Ok(())
    })
}

/// Largest `μ` with the function in `C^μ` (−1 if it jumps).
///
/// # Safety
/// `ppf` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn shapesmooth_ppf_smoothness_class(ppf: *const ShapesmoothPpf) -> i64 {
    ppf.as_ref().map_or(-1, |p| p.0.smoothness_class(shapesmooth::ppf::DEFAULT_TOL))
}

unsafe fn run_smooth(
    ppf: *const ShapesmoothPpf,
    q: usize,
    r: usize,
    remesh: RemeshChoice,
    out: *mut *mut ShapesmoothPpf,
) -> Result<(), (ShapesmoothStatus, String)> {
    let p = ppf.as_ref().ok_or_else(|| null("ppf"))?;
    if out.is_null() {
        return Err(null("out"));
    }
    let opts = SmoothOptions {
        p_list: Vec::new(),
        ..Default::default()
    };
    let outcome = smooth(&p.0, q, r, Pipeline::Auto, &remesh, &opts).map_err(lib_err)?;
    emit(out, outcome.output);
    Ok(())
}

/// Smooths `ppf` into a `q`-monotone spline of degree `q + r` and minimal
/// defect on an automatic remesh. `delta <= 0` selects the default fineness.
///
/// # Safety
/// `ppf` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shapesmooth_smooth(ppf: *const ShapesmoothPpf, q: usize, r: usize, delta: f64, out: *mut *mut ShapesmoothPpf) -> ShapesmoothStatus {
    guard(|| run_smooth(ppf, q, r, RemeshChoice::Auto((delta > 0.0).then_some(delta)), out))
}

/// As [`shapesmooth_smooth`], on the given remesh breakpoints (which must
/// span the same domain).
///
/// # Safety
/// `ppf` must be a live handle, `breakpoints` must hold `len` doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesmooth_smooth_on(
    ppf: *const ShapesmoothPpf,
    q: usize,
    r: usize,
    breakpoints: *const f64,
    len: usize,
    out: *mut *mut ShapesmoothPpf,
) -> ShapesmoothStatus {
    guard(|| {
        if breakpoints.is_null() {
            return Err(null("breakpoints"));
        }
        let zt = Partition::new(std::slice::from_raw_parts(breakpoints, len).to_vec()).map_err(lib_err)?;
        run_smooth(ppf, q, r, RemeshChoice::Given(zt), out)
    })
}
