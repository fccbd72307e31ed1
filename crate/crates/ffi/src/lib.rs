//! C interface to the decay-certificate engine.
//!
//! Every fallible entry point returns an `HdStatus` code and writes its
//! results through caller-provided pointers. On failure a message is kept in
//! thread-local storage and can be read with `hd_last_error`. Panics never
//! cross the boundary; they are reported as `HD_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hypodecay::family::{lower_bound_constant, upper_bound_constant};
use hypodecay::goldstein_taylor::mode_certificate;
use hypodecay::sharp::{classify_and_sharp_constant, envelope_curves, Attainment, Case2D};
use hypodecay::spectral::{canonical_2d_form, classify_stability, eigendecompose, ComplexMatrix};
use hypodecay::Error;

/// Status codes returned by every fallible function.
pub type HdStatus = i32;

pub const HD_OK: HdStatus = 0;
/// Malformed input: bad sizes, non-finite entries, rates out of range.
pub const HD_INVALID_INPUT: HdStatus = 1;
/// Defective, not positive stable, or wrong dimension for the operation.
pub const HD_UNSUPPORTED: HdStatus = 2;
/// A certificate could not be verified.
pub const HD_VERIFICATION_FAILED: HdStatus = 3;
pub const HD_NULL_POINTER: HdStatus = 4;
pub const HD_PANIC: HdStatus = 5;

pub const HD_DIRECTION_UPPER: i32 = 0;
pub const HD_DIRECTION_LOWER: i32 = 1;

pub const HD_CASE_EQUAL_EIGENVALUES: i32 = 0;
pub const HD_CASE_EQUAL_REAL_PARTS: i32 = 1;
pub const HD_CASE_EQUAL_IMAGINARY_PARTS: i32 = 2;
pub const HD_CASE_FULLY_DISTINCT: i32 = 3;

/// Opaque square complex matrix.
pub struct HdMatrix {
    inner: ComplexMatrix,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HdStability {
    pub mu: f64,
    pub mu_s: f64,
    pub nu: f64,
    pub nu_s: f64,
    pub hypocoercive: bool,
    pub coercive: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HdSharp {
    /// One of the `HD_CASE_*` constants.
    pub case_: i32,
    pub alpha: f64,
    pub c_sharp: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    /// Time at which `c_sharp` is attained, NaN when only approached as t grows.
    pub attained_at: f64,
    pub tail_uncertain: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HdStatus {
    match e.exit_code() {
        2 => HD_UNSUPPORTED,
        3 => HD_VERIFICATION_FAILED,
        _ => HD_INVALID_INPUT,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (HdStatus, String)>) -> HdStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HD_OK,
        Ok(Err((code, msg))) => {
            set_error(&msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            HD_PANIC
        }
    }
}

fn lift<T>(r: hypodecay::Result<T>) -> Result<T, (HdStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (HdStatus, String) {
    (HD_NULL_POINTER, "null pointer argument".into())
}

unsafe fn matrix_ref<'a>(m: *const HdMatrix) -> Result<&'a ComplexMatrix, (HdStatus, String)> {
    m.as_ref().map(|m| &m.inner).ok_or_else(null)
}

/// Creates an `n x n` matrix from row-major real parts and optional
/// imaginary parts (`im` may be null). Free with `hd_matrix_free`.
///
/// # Safety
/// `re` (and `im` when non-null) must point to `n * n` doubles and `out` to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn hd_matrix_new(n: usize, re: *const f64, im: *const f64, out: *mut *mut HdMatrix) -> HdStatus {
    guard(|| {
        if re.is_null() || out.is_null() {
            return Err(null());
        }
        let len = n.checked_mul(n).ok_or((HD_INVALID_INPUT, "size overflow".into()))?;
        let re = std::slice::from_raw_parts(re, len);
        let im = (!im.is_null()).then(|| std::slice::from_raw_parts(im, len));
        let inner = lift(ComplexMatrix::from_parts(n, re, im))?;
        *out = Box::into_raw(Box::new(HdMatrix { inner }));
        Ok(())
    })
}

/// # Safety
/// `m` must come from `hd_matrix_new` and not have been freed; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn hd_matrix_free(m: *mut HdMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Spectral gap, coercivity bounds and their classification.
///
/// # Safety
/// `m` must be a live matrix handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hd_stability(m: *const HdMatrix, out: *mut HdStability) -> HdStatus {
    guard(|| {
        let c = matrix_ref(m)?;
        let out = out.as_mut().ok_or_else(null)?;
        let spec = lift(eigendecompose(c))?;
        let s = classify_stability(c, &spec);
        *out = HdStability {
            mu: s.mu,
            mu_s: s.mu_s,
            nu: s.nu,
            nu_s: s.nu_s,
            hypocoercive: s.hypocoercive,
            coercive: s.coercive,
        };
        Ok(())
    })
}

/// Minimal constant of `|f(t)| <= c exp(-mu t) |f(0)|` for a 2x2 system.
///
/// # Safety
/// `m` must be a live matrix handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hd_sharp_constant(m: *const HdMatrix, out: *mut HdSharp) -> HdStatus {
    guard(|| {
        let c = matrix_ref(m)?;
        let out = out.as_mut().ok_or_else(null)?;
        let r = lift(classify_and_sharp_constant(c))?;
        *out = HdSharp {
            case_: match r.case {
                Case2D::EqualEigenvalues => HD_CASE_EQUAL_EIGENVALUES,
                Case2D::EqualRealParts => HD_CASE_EQUAL_REAL_PARTS,
                Case2D::EqualImaginaryParts => HD_CASE_EQUAL_IMAGINARY_PARTS,
                Case2D::FullyDistinct => HD_CASE_FULLY_DISTINCT,
            },
            alpha: r.alpha,
            c_sharp: r.c_sharp,
            bracket_lo: r.bracket.0,
            bracket_hi: r.bracket.1,
            attained_at: match r.attained {
                Attainment::Finite(t) => t,
                Attainment::Asymptotic => f64::NAN,
            },
            tail_uncertain: r.tail_uncertain,
        };
        Ok(())
    })
}

/// Squared-norm envelopes `h_minus(t) <= |f(t)|^2 / |f(0)|^2 <= h_plus(t)`
/// of a 2x2 system at `len` times.
///
/// # Safety
/// `times`, `h_minus` and `h_plus` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hd_envelope(
    m: *const HdMatrix,
    times: *const f64,
    len: usize,
    h_minus: *mut f64,
    h_plus: *mut f64,
) -> HdStatus {
    guard(|| {
        let c = matrix_ref(m)?;
        if times.is_null() || h_minus.is_null() || h_plus.is_null() {
            return Err(null());
        }
        let times = std::slice::from_raw_parts(times, len);
        let env = lift(envelope_curves(c, times))?;
        std::slice::from_raw_parts_mut(h_minus, len).copy_from_slice(&env.h_minus);
        std::slice::from_raw_parts_mut(h_plus, len).copy_from_slice(&env.h_plus);
        Ok(())
    })
}

/// Constant of the upper (`HD_DIRECTION_UPPER`) or lower bound at `rate`
/// for a 2x2 system.
///
/// # Safety
/// `m` must be a live matrix handle and `constant` writable.
#[no_mangle]
pub unsafe extern "C" fn hd_family_bound(
    m: *const HdMatrix,
    rate: f64,
    direction: i32,
    constant: *mut f64,
) -> HdStatus {
    guard(|| {
        let c = matrix_ref(m)?;
        let constant = constant.as_mut().ok_or_else(null)?;
        let form = lift(eigendecompose(c).and_then(|s| canonical_2d_form(&s)))?;
        let bound = match direction {
            HD_DIRECTION_UPPER => lift(upper_bound_constant(&form, rate))?,
            HD_DIRECTION_LOWER => lift(lower_bound_constant(&form, rate))?,
            d => return Err((HD_INVALID_INPUT, format!("unknown direction {d}"))),
        };
        *constant = bound.constant;
        Ok(())
    })
}

/// Condition number and decay constant of the Goldstein-Taylor mode `k != 0`.
///
/// # Safety
/// `kappa` and `constant` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hd_mode_certificate(k: i64, kappa: *mut f64, constant: *mut f64) -> HdStatus {
    guard(|| {
        let (kappa, constant) = (kappa.as_mut().ok_or_else(null)?, constant.as_mut().ok_or_else(null)?);
        let cert = lift(mode_certificate(k))?;
        *kappa = cert.p.kappa();
        *constant = cert.constant;
        Ok(())
    })
}

/// Message of the last failure on this thread, empty after a success. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn hd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn hd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
