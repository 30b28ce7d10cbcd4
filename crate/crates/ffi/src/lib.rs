//! C ABI over `tangent_monad`.
//!
//! Every fallible call returns a [`TmStatus`]; on anything but `TM_STATUS_OK` or
//! `TM_STATUS_FAILED` the message is available from [`tm_last_error`]. Strings
//! returned through `out_json` parameters are owned by the caller and must be
//! released with [`tm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tangent_monad::algebras::{self, AlgebraMap, SampleConfig};
use tangent_monad::cli::{self, ExampleName};
use tangent_monad::kahler::{self, ComonadConfig};
use tangent_monad::monad::{self, LawConfig};
use tangent_monad::{Backend, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmStatus {
    Ok = 0,
    /// The computation ran but a verified identity did not hold.
    Failed = 1,
    NullPointer = 2,
    InvalidUtf8 = 3,
    Parse = 4,
    InvalidSpec = 5,
    Eval = 6,
    Shape = 7,
    Panic = 8,
    Other = 9,
}

/// Opaque algebra handle.
pub struct TmAlgebra {
    inner: AlgebraMap,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(TmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) => TmStatus::Parse,
            Error::Spec(_) | Error::Json(_) | Error::InvalidChart(_) | Error::InvalidAlgebra(_) => TmStatus::InvalidSpec,
            Error::Eval(_) | Error::Lift(_) | Error::NotRegularRank1(_) => TmStatus::Eval,
            Error::Shape(_) => TmStatus::Shape,
            _ => TmStatus::Other,
        };
        Failure(status, e.to_string())
    }
}

fn run(f: impl FnOnce() -> Result<TmStatus, Failure>) -> TmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Failure(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            TmStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure(TmStatus::NullPointer, "null pointer argument".into())
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(TmStatus::InvalidUtf8, e.to_string()))
}

unsafe fn handle<'a>(h: *const TmAlgebra) -> Result<&'a AlgebraMap, Failure> {
    h.as_ref().map(|a| &a.inner).ok_or_else(null)
}

unsafe fn write_json(out: *mut *mut c_char, value: &impl serde::Serialize) -> Result<(), Failure> {
    if out.is_null() {
        return Ok(());
    }
    let text = serde_json::to_string(value).map_err(|e| Failure(TmStatus::Other, e.to_string()))?;
    *out = CString::new(text).map_err(|e| Failure(TmStatus::Other, e.to_string()))?.into_raw();
    Ok(())
}

fn verdict(passed: bool) -> TmStatus {
    if passed {
        TmStatus::Ok
    } else {
        TmStatus::Failed
    }
}

/// Message of the last error on this thread, or NULL. Valid until the next
/// call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn tm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds an algebra from a JSON spec (closed-form chart, or rank-1 flow
/// with an `"X"` key).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tm_algebra_from_json(json: *const c_char, out: *mut *mut TmAlgebra) -> TmStatus {
    run(|| {
        if out.is_null() {
            return Err(null());
        }
        let inner = cli::parse_algebra(read_str(json)?)?;
        *out = Box::into_raw(Box::new(TmAlgebra { inner }));
        Ok(TmStatus::Ok)
    })
}

/// Builds a named example: `cylinder`, `torus`, `radial`, `rotation`,
/// `free` or `trivial`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tm_algebra_example(name: *const c_char, out: *mut *mut TmAlgebra) -> TmStatus {
    run(|| {
        if out.is_null() {
            return Err(null());
        }
        let name = read_str(name)?;
        let which: ExampleName = name.parse().map_err(|e| Failure(TmStatus::InvalidSpec, e))?;
        let spec = cli::example_spec(which)?;
        let inner = cli::parse_algebra(&spec.to_string())?;
        *out = Box::into_raw(Box::new(TmAlgebra { inner }));
        Ok(TmStatus::Ok)
    })
}

/// # Safety
/// `h` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tm_algebra_free(h: *mut TmAlgebra) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Base dimension, or 0 for a NULL handle.
///
/// # Safety
/// `h` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tm_algebra_dim(h: *const TmAlgebra) -> usize {
    h.as_ref().map_or(0, |a| a.inner.dim())
}

/// `out = h(x, v)`; all arrays have `n = dim` entries.
///
/// # Safety
/// `x`, `v` and `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn tm_algebra_apply(h: *const TmAlgebra, x: *const f64, v: *const f64, n: usize, out: *mut f64) -> TmStatus {
    run(|| {
        let h = handle(h)?;
        if x.is_null() || v.is_null() || out.is_null() {
            return Err(null());
        }
        if n != h.dim() {
            return Err(Failure(TmStatus::Shape, format!("expected {} coordinates, got {n}", h.dim())));
        }
        let x = std::slice::from_raw_parts(x, n);
        let v = std::slice::from_raw_parts(v, n);
        let y = h.apply(x, v).map_err(Error::from)?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&y);
        Ok(TmStatus::Ok)
    })
}

/// Rank of the associated endomorphism at `x`.
///
/// # Safety
/// `x` must point to `n` doubles and `rank` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tm_algebra_rank_at(h: *const TmAlgebra, x: *const f64, n: usize, rank: *mut usize) -> TmStatus {
    run(|| {
        let h = handle(h)?;
        if x.is_null() || rank.is_null() {
            return Err(null());
        }
        if n != h.dim() {
            return Err(Failure(TmStatus::Shape, format!("expected {} coordinates, got {n}", h.dim())));
        }
        *rank = algebras::rank_at(h, std::slice::from_raw_parts(x, n))?;
        Ok(TmStatus::Ok)
    })
}

/// Axioms and derived identities; `TM_STATUS_FAILED` when any check fails. The
/// reports are written to `out_json` when it is not NULL.
///
/// # Safety
/// `h` must be a live handle; `out_json` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn tm_algebra_check(h: *const TmAlgebra, samples: usize, seed: u64, out_json: *mut *mut c_char) -> TmStatus {
    run(|| {
        let h = handle(h)?;
        let reports = cli::check_algebra(h, &SampleConfig::new(samples, seed))?;
        write_json(out_json, &reports)?;
        Ok(verdict(reports.iter().all(|r| r.passed)))
    })
}

/// Monad laws in dimension `dim`; `rational` selects exact arithmetic.
///
/// # Safety
/// `out_json` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn tm_verify_monad(dim: usize, samples: usize, seed: u64, rational: bool, out_json: *mut *mut c_char) -> TmStatus {
    run(|| {
        let backend = if rational { Backend::Rational } else { Backend::Float };
        let cfg = LawConfig::new(dim, samples, seed, backend);
        let r = monad::verify_monad_laws(&cfg, &monad::default_panel(dim, backend))?;
        write_json(out_json, &r)?;
        Ok(verdict(r.passed))
    })
}

/// Comonad laws on `ℚ[X₁..X_vars]`.
///
/// # Safety
/// `out_json` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn tm_kahler_verify(vars: usize, seed: u64, out_json: *mut *mut c_char) -> TmStatus {
    run(|| {
        let mut cfg = ComonadConfig::new(vars);
        cfg.seed = seed;
        let r = kahler::verify_comonad(&cfg)?;
        write_json(out_json, &r)?;
        Ok(verdict(r.passed))
    })
}
