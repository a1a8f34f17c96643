//! C ABI for the plancheck library: opaque curve handles, frame and
//! admissibility queries, the hollow decomposition dump, and the batch
//! driver, all returning integer status codes. Strings and buffers returned
//! by these functions are owned by the library and must be released with
//! `plancheck_string_free`.

use plancheck::config::parse_config;
use plancheck::curve::{parse_curve, PolyCurve};
use plancheck::frame::frenet_frame;
use plancheck::hollow::hollow_decompose;
use plancheck::plank::enumerate_admissible;
use plancheck::report::hollow_csv;
use plancheck::runner::dispatch;
use plancheck::scale::Scale;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

/// Status codes shared by every entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum PlancheckStatus {
    Ok = 0,
    InvalidArgument = 1,
    ParseError = 2,
    DomainError = 3,
    Degenerate = 4,
    GateFailed = 5,
    InternalError = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &plancheck::Error) -> PlancheckStatus {
    match err {
        plancheck::Error::Domain(_) => PlancheckStatus::DomainError,
        plancheck::Error::Degenerate(_) => PlancheckStatus::Degenerate,
        plancheck::Error::Invalid(_) => PlancheckStatus::InvalidArgument,
        plancheck::Error::Parse(_) => PlancheckStatus::ParseError,
        plancheck::Error::GateFailed(_) => PlancheckStatus::GateFailed,
        plancheck::Error::Io(_) => PlancheckStatus::InternalError,
    }
}

/// Opaque curve handle.
pub struct PlancheckCurve {
    inner: PolyCurve,
}

/// Last error message for this thread; valid until the next failing call.
#[no_mangle]
pub extern "C" fn plancheck_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version string (static storage, do not free).
#[no_mangle]
pub extern "C" fn plancheck_version() -> *const c_char {
    concat!("plancheck ", env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// The model moment curve in dimension n (2..=5). Returns null on error.
#[no_mangle]
pub extern "C" fn plancheck_curve_model(n: usize) -> *mut PlancheckCurve {
    if !(2..=5).contains(&n) {
        set_error("curve dimension must be in 2..=5");
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(PlancheckCurve { inner: PolyCurve::model(n) }))
}

/// Parse a curve definition file (text format). Returns null on error.
///
/// # Safety
/// `text` must be a valid NUL-terminated C string.
#[no_mangle]
pub unsafe extern "C" fn plancheck_curve_parse(text: *const c_char) -> *mut PlancheckCurve {
    if text.is_null() {
        set_error("null curve text");
        return std::ptr::null_mut();
    }
    let s = match CStr::from_ptr(text).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("curve text is not valid UTF-8");
            return std::ptr::null_mut();
        }
    };
    match parse_curve(s).and_then(|c| {
        c.validate()?;
        Ok(c)
    }) {
        Ok(c) => Box::into_raw(Box::new(PlancheckCurve { inner: c })),
        Err(e) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Release a curve handle.
///
/// # Safety
/// `curve` must come from `plancheck_curve_model`/`plancheck_curve_parse`
/// and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn plancheck_curve_free(curve: *mut PlancheckCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Curve dimension of a handle (0 on null).
///
/// # Safety
/// `curve` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn plancheck_curve_dim(curve: *const PlancheckCurve) -> usize {
    if curve.is_null() {
        return 0;
    }
    (*curve).inner.dim
}

/// j-th derivative at s written into `out` (length >= dim).
///
/// # Safety
/// `curve` must be a live handle and `out` must point to at least `dim`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn plancheck_curve_eval_derivative(
    curve: *const PlancheckCurve,
    s: f64,
    order: usize,
    out: *mut f64,
) -> PlancheckStatus {
    if curve.is_null() || out.is_null() {
        set_error("null argument");
        return PlancheckStatus::InvalidArgument;
    }
    match (*curve).inner.eval_derivative(s, order) {
        Ok(v) => {
            std::ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
            PlancheckStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Nondegeneracy margin over equispaced samples.
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn plancheck_curve_nondegeneracy(
    curve: *const PlancheckCurve,
    samples: usize,
    out: *mut f64,
) -> PlancheckStatus {
    if curve.is_null() || out.is_null() || samples < 2 {
        set_error("need a curve handle, an output slot and samples >= 2");
        return PlancheckStatus::InvalidArgument;
    }
    *out = (*curve).inner.nondegeneracy_margin(samples);
    PlancheckStatus::Ok
}

/// Frenet frame at s: writes the m x m row-major basis into `vectors`
/// (length >= m*m) and the m-1 curvatures into `kappas`, where m = dim for
/// the curve frame and dim+1 with `cone` set.
///
/// # Safety
/// `curve` must be a live handle; `vectors` and `kappas` must have the
/// documented capacities.
#[no_mangle]
pub unsafe extern "C" fn plancheck_frenet_frame(
    curve: *const PlancheckCurve,
    s: f64,
    cone: bool,
    vectors: *mut f64,
    kappas: *mut f64,
) -> PlancheckStatus {
    if curve.is_null() || vectors.is_null() || kappas.is_null() {
        set_error("null argument");
        return PlancheckStatus::InvalidArgument;
    }
    match frenet_frame(&(*curve).inner, s, cone) {
        Ok(f) => {
            let m = f.dim();
            for (i, row) in f.vectors.iter().enumerate() {
                std::ptr::copy_nonoverlapping(row.as_ptr(), vectors.add(i * m), m);
            }
            std::ptr::copy_nonoverlapping(f.kappas.as_ptr(), kappas, m - 1);
            PlancheckStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Number of admissible delta-tuples at scale R = 2^log2_r.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn plancheck_admissible_count(
    n: usize,
    log2_r: i64,
    out: *mut usize,
) -> PlancheckStatus {
    if out.is_null() {
        set_error("null output");
        return PlancheckStatus::InvalidArgument;
    }
    match enumerate_admissible(n, Scale::pow2(log2_r)) {
        Ok(v) => {
            *out = v.len();
            PlancheckStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Hollow decomposition dump as a CSV string (free with
/// `plancheck_string_free`). Null on error.
#[no_mangle]
pub extern "C" fn plancheck_hollow_csv(n: usize, log2_r: i64) -> *mut c_char {
    match hollow_decompose(n, Scale::pow2(log2_r)) {
        Ok(d) => match CString::new(hollow_csv(&d)) {
            Ok(c) => c.into_raw(),
            Err(_) => {
                set_error("interior NUL in csv");
                std::ptr::null_mut()
            }
        },
        Err(e) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Run a batch command from a flat `key = value` configuration string.
/// Returns the process-style exit status through `exit_code` (0 ok,
/// 2 gate failure).
///
/// # Safety
/// `config_text` must be a valid NUL-terminated C string; `exit_code` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn plancheck_run(
    config_text: *const c_char,
    exit_code: *mut i32,
) -> PlancheckStatus {
    if config_text.is_null() || exit_code.is_null() {
        set_error("null argument");
        return PlancheckStatus::InvalidArgument;
    }
    let text = match CStr::from_ptr(config_text).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("config text is not valid UTF-8");
            return PlancheckStatus::ParseError;
        }
    };
    let cfg = match parse_config(text) {
        Ok(c) => c,
        Err(e) => {
            set_error(&e.to_string());
            return PlancheckStatus::ParseError;
        }
    };
    match dispatch(&cfg) {
        Ok(code) => {
            *exit_code = code;
            PlancheckStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a plancheck function and not freed yet.
#[no_mangle]
pub unsafe extern "C" fn plancheck_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
