//! C ABI over `semifix`.
//!
//! Every fallible call returns a [`SemifixStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`semifix_last_error_message`] until the next call on the same thread.
//! Unbounded constants are reported as `+INFINITY`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use semifix::contractions::{applicability, step_ratio, ApplicabilityContext, ContractionSpec, StepRatio};
use semifix::finitelab::classify;
use semifix::spaces::{FiniteSpace, FiniteSpaceFile, SelfMap, SpaceFlags};
use semifix::triangle::{c_alpha, make_builtin, psi_inverse, ExtReal, Family, TriangleFunction};
use semifix::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SemifixStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Domain = 3,
    Format = 4,
    NotApplicable = 5,
    Utf8 = 6,
    Panic = 7,
    Other = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SemifixFamily {
    Sum = 0,
    Max = 1,
    ScaledSum = 2,
    Power = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SemifixContraction {
    Banach = 0,
    Kannan = 1,
    Chatterjea = 2,
    Crr = 3,
    Perimeter = 4,
}

/// Opaque triangle function.
pub struct SemifixTriangle(TriangleFunction);

/// Opaque finite space with its optional self-map.
pub struct SemifixFiniteSpace {
    space: FiniteSpace,
    map: Option<SelfMap>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SemifixStatus {
    match e {
        Error::InvalidParameter(_) | Error::TooFewPoints(_) => SemifixStatus::InvalidParameter,
        Error::Domain(_) | Error::DivisionByZero => SemifixStatus::Domain,
        Error::Format(_) | Error::Json(_) | Error::MapOutOfRange { .. } => SemifixStatus::Format,
        Error::NotApplicable(_) => SemifixStatus::NotApplicable,
        _ => SemifixStatus::Other,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F>(f: F) -> SemifixStatus
where
    F: FnOnce() -> Result<(), (SemifixStatus, String)>,
{
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SemifixStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SemifixStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SemifixStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SemifixStatus, String) {
    (SemifixStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SemifixStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), (SemifixStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

fn ext(v: ExtReal) -> f64 {
    v.finite().unwrap_or(f64::INFINITY)
}

fn spec_of(kind: SemifixContraction, alpha: f64, beta: f64, gamma: f64) -> Result<ContractionSpec, Error> {
    match kind {
        SemifixContraction::Banach => ContractionSpec::banach(alpha),
        SemifixContraction::Kannan => ContractionSpec::kannan(beta),
        SemifixContraction::Chatterjea => ContractionSpec::chatterjea(beta),
        SemifixContraction::Crr => ContractionSpec::crr(alpha, beta, gamma),
        SemifixContraction::Perimeter => ContractionSpec::perimeter(alpha),
    }
}

/// Creates a builtin triangle function. `param` is `K` for scaled sums,
/// `q` for powers, and ignored otherwise.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn semifix_triangle_new(
    family: SemifixFamily,
    param: f64,
    out: *mut *mut SemifixTriangle,
) -> SemifixStatus {
    guard(|| {
        let family = match family {
            SemifixFamily::Sum => Family::Sum,
            SemifixFamily::Max => Family::Max,
            SemifixFamily::ScaledSum => Family::ScaledSum,
            SemifixFamily::Power => Family::Power,
        };
        let tf = make_builtin(family, Some(param)).map_err(lib_err)?;
        write(out, Box::into_raw(Box::new(SemifixTriangle(tf))), "out")
    })
}

/// # Safety
/// `tf` must come from [`semifix_triangle_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn semifix_triangle_free(tf: *mut SemifixTriangle) {
    if !tf.is_null() {
        drop(Box::from_raw(tf));
    }
}

/// # Safety
/// `tf` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn semifix_triangle_eval(
    tf: *const SemifixTriangle,
    u: f64,
    v: f64,
    out: *mut f64,
) -> SemifixStatus {
    guard(|| {
        let tf = deref(tf, "tf")?;
        write(out, tf.0.eval(u, v).map_err(lib_err)?, "out")
    })
}

/// `C(alpha)`; `p_cap = 0` selects the default depth.
///
/// # Safety
/// `tf` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn semifix_c_alpha(
    tf: *const SemifixTriangle,
    alpha: f64,
    p_cap: u32,
    out: *mut f64,
) -> SemifixStatus {
    guard(|| {
        let tf = deref(tf, "tf")?;
        let cap = if p_cap == 0 { semifix::triangle::DEFAULT_P_CAP } else { p_cap };
        let v = c_alpha(&tf.0, alpha, cap).map_err(lib_err)?;
        write(out, ext(v.value), "out")
    })
}

/// # Safety
/// `tf` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn semifix_psi_inverse(
    tf: *const SemifixTriangle,
    tau: f64,
    out: *mut f64,
) -> SemifixStatus {
    guard(|| {
        let tf = deref(tf, "tf")?;
        write(out, ext(psi_inverse(&tf.0, tau).map_err(lib_err)?), "out")
    })
}

/// Per-step ratio of a contraction; `+INFINITY` when infeasible. Unused
/// coefficients are ignored.
///
/// # Safety
/// `tf` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn semifix_step_ratio(
    tf: *const SemifixTriangle,
    kind: SemifixContraction,
    alpha: f64,
    beta: f64,
    gamma: f64,
    out: *mut f64,
) -> SemifixStatus {
    guard(|| {
        let tf = deref(tf, "tf")?;
        let spec = spec_of(kind, alpha, beta, gamma).map_err(lib_err)?;
        let r = match step_ratio(&spec, &tf.0).map_err(lib_err)? {
            StepRatio::Ratio(r) => r,
            StepRatio::Infeasible => f64::INFINITY,
        };
        write(out, r, "out")
    })
}

/// Condition ledger for a contraction on a complete space with a
/// continuous semimetric, as a JSON string to release with
/// [`semifix_string_free`]. `applicable` receives the verdict.
///
/// # Safety
/// `tf` must be a live handle; `applicable` and `json_out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn semifix_applicability_json(
    tf: *const SemifixTriangle,
    kind: SemifixContraction,
    alpha: f64,
    beta: f64,
    gamma: f64,
    applicable: *mut bool,
    json_out: *mut *mut c_char,
) -> SemifixStatus {
    guard(|| {
        let tf = deref(tf, "tf")?;
        let spec = spec_of(kind, alpha, beta, gamma).map_err(lib_err)?;
        let a = applicability(&spec, &tf.0, &ApplicabilityContext::from_flags(SpaceFlags::ALL));
        let json = serde_json::to_string(&a).map_err(|e| lib_err(e.into()))?;
        write(applicable, a.applicable, "applicable")?;
        write(json_out, into_c_string(json), "json_out")
    })
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no interior nul").into_raw()
}

/// Parses a finite-space JSON document (`labels`, `d`, `phi`, optional
/// `map` and `flags`).
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn semifix_finite_space_from_json(
    json: *const c_char,
    out: *mut *mut SemifixFiniteSpace,
) -> SemifixStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (SemifixStatus::Utf8, e.to_string()))?;
        let file: FiniteSpaceFile = serde_json::from_str(text).map_err(|e| lib_err(e.into()))?;
        let (space, map) = file.into_space().map_err(lib_err)?;
        write(out, Box::into_raw(Box::new(SemifixFiniteSpace { space, map })), "out")
    })
}

/// # Safety
/// `fs` must come from [`semifix_finite_space_from_json`] and not be freed
/// twice.
#[no_mangle]
pub unsafe extern "C" fn semifix_finite_space_free(fs: *mut SemifixFiniteSpace) {
    if !fs.is_null() {
        drop(Box::from_raw(fs));
    }
}

/// # Safety
/// `fs` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn semifix_finite_space_size(
    fs: *const SemifixFiniteSpace,
    out: *mut usize,
) -> SemifixStatus {
    guard(|| write(out, deref(fs, "fs")?.space.n(), "out"))
}

/// Full classification report as JSON; the space must carry a map.
///
/// # Safety
/// `fs` must be a live handle; `json_out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn semifix_classify_json(
    fs: *const SemifixFiniteSpace,
    json_out: *mut *mut c_char,
) -> SemifixStatus {
    guard(|| {
        let fs = deref(fs, "fs")?;
        let map = fs
            .map
            .as_ref()
            .ok_or_else(|| (SemifixStatus::Format, "the space has no map".to_owned()))?;
        let report = classify(&fs.space, map).map_err(lib_err)?;
        let json = serde_json::to_string(&report).map_err(|e| lib_err(e.into()))?;
        write(json_out, into_c_string(json), "json_out")
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn semifix_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn semifix_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn semifix_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
