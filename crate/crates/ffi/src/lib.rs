//! C ABI for corrkit.
//!
//! Objects cross the boundary as opaque handles made by the `*_from_json`
//! and `*_new` functions and released by the matching `*_free`. Fallible
//! functions return a [`CkStatus`]; the message of the last failure on the
//! calling thread is available from [`ck_last_error`]. Strings returned by
//! the library are freed with [`ck_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use corrkit::doc::{self, DocError};
use corrkit::economy::{
    equilibrium_via_approximation, equilibrium_via_selection, halving_schedule, AbstractEconomy,
    EconomyError, EquilibriumOptions,
};
use corrkit::grid::GridSpec;
use corrkit::properties::{falsify_lsc, falsify_usc, Counterexample, PropertyError};
use corrkit::setvalue::{Correspondence, PiecewiseCorrespondence};
use corrkit::simplex::Simplex;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    SchemaError = 4,
    InvalidArgument = 5,
    /// The computation ran but found no solution (e.g. no equilibrium
    /// within tolerance).
    NoSolution = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

/// Equilibrium search method for [`ck_economy_equilibrium`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CkMethod {
    Selection = 0,
    Approximation = 1,
}

/// A piecewise-constant correspondence.
pub struct CkCorrespondence(PiecewiseCorrespondence);

/// A simplex given by its vertices.
pub struct CkSimplex(Simplex);

/// An abstract economy.
pub struct CkEconomy(AbstractEconomy);

struct Failure {
    status: CkStatus,
    message: String,
}

impl Failure {
    fn new(status: CkStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<DocError> for Failure {
    fn from(e: DocError) -> Self {
        let status = match e {
            DocError::ParseError { .. } => CkStatus::ParseError,
            DocError::Io { .. } => CkStatus::InvalidArgument,
            _ => CkStatus::SchemaError,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<PropertyError> for Failure {
    fn from(e: PropertyError) -> Self {
        Failure::new(CkStatus::InvalidArgument, e.to_string())
    }
}

impl From<EconomyError> for Failure {
    fn from(e: EconomyError) -> Self {
        let status = match e {
            EconomyError::WNotProper { .. }
            | EconomyError::WitnessRejected { .. }
            | EconomyError::NoFixedPointWithinTolerance { .. }
            | EconomyError::CertificateFailed { .. }
            | EconomyError::IterateEscapedQ { .. }
            | EconomyError::NestingFailed { .. }
            | EconomyError::LimitCheckFailed { .. } => CkStatus::NoSolution,
            _ => CkStatus::InvalidArgument,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, records its failure message and turns panics into
/// `CkStatus::Internal`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            CkStatus::Ok
        }
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(_) => {
            set_last_error("internal panic");
            CkStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(CkStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(CkStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(CkStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(CkStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(CkStatus::NullPointer, format!("{name} is null")))
}

/// Copies `values` into `(out, cap)` and stores the length in `len` when
/// given; fails with `BufferTooSmall` after storing the length.
unsafe fn write_values(values: &[f64], out: *mut f64, cap: usize, len: *mut usize) -> Result<(), Failure> {
    if let Some(l) = len.as_mut() {
        *l = values.len();
    }
    if values.len() > cap {
        return Err(Failure::new(
            CkStatus::BufferTooSmall,
            format!("{} values do not fit in a buffer of {cap}", values.len()),
        ));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(Failure::new(CkStatus::NullPointer, "output buffer is null"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn ck_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; empty after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn ck_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Frees a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ck_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a correspondence document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ck_correspondence_from_json(
    json: *const c_char,
    out: *mut *mut CkCorrespondence,
) -> CkStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let d = doc::parse_str(str_arg(json, "json")?)?;
        let t = d.as_correspondence()?.clone();
        *out = Box::into_raw(Box::new(CkCorrespondence(t)));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`ck_correspondence_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ck_correspondence_free(h: *mut CkCorrespondence) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Dimension of the domain, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ck_correspondence_dim(h: *const CkCorrespondence) -> usize {
    h.as_ref().map_or(0, |c| c.0.dim())
}

/// Stores whether `y ∈ T(x)` in `out`.
///
/// # Safety
/// `h` must be a live handle, `x` must point to `n` doubles and `out` must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn ck_correspondence_contains(
    h: *const CkCorrespondence,
    x: *const f64,
    n: usize,
    y: f64,
    out: *mut bool,
) -> CkStatus {
    guard(|| {
        let t = handle(h, "handle")?;
        let out = out_arg(out, "out")?;
        let v = t
            .0
            .value_at(slice_arg(x, n, "x")?)
            .map_err(|e| Failure::new(CkStatus::InvalidArgument, e.to_string()))?;
        *out = v.contains(y);
        Ok(())
    })
}

type Falsifier = fn(&dyn Correspondence, &GridSpec) -> Result<Option<Counterexample>, PropertyError>;

unsafe fn run_falsifier(
    f: Falsifier,
    h: *const CkCorrespondence,
    grid: usize,
    found: *mut bool,
    location: *mut f64,
    cap: usize,
) -> CkStatus {
    guard(|| {
        let t = handle(h, "handle")?;
        let found = out_arg(found, "found")?;
        let spec = GridSpec::with_resolution(grid);
        match f(&t.0, &spec)? {
            Some(c) => {
                *found = true;
                write_values(&c.location, location, cap, ptr::null_mut())
            }
            None => {
                *found = false;
                Ok(())
            }
        }
    })
}

/// Searches for an upper semicontinuity violation on a grid of `grid`
/// points per axis. On a hit `found` is set and the location is written to
/// `location` (capacity `cap`, at least the domain dimension).
///
/// # Safety
/// `h` must be a live handle, `found` valid and `location` writable for
/// `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ck_check_usc(
    h: *const CkCorrespondence,
    grid: usize,
    found: *mut bool,
    location: *mut f64,
    cap: usize,
) -> CkStatus {
    run_falsifier(falsify_usc, h, grid, found, location, cap)
}

/// As [`ck_check_usc`], for lower semicontinuity.
///
/// # Safety
/// See [`ck_check_usc`].
#[no_mangle]
pub unsafe extern "C" fn ck_check_lsc(
    h: *const CkCorrespondence,
    grid: usize,
    found: *mut bool,
    location: *mut f64,
    cap: usize,
) -> CkStatus {
    run_falsifier(falsify_lsc, h, grid, found, location, cap)
}

/// Builds a simplex from `count` vertices of dimension `dim`, stored row by
/// row in `vertices`.
///
/// # Safety
/// `vertices` must point to `count * dim` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ck_simplex_new(
    vertices: *const f64,
    count: usize,
    dim: usize,
    out: *mut *mut CkSimplex,
) -> CkStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let total = count
            .checked_mul(dim)
            .ok_or_else(|| Failure::new(CkStatus::InvalidArgument, "size overflow"))?;
        let flat = slice_arg(vertices, total, "vertices")?;
        let rows = if dim == 0 {
            vec![Vec::new(); count]
        } else {
            flat.chunks(dim).map(<[f64]>::to_vec).collect()
        };
        let k = Simplex::new(rows).map_err(|e| Failure::new(CkStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(CkSimplex(k)));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`ck_simplex_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ck_simplex_free(h: *mut CkSimplex) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Barycentric coordinates of `x` (length `dim`), one per vertex, written
/// to `weights` (capacity `cap`).
///
/// # Safety
/// `h` must be a live handle, `x` readable for `dim` doubles and `weights`
/// writable for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ck_simplex_barycentric(
    h: *const CkSimplex,
    x: *const f64,
    dim: usize,
    weights: *mut f64,
    cap: usize,
) -> CkStatus {
    guard(|| {
        let k = handle(h, "handle")?;
        let l = k
            .0
            .barycentric(slice_arg(x, dim, "x")?)
            .map_err(|e| Failure::new(CkStatus::InvalidArgument, e.to_string()))?;
        write_values(l.weights(), weights, cap, ptr::null_mut())
    })
}

/// Parses an economy document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ck_economy_from_json(json: *const c_char, out: *mut *mut CkEconomy) -> CkStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let d = doc::parse_str(str_arg(json, "json")?)?;
        let e = d.as_economy()?.clone();
        *out = Box::into_raw(Box::new(CkEconomy(e)));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`ck_economy_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ck_economy_free(h: *mut CkEconomy) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Computes a certified equilibrium with tolerance `tol` (the approximation
/// method uses the schedule 0.1 halved twelve times) and writes it to
/// `point` (capacity `cap`); the number of agents goes to `len`.
///
/// # Safety
/// `h` must be a live handle, `point` writable for `cap` doubles and `len`
/// null or valid.
#[no_mangle]
pub unsafe extern "C" fn ck_economy_equilibrium(
    h: *const CkEconomy,
    method: CkMethod,
    tol: f64,
    point: *mut f64,
    cap: usize,
    len: *mut usize,
) -> CkStatus {
    guard(|| {
        let econ = handle(h, "handle")?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Failure::new(CkStatus::InvalidArgument, format!("invalid tolerance {tol}")));
        }
        let opts = EquilibriumOptions {
            tol,
            ..EquilibriumOptions::default()
        };
        let cert = match method {
            CkMethod::Selection => equilibrium_via_selection(&econ.0, &opts)?,
            CkMethod::Approximation => equilibrium_via_approximation(&econ.0, &halving_schedule(0.1, 12), &opts)?,
        };
        write_values(&cert.point, point, cap, len)
    })
}

/// Runs a command-line command on in-memory documents: `inputs_json` is a
/// JSON array of documents and `options_json` (nullable) an options object.
/// The report is returned in `report` (free with [`ck_string_free`]) and
/// the command's exit code in `exit_code`. A command that runs but reports
/// a failure still returns `Ok`.
///
/// # Safety
/// String arguments must be NUL-terminated; `report` and `exit_code` must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn ck_run(
    command: *const c_char,
    inputs_json: *const c_char,
    options_json: *const c_char,
    report: *mut *mut c_char,
    exit_code: *mut c_int,
) -> CkStatus {
    guard(|| {
        let report = out_arg(report, "report")?;
        let exit_code = out_arg(exit_code, "exit_code")?;
        let name = str_arg(command, "command")?;
        if !corrkit::cli::COMMANDS.contains(&name) {
            return Err(Failure::new(CkStatus::InvalidArgument, format!("unknown command {name:?}")));
        }
        let inputs: Vec<serde_json::Value> = serde_json::from_str(str_arg(inputs_json, "inputs_json")?)
            .map_err(|e| Failure::new(CkStatus::ParseError, e.to_string()))?;
        let docs = inputs
            .into_iter()
            .map(doc::from_value)
            .collect::<Result<Vec<_>, _>>()?;
        let opts: corrkit::cli::Options = if options_json.is_null() {
            Default::default()
        } else {
            serde_json::from_str(str_arg(options_json, "options_json")?)
                .map_err(|e| Failure::new(CkStatus::SchemaError, e.to_string()))?
        };
        let outcome = corrkit::cli::execute_documents(name, docs, &opts);
        *exit_code = outcome.exit_code();
        *report = into_c_string(outcome.report.to_json());
        Ok(())
    })
}
