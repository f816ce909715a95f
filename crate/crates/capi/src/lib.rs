//! C ABI over the core library: opaque handles for grids, weights and
//! experiment reports, integer status codes, and a thread-local
//! last-error message.  `include/grale.h` is generated by cbindgen at
//! build time and checked in.
//!
//! Conventions: every function is guarded against panics; output
//! parameters are written only on `Ok`; returned strings are owned by
//! their handle and stay valid until the handle is freed.  A legitimately
//! infinite quantity (a divergent seminorm, a weight off its support)
//! comes back as `INFINITY` with status `Ok`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use grale::config::{ExperimentConfig, ExperimentKind};
use grale::grid::{modulus_of_continuity, FractionalIndex, GridFunction};
use grale::norms::{gagliardo_seminorm_nd, grand_lebesgue_norm, lp_norm, SeminormConfig};
use grale::psi::text::psi_from_text;
use grale::psi::PsiFunction;
use grale::runner;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraleStatus {
    Ok = 0,
    /// a required pointer argument was null
    NullPointer = 1,
    /// a parameter was out of range or inconsistent
    InvalidArgument = 2,
    /// malformed text input (weight document, config, experiment name)
    ParseError = 3,
    /// the operation is not available for this input shape
    Unsupported = 4,
    /// unexpected internal failure; see the last-error message
    Internal = 5,
}

/// Lattice function handle.
pub struct GraleGrid {
    inner: GridFunction,
}

/// Exponent weight handle.
pub struct GraleWeight {
    inner: PsiFunction,
}

/// Finished experiment run: verdict plus rendered artifacts.
pub struct GraleReport {
    passed: bool,
    summary: CString,
    csv: CString,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let clean: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(clean).unwrap_or_default();
    });
}

fn fail(status: GraleStatus, msg: &str) -> GraleStatus {
    set_last_error(msg);
    status
}

fn status_of(err: &grale::Error) -> GraleStatus {
    use grale::Error as E;
    match err {
        E::Parse(_) => GraleStatus::ParseError,
        E::Io(_) => GraleStatus::Internal,
        E::BadDimension { .. } | E::LatticeTooLarge { .. } => GraleStatus::Unsupported,
        _ => GraleStatus::InvalidArgument,
    }
}

fn fail_with(err: &grale::Error) -> GraleStatus {
    fail(status_of(err), &err.to_string())
}

fn guarded(f: impl FnOnce() -> GraleStatus) -> GraleStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(GraleStatus::Internal, "internal panic"),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn grale_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the current thread's last error message into `buf` (at most
/// `cap - 1` bytes plus a NUL) and returns the full message length in
/// bytes, excluding the NUL.  With `cap` zero or `buf` null nothing is
/// written and only the length is reported.
///
/// # Safety
/// `buf` must be null or point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn grale_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds a lattice function from row-major samples: `n` nodes per axis in
/// `d` dimensions (`d` is 1 or 2), `len` must equal `n` for a line and
/// `n * n` for a plane.  `width` is the physical extent of the first axis;
/// planar grids are always on the unit square (pass 1.0).
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be a valid
/// pointer.  The handle written to `out` must be released with
/// [`grale_grid_free`].
#[no_mangle]
pub unsafe extern "C" fn grale_grid_from_values(
    d: usize,
    n: usize,
    width: f64,
    values: *const f64,
    len: usize,
    out: *mut *mut GraleGrid,
) -> GraleStatus {
    if out.is_null() || values.is_null() {
        return fail(GraleStatus::NullPointer, "null pointer argument");
    }
    let vals = std::slice::from_raw_parts(values, len).to_vec();
    guarded(|| match GridFunction::from_values(d, n, width, vals) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(GraleGrid { inner: g }));
            GraleStatus::Ok
        }
        Err(e) => fail_with(&e),
    })
}

/// Releases a grid handle.  Null is ignored.
///
/// # Safety
/// `g` must be null or a pointer obtained from [`grale_grid_from_values`]
/// that has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn grale_grid_free(g: *mut GraleGrid) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Reports the grid's dimension and nodes per axis.
///
/// # Safety
/// `g` must be a live grid handle; output pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn grale_grid_shape(
    g: *const GraleGrid,
    out_d: *mut usize,
    out_n: *mut usize,
) -> GraleStatus {
    let Some(grid) = g.as_ref() else {
        return fail(GraleStatus::NullPointer, "null grid handle");
    };
    if !out_d.is_null() {
        *out_d = grid.inner.d();
    }
    if !out_n.is_null() {
        *out_n = grid.inner.n();
    }
    GraleStatus::Ok
}

/// Lebesgue norm of the grid at exponent `p >= 1`.
///
/// # Safety
/// `g` must be a live grid handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn grale_lp_norm(
    g: *const GraleGrid,
    p: f64,
    out: *mut f64,
) -> GraleStatus {
    let Some(grid) = g.as_ref() else {
        return fail(GraleStatus::NullPointer, "null grid handle");
    };
    if out.is_null() {
        return fail(GraleStatus::NullPointer, "null output pointer");
    }
    guarded(|| match lp_norm(&grid.inner, p) {
        Ok(v) => {
            *out = v;
            GraleStatus::Ok
        }
        Err(e) => fail_with(&e),
    })
}

/// Modulus of continuity of a line grid at distance `delta`.
///
/// # Safety
/// `g` must be a live grid handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn grale_modulus(
    g: *const GraleGrid,
    delta: f64,
    out: *mut f64,
) -> GraleStatus {
    let Some(grid) = g.as_ref() else {
        return fail(GraleStatus::NullPointer, "null grid handle");
    };
    if out.is_null() {
        return fail(GraleStatus::NullPointer, "null output pointer");
    }
    guarded(|| match modulus_of_continuity(&grid.inner, delta) {
        Ok(v) => {
            *out = v;
            GraleStatus::Ok
        }
        Err(e) => fail_with(&e),
    })
}

/// Fractional seminorm of the grid at per-axis orders `alpha` (length
/// `alpha_len`, matching the grid dimension) and exponent `p`.  A
/// divergent seminorm is reported as `INFINITY` with status `Ok`.
///
/// # Safety
/// `g` must be a live grid handle; `alpha` must point to `alpha_len`
/// readable doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn grale_seminorm(
    g: *const GraleGrid,
    alpha: *const f64,
    alpha_len: usize,
    p: f64,
    out: *mut f64,
) -> GraleStatus {
    let Some(grid) = g.as_ref() else {
        return fail(GraleStatus::NullPointer, "null grid handle");
    };
    if alpha.is_null() || out.is_null() {
        return fail(GraleStatus::NullPointer, "null pointer argument");
    }
    let orders = std::slice::from_raw_parts(alpha, alpha_len).to_vec();
    guarded(|| {
        let ix = match FractionalIndex::new(orders.clone()) {
            Ok(ix) => ix,
            Err(e) => return fail_with(&e),
        };
        match gagliardo_seminorm_nd(&grid.inner, &ix, p, &SeminormConfig::default()) {
            Ok(s) => {
                *out = s.value_or_infinite();
                GraleStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Parses a weight from its TOML family document, for example
/// `family = "power"` with `beta`, `lower`, `upper` keys.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be a valid pointer.
/// The handle written to `out` must be released with
/// [`grale_weight_free`].
#[no_mangle]
pub unsafe extern "C" fn grale_weight_from_text(
    text: *const c_char,
    out: *mut *mut GraleWeight,
) -> GraleStatus {
    if text.is_null() || out.is_null() {
        return fail(GraleStatus::NullPointer, "null pointer argument");
    }
    let Ok(doc) = CStr::from_ptr(text).to_str() else {
        return fail(GraleStatus::ParseError, "weight document is not UTF-8");
    };
    guarded(|| match psi_from_text(doc) {
        Ok(psi) => {
            *out = Box::into_raw(Box::new(GraleWeight { inner: psi }));
            GraleStatus::Ok
        }
        Err(e) => fail_with(&e),
    })
}

/// Releases a weight handle.  Null is ignored.
///
/// # Safety
/// `w` must be null or a pointer obtained from [`grale_weight_from_text`]
/// that has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn grale_weight_free(w: *mut GraleWeight) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Evaluates the weight at exponent `p`.  Off-support evaluation of a
/// closed-form family is `INFINITY` with status `Ok`; leaving a tabulated
/// hull is an error.
///
/// # Safety
/// `w` must be a live weight handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn grale_weight_eval(
    w: *const GraleWeight,
    p: f64,
    out: *mut f64,
) -> GraleStatus {
    let Some(weight) = w.as_ref() else {
        return fail(GraleStatus::NullPointer, "null weight handle");
    };
    if out.is_null() {
        return fail(GraleStatus::NullPointer, "null output pointer");
    }
    guarded(|| match weight.inner.eval(p) {
        Ok(v) => {
            *out = v;
            GraleStatus::Ok
        }
        Err(e) => fail_with(&e),
    })
}

/// Fundamental function of the weight's scale at gap `delta`: the value
/// and the exponent attaining the sup.
///
/// # Safety
/// `w` must be a live weight handle; output pointers must be null or
/// valid.
#[no_mangle]
pub unsafe extern "C" fn grale_weight_fundamental(
    w: *const GraleWeight,
    delta: f64,
    out_value: *mut f64,
    out_at_p: *mut f64,
) -> GraleStatus {
    let Some(weight) = w.as_ref() else {
        return fail(GraleStatus::NullPointer, "null weight handle");
    };
    guarded(|| match weight.inner.fundamental(delta) {
        Ok(s) => {
            if !out_value.is_null() {
                *out_value = s.value;
            }
            if !out_at_p.is_null() {
                *out_at_p = s.at_p;
            }
            GraleStatus::Ok
        }
        Err(e) => fail_with(&e),
    })
}

/// Grand Lebesgue norm of the grid against the weight: the sup of
/// `|f|_p / psi(p)`, the exponent attaining it, and whether the sup was
/// still climbing at the top of the support (a divergence flag).
///
/// # Safety
/// `g` and `w` must be live handles; output pointers must be null or
/// valid.
#[no_mangle]
pub unsafe extern "C" fn grale_grand_norm(
    g: *const GraleGrid,
    w: *const GraleWeight,
    out_value: *mut f64,
    out_attained_p: *mut f64,
    out_diverging: *mut bool,
) -> GraleStatus {
    let (Some(grid), Some(weight)) = (g.as_ref(), w.as_ref()) else {
        return fail(GraleStatus::NullPointer, "null handle argument");
    };
    guarded(|| match grand_lebesgue_norm(&grid.inner, &weight.inner) {
        Ok(n) => {
            if !out_value.is_null() {
                *out_value = n.value;
            }
            if !out_attained_p.is_null() {
                *out_attained_p = n.attained_p;
            }
            if !out_diverging.is_null() {
                *out_diverging = n.diverging;
            }
            GraleStatus::Ok
        }
        Err(e) => fail_with(&e),
    })
}

/// Runs one experiment and returns a report handle.  `kind` is the
/// experiment name as used by the command line (for example "seminorm" or
/// "field-modulus"); `config_toml` is the full config document, or null
/// for the built-in defaults.  A run whose checks fail still produces a
/// report (query [`grale_report_passed`]); only unusable input fails.
///
/// # Safety
/// `kind` must be a NUL-terminated string; `config_toml` must be null or
/// NUL-terminated; `out` must be a valid pointer.  The handle written to
/// `out` must be released with [`grale_report_free`].
#[no_mangle]
pub unsafe extern "C" fn grale_run_toml(
    kind: *const c_char,
    config_toml: *const c_char,
    out: *mut *mut GraleReport,
) -> GraleStatus {
    if kind.is_null() || out.is_null() {
        return fail(GraleStatus::NullPointer, "null pointer argument");
    }
    let Ok(kind_str) = CStr::from_ptr(kind).to_str() else {
        return fail(GraleStatus::ParseError, "experiment name is not UTF-8");
    };
    let config_text = if config_toml.is_null() {
        None
    } else {
        match CStr::from_ptr(config_toml).to_str() {
            Ok(t) => Some(t.to_owned()),
            Err(_) => return fail(GraleStatus::ParseError, "config is not UTF-8"),
        }
    };
    guarded(|| {
        let kind: ExperimentKind = match kind_str.parse() {
            Ok(k) => k,
            Err(e) => return fail_with(&e),
        };
        let cfg = match config_text {
            None => ExperimentConfig::default_for(kind),
            Some(text) => match ExperimentConfig::from_toml_str(&text) {
                Ok(c) => c,
                Err(e) => return fail_with(&e),
            },
        };
        match runner::run(kind, &cfg) {
            Ok(report) => {
                let boxed = GraleReport {
                    passed: report.passed,
                    summary: CString::new(report.summary).unwrap_or_default(),
                    csv: CString::new(report.csv).unwrap_or_default(),
                    json: CString::new(report.json).unwrap_or_default(),
                };
                *out = Box::into_raw(Box::new(boxed));
                GraleStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Whether the run passed all its configured checks.  False for null.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn grale_report_passed(r: *const GraleReport) -> bool {
    r.as_ref().map(|rep| rep.passed).unwrap_or(false)
}

/// One-line summary of the run.  Owned by the report; null for null.
///
/// # Safety
/// `r` must be null or a live report handle; the returned pointer is
/// valid until [`grale_report_free`].
#[no_mangle]
pub unsafe extern "C" fn grale_report_summary(r: *const GraleReport) -> *const c_char {
    r.as_ref()
        .map(|rep| rep.summary.as_ptr())
        .unwrap_or(std::ptr::null())
}

/// CSV artifact of the run.  Owned by the report; null for null.
///
/// # Safety
/// `r` must be null or a live report handle; the returned pointer is
/// valid until [`grale_report_free`].
#[no_mangle]
pub unsafe extern "C" fn grale_report_csv(r: *const GraleReport) -> *const c_char {
    r.as_ref()
        .map(|rep| rep.csv.as_ptr())
        .unwrap_or(std::ptr::null())
}

/// JSON artifact of the run.  Owned by the report; null for null.
///
/// # Safety
/// `r` must be null or a live report handle; the returned pointer is
/// valid until [`grale_report_free`].
#[no_mangle]
pub unsafe extern "C" fn grale_report_json(r: *const GraleReport) -> *const c_char {
    r.as_ref()
        .map(|rep| rep.json.as_ptr())
        .unwrap_or(std::ptr::null())
}

/// Releases a report handle.  Null is ignored.
///
/// # Safety
/// `r` must be null or a pointer obtained from [`grale_run_toml`] that
/// has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn grale_report_free(r: *mut GraleReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
