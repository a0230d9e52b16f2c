//! C ABI over the `h2cavity` engine.
//!
//! Conventions:
//!
//! * Every fallible function returns an [`H2Status`]; `H2_STATUS_OK` is 0.
//!   On failure [`h2c_last_error`] returns a message for the calling thread.
//! * Objects are opaque handles created by `*_new`/`*_builtin`/`*_run` and
//!   released by the matching `*_free`. Passing NULL to a `*_free` is a no-op.
//! * Strings returned as `char*` are owned by the caller and must be released
//!   with [`h2c_string_free`]. Strings returned as `const char*` are borrowed
//!   from the handle and live as long as it does.
//! * Panics never cross the boundary; they surface as `H2_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use h2cavity::analysis::populations;
use h2cavity::dynamics::Trajectory;
use h2cavity::linalg::{CMatrix, C64};
use h2cavity::ptsim::{expm_ptsim, PtsimConfig};
use h2cavity::runner;
use h2cavity::scenario::Scenario;
use h2cavity::Error;

/// Result codes. Values 2 and 3 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum H2Status {
    Ok = 0,
    /// Engine error without a more specific class (I/O, linear algebra).
    Error = 1,
    /// Invalid scenario, parameter or config text.
    Invalid = 2,
    /// A density-matrix invariant failed mid-run.
    InvariantBreach = 3,
    /// NULL pointer, bad UTF-8 or out-of-range index.
    BadArgument = 4,
    /// Caller buffer too small; nothing was written.
    BufferTooSmall = 5,
    Panic = 6,
}

/// Scenario handle.
pub struct H2Scenario {
    inner: Scenario,
}

/// Completed run: trajectory plus final populations.
pub struct H2Run {
    trajectory: Trajectory,
    columns: Vec<CString>,
    final_populations: [f64; 4],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> H2Status {
    match e.exit_code() {
        2 => H2Status::Invalid,
        3 => H2Status::InvariantBreach,
        _ => H2Status::Error,
    }
}

/// Run `f`, mapping engine errors and panics to status codes.
fn guard<F: FnOnce() -> Result<(), (H2Status, String)>>(f: F) -> H2Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => H2Status::Ok,
        Ok(Err((s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            H2Status::Panic
        }
    }
}

fn engine(e: Error) -> (H2Status, String) {
    (status_of(&e), e.to_string())
}

fn bad(msg: &str) -> (H2Status, String) {
    (H2Status::BadArgument, msg.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (H2Status, String)> {
    if p.is_null() {
        return Err(bad(&format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| bad(&format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (H2Status, String)> {
    p.as_ref().ok_or_else(|| bad(&format!("{what} is NULL")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (H2Status, String)> {
    p.as_mut().ok_or_else(|| bad(&format!("{what} is NULL")))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message of the last failed call on this thread; empty if none. Borrowed
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn h2c_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Engine version, static storage.
#[no_mangle]
pub extern "C" fn h2c_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn h2c_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Create a built-in scenario by name (`assoc-quantum`, ...).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2c_scenario_builtin(name: *const c_char, out: *mut *mut H2Scenario) -> H2Status {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let sc = Scenario::builtin(str_arg(name, "name")?).map_err(engine)?;
        *out = Box::into_raw(Box::new(H2Scenario { inner: sc }));
        Ok(())
    })
}

/// Parse a scenario from config text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2c_scenario_from_config(text: *const c_char, out: *mut *mut H2Scenario) -> H2Status {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let sc = Scenario::from_config(str_arg(text, "text")?).map_err(engine)?;
        *out = Box::into_raw(Box::new(H2Scenario { inner: sc }));
        Ok(())
    })
}

/// Override one config key, e.g. `("horizon.t_end", "1e-6")`.
///
/// # Safety
/// `sc` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn h2c_scenario_set(sc: *mut H2Scenario, key: *const c_char, value: *const c_char) -> H2Status {
    guard(|| {
        let sc = sc.as_mut().ok_or_else(|| bad("scenario is NULL"))?;
        let (k, v) = (str_arg(key, "key")?, str_arg(value, "value")?);
        sc.inner.set(k, v).map_err(engine)
    })
}

/// Full config text of a scenario; free with [`h2c_string_free`].
///
/// # Safety
/// `sc` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2c_scenario_to_config(sc: *const H2Scenario, out: *mut *mut c_char) -> H2Status {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = owned_string(handle(sc, "scenario")?.inner.to_config());
        Ok(())
    })
}

/// Validation report as JSON; free with [`h2c_string_free`].
///
/// # Safety
/// `sc` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2c_scenario_validate(sc: *const H2Scenario, out: *mut *mut c_char) -> H2Status {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let report = runner::validate(&handle(sc, "scenario")?.inner).map_err(engine)?;
        let json = serde_json::to_string(&report).map_err(|e| (H2Status::Error, e.to_string()))?;
        *out = owned_string(json);
        Ok(())
    })
}

/// # Safety
/// `sc` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn h2c_scenario_free(sc: *mut H2Scenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Integrate a scenario in memory.
///
/// # Safety
/// `sc` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2c_run(sc: *const H2Scenario, out: *mut *mut H2Run) -> H2Status {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let sc = &handle(sc, "scenario")?.inner;
        let (p, r) = runner::simulate(sc).map_err(engine)?;
        let final_populations = populations(&r.final_state.view(), &p.system.idx, sc.classifier());
        let columns = r
            .trajectory
            .columns
            .iter()
            .map(|c| CString::new(c.as_str()).unwrap_or_default())
            .collect();
        *out = Box::into_raw(Box::new(H2Run {
            trajectory: r.trajectory,
            columns,
            final_populations,
        }));
        Ok(())
    })
}

/// Run a scenario and write `trajectory.csv`, `scenario.cfg` and
/// `manifest.json` into `dir`. The manifest is also returned as JSON when
/// `manifest` is not NULL; free it with [`h2c_string_free`].
///
/// # Safety
/// `sc` must be a live handle, `dir` a NUL-terminated path, `manifest`
/// NULL or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn h2c_run_to_dir(
    sc: *const H2Scenario,
    dir: *const c_char,
    manifest: *mut *mut c_char,
) -> H2Status {
    guard(|| {
        let sc = &handle(sc, "scenario")?.inner;
        let dir = Path::new(str_arg(dir, "dir")?);
        let rec = runner::run(sc, dir).map_err(engine)?;
        if let Some(m) = manifest.as_mut() {
            *m = owned_string(serde_json::to_string(&rec).map_err(|e| (H2Status::Error, e.to_string()))?);
        }
        Ok(())
    })
}

/// Number of recorded rows.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn h2c_run_rows(run: *const H2Run) -> usize {
    run.as_ref().map_or(0, |r| r.trajectory.times.len())
}

/// Number of observable columns (not counting time).
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn h2c_run_columns(run: *const H2Run) -> usize {
    run.as_ref().map_or(0, |r| r.columns.len())
}

/// Name of column `i`, borrowed from the handle; NULL if out of range.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn h2c_run_column_name(run: *const H2Run, i: usize) -> *const c_char {
    run.as_ref()
        .and_then(|r| r.columns.get(i))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Copy the record times into `buf[0..len]`; `len` must be at least
/// [`h2c_run_rows`].
///
/// # Safety
/// `run` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn h2c_run_times(run: *const H2Run, buf: *mut c_double, len: usize) -> H2Status {
    guard(|| {
        let r = handle(run, "run")?;
        copy_out(&r.trajectory.times, buf, len)
    })
}

/// Copy column `i` into `buf[0..len]`.
///
/// # Safety
/// `run` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn h2c_run_column(run: *const H2Run, i: usize, buf: *mut c_double, len: usize) -> H2Status {
    guard(|| {
        let r = handle(run, "run")?;
        if i >= r.columns.len() {
            return Err(bad("column index out of range"));
        }
        let col: Vec<f64> = r.trajectory.rows.iter().map(|row| row[i]).collect();
        copy_out(&col, buf, len)
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut c_double, len: usize) -> Result<(), (H2Status, String)> {
    if buf.is_null() {
        return Err(bad("buffer is NULL"));
    }
    if len < src.len() {
        return Err((H2Status::BufferTooSmall, format!("need {} entries, got {len}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Final photon-marginalized populations in the order H2, H+H, H⁻+H⁺, other.
///
/// # Safety
/// `run` must be a live handle and `out` valid for 4 writes.
#[no_mangle]
pub unsafe extern "C" fn h2c_run_final_populations(run: *const H2Run, out: *mut c_double) -> H2Status {
    guard(|| {
        let r = handle(run, "run")?;
        copy_out(&r.final_populations, out, 4)
    })
}

/// 1 if an automatic horizon found a plateau, 0 if it hit the cap, -1 for a
/// fixed horizon.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn h2c_run_plateau(run: *const H2Run) -> c_int {
    match run.as_ref().and_then(|r| r.trajectory.plateau) {
        Some(true) => 1,
        Some(false) => 0,
        None => -1,
    }
}

/// # Safety
/// `run` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn h2c_run_free(run: *mut H2Run) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// `exp(A·dt)` for a dense row-major `n×n` complex matrix given as separate
/// real and imaginary arrays. `depth` is the doubling depth (20 is typical);
/// it is raised automatically when `‖A‖·dt/2^depth > 1`.
///
/// # Safety
/// All four arrays must hold `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn h2c_expm(
    n: usize,
    a_re: *const c_double,
    a_im: *const c_double,
    dt: c_double,
    depth: u32,
    out_re: *mut c_double,
    out_im: *mut c_double,
) -> H2Status {
    guard(|| {
        if a_re.is_null() || a_im.is_null() || out_re.is_null() || out_im.is_null() {
            return Err(bad("matrix pointer is NULL"));
        }
        let len = n.checked_mul(n).ok_or_else(|| bad("n too large"))?;
        let re = std::slice::from_raw_parts(a_re, len);
        let im = std::slice::from_raw_parts(a_im, len);
        let a = CMatrix::from_shape_fn((n, n), |(i, j)| C64::new(re[i * n + j], im[i * n + j]));
        let cfg = PtsimConfig::new(depth).map_err(engine)?;
        let e = expm_ptsim(&a.view(), dt, cfg).map_err(engine)?;
        for (k, z) in e.iter().enumerate() {
            *out_re.add(k) = z.re;
            *out_im.add(k) = z.im;
        }
        Ok(())
    })
}
