//! C ABI over the `aperture` crate.
//!
//! Every fallible call returns an [`ApStatus`]; on failure the message is
//! available from [`ap_last_error`] on the same thread. Objects are opaque
//! handles created by `*_new`/`*_run` calls and released with the matching
//! `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use aperture::config::ExperimentConfig;
use aperture::experiment::{run_experiment, to_csv, ExperimentRun};
use aperture::goodsets::{covering_lemma_trials, DyadicLattice};
use aperture::operators::{pucci_minus, pucci_plus, EllipticityPair, SymMatrix};
use aperture::solver::{solve, SolveResult};
use aperture::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Config failed to parse or validate.
    Validation = 3,
    /// Time step above the stability limit.
    Cfl = 4,
    /// An estimator's preconditions failed (too few nodes, scales, ...).
    Estimator = 5,
    Internal = 6,
}

impl ApStatus {
    fn from_error(e: &Error) -> Self {
        match e.exit_code() {
            2 => ApStatus::Validation,
            3 => ApStatus::Cfl,
            4 => ApStatus::Estimator,
            _ => ApStatus::Internal,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> ApStatus {
    set_error(format!("{}: {e}", e.code()));
    ApStatus::from_error(&e)
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn pair(lambda: f64, upper: f64) -> Result<EllipticityPair, ApStatus> {
    EllipticityPair::new(lambda, upper).map_err(fail)
}

/// # Safety
/// `upper` must point to `dim (dim + 1) / 2` doubles.
unsafe fn matrix(dim: usize, upper: *const f64) -> Result<SymMatrix, ApStatus> {
    if upper.is_null() {
        set_error("matrix pointer is NULL");
        return Err(ApStatus::NullPointer);
    }
    if !(1..=3).contains(&dim) {
        set_error(format!("dimension must be 1, 2 or 3, got {dim}"));
        return Err(ApStatus::InvalidArgument);
    }
    let entries = std::slice::from_raw_parts(upper, dim * (dim + 1) / 2);
    let mut m = SymMatrix::zeros(dim);
    let mut k = 0;
    for i in 0..dim {
        for j in i..dim {
            m.set(i, j, entries[k]);
            k += 1;
        }
    }
    Ok(m)
}

fn extremal(dim: usize, upper: *const f64, lambda: f64, big_lambda: f64, out: *mut f64, plus: bool) -> ApStatus {
    if out.is_null() {
        set_error("output pointer is NULL");
        return ApStatus::NullPointer;
    }
    // SAFETY: the caller guarantees the entry count (see the public docs).
    let m = match unsafe { matrix(dim, upper) } {
        Ok(m) => m,
        Err(s) => return s,
    };
    let p = match pair(lambda, big_lambda) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let v = if plus { pucci_plus(&m, p) } else { pucci_minus(&m, p) };
    // SAFETY: checked non-null above.
    unsafe { *out = v };
    ApStatus::Ok
}

/// Maximal Pucci operator of the symmetric matrix given by its upper
/// triangle (row by row, `dim (dim + 1) / 2` entries).
///
/// # Safety
/// `upper` must point to `dim (dim + 1) / 2` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn ap_pucci_plus(dim: usize, upper: *const f64, lambda: f64, big_lambda: f64, out: *mut f64) -> ApStatus {
    extremal(dim, upper, lambda, big_lambda, out, true)
}

/// Minimal Pucci operator; see [`ap_pucci_plus`].
///
/// # Safety
/// As for [`ap_pucci_plus`].
#[no_mangle]
pub unsafe extern "C" fn ap_pucci_minus(dim: usize, upper: *const f64, lambda: f64, big_lambda: f64, out: *mut f64) -> ApStatus {
    extremal(dim, upper, lambda, big_lambda, out, false)
}

/// Parsed and validated experiment configuration.
pub struct ApExperiment {
    config: ExperimentConfig,
}

/// Result rows of a finished experiment.
pub struct ApResults {
    run: ExperimentRun,
    csv: CString,
}

/// Discrete solution of the configured problem (no sweep applied).
pub struct ApSolution {
    result: SolveResult,
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, ApStatus> {
    if s.is_null() {
        set_error("string pointer is NULL");
        return Err(ApStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string is not UTF-8");
        ApStatus::InvalidArgument
    })
}

/// Parses config text into a new handle stored in `*out`.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ap_experiment_new(config: *const c_char, out: *mut *mut ApExperiment) -> ApStatus {
    if out.is_null() {
        set_error("output pointer is NULL");
        return ApStatus::NullPointer;
    }
    let src = match text(config) {
        Ok(s) => s,
        Err(s) => return s,
    };
    match ExperimentConfig::parse(src) {
        Ok(config) => {
            *out = Box::into_raw(Box::new(ApExperiment { config }));
            ApStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `exp` must come from [`ap_experiment_new`] (or be NULL) and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn ap_experiment_free(exp: *mut ApExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Runs every sweep point on `workers` threads (0 uses the config value).
///
/// # Safety
/// `exp` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ap_experiment_run(exp: *const ApExperiment, workers: usize, out: *mut *mut ApResults) -> ApStatus {
    if exp.is_null() || out.is_null() {
        set_error("NULL handle or output pointer");
        return ApStatus::NullPointer;
    }
    let cfg = &(*exp).config;
    let n = if workers == 0 { cfg.workers } else { workers };
    match run_experiment(cfg, n) {
        Ok(run) => {
            let csv = CString::new(to_csv(cfg, &run)).unwrap_or_default();
            *out = Box::into_raw(Box::new(ApResults { run, csv }));
            ApStatus::Ok
        }
        Err(f) => fail(f.error),
    }
}

/// Number of result rows.
///
/// # Safety
/// `res` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ap_results_rows(res: *const ApResults) -> usize {
    if res.is_null() {
        return 0;
    }
    (*res).run.rows().count()
}

/// Results as CSV text; owned by the handle.
///
/// # Safety
/// `res` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ap_results_csv(res: *const ApResults) -> *const c_char {
    if res.is_null() {
        return ptr::null();
    }
    (*res).csv.as_ptr()
}

/// # Safety
/// `res` must come from [`ap_experiment_run`] (or be NULL) and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn ap_results_free(res: *mut ApResults) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Solves the configured problem once, ignoring any sweep.
///
/// # Safety
/// `exp` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ap_solve(exp: *const ApExperiment, out: *mut *mut ApSolution) -> ApStatus {
    if exp.is_null() || out.is_null() {
        set_error("NULL handle or output pointer");
        return ApStatus::NullPointer;
    }
    let cfg = &(*exp).config;
    let attempt = || -> Result<SolveResult, Error> { solve(&cfg.problem_spec()?, &cfg.scheme_config()?) };
    match attempt() {
        Ok(result) => {
            *out = Box::into_raw(Box::new(ApSolution { result }));
            ApStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Stored time levels and spatial nodes per level of a solution.
///
/// # Safety
/// `sol` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ap_solution_shape(sol: *const ApSolution, levels: *mut usize, nodes_per_level: *mut usize) -> ApStatus {
    if sol.is_null() || levels.is_null() || nodes_per_level.is_null() {
        set_error("NULL handle or output pointer");
        return ApStatus::NullPointer;
    }
    let g = (*sol).result.u.grid();
    *levels = g.n_time();
    *nodes_per_level = g.n_space();
    ApStatus::Ok
}

/// Copies the solution values (time level major, oldest level first) into
/// `buf`, which must hold `len >= levels * nodes_per_level` doubles.
///
/// # Safety
/// `sol` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ap_solution_values(sol: *const ApSolution, buf: *mut f64, len: usize) -> ApStatus {
    if sol.is_null() || buf.is_null() {
        set_error("NULL handle or buffer");
        return ApStatus::NullPointer;
    }
    let values = (*sol).result.u.values();
    if len < values.len() {
        set_error(format!("buffer holds {len} values, need {}", values.len()));
        return ApStatus::InvalidArgument;
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    ApStatus::Ok
}

/// # Safety
/// `sol` must come from [`ap_solve`] (or be NULL) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ap_solution_free(sol: *mut ApSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Checks the stacked covering inequality on `trials` seeded random
/// instances over the level-`level` dyadic lattice; stores how many passed.
///
/// # Safety
/// `passed` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ap_covering_trials(dim: usize, level: u32, trials: usize, seed: u64, passed: *mut usize) -> ApStatus {
    if passed.is_null() {
        set_error("output pointer is NULL");
        return ApStatus::NullPointer;
    }
    let run = || -> Result<usize, Error> {
        let lattice = DyadicLattice::new(dim, level)?;
        Ok(covering_lemma_trials(&lattice, trials, seed)?.iter().filter(|r| r.hypotheses_hold() && r.conclusion).count())
    };
    match run() {
        Ok(n) => {
            *passed = n;
            ApStatus::Ok
        }
        Err(e) => fail(e),
    }
}
