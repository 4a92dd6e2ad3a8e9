//! C ABI over `nmrl`.
//!
//! Models, experiments and oracle results are opaque handles created by
//! `*_load` / `*_compute` functions and released by the matching `*_free`.
//! Every fallible call returns an [`NmrlStatus`]; on failure the message is
//! available from [`nmrl_last_error`] on the same thread. Panics are caught
//! at the boundary and reported as [`NmrlStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nmrl::harness::{
    compute_oracle, run_to_dir, write_oracle, Experiment, ExperimentConfig, OracleOutputs,
};
use nmrl::model::ModelFile;
use nmrl::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmrlStatus {
    Ok = 0,
    /// A model, config or argument failed validation.
    Validation = 1,
    /// A file could not be parsed.
    Parse = 2,
    Io = 3,
    /// A numerical precondition failed (reducible chain, singular system,
    /// non-convergence, ...).
    Numerical = 4,
    /// An enumeration exceeded its budget.
    Budget = 5,
    NullArgument = 6,
    /// The caller's buffer is shorter than the result; the required length
    /// has been written.
    BufferTooSmall = 7,
    Panic = 8,
}

/// A parsed model file.
pub struct NmrlModel(ModelFile);

/// A validated experiment config resolved against its model.
pub struct NmrlExperiment(Experiment);

/// Oracle outputs of an experiment.
pub struct NmrlOracle(OracleOutputs);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NmrlStatus {
    match e {
        Error::Validation { .. } => NmrlStatus::Validation,
        Error::Parse { .. } => NmrlStatus::Parse,
        Error::Io { .. } => NmrlStatus::Io,
        Error::Budget { .. } => NmrlStatus::Budget,
        _ => NmrlStatus::Numerical,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
    Short { needed: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NmrlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NmrlStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("{name} is null"));
            NmrlStatus::NullArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Short { needed })) => {
            set_error(format!("buffer too small: {needed} entries needed"));
            NmrlStatus::BufferTooSmall
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NmrlStatus::Panic
        }
    }
}

unsafe fn reference<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn string(p: *const c_char, name: &'static str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(p).to_str().map(str::to_owned).map_err(|e| {
        Failure::Lib(Error::Validation {
            path: name.into(),
            message: format!("not UTF-8: {e}"),
        })
    })
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T, name: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    *out = value;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nmrl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn nmrl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Reads a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmrl_model_load(
    path: *const c_char,
    out: *mut *mut NmrlModel,
) -> NmrlStatus {
    guard(|| {
        let path = string(path, "path")?;
        store(out, NmrlModel(ModelFile::load(&PathBuf::from(path))?))
    })
}

/// Parses model text; `origin` labels error messages.
///
/// # Safety
/// `text` and `origin` must be NUL-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nmrl_model_parse(
    text: *const c_char,
    origin: *const c_char,
    out: *mut *mut NmrlModel,
) -> NmrlStatus {
    guard(|| {
        let text = string(text, "text")?;
        let origin = string(origin, "origin")?;
        store(out, NmrlModel(ModelFile::parse(&text, &origin)?))
    })
}

/// State, observation and action counts and the window memory.
///
/// # Safety
/// `model` must come from this library; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmrl_model_dims(
    model: *const NmrlModel,
    num_states: *mut usize,
    num_obs: *mut usize,
    num_actions: *mut usize,
    memory: *mut usize,
) -> NmrlStatus {
    guard(|| {
        let m = &reference(model, "model")?.0;
        write(num_states, m.spec.num_states(), "num_states")?;
        write(num_obs, m.spec.num_obs(), "num_obs")?;
        write(num_actions, m.spec.num_actions(), "num_actions")?;
        write(memory, m.memory, "memory")
    })
}

/// # Safety
/// `model` must come from [`nmrl_model_load`] or [`nmrl_model_parse`] and
/// not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nmrl_model_free(model: *mut NmrlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Loads and validates an experiment config and its model.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmrl_experiment_load(
    config_path: *const c_char,
    out: *mut *mut NmrlExperiment,
) -> NmrlStatus {
    guard(|| {
        let path = string(config_path, "config_path")?;
        let config = ExperimentConfig::load(&PathBuf::from(path))?;
        store(out, NmrlExperiment(Experiment::load(config)?))
    })
}

/// Length of the learner iterate (and of the oracle target).
///
/// # Safety
/// `experiment` must come from this library; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmrl_experiment_iterate_len(
    experiment: *const NmrlExperiment,
    len: *mut usize,
) -> NmrlStatus {
    guard(|| {
        write(
            len,
            reference(experiment, "experiment")?.0.iterate_len(),
            "len",
        )
    })
}

/// Runs the oracle and every seed, writing all artifacts to `out_dir`.
/// `exit_code` receives the command-line exit code of the run (0, 2 or 3).
///
/// # Safety
/// `experiment` must come from this library; `out_dir` must be a
/// NUL-terminated string; `exit_code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmrl_experiment_run(
    experiment: *const NmrlExperiment,
    out_dir: *const c_char,
    exit_code: *mut i32,
) -> NmrlStatus {
    guard(|| {
        let exp = &reference(experiment, "experiment")?.0;
        let dir = string(out_dir, "out_dir")?;
        let report = run_to_dir(exp, &PathBuf::from(dir))?;
        write(exit_code, report.status().code(), "exit_code")
    })
}

/// # Safety
/// `experiment` must come from [`nmrl_experiment_load`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nmrl_experiment_free(experiment: *mut NmrlExperiment) {
    if !experiment.is_null() {
        drop(Box::from_raw(experiment));
    }
}

/// Computes the oracle of an experiment.
///
/// # Safety
/// `experiment` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmrl_oracle_compute(
    experiment: *const NmrlExperiment,
    out: *mut *mut NmrlOracle,
) -> NmrlStatus {
    guard(|| {
        let exp = &reference(experiment, "experiment")?.0;
        store(out, NmrlOracle(compute_oracle(exp)?))
    })
}

/// Copies the learner target (`theta*` or `Q*`, NaN on dropped cells) into
/// `buf`. `len` receives the target length, 0 when there is no target.
///
/// # Safety
/// `oracle` must come from this library; `buf` must hold `capacity`
/// doubles (it may be null when `capacity` is 0); `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmrl_oracle_target(
    oracle: *const NmrlOracle,
    buf: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> NmrlStatus {
    guard(|| {
        let target = reference(oracle, "oracle")?
            .0
            .target
            .as_deref()
            .unwrap_or(&[]);
        write(len, target.len(), "len")?;
        if target.len() > capacity {
            return Err(Failure::Short {
                needed: target.len(),
            });
        }
        if !target.is_empty() {
            if buf.is_null() {
                return Err(Failure::Null("buf"));
            }
            ptr::copy_nonoverlapping(target.as_ptr(), buf, target.len());
        }
        Ok(())
    })
}

/// Number of error-bound reports.
///
/// # Safety
/// `oracle` must come from this library; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmrl_oracle_bound_count(
    oracle: *const NmrlOracle,
    count: *mut usize,
) -> NmrlStatus {
    guard(|| write(count, reference(oracle, "oracle")?.0.bounds.len(), "count"))
}

/// Both sides and the slack `rhs - lhs` of bound report `index`.
///
/// # Safety
/// `oracle` must come from this library; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmrl_oracle_bound(
    oracle: *const NmrlOracle,
    index: usize,
    lhs: *mut f64,
    rhs: *mut f64,
    slack: *mut f64,
) -> NmrlStatus {
    guard(|| {
        let bounds = &reference(oracle, "oracle")?.0.bounds;
        let b = bounds.get(index).ok_or_else(|| Error::Validation {
            path: "index".into(),
            message: format!("{index} out of range for {} reports", bounds.len()),
        })?;
        write(lhs, b.lhs, "lhs")?;
        write(rhs, b.rhs, "rhs")?;
        write(slack, b.slack, "slack")
    })
}

/// Whether any bound report has slack below the tolerance.
///
/// # Safety
/// `oracle` must come from this library; `violated` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nmrl_oracle_bound_violated(
    oracle: *const NmrlOracle,
    violated: *mut bool,
) -> NmrlStatus {
    guard(|| {
        write(
            violated,
            reference(oracle, "oracle")?.0.bound_violated(),
            "violated",
        )
    })
}

/// Writes the config echo, model and oracle artifacts to `out_dir`.
///
/// # Safety
/// Both handles must come from this library; `out_dir` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nmrl_oracle_write(
    experiment: *const NmrlExperiment,
    oracle: *const NmrlOracle,
    out_dir: *const c_char,
) -> NmrlStatus {
    guard(|| {
        let exp = &reference(experiment, "experiment")?.0;
        let oracle = &reference(oracle, "oracle")?.0;
        let dir = string(out_dir, "out_dir")?;
        Ok(write_oracle(exp, oracle, &PathBuf::from(dir))?)
    })
}

/// # Safety
/// `oracle` must come from [`nmrl_oracle_compute`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nmrl_oracle_free(oracle: *mut NmrlOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}
