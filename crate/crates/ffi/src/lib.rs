//! C ABI over `cpdyn`.
//!
//! Every function returns a [`CpdynStatus`]; on failure a message is
//! available from [`cpdyn_last_error_message`] on the same thread. Handles
//! are opaque and must be released with their `_free` function. Panics are
//! caught at the boundary and reported as `CPDYN_STATUS_PANIC`.
//!
//! Quantities that are undefined for a field (momentum without a symmetry,
//! modified invariants where `B = 0`) are reported as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cpdyn::harness::{run_scenario, Drift, RunOutput, Scenario};
use cpdyn::integrators::{rk4_step, tsm1_avf_step, tsm1_step, DEFAULT_AVF_ORDER};
use cpdyn::{make_builtin, Error, FieldModel, MethodId, ParticleState, SolverSettings, Vec3};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpdynStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidScenario = 3,
    NonConvergence = 4,
    Singular = 5,
    Io = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// Opaque field model.
pub struct CpdynField {
    model: FieldModel,
}

/// Opaque completed run.
pub struct CpdynRun {
    output: RunOutput,
}

/// Phase-space state.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpdynState {
    pub t: f64,
    pub x: [f64; 3],
    pub v: [f64; 3],
}

/// One row of the observable series; undefined quantities are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpdynSample {
    pub t: f64,
    pub x: [f64; 3],
    pub v: [f64; 3],
    pub energy: f64,
    pub momentum: f64,
    pub moment: f64,
    pub xi: f64,
    pub modified_energy: f64,
    pub modified_moment: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpdynDrift {
    pub reference: f64,
    pub max_abs_dev: f64,
    pub final_dev: f64,
    pub first_window_max: f64,
    pub last_window_max: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn status_of(e: &Error) -> CpdynStatus {
    match e.root() {
        Error::InvalidParameter(_) => CpdynStatus::InvalidArgument,
        Error::InvalidScenario(_) => CpdynStatus::InvalidScenario,
        Error::NonConvergence { .. } => CpdynStatus::NonConvergence,
        Error::Singular { .. } => CpdynStatus::Singular,
        Error::Io(_) => CpdynStatus::Io,
        Error::AtStep { .. } => unreachable!("root() strips step wrappers"),
    }
}

struct Fail(CpdynStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CpdynStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f` behind the panic barrier and records any failure.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CpdynStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            CpdynStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            CpdynStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CpdynStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn vec_arg(p: *const f64, what: &str) -> Result<Vec3, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(Vec3([*p, *p.add(1), *p.add(2)]))
}

unsafe fn put_vec(p: *mut f64, v: Vec3) {
    if !p.is_null() {
        ptr::copy_nonoverlapping(v.0.as_ptr(), p, 3);
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `cpdyn_*` call on this thread.
#[no_mangle]
pub extern "C" fn cpdyn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cpdyn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a built-in field (`"experiment"`, `"constant-b"`, `"quadratic"`,
/// `"free"`) with its default parameters.
///
/// # Safety
/// `kind` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_field_new(kind: *const c_char, eps: f64, out: *mut *mut CpdynField) -> CpdynStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let mut sc = Scenario::default();
        sc.set("field", str_arg(kind, "kind")?)?;
        let model = make_builtin(sc.field, eps)?;
        *out = Box::into_raw(Box::new(CpdynField { model }));
        Ok(())
    })
}

/// Creates the field described by the `field*`, `eps` and `momentum_scale`
/// keys of a scenario text.
///
/// # Safety
/// `scenario` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_field_from_scenario(scenario: *const c_char, out: *mut *mut CpdynField) -> CpdynStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let sc = Scenario::from_kv_str(str_arg(scenario, "scenario")?)?;
        *out = Box::into_raw(Box::new(CpdynField { model: sc.model()? }));
        Ok(())
    })
}

/// # Safety
/// `field` must come from a `cpdyn_field_*` constructor and not be freed
/// twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_field_free(field: *mut CpdynField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Evaluates `A`, `B`, `U` and `F` at `x`. Any output pointer may be null.
///
/// # Safety
/// `x` must point to 3 doubles; non-null vector outputs to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_field_eval(
    field: *const CpdynField,
    x: *const f64,
    a_out: *mut f64,
    b_out: *mut f64,
    u_out: *mut f64,
    f_out: *mut f64,
) -> CpdynStatus {
    guard(|| {
        let field = field.as_ref().ok_or_else(|| null("field"))?;
        let x = vec_arg(x, "x")?;
        field.model.check(x)?;
        put_vec(a_out, field.model.vector_potential(x));
        put_vec(b_out, field.model.magnetic_field(x));
        if !u_out.is_null() {
            *u_out = field.model.scalar_potential(x);
        }
        put_vec(f_out, field.model.force(x));
        Ok(())
    })
}

/// Solves `v + t × v = r`.
///
/// # Safety
/// `t`, `r` must point to 3 doubles and `v_out` to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_solve_cross_linear(t: *const f64, r: *const f64, v_out: *mut f64) -> CpdynStatus {
    guard(|| {
        let (t, r) = (vec_arg(t, "t")?, vec_arg(r, "r")?);
        if v_out.is_null() {
            return Err(null("v_out"));
        }
        put_vec(v_out, cpdyn::solve_cross_linear(t, r));
        Ok(())
    })
}

/// Advances `state` in place by one step of a one-step method (`"tsm1"`,
/// `"tsm1-avf"`, `"rk4ref"`) with default solver settings. The two-step
/// methods need their history and are only available through runs.
///
/// # Safety
/// `method` must be a NUL-terminated string; `state` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_step(
    field: *const CpdynField,
    method: *const c_char,
    h: f64,
    state: *mut CpdynState,
) -> CpdynStatus {
    guard(|| {
        let field = field.as_ref().ok_or_else(|| null("field"))?;
        let st = state.as_mut().ok_or_else(|| null("state"))?;
        let method: MethodId = str_arg(method, "method")?.parse()?;
        if !(h.is_finite() && h != 0.0) {
            return Err(Fail(
                CpdynStatus::InvalidArgument,
                format!("stepsize must be finite and non-zero, got {h}"),
            ));
        }
        let s = ParticleState::new(st.t, Vec3(st.x), Vec3(st.v));
        let settings = SolverSettings::default();
        let next = match method {
            MethodId::Tsm1 => tsm1_step(&s, h, &field.model, &settings)?.0,
            MethodId::Tsm1Avf => tsm1_avf_step(&s, h, &field.model, &settings, DEFAULT_AVF_ORDER)?.0,
            MethodId::Rk4Ref => rk4_step(&s, h, &field.model)?,
            m => {
                return Err(Fail(
                    CpdynStatus::InvalidArgument,
                    format!("{m} is a two-step method; use cpdyn_run_new"),
                ))
            }
        };
        *st = CpdynState {
            t: next.t,
            x: next.x.0,
            v: next.v.0,
        };
        Ok(())
    })
}

/// Runs a scenario given as `key = value` text (empty text runs the
/// defaults).
///
/// # Safety
/// `scenario` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_run_new(scenario: *const c_char, out: *mut *mut CpdynRun) -> CpdynStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let sc = Scenario::from_kv_str(str_arg(scenario, "scenario")?)?;
        let output = run_scenario(&sc)?;
        *out = Box::into_raw(Box::new(CpdynRun { output }));
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`cpdyn_run_new`] and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_run_free(run: *mut CpdynRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of stored samples; 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_run_sample_count(run: *const CpdynRun) -> usize {
    run.as_ref().map_or(0, |r| r.output.samples.len())
}

/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_run_sample(run: *const CpdynRun, index: usize, out: *mut CpdynSample) -> CpdynStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = run.output.samples.get(index).ok_or_else(|| {
            Fail(
                CpdynStatus::OutOfRange,
                format!("sample {index} out of range ({} samples)", run.output.samples.len()),
            )
        })?;
        let nan = |q: Option<f64>| q.unwrap_or(f64::NAN);
        *out = CpdynSample {
            t: s.t,
            x: s.x.0,
            v: s.v.0,
            energy: s.energy,
            momentum: nan(s.momentum),
            moment: nan(s.moment),
            xi: nan(s.xi),
            modified_energy: nan(s.modified_energy),
            modified_moment: nan(s.modified_moment),
        };
        Ok(())
    })
}

/// Drift of `quantity` (`"E"`, `"M"`, `"I"`, `"Hh"`, `"Ih"`) over the run.
///
/// # Safety
/// `run` must be a live handle, `quantity` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_run_drift(
    run: *const CpdynRun,
    quantity: *const c_char,
    out: *mut CpdynDrift,
) -> CpdynStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let q = str_arg(quantity, "quantity")?;
        let d: Drift = run
            .output
            .drift
            .entries()
            .into_iter()
            .find(|(name, _)| *name == q)
            .map(|(_, d)| d)
            .ok_or_else(|| {
                Fail(
                    CpdynStatus::InvalidArgument,
                    format!("quantity '{q}' is unknown or undefined for this run"),
                )
            })?;
        *out = CpdynDrift {
            reference: d.reference,
            max_abs_dev: d.max_abs_dev,
            final_dev: d.final_dev,
            first_window_max: d.first_window_max,
            last_window_max: d.last_window_max,
        };
        Ok(())
    })
}

/// Final grid state of the run.
///
/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpdyn_run_final_state(run: *const CpdynRun, out: *mut CpdynState) -> CpdynStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = run.output.final_state;
        *out = CpdynState {
            t: s.t,
            x: s.x.0,
            v: s.v.0,
        };
        Ok(())
    })
}
