//! C ABI over `augmatch`.
//!
//! Instances and runs are opaque heap handles owned by the caller and released
//! with the matching `*_free` function. Every entry point returns an
//! [`AugmStatus`]; on failure a message is kept per thread and can be read
//! with [`augm_last_error`]. Panics never cross the boundary.
//!
//! Buyers are numbered from 1, buyer 0 means "no prediction"; items are
//! numbered from 0.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use augmatch::auction::{quasi_feasibility_audit, run_algorithm2};
use augmatch::bounded::{capacity_constant, dual_rate_audit, run_algorithm1, waterfill_baseline};
use augmatch::generators::{generate, GeneratorSpec};
use augmatch::io::{format_instance, parse_instance};
use augmatch::offline::fractional_opt;
use augmatch::{check_dual_feasibility, check_primal_feasibility, Error, FractionalAllocation, Instance, Prediction};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmStatus {
    Ok = 0,
    InvalidInput = 1,
    Parse = 2,
    Infeasible = 3,
    Solver = 4,
    Io = 5,
    NullPointer = 6,
    Panic = 7,
}

/// Opaque instance handle.
pub struct AugmInstance {
    inner: Instance,
}

/// Opaque result of one algorithm run.
pub struct AugmRun {
    allocation: FractionalAllocation,
    revenue: f64,
    dual_objective: f64,
    audits_passed: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AugmStatus {
    match e {
        Error::InvalidInput(_) => AugmStatus::InvalidInput,
        Error::Parse { .. } => AugmStatus::Parse,
        Error::Infeasible(_) => AugmStatus::Infeasible,
        Error::Solver(_) => AugmStatus::Solver,
        Error::Io(_) => AugmStatus::Io,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AugmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AugmStatus::Ok
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            AugmStatus::NullPointer
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            AugmStatus::Panic
        }
    }
}

unsafe fn cstr<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Lib(Error::InvalidInput(format!("{what} is not UTF-8"))))
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn read_prediction(p: *const u32, len: usize, items: usize) -> Result<Prediction, Fail> {
    if p.is_null() {
        if len == 0 {
            return Ok(Prediction::none(items));
        }
        return Err(Fail::Null("prediction"));
    }
    let s = std::slice::from_raw_parts(p, len);
    Ok(Prediction(s.iter().map(|&i| i as usize).collect()))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn augm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses an instance from its text format.
#[no_mangle]
pub unsafe extern "C" fn augm_instance_parse(text: *const c_char, out: *mut *mut AugmInstance) -> AugmStatus {
    guard(|| {
        let t = cstr(text, "text")?;
        let inst = parse_instance(t)?;
        put(out, Box::into_raw(Box::new(AugmInstance { inner: inst })), "out")
    })
}

/// Generates a preset instance (`instance1` .. `instance4`, `lognormal`).
#[no_mangle]
pub unsafe extern "C" fn augm_instance_generate(
    preset: *const c_char,
    seed: u64,
    out: *mut *mut AugmInstance,
) -> AugmStatus {
    guard(|| {
        let name = cstr(preset, "preset")?;
        let inst = generate(&GeneratorSpec::preset(name, seed)?)?;
        put(out, Box::into_raw(Box::new(AugmInstance { inner: inst })), "out")
    })
}

/// Releases an instance; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn augm_instance_free(instance: *mut AugmInstance) {
    if !instance.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(instance))));
    }
}

/// 1 for bounded allocation, 2 for ad-auctions.
#[no_mangle]
pub unsafe extern "C" fn augm_instance_kind(instance: *const AugmInstance, out: *mut u32) -> AugmStatus {
    guard(|| {
        let i = deref(instance, "instance")?;
        let k = match i.inner {
            Instance::Bounded(_) => 1,
            Instance::Auction(_) => 2,
        };
        put(out, k, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn augm_instance_size(
    instance: *const AugmInstance,
    buyers: *mut usize,
    items: *mut usize,
) -> AugmStatus {
    guard(|| {
        let m = deref(instance, "instance")?.inner.as_market();
        put(buyers, m.num_buyers(), "buyers")?;
        put(items, m.num_items(), "items")
    })
}

/// Writes the instance text into `buf` (NUL-terminated). `needed` receives
/// the full length including the terminator; with a short or NULL buffer
/// nothing is written and the call still succeeds.
#[no_mangle]
pub unsafe extern "C" fn augm_instance_format(
    instance: *const AugmInstance,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> AugmStatus {
    guard(|| {
        let text = format_instance(&deref(instance, "instance")?.inner);
        let bytes = text.as_bytes();
        put(needed, bytes.len() + 1, "needed")?;
        if !buf.is_null() && cap > bytes.len() {
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
            *buf.add(bytes.len()) = 0;
        }
        Ok(())
    })
}

/// Optimal value of the offline fractional problem.
#[no_mangle]
pub unsafe extern "C" fn augm_fractional_opt(instance: *const AugmInstance, value: *mut f64) -> AugmStatus {
    guard(|| {
        let opt = fractional_opt(&deref(instance, "instance")?.inner)?;
        put(value, opt.value, "value")
    })
}

/// `C(d)` of the bounded-allocation potential.
#[no_mangle]
pub unsafe extern "C" fn augm_capacity_constant(d: usize, value: *mut f64) -> AugmStatus {
    guard(|| put(value, capacity_constant(d)?, "value"))
}

/// Runs the bounded-allocation algorithm. `prediction` holds one buyer per
/// item (0 = none) or is NULL with `len == 0`. A negative `eta` runs pure
/// water-filling instead.
#[no_mangle]
pub unsafe extern "C" fn augm_run_bounded(
    instance: *const AugmInstance,
    prediction: *const u32,
    len: usize,
    eta: f64,
    out: *mut *mut AugmRun,
) -> AugmStatus {
    guard(|| {
        let Instance::Bounded(inst) = &deref(instance, "instance")?.inner else {
            return Err(Error::InvalidInput("not a bounded-allocation instance".into()).into());
        };
        let pred = read_prediction(prediction, len, inst.items().len())?;
        let run = if eta < 0.0 {
            waterfill_baseline(inst)?
        } else {
            run_algorithm1(inst, &pred, eta)?
        };
        let passed = check_primal_feasibility(inst, &run.allocation, 1.0)?.passed()
            && check_dual_feasibility(inst, &run.dual)?.passed()
            && dual_rate_audit(&run.trace).passed();
        let result = AugmRun {
            revenue: run.revenue(),
            dual_objective: run.dual.objective(inst),
            audits_passed: passed,
            allocation: run.allocation,
        };
        put(out, Box::into_raw(Box::new(result)), "out")
    })
}

/// Runs the ad-auction algorithm with the instance's realized `R_max`.
/// Bounded instances are converted to auctions first.
#[no_mangle]
pub unsafe extern "C" fn augm_run_auction(
    instance: *const AugmInstance,
    prediction: *const u32,
    len: usize,
    eta: f64,
    out: *mut *mut AugmRun,
) -> AugmStatus {
    guard(|| {
        let inst = match &deref(instance, "instance")?.inner {
            Instance::Auction(a) => a.clone(),
            Instance::Bounded(b) => b.to_auction(),
        };
        let pred = read_prediction(prediction, len, augmatch::Market::num_items(&inst))?;
        let o = run_algorithm2(&inst, &pred, eta)?;
        let passed = quasi_feasibility_audit(&inst, &o.allocation, o.trace.r_max)?.passed()
            && check_dual_feasibility(&inst, &o.dual)?.passed()
            && o.trace.potential_failures == 0;
        let result = AugmRun {
            revenue: o.revenue(),
            dual_objective: o.dual.objective(&inst),
            audits_passed: passed,
            allocation: o.allocation,
        };
        put(out, Box::into_raw(Box::new(result)), "out")
    })
}

/// Releases a run; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn augm_run_free(run: *mut AugmRun) {
    if !run.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(run))));
    }
}

#[no_mangle]
pub unsafe extern "C" fn augm_run_revenue(run: *const AugmRun, value: *mut f64) -> AugmStatus {
    guard(|| put(value, deref(run, "run")?.revenue, "value"))
}

#[no_mangle]
pub unsafe extern "C" fn augm_run_dual_objective(run: *const AugmRun, value: *mut f64) -> AugmStatus {
    guard(|| put(value, deref(run, "run")?.dual_objective, "value"))
}

/// 1 when every feasibility and certificate audit passed, else 0.
#[no_mangle]
pub unsafe extern "C" fn augm_run_audits_passed(run: *const AugmRun, passed: *mut u32) -> AugmStatus {
    guard(|| put(passed, deref(run, "run")?.audits_passed as u32, "passed"))
}

/// Fraction of `item` given to `buyer`.
#[no_mangle]
pub unsafe extern "C" fn augm_run_fraction(
    run: *const AugmRun,
    item: usize,
    buyer: usize,
    value: *mut f64,
) -> AugmStatus {
    guard(|| {
        let a = &deref(run, "run")?.allocation;
        if item >= a.num_items() || buyer == 0 || buyer > a.num_buyers() {
            return Err(Error::InvalidInput(format!("no entry for item {item}, buyer {buyer}")).into());
        }
        put(value, a.get(item, buyer), "value")
    })
}
