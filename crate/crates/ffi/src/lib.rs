//! C ABI over the seamless trial engine.
//!
//! Every function returns a [`SeamlessStatus`]; on failure the message is
//! available from [`seamless_last_error_message`] on the same thread. Designs
//! are opaque handles created by `seamless_design_*` and released with
//! [`seamless_design_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use seamless_core::adaptive::interim_update_exact;
use seamless_core::inference::hpd_interval;
use seamless_core::model::{reference_design, OutcomeTable, Scenario, TrialDesign};
use seamless_core::rng::{Purpose, StreamKey};
use seamless_core::trial::{decide, simulate_trial, Decision};
use seamless_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeamlessStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    Config = 4,
    Sampler = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeamlessDecision {
    NonInferior = 0,
    Inconclusive = 1,
    ComparatorSuperior = 2,
}

impl From<Decision> for SeamlessDecision {
    fn from(d: Decision) -> Self {
        match d {
            Decision::NonInferior => SeamlessDecision::NonInferior,
            Decision::Inconclusive => SeamlessDecision::Inconclusive,
            Decision::ComparatorSuperior => SeamlessDecision::ComparatorSuperior,
        }
    }
}

/// Outcome of one simulated trial.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SeamlessTrialSummary {
    pub decision: SeamlessDecision,
    pub selected_arm: usize,
    pub y_stat: f64,
    pub simplex_violations: usize,
}

/// Opaque trial design.
pub struct SeamlessDesign {
    inner: TrialDesign,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn fail(status: SeamlessStatus, msg: impl Into<String>) -> SeamlessStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> SeamlessStatus {
    let status = match &e {
        Error::Validation { .. } | Error::NoQualifyingDesign { .. } => SeamlessStatus::Validation,
        Error::Config(_) | Error::Json(_) => SeamlessStatus::Config,
        Error::Sampler(_) => SeamlessStatus::Sampler,
        Error::Io(_) | Error::Csv(_) => SeamlessStatus::Io,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> SeamlessStatus) -> SeamlessStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == SeamlessStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(SeamlessStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, SeamlessStatus> {
    if p.is_null() {
        return Err(fail(SeamlessStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SeamlessStatus::InvalidArgument, "string is not UTF-8"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn seamless_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn seamless_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates the reference three-arm design.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn seamless_design_default(out: *mut *mut SeamlessDesign) -> SeamlessStatus {
    guard(|| {
        if out.is_null() {
            return fail(SeamlessStatus::NullPointer, "out is null");
        }
        *out = Box::into_raw(Box::new(SeamlessDesign {
            inner: reference_design(),
        }));
        SeamlessStatus::Ok
    })
}

/// Parses and validates a design from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn seamless_design_from_json(json: *const c_char, out: *mut *mut SeamlessDesign) -> SeamlessStatus {
    guard(|| {
        if out.is_null() {
            return fail(SeamlessStatus::NullPointer, "out is null");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let design: TrialDesign = match serde_json::from_str(text) {
            Ok(d) => d,
            Err(e) => return fail(SeamlessStatus::Config, e.to_string()),
        };
        if let Err(e) = design.validate() {
            return from_error(e);
        }
        *out = Box::into_raw(Box::new(SeamlessDesign { inner: design }));
        SeamlessStatus::Ok
    })
}

/// Releases a design. Null is ignored.
///
/// # Safety
/// `design` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn seamless_design_free(design: *mut SeamlessDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}

/// # Safety
/// `design` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn seamless_design_num_arms(design: *const SeamlessDesign, out: *mut usize) -> SeamlessStatus {
    guard(|| {
        if design.is_null() || out.is_null() {
            return fail(SeamlessStatus::NullPointer, "null argument");
        }
        *out = (*design).inner.n_arms();
        SeamlessStatus::Ok
    })
}

/// Exact interim update after `period` completed periods.
///
/// `arm_counts` holds `n_arms` rows of `[under, adequate, over]`. The three
/// output arrays must each hold `n_arms` elements.
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn seamless_interim_update(
    design: *const SeamlessDesign,
    arm_counts: *const u32,
    n_arms: usize,
    raw_probs_out: *mut f64,
    probs_out: *mut f64,
    dropped_out: *mut u8,
) -> SeamlessStatus {
    guard(|| {
        if design.is_null() || arm_counts.is_null() || raw_probs_out.is_null() || probs_out.is_null() || dropped_out.is_null() {
            return fail(SeamlessStatus::NullPointer, "null argument");
        }
        let d = &(*design).inner;
        if n_arms != d.n_arms() {
            return fail(
                SeamlessStatus::InvalidArgument,
                format!("design has {} arms, got {n_arms}", d.n_arms()),
            );
        }
        let flat = std::slice::from_raw_parts(arm_counts, n_arms * 3);
        let counts = OutcomeTable {
            arm_counts: flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
            ..OutcomeTable::default()
        };
        let (raw, state) = interim_update_exact(d.priors.interim_arm, &counts, d.drop_threshold, 0);
        for i in 0..n_arms {
            *raw_probs_out.add(i) = raw[i];
            *probs_out.add(i) = state.active_probs[i];
            *dropped_out.add(i) = state.dropped[i] as u8;
        }
        SeamlessStatus::Ok
    })
}

/// Three-outcome rule on a non-inferiority statistic.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn seamless_decide(y: f64, lambda1: f64, lambda2: f64, out: *mut SeamlessDecision) -> SeamlessStatus {
    guard(|| {
        if out.is_null() {
            return fail(SeamlessStatus::NullPointer, "out is null");
        }
        if !(0.0..=1.0).contains(&y) || !(lambda1 < lambda2) {
            return fail(SeamlessStatus::InvalidArgument, "need y in [0, 1] and lambda1 < lambda2");
        }
        *out = decide(y, lambda1, lambda2).into();
        SeamlessStatus::Ok
    })
}

/// Shortest interval holding `mass` of the `n` draws.
///
/// # Safety
/// `draws` must hold `n` values; `low` and `high` must be writable.
#[no_mangle]
pub unsafe extern "C" fn seamless_hpd_interval(
    draws: *const f64,
    n: usize,
    mass: f64,
    low: *mut f64,
    high: *mut f64,
) -> SeamlessStatus {
    guard(|| {
        if draws.is_null() || low.is_null() || high.is_null() {
            return fail(SeamlessStatus::NullPointer, "null argument");
        }
        if n == 0 || !(mass > 0.0 && mass < 1.0) {
            return fail(SeamlessStatus::InvalidArgument, "need n > 0 and mass in (0, 1)");
        }
        let iv = hpd_interval(std::slice::from_raw_parts(draws, n), mass);
        *low = iv.low;
        *high = iv.high;
        SeamlessStatus::Ok
    })
}

/// Simulates replicate `replicate` of a scenario (JSON) under `seed`. The result
/// matches row `replicate` of the command-line `simulate` output for that seed.
///
/// # Safety
/// `design` must be live, `scenario_json` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn seamless_simulate_trial(
    design: *const SeamlessDesign,
    scenario_json: *const c_char,
    seed: u64,
    replicate: u64,
    out: *mut SeamlessTrialSummary,
) -> SeamlessStatus {
    guard(|| {
        if design.is_null() || out.is_null() {
            return fail(SeamlessStatus::NullPointer, "null argument");
        }
        let text = match read_str(scenario_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let scenario: Scenario = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(e) => return fail(SeamlessStatus::Config, e.to_string()),
        };
        let d = &(*design).inner;
        if let Err(e) = scenario.validate(d.n_arms()) {
            return from_error(e);
        }
        let key = StreamKey::root(seed).purpose(Purpose::Replicate).child(replicate);
        match simulate_trial(d, &scenario, &key) {
            Ok(r) => {
                *out = SeamlessTrialSummary {
                    decision: r.decision.into(),
                    selected_arm: r.selected_arm,
                    y_stat: r.y_stat,
                    simplex_violations: r.simplex_violations,
                };
                SeamlessStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
