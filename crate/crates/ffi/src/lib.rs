//! C ABI for the hpx planner.
//!
//! Every function returns an [`HpxStatus`]. On failure a message is kept per
//! thread and can be read with [`hpx_last_error_message`]. Handles are opaque
//! and must be released with the matching `*_free` function. Strings handed
//! out by the library are released with [`hpx_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hpx_core::emit::{emit_program, EmitOptions};
use hpx_core::engine::Mode;
use hpx_core::model::{validate_domain, PlanningDomain};
use hpx_core::parser::parse_domain;
use hpx_core::plan::{render_atoms, ConditionalPlan};
use hpx_core::search::{find_optimal_plan, find_plan, SearchOptions};

/// Allow several actions per step.
pub const HPX_FLAG_CONCURRENT: u32 = 1;
/// Minimize the total number of occurrences.
pub const HPX_FLAG_OPTIMAL: u32 = 2;
/// Use static fluents to prune the search and the emitted program.
pub const HPX_FLAG_OPTIMIZE: u32 = 4;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HpxStatus {
    Ok = 0,
    /// The search finished without a plan within the bounds.
    NoPlan = 1,
    NullArgument = 2,
    InvalidUtf8 = 3,
    ParseError = 4,
    InvalidDomain = 5,
    EngineError = 6,
    EmitError = 7,
    InvalidArgument = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HpxPlanFormat {
    /// Indented if/else tree.
    Tree = 0,
    /// One line, `a; [if f then b else c]`.
    Compact = 1,
    /// occ/sRes/nextBr atoms, one per line.
    Atoms = 2,
    /// One JSON object per occurrence.
    JsonLines = 3,
}

/// A parsed planning domain.
pub struct HpxDomain {
    domain: PlanningDomain,
}

/// A plan found for a domain. Keeps its own copy of the domain.
pub struct HpxPlan {
    plan: ConditionalPlan,
    domain: PlanningDomain,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

fn fail(status: HpxStatus, msg: impl Into<String>) -> HpxStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> HpxStatus) -> HpxStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
            fail(HpxStatus::Panic, format!("internal error: {}", msg.unwrap_or_else(|| "panic".into())))
        }
    }
}

fn give_string(s: String, out: *mut *mut c_char) -> HpxStatus {
    match CString::new(s) {
        Ok(c) => {
            // SAFETY: caller checked `out` is non-null.
            unsafe { *out = c.into_raw() };
            HpxStatus::Ok
        }
        Err(_) => fail(HpxStatus::InvalidUtf8, "output contains a nul byte"),
    }
}

fn mode_of(flags: u32) -> Mode {
    if flags & HPX_FLAG_CONCURRENT != 0 {
        Mode::Concurrent
    } else {
        Mode::Sequential
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn hpx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a nul-terminated domain description into `*out`.
///
/// # Safety
/// `text` must be null or a valid nul-terminated string; `out` must be null
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn hpx_domain_parse(text: *const c_char, out: *mut *mut HpxDomain) -> HpxStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(HpxStatus::NullArgument, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(HpxStatus::InvalidUtf8, "domain text is not UTF-8");
        };
        match parse_domain(text) {
            Ok(domain) => {
                *out = Box::into_raw(Box::new(HpxDomain { domain }));
                HpxStatus::Ok
            }
            Err(e) => {
                let span = e.span();
                fail(HpxStatus::ParseError, format!("{span}: {e}"))
            }
        }
    })
}

/// Checks the well-formedness rules. `Ok` or `InvalidDomain` with every
/// violation in the error message.
///
/// # Safety
/// `domain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hpx_domain_validate(domain: *const HpxDomain) -> HpxStatus {
    guard(|| {
        let Some(d) = domain.as_ref() else { return fail(HpxStatus::NullArgument, "null domain") };
        let report = validate_domain(&d.domain);
        if report.is_ok() {
            HpxStatus::Ok
        } else {
            fail(HpxStatus::InvalidDomain, report.to_string())
        }
    })
}

/// Searches for a plan. Writes a handle to `*out` on `Ok`, null otherwise.
/// `flags` is a combination of the `HPX_FLAG_*` constants. `jobs` of zero
/// means one thread.
///
/// # Safety
/// `domain` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hpx_find_plan(
    domain: *const HpxDomain,
    max_steps: usize,
    max_branches: usize,
    flags: u32,
    jobs: usize,
    out: *mut *mut HpxPlan,
) -> HpxStatus {
    guard(|| {
        let (Some(d), false) = (domain.as_ref(), out.is_null()) else {
            return fail(HpxStatus::NullArgument, "null argument");
        };
        *out = ptr::null_mut();
        if flags & !(HPX_FLAG_CONCURRENT | HPX_FLAG_OPTIMAL | HPX_FLAG_OPTIMIZE) != 0 {
            return fail(HpxStatus::InvalidArgument, format!("unknown flags {flags:#x}"));
        }
        let options = SearchOptions { optimize: flags & HPX_FLAG_OPTIMIZE != 0, jobs: jobs.max(1) };
        let search = if flags & HPX_FLAG_OPTIMAL != 0 { find_optimal_plan } else { find_plan };
        match search(&d.domain, max_steps, max_branches, mode_of(flags), options) {
            Ok(Some(plan)) => {
                *out = Box::into_raw(Box::new(HpxPlan { plan, domain: d.domain.clone() }));
                HpxStatus::Ok
            }
            Ok(None) => fail(HpxStatus::NoPlan, "no plan within the given bounds"),
            Err(e) => fail(HpxStatus::EngineError, e.to_string()),
        }
    })
}

/// Renders a plan into a new string written to `*out`.
///
/// # Safety
/// `plan` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hpx_plan_render(
    plan: *const HpxPlan,
    format: HpxPlanFormat,
    out: *mut *mut c_char,
) -> HpxStatus {
    guard(|| {
        let (Some(p), false) = (plan.as_ref(), out.is_null()) else {
            return fail(HpxStatus::NullArgument, "null argument");
        };
        *out = ptr::null_mut();
        let text = match format {
            HpxPlanFormat::Tree => p.plan.render_tree(),
            HpxPlanFormat::Compact => p.plan.to_compact(),
            HpxPlanFormat::Atoms => render_atoms(&p.plan.extract_atoms()),
            HpxPlanFormat::JsonLines => p.plan.to_json_lines(&p.domain),
        };
        give_string(text, out)
    })
}

/// Total number of action occurrences over all branches, or 0 for null.
///
/// # Safety
/// `plan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hpx_plan_occurrences(plan: *const HpxPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.plan.occ_count())
}

/// Writes the ASP program for the domain and bounds to `*out`.
///
/// # Safety
/// `domain` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hpx_emit_program(
    domain: *const HpxDomain,
    max_steps: usize,
    max_branches: usize,
    flags: u32,
    out: *mut *mut c_char,
) -> HpxStatus {
    guard(|| {
        let (Some(d), false) = (domain.as_ref(), out.is_null()) else {
            return fail(HpxStatus::NullArgument, "null argument");
        };
        *out = ptr::null_mut();
        let options = EmitOptions { optimize: flags & HPX_FLAG_OPTIMIZE != 0 };
        match emit_program(&d.domain, max_steps, max_branches, mode_of(flags), options) {
            Ok(text) => give_string(text, out),
            Err(e) => fail(HpxStatus::EmitError, e.to_string()),
        }
    })
}

/// # Safety
/// `domain` must be null or a handle from [`hpx_domain_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hpx_domain_free(domain: *mut HpxDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// # Safety
/// `plan` must be null or a handle from [`hpx_find_plan`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hpx_plan_free(plan: *mut HpxPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hpx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
