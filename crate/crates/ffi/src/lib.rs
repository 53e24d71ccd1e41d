//! C ABI over `propselect`.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free` function. Every entry point returns a [`PsStatus`]
//! and records a message retrievable through [`ps_last_error_message`] on the
//! calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use propselect::axioms::{check_ejr, CheckOptions};
use propselect::constraint::ConstraintSpec;
use propselect::election::RawElection;
use propselect::pabulib::{parse_pabulib, to_election, write_outcome, OutputFormat, UtilityMode};
use propselect::{run_rule, Election, Error, Outcome, Rule, RuleConfig};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Input = 3,
    Parse = 4,
    Contract = 5,
    TooLarge = 6,
    UndefinedNormalization = 7,
    Internal = 8,
    Io = 9,
    Panic = 10,
}

/// How approvals in a PabuLib file become utilities.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsUtilityMode {
    CostUtility = 0,
    Unit = 1,
    Points = 2,
}

/// An election together with its active constraint.
pub struct PsElection {
    election: Arc<Election>,
    spec: ConstraintSpec,
}

/// A rule's outcome, tied to the election it was computed on.
pub struct PsOutcome {
    election: Arc<Election>,
    outcome: Outcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> PsStatus {
    match err {
        Error::Input(_) => PsStatus::Input,
        Error::Contract(_) => PsStatus::Contract,
        Error::Parse { .. } => PsStatus::Parse,
        Error::TooLarge(_) => PsStatus::TooLarge,
        Error::UndefinedNormalization(_) => PsStatus::UndefinedNormalization,
        Error::Internal(_) => PsStatus::Internal,
        Error::Io(_) => PsStatus::Io,
        Error::Json(_) => PsStatus::Input,
    }
}

struct Fail(PsStatus, String);

impl From<Error> for Fail {
    fn from(err: Error) -> Self {
        Fail(status_of(&err), err.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> PsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {message}"));
            PsStatus::Panic
        }
    }
}

fn null(name: &str) -> Fail {
    Fail(PsStatus::NullArgument, format!("'{name}' is null"))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(PsStatus::InvalidUtf8, format!("'{name}' is not UTF-8: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

fn string_out(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|e| Fail(PsStatus::Internal, e.to_string()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Parses PabuLib text. The election starts with the file's budget constraint.
///
/// # Safety
/// `pb_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_election_from_pabulib(
    pb_text: *const c_char,
    mode: PsUtilityMode,
    out: *mut *mut PsElection,
) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inst = parse_pabulib(text(pb_text, "pb_text")?)?;
        let mode = match mode {
            PsUtilityMode::CostUtility => UtilityMode::CostUtility,
            PsUtilityMode::Unit => UtilityMode::Unit,
            PsUtilityMode::Points => UtilityMode::Points,
        };
        let conv = to_election(&inst, mode)?;
        put(
            out,
            PsElection {
                election: Arc::new(conv.election),
                spec: conv.spec,
            },
        );
        Ok(())
    })
}

/// Reads a JSON election document. The election starts unconstrained.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_election_from_json(json: *const c_char, out: *mut *mut PsElection) -> PsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let raw: RawElection = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        put(
            out,
            PsElection {
                election: Arc::new(Election::from_raw(&raw)?),
                spec: ConstraintSpec::Unconstrained,
            },
        );
        Ok(())
    })
}

/// Replaces the election's constraint with a JSON constraint document.
///
/// # Safety
/// `election` must come from this library; `json` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ps_election_set_constraint(election: *mut PsElection, json: *const c_char) -> PsStatus {
    guard(|| {
        let e = election.as_mut().ok_or_else(|| null("election"))?;
        let spec = ConstraintSpec::from_json(text(json, "json")?)?;
        spec.compile(&e.election)?;
        e.spec = spec;
        Ok(())
    })
}

/// Writes the voter and candidate counts.
///
/// # Safety
/// `election` must come from this library; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_election_size(
    election: *const PsElection,
    num_voters: *mut usize,
    num_candidates: *mut usize,
) -> PsStatus {
    guard(|| {
        let e = handle(election, "election")?;
        if num_voters.is_null() || num_candidates.is_null() {
            return Err(null("size output"));
        }
        *num_voters = e.election.num_voters();
        *num_candidates = e.election.num_candidates();
        Ok(())
    })
}

/// Runs the named rule (`proprank`, `mes`, `bos`, ...) under the election's constraint.
///
/// # Safety
/// `election` must come from this library; `rule` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ps_run(
    election: *const PsElection,
    rule: *const c_char,
    kappa: f64,
    sigma: usize,
    out: *mut *mut PsOutcome,
) -> PsStatus {
    guard(|| {
        let e = handle(election, "election")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rule: Rule = text(rule, "rule")?.parse()?;
        if !(0.0..=1.0).contains(&kappa) {
            return Err(Error::Input(format!("kappa must lie in [0, 1], got {kappa}")).into());
        }
        let constraint = e.spec.compile(&e.election)?;
        let config = RuleConfig {
            kappa,
            sigma,
            ..RuleConfig::default()
        };
        let outcome = run_rule(rule, &e.election, &constraint, &config)?;
        put(
            out,
            PsOutcome {
                election: Arc::clone(&e.election),
                outcome,
            },
        );
        Ok(())
    })
}

/// Number of selected candidates.
///
/// # Safety
/// `outcome` must come from this library and `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_outcome_len(outcome: *const PsOutcome, len: *mut usize) -> PsStatus {
    guard(|| {
        let o = handle(outcome, "outcome")?;
        if len.is_null() {
            return Err(null("len"));
        }
        *len = o.outcome.purchases.len();
        Ok(())
    })
}

/// Total cost of the selected candidates.
///
/// # Safety
/// `outcome` must come from this library and `cost` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_outcome_total_cost(outcome: *const PsOutcome, cost: *mut u64) -> PsStatus {
    guard(|| {
        let o = handle(outcome, "outcome")?;
        if cost.is_null() {
            return Err(null("cost"));
        }
        *cost = o.outcome.total_cost(&o.election);
        Ok(())
    })
}

/// Serializes the outcome as JSON. Free the string with [`ps_string_free`].
///
/// # Safety
/// `outcome` must come from this library and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_outcome_to_json(outcome: *const PsOutcome, out: *mut *mut c_char) -> PsStatus {
    guard(|| {
        let o = handle(outcome, "outcome")?;
        if out.is_null() {
            return Err(null("out"));
        }
        string_out(out, write_outcome(&o.election, &o.outcome, OutputFormat::Json)?)
    })
}

/// Counts EJR violations of the outcome under the election's current constraint.
///
/// # Safety
/// Both handles must come from this library and `violations` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ps_check_ejr(
    election: *const PsElection,
    outcome: *const PsOutcome,
    violations: *mut usize,
) -> PsStatus {
    guard(|| {
        let e = handle(election, "election")?;
        let o = handle(outcome, "outcome")?;
        if violations.is_null() {
            return Err(null("violations"));
        }
        if !Arc::ptr_eq(&e.election, &o.election) {
            return Err(Error::Input("outcome belongs to a different election".into()).into());
        }
        let constraint = e.spec.compile(&e.election)?;
        let report = check_ejr(&e.election, &constraint, &o.outcome.selected(), &CheckOptions::default())?;
        *violations = report.violations.len();
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `election` must be null or a handle returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ps_election_free(election: *mut PsElection) {
    if !election.is_null() {
        drop(Box::from_raw(election));
    }
}

/// # Safety
/// `outcome` must be null or a handle returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ps_outcome_free(outcome: *mut PsOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}
