//! C ABI over the `reoc` compiler and runtime.
//!
//! Every fallible call returns a [`ReocStatus`]. On failure a message is kept
//! per thread and can be read with [`reoc_last_error_message`]. Strings
//! returned through out-pointers are owned by the caller and released with
//! [`reoc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use reoc::ca::bisimilar;
use reoc::compile::{compile, CompileError, CompiledProtocol, Strategy};
use reoc::connector::{gen_family, parse_connector, Connector, Family, FamilySpec};
use reoc::runtime::{accepts, parse_harness_trace, run_regional, RunStatus, StimulusScript};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReocStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    BudgetExceeded = 4,
    Deadlock = 5,
    IndexOutOfRange = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReocStrategy {
    Centralized = 0,
    Distributed = 1,
    Middleground = 2,
    Mixed = 3,
}

impl From<ReocStrategy> for Strategy {
    fn from(s: ReocStrategy) -> Self {
        match s {
            ReocStrategy::Centralized => Strategy::Centralized,
            ReocStrategy::Distributed => Strategy::Distributed,
            ReocStrategy::Middleground => Strategy::Middleground,
            ReocStrategy::Mixed => Strategy::Mixed,
        }
    }
}

/// A validated connector.
pub struct ReocConnector(Connector);

/// A connector compiled under one strategy.
pub struct ReocProtocol(CompiledProtocol);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: ReocStatus, msg: impl Into<String>) -> ReocStatus {
    set_error(msg);
    status
}

fn compile_status(e: &CompileError) -> ReocStatus {
    let status = match e {
        CompileError::BudgetExceeded { .. } => ReocStatus::BudgetExceeded,
        _ => ReocStatus::InvalidInput,
    };
    fail(status, e.to_string())
}

/// # Safety
/// `s` is null or a NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, ReocStatus> {
    if s.is_null() {
        return Err(fail(ReocStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(ReocStatus::InvalidUtf8, "argument is not UTF-8"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior NULs removed").into_raw()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn reoc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn reoc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses connector source text.
///
/// # Safety
/// `source` is a NUL-terminated string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn reoc_connector_parse(source: *const c_char, out: *mut *mut ReocConnector) -> ReocStatus {
    if out.is_null() {
        return fail(ReocStatus::NullArgument, "null out pointer");
    }
    let text = match read_str(source) {
        Ok(t) => t,
        Err(s) => return s,
    };
    match parse_connector(text) {
        Ok(c) => {
            *out = Box::into_raw(Box::new(ReocConnector(c)));
            ReocStatus::Ok
        }
        Err(e) => fail(ReocStatus::InvalidInput, e.to_string()),
    }
}

/// Generates a member of a named family (`alternator`, `asyncmerger`,
/// `sequencer`, `sync_chain`).
///
/// # Safety
/// `family` is a NUL-terminated string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn reoc_connector_generate(
    family: *const c_char,
    size: usize,
    out: *mut *mut ReocConnector,
) -> ReocStatus {
    if out.is_null() {
        return fail(ReocStatus::NullArgument, "null out pointer");
    }
    let name = match read_str(family) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let f: Family = match name.parse() {
        Ok(f) => f,
        Err(e) => return fail(ReocStatus::InvalidInput, e.to_string()),
    };
    match gen_family(FamilySpec::new(f, size)) {
        Ok(c) => {
            *out = Box::into_raw(Box::new(ReocConnector(c)));
            ReocStatus::Ok
        }
        Err(e) => fail(ReocStatus::InvalidInput, e.to_string()),
    }
}

/// # Safety
/// `c` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn reoc_connector_free(c: *mut ReocConnector) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Source text of the connector; free with [`reoc_string_free`].
///
/// # Safety
/// `c` is a live handle; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn reoc_connector_source(c: *const ReocConnector, out: *mut *mut c_char) -> ReocStatus {
    if c.is_null() || out.is_null() {
        return fail(ReocStatus::NullArgument, "null argument");
    }
    *out = into_c_string((*c).0.to_string());
    ReocStatus::Ok
}

/// Compiles over the connector's declared (or agnostic) data domain.
///
/// # Safety
/// `c` is a live handle; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn reoc_compile(
    c: *const ReocConnector,
    strategy: ReocStrategy,
    budget: usize,
    out: *mut *mut ReocProtocol,
) -> ReocStatus {
    if c.is_null() || out.is_null() {
        return fail(ReocStatus::NullArgument, "null argument");
    }
    let c = &(*c).0;
    match compile(c, strategy.into(), &c.data_domain(), budget) {
        Ok(p) => {
            *out = Box::into_raw(Box::new(ReocProtocol(p)));
            ReocStatus::Ok
        }
        Err(e) => compile_status(&e),
    }
}

/// # Safety
/// `p` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn reoc_protocol_free(p: *mut ReocProtocol) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of units; 0 for a null handle.
///
/// # Safety
/// `p` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn reoc_protocol_unit_count(p: *const ReocProtocol) -> usize {
    if p.is_null() {
        return 0;
    }
    (*p).0.units.len()
}

/// State and transition count of unit `index`.
///
/// # Safety
/// `p` is a live handle; `states` and `transitions` are valid pointers.
#[no_mangle]
pub unsafe extern "C" fn reoc_protocol_unit_size(
    p: *const ReocProtocol,
    index: usize,
    states: *mut usize,
    transitions: *mut usize,
) -> ReocStatus {
    if p.is_null() || states.is_null() || transitions.is_null() {
        return fail(ReocStatus::NullArgument, "null argument");
    }
    let Some(u) = (&*p).0.units.get(index) else {
        return fail(ReocStatus::IndexOutOfRange, format!("no unit {index}"));
    };
    (*states, *transitions) = u.automaton.counts();
    ReocStatus::Ok
}

/// Unit `index` as automaton JSON; free with [`reoc_string_free`].
///
/// # Safety
/// `p` is a live handle; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn reoc_protocol_unit_json(
    p: *const ReocProtocol,
    index: usize,
    out: *mut *mut c_char,
) -> ReocStatus {
    if p.is_null() || out.is_null() {
        return fail(ReocStatus::NullArgument, "null argument");
    }
    let Some(u) = (&*p).0.units.get(index) else {
        return fail(ReocStatus::IndexOutOfRange, format!("no unit {index}"));
    };
    *out = into_c_string(u.automaton.to_json_string());
    ReocStatus::Ok
}

/// Whether two connectors are bisimilar on their boundary, pairing external
/// ports in sorted order.
///
/// # Safety
/// `a`, `b` are live handles; `equivalent` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn reoc_equivalent(
    a: *const ReocConnector,
    b: *const ReocConnector,
    budget: usize,
    equivalent: *mut bool,
) -> ReocStatus {
    if a.is_null() || b.is_null() || equivalent.is_null() {
        return fail(ReocStatus::NullArgument, "null argument");
    }
    let whole = |c: &Connector| {
        compile(c, Strategy::Centralized, &c.data_domain(), budget).map(|mut p| p.units.remove(0).automaton)
    };
    let (x, y) = match (whole(&(*a).0), whole(&(*b).0)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return compile_status(&e),
    };
    if x.ports().len() != y.ports().len() || x.domain() != y.domain() {
        *equivalent = false;
        return ReocStatus::Ok;
    }
    let map = y.ports().iter().cloned().zip(x.ports().iter().cloned()).collect();
    let y = match y.rename_ports(&map) {
        Ok(y) => y,
        Err(e) => return fail(ReocStatus::InvalidInput, e.to_string()),
    };
    *equivalent = bisimilar(&x, &y).unwrap_or(false);
    ReocStatus::Ok
}

/// Runs the connector against a JSON stimulus script and writes the trace
/// as JSON. A run that cannot finish still writes its trace and returns
/// [`ReocStatus::Deadlock`].
///
/// # Safety
/// `c` is a live handle; `script` is a NUL-terminated string; `trace_json`
/// is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn reoc_run(
    c: *const ReocConnector,
    strategy: ReocStrategy,
    script: *const c_char,
    trace_json: *mut *mut c_char,
) -> ReocStatus {
    if c.is_null() || trace_json.is_null() {
        return fail(ReocStatus::NullArgument, "null argument");
    }
    let c = &(*c).0;
    let text = match read_str(script) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let script = match StimulusScript::from_json_str(text) {
        Ok(s) => s,
        Err(e) => return fail(ReocStatus::InvalidInput, e.to_string()),
    };
    let d = script.domain_for(c);
    let ep = match script.resolve(&c.source_ports(), &c.sink_ports(), &d) {
        Ok(ep) => ep,
        Err(e) => return fail(ReocStatus::InvalidInput, e.to_string()),
    };
    let cp = match compile(c, strategy.into(), &d, reoc::compile::DEFAULT_BUDGET) {
        Ok(cp) => cp,
        Err(e) => return compile_status(&e),
    };
    let run = run_regional(&cp, &ep, script.seed, script.step_limit());
    *trace_json = into_c_string(serde_json::to_string(&run.outcome.trace).expect("trace serializes"));
    match run.outcome.status {
        RunStatus::Completed => ReocStatus::Ok,
        other => fail(ReocStatus::Deadlock, format!("run did not complete: {other:?}")),
    }
}

/// Checks harness output lines (`P1,P2;p1=v1,p2=v2`) against the
/// connector's centralized automaton over `domain_json`, a JSON array of
/// literals (null for the connector's own domain).
///
/// # Safety
/// `c` is a live handle; `trace_lines` is a NUL-terminated string;
/// `domain_json` is null or NUL-terminated; `accepted` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn reoc_validate_trace(
    c: *const ReocConnector,
    trace_lines: *const c_char,
    domain_json: *const c_char,
    accepted: *mut bool,
) -> ReocStatus {
    if c.is_null() || accepted.is_null() {
        return fail(ReocStatus::NullArgument, "null argument");
    }
    let mut connector = (*c).0.clone();
    if !domain_json.is_null() {
        let values: Vec<String> = match read_str(domain_json).map(serde_json::from_str) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => return fail(ReocStatus::InvalidInput, format!("domain: {e}")),
            Err(s) => return s,
        };
        connector = match connector.with_domain(Some(values)) {
            Ok(c) => c,
            Err(e) => return fail(ReocStatus::InvalidInput, e.to_string()),
        };
    }
    let text = match read_str(trace_lines) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let trace = match parse_harness_trace(text) {
        Ok(t) => t,
        Err(e) => return fail(ReocStatus::InvalidInput, e.to_string()),
    };
    let big = match compile(&connector, Strategy::Centralized, &connector.data_domain(), reoc::compile::DEFAULT_BUDGET)
    {
        Ok(mut p) => p.units.remove(0).automaton,
        Err(e) => return compile_status(&e),
    };
    *accepted = accepts(&big, &trace);
    ReocStatus::Ok
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn error_message_is_per_thread() {
        set_error("here");
        let other = std::thread::spawn(|| reoc_last_error_message().is_null()).join().unwrap();
        assert!(other);
        let msg = unsafe { CStr::from_ptr(reoc_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "here");
    }

    #[test]
    fn null_arguments_are_reported() {
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { reoc_connector_parse(ptr::null(), &mut out) }, ReocStatus::NullArgument);
        assert!(out.is_null());
        let src = cstr("connector x\n");
        assert_eq!(unsafe { reoc_connector_parse(src.as_ptr(), ptr::null_mut()) }, ReocStatus::NullArgument);
        assert_eq!(unsafe { reoc_protocol_unit_count(ptr::null()) }, 0);
    }

    #[test]
    fn invalid_utf8_is_rejected() {
        let bytes = [0xffu8, 0xfe, 0];
        let mut out = ptr::null_mut();
        let status = unsafe { reoc_connector_parse(bytes.as_ptr().cast(), &mut out) };
        assert_eq!(status, ReocStatus::InvalidUtf8);
    }
}
