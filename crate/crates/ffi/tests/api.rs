use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use reoc_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(reoc_last_error_message()) }.to_str().unwrap().to_string()
}

fn generate(family: &str, k: usize) -> *mut ReocConnector {
    let mut c = ptr::null_mut();
    let name = cstr(family);
    assert_eq!(unsafe { reoc_connector_generate(name.as_ptr(), k, &mut c) }, ReocStatus::Ok);
    c
}

fn take_string(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { reoc_string_free(s) };
    out
}

#[test]
fn compile_reports_unit_sizes() {
    let c = generate("alternator", 3);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { reoc_compile(c, ReocStrategy::Middleground, 1_000_000, &mut p) }, ReocStatus::Ok);
    assert_eq!(unsafe { reoc_protocol_unit_count(p) }, 3);
    let (mut s, mut t) = (0, 0);
    for u in 0..3 {
        assert_eq!(unsafe { reoc_protocol_unit_size(p, u, &mut s, &mut t) }, ReocStatus::Ok);
        assert!(s >= 1 && t >= 1);
        let mut json = ptr::null_mut();
        assert_eq!(unsafe { reoc_protocol_unit_json(p, u, &mut json) }, ReocStatus::Ok);
        let ca = reoc::ca::ConstraintAutomaton::from_json_str(&take_string(json)).unwrap();
        assert_eq!(ca.counts(), (s, t));
    }
    assert_eq!(unsafe { reoc_protocol_unit_size(p, 3, &mut s, &mut t) }, ReocStatus::IndexOutOfRange);
    unsafe {
        reoc_protocol_free(p);
        reoc_connector_free(c);
    }
}

#[test]
fn budget_overrun_has_its_own_status() {
    let c = generate("alternator", 12);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { reoc_compile(c, ReocStrategy::Centralized, 5, &mut p) }, ReocStatus::BudgetExceeded);
    assert!(p.is_null());
    assert!(last_error().contains("budget 5 exceeded"), "{}", last_error());
    unsafe { reoc_connector_free(c) };
}

#[test]
fn source_round_trips_through_parse() {
    let c = generate("sequencer", 4);
    let mut src = ptr::null_mut();
    assert_eq!(unsafe { reoc_connector_source(c, &mut src) }, ReocStatus::Ok);
    let text = cstr(&take_string(src));
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { reoc_connector_parse(text.as_ptr(), &mut d) }, ReocStatus::Ok);
    let mut same = false;
    assert_eq!(unsafe { reoc_equivalent(c, d, 1_000_000, &mut same) }, ReocStatus::Ok);
    assert!(same);
    unsafe {
        reoc_connector_free(c);
        reoc_connector_free(d);
    }
}

#[test]
fn parse_errors_carry_a_message() {
    let bad = cstr("connector bad\nsync s A => B\n");
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { reoc_connector_parse(bad.as_ptr(), &mut c) }, ReocStatus::InvalidInput);
    assert!(c.is_null());
    assert!(!last_error().is_empty());
    let name = cstr("nonesuch");
    assert_eq!(unsafe { reoc_connector_generate(name.as_ptr(), 3, &mut c) }, ReocStatus::InvalidInput);
}

#[test]
fn different_connectors_are_not_equivalent() {
    let a = generate("alternator", 2);
    let b = generate("asyncmerger", 2);
    let mut same = true;
    assert_eq!(unsafe { reoc_equivalent(a, b, 1_000_000, &mut same) }, ReocStatus::Ok);
    assert!(!same);
    unsafe {
        reoc_connector_free(a);
        reoc_connector_free(b);
    }
}

#[test]
fn run_produces_a_trace_the_validator_accepts() {
    let c = generate("alternator", 2);
    let script = cstr(r#"{"writes":{"P1":["a"],"P2":["b"]},"reads":{"Z":2},"seed":3}"#);
    let mut trace = ptr::null_mut();
    assert_eq!(unsafe { reoc_run(c, ReocStrategy::Mixed, script.as_ptr(), &mut trace) }, ReocStatus::Ok);
    let trace: reoc::runtime::Trace = serde_json::from_str(&take_string(trace)).unwrap();
    let z: Vec<&str> = trace.iter().filter_map(|t| t.data.get("Z.ext")).map(String::as_str).collect();
    assert_eq!(z, ["a", "b"]);

    let domain = cstr(r#"["a","b"]"#);
    let mut ok = false;
    let good = cstr("P1.ext,P2.ext,Z.ext;P1.ext=a,P2.ext=b,Z.ext=a\nZ.ext;Z.ext=b\n");
    assert_eq!(unsafe { reoc_validate_trace(c, good.as_ptr(), domain.as_ptr(), &mut ok) }, ReocStatus::Ok);
    assert!(ok);
    let wrong = cstr("P1.ext,P2.ext,Z.ext;P1.ext=a,P2.ext=b,Z.ext=b\n");
    assert_eq!(unsafe { reoc_validate_trace(c, wrong.as_ptr(), domain.as_ptr(), &mut ok) }, ReocStatus::Ok);
    assert!(!ok);
    unsafe { reoc_connector_free(c) };
}

#[test]
fn starved_run_reports_deadlock_with_partial_trace() {
    let c = generate("alternator", 2);
    let script = cstr(r#"{"writes":{"P1":["*"],"P2":["*"]},"reads":{"Z":3}}"#);
    let mut trace = ptr::null_mut();
    assert_eq!(unsafe { reoc_run(c, ReocStrategy::Centralized, script.as_ptr(), &mut trace) }, ReocStatus::Deadlock);
    assert!(!trace.is_null());
    let trace: reoc::runtime::Trace = serde_json::from_str(&take_string(trace)).unwrap();
    assert_eq!(trace.len(), 2);
    unsafe { reoc_connector_free(c) };
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/reoc.h");
    let dir = tempfile::TempDir::new().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\n\
             int main(void) {{\n\
               ReocConnector *c = 0;\n\
               ReocStatus s = reoc_connector_generate(\"alternator\", 3, &c);\n\
               return s == REOC_STATUS_OK ? 0 : (int)REOC_STRATEGY_MIXED;\n\
             }}\n"
        ),
    )
    .unwrap();
    let Ok(out) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
