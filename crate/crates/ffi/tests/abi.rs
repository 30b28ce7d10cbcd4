use std::ffi::{CStr, CString};
use std::ptr;

use tangent_monad_ffi::*;

fn last_error() -> String {
    let p = tm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn example(name: &str) -> *mut TmAlgebra {
    let name = CString::new(name).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { tm_algebra_example(name.as_ptr(), &mut h) }, TmStatus::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn cylinder_round_trip() {
    let h = example("cylinder");
    unsafe {
        assert_eq!(tm_algebra_dim(h), 2);
        let (x, v, mut y) = ([0.5, 1.0], [0.25, 0.0], [0.0; 2]);
        assert_eq!(tm_algebra_apply(h, x.as_ptr(), v.as_ptr(), 2, y.as_mut_ptr()), TmStatus::Ok);
        assert_eq!(y, [0.5, 1.25]);
        let mut rank = 9;
        assert_eq!(tm_algebra_rank_at(h, x.as_ptr(), 2, &mut rank), TmStatus::Ok);
        assert_eq!(rank, 1);
        let mut json = ptr::null_mut();
        assert_eq!(tm_algebra_check(h, 50, 42, &mut json), TmStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        tm_string_free(json);
        let reports: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(reports.as_array().unwrap().iter().all(|r| r["passed"] == true));
        tm_algebra_free(h);
    }
}

#[test]
fn failing_algebra_reports_failed() {
    let spec = CString::new(r#"{"dim": 1, "exprs": ["x1 + v1"], "domain": {"min": [-1], "max": [1]}}"#).unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(tm_algebra_from_json(spec.as_ptr(), &mut h), TmStatus::Ok);
        assert_eq!(tm_algebra_check(h, 20, 1, ptr::null_mut()), TmStatus::Failed);
        tm_algebra_free(h);
    }
}

#[test]
fn errors_carry_messages() {
    let bad = CString::new(r#"{"dim": 1, "exprs": ["x1 +"], "domain": {"min": [-1], "max": [1]}}"#).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { tm_algebra_from_json(bad.as_ptr(), &mut h) }, TmStatus::Parse);
    assert!(h.is_null());
    assert!(last_error().contains("position"));

    assert_eq!(unsafe { tm_algebra_from_json(ptr::null(), &mut h) }, TmStatus::NullPointer);
    let name = CString::new("klein").unwrap();
    assert_eq!(unsafe { tm_algebra_example(name.as_ptr(), &mut h) }, TmStatus::InvalidSpec);
    assert!(last_error().contains("klein"));

    let cyl = example("cylinder");
    let x = [0.0; 3];
    let mut rank = 0;
    assert_eq!(unsafe { tm_algebra_rank_at(cyl, x.as_ptr(), 3, &mut rank) }, TmStatus::Shape);
    unsafe { tm_algebra_free(cyl) };
}

#[test]
fn law_checkers() {
    unsafe {
        assert_eq!(tm_verify_monad(2, 20, 42, true, ptr::null_mut()), TmStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(tm_kahler_verify(2, 42, &mut json), TmStatus::Ok);
        assert!(!json.is_null());
        tm_string_free(json);
    }
    assert!(!tm_version().is_null());
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/tangent_monad.h")).unwrap();
    for sym in [
        "tm_last_error",
        "tm_version",
        "tm_string_free",
        "tm_algebra_from_json",
        "tm_algebra_example",
        "tm_algebra_free",
        "tm_algebra_dim",
        "tm_algebra_apply",
        "tm_algebra_rank_at",
        "tm_algebra_check",
        "tm_verify_monad",
        "tm_kahler_verify",
        "typedef struct TmAlgebra TmAlgebra",
        "TM_STATUS_FAILED = 1",
    ] {
        assert!(header.contains(sym), "{sym}");
    }
}
