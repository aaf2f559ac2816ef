use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use actstate_ffi::*;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn last_error() -> String {
    let p = act_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(name: &str) -> *mut ActSpec {
    let path = CString::new(configs().join(name).to_str().unwrap()).unwrap();
    let mut spec = ptr::null_mut();
    assert_eq!(unsafe { act_spec_load(path.as_ptr(), &mut spec) }, ActStatus::Ok);
    assert!(!spec.is_null());
    spec
}

#[test]
fn binary_region_through_handles() {
    let mut region = ptr::null_mut();
    assert_eq!(unsafe { act_binary_example_region(0.1, 0.1, 51, &mut region) }, ActStatus::Ok);
    let mut n = 0;
    assert_eq!(unsafe { act_region_hull_len(region, &mut n) }, ActStatus::Ok);
    assert!(n > 2);
    let (mut r1, mut r2) = (0.0, 0.0);
    assert_eq!(unsafe { act_region_hull_point(region, n - 1, &mut r1, &mut r2) }, ActStatus::Ok);
    let h = |q: f64| -q * q.log2() - (1.0 - q) * (1.0 - q).log2();
    assert!((r1 - (1.0 - h(0.1))).abs() < 1e-12);
    assert!(r2.abs() < 1e-12);
    assert_eq!(unsafe { act_region_hull_point(region, n, &mut r1, &mut r2) }, ActStatus::InvalidArgument);
    assert!(last_error().contains("hull"));
    let mut v = 0.0;
    assert_eq!(unsafe { act_region_support(region, 1.0, &mut v) }, ActStatus::Ok);
    assert!((v - (1.0 - h(0.1))).abs() < 1e-12);
    unsafe { act_region_free(region) };
}

#[test]
fn spec_kinds_and_solvers() {
    let bc = load("binary_example.toml");
    let mut kind = ActSpecKind::Ptp;
    assert_eq!(unsafe { act_spec_kind(bc, &mut kind) }, ActStatus::Ok);
    assert_eq!(kind, ActSpecKind::Bc);
    let mut region = ptr::null_mut();
    assert_eq!(unsafe { act_bc_region(bc, 0.1, 2, 2, 5, 0, &mut region) }, ActStatus::Ok);
    let mut v = 0.0;
    assert_eq!(unsafe { act_region_support(region, 0.0, &mut v) }, ActStatus::Ok);
    assert!(v > 0.3);
    unsafe { act_region_free(region) };

    let mut point = ActCdcPoint::default();
    assert_eq!(unsafe { act_cdc_solve(bc, 1.0, 1.0, 0, 2, 0, &mut point) }, ActStatus::WrongKind);
    unsafe { act_spec_free(bc) };

    let ptp = load("ptp_binary.toml");
    assert_eq!(unsafe { act_cdc_solve(ptp, 0.1, 1.0, 2, 4, 0, &mut point) }, ActStatus::Ok);
    assert!(point.rate > 0.0 && point.distortion <= 0.1 + 1e-9 && point.cost <= 1.0 + 1e-9);
    assert_eq!(unsafe { act_cdc_solve(ptp, -1.0, 1.0, 2, 4, 0, &mut point) }, ActStatus::InvalidArgument);
    unsafe { act_spec_free(ptp) };
}

#[test]
fn parse_errors_report_config_status() {
    let text = CString::new("kind = \"bc\"\n").unwrap();
    let mut spec = ptr::null_mut();
    assert_eq!(unsafe { act_spec_parse(text.as_ptr(), &mut spec) }, ActStatus::Config);
    assert!(spec.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { act_spec_parse(ptr::null(), &mut spec) }, ActStatus::NullPointer);
    assert_eq!(unsafe { act_spec_kind(ptr::null(), ptr::null_mut()) }, ActStatus::NullPointer);
    unsafe { act_spec_free(ptr::null_mut()) };
    unsafe { act_region_free(ptr::null_mut()) };
}

#[test]
fn gaussian_point() {
    let mut p = ActGaussPoint::default();
    let st = unsafe { act_gauss_optimize(1.0, 1.0, 1.0, 1.0, 1.0, ActGaussMode::Joint, 10, 0, &mut p) };
    assert_eq!(st, ActStatus::Ok);
    assert!(p.feasible && p.rate > 0.9);
    let st = unsafe { act_gauss_optimize(0.0, 1.0, 1.0, 1.0, 1.0, ActGaussMode::Joint, 10, 0, &mut p) };
    assert_eq!(st, ActStatus::InvalidArgument);
}

#[test]
fn success_clears_the_error() {
    let mut spec = ptr::null_mut();
    let bad = CString::new("").unwrap();
    unsafe { act_spec_parse(bad.as_ptr(), &mut spec) };
    assert!(!act_last_error().is_null());
    let mut region = ptr::null_mut();
    assert_eq!(unsafe { act_binary_example_region(0.1, 0.1, 3, &mut region) }, ActStatus::Ok);
    assert!(act_last_error().is_null());
    unsafe { act_region_free(region) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(act_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/actstate.h")).unwrap();
    for sym in ["act_spec_load", "act_cdc_solve", "act_bc_region", "act_region_free", "act_gauss_optimize", "act_last_error"] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
    let r = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(dir.join("tests/c/smoke.c"))
        .output();
    match r {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => eprintln!("skipping C compile check: {e}"),
    }
}
