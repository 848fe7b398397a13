use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use boojum_ffi::*;

fn last_error() -> String {
    let p = boojum_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn closed_form_and_errors() {
    let mut d = 0.0;
    assert_eq!(unsafe { boojum_d_inf_exact(0.5, &mut d) }, BoojumStatus::Ok);
    assert!((d - 24f64.powf(0.25) * 0.5).abs() < 1e-14);
    assert!(boojum_last_error_message().is_null());
    assert_eq!(unsafe { boojum_d_inf_exact(1.5, &mut d) }, BoojumStatus::InvalidArgument);
    assert!(last_error().contains("v3"));
    assert_eq!(unsafe { boojum_d_inf_exact(0.5, ptr::null_mut()) }, BoojumStatus::NullPointer);
    assert_eq!(unsafe { boojum_trace_t(0.1, 0.2, 1.0, &mut d) }, BoojumStatus::InvalidArgument);
}

#[test]
fn d_lambda_and_sphere() {
    let mut r = BoojumDLambda::default();
    assert_eq!(unsafe { boojum_d_lambda(f64::INFINITY, 0.25, 12.0, 769, &mut r) }, BoojumStatus::Ok);
    assert!(r.converged && (r.value - 24f64.powf(0.25) * 0.75).abs() < 1e-3);
    assert_eq!(unsafe { boojum_d_lambda(f64::NAN, 0.25, 12.0, 769, &mut r) }, BoojumStatus::InvalidArgument);
    let mut s = 0.0;
    assert_eq!(unsafe { boojum_sphere_longitudinal(f64::INFINITY, true, &mut s) }, BoojumStatus::Ok);
    let exact = std::f64::consts::PI * (4.0 - std::f64::consts::PI) * 24f64.powf(0.25);
    assert!((s - exact).abs() / exact < 5e-3);
    assert_eq!(unsafe { boojum_sphere_longitudinal(1.0, true, &mut s) }, BoojumStatus::InvalidArgument);
}

#[test]
fn fin_handle_lifecycle() {
    let mut fin = ptr::null_mut();
    assert_eq!(unsafe { boojum_fin_new(0.4, 0.08, 1.0, 12.0, 481, &mut fin) }, BoojumStatus::Ok);
    assert!(!fin.is_null());
    let mut e = BoojumRegionEnergies::default();
    assert_eq!(unsafe { boojum_fin_report(fin, 0.05, 0.05, &mut e) }, BoojumStatus::Ok);
    let sum = e.omega1 + e.omega2 + e.omega3 + e.omega4;
    assert!((sum - e.total).abs() < 1e-12 && e.lipschitz_hat > 0.0);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { boojum_fin_report_json(fin, 0.05, f64::INFINITY, &mut json) }, BoojumStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { boojum_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["mode"], "fin");

    let mut q = [0.0; 5];
    assert_eq!(unsafe { boojum_fin_tensor(fin, 0.05, 1.0, 1.0, &mut q) }, BoojumStatus::Ok);
    let (c, s) = (1.0f64.cos(), 1.0f64.sin());
    assert!((q[0] - (c * c - 1.0 / 3.0)).abs() < 1e-10 && (q[2] + c * s).abs() < 1e-10);
    assert_eq!(unsafe { boojum_fin_tensor(fin, 0.9, 1.0, 1.0, &mut q) }, BoojumStatus::InvalidArgument);

    unsafe { boojum_fin_free(fin) };
    unsafe { boojum_fin_free(ptr::null_mut()) };
    assert_eq!(unsafe { boojum_fin_report(ptr::null(), 0.05, 0.05, &mut e) }, BoojumStatus::NullPointer);
    assert_eq!(unsafe { boojum_fin_new(0.4, 0.3, 1.0, 12.0, 481, &mut fin) }, BoojumStatus::InvalidArgument);
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(boojum_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_exports() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/boojum.h")).unwrap();
    for name in [
        "boojum_last_error_message",
        "boojum_d_inf_exact",
        "boojum_d_lambda",
        "boojum_fin_new",
        "boojum_fin_free",
        "boojum_fin_report_json",
        "boojum_string_free",
        "BOOJUM_STATUS_NOT_CONVERGED",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

/// Compiles and runs a C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap();
    let lib = profile_dir.join("libboojum_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let out_dir = tempfile::tempdir().unwrap();
    let bin = out_dir.path().join("smoke");
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains(": 0 failures"));
}
