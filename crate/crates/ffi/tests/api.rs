use std::ffi::{c_void, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use bcfrac_ffi::*;

fn c(re: f64, im: f64) -> BcfracComplex {
    BcfracComplex { re, im }
}

fn bi(a: (f64, f64), b: (f64, f64)) -> BcfracBicomplex {
    BcfracBicomplex { z1: c(a.0, a.1), z2: c(b.0, b.1) }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(bcfrac_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn arithmetic_and_errors() {
    let x = bi((1.0, 2.0), (3.0, -1.0));
    let y = bi((0.5, 0.0), (-2.0, 1.0));
    let mut out = bi((0.0, 0.0), (0.0, 0.0));
    unsafe {
        assert_eq!(bcfrac_bicomplex_mul(x, y, &mut out), BcfracStatus::Ok);
        assert_eq!(out.z1, c(0.5, 1.0));
        assert_eq!(out.z2, c(-5.0, 5.0));
        assert_eq!(bcfrac_bicomplex_inv(x, &mut out), BcfracStatus::Ok);
        let mut one = out;
        bcfrac_bicomplex_mul(x, out, &mut one);
        assert!((one.z1.re - 1.0).abs() < 1e-15 && one.z2.im.abs() < 1e-15);

        let zd = bi((1.0, 0.0), (0.0, 0.0));
        assert!(bcfrac_bicomplex_is_zero_divisor(zd));
        assert_eq!(bcfrac_bicomplex_inv(zd, &mut out), BcfracStatus::ZeroDivisor);
        assert!(last_error().contains("zero divisor"));
        assert_eq!(bcfrac_bicomplex_add(x, y, ptr::null_mut()), BcfracStatus::NullPointer);
        assert!(last_error().contains("out"));

        let (mut a, mut b) = (c(0.0, 0.0), c(0.0, 0.0));
        assert_eq!(bcfrac_bicomplex_from_cartesian(c(1.0, 0.0), c(0.0, 0.0), &mut out), BcfracStatus::Ok);
        assert_eq!(bcfrac_bicomplex_to_cartesian(out, &mut a, &mut b), BcfracStatus::Ok);
        assert_eq!((a, b), (c(1.0, 0.0), c(0.0, 0.0)));
        assert!(last_error().is_empty());
        let mut m = BcfracHyperbolic { l1: 0.0, l2: 0.0 };
        assert_eq!(bcfrac_bicomplex_mod_k(bi((3.0, 4.0), (0.0, 2.0)), &mut m), BcfracStatus::Ok);
        assert_eq!((m.l1, m.l2), (5.0, 2.0));
    }
    let v = unsafe { CStr::from_ptr(bcfrac_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

extern "C" fn one(_t: f64, _user: *mut c_void) -> BcfracComplex {
    c(1.0, 0.0)
}

extern "C" fn scaled(t: f64, user: *mut c_void) -> BcfracComplex {
    let k = unsafe { *(user as *const f64) };
    c(k * t, 0.0)
}

#[test]
fn one_dimensional_operators() {
    unsafe {
        let mut w = ptr::null_mut();
        assert_eq!(bcfrac_scalar_weight_identity(0.0, 1.0, &mut w), BcfracStatus::Ok);
        let mut out = c(0.0, 0.0);
        let st = bcfrac_prop_frac_integral(Some(one), ptr::null_mut(), 0.5, 1.0, w, BcfracSide::Left, 1.0, 64, &mut out);
        assert_eq!(st, BcfracStatus::Ok);
        assert!((out.re - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-12);
        let mut k = 3.0f64;
        let st = bcfrac_prop_frac_derivative(Some(scaled), (&mut k as *mut f64).cast(), 0.5, 1.0, w, BcfracSide::Left, 0.5, 128, 1e-4, &mut out);
        assert_eq!(st, BcfracStatus::Ok);
        // D^{1/2} (3t) = 3 t^{1/2} / Γ(3/2)
        assert!((out.re - 3.0 * 0.5f64.sqrt() / (std::f64::consts::PI.sqrt() / 2.0)).abs() < 1e-6, "{out:?}");
        let st = bcfrac_prop_frac_integral(None, ptr::null_mut(), 0.5, 1.0, w, BcfracSide::Left, 1.0, 64, &mut out);
        assert_eq!(st, BcfracStatus::NullPointer);
        let st = bcfrac_prop_frac_integral(Some(one), ptr::null_mut(), 0.5, 1.0, w, BcfracSide::Left, 2.0, 64, &mut out);
        assert_eq!(st, BcfracStatus::Domain, "{}", last_error());
        bcfrac_scalar_weight_free(w);

        let coeffs = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(bcfrac_scalar_weight_polynomial(coeffs.as_ptr(), 4, 0.0, 1.0, &mut w), BcfracStatus::Ok);
        bcfrac_scalar_weight_free(w);
        let falling = [0.0, -1.0];
        assert_eq!(bcfrac_scalar_weight_polynomial(falling.as_ptr(), 2, 0.0, 1.0, &mut w), BcfracStatus::Domain);
    }
}

#[test]
fn operators_and_suite() {
    let toml = CString::new("preset = \"proportional\"\nlevels = 2\n").unwrap();
    let (f1, f2) = (CString::new("z1^2").unwrap(), CString::new("exp(z2)").unwrap());
    let spec = CString::new("classical").unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(bcfrac_config_from_toml(toml.as_ptr(), &mut cfg), BcfracStatus::Ok);
        let mut op = ptr::null_mut();
        assert_eq!(bcfrac_operator_new(cfg, 0, &mut op), BcfracStatus::Ok);
        let mut f = ptr::null_mut();
        assert_eq!(bcfrac_function_parse(f1.as_ptr(), f2.as_ptr(), &mut f), BcfracStatus::Ok);
        let mut wp = ptr::null_mut();
        assert_eq!(bcfrac_weights_parse(spec.as_ptr(), &mut wp), BcfracStatus::Ok);

        let (w, z) = (bi((0.3, 0.6), (0.5, 0.2)), bi((0.55, 0.45), (0.4, 0.6)));
        let mut v = bi((0.0, 0.0), (0.0, 0.0));
        assert_eq!(bcfrac_function_eval(f, z, &mut v), BcfracStatus::Ok);
        assert!((v.z1.re - (0.55f64 * 0.55 - 0.45 * 0.45)).abs() < 1e-15);
        assert_eq!(bcfrac_trace_integral(op, f, w, BcfracSide::Left, z, &mut v), BcfracStatus::Ok);
        assert!(v.z1.re.is_finite() && v.z2.im.is_finite());
        assert_eq!(bcfrac_trace_derivative(op, f, w, BcfracSide::Left, z, &mut v), BcfracStatus::Ok);
        assert_eq!(bcfrac_frac_cr_apply(op, f, wp, w, BcfracSide::Left, z, &mut v), BcfracStatus::Ok);
        let outside = bi((1.5, 0.5), (0.5, 0.5));
        assert_eq!(bcfrac_trace_integral(op, f, w, BcfracSide::Left, outside, &mut v), BcfracStatus::Domain);

        let dir = tempfile::tempdir().unwrap();
        let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
        let mut passed = false;
        assert_eq!(bcfrac_run_suite(cfg, out_dir.as_ptr(), &mut passed), BcfracStatus::Ok);
        assert!(passed);
        assert!(dir.path().join("summary.toml").exists());

        bcfrac_weights_free(wp);
        bcfrac_function_free(f);
        bcfrac_operator_free(op);
        bcfrac_config_free(cfg);
        bcfrac_config_free(ptr::null_mut());

        let bad = CString::new("preset = \"classical\"\nalpha = 2.0").unwrap();
        assert_eq!(bcfrac_config_from_toml(bad.as_ptr(), &mut cfg), BcfracStatus::Config);
        assert!(last_error().contains("alpha"));
        let broken = CString::new("z1 +").unwrap();
        assert_eq!(bcfrac_function_parse(broken.as_ptr(), f2.as_ptr(), &mut f), BcfracStatus::Config);
    }
}

/// Compiles and runs a C program against the generated header and the
/// static library.
#[test]
fn c_program_links() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libbcfrac_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <string.h>
#include "bcfrac.h"
int main(void) {
    BcfracBicomplex x = {{1.0, 2.0}, {3.0, -1.0}}, y;
    if (bcfrac_bicomplex_inv(x, &y) != BCFRAC_STATUS_OK) return 1;
    BcfracBicomplex zd = {{1.0, 0.0}, {0.0, 0.0}};
    if (bcfrac_bicomplex_inv(zd, &y) != BCFRAC_STATUS_ZERO_DIVISOR) return 2;
    if (strlen(bcfrac_last_error()) == 0) return 3;
    BcfracScalarWeight *w = NULL;
    if (bcfrac_scalar_weight_identity(0.0, 1.0, &w) != BCFRAC_STATUS_OK) return 4;
    bcfrac_scalar_weight_free(w);
    printf("%s\n", bcfrac_version());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("a C compiler");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), env!("CARGO_PKG_VERSION"));
}
