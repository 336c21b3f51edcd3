use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use shapesmooth_ffi::*;

fn hat() -> *mut ShapesmoothPpf {
    let bp = [-1.0, 0.0, 1.0];
    let coeffs = [1.0, -1.0, 0.0, 1.0];
    let mut out = ptr::null_mut();
    let st = unsafe { shapesmooth_ppf_new(bp.as_ptr(), 2, coeffs.as_ptr(), 1, &mut out) };
    assert_eq!(st, ShapesmoothStatus::Ok);
    out
}

fn last_error() -> String {
    let p = shapesmooth_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn build_eval_and_inspect() {
    let s = hat();
    unsafe {
        assert_eq!(shapesmooth_ppf_num_intervals(s), 2);
        let mut y = f64::NAN;
        assert_eq!(shapesmooth_ppf_eval(s, -0.5, &mut y), ShapesmoothStatus::Ok);
        assert_eq!(y, 0.5);
        assert_eq!(shapesmooth_ppf_eval(s, 0.25, &mut y), ShapesmoothStatus::Ok);
        assert_eq!(y, 0.25);
        let mut buf = [0.0; 3];
        assert_eq!(shapesmooth_ppf_breakpoints(s, buf.as_mut_ptr(), 3), 3);
        assert_eq!(buf, [-1.0, 0.0, 1.0]);
        assert_eq!(shapesmooth_ppf_smoothness_class(s), 0);
        let mut holds = false;
        assert_eq!(shapesmooth_ppf_is_q_monotone(s, 2, &mut holds), ShapesmoothStatus::Ok);
        assert!(holds);
        assert_eq!(shapesmooth_ppf_is_q_monotone(s, 1, &mut holds), ShapesmoothStatus::Ok);
        assert!(!holds);
        shapesmooth_ppf_free(s);
    }
}

#[test]
fn json_round_trip() {
    let s = hat();
    unsafe {
        let mut text = ptr::null_mut();
        assert_eq!(shapesmooth_ppf_to_json(s, &mut text), ShapesmoothStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(shapesmooth_ppf_from_json(text, &mut back), ShapesmoothStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(shapesmooth_ppf_to_json(back, &mut again), ShapesmoothStatus::Ok);
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(again));
        shapesmooth_string_free(text);
        shapesmooth_string_free(again);
        shapesmooth_ppf_free(back);
        shapesmooth_ppf_free(s);
    }
}

#[test]
fn smooth_convex_hat() {
    let s = hat();
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(shapesmooth_smooth(s, 2, 1, 0.0, &mut t), ShapesmoothStatus::Ok);
        assert!(shapesmooth_ppf_smoothness_class(t) >= 2);
        let mut holds = false;
        assert_eq!(shapesmooth_ppf_is_q_monotone(t, 2, &mut holds), ShapesmoothStatus::Ok);
        assert!(holds);
        let mut y = 0.0;
        shapesmooth_ppf_eval(t, -1.0, &mut y);
        assert_eq!(y, 1.0);
        shapesmooth_ppf_eval(t, 1.0, &mut y);
        assert_eq!(y, 1.0);
        shapesmooth_ppf_free(t);
        shapesmooth_ppf_free(s);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(shapesmooth_ppf_new(ptr::null(), 2, ptr::null(), 1, &mut out), ShapesmoothStatus::NullPointer);
        assert!(last_error().contains("null"));

        let bp = [0.0, 1.0, 1.0];
        let coeffs = [0.0; 4];
        assert_eq!(
            shapesmooth_ppf_new(bp.as_ptr(), 2, coeffs.as_ptr(), 1, &mut out),
            ShapesmoothStatus::InvalidPartition
        );
        assert!(out.is_null());

        let bad = CString::new("{\"breakpoints\": [0, 1]}").unwrap();
        assert_eq!(shapesmooth_ppf_from_json(bad.as_ptr(), &mut out), ShapesmoothStatus::Json);

        // Concave: the convex smoothing must refuse it.
        let bp = [-1.0, 0.0, 1.0];
        let coeffs = [0.0, 1.0, 1.0, -1.0];
        let mut s = ptr::null_mut();
        assert_eq!(shapesmooth_ppf_new(bp.as_ptr(), 2, coeffs.as_ptr(), 1, &mut s), ShapesmoothStatus::Ok);
        assert_eq!(shapesmooth_smooth(s, 2, 1, 0.0, &mut out), ShapesmoothStatus::NotInShapeClass);
        assert!(!last_error().is_empty());

        let zt = [-1.0, 0.5];
        assert_eq!(shapesmooth_smooth_on(s, 1, 1, zt.as_ptr(), 2, &mut out), ShapesmoothStatus::InvalidPartition);
        shapesmooth_ppf_free(s);

        let mut y = 0.0;
        assert_eq!(shapesmooth_ppf_eval(ptr::null(), 0.0, &mut y), ShapesmoothStatus::NullPointer);
        let h = hat();
        assert_eq!(shapesmooth_ppf_eval(h, 0.0, &mut y), ShapesmoothStatus::Ok);
        assert!(shapesmooth_last_error_message().is_null());
        shapesmooth_ppf_free(h);
    }
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(shapesmooth_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "shapesmooth.h"

int main(void) {
    double bp[] = {-1.0, 0.0, 1.0};
    double c[] = {1.0, -1.0, 0.0, 1.0};
    ShapesmoothPpf *s = NULL, *t = NULL;
    if (shapesmooth_ppf_new(bp, 2, c, 1, &s) != SHAPESMOOTH_STATUS_OK) return 1;
    if (shapesmooth_smooth(s, 2, 1, 0.0, &t) != SHAPESMOOTH_STATUS_OK) {
        fprintf(stderr, "%s\n", shapesmooth_last_error_message());
        return 2;
    }
    bool convex = false;
    shapesmooth_ppf_is_q_monotone(t, 2, &convex);
    double y = 0.0;
    shapesmooth_ppf_eval(t, 1.0, &y);
    printf("%d %lld %.17g\n", convex, (long long)shapesmooth_ppf_smoothness_class(t), y);
    if (shapesmooth_ppf_new(NULL, 2, c, 1, &s) != SHAPESMOOTH_STATUS_NULL_POINTER) return 3;
    shapesmooth_ppf_free(t);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libshapesmooth_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let dir = tempfile_dir();
    let src = dir.join("main.c");
    let bin = dir.join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler not found");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1 2 1");
    std::fs::remove_dir_all(dir).ok();
}

fn tempfile_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_api");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
