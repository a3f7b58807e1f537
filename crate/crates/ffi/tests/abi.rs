use std::ffi::{CStr, CString};
use std::ptr;

use sobexlab_ffi::*;

fn last_error() -> String {
    let p = sobex_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn mushroom(n: usize, p: f64, q: f64, m: usize) -> *mut SobexDomain {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { sobex_mushroom_new(n, p, q, m, &mut d) }, SobexStatus::Ok);
    assert!(!d.is_null());
    d
}

fn field(d: *const SobexDomain, name: &str) -> *mut SobexField {
    let name = CString::new(name).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { sobex_field_new(d, name.as_ptr(), &mut f) }, SobexStatus::Ok);
    f
}

#[test]
fn radii_and_dimension() {
    let d = mushroom(3, 5.0, 1.0, 12);
    unsafe {
        assert_eq!(sobex_domain_dim(d), 3);
        let (mut ls, mut lh) = (0.0, 0.0);
        assert_eq!(sobex_mushroom_log2_radii(d, 3, &mut ls, &mut lh), SobexStatus::Ok);
        assert_eq!(lh, -4.0);
        assert!((ls - (-2.0 * 3.0 * (0.5 + 5.0))).abs() < 1e-12);
        assert_eq!(
            sobex_mushroom_log2_radii(d, 13, &mut ls, &mut lh),
            SobexStatus::InvalidArgument
        );
        assert!(last_error().contains("k = 13"));
        sobex_domain_free(d);
    }
}

#[test]
fn classify_into_buffer() {
    let d = mushroom(3, 5.0, 1.0, 4);
    let x = [0.5, 0.5, 0.5];
    let mut buf = [0 as std::ffi::c_char; 32];
    unsafe {
        assert_eq!(
            sobex_domain_classify(d, x.as_ptr(), 3, buf.as_mut_ptr(), buf.len()),
            SobexStatus::Ok
        );
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "cube");
        assert_eq!(
            sobex_domain_classify(d, x.as_ptr(), 3, buf.as_mut_ptr(), 3),
            SobexStatus::BufferTooSmall
        );
        assert_eq!(
            sobex_domain_classify(d, x.as_ptr(), 2, buf.as_mut_ptr(), 32),
            SobexStatus::InvalidArgument
        );
        sobex_domain_free(d);
    }
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        assert_eq!(
            sobex_mushroom_new(3, 5.0, 1.0, 2, ptr::null_mut()),
            SobexStatus::NullPointer
        );
        assert!(last_error().contains("out"));
        let mut f = ptr::null_mut();
        let name = CString::new("poly:1").unwrap();
        assert_eq!(
            sobex_field_new(ptr::null(), name.as_ptr(), &mut f),
            SobexStatus::NullPointer
        );
        sobex_domain_free(ptr::null_mut());
        sobex_field_free(ptr::null_mut());
        sobex_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_parameters_map_to_status() {
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(sobex_mushroom_new(2, 5.0, 1.0, 2, &mut d), SobexStatus::InvalidArgument);
        assert!(d.is_null());
        let dd = mushroom(3, 5.0, 1.0, 2);
        let mut f = ptr::null_mut();
        let bad = CString::new("nope:1").unwrap();
        assert_eq!(sobex_field_new(dd, bad.as_ptr(), &mut f), SobexStatus::InvalidArgument);
        assert!(last_error().contains("unknown field"));
        sobex_domain_free(dd);
    }
}

#[test]
fn error_is_thread_local() {
    let mut d = ptr::null_mut();
    unsafe { sobex_mushroom_new(1, 5.0, 1.0, 2, &mut d) };
    std::thread::spawn(|| {
        sobex_clear_error();
        assert!(sobex_last_error().is_null());
    })
    .join()
    .unwrap();
    assert!(!sobex_last_error().is_null());
    sobex_clear_error();
    assert!(sobex_last_error().is_null());
}

#[test]
fn extension_matches_field_on_cube() {
    let d = mushroom(3, 5.0, 1.0, 4);
    let f = field(d, "trig:1");
    let x = [0.3, 0.6, 0.4];
    let (mut v, mut e) = (0.0, 0.0);
    let mut g = [0.0; 3];
    unsafe {
        assert_eq!(sobex_field_value(f, x.as_ptr(), 3, &mut v), SobexStatus::Ok);
        assert_eq!(
            sobex_extension_eval(d, f, x.as_ptr(), 3, &mut e, g.as_mut_ptr()),
            SobexStatus::Ok
        );
        assert_eq!(v, e);
        assert!(g.iter().all(|c| c.is_finite()));
        let outside = [0.3, 0.6, 3.5];
        assert_eq!(
            sobex_extension_eval(d, f, outside.as_ptr(), 3, &mut e, ptr::null_mut()),
            SobexStatus::OutsideDomain
        );
        sobex_field_free(f);
        sobex_domain_free(d);
    }
}

#[test]
fn cutoffs_partition_unity() {
    let (mut li, mut lo) = (0.0, 0.0);
    unsafe {
        assert_eq!(sobex_cutoffs(0.05, 0.5, 0.5, &mut li, &mut lo), SobexStatus::Ok);
        assert!((li + lo - 1.0).abs() < 1e-15);
        assert_eq!(
            sobex_cutoffs(0.5, 0.5, 0.5, &mut li, &mut lo),
            SobexStatus::OutsideDomain
        );
    }
}

#[test]
fn head_bottom_jump_for_constant() {
    let d = mushroom(3, 5.0, 1.0, 3);
    let f = field(d, "const:1");
    let face = CString::new("head_bottom:1").unwrap();
    let mut sup = 0.0;
    unsafe {
        assert_eq!(sobex_trace_jump(d, f, face.as_ptr(), 1.0, &mut sup), SobexStatus::Ok);
        sobex_field_free(f);
        sobex_domain_free(d);
    }
    assert!((sup - 1.0).abs() < 1e-6);
}

#[test]
fn cube_volume_through_norm() {
    let d = mushroom(3, 5.0, 1.0, 3);
    let f = field(d, "const:1");
    let regions = CString::new("cube").unwrap();
    let (mut l, mut err) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            sobex_norm(d, f, 0, 2.0, regions.as_ptr(), 0, ptr::null(), &mut l, &mut err),
            SobexStatus::Ok
        );
        assert!(l.abs() < 1e-12);
        let bad = CString::new(r#"{"radial_nodes": 0}"#).unwrap();
        assert_eq!(
            sobex_norm(d, f, 0, 2.0, regions.as_ptr(), 0, bad.as_ptr(), &mut l, &mut err),
            SobexStatus::Config
        );
        assert_eq!(
            sobex_norm(d, f, 7, 2.0, regions.as_ptr(), 0, ptr::null(), &mut l, &mut err),
            SobexStatus::InvalidArgument
        );
        sobex_field_free(f);
        sobex_domain_free(d);
    }
}

#[test]
fn experiment_report_round_trip() {
    let cfg = CString::new(
        r#"{"domain": {"type": "mushroom", "n": 3, "p": 1.5, "q": 1.0, "m": 8, "centers": null},
            "experiment": {"kmax": 8}}"#,
    )
    .unwrap();
    let name = CString::new("rate7").unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(
            sobex_experiment_run(cfg.as_ptr(), name.as_ptr(), &mut out),
            SobexStatus::Ok
        );
        let text = CStr::from_ptr(out).to_str().unwrap().to_string();
        sobex_string_free(out);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["experiment"], "rate7");
        let bogus = CString::new("rate9").unwrap();
        assert_eq!(
            sobex_experiment_run(cfg.as_ptr(), bogus.as_ptr(), &mut out),
            SobexStatus::InvalidArgument
        );
    }
}

#[test]
fn domain_from_config_json() {
    let cfg =
        CString::new(r#"{"domain": {"type": "comb", "n": 3, "kmax": 5, "aspect_shrink": false, "p": 1.5, "q": 1.0}}"#)
            .unwrap();
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(sobex_domain_from_config(cfg.as_ptr(), &mut d), SobexStatus::Ok);
        assert_eq!(sobex_domain_dim(d), 3);
        let mut passed = 0;
        assert_eq!(sobex_mushroom_validate(d, &mut passed), SobexStatus::Unsupported);
        sobex_domain_free(d);
        let bad = CString::new(r#"{"domain": {"type": "torus"}}"#).unwrap();
        assert_eq!(sobex_domain_from_config(bad.as_ptr(), &mut d), SobexStatus::Config);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/sobexlab.h");
    let dir = tempfile_dir();
    let src = dir.join("check.c");
    std::fs::write(
        &src,
        format!("#include \"{header}\"\nint main(void) {{ return sobex_last_error() == 0 ? 0 : 1; }}\n"),
    )
    .unwrap();
    let Ok(status) = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(status.success());
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("sobexlab-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
