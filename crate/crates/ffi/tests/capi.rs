use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use bicm_ffi::*;

fn qam16() -> *mut BicmConstellation {
    let name = CString::new("16QAM").unwrap();
    let mut c = ptr::null_mut();
    let st = unsafe { bicm_constellation_new(name.as_ptr(), BICM_LABELING_GRAY, &mut c) };
    assert_eq!(st, BicmStatus::Ok);
    assert!(!c.is_null());
    c
}

fn last_error() -> String {
    let p = bicm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn constellation_handle_roundtrip() {
    let c = qam16();
    let (mut n, mut m) = (0usize, 0usize);
    assert_eq!(unsafe { bicm_constellation_size(c, &mut n, &mut m) }, BicmStatus::Ok);
    assert_eq!((n, m), (16, 4));
    let (mut re, mut im, mut label) = (0.0, 0.0, 0u32);
    let mut energy = 0.0;
    for k in 0..n {
        assert_eq!(
            unsafe { bicm_constellation_point(c, k, &mut re, &mut im, &mut label) },
            BicmStatus::Ok
        );
        assert!(label < 16);
        energy += re * re + im * im;
    }
    assert!((energy / 16.0 - 1.0).abs() < 1e-12);
    assert_eq!(
        unsafe { bicm_constellation_point(c, 16, &mut re, &mut im, &mut label) },
        BicmStatus::InvalidArgument
    );
    unsafe { bicm_constellation_free(c) };
    unsafe { bicm_constellation_free(ptr::null_mut()) };
}

#[test]
fn harmonic_distances() {
    let c = qam16();
    let mut v = 0.0;
    for (code, want) in [(BICM_VARIANT_ORIG, 0.492), (BICM_VARIANT_I, 0.457), (BICM_VARIANT_II, 0.497)] {
        assert_eq!(unsafe { bicm_harmonic_distance(c, code, &mut v) }, BicmStatus::Ok);
        assert!((v - want).abs() < 2e-3, "{code}: {v}");
    }
    unsafe { bicm_constellation_free(c) };
}

#[test]
fn bounds_and_pep() {
    let c = qam16();
    let mut f1 = 0.0;
    let mut f2 = 0.0;
    unsafe {
        assert_eq!(bicm_f_bound(c, BICM_VARIANT_I, BICM_CHANNEL_RAYLEIGH, 10.0, 3, &mut f1), BicmStatus::Ok);
        assert_eq!(bicm_f_bound(c, BICM_VARIANT_II, BICM_CHANNEL_RAYLEIGH, 10.0, 3, &mut f2), BicmStatus::Ok);
    }
    assert!(f1 > 0.0 && f2 > 0.0 && f2 <= f1);

    let mut ber = 0.0;
    let mut trunc = 0.0;
    let st = unsafe {
        bicm_ber_bound(c, BICM_VARIANT_ORIG, BICM_CHANNEL_RAYLEIGH, 20.0, 24, &mut ber, &mut trunc)
    };
    assert_eq!(st, BicmStatus::Ok);
    assert!(ber > 0.0 && ber < 1e-9 && trunc < 0.01);
    let st = unsafe {
        bicm_ber_bound(c, BICM_VARIANT_ORIG, BICM_CHANNEL_RAYLEIGH, 20.0, 24, &mut ber, ptr::null_mut())
    };
    assert_eq!(st, BicmStatus::Ok);

    // one Rayleigh pair at d^2 = 2, Es/N0 = 0 dB: (1 - sqrt(g/(1+g)))/2 with g = d^2/(4 N0)
    let d2 = [2.0];
    let mut p = 0.0;
    assert_eq!(
        unsafe { bicm_pep_exact(BICM_CHANNEL_RAYLEIGH, 0.0, d2.as_ptr(), 1, &mut p) },
        BicmStatus::Ok
    );
    let g: f64 = 0.5;
    assert!((p - 0.5 * (1.0 - (g / (1.0 + g)).sqrt())).abs() < 1e-9);
    unsafe { bicm_constellation_free(c) };
}

#[test]
fn theorem1_through_abi() {
    let mut ok = false;
    assert_eq!(unsafe { bicm_verify_theorem1(30.0, 0.01, &mut ok) }, BicmStatus::Ok);
    assert!(ok);
    assert_eq!(unsafe { bicm_verify_theorem1(30.0, 0.2, &mut ok) }, BicmStatus::Inconclusive);
    assert!(last_error().contains("grid"));
}

#[test]
fn error_codes() {
    let c = qam16();
    let mut v = 0.0;
    unsafe {
        assert_eq!(bicm_harmonic_distance(ptr::null(), 0, &mut v), BicmStatus::NullPointer);
        assert_eq!(bicm_harmonic_distance(c, 0, ptr::null_mut()), BicmStatus::NullPointer);
        assert_eq!(bicm_harmonic_distance(c, 9, &mut v), BicmStatus::InvalidArgument);
        assert_eq!(bicm_f_bound(c, 1, 7, 10.0, 1, &mut v), BicmStatus::InvalidArgument);
        assert_eq!(bicm_f_bound(c, 1, 1, 10.0, 0, &mut v), BicmStatus::InvalidArgument);
        assert_eq!(bicm_ber_bound(c, 1, 1, 10.0, 5, &mut v, ptr::null_mut()), BicmStatus::InvalidArgument);
        assert_eq!(bicm_pep_exact(0, 10.0, ptr::null(), 3, &mut v), BicmStatus::NullPointer);
        bicm_constellation_free(c);
    }
    let bad = CString::new("32APSK").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { bicm_constellation_new(bad.as_ptr(), BICM_LABELING_GRAY, &mut h) },
        BicmStatus::InvalidArgument
    );
    assert!(h.is_null());
    assert!(last_error().contains("32APSK"));
    let name = CString::new("16QAM").unwrap();
    assert_eq!(
        unsafe { bicm_constellation_new(name.as_ptr(), 5, &mut h) },
        BicmStatus::InvalidArgument
    );
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(bicm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_generated_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/bicm.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "bicm_constellation_new",
        "bicm_constellation_free",
        "bicm_f_bound",
        "bicm_ber_bound",
        "bicm_pep_exact",
        "bicm_verify_theorem1",
        "bicm_last_error",
        "BICM_STATUS_NULL_POINTER",
        "typedef struct BicmConstellation BicmConstellation",
    ] {
        assert!(text.contains(sym), "missing {sym}");
    }
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .output()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
