use std::ffi::CStr;
use std::ptr;

use fbe_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        fbe_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn affine(cells: usize) -> *mut FbeState {
    let mut s = ptr::null_mut();
    let rc = unsafe { fbe_state_affine(1.0, -0.5, 1.0, 1.0, 0.0, cells, &mut s) };
    assert_eq!(rc, FBE_OK, "{}", last_error());
    s
}

#[test]
fn affine_state_round_trips_through_nodes() {
    let s = affine(64);
    let n = unsafe { fbe_state_len(s) };
    assert_eq!(n, 65);
    let (mut x, mut r, mut v) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    assert_eq!(unsafe { fbe_state_values(s, x.as_mut_ptr(), r.as_mut_ptr(), v.as_mut_ptr(), n) }, FBE_OK);
    assert_eq!(r[0], 0.0);
    assert!((v[n - 1] + 0.5).abs() < 1e-14);

    let mut t = ptr::null_mut();
    assert_eq!(unsafe { fbe_state_from_nodes(x.as_ptr(), r.as_ptr(), v.as_ptr(), n, 1.0, &mut t) }, FBE_OK);
    let (mut e1, mut p1, mut e2, mut p2) = (0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(fbe_energy(s, 1, &mut e1, &mut p1), FBE_OK);
        assert_eq!(fbe_energy(t, 1, &mut e2, &mut p2), FBE_OK);
        fbe_state_free(s);
        fbe_state_free(t);
    }
    assert_eq!((e1, p1), (e2, p2));
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut s = ptr::null_mut();
    let rc = unsafe { fbe_state_affine(-1.0, 0.0, 1.0, 1.0, 0.0, 64, &mut s) };
    assert_eq!(rc, FBE_ERR_INVALID);
    assert!(s.is_null());
    assert!(!last_error().is_empty());

    let rc = unsafe { fbe_state_affine(1.0, 0.0, 1.0, 1.0, 0.0, 64, ptr::null_mut()) };
    assert_eq!(rc, FBE_ERR_NULL);
    assert!(last_error().contains("out"));

    let s = affine(64);
    let mut small = [0.0; 4];
    let rc = unsafe { fbe_state_values(s, ptr::null_mut(), small.as_mut_ptr(), ptr::null_mut(), 4) };
    assert_eq!(rc, FBE_ERR_BUFFER);
    let rc = unsafe { fbe_state_values(ptr::null(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), 0) };
    assert_eq!(rc, FBE_ERR_NULL);

    // A grid end with r > 0 has no free boundary.
    let x: Vec<f64> = (0..=32).map(|i| -1.0 + i as f64 / 16.0).collect();
    let r: Vec<f64> = x.iter().map(|x| (1.0 + x) * (1.5 - x) / 1.5).collect();
    let v = vec![0.0; 33];
    let mut t = ptr::null_mut();
    let rc = unsafe { fbe_state_from_nodes(x.as_ptr(), r.as_ptr(), v.as_ptr(), 33, 1.0, &mut t) };
    assert_eq!(rc, FBE_ERR_INVALID, "{}", last_error());
    unsafe { fbe_state_free(s) };
}

#[test]
fn step_moves_the_boundary_with_the_flow() {
    let s = affine(512);
    let mut next = ptr::null_mut();
    let rc = unsafe { fbe_step(s, 1.0 / 16.0, 2, &mut next) };
    assert_eq!(rc, FBE_OK, "{}", last_error());
    let (mut gm, mut gp) = (0.0, 0.0);
    unsafe { fbe_state_boundary(next, &mut gm, &mut gp) };
    // v = -x/2 at the boundary contracts the domain by about ε/2.
    assert!((gp - (1.0 - 1.0 / 32.0)).abs() < 1e-2, "Γ₊ = {gp}");
    assert!((gm + gp).abs() < 1e-12);
    let (mut a, mut b) = (0.0, 0.0);
    assert_eq!(unsafe { fbe_control(next, &mut a, &mut b) }, FBE_OK);
    assert!(a.is_finite() && b > 0.0);
    unsafe {
        fbe_state_free(s);
        fbe_state_free(next);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(fbe_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_generated() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fbe.h")).unwrap();
    for name in ["fbe_state_affine", "fbe_step", "fbe_last_error", "typedef struct FbeState FbeState"] {
        assert!(h.contains(name), "{name} missing from header");
    }
}
