use std::ffi::CStr;
use std::ptr;

use approx::assert_relative_eq;
use hypodecay_ffi::*;

fn matrix(n: usize, re: &[f64], im: Option<&[f64]>) -> *mut HdMatrix {
    let mut m = ptr::null_mut();
    let im = im.map_or(ptr::null(), |v| v.as_ptr());
    assert_eq!(unsafe { hd_matrix_new(n, re.as_ptr(), im, &mut m) }, HD_OK);
    m
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(hd_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn rotation_system_through_the_abi() {
    let m = matrix(2, &[1.0, -1.0, 1.0, 0.0], None);
    let mut st = HdStability::default();
    assert_eq!(unsafe { hd_stability(m, &mut st) }, HD_OK);
    assert_relative_eq!(st.mu, 0.5, epsilon = 1e-12);
    assert!(st.hypocoercive && !st.coercive);

    let mut sharp = HdSharp::default();
    assert_eq!(unsafe { hd_sharp_constant(m, &mut sharp) }, HD_OK);
    assert_eq!(sharp.case_, HD_CASE_EQUAL_REAL_PARTS);
    assert_relative_eq!(sharp.c_sharp, 3f64.sqrt(), epsilon = 1e-10);
    assert_relative_eq!(sharp.attained_at, std::f64::consts::PI / 3f64.sqrt(), epsilon = 1e-9);

    let times = [0.0, 1.0, 2.0];
    let (mut lo, mut hi) = ([0.0; 3], [0.0; 3]);
    assert_eq!(
        unsafe { hd_envelope(m, times.as_ptr(), 3, lo.as_mut_ptr(), hi.as_mut_ptr()) },
        HD_OK
    );
    assert_eq!((lo[0], hi[0]), (1.0, 1.0));
    assert!(lo[2] < hi[2]);

    let mut c = 0.0;
    assert_eq!(unsafe { hd_family_bound(m, 0.5, HD_DIRECTION_UPPER, &mut c) }, HD_OK);
    assert_relative_eq!(c, 3f64.sqrt(), epsilon = 1e-10);
    assert_eq!(unsafe { hd_family_bound(m, 0.9, HD_DIRECTION_LOWER, &mut c) }, HD_OK);
    assert!(c > 0.0 && c <= 1.0);
    assert_eq!(
        unsafe { hd_family_bound(m, 5.0, HD_DIRECTION_UPPER, &mut c) },
        HD_INVALID_INPUT
    );
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { hd_family_bound(m, 0.5, 7, &mut c) }, HD_INVALID_INPUT);
    unsafe { hd_matrix_free(m) };
}

#[test]
fn complex_entries_and_mode_certificates() {
    let m = matrix(2, &[0.0, 0.0, 0.0, 1.0], Some(&[0.0, 1.0, 1.0, 0.0]));
    let mut sharp = HdSharp::default();
    assert_eq!(unsafe { hd_sharp_constant(m, &mut sharp) }, HD_OK);
    assert_relative_eq!(sharp.c_sharp, 3f64.sqrt(), epsilon = 1e-10);
    unsafe { hd_matrix_free(m) };

    let (mut kappa, mut c) = (0.0, 0.0);
    assert_eq!(unsafe { hd_mode_certificate(3, &mut kappa, &mut c) }, HD_OK);
    assert_relative_eq!(kappa, 7.0 / 5.0, epsilon = 1e-12);
    assert_relative_eq!(c, (7.0f64 / 5.0).sqrt(), epsilon = 1e-12);
    assert_ne!(unsafe { hd_mode_certificate(0, &mut kappa, &mut c) }, HD_OK);
}

#[test]
fn error_paths() {
    let mut m = ptr::null_mut();
    let re = [1.0, f64::NAN, 0.0, 1.0];
    assert_eq!(
        unsafe { hd_matrix_new(2, re.as_ptr(), ptr::null(), &mut m) },
        HD_INVALID_INPUT
    );
    assert!(m.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { hd_matrix_new(2, ptr::null(), ptr::null(), &mut m) },
        HD_NULL_POINTER
    );

    let jordan = matrix(2, &[1.0, 1.0, 0.0, 1.0], None);
    let mut sharp = HdSharp::default();
    assert_eq!(unsafe { hd_sharp_constant(jordan, &mut sharp) }, HD_UNSUPPORTED);
    assert_eq!(unsafe { hd_sharp_constant(jordan, ptr::null_mut()) }, HD_NULL_POINTER);
    unsafe { hd_matrix_free(jordan) };

    let big = matrix(3, &[1.0, 0.0, 0.0, 1.0, 2.0, 0.0, 1.0, 1.0, 3.0], None);
    assert_eq!(unsafe { hd_sharp_constant(big, &mut sharp) }, HD_UNSUPPORTED);
    let mut st = HdStability::default();
    assert_eq!(unsafe { hd_stability(big, &mut st) }, HD_OK);
    assert_eq!(last_error(), "");
    unsafe { hd_matrix_free(big) };
    unsafe { hd_matrix_free(ptr::null_mut()) };
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(hd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
