use std::ffi::CStr;
use std::ptr;

use padic_sssi::tree::{self, LazyLevels};
use padic_sssi::{IncrementLaw, TreeSpec};
use padic_sssi_ffi::*;

fn last_error() -> String {
    let p = pssi_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn process(law: PssiLaw, param: f64, dim: usize) -> *mut PssiProcess {
    let mut h = ptr::null_mut();
    let s = unsafe { pssi_process_new(2, 0.7, 8, law, param, 42, dim, &mut h) };
    assert_eq!(s, PssiStatus::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn version_matches_core() {
    let v = unsafe { CStr::from_ptr(pssi_version()) }.to_str().unwrap();
    assert_eq!(v, padic_sssi::VERSION);
}

#[test]
fn valuation_and_errors() {
    let mut v = 0u32;
    assert_eq!(unsafe { pssi_valuation(2, 48, &mut v) }, PssiStatus::Ok);
    assert_eq!(v, 4);
    assert!(pssi_last_error().is_null());
    assert_eq!(unsafe { pssi_valuation(2, 0, &mut v) }, PssiStatus::InvalidParameter);
    assert!(last_error().contains("valuation of 0"));
    assert_eq!(unsafe { pssi_valuation(4, 8, &mut v) }, PssiStatus::InvalidParameter);
    assert!(last_error().contains("not a prime"));
    assert_eq!(unsafe { pssi_valuation(2, 8, ptr::null_mut()) }, PssiStatus::NullPointer);
}

#[test]
fn path_matches_library() {
    let h = process(PssiLaw::Gaussian, 1.0, 1);
    let mut buf = vec![0.0; 100];
    assert_eq!(unsafe { pssi_process_path(h, 100, buf.as_mut_ptr(), buf.len()) }, PssiStatus::Ok);
    let spec = TreeSpec::new(2, 0.7, 8, IncrementLaw::Gaussian { sigma: 1.0 }, 42).unwrap();
    let expected = tree::path(&LazyLevels::new(&spec).unwrap(), 100).unwrap();
    assert_eq!(buf, expected.values);

    let mut inc = 0.0;
    assert_eq!(unsafe { pssi_process_increment(h, [3].as_ptr(), [10].as_ptr(), 1, &mut inc) }, PssiStatus::Ok);
    assert!((inc - (buf[10] - buf[3])).abs() < 1e-12);

    assert_eq!(
        unsafe { pssi_process_path(h, 100, buf.as_mut_ptr(), 50) },
        PssiStatus::BufferTooSmall
    );
    unsafe { pssi_process_free(h) };
}

#[test]
fn field_handle() {
    let h = process(PssiLaw::Rademacher, 0.0, 2);
    assert_eq!(unsafe { pssi_process_dim(h) }, 2);
    let mut x = 1.0;
    let zero = [0u64, 0];
    assert_eq!(unsafe { pssi_process_increment(h, zero.as_ptr(), zero.as_ptr(), 2, &mut x) }, PssiStatus::Ok);
    assert_eq!(x, 0.0);
    assert_eq!(
        unsafe { pssi_process_increment(h, zero.as_ptr(), zero.as_ptr(), 1, &mut x) },
        PssiStatus::InvalidParameter
    );
    let mut buf = [0.0; 4];
    assert_ne!(unsafe { pssi_process_path(h, 4, buf.as_mut_ptr(), 4) }, PssiStatus::Ok);
    unsafe { pssi_process_free(h) };
    unsafe { pssi_process_free(ptr::null_mut()) };
}

#[test]
fn law_errors_have_own_code() {
    let mut h = ptr::null_mut();
    let s = unsafe { pssi_process_new(2, 0.7, 8, PssiLaw::Pareto, 0.9, 1, 1, &mut h) };
    assert_eq!(s, PssiStatus::InvalidLaw);
    assert!(h.is_null());
    assert!(last_error().contains("alpha"));
    let s = unsafe { pssi_process_new(2, 0.7, 80, PssiLaw::Gaussian, 1.0, 1, 1, &mut h) };
    assert_eq!(s, PssiStatus::ResourceCap);
}

#[test]
fn diagnostics_on_indicator() {
    let f: Vec<f64> = (0..1024).map(|n| if n % 3 == 0 { 1.0 } else { 0.0 }).collect();
    let mut w = 0.0;
    assert_eq!(unsafe { pssi_padic_modulus(f.as_ptr(), f.len(), 2, 5, &mut w) }, PssiStatus::Ok);
    assert_eq!(w, 1.0);
    let (mut acc, mut gap) = (0usize, 0usize);
    assert_eq!(
        unsafe { pssi_bohr_translations(f.as_ptr(), f.len(), 0.5, 30, &mut acc, &mut gap) },
        PssiStatus::Ok
    );
    assert_eq!((acc, gap), (10, 3));
    let (mut weyl, mut besi) = (0.0, 0.0);
    assert_eq!(
        unsafe { pssi_seminorm_headlines(f.as_ptr(), f.len(), 3, 1.0, &mut weyl, &mut besi) },
        PssiStatus::Ok
    );
    assert_eq!((weyl, besi), (0.0, 0.0));
    assert_eq!(
        unsafe { pssi_padic_modulus(ptr::null(), 5, 2, 1, &mut w) },
        PssiStatus::NullPointer
    );
}

#[test]
fn ks_statistic() {
    let xs = [1.0, 2.0, 3.0];
    let ys = [4.0, 5.0];
    let mut d = 0.0;
    assert_eq!(unsafe { pssi_ks_statistic(xs.as_ptr(), 3, ys.as_ptr(), 2, &mut d) }, PssiStatus::Ok);
    assert_eq!(d, 1.0);
    assert_eq!(unsafe { pssi_ks_statistic(xs.as_ptr(), 0, ys.as_ptr(), 2, &mut d) }, PssiStatus::InvalidParameter);
}
