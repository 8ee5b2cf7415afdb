//! Exercises the C ABI from Rust: handle lifecycle, error codes, and the
//! last-error message contract.

use std::ffi::CStr;
use std::ptr;

use pcd_ffi::*;

fn last_error() -> String {
    unsafe {
        CStr::from_ptr(pcd_last_error_message())
            .to_string_lossy()
            .into_owned()
    }
}

fn square_pair() -> (*mut PcdDistribution, *mut PcdDistribution) {
    let left = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
    let right = [2.0, 0.0, 3.0, 0.0, 2.0, 1.0, 3.0, 1.0];
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    unsafe {
        assert_eq!(
            pcd_distribution_new(left.as_ptr(), 4, 2, ptr::null(), &mut a),
            PcdStatus::PcdOk
        );
        assert_eq!(
            pcd_distribution_new(right.as_ptr(), 4, 2, ptr::null(), &mut b),
            PcdStatus::PcdOk
        );
    }
    (a, b)
}

#[test]
fn distance_and_plan_roundtrip() {
    let (a, b) = square_pair();
    unsafe {
        assert_eq!(pcd_distribution_len(a), 4);
        assert_eq!(pcd_distribution_dim(a), 2);

        let mut dist = f64::NAN;
        let mut plan = ptr::null_mut();
        assert_eq!(
            pcd_wasserstein(a, b, 1.0, &mut dist, &mut plan),
            PcdStatus::PcdOk
        );
        // Each unit square point translates two to the right.
        assert!((dist - 2.0).abs() < 1e-12, "dist {dist}");

        // Ties among optimal matchings are allowed; the invariants are a
        // complete plan with unit mass and a cost matching the distance.
        assert!(pcd_plan_len(plan) >= 4);
        let mut total = 0.0;
        for idx in 0..pcd_plan_len(plan) {
            let (mut i, mut j, mut m) = (0usize, 0usize, 0.0f64);
            assert_eq!(
                pcd_plan_entry(plan, idx, &mut i, &mut j, &mut m),
                PcdStatus::PcdOk
            );
            assert!(i < 4 && j < 4);
            assert!(m > 0.0);
            total += m;
        }
        assert!((total - 1.0).abs() < 1e-12);

        let mut cost = f64::NAN;
        assert_eq!(pcd_plan_cost(plan, &mut cost), PcdStatus::PcdOk);
        assert!((cost - 2.0).abs() < 1e-12);

        let mut bad = (0usize, 0usize, 0.0f64);
        assert_eq!(
            pcd_plan_entry(plan, 99, &mut bad.0, &mut bad.1, &mut bad.2),
            PcdStatus::PcdInvalidArgument
        );
        assert!(last_error().contains("out of range"));

        pcd_plan_free(plan);
        pcd_distribution_free(a);
        pcd_distribution_free(b);
    }
}

#[test]
fn centrality_matches_direct_formula() {
    let pts = [0.0, 3.0];
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(
            pcd_distribution_new(pts.as_ptr(), 2, 1, ptr::null(), &mut d),
            PcdStatus::PcdOk
        );
        let x = [1.0];
        let mut value = f64::NAN;
        assert_eq!(
            pcd_p_centrality(d, x.as_ptr(), 1, 1.0, &mut value),
            PcdStatus::PcdOk
        );
        // Mean distance from 1 to {0, 3} is (1 + 2) / 2.
        assert!((value - 1.5).abs() < 1e-12);

        // p < 1 is rejected with a message.
        assert_eq!(
            pcd_p_centrality(d, x.as_ptr(), 1, 0.5, &mut value),
            PcdStatus::PcdInvalidArgument
        );
        assert!(last_error().contains("p"));
        pcd_distribution_free(d);
    }
}

#[test]
fn srvt_roundtrip_through_abi() {
    let x = [3.0, -1.0, 2.5, 0.0, 9.0];
    let mut y = [0.0; 5];
    let mut back = [0.0; 5];
    unsafe {
        assert_eq!(pcd_srvt_forward(x.as_ptr(), 5, y.as_mut_ptr()), PcdStatus::PcdOk);
        assert_eq!(pcd_srvt_inverse(y.as_ptr(), 5, back.as_mut_ptr()), PcdStatus::PcdOk);
    }
    for (a, b) in x.iter().zip(&back) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn discrepancy_estimate_lifecycle() {
    let (a, b) = square_pair();
    unsafe {
        let mut est = ptr::null_mut();
        assert_eq!(
            pcd_discrepancy_estimate(a, b, 1.0, 2, 1.0, false, 40, 7, &mut est),
            PcdStatus::PcdOk
        );
        let value = pcd_estimate_value(est);
        assert!(value.is_finite() && value >= 0.0);
        assert!(pcd_estimate_trace_len(est) >= 1);
        let (mut step, mut v) = (0usize, 0.0f64);
        assert_eq!(
            pcd_estimate_trace_entry(est, 0, &mut step, &mut v),
            PcdStatus::PcdOk
        );
        assert_eq!(step, 0);
        assert!(pcd_estimate_sigma_count(est) >= 1);
        let mut sigma = f64::NAN;
        assert_eq!(pcd_estimate_sigma(est, 0, &mut sigma), PcdStatus::PcdOk);
        assert!((sigma - 1.0).abs() <= 1e-3);
        // Same flags reproduce the same value.
        let mut est2 = ptr::null_mut();
        assert_eq!(
            pcd_discrepancy_estimate(a, b, 1.0, 2, 1.0, false, 40, 7, &mut est2),
            PcdStatus::PcdOk
        );
        assert_eq!(pcd_estimate_value(est2).to_bits(), value.to_bits());
        pcd_estimate_free(est2);
        pcd_estimate_free(est);
        pcd_distribution_free(a);
        pcd_distribution_free(b);
    }
}

#[test]
fn null_arguments_are_reported_not_fatal() {
    unsafe {
        let mut dist = f64::NAN;
        assert_eq!(
            pcd_wasserstein(ptr::null(), ptr::null(), 1.0, &mut dist, ptr::null_mut()),
            PcdStatus::PcdNullArgument
        );
        assert!(last_error().contains("left"));

        let mut out = ptr::null_mut();
        assert_eq!(
            pcd_distribution_from_csv(ptr::null(), &mut out),
            PcdStatus::PcdNullArgument
        );
        assert_eq!(
            pcd_distribution_from_csv(c"/nonexistent/x.csv".as_ptr(), &mut out),
            PcdStatus::PcdIoError
        );

        // Frees ignore null.
        pcd_distribution_free(ptr::null_mut());
        pcd_plan_free(ptr::null_mut());
        pcd_estimate_free(ptr::null_mut());

        // Version string is static and contains the manifest hash length.
        let version = CStr::from_ptr(pcd_version()).to_str().unwrap();
        assert!(version.contains("manifest"));
    }
}

#[test]
fn csv_loading_through_abi() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.csv");
    std::fs::write(&path, "x1,weight\n0.0,0.25\n4.0,0.75\n").unwrap();
    let cpath = std::ffi::CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(
            pcd_distribution_from_csv(cpath.as_ptr(), &mut d),
            PcdStatus::PcdOk
        );
        assert_eq!(pcd_distribution_len(d), 2);
        // Weighted mean distance from 0: 0.25*0 + 0.75*4 = 3.
        let x = [0.0];
        let mut value = f64::NAN;
        assert_eq!(
            pcd_p_centrality(d, x.as_ptr(), 1, 1.0, &mut value),
            PcdStatus::PcdOk
        );
        assert!((value - 3.0).abs() < 1e-12);
        pcd_distribution_free(d);
    }
}
