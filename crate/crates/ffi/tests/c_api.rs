use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use okmeans_ffi::*;

fn line_dataset(xs: &[f64]) -> *mut OkDataset {
    let mut ds = ptr::null_mut();
    let rc = unsafe { ok_dataset_new(xs.as_ptr(), xs.len(), 1, ptr::null(), &mut ds) };
    assert_eq!(rc, OK_STATUS_SUCCESS);
    ds
}

fn options(k: usize, z: usize, algo: i32, seeds: &[u64]) -> OkClusterOptions {
    OkClusterOptions {
        k,
        z,
        algo,
        coreset: OK_CORESET_OFF,
        seeds: seeds.as_ptr(),
        n_seeds: seeds.len(),
        timeout_seconds: 0.0,
        opt_guess: 0.0,
    }
}

fn last_error() -> String {
    let p = ok_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn cluster_round_trip() {
    let xs = [0.0, 0.1, 0.2, 5.0, 5.1, 5.2, 40.0];
    let ds = line_dataset(&xs);
    assert_eq!(unsafe { ok_dataset_len(ds) }, 7);
    assert_eq!(unsafe { ok_dataset_dim(ds) }, 1);
    let seeds = [1u64, 2, 3];
    let opts = options(2, 1, OK_ALGO_NK, &seeds);
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { ok_cluster(ds, &opts, &mut res) }, OK_STATUS_SUCCESS);

    assert_eq!(unsafe { ok_result_num_centers(res) }, 2);
    assert_eq!(unsafe { ok_result_num_discarded(res) }, 1);
    let mut centers = [0.0; 2];
    assert_eq!(unsafe { ok_result_centers(res, centers.as_mut_ptr(), 2) }, OK_STATUS_SUCCESS);
    let mut discarded = [0usize; 1];
    assert_eq!(unsafe { ok_result_discarded(res, discarded.as_mut_ptr(), 1) }, OK_STATUS_SUCCESS);
    assert_eq!(discarded, [6]);

    let objective = unsafe { ok_result_objective(res) };
    let mut cost = f64::NAN;
    assert_eq!(unsafe { ok_z_cost(ds, centers.as_ptr(), 2, 1, &mut cost) }, OK_STATUS_SUCCESS);
    assert_eq!(cost, objective);
    assert!(seeds.contains(&unsafe { ok_result_seed(res) }));

    let mut small = [0.0; 1];
    assert_eq!(
        unsafe { ok_result_centers(res, small.as_mut_ptr(), 1) },
        OK_STATUS_BUFFER_TOO_SMALL
    );
    unsafe {
        ok_result_free(res);
        ok_dataset_free(ds);
    }
}

#[test]
fn every_algorithm_code_runs() {
    let xs: Vec<f64> = (0..60).map(|i| (i % 3) as f64 * 10.0 + (i as f64) * 1e-3).collect();
    let ds = line_dataset(&xs);
    for algo in [OK_ALGO_NK, OK_ALGO_KMPP, OK_ALGO_KMM, OK_ALGO_LS, OK_ALGO_UNIFORM] {
        let mut opts = options(3, 2, algo, &[]);
        opts.seeds = ptr::null();
        opts.coreset = OK_CORESET_PRACTICAL;
        let mut res = ptr::null_mut();
        assert_eq!(unsafe { ok_cluster(ds, &opts, &mut res) }, OK_STATUS_SUCCESS, "algo {algo}");
        assert_eq!(unsafe { ok_result_num_discarded(res) }, 2);
        unsafe { ok_result_free(res) };
    }
    unsafe { ok_dataset_free(ds) };
}

#[test]
fn error_codes_and_messages() {
    let mut ds = ptr::null_mut();
    let rc = unsafe { ok_dataset_new(ptr::null(), 3, 1, ptr::null(), &mut ds) };
    assert_eq!(rc, OK_STATUS_NULL_POINTER);

    let bad = [1.0, f64::NAN];
    let rc = unsafe { ok_dataset_new(bad.as_ptr(), 2, 1, ptr::null(), &mut ds) };
    assert_eq!(rc, OK_STATUS_INVALID);
    assert!(!last_error().is_empty());

    let w = [1.0, -1.0];
    let rc = unsafe { ok_dataset_new([0.0, 1.0].as_ptr(), 2, 1, w.as_ptr(), &mut ds) };
    assert_eq!(rc, OK_STATUS_INVALID);

    let ds = line_dataset(&[0.0, 1.0, 2.0]);
    let mut res = ptr::null_mut();
    let opts = options(1, 3, OK_ALGO_NK, &[0]);
    assert_eq!(unsafe { ok_cluster(ds, &opts, &mut res) }, OK_STATUS_INVALID);
    assert!(last_error().contains("z = 3"));

    let opts = options(1, 1, 99, &[0]);
    assert_eq!(unsafe { ok_cluster(ds, &opts, &mut res) }, OK_STATUS_INVALID);

    let mut opts = options(1, 1, OK_ALGO_NK, &[0]);
    opts.opt_guess = 1e-12;
    assert_eq!(unsafe { ok_cluster(ds, &opts, &mut res) }, OK_STATUS_INFEASIBLE);

    assert_eq!(unsafe { ok_cluster(ptr::null(), &opts, &mut res) }, OK_STATUS_NULL_POINTER);
    assert!(unsafe { ok_result_objective(ptr::null()) }.is_nan());
    unsafe {
        ok_dataset_free(ds);
        ok_dataset_free(ptr::null_mut());
        ok_result_free(ptr::null_mut());
    }
}

#[test]
fn weighted_dataset_cost() {
    let xs = [0.0, 1.0, 10.0];
    let w = [1.0, 3.0, 5.0];
    let mut ds = ptr::null_mut();
    assert_eq!(
        unsafe { ok_dataset_new(xs.as_ptr(), 3, 1, w.as_ptr(), &mut ds) },
        OK_STATUS_SUCCESS
    );
    let c = [0.0];
    let mut cost = 0.0;
    assert_eq!(unsafe { ok_z_cost(ds, c.as_ptr(), 1, 1, &mut cost) }, OK_STATUS_SUCCESS);
    // 10 is dropped whatever its weight; 1 contributes 3 * 1.
    assert_eq!(cost, 3.0);
    unsafe { ok_dataset_free(ds) };
}

#[test]
fn header_declares_the_api() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/okmeans.h");
    let text = std::fs::read_to_string(&header).expect("generated header");
    for sym in [
        "typedef struct OkDataset OkDataset;",
        "typedef struct OkResult OkResult;",
        "ok_dataset_new",
        "ok_dataset_free",
        "ok_cluster",
        "ok_result_objective",
        "ok_result_centers",
        "ok_result_discarded",
        "ok_result_free",
        "ok_z_cost",
        "ok_last_error_message",
        "OK_STATUS_INFEASIBLE 4",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
    // Syntax check with the system C compiler when one is installed.
    if let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .output()
    {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
