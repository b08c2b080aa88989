//! C ABI for okmeans.
//!
//! Every fallible function returns an `OK_STATUS_*` code and reports through
//! out-pointers. On failure, `ok_last_error_message` describes the error until
//! the next call on the same thread. Handles are opaque and must be released
//! with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use okmeans::harness::pipeline::{best_of_seeds, Algo, CoresetChoice, OptGuess, PipelineConfig};
use okmeans::{z_cost, CenterSet, ClusteringResult, Dataset, Deadline, Error, Instance};

pub const OK_STATUS_SUCCESS: i32 = 0;
pub const OK_STATUS_NULL_POINTER: i32 = 1;
pub const OK_STATUS_INVALID: i32 = 2;
pub const OK_STATUS_TIMEOUT: i32 = 3;
pub const OK_STATUS_INFEASIBLE: i32 = 4;
pub const OK_STATUS_BUFFER_TOO_SMALL: i32 = 5;
pub const OK_STATUS_PANIC: i32 = 6;

pub const OK_ALGO_NK: i32 = 0;
pub const OK_ALGO_KMPP: i32 = 1;
pub const OK_ALGO_KMM: i32 = 2;
pub const OK_ALGO_LS: i32 = 3;
pub const OK_ALGO_UNIFORM: i32 = 4;

pub const OK_CORESET_OFF: i32 = 0;
pub const OK_CORESET_PRACTICAL: i32 = 1;
pub const OK_CORESET_THEORETICAL: i32 = 2;

/// Opaque dataset handle.
pub struct OkDataset {
    data: Dataset,
}

/// Opaque clustering result handle.
pub struct OkResult {
    result: ClusteringResult,
    seed: u64,
}

/// Options for [`ok_cluster`].
#[repr(C)]
pub struct OkClusterOptions {
    pub k: usize,
    pub z: usize,
    /// One of `OK_ALGO_*`.
    pub algo: i32,
    /// One of `OK_CORESET_*`.
    pub coreset: i32,
    /// Seeds to try; the smallest final objective wins. May be null when
    /// `n_seeds` is 0, in which case seed 0 is used.
    pub seeds: *const u64,
    pub n_seeds: usize,
    /// Seconds for all seeds together; `<= 0` means no limit.
    pub timeout_seconds: f64,
    /// Opt guess for NK-means; `<= 0` searches the guess grid.
    pub opt_guess: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: i32, msg: impl Into<String>) -> i32 {
    set_error(msg.into());
    status
}

fn status_of(err: &Error) -> i32 {
    match err.exit_code() {
        3 => OK_STATUS_TIMEOUT,
        4 => OK_STATUS_INFEASIBLE,
        _ => OK_STATUS_INVALID,
    }
}

fn from_err(err: Error) -> i32 {
    fail(status_of(&err), err.to_string())
}

fn guarded(f: impl FnOnce() -> i32) -> i32 {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(OK_STATUS_PANIC, "internal panic"))
}

/// Message for the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn ok_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copy `n * d` row-major coordinates (and optionally `n` weights) into a new
/// dataset.
///
/// # Safety
/// `coords` must point to `n * d` readable doubles; `weights` must be null or
/// point to `n` readable doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ok_dataset_new(
    coords: *const f64,
    n: usize,
    d: usize,
    weights: *const f64,
    out: *mut *mut OkDataset,
) -> i32 {
    guarded(|| {
        if coords.is_null() || out.is_null() {
            return fail(OK_STATUS_NULL_POINTER, "null coords or out pointer");
        }
        let Some(len) = n.checked_mul(d) else {
            return fail(OK_STATUS_INVALID, "n * d overflows");
        };
        let coords = std::slice::from_raw_parts(coords, len).to_vec();
        let data = match Dataset::new(d, coords) {
            Ok(x) => x,
            Err(e) => return from_err(e),
        };
        let data = if weights.is_null() {
            data
        } else {
            match data.with_weights(std::slice::from_raw_parts(weights, n).to_vec()) {
                Ok(x) => x,
                Err(e) => return from_err(e),
            }
        };
        *out = Box::into_raw(Box::new(OkDataset { data }));
        OK_STATUS_SUCCESS
    })
}

/// # Safety
/// `ds` must be null or a handle from [`ok_dataset_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ok_dataset_free(ds: *mut OkDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ok_dataset_len(ds: *const OkDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.len())
}

/// Dimension, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ok_dataset_dim(ds: *const OkDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.dim())
}

fn algo_of(code: i32) -> Option<Algo> {
    match code {
        OK_ALGO_NK => Some(Algo::Nk),
        OK_ALGO_KMPP => Some(Algo::Kmpp),
        OK_ALGO_KMM => Some(Algo::Kmm),
        OK_ALGO_LS => Some(Algo::Ls),
        OK_ALGO_UNIFORM => Some(Algo::Uniform),
        _ => None,
    }
}

fn coreset_of(code: i32) -> Option<CoresetChoice> {
    match code {
        OK_CORESET_OFF => Some(CoresetChoice::Off),
        OK_CORESET_PRACTICAL => Some(CoresetChoice::Practical),
        OK_CORESET_THEORETICAL => Some(CoresetChoice::Theoretical),
        _ => None,
    }
}

/// Run the full pipeline: optional coreset, the chosen algorithm, then
/// exactly `z` outliers discarded from the full dataset.
///
/// # Safety
/// `ds` must be a live dataset handle, `opts` a valid options struct whose
/// `seeds` points to `n_seeds` readable values, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ok_cluster(
    ds: *const OkDataset,
    opts: *const OkClusterOptions,
    out: *mut *mut OkResult,
) -> i32 {
    guarded(|| {
        let (Some(ds), Some(opts)) = (ds.as_ref(), opts.as_ref()) else {
            return fail(OK_STATUS_NULL_POINTER, "null dataset or options");
        };
        if out.is_null() {
            return fail(OK_STATUS_NULL_POINTER, "null out pointer");
        }
        let Some(algo) = algo_of(opts.algo) else {
            return fail(OK_STATUS_INVALID, format!("unknown algorithm code {}", opts.algo));
        };
        let Some(coreset) = coreset_of(opts.coreset) else {
            return fail(OK_STATUS_INVALID, format!("unknown coreset code {}", opts.coreset));
        };
        let seeds: Vec<u64> = if opts.n_seeds == 0 {
            vec![0]
        } else if opts.seeds.is_null() {
            return fail(OK_STATUS_NULL_POINTER, "null seeds with n_seeds > 0");
        } else {
            std::slice::from_raw_parts(opts.seeds, opts.n_seeds).to_vec()
        };
        let inst = match Instance::new(&ds.data, opts.k, opts.z) {
            Ok(i) => i,
            Err(e) => return from_err(e),
        };
        let opt_guess = if opts.opt_guess > 0.0 && opts.opt_guess.is_finite() {
            OptGuess::Fixed(opts.opt_guess)
        } else {
            OptGuess::Auto
        };
        let cfg = PipelineConfig {
            opt_guess,
            ..PipelineConfig::new(algo, coreset)
        };
        let deadline = if opts.timeout_seconds > 0.0 && opts.timeout_seconds.is_finite() {
            Deadline::after(Duration::from_secs_f64(opts.timeout_seconds))
        } else {
            Deadline::NONE
        };
        let runs = best_of_seeds(&inst, &cfg, &seeds, &deadline);
        match runs.best {
            Some((seed, o)) => {
                *out = Box::into_raw(Box::new(OkResult { result: o.result, seed }));
                OK_STATUS_SUCCESS
            }
            None => from_err(runs.first_error.unwrap_or(Error::Timeout)),
        }
    })
}

/// # Safety
/// `r` must be null or a handle from [`ok_cluster`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ok_result_free(r: *mut OkResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// z-cost of the result on the full dataset, or NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ok_result_objective(r: *const OkResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.result.objective)
}

/// Seed of the winning run, or 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ok_result_seed(r: *const OkResult) -> u64 {
    r.as_ref().map_or(0, |r| r.seed)
}

/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ok_result_num_centers(r: *const OkResult) -> usize {
    r.as_ref().map_or(0, |r| r.result.centers.len())
}

/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ok_result_num_discarded(r: *const OkResult) -> usize {
    r.as_ref().map_or(0, |r| r.result.discarded.len())
}

/// Copy the centers, row-major, into `buf` of `len` doubles.
///
/// # Safety
/// `r` must be a live result handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ok_result_centers(r: *const OkResult, buf: *mut f64, len: usize) -> i32 {
    guarded(|| {
        let Some(r) = r.as_ref() else {
            return fail(OK_STATUS_NULL_POINTER, "null result");
        };
        let src = r.result.centers.coords();
        if len < src.len() {
            return fail(OK_STATUS_BUFFER_TOO_SMALL, format!("need {} doubles", src.len()));
        }
        if buf.is_null() {
            return fail(OK_STATUS_NULL_POINTER, "null buffer");
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        OK_STATUS_SUCCESS
    })
}

/// Copy the ascending discarded indices into `buf` of `len` entries.
///
/// # Safety
/// `r` must be a live result handle and `buf` must point to `len` writable entries.
#[no_mangle]
pub unsafe extern "C" fn ok_result_discarded(r: *const OkResult, buf: *mut usize, len: usize) -> i32 {
    guarded(|| {
        let Some(r) = r.as_ref() else {
            return fail(OK_STATUS_NULL_POINTER, "null result");
        };
        let src = &r.result.discarded;
        if len < src.len() {
            return fail(OK_STATUS_BUFFER_TOO_SMALL, format!("need {} entries", src.len()));
        }
        if src.is_empty() {
            return OK_STATUS_SUCCESS;
        }
        if buf.is_null() {
            return fail(OK_STATUS_NULL_POINTER, "null buffer");
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        OK_STATUS_SUCCESS
    })
}

/// z-cost of `k` row-major centers on the dataset.
///
/// # Safety
/// `ds` must be a live dataset handle, `centers` must point to `k * dim`
/// readable doubles and `out_cost` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ok_z_cost(
    ds: *const OkDataset,
    centers: *const f64,
    k: usize,
    z: usize,
    out_cost: *mut f64,
) -> i32 {
    guarded(|| {
        let Some(ds) = ds.as_ref() else {
            return fail(OK_STATUS_NULL_POINTER, "null dataset");
        };
        if centers.is_null() || out_cost.is_null() {
            return fail(OK_STATUS_NULL_POINTER, "null centers or out pointer");
        }
        let dim = ds.data.dim();
        let Some(len) = k.checked_mul(dim) else {
            return fail(OK_STATUS_INVALID, "k * dim overflows");
        };
        let centers = match CenterSet::new(dim, std::slice::from_raw_parts(centers, len).to_vec()) {
            Ok(c) => c,
            Err(e) => return from_err(e),
        };
        match z_cost(&ds.data, &centers, z) {
            Ok((cost, _)) => {
                *out_cost = cost;
                OK_STATUS_SUCCESS
            }
            Err(e) => from_err(e),
        }
    })
}
