//! C ABI over the core library.
//!
//! Conventions:
//! - Every fallible call returns a [`PcdStatus`]; `PCD_OK` is zero.
//! - Results are written through out-pointers; handles are opaque and must
//!   be released with their matching `*_free` function.
//! - On any non-OK status, [`pcd_last_error_message`] returns a
//!   human-readable description. The buffer is thread-local and valid until
//!   the next failing call on the same thread.
//! - All functions are panic-safe: a caught panic reports `PCD_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;

use pcd_core::discrepancy::{estimate_discrepancy, DiscrepancyConfig, DiscrepancyEstimate};
use pcd_core::error::Error;
use pcd_core::io::read_samples;
use pcd_core::measures::EmpiricalDistribution;
use pcd_core::srvt::{srvt_forward, srvt_inverse};
use pcd_core::transport::{wasserstein_exact, TransportPlan};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcdStatus {
    /// Success.
    PcdOk = 0,
    /// A pointer argument that must not be null was null.
    PcdNullArgument = 1,
    /// An argument was structurally invalid (bad dimension, p < 1, ...).
    PcdInvalidArgument = 2,
    /// The computation itself failed (guard exceeded, no feasible plan, ...).
    PcdComputeError = 3,
    /// File input/output or parsing failed.
    PcdIoError = 4,
    /// An internal panic was caught; this is a bug in the library.
    PcdPanic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

struct Failure {
    status: PcdStatus,
    message: String,
}

type FfiResult = Result<(), Failure>;

fn fail(status: PcdStatus, message: impl Into<String>) -> Failure {
    Failure {
        status,
        message: message.into(),
    }
}

fn null_arg(name: &str) -> Failure {
    fail(PcdStatus::PcdNullArgument, format!("{name} must not be null"))
}

impl From<Error> for Failure {
    fn from(err: Error) -> Failure {
        let status = match &err {
            Error::Io(_) | Error::Parse { .. } | Error::Json(_) | Error::NoMetrics(_) => {
                PcdStatus::PcdIoError
            }
            Error::TransportGuard { .. }
            | Error::NonUniformWeights
            | Error::BruteForceSize { .. }
            | Error::Checkpoint(_) => PcdStatus::PcdComputeError,
            _ => PcdStatus::PcdInvalidArgument,
        };
        fail(status, err.to_string())
    }
}

/// Run an FFI body with panic isolation and error capture.
fn guarded(body: impl FnOnce() -> FfiResult) -> PcdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PcdStatus::PcdOk,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal panic");
            PcdStatus::PcdPanic
        }
    }
}

unsafe fn deref<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null_arg(name))
}

unsafe fn write_out<T>(ptr: *mut T, name: &str, value: T) -> FfiResult {
    if ptr.is_null() {
        return Err(null_arg(name));
    }
    ptr.write(value);
    Ok(())
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null_arg(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Opaque handle to a weighted point cloud.
pub struct PcdDistribution {
    inner: EmpiricalDistribution,
}

/// Opaque handle to an optimal transport plan.
pub struct PcdPlan {
    /// Nonzero entries in row-major source order.
    triples: Vec<(usize, usize, f64)>,
    cost: f64,
    p: f64,
}

/// Opaque handle to a discrepancy estimate.
pub struct PcdEstimate {
    inner: DiscrepancyEstimate,
}

/// Message for the most recent failure on this thread. Never null; empty
/// before the first failure. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn pcd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version plus the invariant-suite manifest hash, as a static
/// NUL-terminated string.
#[no_mangle]
pub extern "C" fn pcd_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| {
            CString::new(format!(
                "{} (manifest {})",
                env!("CARGO_PKG_VERSION"),
                pcd_core::verify::manifest_hash()
            ))
            .unwrap()
        })
        .as_ptr()
}

/// Build a distribution from `count` points of dimension `dim`, stored
/// row-major in `points`. `weights` may be null for uniform weights;
/// otherwise it must hold `count` nonnegative values with positive total
/// mass (they are renormalized).
///
/// # Safety
/// `points` must reference `count * dim` readable doubles and `weights`,
/// when non-null, `count` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn pcd_distribution_new(
    points: *const f64,
    count: usize,
    dim: usize,
    weights: *const f64,
    out: *mut *mut PcdDistribution,
) -> PcdStatus {
    guarded(|| {
        let flat = slice_arg(points, count.saturating_mul(dim), "points")?;
        let rows: Vec<Vec<f64>> = flat.chunks(dim.max(1)).map(|c| c.to_vec()).collect();
        let inner = if weights.is_null() {
            EmpiricalDistribution::uniform(rows)?
        } else {
            let w = slice_arg(weights, count, "weights")?;
            EmpiricalDistribution::new(rows, Some(w.to_vec()))?
        };
        let handle = Box::into_raw(Box::new(PcdDistribution { inner }));
        write_out(out, "out", handle)
    })
}

/// Read a distribution from a CSV file with header `x1,...,xm[,weight]`.
///
/// # Safety
/// `path` must be a readable NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pcd_distribution_from_csv(
    path: *const c_char,
    out: *mut *mut PcdDistribution,
) -> PcdStatus {
    guarded(|| {
        if path.is_null() {
            return Err(null_arg("path"));
        }
        let raw = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(PcdStatus::PcdInvalidArgument, "path is not valid UTF-8"))?;
        let inner = read_samples(Path::new(raw))?;
        let handle = Box::into_raw(Box::new(PcdDistribution { inner }));
        write_out(out, "out", handle)
    })
}

/// Release a distribution handle. Null is ignored.
///
/// # Safety
/// `d` must be a handle returned by this library, released at most once.
#[no_mangle]
pub unsafe extern "C" fn pcd_distribution_free(d: *mut PcdDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Number of support points, or 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pcd_distribution_len(d: *const PcdDistribution) -> usize {
    d.as_ref().map(|d| d.inner.len()).unwrap_or(0)
}

/// Point dimension, or 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pcd_distribution_dim(d: *const PcdDistribution) -> usize {
    d.as_ref().map(|d| d.inner.dim()).unwrap_or(0)
}

/// p-centrality of the distribution at base point `x`.
///
/// # Safety
/// `x` must reference `dim` readable doubles; `d` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pcd_p_centrality(
    d: *const PcdDistribution,
    x: *const f64,
    dim: usize,
    p: f64,
    out: *mut f64,
) -> PcdStatus {
    guarded(|| {
        let d = deref(d, "distribution")?;
        let x = slice_arg(x, dim, "x")?;
        let value = d.inner.p_centrality(x, p)?;
        write_out(out, "out", value)
    })
}

/// Exact Wasserstein-p distance. When `out_plan` is non-null it receives an
/// optimal plan handle.
///
/// # Safety
/// `left` and `right` must be live handles; `out_distance` must be writable;
/// `out_plan` may be null.
#[no_mangle]
pub unsafe extern "C" fn pcd_wasserstein(
    left: *const PcdDistribution,
    right: *const PcdDistribution,
    p: f64,
    out_distance: *mut f64,
    out_plan: *mut *mut PcdPlan,
) -> PcdStatus {
    guarded(|| {
        let left = deref(left, "left")?;
        let right = deref(right, "right")?;
        let (dist, plan) = wasserstein_exact(&left.inner, &right.inner, p)?;
        if !out_plan.is_null() {
            let handle = Box::into_raw(Box::new(PcdPlan {
                triples: plan_triples(&plan),
                cost: plan.cost,
                p: plan.p,
            }));
            out_plan.write(handle);
        }
        write_out(out_distance, "out_distance", dist)
    })
}

fn plan_triples(plan: &TransportPlan) -> Vec<(usize, usize, f64)> {
    let mut triples = Vec::new();
    for i in 0..plan.mass.rows {
        for j in 0..plan.mass.cols {
            let m = plan.mass.get(i, j);
            if m != 0.0 {
                triples.push((i, j, m));
            }
        }
    }
    triples
}

/// Release a plan handle. Null is ignored.
///
/// # Safety
/// `plan` must be a handle returned by this library, released at most once.
#[no_mangle]
pub unsafe extern "C" fn pcd_plan_free(plan: *mut PcdPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Number of nonzero plan entries, or 0 for a null handle.
///
/// # Safety
/// `plan` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pcd_plan_len(plan: *const PcdPlan) -> usize {
    plan.as_ref().map(|p| p.triples.len()).unwrap_or(0)
}

/// Total transport cost sum(mass * distance^p), before the 1/p root.
///
/// # Safety
/// `plan` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pcd_plan_cost(plan: *const PcdPlan, out: *mut f64) -> PcdStatus {
    guarded(|| {
        let plan = deref(plan, "plan")?;
        write_out(out, "out", plan.cost)
    })
}

/// Moment order the plan was computed for.
///
/// # Safety
/// `plan` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pcd_plan_order(plan: *const PcdPlan, out: *mut f64) -> PcdStatus {
    guarded(|| {
        let plan = deref(plan, "plan")?;
        write_out(out, "out", plan.p)
    })
}

/// Fetch nonzero plan entry `idx` as (source index, target index, mass).
///
/// # Safety
/// All pointers must be valid; `idx` is checked against the entry count.
#[no_mangle]
pub unsafe extern "C" fn pcd_plan_entry(
    plan: *const PcdPlan,
    idx: usize,
    out_i: *mut usize,
    out_j: *mut usize,
    out_mass: *mut f64,
) -> PcdStatus {
    guarded(|| {
        let plan = deref(plan, "plan")?;
        let &(i, j, m) = plan.triples.get(idx).ok_or_else(|| {
            fail(
                PcdStatus::PcdInvalidArgument,
                format!("plan entry {idx} out of range ({} entries)", plan.triples.len()),
            )
        })?;
        write_out(out_i, "out_i", i)?;
        write_out(out_j, "out_j", j)?;
        write_out(out_mass, "out_mass", m)
    })
}

/// Square-root velocity transform of `x` into `out` (both length `n`).
/// In-place operation (`out == x`) is allowed.
///
/// # Safety
/// `x` and `out` must reference `n` readable/writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pcd_srvt_forward(x: *const f64, n: usize, out: *mut f64) -> PcdStatus {
    guarded(|| {
        let x = slice_arg(x, n, "x")?;
        let y = srvt_forward(x);
        if out.is_null() {
            return Err(null_arg("out"));
        }
        std::ptr::copy_nonoverlapping(y.as_ptr(), out, n);
        Ok(())
    })
}

/// Inverse square-root velocity transform of `y` into `out` (length `n`).
/// In-place operation (`out == y`) is allowed.
///
/// # Safety
/// `y` and `out` must reference `n` readable/writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pcd_srvt_inverse(y: *const f64, n: usize, out: *mut f64) -> PcdStatus {
    guarded(|| {
        let y = slice_arg(y, n, "y")?;
        let x = srvt_inverse(y);
        if out.is_null() {
            return Err(null_arg("out"));
        }
        std::ptr::copy_nonoverlapping(x.as_ptr(), out, n);
        Ok(())
    })
}

/// Estimate the maximal p-centrality discrepancy between two distributions
/// by certified gradient ascent. `steps == 0` selects the default budget.
///
/// # Safety
/// `left`, `right`, and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pcd_discrepancy_estimate(
    left: *const PcdDistribution,
    right: *const PcdDistribution,
    p: f64,
    n: usize,
    k: f64,
    srvt: bool,
    steps: usize,
    seed: u64,
    out: *mut *mut PcdEstimate,
) -> PcdStatus {
    guarded(|| {
        let left = deref(left, "left")?;
        let right = deref(right, "right")?;
        let mut cfg = DiscrepancyConfig::new(p, n, k);
        cfg.srvt = srvt;
        cfg.seed = seed;
        if steps > 0 {
            cfg.steps = steps;
        }
        let outcome = estimate_discrepancy(&left.inner, &right.inner, &cfg)?;
        let handle = Box::into_raw(Box::new(PcdEstimate {
            inner: outcome.estimate,
        }));
        write_out(out, "out", handle)
    })
}

/// Release an estimate handle. Null is ignored.
///
/// # Safety
/// `est` must be a handle returned by this library, released at most once.
#[no_mangle]
pub unsafe extern "C" fn pcd_estimate_free(est: *mut PcdEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Best certified objective value, or NaN for a null handle.
///
/// # Safety
/// `est` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pcd_estimate_value(est: *const PcdEstimate) -> f64 {
    est.as_ref().map(|e| e.inner.value).unwrap_or(f64::NAN)
}

/// Ascent step at which the best value was certified, or 0 for null.
///
/// # Safety
/// `est` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pcd_estimate_best_step(est: *const PcdEstimate) -> usize {
    est.as_ref().map(|e| e.inner.best_step).unwrap_or(0)
}

/// Number of certified evaluations in the trace, or 0 for null.
///
/// # Safety
/// `est` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pcd_estimate_trace_len(est: *const PcdEstimate) -> usize {
    est.as_ref().map(|e| e.inner.trace.len()).unwrap_or(0)
}

/// Fetch trace entry `idx` as (ascent step, certified value).
///
/// # Safety
/// All pointers must be valid; `idx` is checked against the trace length.
#[no_mangle]
pub unsafe extern "C" fn pcd_estimate_trace_entry(
    est: *const PcdEstimate,
    idx: usize,
    out_step: *mut usize,
    out_value: *mut f64,
) -> PcdStatus {
    guarded(|| {
        let est = deref(est, "estimate")?;
        let point = est.inner.trace.get(idx).ok_or_else(|| {
            fail(
                PcdStatus::PcdInvalidArgument,
                format!("trace entry {idx} out of range ({} entries)", est.inner.trace.len()),
            )
        })?;
        write_out(out_step, "out_step", point.step)?;
        write_out(out_value, "out_value", point.value)
    })
}

/// Number of certified per-layer sigmas, or 0 for null.
///
/// # Safety
/// `est` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn pcd_estimate_sigma_count(est: *const PcdEstimate) -> usize {
    est.as_ref().map(|e| e.inner.certified_sigmas.len()).unwrap_or(0)
}

/// Fetch the certified spectral norm of layer `idx` at the best checkpoint.
///
/// # Safety
/// `est` and `out` must be valid pointers; `idx` is bounds-checked.
#[no_mangle]
pub unsafe extern "C" fn pcd_estimate_sigma(
    est: *const PcdEstimate,
    idx: usize,
    out: *mut f64,
) -> PcdStatus {
    guarded(|| {
        let est = deref(est, "estimate")?;
        let &sigma = est.inner.certified_sigmas.get(idx).ok_or_else(|| {
            fail(
                PcdStatus::PcdInvalidArgument,
                format!(
                    "sigma {idx} out of range ({} layers)",
                    est.inner.certified_sigmas.len()
                ),
            )
        })?;
        write_out(out, "out", sigma)
    })
}
