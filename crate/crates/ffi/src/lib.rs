//! C ABI over `padic-sssi`.
//!
//! Every fallible function returns a [`PssiStatus`]; results go through out
//! pointers. On failure, [`pssi_last_error`] returns a message for the calling
//! thread. Processes are opaque [`PssiProcess`] handles released with
//! [`pssi_process_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use padic_sssi::diagnostics;
use padic_sssi::identity;
use padic_sssi::tree::{self, LazyLevels, NoiseSource};
use padic_sssi::{Error, IncrementLaw, PadicContext, TreeSpec};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PssiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidLaw = 3,
    ResourceCap = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Increment law selector for [`pssi_process_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PssiLaw {
    /// `param` is the standard deviation.
    Gaussian = 0,
    /// `param` is the tail exponent alpha.
    Pareto = 1,
    /// `param` is ignored.
    Rademacher = 2,
}

/// Opaque simulated process.
pub struct PssiProcess {
    levels: LazyLevels,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
    Ok(s) => s,
    Err(_) => panic!("version string"),
};

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PssiStatus {
    match err {
        e if e.is_resource_cap() => PssiStatus::ResourceCap,
        Error::Law(_) => PssiStatus::InvalidLaw,
        _ => PssiStatus::InvalidParameter,
    }
}

fn fail(status: PssiStatus, msg: impl Into<String>) -> PssiStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard<F: FnOnce() -> Result<(), PssiStatus>>(f: F) -> PssiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PssiStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(PssiStatus::Panic, "internal panic"),
    }
}

trait IntoStatus<T> {
    fn status(self) -> Result<T, PssiStatus>;
}

impl<T> IntoStatus<T> for padic_sssi::Result<T> {
    fn status(self) -> Result<T, PssiStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

fn nonnull<T>(p: *const T, name: &str) -> Result<(), PssiStatus> {
    if p.is_null() {
        Err(fail(PssiStatus::NullPointer, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

unsafe fn input<'a>(values: *const f64, len: usize) -> Result<&'a [f64], PssiStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    nonnull(values, "values")?;
    Ok(slice::from_raw_parts(values, len))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pssi_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn pssi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// p-adic valuation of `n` (fails for `n = 0` or a non-prime `p`).
///
/// # Safety
/// `out` must be a valid pointer to a `uint32_t`.
#[no_mangle]
pub unsafe extern "C" fn pssi_valuation(p: u64, n: u64, out: *mut u32) -> PssiStatus {
    guard(|| {
        nonnull(out, "out")?;
        let ctx = PadicContext::new(p).status()?;
        *out = ctx.valuation(n).status()?;
        Ok(())
    })
}

/// Creates a process handle.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle that must be
/// released with [`pssi_process_free`].
#[no_mangle]
pub unsafe extern "C" fn pssi_process_new(
    p: u64,
    hurst: f64,
    kmax: usize,
    law: PssiLaw,
    param: f64,
    seed: u64,
    dim: usize,
    out: *mut *mut PssiProcess,
) -> PssiStatus {
    guard(|| {
        nonnull(out, "out")?;
        *out = ptr::null_mut();
        let law = match law {
            PssiLaw::Gaussian => IncrementLaw::Gaussian { sigma: param },
            PssiLaw::Pareto => IncrementLaw::SymmetricPareto { alpha: param },
            PssiLaw::Rademacher => IncrementLaw::Rademacher,
        };
        let spec = TreeSpec::new(p, hurst, kmax, law, seed).status()?.with_dim(dim).status()?;
        let levels = LazyLevels::new(&spec).status()?;
        *out = Box::into_raw(Box::new(PssiProcess { levels }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `process` must come from [`pssi_process_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pssi_process_free(process: *mut PssiProcess) {
    if !process.is_null() {
        drop(Box::from_raw(process));
    }
}

/// Dimension of the process index set.
///
/// # Safety
/// `process` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn pssi_process_dim(process: *const PssiProcess) -> usize {
    process.as_ref().map_or(0, |h| h.levels.spec().dim)
}

/// Writes `X_0, …, X_{horizon−1}` into `out` (one-dimensional processes).
///
/// # Safety
/// `process` must be a live handle and `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pssi_process_path(
    process: *const PssiProcess,
    horizon: usize,
    out: *mut f64,
    out_len: usize,
) -> PssiStatus {
    guard(|| {
        nonnull(process, "process")?;
        nonnull(out, "out")?;
        if out_len < horizon {
            return Err(fail(
                PssiStatus::BufferTooSmall,
                format!("buffer holds {out_len} values, horizon is {horizon}"),
            ));
        }
        let path = tree::path(&(*process).levels, horizon).status()?;
        slice::from_raw_parts_mut(out, horizon).copy_from_slice(&path.values);
        Ok(())
    })
}

/// `X_b − X_a` for lattice points `a`, `b` with `dim` coordinates each.
///
/// # Safety
/// `process` must be a live handle, `a` and `b` must hold `dim` values, and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pssi_process_increment(
    process: *const PssiProcess,
    a: *const u64,
    b: *const u64,
    dim: usize,
    out: *mut f64,
) -> PssiStatus {
    guard(|| {
        nonnull(process, "process")?;
        nonnull(a, "a")?;
        nonnull(b, "b")?;
        nonnull(out, "out")?;
        let a = slice::from_raw_parts(a, dim);
        let b = slice::from_raw_parts(b, dim);
        *out = tree::field_increment(&(*process).levels, a, b).status()?;
        Ok(())
    })
}

/// Finite-horizon p-adic modulus `ω̂(K)` of a sequence.
///
/// # Safety
/// `values` must hold `len` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pssi_padic_modulus(values: *const f64, len: usize, p: u64, k: u32, out: *mut f64) -> PssiStatus {
    guard(|| {
        nonnull(out, "out")?;
        let f = input(values, len)?;
        let ctx = PadicContext::new(p).status()?;
        *out = diagnostics::padic_modulus(f, &ctx, k).status()?;
        Ok(())
    })
}

/// Bohr translation numbers `τ ≤ tau_max` at `epsilon`: the count accepted and
/// the largest gap between consecutive accepted values.
///
/// # Safety
/// `values` must hold `len` doubles; `accepted` and `max_gap` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pssi_bohr_translations(
    values: *const f64,
    len: usize,
    epsilon: f64,
    tau_max: usize,
    accepted: *mut usize,
    max_gap: *mut usize,
) -> PssiStatus {
    guard(|| {
        nonnull(accepted, "accepted")?;
        nonnull(max_gap, "max_gap")?;
        let f = input(values, len)?;
        let r = diagnostics::bohr_translation_set(f, epsilon, tau_max).status()?;
        *accepted = r.taus.len();
        *max_gap = r.max_gap;
        Ok(())
    })
}

/// Weyl and Besicovitch headline values of the translate difference
/// `f(n + tau) − f(n)` over the dyadic window grid.
///
/// # Safety
/// `values` must hold `len` doubles; `weyl` and `besicovitch` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pssi_seminorm_headlines(
    values: *const f64,
    len: usize,
    tau: usize,
    q: f64,
    weyl: *mut f64,
    besicovitch: *mut f64,
) -> PssiStatus {
    guard(|| {
        nonnull(weyl, "weyl")?;
        nonnull(besicovitch, "besicovitch")?;
        let f = input(values, len)?;
        let u = diagnostics::translate_diff(f, tau).status()?;
        let grid = diagnostics::dyadic_grid(u.len());
        *weyl = diagnostics::weyl_profile(&u, q, &grid).status()?.headline;
        *besicovitch = diagnostics::besicovitch_profile(&u, q, &grid).status()?.headline;
        Ok(())
    })
}

/// Two-sample Kolmogorov-Smirnov statistic.
///
/// # Safety
/// `xs` and `ys` must hold `m` and `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pssi_ks_statistic(xs: *const f64, m: usize, ys: *const f64, n: usize, out: *mut f64) -> PssiStatus {
    guard(|| {
        nonnull(out, "out")?;
        let xs = input(xs, m)?;
        let ys = input(ys, n)?;
        *out = identity::ks_statistic(xs, ys).status()?;
        Ok(())
    })
}
