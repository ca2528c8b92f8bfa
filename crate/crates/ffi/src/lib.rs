//! C interface to stt-core.
//!
//! Surrogates are opaque handles created by [`stt_surrogate_load`] or
//! [`stt_build`] and released with [`stt_surrogate_free`]. Every fallible
//! function returns an [`SttStatus`]; on failure a description is available
//! from [`stt_last_error_message`] on the same thread until the next failing
//! call.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use stt_core::linalg::Matrix;
use stt_core::quadrature::Domain;
use stt_core::stt::{
    ftt_interpolation_construct, ftt_projection_construct, load_surrogate, save_surrogate, BuildOptions, GridSpec,
    Surrogate, SurrogateMode,
};
use stt_core::SttError;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SttStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Arguments are inconsistent or out of range.
    InvalidArgument = 2,
    /// The numerics failed (non-convergence, rank cap, degenerate function).
    Numerical = 3,
    /// A surrogate file is malformed or of an unsupported version.
    Format = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// Surrogate construction method.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SttMode {
    /// Pseudospectral projection on Gauss nodes; `levels[k]` is the degree.
    Projection = 0,
    /// Lagrange interpolation on Gauss nodes; `levels[k]` is the degree.
    Lagrange = 1,
    /// Piecewise linear interpolation; `levels[k]` is the number of
    /// equispaced points.
    Linear = 2,
}

/// Opaque surrogate handle.
pub struct SttSurrogate {
    inner: Surrogate,
}

/// Black-box callback: value of the function at `x[0..dim]`.
pub type SttFunction = Option<unsafe extern "C" fn(x: *const f64, dim: usize, user_data: *mut c_void) -> f64>;

/// Parameters of [`stt_build`].
///
/// Dimension `k` lives on `[lower[k], upper[k]]` with the uniform measure,
/// or on the real line with the standard Gaussian measure when both bounds
/// are infinite.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SttBuildParams {
    pub dim: usize,
    /// `dim` entries.
    pub levels: *const usize,
    /// `dim` entries.
    pub lower: *const f64,
    /// `dim` entries.
    pub upper: *const f64,
    pub mode: SttMode,
    /// Target relative accuracy, positive.
    pub eps: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &SttError) -> SttStatus {
    match e {
        SttError::InvalidInput(_) | SttError::Configuration(_) | SttError::Domain(_) => SttStatus::InvalidArgument,
        SttError::NumericalFailure(_)
        | SttError::RankCapReached { .. }
        | SttError::DegenerateFunction(_)
        | SttError::Resource(_) => SttStatus::Numerical,
        SttError::Format(_) => SttStatus::Format,
        SttError::Io(_) => SttStatus::Io,
    }
}

struct Failure(SttStatus, String);

impl From<SttError> for Failure {
    fn from(e: SttError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SttStatus::NullPointer, format!("{what} is null"))
}

/// Run `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SttStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SttStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            SttStatus::Internal
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure(SttStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn stt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn stt_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Version of the surrogate file format this library reads and writes.
#[no_mangle]
pub extern "C" fn stt_format_version() -> u32 {
    stt_core::stt::FORMAT_VERSION
}

/// Load a surrogate file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stt_surrogate_load(path: *const c_char, out: *mut *mut SttSurrogate) -> SttStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = load_surrogate(&path_arg(path)?)?;
        *out = Box::into_raw(Box::new(SttSurrogate { inner: s }));
        Ok(())
    })
}

/// Write a surrogate file.
///
/// # Safety
/// `s` must come from this library and `path` be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn stt_surrogate_save(s: *const SttSurrogate, path: *const c_char) -> SttStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("surrogate"))?;
        save_surrogate(&s.inner, &path_arg(path)?)?;
        Ok(())
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stt_surrogate_free(s: *mut SttSurrogate) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of input dimensions.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn stt_surrogate_ndim(s: *const SttSurrogate, out: *mut usize) -> SttStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("surrogate"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = s.inner.ndim();
        Ok(())
    })
}

/// Copy the rank vector (`ndim + 1` entries) into `out`. `needed` receives
/// the length; with `capacity` too small nothing is copied and the call
/// fails with `InvalidArgument`.
///
/// # Safety
/// `out` must hold `capacity` entries; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn stt_surrogate_ranks(
    s: *const SttSurrogate,
    out: *mut usize,
    capacity: usize,
    needed: *mut usize,
) -> SttStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("surrogate"))?;
        let ranks = s.inner.ranks();
        if let Some(n) = needed.as_mut() {
            *n = ranks.len();
        }
        if capacity < ranks.len() {
            return Err(Failure(
                SttStatus::InvalidArgument,
                format!("rank buffer holds {capacity}, {} needed", ranks.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, ranks.len()).copy_from_slice(&ranks);
        Ok(())
    })
}

/// Black-box evaluations spent building the surrogate.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn stt_surrogate_eval_count(s: *const SttSurrogate, out: *mut usize) -> SttStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("surrogate"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = s.inner.info.eval_count;
        Ok(())
    })
}

/// Evaluate at `n_points` points stored row-major in `points`
/// (`n_points * dim` values), writing `n_points` values to `values`.
///
/// # Safety
/// Buffers must have the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn stt_surrogate_eval(
    s: *const SttSurrogate,
    points: *const f64,
    n_points: usize,
    dim: usize,
    values: *mut f64,
) -> SttStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("surrogate"))?;
        if dim != s.inner.ndim() {
            return Err(Failure(
                SttStatus::InvalidArgument,
                format!("points have {dim} coordinates, surrogate has {}", s.inner.ndim()),
            ));
        }
        let total = n_points.checked_mul(dim).ok_or_else(|| Failure(SttStatus::InvalidArgument, "size overflow".into()))?;
        let pts = slice_arg(points, total, "points")?;
        if n_points == 0 {
            return Ok(());
        }
        if values.is_null() {
            return Err(null("values"));
        }
        let m = Matrix::from_vec(n_points, dim, pts.to_vec())?;
        let v = s.inner.eval(&m)?;
        std::slice::from_raw_parts_mut(values, n_points).copy_from_slice(&v);
        Ok(())
    })
}

/// Callback and user pointer. The builder runs serially (no parallel
/// batches), so the callback is only ever invoked from the calling thread.
struct Callback {
    f: unsafe extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    user: *mut c_void,
}

// SAFETY: `BuildOptions::parallel` is false below, so the closure wrapping
// this is never called concurrently or from another thread.
unsafe impl Sync for Callback {}

/// Build a surrogate by sampling `f`.
///
/// # Safety
/// `params` arrays must hold `params->dim` entries; `f` must be safe to call
/// with `user_data` for the duration of the call.
#[no_mangle]
pub unsafe extern "C" fn stt_build(
    params: *const SttBuildParams,
    f: SttFunction,
    user_data: *mut c_void,
    out: *mut *mut SttSurrogate,
) -> SttStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let f = f.ok_or_else(|| null("callback"))?;
        if p.dim == 0 {
            return Err(Failure(SttStatus::InvalidArgument, "dim must be at least 1".into()));
        }
        let levels = slice_arg(p.levels, p.dim, "levels")?;
        let lower = slice_arg(p.lower, p.dim, "lower")?;
        let upper = slice_arg(p.upper, p.dim, "upper")?;
        let domains = lower
            .iter()
            .zip(upper)
            .map(|(&a, &b)| {
                if a == f64::NEG_INFINITY && b == f64::INFINITY {
                    Ok(Domain::RealLine)
                } else {
                    Domain::interval(a, b)
                }
            })
            .collect::<Result<Vec<_>, SttError>>()?;

        let cb = Callback { f, user: user_data };
        let dim = p.dim;
        let func = move |x: &[f64]| {
            let cb = &cb;
            // SAFETY: `x` holds `dim` coordinates; the caller vouches for `f`.
            unsafe { (cb.f)(x.as_ptr(), dim, cb.user) }
        };
        let mut opts = BuildOptions { parallel: false, ..BuildOptions::with_eps(p.eps) };
        opts.cross.seed = p.seed;
        let s = match p.mode {
            SttMode::Projection => {
                let grid = GridSpec::gauss(levels, &domains)?;
                ftt_projection_construct(&func, &grid, levels, &opts)?
            }
            SttMode::Lagrange => {
                let grid = GridSpec::gauss(levels, &domains)?;
                ftt_interpolation_construct(&func, &grid, SurrogateMode::LagrangeInterp, &opts)?
            }
            SttMode::Linear => {
                let grid = GridSpec::equispaced(levels, &domains)?;
                ftt_interpolation_construct(&func, &grid, SurrogateMode::LinearInterp, &opts)?
            }
        };
        *out = Box::into_raw(Box::new(SttSurrogate { inner: s }));
        Ok(())
    })
}
