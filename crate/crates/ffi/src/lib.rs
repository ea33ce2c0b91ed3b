//! C ABI for `cpcox`.
//!
//! Datasets and fits are opaque handles created by `cpcox_*_new`/`cpcox_fit`
//! and released with the matching `*_free`. Every fallible call returns a
//! [`CpcoxStatus`]; on failure the message is available from
//! [`cpcox_last_error_message`] on the same thread. Matrices are row-major
//! with one row per subject. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use cpcox::cli_io::{load_csv, ColumnMapping};
use cpcox::inference::confidence_interval;
use cpcox::optimizer::{BandwidthChoice, FitOptions, StartSpec};
use cpcox::{
    default_bandwidth, multistart_fit, score_psi, score_xi, smoothed_log_partial_likelihood,
    Dataset, Dims, Error, ErrorKind, FitResult, KernelSpec, Observation, ThetaParams,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpcoxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    FitError = 4,
    /// Standard errors or intervals were requested from a fit whose
    /// information matrix could not be inverted.
    Unavailable = 5,
    Panic = 6,
}

/// Opaque dataset handle.
pub struct CpcoxDataset {
    inner: Dataset,
}

/// Opaque fit handle.
pub struct CpcoxFit {
    inner: FitResult,
    n: usize,
    dims: Dims,
}

/// Options for [`cpcox_fit`]. Obtain defaults from
/// [`cpcox_fit_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CpcoxFitOptions {
    /// Kernel bandwidth; zero or negative selects `(ln n)^2 / n`.
    pub bandwidth: f64,
    /// Grid starts for `psi`: points per dimension over `[grid_low, grid_high]`.
    pub grid_points: u32,
    pub grid_low: f64,
    pub grid_high: f64,
    pub outer_max_iter: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CpcoxStatus {
    match e.kind() {
        ErrorKind::Usage => CpcoxStatus::InvalidArgument,
        ErrorKind::Data => CpcoxStatus::DataError,
        ErrorKind::Fit => CpcoxStatus::FitError,
    }
}

struct Failure(CpcoxStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CpcoxStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CpcoxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CpcoxStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CpcoxStatus::Panic
        }
    }
}

unsafe fn slice_in<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn dataset<'a>(ds: *const CpcoxDataset) -> Result<&'a Dataset, Failure> {
    ds.as_ref().map(|d| &d.inner).ok_or_else(|| null("dataset"))
}

unsafe fn fit_ref<'a>(fit: *const CpcoxFit) -> Result<&'a CpcoxFit, Failure> {
    fit.as_ref().ok_or_else(|| null("fit"))
}

unsafe fn theta(
    ds: &Dataset,
    beta: *const f64,
    gamma: *const f64,
    psi: *const f64,
) -> Result<ThetaParams, Failure> {
    let d = ds.dims();
    Ok(ThetaParams::new(
        slice_in(beta, d.p1, "beta")?.to_vec(),
        slice_in(gamma, d.p2, "gamma")?.to_vec(),
        slice_in(psi, d.q, "psi")?.to_vec(),
    ))
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CpcoxStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(Path::new(s))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next `cpcox_*` call on the same thread.
#[no_mangle]
pub extern "C" fn cpcox_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cpcox_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a dataset from column arrays. `z` is `n × p1`, `u` is `n × p2`
/// and `x` is `n × q`, all row-major; `status` holds 0 or 1.
///
/// # Safety
/// Every non-null pointer must reference at least the stated number of
/// elements. `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpcox_dataset_new(
    n: usize,
    p1: usize,
    p2: usize,
    q: usize,
    time: *const f64,
    status: *const c_int,
    z: *const f64,
    u: *const f64,
    v: *const f64,
    x: *const f64,
    out: *mut *mut CpcoxDataset,
) -> CpcoxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let time = slice_in(time, n, "time")?;
        let v = slice_in(v, n, "v")?;
        let z = slice_in(z, n * p1, "z")?;
        let u = slice_in(u, n * p2, "u")?;
        let x = slice_in(x, n * q, "x")?;
        if n > 0 && status.is_null() {
            return Err(null("status"));
        }
        let status = if n == 0 { &[][..] } else { slice::from_raw_parts(status, n) };
        let mut obs = Vec::with_capacity(n);
        for i in 0..n {
            let d = match status[i] {
                0 => false,
                1 => true,
                s => {
                    return Err(Failure(
                        CpcoxStatus::DataError,
                        format!("row {}: status must be 0 or 1, found {s}", i + 1),
                    ))
                }
            };
            obs.push(Observation::new(
                time[i],
                d,
                z[i * p1..(i + 1) * p1].to_vec(),
                u[i * p2..(i + 1) * p2].to_vec(),
                v[i],
                x[i * q..(i + 1) * q].to_vec(),
            ));
        }
        let inner = Dataset::new(obs, Dims::new(p1, p2, q))?;
        *out = Box::into_raw(Box::new(CpcoxDataset { inner }));
        Ok(())
    })
}

/// Loads a headed CSV file with a column mapping file (`time = …`,
/// `status = …`, `z = a,b`, `u = …`, `v = …`, `x = …`, `intercept = true`,
/// `standardize_v = true`).
///
/// # Safety
/// `data_path` and `map_path` must be NUL-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cpcox_dataset_load_csv(
    data_path: *const c_char,
    map_path: *const c_char,
    out: *mut *mut CpcoxDataset,
) -> CpcoxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let data = path_arg(data_path, "data_path")?;
        let map = path_arg(map_path, "map_path")?;
        let mapping = ColumnMapping::from_file(map)?;
        let inner = load_csv(data, &mapping)?;
        *out = Box::into_raw(Box::new(CpcoxDataset { inner }));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from `cpcox_dataset_new` or `cpcox_dataset_load_csv` and
/// not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cpcox_dataset_free(ds: *mut CpcoxDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of subjects, or 0 for a null handle.
///
/// # Safety
/// `ds` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cpcox_dataset_n(ds: *const CpcoxDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.n())
}

/// # Safety
/// `ds` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpcox_dataset_dims(
    ds: *const CpcoxDataset,
    p1: *mut usize,
    p2: *mut usize,
    q: *mut usize,
) -> CpcoxStatus {
    guard(|| {
        let d = dataset(ds)?.dims();
        if p1.is_null() || p2.is_null() || q.is_null() {
            return Err(null("dims output"));
        }
        (*p1, *p2, *q) = (d.p1, d.p2, d.q);
        Ok(())
    })
}

/// `(ln n)^2 / n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpcox_default_bandwidth(n: usize, out: *mut f64) -> CpcoxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = default_bandwidth(n)?;
        Ok(())
    })
}

/// Smoothed log partial likelihood at `(beta, gamma, psi)` with bandwidth `h`.
///
/// # Safety
/// `beta`, `gamma`, `psi` must hold `p1`, `p2`, `q` values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cpcox_smoothed_loglik(
    ds: *const CpcoxDataset,
    beta: *const f64,
    gamma: *const f64,
    psi: *const f64,
    h: f64,
    out: *mut f64,
) -> CpcoxStatus {
    guard(|| {
        let ds = dataset(ds)?;
        let th = theta(ds, beta, gamma, psi)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = smoothed_log_partial_likelihood(ds, &th, &KernelSpec::gaussian(h)?)?;
        Ok(())
    })
}

/// Gradients of the smoothed log partial likelihood: `score_xi` receives
/// `p1 + p2` values and `score_psi` receives `q`.
///
/// # Safety
/// As for [`cpcox_smoothed_loglik`]; the outputs must hold the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn cpcox_scores(
    ds: *const CpcoxDataset,
    beta: *const f64,
    gamma: *const f64,
    psi: *const f64,
    h: f64,
    score_xi_out: *mut f64,
    score_psi_out: *mut f64,
) -> CpcoxStatus {
    guard(|| {
        let ds = dataset(ds)?;
        let d = ds.dims();
        let th = theta(ds, beta, gamma, psi)?;
        let kernel = KernelSpec::gaussian(h)?;
        let sx = slice_out(score_xi_out, d.xi_len(), "score_xi_out")?;
        let sp = slice_out(score_psi_out, d.q, "score_psi_out")?;
        sx.copy_from_slice(score_xi(ds, &th, &kernel)?.as_slice());
        sp.copy_from_slice(score_psi(ds, &th, &kernel)?.as_slice());
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn cpcox_fit_options_default() -> CpcoxFitOptions {
    CpcoxFitOptions {
        bandwidth: 0.0,
        grid_points: 5,
        grid_low: -1.0,
        grid_high: 1.0,
        outer_max_iter: FitOptions::default().outer_max_iter as u32,
    }
}

/// Multi-start fit. `options` may be null for the defaults.
///
/// # Safety
/// `ds` must be a live handle; `options` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpcox_fit(
    ds: *const CpcoxDataset,
    options: *const CpcoxFitOptions,
    out: *mut *mut CpcoxFit,
) -> CpcoxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let ds = dataset(ds)?;
        let o = options.as_ref().copied().unwrap_or_else(|| cpcox_fit_options_default());
        let opts = FitOptions {
            bandwidth: if o.bandwidth > 0.0 {
                BandwidthChoice::Fixed(o.bandwidth)
            } else {
                BandwidthChoice::Auto
            },
            psi_starts: StartSpec::Grid {
                points_per_dim: o.grid_points as usize,
                low: o.grid_low,
                high: o.grid_high,
                quasi_random_count: 64,
            },
            outer_max_iter: o.outer_max_iter as usize,
            ..FitOptions::default()
        };
        opts.validate()?;
        let kernel = opts.kernel(ds.n())?;
        let inner = multistart_fit(ds, &kernel, &opts)?;
        *out = Box::into_raw(Box::new(CpcoxFit {
            inner,
            n: ds.n(),
            dims: ds.dims(),
        }));
        Ok(())
    })
}

/// # Safety
/// `fit` must come from `cpcox_fit` and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cpcox_fit_free(fit: *mut CpcoxFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Copies the estimates into arrays of `p1`, `p2` and `q` values.
///
/// # Safety
/// `fit` must be live; the outputs must hold the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn cpcox_fit_theta(
    fit: *const CpcoxFit,
    beta_out: *mut f64,
    gamma_out: *mut f64,
    psi_out: *mut f64,
) -> CpcoxStatus {
    guard(|| {
        let f = fit_ref(fit)?;
        let t = &f.inner.theta_hat;
        slice_out(beta_out, f.dims.p1, "beta_out")?.copy_from_slice(&t.beta);
        slice_out(gamma_out, f.dims.p2, "gamma_out")?.copy_from_slice(&t.gamma);
        slice_out(psi_out, f.dims.q, "psi_out")?.copy_from_slice(&t.psi);
        Ok(())
    })
}

/// Maximized smoothed log partial likelihood, or NaN for a null handle.
///
/// # Safety
/// `fit` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn cpcox_fit_loglik(fit: *const CpcoxFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.inner.loglik)
}

/// Bandwidth the fit used, or NaN for a null handle.
///
/// # Safety
/// `fit` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn cpcox_fit_bandwidth(fit: *const CpcoxFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.inner.bandwidth_used)
}

/// 1 if the selected start reached a stationary point, 0 otherwise or for a
/// null handle.
///
/// # Safety
/// `fit` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn cpcox_fit_converged(fit: *const CpcoxFit) -> c_int {
    fit.as_ref().map_or(0, |f| c_int::from(f.inner.converged))
}

/// Standard errors of `(beta, gamma)`, `p1 + p2` values.
///
/// # Safety
/// `fit` must be live; `se_out` must hold `p1 + p2` values.
#[no_mangle]
pub unsafe extern "C" fn cpcox_fit_std_errors(fit: *const CpcoxFit, se_out: *mut f64) -> CpcoxStatus {
    guard(|| {
        let f = fit_ref(fit)?;
        let cov = f.inner.covariance_xi.as_ref().ok_or_else(|| unavailable(f))?;
        slice_out(se_out, f.dims.xi_len(), "se_out")?.copy_from_slice(&cov.std_errors);
        Ok(())
    })
}

/// Wald intervals for `(beta, gamma)` at `level`.
///
/// # Safety
/// `fit` must be live; `lower_out` and `upper_out` must hold `p1 + p2`
/// values.
#[no_mangle]
pub unsafe extern "C" fn cpcox_fit_confidence_intervals(
    fit: *const CpcoxFit,
    level: f64,
    lower_out: *mut f64,
    upper_out: *mut f64,
) -> CpcoxStatus {
    guard(|| {
        let f = fit_ref(fit)?;
        let cov = f.inner.covariance_xi.as_ref().ok_or_else(|| unavailable(f))?;
        let k = f.dims.xi_len();
        let cis = confidence_interval(&f.inner.theta_hat.xi(), &cov.information_inverse, f.n, level)?;
        let lower = slice_out(lower_out, k, "lower_out")?;
        let upper = slice_out(upper_out, k, "upper_out")?;
        for (j, ci) in cis.iter().enumerate() {
            lower[j] = ci.lower;
            upper[j] = ci.upper;
        }
        Ok(())
    })
}

fn unavailable(f: &CpcoxFit) -> Failure {
    Failure(
        CpcoxStatus::Unavailable,
        f.inner
            .covariance_error
            .clone()
            .unwrap_or_else(|| "covariance unavailable".into()),
    )
}
