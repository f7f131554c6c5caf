//! C ABI over the `rpost` library.
//!
//! Objects cross the boundary as opaque handles created by the
//! `rpost_family_*`, `rpost_prior_*` and sampler functions and released with
//! the matching `*_free` function.
//! Every fallible function returns an [`RpostStatus`] and writes results
//! through out-pointers; on failure a message is available from
//! [`rpost_last_error_message`] on the same thread. Panics never unwind
//! into the caller.
//!
//! Arrays are passed as pointer plus length. Matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rpost::divergence;
use rpost::estimators;
use rpost::model::{AlphaConfig, Family, ModelFamily, NormalRegression};
use rpost::posterior::{self, Lattice, ProposalSpec, WeightedPosterior};
use rpost::prior::{Prior, SupportPoint};
use rpost::{alpha_lik, rng, Error};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpostStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Arguments violate a documented precondition.
    InvalidArgument = 2,
    /// A numerical routine failed (non-convergence, vanishing weights, ...).
    Numeric = 3,
    /// The requested quantity does not exist for these inputs (for example
    /// a marginal under an improper prior).
    Undefined = 4,
    /// Internal failure, including a caught panic.
    Internal = 5,
}

/// Predictive density estimator selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpostEstimator {
    Erpde = 0,
    Arpde = 1,
    Hrpde = 2,
}

/// Opaque parametric family.
pub struct RpostFamily(ModelFamily);
/// Opaque prior.
pub struct RpostPrior(Prior);
/// Opaque weighted posterior sample.
pub struct RpostPosterior(WeightedPosterior);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> RpostStatus {
    match err {
        Error::Contract(_) | Error::Parse(_) => RpostStatus::InvalidArgument,
        Error::Numeric(_) | Error::AllWeightsZero | Error::NormalizerVanished | Error::MassEscapesGrid { .. } => {
            RpostStatus::Numeric
        }
        Error::ModifiedPriorUndefined(_) | Error::MarginalUndefined(_) | Error::NonNormalizable(_) => {
            RpostStatus::Undefined
        }
        Error::Io(_) | Error::Json(_) => RpostStatus::Internal,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn guard<F: FnOnce() -> Outcome>(f: F) -> RpostStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RpostStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            RpostStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            RpostStatus::Internal
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &'static str) -> Outcome {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn emit<T>(out: *mut *mut T, value: T, what: &'static str) -> Outcome {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rpost_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Normal location family `N(θ, sigma²)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn rpost_family_normal_location(sigma: f64, out: *mut *mut RpostFamily) -> RpostStatus {
    guard(|| emit(out, RpostFamily(ModelFamily::normal_location(sigma)?), "out"))
}

/// Fixed-design normal regression. `design` holds `rows * cols` entries in
/// row-major order. When `sigma_known` is false the scale is the last
/// parameter and `sigma` is ignored by the density.
///
/// # Safety
/// `design` must point to `rows * cols` readable values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rpost_family_normal_regression(
    design: *const f64,
    rows: usize,
    cols: usize,
    sigma: f64,
    sigma_known: bool,
    out: *mut *mut RpostFamily,
) -> RpostStatus {
    guard(|| {
        if cols == 0 {
            return Err(Error::Contract("design needs at least one column".into()).into());
        }
        let d = slice(design, rows * cols, "design")?;
        let rows: Vec<Vec<f64>> = d.chunks(cols).map(<[f64]>::to_vec).collect();
        let reg = NormalRegression::from_rows(&rows, sigma, sigma_known)?;
        emit(out, RpostFamily(ModelFamily::NormalLinearRegression(reg)), "out")
    })
}

/// Number of parameters of the family.
///
/// # Safety
/// `family` must be a live handle or null (null yields 0).
#[no_mangle]
pub unsafe extern "C" fn rpost_family_param_dim(family: *const RpostFamily) -> usize {
    family.as_ref().map_or(0, |f| f.0.param_dim())
}

/// # Safety
/// `family` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rpost_family_free(family: *mut RpostFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rpost_prior_uniform(out: *mut *mut RpostPrior) -> RpostStatus {
    guard(|| emit(out, RpostPrior(Prior::uniform()), "out"))
}

/// Jeffreys-type prior `1/σ` on the last parameter.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rpost_prior_jeffreys(out: *mut *mut RpostPrior) -> RpostStatus {
    guard(|| emit(out, RpostPrior(Prior::jeffreys()), "out"))
}

/// Independent `N(theta0_j, tau²)` prior.
///
/// # Safety
/// `theta0` must point to `dim` readable values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rpost_prior_conjugate(
    theta0: *const f64,
    dim: usize,
    tau: f64,
    out: *mut *mut RpostPrior,
) -> RpostStatus {
    guard(|| {
        let t = slice(theta0, dim, "theta0")?;
        emit(out, RpostPrior(Prior::conjugate(t.to_vec(), tau)?), "out")
    })
}

/// Discrete prior with `count` atoms of dimension `dim`; `thetas` holds the
/// atoms row-major and `masses` their probabilities.
///
/// # Safety
/// `thetas` must point to `count * dim` values, `masses` to `count` values.
#[no_mangle]
pub unsafe extern "C" fn rpost_prior_discrete(
    thetas: *const f64,
    masses: *const f64,
    count: usize,
    dim: usize,
    out: *mut *mut RpostPrior,
) -> RpostStatus {
    guard(|| {
        if dim == 0 {
            return Err(Error::Contract("atom dimension must be positive".into()).into());
        }
        let t = slice(thetas, count * dim, "thetas")?;
        let m = slice(masses, count, "masses")?;
        let support = t
            .chunks(dim)
            .zip(m)
            .map(|(theta, mass)| SupportPoint { theta: theta.to_vec(), mass: *mass })
            .collect();
        emit(out, RpostPrior(Prior::discrete(support)?), "out")
    })
}

/// # Safety
/// `prior` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpost_prior_free(prior: *mut RpostPrior) {
    if !prior.is_null() {
        drop(Box::from_raw(prior));
    }
}

/// Alpha-likelihood `q_n(x|θ)`; observation `i` uses design row `i` for
/// regression families.
///
/// # Safety
/// Pointers must reference `n` data values and `dim` parameter values.
#[no_mangle]
pub unsafe extern "C" fn rpost_alpha_likelihood(
    family: *const RpostFamily,
    data: *const f64,
    n: usize,
    theta: *const f64,
    dim: usize,
    alpha: f64,
    out: *mut f64,
) -> RpostStatus {
    guard(|| {
        let f = &deref(family, "family")?.0;
        let x = slice(data, n, "data")?;
        let t = slice(theta, dim, "theta")?;
        let v = alpha_lik::q_inh(f, x, t, AlphaConfig::new(alpha)?)?;
        write(out, v.value, "out")
    })
}

/// Unnormalized log R-posterior `q_n(x|θ) + log π(θ)`.
///
/// # Safety
/// As for [`rpost_alpha_likelihood`]; `prior` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpost_log_unnorm_posterior(
    family: *const RpostFamily,
    prior: *const RpostPrior,
    data: *const f64,
    n: usize,
    theta: *const f64,
    dim: usize,
    alpha: f64,
    out: *mut f64,
) -> RpostStatus {
    guard(|| {
        let f = &deref(family, "family")?.0;
        let p = &deref(prior, "prior")?.0;
        let x = slice(data, n, "data")?;
        let t = slice(theta, dim, "theta")?;
        let v = posterior::log_unnorm_posterior(f, p, x, t, AlphaConfig::new(alpha)?)?;
        write(out, v, "out")
    })
}

/// Self-normalized importance sample of the R-posterior with a Gaussian
/// proposal (`mean`: `dim` values, `cov`: `dim * dim` row-major), retried
/// once with a wider proposal when degenerate.
///
/// # Safety
/// Pointers must reference arrays of the stated sizes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rpost_importance_sample(
    family: *const RpostFamily,
    prior: *const RpostPrior,
    data: *const f64,
    n: usize,
    alpha: f64,
    mean: *const f64,
    cov: *const f64,
    dim: usize,
    draws: usize,
    seed: u64,
    out: *mut *mut RpostPosterior,
) -> RpostStatus {
    guard(|| {
        let f = &deref(family, "family")?.0;
        let p = &deref(prior, "prior")?.0;
        let x = slice(data, n, "data")?;
        let m = slice(mean, dim, "mean")?;
        let c = slice(cov, dim * dim, "cov")?;
        let proposal = ProposalSpec::new(m.to_vec(), c.to_vec(), draws)?;
        let (wp, _) = posterior::importance_sample_with_retry(
            f,
            p,
            x,
            AlphaConfig::new(alpha)?,
            &proposal,
            &mut rng::seeded(seed),
        )?;
        emit(out, RpostPosterior(wp), "out")
    })
}

/// Grid-quadrature posterior for a one-parameter family on `points`
/// equally spaced values in `[lo, hi]`.
///
/// # Safety
/// `data` must reference `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rpost_grid_posterior_1d(
    family: *const RpostFamily,
    prior: *const RpostPrior,
    data: *const f64,
    n: usize,
    alpha: f64,
    lo: f64,
    hi: f64,
    points: usize,
    out: *mut *mut RpostPosterior,
) -> RpostStatus {
    guard(|| {
        let f = &deref(family, "family")?.0;
        let p = &deref(prior, "prior")?.0;
        let x = slice(data, n, "data")?;
        let lattice = Lattice::uniform_1d(lo, hi, points)?;
        let wp = posterior::grid_posterior(f, p, x, AlphaConfig::new(alpha)?, &lattice)?;
        emit(out, RpostPosterior(wp), "out")
    })
}

/// Number of support points (0 for null).
///
/// # Safety
/// `post` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpost_posterior_len(post: *const RpostPosterior) -> usize {
    post.as_ref().map_or(0, |p| p.0.len())
}

/// Parameter dimension (0 for null).
///
/// # Safety
/// `post` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpost_posterior_dim(post: *const RpostPosterior) -> usize {
    post.as_ref().map_or(0, |p| p.0.dim())
}

/// Effective sample size `1 / Σ w²` (NaN for null).
///
/// # Safety
/// `post` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpost_posterior_ess(post: *const RpostPosterior) -> f64 {
    post.as_ref().map_or(f64::NAN, |p| p.0.ess())
}

/// Posterior mean (ERPE) written to `out`, which holds `dim` values.
///
/// # Safety
/// `out` must point to `dim` writable values.
#[no_mangle]
pub unsafe extern "C" fn rpost_posterior_erpe(post: *const RpostPosterior, out: *mut f64, dim: usize) -> RpostStatus {
    guard(|| {
        let wp = &deref(post, "posterior")?.0;
        if dim != wp.dim() {
            return Err(Error::Contract(format!("posterior dimension is {}, buffer holds {dim}", wp.dim())).into());
        }
        slice_mut(out, dim, "out")?.copy_from_slice(&estimators::erpe(wp));
        Ok(())
    })
}

/// # Safety
/// `post` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpost_posterior_free(post: *mut RpostPosterior) {
    if !post.is_null() {
        drop(Box::from_raw(post));
    }
}

/// Predictive density on the sorted grid `z` (length `nz`), written to
/// `out` (length `nz`). HRPDE values are normalized on the grid.
///
/// # Safety
/// `z` and `out` must reference `nz` values.
#[no_mangle]
pub unsafe extern "C" fn rpost_predictive_density(
    family: *const RpostFamily,
    post: *const RpostPosterior,
    kind: RpostEstimator,
    z: *const f64,
    nz: usize,
    out: *mut f64,
) -> RpostStatus {
    guard(|| {
        let f = &deref(family, "family")?.0;
        let wp = &deref(post, "posterior")?.0;
        let grid = slice(z, nz, "z")?;
        let est = match kind {
            RpostEstimator::Erpde => estimators::erpde(f, wp, grid)?,
            RpostEstimator::Arpde => estimators::arpde(f, wp, grid)?,
            RpostEstimator::Hrpde => estimators::hrpde(f, wp, grid)?,
        };
        slice_mut(out, nz, "out")?.copy_from_slice(&est.values);
        Ok(())
    })
}

/// Trapezoid `KLD(p, q)` on the grid `z`; `+inf` when `q` vanishes where
/// `p` does not.
///
/// # Safety
/// `p`, `q` and `z` must reference `n` values.
#[no_mangle]
pub unsafe extern "C" fn rpost_kld_grid(
    p: *const f64,
    q: *const f64,
    z: *const f64,
    n: usize,
    out: *mut f64,
) -> RpostStatus {
    guard(|| {
        let v = divergence::kld(slice(p, n, "p")?, slice(q, n, "q")?, slice(z, n, "z")?)?;
        write(out, v, "out")
    })
}

/// Closed-form `KLD(N(mu0, s0²), N(mu1, s1²))`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rpost_kld_normal_closed(mu0: f64, s0: f64, mu1: f64, s1: f64, out: *mut f64) -> RpostStatus {
    guard(|| write(out, divergence::kld_normal_closed(mu0, s0, mu1, s1)?, "out"))
}
