//! Alpha-likelihoods and the alpha-modified model and prior densities.
//!
//! For `α > 0` the per-observation term is
//! `q_{i,θ}(x) = (f_{i,θ}(x)^α − 1)/α − ∫f_{i,θ}^{1+α}/(1+α)`, evaluated with
//! `expm1` so that small `α` does not cancel. At `α = 0` the term is
//! `log f_{i,θ}(x) − 1`. The alpha-likelihood of a sample is the sum of its
//! terms; all constants are kept.

use crate::error::{contract, Error, Result};
use crate::model::{check_data, check_theta, AlphaConfig, Family, NormalRegression};
use crate::numeric::{integrate, integrate_breaks, log_sum_exp};
use crate::prior::Prior;

use nalgebra::DMatrix;

/// An alpha-likelihood value on the log scale, with the per-observation
/// terms when they were requested.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaLikValue {
    pub value: f64,
    pub per_term: Option<Vec<f64>>,
}

/// Support of a single observation, used as the integration domain of the
/// normalizer `Q(χ|θ) = ∫_χ exp(q_θ(y)) dy`.
///
/// For `α > 0`, `exp(q_θ(y))` tends to a positive constant in the tails, so
/// the normalizer is only finite on a bounded interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataSpace {
    RealLine,
    Interval { lo: f64, hi: f64 },
}

impl DataSpace {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(contract(format!("bad data interval [{lo}, {hi}]")));
        }
        Ok(DataSpace::Interval { lo, hi })
    }

    fn contains(&self, x: f64) -> bool {
        match self {
            DataSpace::RealLine => true,
            DataSpace::Interval { lo, hi } => *lo <= x && x <= *hi,
        }
    }
}

/// One alpha-likelihood term given `log f` and the power integral.
#[inline]
pub(crate) fn term(log_f: f64, alpha: AlphaConfig, power_integral: f64) -> f64 {
    if alpha.is_zero() {
        log_f - 1.0
    } else {
        let a = alpha.alpha();
        (a * log_f).exp_m1() / a - power_integral / (1.0 + a)
    }
}

/// Sum of alpha-likelihood terms without validation; the hot path of the
/// posterior engines. Non-finite densities propagate as NaN/inf.
pub(crate) fn q_sum<F: Family + ?Sized>(family: &F, data: &[f64], theta: &[f64], alpha: AlphaConfig) -> f64 {
    if alpha.is_zero() {
        return data.iter().enumerate().map(|(i, x)| family.log_density(theta, *x, i) - 1.0).sum();
    }
    let a = alpha.alpha();
    if family.power_integral_row_invariant() {
        let pi = family.power_integral(theta, a, 0);
        let s: f64 = data
            .iter()
            .enumerate()
            .map(|(i, x)| (a * family.log_density(theta, *x, i)).exp_m1())
            .sum();
        s / a - data.len() as f64 * pi / (1.0 + a)
    } else {
        data.iter()
            .enumerate()
            .map(|(i, x)| term(family.log_density(theta, *x, i), alpha, family.power_integral(theta, a, i)))
            .sum()
    }
}

fn per_terms<F: Family + ?Sized>(
    family: &F,
    data: &[f64],
    theta: &[f64],
    alpha: AlphaConfig,
) -> Result<AlphaLikValue> {
    let mut terms = Vec::with_capacity(data.len());
    for (i, x) in data.iter().enumerate() {
        let lf = family.log_density(theta, *x, i);
        if lf.is_nan() || lf == f64::INFINITY {
            return Err(Error::Numeric(format!("non-finite density at observation {i} (x = {x})")));
        }
        let pi = if alpha.is_zero() { 1.0 } else { family.power_integral(theta, alpha.alpha(), i) };
        terms.push(term(lf, alpha, pi));
    }
    let value = terms.iter().sum();
    Ok(AlphaLikValue { value, per_term: Some(terms) })
}

/// Alpha-likelihood of IID data from a homogeneous family.
pub fn q_iid<F: Family + ?Sized>(
    family: &F,
    data: &[f64],
    theta: &[f64],
    alpha: AlphaConfig,
) -> Result<AlphaLikValue> {
    if family.rows().is_some() {
        return Err(contract("q_iid needs a homogeneous family; use q_inh for per-observation densities"));
    }
    check_theta(family, theta)?;
    check_data(family, data)?;
    per_terms(family, data, theta, alpha)
}

/// Alpha-likelihood of independent non-homogeneous data: observation `i`
/// uses `f_{i,θ}`. For homogeneous families this equals [`q_iid`].
pub fn q_inh<F: Family + ?Sized>(
    family: &F,
    data: &[f64],
    theta: &[f64],
    alpha: AlphaConfig,
) -> Result<AlphaLikValue> {
    check_theta(family, theta)?;
    check_data(family, data)?;
    per_terms(family, data, theta, alpha)
}

/// Known-scale normal regression alpha-likelihood of `β`.
pub fn q_regression_beta(
    y: &[f64],
    design: &DMatrix<f64>,
    beta: &[f64],
    sigma: f64,
    alpha: AlphaConfig,
) -> Result<AlphaLikValue> {
    if design.nrows() != y.len() {
        return Err(contract(format!(
            "design has {} rows but response has length {}",
            design.nrows(),
            y.len()
        )));
    }
    let family = NormalRegression::new(design.clone(), sigma, true)?;
    q_inh(&family, y, beta, alpha)
}

fn quadrature_breaks<F: Family + ?Sized>(family: &F, theta: &[f64], row: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut edges = crate::numeric::linspace(lo, hi, 33);
    if let Some((m, s)) = family.normal_moments(theta, row) {
        for k in [-12.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 12.0] {
            let e = m + k * s;
            if e > lo && e < hi {
                edges.push(e);
            }
        }
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    edges
}

/// `log Q^{(α)}(χ|θ)` for observation slot `row`.
///
/// On the real line this is exactly `-1` at `α = 0` and undefined for
/// `α > 0`; on an interval it is computed by adaptive quadrature.
pub fn log_normalizer<F: Family + ?Sized>(
    family: &F,
    theta: &[f64],
    alpha: AlphaConfig,
    row: usize,
    space: DataSpace,
) -> Result<f64> {
    match space {
        DataSpace::RealLine => {
            if alpha.is_zero() {
                Ok(-1.0)
            } else {
                Err(contract(
                    "the alpha-modified normalizer is infinite on the real line for alpha > 0; use a bounded data interval",
                ))
            }
        }
        DataSpace::Interval { lo, hi } => {
            let pi = if alpha.is_zero() { 1.0 } else { family.power_integral(theta, alpha.alpha(), row) };
            let edges = quadrature_breaks(family, theta, row, lo, hi);
            let q = integrate_breaks(
                |y| term(family.log_density(theta, y, row), alpha, pi).exp(),
                &edges,
                0.0,
                1e-13,
            )?;
            if !(q.value > 0.0) {
                return Err(Error::Numeric(format!("normalizer Q is not positive ({})", q.value)));
            }
            Ok(q.value.ln())
        }
    }
}

/// `log Q_n(χ_n|θ) = Σ_{i<n} log Q_i(χ|θ)`, reusing one quadrature for
/// homogeneous families.
pub(crate) fn log_normalizer_n<F: Family + ?Sized>(
    family: &F,
    theta: &[f64],
    alpha: AlphaConfig,
    n: usize,
    space: DataSpace,
) -> Result<f64> {
    match family.rows() {
        None => Ok(n as f64 * log_normalizer(family, theta, alpha, 0, space)?),
        Some(rows) => {
            if n > rows {
                return Err(contract(format!("n = {n} exceeds the {rows} design rows")));
            }
            (0..n).map(|i| log_normalizer(family, theta, alpha, i, space)).sum()
        }
    }
}

/// Log of the alpha-modified model density
/// `exp(q_n(x|θ)) / Q_n(χ_n|θ)`. At `α = 0` this is the model log-density.
pub fn alpha_modified_model_logdensity<F: Family + ?Sized>(
    family: &F,
    data: &[f64],
    theta: &[f64],
    alpha: AlphaConfig,
    space: DataSpace,
) -> Result<f64> {
    check_theta(family, theta)?;
    check_data(family, data)?;
    if data.iter().any(|x| !space.contains(*x)) {
        return Ok(f64::NEG_INFINITY);
    }
    let q = per_terms(family, data, theta, alpha)?.value;
    Ok(q - log_normalizer_n(family, theta, alpha, data.len(), space)?)
}

/// Integration range used for continuous one-dimensional proper priors.
pub(crate) fn prior_theta_range(prior: &Prior) -> Option<(f64, f64)> {
    match prior {
        Prior::NormalConjugate { theta0, tau } if theta0.len() == 1 => {
            Some((theta0[0] - 12.0 * tau, theta0[0] + 12.0 * tau))
        }
        _ => None,
    }
}

/// `log M_n(χ_n, Θ) = log ∫ Q_n(χ_n|θ) π(θ) dθ` (a sum for discrete priors).
pub fn log_prior_normalizer<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    alpha: AlphaConfig,
    n: usize,
    space: DataSpace,
) -> Result<f64> {
    prior.validate()?;
    if !prior.is_proper() {
        return Err(Error::ModifiedPriorUndefined(
            "improper prior: M_n(χ_n, Θ) is not finite".into(),
        ));
    }
    if let Some(support) = prior.support() {
        let mut terms = Vec::with_capacity(support.len());
        for s in support {
            check_theta(family, &s.theta)?;
            terms.push(s.mass.ln() + log_normalizer_n(family, &s.theta, alpha, n, space)?);
        }
        return Ok(log_sum_exp(&terms));
    }
    if family.param_dim() != 1 {
        return Err(contract("continuous modified prior is implemented for one-dimensional parameters"));
    }
    if space == DataSpace::RealLine && alpha.is_zero() {
        // Q_n = e^{-n} for every θ
        return Ok(-(n as f64) + prior.total_mass().unwrap_or(1.0).ln());
    }
    let (lo, hi) = prior_theta_range(prior)
        .ok_or_else(|| contract("no integration range for this prior"))?;
    let center = 0.5 * (lo + hi);
    let shift = log_normalizer_n(family, &[center], alpha, n, space)? + prior.log_prior(&[center]);
    let eval_err = std::cell::Cell::new(None);
    let q = integrate(
        |t| match log_normalizer_n(family, &[t], alpha, n, space) {
            Ok(lq) => (lq + prior.log_prior(&[t]) - shift).exp(),
            Err(e) => {
                eval_err.set(Some(e.to_string()));
                f64::NAN
            }
        },
        lo,
        hi,
        24,
        0.0,
        1e-10,
    );
    if let Some(msg) = eval_err.take() {
        return Err(Error::Numeric(msg));
    }
    let q = q?;
    if !(q.value > 0.0 && q.value.is_finite()) {
        return Err(Error::ModifiedPriorUndefined(format!("M_n evaluated to {}", q.value)));
    }
    Ok(shift + q.value.ln())
}

/// Log of the alpha-modified prior `Q_n(χ_n|θ) π(θ) / M_n(χ_n, Θ)`.
pub fn alpha_modified_prior_logdensity<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    theta: &[f64],
    alpha: AlphaConfig,
    n: usize,
    space: DataSpace,
) -> Result<f64> {
    check_theta(family, theta)?;
    if n == 0 {
        return Err(contract("n must be at least 1"));
    }
    let log_m = log_prior_normalizer(family, prior, alpha, n, space)?;
    let lp = prior.log_prior(theta);
    if lp == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(log_normalizer_n(family, theta, alpha, n, space)? + lp - log_m)
}
