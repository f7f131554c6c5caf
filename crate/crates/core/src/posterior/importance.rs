use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{log_target, PosteriorSource, WeightedPosterior};
use crate::error::{contract, Error, Result};
use crate::model::{check_data, AlphaConfig, Family, NormalRegression};
use crate::prior::Prior;
use crate::rng::SimRng;

/// Importance samples with fewer effective draws than this are flagged as
/// degenerate.
pub const MIN_ESS: f64 = 50.0;

const DEFAULT_DRAWS: usize = 20_000;
const MIN_DRAWS: usize = 1000;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Gaussian proposal for the importance sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSpec {
    mean: Vec<f64>,
    covariance: Vec<f64>,
    chol: Vec<f64>,
    draws: usize,
}

/// Lower Cholesky factor (row-major) of a symmetric positive definite matrix.
pub(crate) fn cholesky_lower(cov: &[f64], p: usize) -> Result<Vec<f64>> {
    if cov.len() != p * p || cov.iter().any(|v| !v.is_finite()) {
        return Err(contract("covariance has the wrong size or non-finite entries"));
    }
    let m = DMatrix::from_row_slice(p, p, cov);
    let asym = (&m - m.transpose()).amax();
    if asym > 1e-10 * m.amax().max(1e-300) {
        return Err(contract("covariance is not symmetric"));
    }
    let l = m
        .cholesky()
        .ok_or_else(|| contract("covariance is not positive definite"))?
        .l();
    let mut out = vec![0.0; p * p];
    for r in 0..p {
        for c in 0..=r {
            out[r * p + c] = l[(r, c)];
        }
    }
    Ok(out)
}

impl ProposalSpec {
    pub fn new(mean: Vec<f64>, covariance: Vec<f64>, draws: usize) -> Result<Self> {
        if draws < MIN_DRAWS {
            return Err(contract(format!("proposal needs at least {MIN_DRAWS} draws, got {draws}")));
        }
        if mean.is_empty() || mean.iter().any(|v| !v.is_finite()) {
            return Err(contract("proposal mean must be non-empty and finite"));
        }
        let chol = cholesky_lower(&covariance, mean.len())?;
        Ok(Self { mean, covariance, chol, draws })
    }

    /// `N(x̄, s_n²)` with the Bessel-corrected sample variance; falls back to
    /// `fallback_variance` when fewer than two distinct observations exist.
    pub fn sample_moments(data: &[f64], fallback_variance: f64, draws: usize) -> Result<Self> {
        if data.is_empty() {
            return Err(contract("data must be non-empty"));
        }
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = if data.len() > 1 {
            data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let var = if var > 0.0 { var } else { fallback_variance };
        Self::new(vec![mean], vec![var], draws)
    }

    /// `N_k(β̂, σ²(DᵀD)⁻¹)` with `β̂` the least-squares fit.
    pub fn least_squares(family: &NormalRegression, y: &[f64], draws: usize) -> Result<Self> {
        let (beta, cov) = least_squares(family, y)?;
        Self::new(beta, cov, draws)
    }

    pub fn with_default_draws(mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        Self::new(mean, covariance, DEFAULT_DRAWS)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Same proposal with the covariance multiplied by `factor`.
    pub fn inflated(&self, factor: f64) -> Result<Self> {
        Self::new(self.mean.clone(), self.covariance.iter().map(|c| c * factor).collect(), self.draws)
    }

    /// Draw `θ` and return it together with `log q(θ)`.
    fn draw(&self, rng: &mut SimRng, out: &mut [f64]) -> f64 {
        let p = self.dim();
        let z: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
        for r in 0..p {
            out[r] = self.mean[r] + (0..=r).map(|c| self.chol[r * p + c] * z[c]).sum::<f64>();
        }
        let log_det: f64 = (0..p).map(|k| self.chol[k * p + k].ln()).sum();
        -0.5 * z.iter().map(|v| v * v).sum::<f64>() - log_det - 0.5 * p as f64 * LN_2PI
    }
}

/// Least-squares estimate `β̂ = (DᵀD)⁻¹Dᵀy` and its covariance `σ²(DᵀD)⁻¹`
/// (row-major).
pub fn least_squares(family: &NormalRegression, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = family.design();
    if d.nrows() != y.len() {
        return Err(contract("response length does not match the design"));
    }
    let gram = d.transpose() * d;
    let inv = gram
        .cholesky()
        .ok_or_else(|| contract("design Gram matrix is not positive definite"))?
        .inverse();
    let yv = nalgebra::DVector::from_column_slice(y);
    let beta = &inv * (d.transpose() * yv);
    let k = d.ncols();
    let s2 = family.sigma() * family.sigma();
    let mut cov = vec![0.0; k * k];
    for r in 0..k {
        for c in 0..k {
            // symmetrize to absorb rounding
            cov[r * k + c] = s2 * 0.5 * (inv[(r, c)] + inv[(c, r)]);
        }
    }
    Ok((beta.iter().copied().collect(), cov))
}

/// Self-normalized importance sampling of the R-posterior with a Gaussian
/// proposal. Proposal draws are generated sequentially from `rng`; the
/// target is evaluated in parallel.
pub fn importance_sample<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    data: &[f64],
    alpha: AlphaConfig,
    proposal: &ProposalSpec,
    rng: &mut SimRng,
) -> Result<WeightedPosterior> {
    check_data(family, data)?;
    prior.validate()?;
    let p = family.param_dim();
    if proposal.dim() != p {
        return Err(contract(format!("proposal dimension {} but parameter dimension {p}", proposal.dim())));
    }
    let m = proposal.draws();
    let mut points = vec![0.0; m * p];
    let mut log_q = vec![0.0; m];
    for j in 0..m {
        log_q[j] = proposal.draw(rng, &mut points[j * p..(j + 1) * p]);
    }
    let log_w: Vec<f64> = points
        .par_chunks(p)
        .zip(log_q.par_iter())
        .map(|(theta, lq)| log_target(family, prior, data, theta, alpha) - lq)
        .collect();
    if log_w.iter().any(|v| v.is_nan()) {
        return Err(Error::Numeric("importance weight evaluated to NaN".into()));
    }
    WeightedPosterior::from_log_weights(p, points, log_w, PosteriorSource::ImportanceSampling)
}

/// Covariance factor of the retry proposal (standard deviations × 4).
pub const RETRY_INFLATION: f64 = 16.0;

/// [`importance_sample`], retried once when the first attempt is
/// degenerate. The retry proposal is centered at the weighted mean of the
/// first attempt, with the original covariance inflated by
/// [`RETRY_INFLATION`]; a proposal that misses the posterior by many
/// standard deviations is otherwise rarely rescued. Returns the posterior
/// and whether a retry happened; the result may still be degenerate.
pub fn importance_sample_with_retry<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    data: &[f64],
    alpha: AlphaConfig,
    proposal: &ProposalSpec,
    rng: &mut SimRng,
) -> Result<(WeightedPosterior, bool)> {
    let wp = importance_sample(family, prior, data, alpha, proposal, rng)?;
    if !wp.is_degenerate() {
        return Ok((wp, false));
    }
    let wider = ProposalSpec::new(
        wp.mean(),
        proposal.covariance().iter().map(|c| c * RETRY_INFLATION).collect(),
        proposal.draws(),
    )?;
    Ok((importance_sample(family, prior, data, alpha, &wider, rng)?, true))
}
