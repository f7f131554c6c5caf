//! R-posterior evaluation: the unnormalized log-posterior, the grid and
//! importance-sampling engines, the R-marginal density and the merging
//! diagnostic.

mod grid;
mod importance;
mod marginal;

use std::io::Write;

use crate::alpha_lik::q_sum;
use crate::error::{contract, Error, Result};
use crate::model::{check_data, check_theta, AlphaConfig, Family};
use crate::prior::Prior;

pub use grid::{auto_lattice, grid_posterior, support_posterior, Lattice};
pub use importance::{importance_sample, importance_sample_with_retry, ProposalSpec, MIN_ESS, RETRY_INFLATION};
pub use marginal::{default_theta_grid, merging_statistic, r_marginal_logdensity, RMarginal};

/// How a [`WeightedPosterior`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorSource {
    ImportanceSampling,
    GridQuadrature,
}

/// A self-normalized weighted sample of parameter vectors standing in for
/// the R-posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPosterior {
    dim: usize,
    points: Vec<f64>,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    ess: f64,
    source: PosteriorSource,
}

impl WeightedPosterior {
    /// Normalize unnormalized log-weights for `points` (row-major, `dim`
    /// coordinates per point). Entries of `-inf` get zero weight.
    pub fn from_log_weights(
        dim: usize,
        points: Vec<f64>,
        mut log_weights: Vec<f64>,
        source: PosteriorSource,
    ) -> Result<Self> {
        if dim == 0 || points.len() != dim * log_weights.len() || log_weights.is_empty() {
            return Err(contract("points and log-weights have inconsistent sizes"));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::Numeric("log-weights contain NaN or +inf".into()));
        }
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::AllWeightsZero);
        }
        let mut weights: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let log_total = total.ln();
        for (w, lw) in weights.iter_mut().zip(log_weights.iter_mut()) {
            *w /= total;
            *lw = *lw - max - log_total;
        }
        let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
        let ess = (1.0 / sum_sq).clamp(1.0, weights.len() as f64);
        Ok(Self { dim, points, log_weights, weights, ess, source })
    }

    /// A posterior concentrated on a single parameter value.
    pub fn point_mass(theta: &[f64]) -> Self {
        Self {
            dim: theta.len(),
            points: theta.to_vec(),
            log_weights: vec![0.0],
            weights: vec![1.0],
            ess: 1.0,
            source: PosteriorSource::GridQuadrature,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Normalized weights (sum to one).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Normalized log-weights (log-sum-exp is zero).
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Effective sample size `1 / Σ w_j²`.
    pub fn ess(&self) -> f64 {
        self.ess
    }

    pub fn source(&self) -> PosteriorSource {
        self.source
    }

    /// True when an importance sample has fewer than [`MIN_ESS`] effective draws.
    pub fn is_degenerate(&self) -> bool {
        self.source == PosteriorSource::ImportanceSampling && self.ess < MIN_ESS
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (p, w) in self.points().zip(&self.weights) {
            for (mk, pk) in m.iter_mut().zip(p) {
                *mk += w * pk;
            }
        }
        m
    }

    /// Posterior covariance, row-major `dim × dim`.
    pub fn covariance(&self) -> Vec<f64> {
        let m = self.mean();
        let d = self.dim;
        let mut c = vec![0.0; d * d];
        for (p, w) in self.points().zip(&self.weights) {
            for r in 0..d {
                for s in 0..d {
                    c[r * d + s] += w * (p[r] - m[r]) * (p[s] - m[s]);
                }
            }
        }
        c
    }

    /// Self-normalized importance-sampling standard error of `Σ w_j h(θ_j)`
    /// for a scalar `h` (delta method): `sqrt(Σ w_j² (h_j − μ)²)`.
    pub fn standard_error<H: Fn(&[f64]) -> f64>(&self, h: H) -> f64 {
        let vals: Vec<f64> = self.points().map(&h).collect();
        let mu: f64 = vals.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        vals.iter()
            .zip(&self.weights)
            .map(|(v, w)| (w * (v - mu)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Posterior probability of the set `{θ : member(θ)}`.
    pub fn probability<P: Fn(&[f64]) -> bool>(&self, member: P) -> f64 {
        self.points()
            .zip(&self.weights)
            .filter(|(p, _)| member(p))
            .map(|(_, w)| *w)
            .sum::<f64>()
            .min(1.0)
    }

    /// Write `theta_1..theta_p,weight` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|k| format!("theta_{k}")).collect();
        writeln!(out, "{},weight", header.join(","))?;
        for (p, w) in self.points().zip(&self.weights) {
            let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{},{}", row.join(","), w)?;
        }
        Ok(())
    }
}

/// `Σ_j w_j h(θ_j)` for a vector-valued `h`.
pub fn posterior_expectation<H>(wp: &WeightedPosterior, h: H) -> Result<Vec<f64>>
where
    H: Fn(&[f64]) -> Vec<f64>,
{
    let mut acc: Option<Vec<f64>> = None;
    for (p, w) in wp.points().zip(wp.weights()) {
        let v = h(p);
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("h is not finite at θ = {p:?}")));
        }
        let a = acc.get_or_insert_with(|| vec![0.0; v.len()]);
        if a.len() != v.len() {
            return Err(contract("h returned vectors of different lengths"));
        }
        for (ak, vk) in a.iter_mut().zip(&v) {
            *ak += w * vk;
        }
    }
    acc.ok_or_else(|| contract("empty posterior"))
}

/// Unvalidated `q_n(x|θ) + log π(θ)`.
pub(crate) fn log_target<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    data: &[f64],
    theta: &[f64],
    alpha: AlphaConfig,
) -> f64 {
    let lp = prior.log_prior(theta);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    if family.check_params(theta).is_err() {
        return f64::NEG_INFINITY;
    }
    q_sum(family, data, theta, alpha) + lp
}

/// `q_n(x|θ) + log π(θ)`, `-inf` where the prior has no mass.
pub fn log_unnorm_posterior<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    data: &[f64],
    theta: &[f64],
    alpha: AlphaConfig,
) -> Result<f64> {
    check_theta(family, theta)?;
    check_data(family, data)?;
    let v = log_target(family, prior, data, theta, alpha);
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::Numeric(format!("log posterior is {v} at θ = {theta:?}")));
    }
    Ok(v)
}
