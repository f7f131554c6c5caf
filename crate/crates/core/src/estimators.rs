//! Robust Bayes point and predictive-density estimators computed from a
//! [`WeightedPosterior`].
//!
//! Predictive densities are evaluated on a caller-supplied sorted grid of
//! future-observation values. For non-homogeneous families the `row`
//! argument of the `*_row` variants selects the design row; the plain
//! versions use row 0.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{contract, Error, Result};
use crate::model::{check_data, check_row, check_theta, AlphaConfig, Family};
use crate::numeric::{is_sorted, trapezoid, uniform_step, weighted_lower_median};
use crate::posterior::{log_target, WeightedPosterior};
use crate::prior::Prior;

/// Largest admissible endpoint-to-peak ratio when normalizing the HRPDE.
pub const HRPDE_ENDPOINT_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Erpde,
    Arpde,
    Hrpde,
    Mrpde,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Erpde => "ERPDE",
            EstimatorKind::Arpde => "ARPDE",
            EstimatorKind::Hrpde => "HRPDE",
            EstimatorKind::Mrpde => "MRPDE",
        })
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "erpde" => Ok(EstimatorKind::Erpde),
            "arpde" => Ok(EstimatorKind::Arpde),
            "hrpde" => Ok(EstimatorKind::Hrpde),
            "mrpde" => Ok(EstimatorKind::Mrpde),
            other => Err(Error::Parse(format!("unknown estimator '{other}'"))),
        }
    }
}

/// A predictive density evaluated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub z_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: EstimatorKind,
    /// Trapezoid integral of `values` over `z_grid`.
    pub integral: f64,
}

impl DensityEstimate {
    fn new(z_grid: Vec<f64>, values: Vec<f64>, kind: EstimatorKind) -> Self {
        let integral = trapezoid(&z_grid, &values);
        Self { z_grid, values, kind, integral }
    }

    /// Write `z,value,kind,alpha` rows.
    pub fn write_csv<W: Write>(&self, mut out: W, alpha: f64) -> Result<()> {
        writeln!(out, "z,value,kind,alpha")?;
        for (z, v) in self.z_grid.iter().zip(&self.values) {
            writeln!(out, "{z},{v},{},{alpha}", self.kind)?;
        }
        Ok(())
    }
}

fn check_grid(z_grid: &[f64]) -> Result<()> {
    if z_grid.is_empty() || !is_sorted(z_grid) || z_grid.iter().any(|z| !z.is_finite()) {
        return Err(contract("z grid must be non-empty, finite and sorted"));
    }
    Ok(())
}

/// Adds `weight · N(z; mean, sd²)` to `out` on the uniform grid
/// `z0 + h·k`, walking outward from the mode with a multiplicative
/// recurrence (exactly re-seeded every 64 steps) instead of one `exp` per
/// point.
fn add_normal_uniform(mean: f64, sd: f64, weight: f64, z0: f64, h: f64, out: &mut [f64]) {
    const BLOCK: usize = 64;
    const TINY: f64 = 1e-300;
    let k = out.len();
    let norm = weight / (sd * (2.0 * PI).sqrt());
    let d = h / sd;
    let decay = (-d * d).exp();
    let c = ((mean - z0) / h).round();
    let c = if c <= 0.0 { 0 } else if c >= (k - 1) as f64 { k - 1 } else { c as usize };

    let mut i = c;
    'forward: loop {
        let u = (z0 + h * i as f64 - mean) / sd;
        let mut g = (-0.5 * u * u).exp();
        let mut r = (-u * d - 0.5 * d * d).exp();
        for _ in 0..BLOCK {
            if g < TINY {
                break 'forward;
            }
            out[i] += norm * g;
            i += 1;
            if i == k {
                break 'forward;
            }
            g *= r;
            r *= decay;
        }
    }
    if c == 0 {
        return;
    }
    let mut i = c - 1;
    'backward: loop {
        let u = (z0 + h * i as f64 - mean) / sd;
        let mut g = (-0.5 * u * u).exp();
        let mut r = (u * d - 0.5 * d * d).exp();
        for _ in 0..BLOCK {
            if g < TINY {
                break 'backward;
            }
            out[i] += norm * g;
            if i == 0 {
                break 'backward;
            }
            i -= 1;
            g *= r;
            r *= decay;
        }
    }
}

/// Adds `weight · f_θ(z)^power` for `power ∈ {1, 1/2}` to `out`.
fn accumulate<F: Family + ?Sized>(
    family: &F,
    theta: &[f64],
    row: usize,
    weight: f64,
    power: f64,
    z_grid: &[f64],
    step: Option<f64>,
    out: &mut [f64],
) {
    if let (Some(h), Some((m, s))) = (step, family.normal_moments(theta, row)) {
        if power == 1.0 {
            add_normal_uniform(m, s, weight, z_grid[0], h, out);
            return;
        }
        if power == 0.5 {
            // sqrt of N(m, s²) is a scaled N(m, 2s²)
            let s2 = std::f64::consts::SQRT_2 * s;
            let scale = (1.0 / (s * (2.0 * PI).sqrt())).sqrt() * s2 * (2.0 * PI).sqrt();
            add_normal_uniform(m, s2, weight * scale, z_grid[0], h, out);
            return;
        }
    }
    for (o, z) in out.iter_mut().zip(z_grid) {
        *o += weight * (power * family.log_density(theta, *z, row)).exp();
    }
}

fn weighted_mixture<F: Family + ?Sized>(
    family: &F,
    wp: &WeightedPosterior,
    z_grid: &[f64],
    row: usize,
    power: f64,
) -> Vec<f64> {
    let step = uniform_step(z_grid);
    let mut out = vec![0.0; z_grid.len()];
    for (theta, w) in wp.points().zip(wp.weights()) {
        if *w > 0.0 {
            accumulate(family, theta, row, *w, power, z_grid, step, &mut out);
        }
    }
    out
}

fn check_posterior<F: Family + ?Sized>(family: &F, wp: &WeightedPosterior, z_grid: &[f64], row: usize) -> Result<()> {
    check_grid(z_grid)?;
    check_row(family, row)?;
    if wp.dim() != family.param_dim() {
        return Err(contract("posterior and family disagree on the parameter dimension"));
    }
    Ok(())
}

/// Expected R-posterior estimator: the posterior mean of `θ`.
pub fn erpe(wp: &WeightedPosterior) -> Vec<f64> {
    wp.mean()
}

/// Expected R-posterior predictive density `Σ_j w_j f_{θ_j}(z)`.
pub fn erpde<F: Family + ?Sized>(family: &F, wp: &WeightedPosterior, z_grid: &[f64]) -> Result<DensityEstimate> {
    erpde_row(family, wp, z_grid, 0)
}

pub fn erpde_row<F: Family + ?Sized>(
    family: &F,
    wp: &WeightedPosterior,
    z_grid: &[f64],
    row: usize,
) -> Result<DensityEstimate> {
    check_posterior(family, wp, z_grid, row)?;
    let values = weighted_mixture(family, wp, z_grid, row, 1.0);
    Ok(DensityEstimate::new(z_grid.to_vec(), values, EstimatorKind::Erpde))
}

/// Pointwise lower weighted median of `f_θ(z)` under the posterior weights.
/// Not renormalized; see [`DensityEstimate::integral`].
pub fn arpde<F: Family + ?Sized>(family: &F, wp: &WeightedPosterior, z_grid: &[f64]) -> Result<DensityEstimate> {
    arpde_row(family, wp, z_grid, 0)
}

pub fn arpde_row<F: Family + ?Sized>(
    family: &F,
    wp: &WeightedPosterior,
    z_grid: &[f64],
    row: usize,
) -> Result<DensityEstimate> {
    check_posterior(family, wp, z_grid, row)?;
    let thetas: Vec<&[f64]> = wp.points().collect();
    let values: Vec<f64> = z_grid
        .par_iter()
        .map(|z| {
            let vals: Vec<f64> = thetas.iter().map(|t| family.log_density(t, *z, row).exp()).collect();
            weighted_lower_median(&vals, wp.weights()).unwrap_or(0.0)
        })
        .collect();
    Ok(DensityEstimate::new(z_grid.to_vec(), values, EstimatorKind::Arpde))
}

/// `(Σ_j w_j √f_{θ_j}(z))²` without normalization.
pub fn hrpde_unnormalized<F: Family + ?Sized>(
    family: &F,
    wp: &WeightedPosterior,
    z_grid: &[f64],
    row: usize,
) -> Result<Vec<f64>> {
    check_posterior(family, wp, z_grid, row)?;
    let mut v = weighted_mixture(family, wp, z_grid, row, 0.5);
    v.iter_mut().for_each(|x| *x *= *x);
    Ok(v)
}

/// Hellinger R-posterior predictive density, normalized to integrate to one
/// over `z_grid`.
pub fn hrpde<F: Family + ?Sized>(family: &F, wp: &WeightedPosterior, z_grid: &[f64]) -> Result<DensityEstimate> {
    hrpde_row(family, wp, z_grid, 0)
}

pub fn hrpde_row<F: Family + ?Sized>(
    family: &F,
    wp: &WeightedPosterior,
    z_grid: &[f64],
    row: usize,
) -> Result<DensityEstimate> {
    let raw = hrpde_unnormalized(family, wp, z_grid, row)?;
    if z_grid.len() < 2 {
        return Err(contract("HRPDE normalization needs at least two grid points"));
    }
    let total = trapezoid(z_grid, &raw);
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::NormalizerVanished);
    }
    let peak = raw.iter().copied().fold(0.0, f64::max);
    let edge = raw[0].max(raw[raw.len() - 1]);
    if edge > HRPDE_ENDPOINT_RATIO * peak {
        return Err(Error::MassEscapesGrid { ratio: edge / peak, limit: HRPDE_ENDPOINT_RATIO });
    }
    let values = raw.iter().map(|v| v / total).collect();
    Ok(DensityEstimate::new(z_grid.to_vec(), values, EstimatorKind::Hrpde))
}

/// Model density at a (approximate) maximum R-posterior estimate.
pub fn mrpde<F: Family + ?Sized>(family: &F, theta_hat: &[f64], z_grid: &[f64]) -> Result<DensityEstimate> {
    mrpde_row(family, theta_hat, z_grid, 0)
}

pub fn mrpde_row<F: Family + ?Sized>(
    family: &F,
    theta_hat: &[f64],
    z_grid: &[f64],
    row: usize,
) -> Result<DensityEstimate> {
    check_theta(family, theta_hat)?;
    check_grid(z_grid)?;
    check_row(family, row)?;
    let values = z_grid.iter().map(|z| family.log_density(theta_hat, *z, row).exp()).collect();
    Ok(DensityEstimate::new(z_grid.to_vec(), values, EstimatorKind::Mrpde))
}

/// Approximate maximum R-posterior estimator over a discrete prior.
///
/// Returns, in support order, the atoms whose modified posterior score
/// `π̃_n(θ) q̃_n(x_n|θ)` exceeds `sup · e^{−n δ_n}`. The score equals
/// `exp(q_n(x_n|θ)) π(θ) / M_n`; the constant `M_n` does not affect the set,
/// so the comparison is done on `q_n + log π`. With `δ_n = 0` the exact
/// argmax set (all maximizers) is returned.
pub fn amrpe_discrete<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    data: &[f64],
    alpha: AlphaConfig,
    delta_n: f64,
) -> Result<Vec<Vec<f64>>> {
    check_data(family, data)?;
    let support = match prior {
        Prior::Discrete { support } if !support.is_empty() => support,
        Prior::Discrete { .. } => return Err(contract("discrete prior has an empty support")),
        _ => return Err(contract("amrpe_discrete needs a discrete prior")),
    };
    if !(delta_n.is_finite() && delta_n >= 0.0) {
        return Err(contract(format!("delta_n must be finite and >= 0, got {delta_n}")));
    }
    let mut scores = Vec::with_capacity(support.len());
    for s in support {
        check_theta(family, &s.theta)?;
        let v = log_target(family, prior, data, &s.theta, alpha);
        if v.is_nan() {
            return Err(Error::Numeric(format!("score is NaN at θ = {:?}", s.theta)));
        }
        scores.push(v);
    }
    Ok(select_near_max(&scores, data.len() as f64 * delta_n)
        .into_iter()
        .map(|k| support[k].theta.clone())
        .collect())
}

/// Indices with `score > max − slack` (or `score == max` up to rounding
/// when `slack == 0`).
pub(crate) fn select_near_max(scores: &[f64], slack: f64) -> Vec<usize> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Vec::new();
    }
    let tie = 1e-12 * max.abs().max(1.0);
    scores
        .iter()
        .enumerate()
        .filter(|(_, s)| if slack == 0.0 { **s >= max - tie } else { **s > max - slack })
        .map(|(k, _)| k)
        .collect()
}
