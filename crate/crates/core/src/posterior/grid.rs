use rayon::prelude::*;

use super::importance::cholesky_lower;
use super::{log_target, PosteriorSource, WeightedPosterior};
use crate::error::{contract, Error, Result};
use crate::model::{check_data, AlphaConfig, Family};
use crate::numeric::{linspace, trapezoid_weights};
use crate::prior::Prior;

/// Largest admissible ratio between the posterior density on the lattice
/// boundary and its maximum.
pub const BOUNDARY_RATIO: f64 = 1e-12;

/// Log-density drop (from the maximum) that delimits the retained region
/// when a lattice is sized automatically; `e^{-30} < BOUNDARY_RATIO`.
const REGION_DROP: f64 = 30.0;

/// A product lattice `θ = center + basis · u`, with `u` ranging over the
/// per-axis `ticks`. Trapezoid weights along each axis times `|det basis|`
/// give the cell volumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    center: Vec<f64>,
    basis: Vec<f64>,
    ticks: Vec<Vec<f64>>,
}

impl Lattice {
    pub fn new(center: Vec<f64>, basis: Vec<f64>, ticks: Vec<Vec<f64>>) -> Result<Self> {
        let p = center.len();
        if p == 0 || basis.len() != p * p || ticks.len() != p {
            return Err(contract("lattice center, basis and ticks disagree in dimension"));
        }
        for t in &ticks {
            if t.len() < 2 || t.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(contract("lattice ticks must be strictly increasing with at least 2 points"));
            }
        }
        if determinant(&basis, p).abs() <= 0.0 {
            return Err(contract("lattice basis is singular"));
        }
        Ok(Self { center, basis, ticks })
    }

    /// Uniform one-dimensional grid of `points` over `[lo, hi]`.
    pub fn uniform_1d(lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::new(vec![0.0], vec![1.0], vec![linspace(lo, hi, points)])
    }

    /// Axis-aligned product grid with `points` per axis.
    pub fn axis_aligned(ranges: &[(f64, f64)], points: usize) -> Result<Self> {
        let p = ranges.len();
        let mut basis = vec![0.0; p * p];
        for k in 0..p {
            basis[k * p + k] = 1.0;
        }
        let ticks = ranges.iter().map(|(lo, hi)| linspace(*lo, *hi, points)).collect();
        Self::new(vec![0.0; p], basis, ticks)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn len(&self) -> usize {
        self.ticks.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn multi_index(&self, mut j: usize, idx: &mut [usize]) {
        for k in (0..self.dim()).rev() {
            let m = self.ticks[k].len();
            idx[k] = j % m;
            j /= m;
        }
    }

    fn point_at(&self, idx: &[usize], out: &mut [f64]) {
        let p = self.dim();
        for r in 0..p {
            out[r] = self.center[r]
                + (0..p).map(|c| self.basis[r * p + c] * self.ticks[c][idx[c]]).sum::<f64>();
        }
    }

    /// All lattice points, row-major.
    pub fn points(&self) -> Vec<f64> {
        let p = self.dim();
        let mut out = vec![0.0; self.len() * p];
        let mut idx = vec![0; p];
        for j in 0..self.len() {
            self.multi_index(j, &mut idx);
            self.point_at(&idx, &mut out[j * p..(j + 1) * p]);
        }
        out
    }

    fn log_cell_volumes(&self) -> Vec<f64> {
        let p = self.dim();
        let logdet = determinant(&self.basis, p).abs().ln();
        let w: Vec<Vec<f64>> = self.ticks.iter().map(|t| trapezoid_weights(t)).collect();
        let mut idx = vec![0; p];
        (0..self.len())
            .map(|j| {
                self.multi_index(j, &mut idx);
                logdet + (0..p).map(|k| w[k][idx[k]].ln()).sum::<f64>()
            })
            .collect()
    }

    fn boundary_mask(&self) -> Vec<bool> {
        let p = self.dim();
        let mut idx = vec![0; p];
        (0..self.len())
            .map(|j| {
                self.multi_index(j, &mut idx);
                (0..p).any(|k| idx[k] == 0 || idx[k] + 1 == self.ticks[k].len())
            })
            .collect()
    }
}

fn determinant(m: &[f64], p: usize) -> f64 {
    nalgebra::DMatrix::from_row_slice(p, p, m).determinant()
}

fn evaluate<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    data: &[f64],
    alpha: AlphaConfig,
    points: &[f64],
    p: usize,
) -> Result<Vec<f64>> {
    let lp: Vec<f64> = points
        .par_chunks(p)
        .map(|theta| log_target(family, prior, data, theta, alpha))
        .collect();
    if let Some(v) = lp.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
        return Err(Error::Numeric(format!("log posterior evaluated to {v} on the lattice")));
    }
    Ok(lp)
}

fn check_normalizable(prior: &Prior, alpha: AlphaConfig) -> Result<()> {
    if !prior.is_proper() && !alpha.is_zero() {
        return Err(Error::NonNormalizable(
            "improper prior with alpha > 0: exp(q_n) tends to a positive constant as |θ| grows".into(),
        ));
    }
    Ok(())
}

/// Exact-quadrature posterior on a lattice: weights proportional to
/// `exp(log posterior) × cell volume`.
pub fn grid_posterior<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    data: &[f64],
    alpha: AlphaConfig,
    lattice: &Lattice,
) -> Result<WeightedPosterior> {
    check_data(family, data)?;
    prior.validate()?;
    if prior.support().is_some() {
        return Err(contract("discrete priors are enumerated with support_posterior"));
    }
    let p = family.param_dim();
    if lattice.dim() != p {
        return Err(contract(format!("lattice dimension {} but parameter dimension {p}", lattice.dim())));
    }
    check_normalizable(prior, alpha)?;
    let points = lattice.points();
    let lp = evaluate(family, prior, data, alpha, &points, p)?;
    let max = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::NonNormalizable("posterior vanishes on the whole lattice".into()));
    }
    let boundary_max = lp
        .iter()
        .zip(lattice.boundary_mask())
        .filter(|(_, b)| *b)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let ratio = (boundary_max - max).exp();
    if ratio >= BOUNDARY_RATIO {
        return Err(Error::MassEscapesGrid { ratio, limit: BOUNDARY_RATIO });
    }
    let log_w: Vec<f64> = lp.iter().zip(lattice.log_cell_volumes()).map(|(a, b)| a + b).collect();
    WeightedPosterior::from_log_weights(p, points, log_w, PosteriorSource::GridQuadrature)
}

/// Size a lattice for the posterior automatically.
///
/// Starting from a Gaussian guess `(center, covariance)`, a coarse lattice in
/// the whitened coordinates is widened until its boundary is negligible; the
/// final lattice spans the region where the log-posterior is within 30 of its
/// maximum, with `points_per_axis` ticks per axis.
pub fn auto_lattice<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    data: &[f64],
    alpha: AlphaConfig,
    center: &[f64],
    covariance: &[f64],
    points_per_axis: usize,
) -> Result<Lattice> {
    check_data(family, data)?;
    let p = family.param_dim();
    if center.len() != p {
        return Err(contract("lattice center has the wrong dimension"));
    }
    check_normalizable(prior, alpha)?;
    let basis = cholesky_lower(covariance, p)?;
    let coarse_points = match p {
        1 => 801,
        2 => 161,
        _ => 41,
    };
    let mut half = 15.0;
    for _ in 0..8 {
        let ticks = vec![linspace(-half, half, coarse_points); p];
        let coarse = Lattice::new(center.to_vec(), basis.clone(), ticks)?;
        let points = coarse.points();
        let lp = evaluate(family, prior, data, alpha, &points, p)?;
        let max = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            half *= 2.0;
            continue;
        }
        let mask = coarse.boundary_mask();
        let boundary_max = lp
            .iter()
            .zip(&mask)
            .filter(|(_, b)| **b)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        if boundary_max >= max - REGION_DROP - 5.0 {
            half *= 2.0;
            continue;
        }
        let step = 2.0 * half / (coarse_points - 1) as f64;
        let mut lo = vec![f64::INFINITY; p];
        let mut hi = vec![f64::NEG_INFINITY; p];
        let mut idx = vec![0; p];
        for (j, v) in lp.iter().enumerate() {
            if *v >= max - REGION_DROP {
                coarse.multi_index(j, &mut idx);
                for k in 0..p {
                    let u = coarse.ticks[k][idx[k]];
                    lo[k] = lo[k].min(u);
                    hi[k] = hi[k].max(u);
                }
            }
        }
        let ticks = (0..p)
            .map(|k| linspace(lo[k] - 2.0 * step, hi[k] + 2.0 * step, points_per_axis))
            .collect();
        return Lattice::new(center.to_vec(), basis, ticks);
    }
    Err(Error::NonNormalizable("posterior mass does not decay within the search range".into()))
}

/// Posterior over the atoms of a discrete prior (weights are exact).
pub fn support_posterior<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    data: &[f64],
    alpha: AlphaConfig,
) -> Result<WeightedPosterior> {
    check_data(family, data)?;
    prior.validate()?;
    let support = prior.support().ok_or_else(|| contract("support_posterior needs a discrete prior"))?;
    let p = family.param_dim();
    let mut points = Vec::with_capacity(support.len() * p);
    for s in support {
        crate::model::check_theta(family, &s.theta)?;
        points.extend_from_slice(&s.theta);
    }
    let lp = evaluate(family, prior, data, alpha, &points, p)?;
    WeightedPosterior::from_log_weights(p, points, lp, PosteriorSource::GridQuadrature)
}
