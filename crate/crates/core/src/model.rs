//! Parametric model families and the alpha tuning parameter.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{contract, Result};
use crate::rng::SimRng;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Tuning parameter of the alpha-likelihood. `alpha = 0` selects the exact
/// log-likelihood branch and is never approached numerically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaConfig {
    alpha: f64,
    zero_branch: bool,
}

impl AlphaConfig {
    pub const ZERO: AlphaConfig = AlphaConfig { alpha: 0.0, zero_branch: true };

    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(contract(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        Ok(Self { alpha, zero_branch: alpha == 0.0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_zero(&self) -> bool {
        self.zero_branch
    }
}

/// `∫ φ_σ^{1+α}` for a normal density with scale `sigma`; independent of the mean.
pub fn normal_power_integral(sigma: f64, alpha: f64) -> f64 {
    (2.0 * PI * sigma * sigma).powf(-0.5 * alpha) / (1.0 + alpha).sqrt()
}

pub(crate) fn normal_log_density(x: f64, mean: f64, sd: f64) -> f64 {
    let u = (x - mean) / sd;
    -0.5 * u * u - sd.ln() - LN_SQRT_2PI
}

/// A parametric family of densities on the real line, possibly with
/// observation-specific densities `f_{i,θ}` (independent non-homogeneous data).
///
/// Implementors provide unchecked evaluations; the free functions in this
/// module validate arguments first.
pub trait Family: Send + Sync {
    /// Dimension of the parameter vector.
    fn param_dim(&self) -> usize;

    /// Number of observation slots for non-homogeneous families, `None` when
    /// every observation shares the same density.
    fn rows(&self) -> Option<usize>;

    /// `log f_{row,θ}(x)`.
    fn log_density(&self, theta: &[f64], x: f64, row: usize) -> f64;

    /// `∫ f_{row,θ}^{1+α}`.
    fn power_integral(&self, theta: &[f64], alpha: f64, row: usize) -> f64;

    /// True when `power_integral` does not depend on the row, which lets the
    /// likelihood loops hoist it.
    fn power_integral_row_invariant(&self) -> bool {
        false
    }

    /// Mean and standard deviation when `f_{row,θ}` is a normal density.
    /// Enables the fast mixture evaluation on uniform grids.
    fn normal_moments(&self, _theta: &[f64], _row: usize) -> Option<(f64, f64)> {
        None
    }

    /// Draw one observation for slot `row`.
    fn draw(&self, theta: &[f64], row: usize, rng: &mut SimRng) -> f64;

    /// Extra parameter validity checks beyond the dimension.
    fn check_params(&self, _theta: &[f64]) -> Result<()> {
        Ok(())
    }
}

/// Normal location model `N(θ, σ²)` with known `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalLocation {
    sigma: f64,
}

impl NormalLocation {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(contract(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Family for NormalLocation {
    fn param_dim(&self) -> usize {
        1
    }

    fn rows(&self) -> Option<usize> {
        None
    }

    fn log_density(&self, theta: &[f64], x: f64, _row: usize) -> f64 {
        normal_log_density(x, theta[0], self.sigma)
    }

    fn power_integral(&self, _theta: &[f64], alpha: f64, _row: usize) -> f64 {
        normal_power_integral(self.sigma, alpha)
    }

    fn power_integral_row_invariant(&self) -> bool {
        true
    }

    fn normal_moments(&self, theta: &[f64], _row: usize) -> Option<(f64, f64)> {
        Some((theta[0], self.sigma))
    }

    fn draw(&self, theta: &[f64], _row: usize, rng: &mut SimRng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        theta[0] + self.sigma * z
    }
}

/// Normal linear regression with a fixed design: observation `i` has density
/// `N(t_iᵀβ, σ²)`. With `sigma_known` the parameter is `β` (length k);
/// otherwise it is `(β, σ)` (length k + 1) and the stored `sigma` is only a
/// sampling default.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalRegression {
    design: DMatrix<f64>,
    sigma: f64,
    sigma_known: bool,
}

impl NormalRegression {
    pub fn new(design: DMatrix<f64>, sigma: f64, sigma_known: bool) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(contract(format!("sigma must be positive, got {sigma}")));
        }
        if design.nrows() == 0 || design.ncols() == 0 {
            return Err(contract("design matrix must be non-empty"));
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(contract("design matrix has non-finite entries"));
        }
        let k = design.ncols();
        let scale = design.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if design.nrows() < k || design.rank(1e-10 * scale) < k {
            return Err(contract("design matrix must have full column rank"));
        }
        Ok(Self { design, sigma, sigma_known })
    }

    /// Build from row-major data with `cols` covariates.
    pub fn from_rows(rows: &[Vec<f64>], sigma: f64, sigma_known: bool) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(contract("design rows have unequal lengths"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), cols, &flat), sigma, sigma_known)
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sigma_known(&self) -> bool {
        self.sigma_known
    }

    pub fn covariates(&self) -> usize {
        self.design.ncols()
    }

    fn mean(&self, beta: &[f64], row: usize) -> f64 {
        (0..self.design.ncols()).map(|c| self.design[(row, c)] * beta[c]).sum()
    }

    fn scale(&self, theta: &[f64]) -> f64 {
        if self.sigma_known {
            self.sigma
        } else {
            theta[self.design.ncols()]
        }
    }
}

impl Family for NormalRegression {
    fn param_dim(&self) -> usize {
        self.design.ncols() + usize::from(!self.sigma_known)
    }

    fn rows(&self) -> Option<usize> {
        Some(self.design.nrows())
    }

    fn log_density(&self, theta: &[f64], x: f64, row: usize) -> f64 {
        let sd = self.scale(theta);
        if sd <= 0.0 {
            return f64::NEG_INFINITY;
        }
        normal_log_density(x, self.mean(theta, row), sd)
    }

    fn power_integral(&self, theta: &[f64], alpha: f64, _row: usize) -> f64 {
        normal_power_integral(self.scale(theta), alpha)
    }

    fn power_integral_row_invariant(&self) -> bool {
        true
    }

    fn normal_moments(&self, theta: &[f64], row: usize) -> Option<(f64, f64)> {
        Some((self.mean(theta, row), self.scale(theta)))
    }

    fn draw(&self, theta: &[f64], row: usize, rng: &mut SimRng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean(theta, row) + self.scale(theta) * z
    }

    fn check_params(&self, theta: &[f64]) -> Result<()> {
        if !self.sigma_known {
            let s = theta[self.design.ncols()];
            if !(s.is_finite() && s > 0.0) {
                return Err(contract(format!("regression scale must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// The built-in families behind one type (used by the CLI and the C ABI).
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFamily {
    NormalLocation(NormalLocation),
    NormalLinearRegression(NormalRegression),
}

impl ModelFamily {
    pub fn normal_location(sigma: f64) -> Result<Self> {
        NormalLocation::new(sigma).map(Self::NormalLocation)
    }

    pub fn normal_regression(design: DMatrix<f64>, sigma: f64, sigma_known: bool) -> Result<Self> {
        NormalRegression::new(design, sigma, sigma_known).map(Self::NormalLinearRegression)
    }

    fn inner(&self) -> &dyn Family {
        match self {
            Self::NormalLocation(f) => f,
            Self::NormalLinearRegression(f) => f,
        }
    }
}

impl Family for ModelFamily {
    fn param_dim(&self) -> usize {
        self.inner().param_dim()
    }
    fn rows(&self) -> Option<usize> {
        self.inner().rows()
    }
    fn log_density(&self, theta: &[f64], x: f64, row: usize) -> f64 {
        self.inner().log_density(theta, x, row)
    }
    fn power_integral(&self, theta: &[f64], alpha: f64, row: usize) -> f64 {
        self.inner().power_integral(theta, alpha, row)
    }
    fn power_integral_row_invariant(&self) -> bool {
        self.inner().power_integral_row_invariant()
    }
    fn normal_moments(&self, theta: &[f64], row: usize) -> Option<(f64, f64)> {
        self.inner().normal_moments(theta, row)
    }
    fn draw(&self, theta: &[f64], row: usize, rng: &mut SimRng) -> f64 {
        self.inner().draw(theta, row, rng)
    }
    fn check_params(&self, theta: &[f64]) -> Result<()> {
        self.inner().check_params(theta)
    }
}

/// Validate `theta` (and `row`, for non-homogeneous families).
pub fn check_theta<F: Family + ?Sized>(family: &F, theta: &[f64]) -> Result<()> {
    if theta.len() != family.param_dim() {
        return Err(contract(format!(
            "parameter has dimension {}, family expects {}",
            theta.len(),
            family.param_dim()
        )));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(contract("parameter has non-finite entries"));
    }
    family.check_params(theta)
}

pub(crate) fn check_row<F: Family + ?Sized>(family: &F, row: usize) -> Result<()> {
    match family.rows() {
        Some(rows) if row >= rows => {
            Err(contract(format!("observation index {row} out of range ({rows} design rows)")))
        }
        _ => Ok(()),
    }
}

/// Checks that a data vector fits the family: non-empty, finite and, for
/// non-homogeneous families, one value per design row.
pub(crate) fn check_data<F: Family + ?Sized>(family: &F, data: &[f64]) -> Result<()> {
    if data.is_empty() {
        return Err(contract("data must be non-empty"));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(contract("data has non-finite entries"));
    }
    if let Some(rows) = family.rows() {
        if rows != data.len() {
            return Err(contract(format!(
                "data length {} does not match {rows} design rows",
                data.len()
            )));
        }
    }
    Ok(())
}

/// `f_{i,θ}(x)`.
pub fn density<F: Family + ?Sized>(family: &F, theta: &[f64], x: f64, i: usize) -> Result<f64> {
    check_theta(family, theta)?;
    check_row(family, i)?;
    Ok(family.log_density(theta, x, i).exp())
}

/// `∫ f_{i,θ}^{1+α}`; equals one at `α = 0`.
pub fn power_integral<F: Family + ?Sized>(
    family: &F,
    theta: &[f64],
    alpha: AlphaConfig,
    i: usize,
) -> Result<f64> {
    check_theta(family, theta)?;
    check_row(family, i)?;
    if alpha.is_zero() {
        return Ok(1.0);
    }
    Ok(family.power_integral(theta, alpha.alpha(), i))
}

/// `n` independent draws at `θ`. For non-homogeneous families draw `i` uses
/// row `i`, so `n` must equal the number of rows.
pub fn sample<F: Family + ?Sized>(
    family: &F,
    theta: &[f64],
    n: usize,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    check_theta(family, theta)?;
    if n == 0 {
        return Err(contract("sample size must be at least 1"));
    }
    if let Some(rows) = family.rows() {
        if rows != n {
            return Err(contract(format!("sample size {n} must equal the {rows} design rows")));
        }
    }
    Ok((0..n).map(|i| family.draw(theta, i, rng)).collect())
}
