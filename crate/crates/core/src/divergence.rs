//! Grid-based divergences between one-dimensional densities.
//!
//! Every functional integrates pointwise values with the trapezoid rule on
//! an explicit sorted grid. `p log(p/q)` is taken as 0 where `p = 0`; a
//! point with `p > 0` and `q = 0` makes the KLD `+∞`.

use crate::alpha_lik::{alpha_modified_model_logdensity, DataSpace};
use crate::error::{contract, Result};
use crate::model::{AlphaConfig, Family};
use crate::numeric::{is_sorted, linspace, trapezoid};

/// Points on the default evaluation grid.
pub const DEFAULT_GRID_POINTS: usize = 4001;
/// Half-width of the default evaluation grid, in standard deviations.
pub const DEFAULT_GRID_HALF_WIDTH: f64 = 10.0;

/// `mean ± 10 sd` with 4001 points.
pub fn default_grid(mean: f64, sd: f64) -> Vec<f64> {
    linspace(mean - DEFAULT_GRID_HALF_WIDTH * sd, mean + DEFAULT_GRID_HALF_WIDTH * sd, DEFAULT_GRID_POINTS)
}

/// A density tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    z_grid: Vec<f64>,
    values: Vec<f64>,
    unnormalized: bool,
}

impl GridDensity {
    /// Checks sortedness, non-negativity and, unless `unnormalized`, that the
    /// trapezoid integral lies in `[0.99, 1.01]`.
    pub fn new(z_grid: Vec<f64>, values: Vec<f64>, unnormalized: bool) -> Result<Self> {
        check_pair(&z_grid, &values, &values)?;
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(contract("density values must be non-negative"));
        }
        if !unnormalized {
            let mass = trapezoid(&z_grid, &values);
            if !(0.99..=1.01).contains(&mass) {
                return Err(contract(format!("density integrates to {mass}, expected about 1")));
            }
        }
        Ok(Self { z_grid, values, unnormalized })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(z_grid: Vec<f64>, f: F, unnormalized: bool) -> Result<Self> {
        let values = z_grid.iter().map(|z| f(*z)).collect();
        Self::new(z_grid, values, unnormalized)
    }

    pub fn z_grid(&self) -> &[f64] {
        &self.z_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_unnormalized(&self) -> bool {
        self.unnormalized
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.z_grid, &self.values)
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.z_grid != other.z_grid {
            return Err(contract("densities live on different grids"));
        }
        Ok(())
    }

    pub fn kld(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        kld(&self.values, &other.values, &self.z_grid)
    }

    pub fn hellinger_sq(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        hellinger_sq(&self.values, &other.values, &self.z_grid)
    }

    pub fn l1(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        l1(&self.values, &other.values, &self.z_grid)
    }
}

fn check_pair(z_grid: &[f64], p: &[f64], q: &[f64]) -> Result<()> {
    if z_grid.len() < 2 || !is_sorted(z_grid) || z_grid.iter().any(|z| !z.is_finite()) {
        return Err(contract("grid must be sorted, finite and have at least two points"));
    }
    if p.len() != z_grid.len() || q.len() != z_grid.len() {
        return Err(contract(format!(
            "length mismatch: grid {}, p {}, q {}",
            z_grid.len(),
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// `∫ p log(p/q)` on the grid.
pub fn kld(p: &[f64], q: &[f64], z_grid: &[f64]) -> Result<f64> {
    check_pair(z_grid, p, q)?;
    let mut integrand = Vec::with_capacity(p.len());
    for (a, b) in p.iter().zip(q) {
        if *a <= 0.0 {
            integrand.push(0.0);
        } else if *b <= 0.0 {
            return Ok(f64::INFINITY);
        } else {
            integrand.push(a * (a / b).ln());
        }
    }
    Ok(trapezoid(z_grid, &integrand))
}

/// Same as [`kld`] with both densities given as functions.
pub fn kld_fn<P: Fn(f64) -> f64, Q: Fn(f64) -> f64>(p: P, q: Q, z_grid: &[f64]) -> Result<f64> {
    let pv: Vec<f64> = z_grid.iter().map(|z| p(*z)).collect();
    let qv: Vec<f64> = z_grid.iter().map(|z| q(*z)).collect();
    kld(&pv, &qv, z_grid)
}

/// `KLD(N(mu0, s0²) ‖ N(mu1, s1²))` in closed form.
pub fn kld_normal_closed(mu0: f64, s0: f64, mu1: f64, s1: f64) -> Result<f64> {
    if !(s0 > 0.0 && s1 > 0.0) {
        return Err(contract("standard deviations must be positive"));
    }
    Ok((s1 / s0).ln() + (s0 * s0 + (mu0 - mu1).powi(2)) / (2.0 * s1 * s1) - 0.5)
}

/// `∫ (√p − √q)²`.
pub fn hellinger_sq(p: &[f64], q: &[f64], z_grid: &[f64]) -> Result<f64> {
    check_pair(z_grid, p, q)?;
    let v: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a.max(0.0).sqrt() - b.max(0.0).sqrt()).powi(2)).collect();
    Ok(trapezoid(z_grid, &v))
}

/// `∫ |p − q|`.
pub fn l1(p: &[f64], q: &[f64], z_grid: &[f64]) -> Result<f64> {
    check_pair(z_grid, p, q)?;
    let v: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a - b).abs()).collect();
    Ok(trapezoid(z_grid, &v))
}

/// `Σ_A |P(A) − Q(A)|` over the cells of a partition.
pub fn t_variation(p_masses: &[f64], q_masses: &[f64]) -> Result<f64> {
    if p_masses.len() != q_masses.len() {
        return Err(contract(format!(
            "partition mass vectors differ in length ({} vs {})",
            p_masses.len(),
            q_masses.len()
        )));
    }
    Ok(p_masses.iter().zip(q_masses).map(|(a, b)| (a - b).abs()).sum())
}

/// `KLD(g, q̃(·|θ))` for a single observation, where `q̃` is the
/// alpha-modified model normalized over the grid range. At `α = 0` this is
/// `KLD(g, f_θ)` up to the model mass outside the grid.
pub fn d_alpha_modified<F: Family + ?Sized, G: Fn(f64) -> f64>(
    family: &F,
    theta: &[f64],
    alpha: AlphaConfig,
    true_density: G,
    z_grid: &[f64],
) -> Result<f64> {
    if family.rows().is_some() {
        return Err(contract("d_alpha_modified needs a homogeneous one-dimensional family"));
    }
    if z_grid.len() < 2 || !is_sorted(z_grid) {
        return Err(contract("grid must be sorted with at least two points"));
    }
    let space = DataSpace::interval(z_grid[0], z_grid[z_grid.len() - 1])?;
    let mut q = Vec::with_capacity(z_grid.len());
    for z in z_grid {
        q.push(alpha_modified_model_logdensity(family, &[*z], theta, alpha, space)?.exp());
    }
    let g: Vec<f64> = z_grid.iter().map(|z| true_density(*z)).collect();
    kld(&g, &q, z_grid)
}
