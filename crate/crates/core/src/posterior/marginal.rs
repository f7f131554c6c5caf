use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;

use super::log_target;
use crate::alpha_lik::{log_prior_normalizer, prior_theta_range, DataSpace};
use crate::error::{contract, Error, Result};
use crate::model::{check_data, AlphaConfig, Family};
use crate::numeric::{is_sorted, linspace, log_sum_exp, trapezoid_weights};
use crate::prior::Prior;

/// Log R-marginal density `log m_n(x_n) = log ∫ exp(q_n(x_n|θ)) π(θ) dθ − log M_n(χ_n, Θ)`.
///
/// For continuous priors the numerator is integrated with the trapezoid rule
/// on `theta_grid` (one-dimensional parameters) and `M_n` by adaptive
/// quadrature; discrete priors are summed. For repeated evaluation use
/// [`RMarginal`].
pub fn r_marginal_logdensity<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    data: &[f64],
    alpha: AlphaConfig,
    theta_grid: &[f64],
    space: DataSpace,
) -> Result<f64> {
    check_data(family, data)?;
    RMarginal::new(family, prior, alpha, theta_grid, space)?.logdensity(data)
}

/// R-marginal that caches `log M_n` per sample size.
pub struct RMarginal<'a, F: Family + ?Sized> {
    family: &'a F,
    prior: &'a Prior,
    alpha: AlphaConfig,
    space: DataSpace,
    /// Trapezoid nodes and log weights; empty for discrete priors.
    nodes: Vec<f64>,
    log_w: Vec<f64>,
    log_mass: Mutex<HashMap<usize, f64>>,
}

impl<'a, F: Family + ?Sized> RMarginal<'a, F> {
    pub fn new(
        family: &'a F,
        prior: &'a Prior,
        alpha: AlphaConfig,
        theta_grid: &[f64],
        space: DataSpace,
    ) -> Result<Self> {
        prior.validate()?;
        if !prior.is_proper() {
            return Err(Error::MarginalUndefined("M_n(χ_n, Θ) is infinite for an improper prior".into()));
        }
        let (nodes, log_w) = if prior.support().is_some() {
            (Vec::new(), Vec::new())
        } else {
            if family.param_dim() != 1 {
                return Err(contract("continuous R-marginal is implemented for one-dimensional parameters"));
            }
            if theta_grid.len() < 2 || !is_sorted(theta_grid) {
                return Err(contract("theta grid must be sorted with at least two points"));
            }
            let w = trapezoid_weights(theta_grid).iter().map(|w| w.ln()).collect();
            (theta_grid.to_vec(), w)
        };
        Ok(Self { family, prior, alpha, space, nodes, log_w, log_mass: Mutex::new(HashMap::new()) })
    }

    /// `log M_n(χ_n, Θ)`.
    pub fn log_mass(&self, n: usize) -> Result<f64> {
        if let Some(v) = self.log_mass.lock().expect("cache lock").get(&n) {
            return Ok(*v);
        }
        let v = log_prior_normalizer(self.family, self.prior, self.alpha, n, self.space)?;
        if !v.is_finite() {
            return Err(Error::MarginalUndefined(format!("M_n = exp({v})")));
        }
        self.log_mass.lock().expect("cache lock").insert(n, v);
        Ok(v)
    }

    /// `log m_n(x_n)`.
    pub fn logdensity(&self, data: &[f64]) -> Result<f64> {
        check_data(self.family, data)?;
        let terms: Vec<f64> = match self.prior.support() {
            Some(support) => support
                .iter()
                .map(|s| log_target(self.family, self.prior, data, &s.theta, self.alpha))
                .collect(),
            None => self
                .nodes
                .par_iter()
                .zip(&self.log_w)
                .map(|(t, w)| w + log_target(self.family, self.prior, data, &[*t], self.alpha))
                .collect(),
        };
        let log_numer = log_sum_exp(&terms);
        if !log_numer.is_finite() {
            return Err(Error::MarginalUndefined(format!("numerator exp({log_numer})")));
        }
        Ok(log_numer - self.log_mass(data.len())?)
    }
}

/// A one-dimensional θ grid for [`r_marginal_logdensity`]: 2001 points over
/// the prior's effective range merged with 4001 points over the region where
/// the unnormalized posterior is within 40 of its maximum.
pub fn default_theta_grid<F: Family + ?Sized>(
    family: &F,
    prior: &Prior,
    data: &[f64],
    alpha: AlphaConfig,
) -> Result<Vec<f64>> {
    check_data(family, data)?;
    let (lo, hi) = prior_theta_range(prior).ok_or_else(|| contract("default grid needs a 1-D conjugate prior"))?;
    let coarse = linspace(lo, hi, 2001);
    let lp: Vec<f64> = coarse.par_iter().map(|t| log_target(family, prior, data, &[*t], alpha)).collect();
    let max = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let step = coarse[1] - coarse[0];
    let mut region = (f64::INFINITY, f64::NEG_INFINITY);
    for (t, v) in coarse.iter().zip(&lp) {
        if *v >= max - 40.0 {
            region = (region.0.min(*t), region.1.max(*t));
        }
    }
    let mut grid = coarse.clone();
    if region.0.is_finite() {
        let (a, b) = (region.0 - step, region.1 + step);
        grid.retain(|t| *t < a || *t > b);
        grid.extend(linspace(a, b, 4001));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// Per-observation log ratio `(1/n) (log m_n(x_n) − Σ log g(x_i))` between
/// the R-marginal and the true density `g` (given on the log scale).
pub fn merging_statistic<F, G>(
    family: &F,
    prior: &Prior,
    data: &[f64],
    alpha: AlphaConfig,
    true_logdensity: G,
    theta_grid: &[f64],
    space: DataSpace,
) -> Result<f64>
where
    F: Family + ?Sized,
    G: Fn(f64) -> f64,
{
    let log_m = r_marginal_logdensity(family, prior, data, alpha, theta_grid, space)?;
    let log_g: f64 = data.iter().map(|x| true_logdensity(*x)).sum();
    if !log_g.is_finite() {
        return Err(Error::Numeric("true density vanishes on the data".into()));
    }
    Ok((log_m - log_g) / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{normal_log_density, NormalLocation};
    use crate::numeric::integrate;

    /// Closed-form log marginal of the conjugate normal model:
    /// x ~ N(θ0·1, σ²I + τ²11ᵀ), via Sherman-Morrison.
    fn conjugate_log_marginal(data: &[f64], theta0: f64, tau: f64, sigma: f64) -> f64 {
        let n = data.len() as f64;
        let s2 = sigma * sigma;
        let t2 = tau * tau;
        let r: Vec<f64> = data.iter().map(|x| x - theta0).collect();
        let rr: f64 = r.iter().map(|v| v * v).sum();
        let rs: f64 = r.iter().sum();
        let quad = (rr - t2 * rs * rs / (s2 + n * t2)) / s2;
        let logdet = n * s2.ln() + (1.0 + n * t2 / s2).ln();
        -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
    }

    #[test]
    fn zero_alpha_matches_conjugate_marginal() {
        let f = NormalLocation::new(1.0).unwrap();
        let prior = Prior::conjugate(vec![5.0], 3.0).unwrap();
        let data = [4.2, 5.7, 6.1, 3.9, 5.0, 5.5, 4.8];
        let grid = default_theta_grid(&f, &prior, &data, AlphaConfig::ZERO).unwrap();
        let got = r_marginal_logdensity(&f, &prior, &data, AlphaConfig::ZERO, &grid, DataSpace::RealLine).unwrap();
        let expected = conjugate_log_marginal(&data, 5.0, 3.0, 1.0);
        assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn point_mass_prior_gives_zero_statistic() {
        let f = NormalLocation::new(1.0).unwrap();
        let prior = Prior::discrete_from_pairs([(vec![5.0], 1.0)]).unwrap();
        let data = [4.2, 5.7, 6.1];
        let s = merging_statistic(
            &f,
            &prior,
            &data,
            AlphaConfig::ZERO,
            |x| normal_log_density(x, 5.0, 1.0),
            &[],
            DataSpace::RealLine,
        )
        .unwrap();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn improper_prior_has_no_marginal() {
        let f = NormalLocation::new(1.0).unwrap();
        let r = r_marginal_logdensity(&f, &Prior::uniform(), &[1.0], AlphaConfig::ZERO, &[0.0, 1.0], DataSpace::RealLine);
        assert!(matches!(r, Err(Error::MarginalUndefined(_))));
    }

    #[test]
    fn discrete_marginal_matches_hand_sum() {
        let f = NormalLocation::new(1.0).unwrap();
        let space = DataSpace::interval(-10.0, 12.0).unwrap();
        let alpha = AlphaConfig::new(0.5).unwrap();
        let atoms = [(0.0, 0.2), (1.0, 0.5), (3.0, 0.3)];
        let prior = Prior::discrete_from_pairs(atoms.iter().map(|(t, m)| (vec![*t], *m))).unwrap();
        let x = 1.4;
        let c = (2.0 * std::f64::consts::PI).powf(-0.25);
        let zeta = c / 1.5f64.sqrt() / 1.5;
        let q = |t: f64| c * (-0.25 * (x - t) * (x - t)).exp() / 0.5 - zeta - 2.0;
        let qq = |t: f64| {
            integrate(|y| (c * (-0.25 * (y - t) * (y - t)).exp() / 0.5 - zeta - 2.0).exp(), -10.0, 12.0, 64, 0.0, 1e-13)
                .unwrap()
                .value
        };
        let num: f64 = atoms.iter().map(|(t, m)| m * q(*t).exp()).sum();
        let den: f64 = atoms.iter().map(|(t, m)| m * qq(*t)).sum();
        let got = r_marginal_logdensity(&f, &prior, &[x], alpha, &[], space).unwrap();
        assert!((got - (num / den).ln()).abs() < 1e-10);
    }

    #[test]
    fn marginal_integrates_to_one() {
        let f = NormalLocation::new(1.0).unwrap();
        let prior = Prior::conjugate(vec![5.0], 3.0).unwrap();
        let space = DataSpace::interval(-15.0, 25.0).unwrap();
        let alpha = AlphaConfig::new(0.5).unwrap();
        let grid = linspace(5.0 - 36.0, 5.0 + 36.0, 1441);
        let q = integrate(
            |x| r_marginal_logdensity(&f, &prior, &[x], alpha, &grid, space).unwrap().exp(),
            -15.0,
            25.0,
            20,
            1e-9,
            1e-8,
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-5, "{}", q.value);
    }
}
