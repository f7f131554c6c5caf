//! Prior measures over the parameter space.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// One atom of a discrete prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub theta: Vec<f64>,
    pub mass: f64,
}

/// Prior variants. Use the constructors, which enforce the invariants;
/// [`Prior::validate`] re-checks values built or deserialized directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Prior {
    /// `π(θ) = 1` on the whole parameter space (improper).
    ImproperUniform,
    /// Independent `N(θ_0, τ²)` on every coordinate.
    NormalConjugate { theta0: Vec<f64>, tau: f64 },
    /// `π(β, σ) = 1/σ`, with `σ` the last parameter coordinate (improper).
    Jeffreys,
    /// Finite sub-probability mass function.
    Discrete { support: Vec<SupportPoint> },
}

impl Prior {
    pub fn uniform() -> Self {
        Prior::ImproperUniform
    }

    pub fn conjugate(theta0: Vec<f64>, tau: f64) -> Result<Self> {
        let p = Prior::NormalConjugate { theta0, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn jeffreys() -> Self {
        Prior::Jeffreys
    }

    pub fn discrete(support: Vec<SupportPoint>) -> Result<Self> {
        let p = Prior::Discrete { support };
        p.validate()?;
        Ok(p)
    }

    /// Discrete prior from `(θ, mass)` pairs.
    pub fn discrete_from_pairs<I: IntoIterator<Item = (Vec<f64>, f64)>>(pairs: I) -> Result<Self> {
        Self::discrete(pairs.into_iter().map(|(theta, mass)| SupportPoint { theta, mass }).collect())
    }

    /// Load a discrete prior from a JSON array of `{"theta": [..], "mass": m}`.
    pub fn discrete_from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::discrete_from_json(&text)
    }

    pub fn discrete_from_json(text: &str) -> Result<Self> {
        let support: Vec<SupportPoint> = serde_json::from_str(text)?;
        Self::discrete(support)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Prior::ImproperUniform | Prior::Jeffreys => Ok(()),
            Prior::NormalConjugate { theta0, tau } => {
                if !(tau.is_finite() && *tau > 0.0) {
                    return Err(contract(format!("conjugate prior needs tau > 0, got {tau}")));
                }
                if theta0.is_empty() || theta0.iter().any(|v| !v.is_finite()) {
                    return Err(contract("conjugate prior center must be non-empty and finite"));
                }
                Ok(())
            }
            Prior::Discrete { support } => {
                if support.is_empty() {
                    return Err(contract("discrete prior needs a non-empty support"));
                }
                let dim = support[0].theta.len();
                let mut total = 0.0;
                for (k, s) in support.iter().enumerate() {
                    if s.theta.len() != dim || s.theta.iter().any(|v| !v.is_finite()) {
                        return Err(contract(format!("support point {k} has a bad parameter")));
                    }
                    if !(s.mass.is_finite() && s.mass > 0.0) {
                        return Err(contract(format!("support point {k} has non-positive mass")));
                    }
                    if support[..k].iter().any(|o| o.theta == s.theta) {
                        return Err(contract(format!("support point {k} is duplicated")));
                    }
                    total += s.mass;
                }
                if total > 1.0 + 1e-12 {
                    return Err(contract(format!("discrete prior masses sum to {total} > 1")));
                }
                Ok(())
            }
        }
    }

    pub fn is_proper(&self) -> bool {
        matches!(self, Prior::NormalConjugate { .. } | Prior::Discrete { .. })
    }

    /// Total mass for proper priors, `None` for improper ones.
    pub fn total_mass(&self) -> Option<f64> {
        match self {
            Prior::NormalConjugate { .. } => Some(1.0),
            Prior::Discrete { support } => Some(support.iter().map(|s| s.mass).sum()),
            _ => None,
        }
    }

    pub fn support(&self) -> Option<&[SupportPoint]> {
        match self {
            Prior::Discrete { support } => Some(support),
            _ => None,
        }
    }

    /// Log prior density (or log mass for discrete priors); `-inf` encodes
    /// zero prior mass.
    pub fn log_prior(&self, theta: &[f64]) -> f64 {
        match self {
            Prior::ImproperUniform => 0.0,
            Prior::NormalConjugate { theta0, tau } => theta
                .iter()
                .zip(theta0.iter().cycle())
                .map(|(t, c)| {
                    let u = (t - c) / tau;
                    -0.5 * u * u - tau.ln() - LN_SQRT_2PI
                })
                .sum(),
            Prior::Jeffreys => match theta.last() {
                Some(s) if *s > 0.0 => -s.ln(),
                _ => f64::NEG_INFINITY,
            },
            Prior::Discrete { support } => support
                .iter()
                .find(|s| s.theta.as_slice() == theta)
                .map_or(f64::NEG_INFINITY, |s| s.mass.ln()),
        }
    }
}

/// Free-function form of [`Prior::log_prior`].
pub fn log_prior(prior: &Prior, theta: &[f64]) -> f64 {
    prior.log_prior(theta)
}
