//! Robust pseudo-posterior inference built on the alpha-likelihood (the
//! density power divergence surrogate for the log-likelihood).
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: parametric families (normal location, fixed-design normal
//!   regression) and the tuning parameter [`AlphaConfig`].
//! * [`alpha_lik`]: alpha-likelihoods for IID and independent non-homogeneous
//!   data, plus the alpha-modified model and prior densities.
//! * [`prior`]: improper uniform, conjugate normal, Jeffreys and discrete priors.
//! * [`posterior`]: unnormalized log-posterior, grid quadrature and
//!   self-normalized importance sampling engines, the R-marginal density and
//!   the merging diagnostic.
//! * [`estimators`]: posterior-mean, predictive density and maximum
//!   posterior estimators.
//! * [`divergence`]: KLD, Hellinger, L1, T-variation and the modified
//!   relative entropy.
//! * [`simharness`]: contaminated data generators and the replication
//!   experiments.

pub mod alpha_lik;
pub mod divergence;
pub mod error;
pub mod estimators;
pub mod model;
pub mod numeric;
pub mod posterior;
pub mod prior;
pub mod rng;
pub mod simharness;

pub use alpha_lik::{AlphaLikValue, DataSpace};
pub use error::{Error, Result};
pub use estimators::{DensityEstimate, EstimatorKind};
pub use model::{AlphaConfig, Family, ModelFamily, NormalLocation, NormalRegression};
pub use posterior::{Lattice, PosteriorSource, ProposalSpec, WeightedPosterior};
pub use prior::Prior;
