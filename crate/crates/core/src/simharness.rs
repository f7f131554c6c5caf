//! Simulation experiments: contaminated data generation, replication loops
//! and tabulated results.
//!
//! Replications run in parallel, each with its own generator derived from
//! the experiment seed and the replication index. Within a replication the
//! data are generated once and every α reuses the same proposal stream
//! (common random numbers), so differences across α are not swamped by
//! sampling noise. Results are reduced in replication order, which makes
//! the output independent of the thread count.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha_lik::DataSpace;
use crate::divergence::{default_grid, kld};
use crate::error::{contract, Error, Result};
use crate::estimators::{erpde, erpe};
use crate::model::{normal_log_density, AlphaConfig, NormalLocation, NormalRegression};
use crate::posterior::{
    default_theta_grid, importance_sample_with_retry, ProposalSpec, RMarginal, WeightedPosterior,
};
use crate::prior::Prior;
use crate::rng::{replication_rng, seeded, SimRng, DATA_STREAM, PROPOSAL_STREAM};

/// Location of the clean data-generating normal.
pub const TRUE_MEAN: f64 = 5.0;
/// Value that replaces contaminated observations in the normal-mean study.
pub const OUTLIER: f64 = 8.0;
/// True regression coefficients (intercept, slope).
pub const TRUE_BETA: [f64; 2] = [5.0, 2.0];
/// Mean of contaminated regression errors.
pub const ERROR_SHIFT: f64 = 5.0;
pub const DEFAULT_DRAWS: usize = 20_000;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "RPOST_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    NormalMeanKLD,
    RegressionBiasMSE,
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

/// Configuration of one simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub n: usize,
    pub eps: f64,
    pub alpha_grid: Vec<f64>,
    pub prior: Prior,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_draws")]
    pub draws: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(contract("n must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.eps) {
            return Err(contract(format!("eps must lie in [0, 1), got {}", self.eps)));
        }
        if self.alpha_grid.is_empty() {
            return Err(contract("alpha grid is empty"));
        }
        for a in &self.alpha_grid {
            AlphaConfig::new(*a)?;
        }
        if self.replications == 0 {
            return Err(contract("replications must be at least 1"));
        }
        self.prior.validate()?;
        if self.prior.support().is_some() {
            return Err(contract("simulation studies use continuous priors"));
        }
        if let Prior::NormalConjugate { theta0, .. } = &self.prior {
            let dim = match self.experiment {
                Experiment::NormalMeanKLD => 1,
                Experiment::RegressionBiasMSE => TRUE_BETA.len(),
            };
            if theta0.len() != dim {
                return Err(contract(format!("conjugate prior mean must have {dim} entries")));
            }
        }
        // the sampler enforces the lower bound on draws; check it up front
        ProposalSpec::new(vec![0.0], vec![1.0], self.draws)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// One line of a [`ResultTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub eps: f64,
    pub alpha: f64,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    pub excluded_reps: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn get(&self, alpha: f64, metric: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.alpha == alpha && r.metric == metric)
    }

    pub fn value(&self, alpha: f64, metric: &str) -> Option<f64> {
        self.get(alpha, metric).map(|r| r.value)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,eps,alpha,metric,value,stderr,excluded_reps")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{},{},{}", r.n, r.eps, r.alpha, r.metric, r.value, r.stderr, r.excluded_reps)?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }
}

/// Number of contaminated entries, `floor(n·eps)`. The small guard keeps
/// products such as `0.29 × 100` from rounding down a whole unit.
pub fn contaminated_count(n: usize, eps: f64) -> usize {
    ((n as f64 * eps) + 1e-9).floor() as usize
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(contract(format!("eps must lie in [0, 1), got {eps}")));
    }
    Ok(())
}

fn std_normal(rng: &mut SimRng) -> f64 {
    StandardNormal.sample(rng)
}

/// `n` draws from `N(5, 1)` with the first `floor(n·eps)` replaced by 8.
pub fn gen_normal_contaminated(n: usize, eps: f64, rng: &mut SimRng) -> Result<Vec<f64>> {
    check_eps(eps)?;
    let mut x: Vec<f64> = (0..n)
        .map(|_| TRUE_MEAN + std_normal(rng))
        .collect();
    let k = contaminated_count(n, eps);
    x[..k].iter_mut().for_each(|v| *v = OUTLIER);
    Ok(x)
}

/// Design rows `(1, t_i)` with `t_i ~ N(5, 1)` and responses
/// `t_iᵀβ_0 + e_i`, where the first `floor(n·eps_c)` errors are `N(5, 1)`
/// and the rest `N(0, 1)`. Covariates are drawn before the errors.
pub fn gen_regression_data(n: usize, eps_c: f64, rng: &mut SimRng) -> Result<(DMatrix<f64>, Vec<f64>)> {
    check_eps(eps_c)?;
    if n < 2 {
        return Err(contract("regression needs at least two observations"));
    }
    let t: Vec<f64> = (0..n).map(|_| TRUE_MEAN + std_normal(rng)).collect();
    let k = contaminated_count(n, eps_c);
    let y = t
        .iter()
        .enumerate()
        .map(|(i, ti)| {
            let e = std_normal(rng);
            let shift = if i < k { ERROR_SHIFT } else { 0.0 };
            TRUE_BETA[0] + TRUE_BETA[1] * ti + shift + e
        })
        .collect();
    let design = DMatrix::from_fn(n, 2, |r, c| if c == 0 { 1.0 } else { t[r] });
    Ok((design, y))
}

/// Runs `f` on a rayon pool limited by `RPOST_THREADS` when set.
pub fn with_thread_cap<T: Send, F: FnOnce() -> T + Send>(f: F) -> Result<T> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let threads: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
            if threads == 0 {
                return Err(Error::Parse(format!("{THREADS_ENV} must be positive")));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

/// Per-α outcome of one replication: metric values, or `None` if excluded.
type RepOutcome = Vec<Option<Vec<f64>>>;

fn run_replications<F>(spec: &ExperimentSpec, one: F) -> Result<Vec<RepOutcome>>
where
    F: Fn(u64) -> Result<RepOutcome> + Sync,
{
    with_thread_cap(|| {
        let mut out: Vec<(u64, Result<RepOutcome>)> = (0..spec.replications as u64)
            .into_par_iter()
            .map(|r| (r, one(r)))
            .collect();
        out.sort_by_key(|(r, _)| *r);
        out.into_iter()
            .map(|(_, res)| match res {
                Ok(v) => v,
                Err(_) => vec![None; spec.alpha_grid.len()],
            })
            .collect()
    })
}

fn posterior_for(
    family: &crate::model::ModelFamily,
    prior: &Prior,
    data: &[f64],
    alpha: AlphaConfig,
    proposal: &ProposalSpec,
    rng: &mut SimRng,
) -> Option<WeightedPosterior> {
    let (wp, _) = importance_sample_with_retry(family, prior, data, alpha, proposal, rng).ok()?;
    (!wp.is_degenerate()).then_some(wp)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn check_kind(spec: &ExperimentSpec, kind: Experiment) -> Result<()> {
    spec.validate()?;
    if spec.experiment != kind {
        return Err(contract(format!("expected a {kind:?} experiment, got {:?}", spec.experiment)));
    }
    Ok(())
}

fn all_excluded(what: &str) -> Error {
    Error::Numeric(format!("every replication was excluded for {what}"))
}

/// KLD study for the normal-mean model with known `σ = 1`.
///
/// Metrics per α: `kld` is `KLD(g, ĝ)` from the true `N(5, 1)` density to
/// the ERPDE; `kld_reverse` is `KLD(ĝ, g)` on the same grid.
pub fn run_normal_mean_kld(spec: &ExperimentSpec) -> Result<ResultTable> {
    check_kind(spec, Experiment::NormalMeanKLD)?;
    let family = crate::model::ModelFamily::NormalLocation(NormalLocation::new(1.0)?);
    let z = default_grid(TRUE_MEAN, 1.0);
    let g: Vec<f64> = z.iter().map(|v| normal_log_density(*v, TRUE_MEAN, 1.0).exp()).collect();
    let alphas: Vec<AlphaConfig> = spec.alpha_grid.iter().map(|a| AlphaConfig::new(*a)).collect::<Result<_>>()?;

    let outcomes = run_replications(spec, |r| {
        let data = gen_normal_contaminated(spec.n, spec.eps, &mut replication_rng(spec.seed, r, DATA_STREAM))?;
        let proposal = ProposalSpec::sample_moments(&data, 1.0, spec.draws)?;
        Ok(alphas
            .iter()
            .map(|a| {
                let mut rng = replication_rng(spec.seed, r, PROPOSAL_STREAM);
                let wp = posterior_for(&family, &spec.prior, &data, *a, &proposal, &mut rng)?;
                let est = erpde(&family, &wp, &z).ok()?;
                let forward = kld(&g, &est.values, &z).ok()?;
                let reverse = kld(&est.values, &g, &z).ok()?;
                (forward.is_finite() && reverse.is_finite()).then(|| vec![forward, reverse])
            })
            .collect())
    })?;

    let mut table = ResultTable::default();
    for (k, a) in spec.alpha_grid.iter().enumerate() {
        let kept: Vec<&Vec<f64>> = outcomes.iter().filter_map(|o| o[k].as_ref()).collect();
        if kept.is_empty() {
            return Err(all_excluded(&format!("alpha = {a}")));
        }
        let excluded = spec.replications - kept.len();
        for (j, name) in ["kld", "kld_reverse"].iter().enumerate() {
            let vals: Vec<f64> = kept.iter().map(|v| v[j]).collect();
            let (value, stderr) = mean_and_stderr(&vals);
            table.rows.push(ResultRow {
                n: spec.n,
                eps: spec.eps,
                alpha: *a,
                metric: name.to_string(),
                value,
                stderr,
                excluded_reps: excluded,
            });
        }
    }
    Ok(table)
}

/// Bias and MSE of the ERPE in the linear regression model with known
/// `σ = 1`.
///
/// Metrics per α: `bias` is the norm of the averaged estimation error,
/// `bias_intercept` and `bias_slope` its components, and `mse` the average
/// squared error norm.
pub fn run_regression_bias_mse(spec: &ExperimentSpec) -> Result<ResultTable> {
    check_kind(spec, Experiment::RegressionBiasMSE)?;
    let alphas: Vec<AlphaConfig> = spec.alpha_grid.iter().map(|a| AlphaConfig::new(*a)).collect::<Result<_>>()?;

    let outcomes = run_replications(spec, |r| {
        let (design, y) = gen_regression_data(spec.n, spec.eps, &mut replication_rng(spec.seed, r, DATA_STREAM))?;
        let reg = NormalRegression::new(design, 1.0, true)?;
        let proposal = ProposalSpec::least_squares(&reg, &y, spec.draws)?;
        let family = crate::model::ModelFamily::NormalLinearRegression(reg);
        Ok(alphas
            .iter()
            .map(|a| {
                let mut rng = replication_rng(spec.seed, r, PROPOSAL_STREAM);
                let wp = posterior_for(&family, &spec.prior, &y, *a, &proposal, &mut rng)?;
                let est = erpe(&wp);
                Some(est.iter().zip(TRUE_BETA).map(|(b, b0)| b - b0).collect())
            })
            .collect())
    })?;

    let mut table = ResultTable::default();
    for (k, a) in spec.alpha_grid.iter().enumerate() {
        let errs: Vec<&Vec<f64>> = outcomes.iter().filter_map(|o| o[k].as_ref()).collect();
        if errs.is_empty() {
            return Err(all_excluded(&format!("alpha = {a}")));
        }
        let excluded = spec.replications - errs.len();
        let m = errs.len() as f64;
        let p = TRUE_BETA.len();
        let mut rows = Vec::new();
        let comps: Vec<(f64, f64)> = (0..p)
            .map(|j| mean_and_stderr(&errs.iter().map(|e| e[j]).collect::<Vec<_>>()))
            .collect();
        let bias_vec: Vec<f64> = comps.iter().map(|c| c.0).collect();
        let norm = bias_vec.iter().map(|b| b * b).sum::<f64>().sqrt();
        // delta method along the bias direction
        let norm_se = if norm > 0.0 && m > 1.0 {
            let proj: Vec<f64> = errs
                .iter()
                .map(|e| e.iter().zip(&bias_vec).map(|(x, b)| x * b).sum::<f64>() / norm)
                .collect();
            mean_and_stderr(&proj).1
        } else {
            0.0
        };
        rows.push(("bias", norm, norm_se));
        rows.push(("bias_intercept", comps[0].0, comps[0].1));
        rows.push(("bias_slope", comps[1].0, comps[1].1));
        let sq: Vec<f64> = errs.iter().map(|e| e.iter().map(|x| x * x).sum()).collect();
        let (mse, mse_se) = mean_and_stderr(&sq);
        rows.push(("mse", mse, mse_se));
        for (name, value, stderr) in rows {
            table.rows.push(ResultRow {
                n: spec.n,
                eps: spec.eps,
                alpha: *a,
                metric: name.to_string(),
                value,
                stderr,
                excluded_reps: excluded,
            });
        }
    }
    Ok(table)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    match spec.experiment {
        Experiment::NormalMeanKLD => run_normal_mean_kld(spec),
        Experiment::RegressionBiasMSE => run_regression_bias_mse(spec),
    }
}

/// One point of a merging trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergingRow {
    pub n: usize,
    pub alpha: f64,
    pub statistic: f64,
}

/// Merging statistic `(1/n)(log m_n − Σ log g)` along nested prefixes of a
/// single `N(5, 1)` sequence, under the conjugate prior `N(5, τ²)`.
///
/// `space` is the data space of one observation; it must be bounded when
/// `α > 0`.
pub fn merging_trajectory(
    n_list: &[usize],
    alpha: AlphaConfig,
    tau: f64,
    seed: u64,
    space: DataSpace,
) -> Result<Vec<MergingRow>> {
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(contract("n list must be non-empty with positive entries"));
    }
    let n_max = *n_list.iter().max().expect("non-empty");
    let family = NormalLocation::new(1.0)?;
    let prior = Prior::conjugate(vec![TRUE_MEAN], tau)?;
    let data = gen_normal_contaminated(n_max, 0.0, &mut seeded(seed))?;
    if let DataSpace::Interval { lo, hi } = space {
        if data.iter().any(|x| *x < lo || *x > hi) {
            return Err(contract("simulated data fall outside the data space"));
        }
    }
    with_thread_cap(|| {
        n_list
            .iter()
            .map(|&n| {
                let x = &data[..n];
                let grid = default_theta_grid(&family, &prior, x, alpha)?;
                let marginal = RMarginal::new(&family, &prior, alpha, &grid, space)?;
                let log_m = marginal.logdensity(x)?;
                let log_g: f64 = x.iter().map(|v| normal_log_density(*v, TRUE_MEAN, 1.0)).sum();
                Ok(MergingRow { n, alpha: alpha.alpha(), statistic: (log_m - log_g) / n as f64 })
            })
            .collect()
    })?
}

pub fn write_merging_csv<W: Write>(rows: &[MergingRow], mut out: W) -> Result<()> {
    writeln!(out, "n,alpha,statistic")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.n, r.alpha, r.statistic)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(experiment: Experiment) -> ExperimentSpec {
        ExperimentSpec {
            experiment,
            n: 20,
            eps: 0.1,
            alpha_grid: vec![0.0, 0.5],
            prior: Prior::uniform(),
            replications: 3,
            seed: 11,
            draws: 2000,
        }
    }

    #[test]
    fn contamination_counts() {
        let mut rng = seeded(1);
        assert_eq!(gen_normal_contaminated(20, 0.1, &mut rng).unwrap().iter().filter(|v| **v == 8.0).count(), 2);
        assert_eq!(gen_normal_contaminated(20, 0.05, &mut rng).unwrap().iter().filter(|v| **v == 8.0).count(), 1);
        assert!(gen_normal_contaminated(20, 0.0, &mut rng).unwrap().iter().all(|v| *v != 8.0));
        assert_eq!(contaminated_count(100, 0.29), 29);
        assert_eq!(contaminated_count(50, 0.2), 10);
        assert!(gen_normal_contaminated(5, 1.0, &mut rng).is_err());
    }

    #[test]
    fn regression_data_shape() {
        let (d, y) = gen_regression_data(50, 0.2, &mut seeded(4)).unwrap();
        assert_eq!((d.nrows(), d.ncols(), y.len()), (50, 2, 50));
        assert!(d.column(0).iter().all(|v| *v == 1.0));
    }

    #[test]
    fn ols_consistency_on_clean_data() {
        let (d, y) = gen_regression_data(10_000, 0.0, &mut seeded(8)).unwrap();
        let reg = NormalRegression::new(d, 1.0, true).unwrap();
        let (beta, _) = crate::posterior::ProposalSpec::least_squares(&reg, &y, 1000)
            .map(|p| (p.mean().to_vec(), ()))
            .unwrap();
        assert!((beta[0] - 5.0).abs() < 0.1 && (beta[1] - 2.0).abs() < 0.1, "{beta:?}");
    }

    #[test]
    fn spec_validation_and_json() {
        let s = spec(Experiment::NormalMeanKLD);
        assert!(s.validate().is_ok());
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(ExperimentSpec::from_json(&text).unwrap(), s);
        let minimal = r#"{"experiment":"NormalMeanKLD","n":20,"eps":0.0,"alpha_grid":[0.0],
            "prior":{"kind":"ImproperUniform"},"replications":1,"seed":1}"#;
        assert_eq!(ExperimentSpec::from_json(minimal).unwrap().draws, DEFAULT_DRAWS);
        for bad in [
            ExperimentSpec { eps: 1.0, ..s.clone() },
            ExperimentSpec { alpha_grid: vec![-0.1], ..s.clone() },
            ExperimentSpec { replications: 0, ..s.clone() },
            ExperimentSpec { draws: 10, ..s.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(run_regression_bias_mse(&s).is_err());
    }

    #[test]
    fn kld_table_is_deterministic() {
        let s = spec(Experiment::NormalMeanKLD);
        let a = run_normal_mean_kld(&s).unwrap();
        let b = run_normal_mean_kld(&s).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_eq!(a.rows.len(), 4);
        assert!(a.rows.iter().all(|r| r.value.is_finite() && r.stderr >= 0.0));
        assert!(a.to_csv_string().starts_with("n,eps,alpha,metric,value,stderr,excluded_reps\n20,0.1,0,kld,"));
    }

    #[test]
    fn regression_table_single_replication() {
        let s = ExperimentSpec { replications: 1, ..spec(Experiment::RegressionBiasMSE) };
        let a = run_regression_bias_mse(&s).unwrap();
        assert_eq!(a.to_csv_string(), run_regression_bias_mse(&s).unwrap().to_csv_string());
        let bias = a.value(0.0, "bias").unwrap();
        let mse = a.value(0.0, "mse").unwrap();
        // one replication: squared bias norm equals the squared error
        assert!((bias * bias - mse).abs() < 1e-12);
    }

    #[test]
    fn merging_contracts() {
        let rows = merging_trajectory(&[5, 20], AlphaConfig::ZERO, 3.0, 1, DataSpace::RealLine).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(merging_trajectory(&[], AlphaConfig::ZERO, 3.0, 1, DataSpace::RealLine).is_err());
        let a = AlphaConfig::new(0.5).unwrap();
        assert!(merging_trajectory(&[5], a, 3.0, 1, DataSpace::RealLine).is_err());
    }
}
