use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rpost::alpha_lik::DataSpace;
use rpost::estimators::{arpde, erpde, hrpde, DensityEstimate};
use rpost::model::{AlphaConfig, ModelFamily};
use rpost::numeric::linspace;
use rpost::posterior::{importance_sample_with_retry, ProposalSpec};
use rpost::rng::seeded;
use rpost::simharness::{
    merging_trajectory, run_experiment, with_thread_cap, write_merging_csv, Experiment, ExperimentSpec, DEFAULT_DRAWS,
    TRUE_BETA, TRUE_MEAN,
};
use rpost::{Error, Prior, Result};

#[derive(Parser)]
#[command(name = "rpost", version, about = "Robust Bayes inference with alpha-likelihood posteriors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Average KLD between the ERPDE and the true N(5, 1) density.
    TableKld(StudyArgs),
    /// Bias and MSE of the ERPE in the two-coefficient regression model.
    Regression(StudyArgs),
    /// Predictive density from observed data.
    Predict(PredictArgs),
    /// R-marginal merging statistic along growing sample sizes.
    DiagnoseMerging(MergingArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorKind {
    Uniform,
    Conjugate,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Erpde,
    Arpde,
    Hrpde,
}

#[derive(Args)]
struct StudyArgs {
    /// JSON file with ExperimentSpec fields; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    prior: Option<PriorKind>,
    /// Prior standard deviation for the conjugate prior.
    #[arg(long, default_value_t = 3.0)]
    tau: f64,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the table as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// One observation per line; a non-numeric first line is read as a header.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    prior: PriorKind,
    #[arg(long, default_value_t = 3.0)]
    tau: f64,
    /// Conjugate prior mean (defaults to 5).
    #[arg(long, allow_negative_numbers = true, default_value_t = TRUE_MEAN)]
    prior_mean: f64,
    /// Known model standard deviation.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, value_enum, default_value = "erpde")]
    estimator: EstimatorArg,
    #[arg(long, allow_negative_numbers = true)]
    zmin: f64,
    #[arg(long, allow_negative_numbers = true)]
    zmax: f64,
    #[arg(long, default_value_t = 4001)]
    zpoints: usize,
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MergingArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lower end of the data space (default 5 - 20).
    #[arg(long, allow_negative_numbers = true)]
    data_lo: Option<f64>,
    /// Upper end of the data space (default 5 + 20).
    #[arg(long, allow_negative_numbers = true)]
    data_hi: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn study_spec(args: &StudyArgs, experiment: Experiment) -> Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::from_json_file(path)?,
        None => ExperimentSpec {
            experiment,
            n: 20,
            eps: 0.0,
            alpha_grid: vec![0.0, 0.2, 0.3, 0.5, 0.7, 0.8, 1.0],
            prior: Prior::uniform(),
            replications: 200,
            seed: 42,
            draws: DEFAULT_DRAWS,
        },
    };
    if spec.experiment != experiment {
        return Err(Error::Parse(format!(
            "config describes a {:?} experiment but the subcommand runs {experiment:?}",
            spec.experiment
        )));
    }
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(eps) = args.eps {
        spec.eps = eps;
    }
    if let Some(a) = &args.alphas {
        spec.alpha_grid = a.clone();
    }
    if let Some(kind) = args.prior {
        spec.prior = match kind {
            PriorKind::Uniform => Prior::uniform(),
            PriorKind::Conjugate => {
                let center = match experiment {
                    Experiment::NormalMeanKLD => vec![TRUE_MEAN],
                    Experiment::RegressionBiasMSE => TRUE_BETA.to_vec(),
                };
                Prior::conjugate(center, args.tau)?
            }
        };
    }
    if let Some(r) = args.reps {
        spec.replications = r;
    }
    if let Some(d) = args.draws {
        spec.draws = d;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

fn run_study(args: &StudyArgs, experiment: Experiment) -> Result<()> {
    let spec = study_spec(args, experiment)?;
    let table = run_experiment(&spec)?;
    let mut out = create(&args.out)?;
    table.write_csv(&mut out)?;
    out.flush()?;
    if let Some(path) = &args.json {
        let mut out = create(path)?;
        table.write_json(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn read_data(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut data = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => data.push(v),
            _ if k == 0 => continue,
            _ => return Err(Error::Parse(format!("{}: line {} is not a number", path.display(), k + 1))),
        }
    }
    if data.is_empty() {
        return Err(Error::Parse(format!("{}: no observations", path.display())));
    }
    Ok(data)
}

fn predict(args: &PredictArgs) -> Result<()> {
    let data = read_data(&args.data)?;
    let alpha = AlphaConfig::new(args.alpha)?;
    let family = ModelFamily::normal_location(args.sigma)?;
    let prior = match args.prior {
        PriorKind::Uniform => Prior::uniform(),
        PriorKind::Conjugate => Prior::conjugate(vec![args.prior_mean], args.tau)?,
    };
    if !(args.zmin < args.zmax) || args.zpoints < 2 {
        return Err(Error::Parse("need zmin < zmax and at least two z points".into()));
    }
    let z = linspace(args.zmin, args.zmax, args.zpoints);
    let proposal = ProposalSpec::sample_moments(&data, args.sigma * args.sigma, args.draws)?;
    let est: DensityEstimate = with_thread_cap(|| -> Result<DensityEstimate> {
        let (wp, _) = importance_sample_with_retry(&family, &prior, &data, alpha, &proposal, &mut seeded(args.seed))?;
        if wp.is_degenerate() {
            eprintln!("warning: effective sample size {:.1} is below the degeneracy threshold", wp.ess());
        }
        match args.estimator {
            EstimatorArg::Erpde => erpde(&family, &wp, &z),
            EstimatorArg::Arpde => arpde(&family, &wp, &z),
            EstimatorArg::Hrpde => hrpde(&family, &wp, &z),
        }
    })??;
    let mut out = create(&args.out)?;
    est.write_csv(&mut out, args.alpha)?;
    out.flush()?;
    Ok(())
}

fn diagnose_merging(args: &MergingArgs) -> Result<()> {
    let alpha = AlphaConfig::new(args.alpha)?;
    let space = match (args.data_lo, args.data_hi) {
        (None, None) if alpha.is_zero() => DataSpace::RealLine,
        (lo, hi) => DataSpace::interval(lo.unwrap_or(TRUE_MEAN - 20.0), hi.unwrap_or(TRUE_MEAN + 20.0))?,
    };
    let rows = merging_trajectory(&args.n_list, alpha, args.tau, args.seed, space)?;
    let mut out = create(&args.out)?;
    write_merging_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::TableKld(a) => run_study(a, Experiment::NormalMeanKLD),
        Command::Regression(a) => run_study(a, Experiment::RegressionBiasMSE),
        Command::Predict(a) => predict(a),
        Command::DiagnoseMerging(a) => diagnose_merging(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
