//! Command-line front end: instance generation, campaigns, lemma checks and
//! ranking of external observation logs.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use isorank::estimation::{borda_rank_log, pairwise_estimator};
use isorank::harness::{configure_threads, run_experiment, verify_lemmas, ExperimentConfig, InstanceSpec};
use isorank::model::sample_full_observations;
use isorank::partial::{estimate_wmp, sample_poisson_observations, ObservationLog};
use isorank::rng::{stream, streams};
use isorank::tree::{tree_sort, BudgetMode, SampleBudget};
use isorank::{NoiseSpec, ProblemInstance, Result, TrisectionParams, Variant};

#[derive(Parser)]
#[command(name = "isorank", version, about = "Ranking experts from noisy bi-isotonic observations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Separated,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogEstimator {
    Wmp,
    Pc,
    Borda,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeVariant {
    Ht,
    Wm,
    WmSr,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance (JSON) and optionally a Poisson observation log (CSV).
    Gen {
        #[arg(long, value_enum, default_value = "separated")]
        kind: Generator,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Gaussian noise level attached to the instance.
        #[arg(long, default_value_t = 0.0)]
        zeta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Sampling effort of the observation log.
        #[arg(long, requires = "obs")]
        lambda: Option<f64>,
        /// Observation log path.
        #[arg(long, requires = "lambda")]
        obs: Option<PathBuf>,
    },
    /// Run a Monte-Carlo campaign from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Added to every configured seed.
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        /// Per-estimator summary path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run tree sort on an instance and evaluate the lemma checks.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "ht")]
        variant: TreeVariant,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rank the experts of an external observation log (CSV `i,k,y`, 0-based).
    Rank {
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "wmp")]
        estimator: LogEstimator,
        /// Noise level of a single observation.
        #[arg(long, default_value_t = 1.0)]
        zeta: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn noise_for(zeta: f64) -> NoiseSpec {
    if zeta > 0.0 {
        NoiseSpec::Gaussian { sigma: zeta }
    } else {
        NoiseSpec::None
    }
}

fn gen(
    kind: Generator,
    n: usize,
    d: usize,
    zeta: f64,
    seed: u64,
    out: PathBuf,
    lambda: Option<f64>,
    obs: Option<PathBuf>,
) -> Result<()> {
    let spec = match kind {
        Generator::Separated => InstanceSpec::Separated { n, d },
        Generator::Random => InstanceSpec::Random { n, d, components: 2 * (n + d) },
    };
    let inst = spec.generate(zeta, &mut stream(seed, streams::INSTANCE))?;
    std::fs::write(&out, inst.to_json()?)?;
    if let (Some(lambda), Some(path)) = (lambda, obs) {
        let log = sample_poisson_observations(&inst, lambda, &noise_for(zeta), &mut stream(seed, streams::OBSERVATIONS))?;
        log.write_csv(BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

fn run(config: PathBuf, out: Option<PathBuf>, seed_base: u64, summary: Option<PathBuf>) -> Result<()> {
    let mut cfg = ExperimentConfig::from_json(&std::fs::read_to_string(config)?)?;
    for s in &mut cfg.seeds {
        *s = s.wrapping_add(seed_base);
    }
    let report = run_experiment(&cfg)?;
    for row in report.errors() {
        eprintln!(
            "warning: {} seed {}: {}",
            row.estimator.name(),
            row.seed,
            row.error.as_deref().unwrap_or_default()
        );
    }
    match out.or(cfg.output.clone().map(PathBuf::from)) {
        Some(path) => report.write_csv(BufWriter::new(File::create(path)?))?,
        None => report.write_csv(std::io::stdout().lock())?,
    }
    if let Some(path) = summary.or(cfg.summary_output.clone().map(PathBuf::from)) {
        report.write_summary_csv(cfg.baseline, BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

fn verify(instance: PathBuf, variant: TreeVariant, delta: f64, seed: u64) -> Result<()> {
    let inst = ProblemInstance::from_json(&std::fs::read_to_string(instance)?)?;
    let variant = match variant {
        TreeVariant::Ht => Variant::Ht,
        TreeVariant::Wm => Variant::Wm,
        TreeVariant::WmSr => Variant::WmSr,
    };
    let params = TrisectionParams::new(inst.zeta, delta, variant)?;
    let budget = SampleBudget::practical(inst.n(), inst.d());
    let count = budget.upsilon_star.max(1) as usize;
    let pool = sample_full_observations(&inst, count, &noise_for(inst.zeta), &mut stream(seed, streams::OBSERVATIONS))?;
    let trace = tree_sort(&pool, &params, &budget, &mut stream(seed, streams::ESTIMATOR))?;
    let flags = verify_lemmas(&inst, &trace, &params, budget.t_inf)?;
    println!("{}", serde_json::to_string_pretty(&flags)?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn rank(
    obs: PathBuf,
    n: usize,
    d: usize,
    lambda: f64,
    estimator: LogEstimator,
    zeta: f64,
    delta: f64,
    seed: u64,
) -> Result<()> {
    let log = ObservationLog::read_csv(File::open(obs)?, n, d, lambda)?;
    let params = TrisectionParams::new(zeta, delta, Variant::Wm)?;
    let mut rng = stream(seed, streams::ESTIMATOR);
    let pi = match estimator {
        LogEstimator::Wmp => estimate_wmp(&log, &params, BudgetMode::Practical, &mut rng)?.pi_hat,
        LogEstimator::Pc => pairwise_estimator(&log, &params, BudgetMode::Practical, &mut rng)?.pi_hat,
        LogEstimator::Borda => borda_rank_log(&log),
    };
    println!("{}", json!({ "ranks": pi.ranks(), "order": pi.order() }));
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Gen { kind, n, d, zeta, seed, out, lambda, obs } => gen(kind, n, d, zeta, seed, out, lambda, obs),
        Command::Run { config, out, seed_base, summary } => run(config, out, seed_base, summary),
        Command::Verify { instance, variant, delta, seed } => verify(instance, variant, delta, seed),
        Command::Rank { obs, n, d, lambda, estimator, zeta, delta, seed } => {
            rank(obs, n, d, lambda, estimator, zeta, delta, seed)
        }
    });
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
