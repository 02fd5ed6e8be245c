use std::fmt;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimation::{
    borda_rank_log, borda_rank_pool, estimate_matrix, pairwise_estimator, project_bi_isotonic, ProjectionSettings,
};
use crate::model::{
    gen_random_instance, gen_separated_instance, gen_staircase_instance, gen_two_block_instance, permute_rows,
    sample_full_observations, Matrix, NoiseSpec, ProblemInstance, StaircaseConfig, TwoBlockLayout,
};
use crate::partial::{estimate_wmp, sample_poisson_observations, ObservationLog, WmpOutcome};
use crate::perm::Permutation;
use crate::rng::{stream, streams, substream, Rng};
use crate::tree::{tree_sort, BudgetMode, SampleBudget, TreeSortOutput};
use crate::trisection::{TrisectionParams, Variant};

use super::lemmas::{loss_general, sandwich};
use super::loss::{lerr_loss, linf_loss, matrix_loss, perm_loss};
use super::stats::{ratio_of_means, summarize};

/// Instance generator and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum InstanceSpec {
    /// Strictly separated rows.
    Separated { n: usize, d: usize },
    /// Random sum of quadrant indicators.
    Random { n: usize, d: usize, components: usize },
    /// Two expert types.
    TwoBlock {
        n: usize,
        d: usize,
        r: usize,
        h: f64,
        #[serde(flatten)]
        layout: TwoBlockLayout,
    },
    /// Staircase with sparse bumps.
    Staircase(StaircaseConfig),
}

impl InstanceSpec {
    /// Draws an instance; `zeta` is attached to it.
    pub fn generate(&self, zeta: f64, rng: &mut Rng) -> Result<ProblemInstance> {
        match self {
            InstanceSpec::Separated { n, d } => gen_separated_instance(*n, *d, zeta, rng),
            InstanceSpec::Random { n, d, components } => gen_random_instance(*n, *d, *components, zeta, rng),
            InstanceSpec::TwoBlock { n, d, r, h, layout } => {
                Ok(gen_two_block_instance(*n, *d, *r, *h, layout, zeta)?.shuffled(rng))
            }
            InstanceSpec::Staircase(cfg) => Ok(gen_staircase_instance(cfg, rng)?.shuffled(rng)),
        }
    }

    /// `(n, d)`.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            InstanceSpec::Separated { n, d }
            | InstanceSpec::Random { n, d, .. }
            | InstanceSpec::TwoBlock { n, d, .. } => (*n, *d),
            InstanceSpec::Staircase(cfg) => (cfg.n, cfg.d),
        }
    }
}

/// Estimators the runner knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Tree sort with the oblivious reduction (full observations).
    Ht,
    /// Tree sort with memory (full observations).
    Wm,
    /// Tree sort with memory and shifted statistics (full observations).
    WmSr,
    /// Row sums of all observations.
    Borda,
    /// Poisson reduction followed by tree sort (Poisson observations).
    Wmp,
    /// Pairwise comparisons (Poisson observations).
    Pc,
}

impl EstimatorKind {
    /// Column label.
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Ht => "ht",
            EstimatorKind::Wm => "wm",
            EstimatorKind::WmSr => "wm_sr",
            EstimatorKind::Borda => "borda",
            EstimatorKind::Wmp => "wmp",
            EstimatorKind::Pc => "pc",
        }
    }

    fn variant(&self) -> Option<Variant> {
        match self {
            EstimatorKind::Ht => Some(Variant::Ht),
            EstimatorKind::Wm => Some(Variant::Wm),
            EstimatorKind::WmSr => Some(Variant::WmSr),
            _ => None,
        }
    }
}

/// How observations are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservationSpec {
    /// `upsilon` independent full samples; defaults to the budget's `Υ*`.
    Full {
        #[serde(default)]
        upsilon: Option<usize>,
    },
    /// One Poisson log per sampling effort.
    Poisson { lambdas: Vec<f64> },
}

fn default_delta() -> f64 {
    0.05
}

fn default_true() -> bool {
    true
}

/// Monte-Carlo campaign description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Instance generator.
    pub instance: InstanceSpec,
    /// Estimators to run on every observation set.
    pub estimators: Vec<EstimatorKind>,
    /// Observation noise.
    pub noise: NoiseSpec,
    /// Observation scheme.
    pub observations: ObservationSpec,
    /// Seeds; each gives an instance (unless fixed) and fresh observations.
    pub seeds: Vec<u64>,
    /// Failure budget `δ`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Budget accounting.
    #[serde(default = "default_mode")]
    pub mode: BudgetMode,
    /// Multiplier on the log-prefactors; defaults to 1/64 in practical mode and 1 in paper mode.
    #[serde(default)]
    pub practical_scaling: Option<f64>,
    /// Overrides `τ_∞`.
    #[serde(default)]
    pub tau_inf: Option<u64>,
    /// Generate one instance from this seed and reuse it for every seed.
    #[serde(default)]
    pub instance_seed: Option<u64>,
    /// Run the property, sandwich and loss-bound checks.
    #[serde(default)]
    pub checks: bool,
    /// Compute the matrix reconstruction loss.
    #[serde(default)]
    pub matrix_loss: bool,
    /// Record wall-clock runtimes; disable for byte-reproducible reports.
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Estimator whose mean loss is the denominator of the summary ratio column.
    #[serde(default)]
    pub baseline: Option<EstimatorKind>,
    /// Report path.
    #[serde(default)]
    pub output: Option<String>,
    /// Summary path.
    #[serde(default)]
    pub summary_output: Option<String>,
}

fn default_mode() -> BudgetMode {
    BudgetMode::Practical
}

impl ExperimentConfig {
    /// Parses and validates a JSON config.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the invariants.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(invalid("at least one seed is required"));
        }
        if self.estimators.is_empty() {
            return Err(invalid("at least one estimator is required"));
        }
        if let ObservationSpec::Poisson { lambdas } = &self.observations {
            if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(invalid("lambda grid must be nonempty and positive"));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta must lie in (0,1)"));
        }
        Ok(())
    }

    /// Trisection parameters for the configured noise.
    pub fn params(&self) -> Result<TrisectionParams> {
        let scaling = self.practical_scaling.unwrap_or(match self.mode {
            BudgetMode::Practical => 1.0 / 64.0,
            BudgetMode::Paper => 1.0,
        });
        TrisectionParams::with_scaling(self.noise.zeta(), self.delta, Variant::Ht, scaling)
    }

    /// Tree-sort budget for full observations.
    pub fn budget(&self) -> Result<SampleBudget> {
        let (n, d) = self.instance.dims();
        match (self.tau_inf, self.mode) {
            (Some(tau), mode) => SampleBudget::custom(tau, n, mode),
            (None, BudgetMode::Practical) => Ok(SampleBudget::practical(n, d)),
            (None, BudgetMode::Paper) => {
                SampleBudget::paper(n, d, self.delta, self.params()?.zeta)
            }
        }
    }
}

/// Outcome of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// Held.
    Pass,
    /// Violated.
    Fail,
    /// Not applicable.
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl From<Option<bool>> for Flag {
    fn from(v: Option<bool>) -> Self {
        match v {
            Some(true) => Flag::Pass,
            Some(false) => Flag::Fail,
            None => Flag::NotApplicable,
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::Pass => "pass",
            Flag::Fail => "fail",
            Flag::NotApplicable => "n/a",
        })
    }
}

/// One report row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    /// Estimator.
    pub estimator: EstimatorKind,
    /// Sampling effort, `None` for full observations.
    pub lambda: Option<f64>,
    /// Seed.
    pub seed: u64,
    /// `‖M_{π̂⁻¹} − M_{π*⁻¹}‖²_F`.
    pub perm_loss: f64,
    /// Largest squared row displacement.
    pub linf_loss: f64,
    /// Largest squared distance of an inverted pair.
    pub lerr_loss: f64,
    /// `‖M̂ − M‖²_F` when requested.
    pub matrix_loss: Option<f64>,
    /// Block-sort property at every node.
    pub prop1_ok: Flag,
    /// Sandwich inclusion for every `(h, r)` at the root.
    pub sandwich_ok: Flag,
    /// Loss bound given the property.
    pub lossgen_ok: Flag,
    /// Wall-clock time of the estimator.
    pub runtime_ms: f64,
    /// Error message when the cell failed.
    pub error: Option<String>,
}

/// All rows of a campaign in deterministic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Rows ordered by seed, sampling effort, estimator.
    pub rows: Vec<ExperimentRow>,
}

/// Header of the report CSV.
pub const REPORT_COLUMNS: [&str; 11] = [
    "estimator",
    "lambda",
    "seed",
    "perm_loss",
    "linf_loss",
    "lerr_loss",
    "matrix_loss",
    "prop1_ok",
    "sandwich_ok",
    "lossgen_ok",
    "runtime_ms",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    /// Writes the fixed-schema CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.estimator.name().to_string(),
                fmt_opt(r.lambda),
                r.seed.to_string(),
                r.perm_loss.to_string(),
                r.linf_loss.to_string(),
                r.lerr_loss.to_string(),
                fmt_opt(r.matrix_loss),
                r.prop1_ok.to_string(),
                r.sandwich_ok.to_string(),
                r.lossgen_ok.to_string(),
                r.runtime_ms.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Losses of one estimator at one sampling effort, in seed order, failed cells skipped.
    pub fn losses(&self, estimator: EstimatorKind, lambda: Option<f64>) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.estimator == estimator && r.lambda == lambda && r.error.is_none())
            .map(|r| r.perm_loss)
            .collect()
    }

    /// Rows whose cell failed.
    pub fn errors(&self) -> Vec<&ExperimentRow> {
        self.rows.iter().filter(|r| r.error.is_some()).collect()
    }

    /// Per `(estimator, λ)` mean loss with a 95% interval, plus the ratio to
    /// `baseline` (paired by seed) when given.
    pub fn write_summary_csv<W: Write>(&self, baseline: Option<EstimatorKind>, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "estimator", "lambda", "count", "mean", "se", "ci_lo", "ci_hi", "ratio", "ratio_lo", "ratio_hi",
        ])?;
        let mut cells: Vec<(EstimatorKind, Option<f64>)> = Vec::new();
        for r in &self.rows {
            if !cells.iter().any(|&(e, l)| e == r.estimator && l == r.lambda) {
                cells.push((r.estimator, r.lambda));
            }
        }
        for (est, lambda) in cells {
            let s = summarize(&self.losses(est, lambda));
            let ratio = baseline.map(|b| self.paired_ratio(est, b, lambda));
            w.write_record([
                est.name().to_string(),
                fmt_opt(lambda),
                s.count.to_string(),
                s.mean.to_string(),
                s.se.to_string(),
                s.lo.to_string(),
                s.hi.to_string(),
                fmt_opt(ratio.map(|r| r.mean)),
                fmt_opt(ratio.map(|r| r.lo)),
                fmt_opt(ratio.map(|r| r.hi)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Ratio of mean losses `a / b` over seeds where both succeeded.
    pub fn paired_ratio(&self, a: EstimatorKind, b: EstimatorKind, lambda: Option<f64>) -> super::stats::Summary {
        let (xa, xb) = self.paired(a, b, lambda);
        ratio_of_means(&xa, &xb)
    }

    /// Losses of `a` and `b` on the seeds where both succeeded.
    pub fn paired(&self, a: EstimatorKind, b: EstimatorKind, lambda: Option<f64>) -> (Vec<f64>, Vec<f64>) {
        let find = |e: EstimatorKind, seed: u64| {
            self.rows
                .iter()
                .find(|r| r.estimator == e && r.lambda == lambda && r.seed == seed && r.error.is_none())
                .map(|r| r.perm_loss)
        };
        let mut seeds: Vec<u64> = self.rows.iter().map(|r| r.seed).collect();
        seeds.dedup();
        seeds
            .into_iter()
            .filter_map(|s| Some((find(a, s)?, find(b, s)?)))
            .unzip()
    }
}

/// Caps the global thread pool at `ISORANK_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("ISORANK_THREADS") {
        let threads: usize = value
            .parse()
            .map_err(|_| invalid(format!("ISORANK_THREADS must be a positive integer, got {value:?}")))?;
        // The pool can only be built once per process; later calls keep the first setting.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    Ok(())
}

struct Ranked {
    pi_hat: Permutation,
    m_hat: Option<Matrix>,
    trace: Option<TreeSortOutput>,
}

fn project_with(y: &Matrix, pi: &Permutation) -> Result<Matrix> {
    let (b, _) = project_bi_isotonic(&permute_rows(y, pi), &ProjectionSettings::default())?;
    let mut out = Matrix::zeros(b.raw_dim());
    for e in 0..y.nrows() {
        out.row_mut(e).assign(&b.row(pi.rank(e)));
    }
    Ok(out)
}

fn mean_sample(pool: &[Matrix]) -> Matrix {
    let mut acc = Matrix::zeros(pool[0].raw_dim());
    for y in pool {
        acc += y;
    }
    acc / pool.len() as f64
}

fn run_full(
    cfg: &ExperimentConfig,
    est: EstimatorKind,
    pool: &[Matrix],
    params: &TrisectionParams,
    budget: &SampleBudget,
    rng: &mut Rng,
) -> Result<Ranked> {
    let (pi_hat, trace) = match est.variant() {
        Some(v) => {
            let out = tree_sort(pool, &params.for_variant(v), budget, rng)?;
            (out.pi_hat.clone(), Some(out))
        }
        None if est == EstimatorKind::Borda => (borda_rank_pool(pool)?, None),
        None => return Err(invalid(format!("estimator {} needs Poisson observations", est.name()))),
    };
    let m_hat = if cfg.matrix_loss {
        Some(project_with(&mean_sample(pool), &pi_hat)?)
    } else {
        None
    };
    Ok(Ranked { pi_hat, m_hat, trace })
}

fn rank_log(
    est: EstimatorKind,
    log: &ObservationLog,
    params: &TrisectionParams,
    mode: BudgetMode,
    rng: &mut Rng,
) -> Result<(Permutation, Option<TreeSortOutput>)> {
    match est {
        EstimatorKind::Wmp => {
            let out = estimate_wmp(log, params, mode, rng)?;
            let trace = match out.outcome {
                WmpOutcome::Tree(t) => Some(*t),
                _ => None,
            };
            Ok((out.pi_hat, trace))
        }
        EstimatorKind::Borda => Ok((borda_rank_log(log), None)),
        EstimatorKind::Pc => Ok((pairwise_estimator(log, params, mode, rng)?.pi_hat, None)),
        other => Err(invalid(format!("estimator {} needs full observations", other.name()))),
    }
}

fn run_poisson(
    cfg: &ExperimentConfig,
    est: EstimatorKind,
    log: &ObservationLog,
    params: &TrisectionParams,
    rng: &mut Rng,
) -> Result<Ranked> {
    let (pi_hat, trace) = rank_log(est, log, params, cfg.mode, rng)?;
    let m_hat = if cfg.matrix_loss {
        let (first, second) = log.thin(rng);
        let (pi_half, _) = rank_log(est, &first, params, cfg.mode, rng)?;
        Some(estimate_matrix(&second, &pi_half, &ProjectionSettings::default())?.0)
    } else {
        None
    };
    Ok(Ranked { pi_hat, m_hat, trace })
}

fn score(
    cfg: &ExperimentConfig,
    inst: &ProblemInstance,
    est: EstimatorKind,
    lambda: Option<f64>,
    seed: u64,
    sandwich_flag: Flag,
    t_inf: usize,
    run: impl FnOnce() -> Result<Ranked>,
) -> ExperimentRow {
    let start = Instant::now();
    let outcome = run();
    let runtime_ms = if cfg.timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    let mut row = ExperimentRow {
        estimator: est,
        lambda,
        seed,
        perm_loss: f64::NAN,
        linf_loss: f64::NAN,
        lerr_loss: f64::NAN,
        matrix_loss: None,
        prop1_ok: Flag::NotApplicable,
        sandwich_ok: Flag::NotApplicable,
        lossgen_ok: Flag::NotApplicable,
        runtime_ms,
        error: None,
    };
    let filled = outcome.and_then(|ranked| {
        row.perm_loss = perm_loss(&inst.m, &ranked.pi_hat, &inst.pi_star)?;
        row.linf_loss = linf_loss(&inst.m, &ranked.pi_hat, &inst.pi_star)?;
        row.lerr_loss = lerr_loss(&inst.m, &ranked.pi_hat, &inst.pi_star)?;
        if let Some(m_hat) = &ranked.m_hat {
            row.matrix_loss = Some(matrix_loss(m_hat, &inst.m)?);
        }
        if cfg.checks {
            if let Some(trace) = &ranked.trace {
                let lg = loss_general(inst, trace, t_inf)?;
                row.prop1_ok = Flag::from(Some(lg.property1));
                row.lossgen_ok = Flag::from(lg.holds());
            }
            if est == EstimatorKind::Ht {
                row.sandwich_ok = sandwich_flag;
            }
        }
        Ok(())
    });
    if let Err(e) = filled {
        row.error = Some(e.to_string());
    }
    row
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<ExperimentRow>> {
    let params = cfg.params()?;
    let mut inst_rng = stream(cfg.instance_seed.unwrap_or(seed), streams::INSTANCE);
    let inst = cfg.instance.generate(cfg.noise.zeta(), &mut inst_rng)?;
    let mut rows = Vec::new();
    match &cfg.observations {
        ObservationSpec::Full { upsilon } => {
            let budget = cfg.budget()?;
            let count = match upsilon {
                Some(u) => *u,
                None => usize::try_from(budget.upsilon_star)
                    .ok()
                    .filter(|&u| u <= 1 << 20)
                    .ok_or_else(|| invalid("sample budget too large; set observations.upsilon"))?,
            }
            .max(1);
            let mut obs_rng = stream(seed, streams::OBSERVATIONS);
            let pool = sample_full_observations(&inst, count, &cfg.noise, &mut obs_rng)?;
            let sandwich_flag = if cfg.checks {
                let root: Vec<usize> = (0..inst.n()).collect();
                Flag::from(Some(sandwich(&inst.m, &pool[0], &root, &params)?.all()))
            } else {
                Flag::NotApplicable
            };
            for (e, &est) in cfg.estimators.iter().enumerate() {
                let mut rng = substream(seed, streams::ESTIMATOR, e as u64);
                rows.push(score(cfg, &inst, est, None, seed, sandwich_flag, budget.t_inf, || {
                    run_full(cfg, est, &pool, &params, &budget, &mut rng)
                }));
            }
        }
        ObservationSpec::Poisson { lambdas } => {
            let t_inf = SampleBudget::practical(inst.n(), inst.d()).t_inf;
            for (li, &lambda) in lambdas.iter().enumerate() {
                let mut obs_rng = substream(seed, streams::OBSERVATIONS, li as u64);
                let log = sample_poisson_observations(&inst, lambda, &cfg.noise, &mut obs_rng)?;
                for (e, &est) in cfg.estimators.iter().enumerate() {
                    let index = (li * cfg.estimators.len() + e) as u64;
                    let mut rng = substream(seed, streams::ESTIMATOR, index);
                    rows.push(score(cfg, &inst, est, Some(lambda), seed, Flag::NotApplicable, t_inf, || {
                        run_poisson(cfg, est, &log, &params, &mut rng)
                    }));
                }
            }
        }
    }
    Ok(rows)
}

fn failed_rows(cfg: &ExperimentConfig, seed: u64, message: &str) -> Vec<ExperimentRow> {
    let lambdas: Vec<Option<f64>> = match &cfg.observations {
        ObservationSpec::Full { .. } => vec![None],
        ObservationSpec::Poisson { lambdas } => lambdas.iter().map(|&l| Some(l)).collect(),
    };
    lambdas
        .into_iter()
        .flat_map(|lambda| {
            cfg.estimators.iter().map(move |&est| ExperimentRow {
                estimator: est,
                lambda,
                seed,
                perm_loss: f64::NAN,
                linf_loss: f64::NAN,
                lerr_loss: f64::NAN,
                matrix_loss: None,
                prop1_ok: Flag::NotApplicable,
                sandwich_ok: Flag::NotApplicable,
                lossgen_ok: Flag::NotApplicable,
                runtime_ms: 0.0,
                error: Some(message.to_string()),
            })
        })
        .collect()
}

/// Runs every seed (in parallel) and assembles rows in seed order.
///
/// Failures are recorded per cell; the campaign always completes.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let per_seed: Vec<Vec<ExperimentRow>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(cfg, seed).unwrap_or_else(|e| failed_rows(cfg, seed, &e.to_string())))
        .collect();
    Ok(ExperimentReport {
        rows: per_seed.into_iter().flatten().collect(),
    })
}
