//! Poisson observation logs, their reduction to full-observation samples and
//! the assembled estimator for partial observations.
//!
//! Expert and question indices in logs are 0-based.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Matrix, NoiseSpec, ProblemInstance};
use crate::perm::Permutation;
use crate::rng::Rng;
use crate::tree::{tree_sort, BudgetMode, SampleBudget, TreeSortOutput};
use crate::trisection::{TrisectionParams, Variant};

/// One observation `(x_t, y_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Expert.
    pub i: usize,
    /// Question.
    pub k: usize,
    /// Observed value.
    pub y: f64,
}

/// Poisson-sampled observations of an `n × d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationLog {
    /// Experts.
    pub n: usize,
    /// Questions.
    pub d: usize,
    /// Sampling effort (expected observations per entry).
    pub lambda: f64,
    /// Records in arrival order.
    pub records: Vec<Observation>,
}

impl ObservationLog {
    /// Log with bounds-checked records.
    pub fn new(n: usize, d: usize, lambda: f64, records: Vec<Observation>) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        if let Some(bad) = records.iter().find(|o| o.i >= n || o.k >= d || !o.y.is_finite()) {
            return Err(invalid(format!("record {bad:?} out of bounds for {n}×{d}")));
        }
        Ok(Self { n, d, lambda, records })
    }

    /// Writes CSV rows `i,k,y` with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for rec in &self.records {
            w.serialize(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads CSV rows `i,k,y` (with header) for an `n × d` matrix.
    pub fn read_csv<R: Read>(input: R, n: usize, d: usize, lambda: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let records = r.deserialize().collect::<std::result::Result<Vec<Observation>, _>>()?;
        Self::new(n, d, lambda, records)
    }

    /// Observations of the listed experts, relabelled `0..experts.len()`.
    pub fn restrict(&self, experts: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (a, &e) in experts.iter().enumerate() {
            map[e] = a;
        }
        Self {
            n: experts.len(),
            d: self.d,
            lambda: self.lambda,
            records: self
                .records
                .iter()
                .filter(|o| map[o.i] != usize::MAX)
                .map(|o| Observation { i: map[o.i], ..*o })
                .collect(),
        }
    }

    /// Splits records independently with probability ½ each; both halves
    /// carry intensity `λ/2`.
    pub fn thin(&self, rng: &mut Rng) -> (Self, Self) {
        use rand::Rng as _;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for rec in &self.records {
            if rng.random_bool(0.5) {
                a.push(*rec);
            } else {
                b.push(*rec);
            }
        }
        let half = |records| Self {
            n: self.n,
            d: self.d,
            lambda: self.lambda / 2.0,
            records,
        };
        (half(a), half(b))
    }
}

/// Per-entry `Poi(λ)` multiplicities with independent noisy draws, shuffled.
pub fn sample_poisson_observations(
    inst: &ProblemInstance,
    lambda: f64,
    noise: &NoiseSpec,
    rng: &mut Rng,
) -> Result<ObservationLog> {
    let poisson = Poisson::new(lambda).map_err(|e| invalid(format!("lambda {lambda}: {e}")))?;
    let (n, d) = (inst.n(), inst.d());
    let mut records = Vec::new();
    for i in 0..n {
        for k in 0..d {
            let count = poisson.sample(rng) as usize;
            for _ in 0..count {
                records.push(Observation {
                    i,
                    k,
                    y: noise.draw(inst.m[[i, k]], rng)?,
                });
            }
        }
    }
    records.shuffle(rng);
    ObservationLog::new(n, d, lambda, records)
}

/// Sampling regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `λ₋ ≤ 2/d`: no better than a random guess.
    VerySmall,
    /// `λ₋ ∈ (2/d, 1]`: one observation per column bin.
    Small,
    /// `λ₋ > 1`: batches of observations averaged per entry.
    Large,
}

/// Reduction of a log to `Υ*` full-observation samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionPlan {
    /// Regime.
    pub regime: Regime,
    /// `λ₋ = λ/(4Υ*)`.
    pub lambda_minus: f64,
    /// Bin width `⌊1/λ₋⌋` in the small regime.
    pub l_lambda: Option<usize>,
    /// Columns of the reduced samples.
    pub reduced_d: usize,
    /// Number of reduced samples.
    pub upsilon_star: u64,
    /// Budget the tree sort will run with.
    pub budget: SampleBudget,
}

/// Plan for a given tree-sort budget.
pub fn plan_with_budget(lambda: f64, d: usize, budget: SampleBudget) -> Result<ReductionPlan> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    let upsilon = budget.upsilon_star.max(1);
    let lambda_minus = lambda / (4.0 * upsilon as f64);
    let (regime, l_lambda, reduced_d) = if lambda_minus <= 2.0 / d as f64 {
        (Regime::VerySmall, None, d)
    } else if lambda_minus <= 1.0 {
        let l = (1.0 / lambda_minus).floor() as usize;
        (Regime::Small, Some(l), d / l)
    } else {
        (Regime::Large, None, d)
    };
    Ok(ReductionPlan {
        regime,
        lambda_minus,
        l_lambda,
        reduced_d,
        upsilon_star: upsilon,
        budget,
    })
}

/// Plan with the budget of the chosen mode; paper mode evaluates `Υ*` at
/// noise level `ζ/√(λ∨1)`.
pub fn plan_reduction(
    lambda: f64,
    n: usize,
    d: usize,
    zeta: f64,
    delta: f64,
    mode: BudgetMode,
) -> Result<ReductionPlan> {
    let budget = match mode {
        BudgetMode::Practical => SampleBudget::practical(n, d),
        BudgetMode::Paper => {
            let z = if zeta > 0.0 { zeta } else { crate::trisection::ZETA_EFF };
            SampleBudget::paper(n, d, delta, z / lambda.max(1.0).sqrt())?
        }
    };
    plan_with_budget(lambda, d, budget)
}

/// Failure budget `ζ₋²/((λ∨1)nd)²` with `ζ₋ = ζ ∧ 1`, the value under which
/// the partial-observation risk bound is stated.
pub fn risk_bound_delta(zeta: f64, lambda: f64, n: usize, d: usize) -> f64 {
    let zm = zeta.min(1.0);
    let size = lambda.max(1.0) * (n * d) as f64;
    zm * zm / (size * size)
}

/// The `Υ*` reduced samples, or the first cell lacking observations.
pub fn reduce_observations(log: &ObservationLog, plan: &ReductionPlan) -> Result<Vec<Matrix>> {
    let count = usize::try_from(plan.upsilon_star)
        .map_err(|_| invalid("sample budget does not fit in memory"))?;
    let (width, per_sample, cols) = match plan.regime {
        Regime::VerySmall => return Err(invalid("the very small regime has no reduction")),
        Regime::Small => (plan.l_lambda.expect("small regime has a bin width"), 1, plan.reduced_d),
        Regime::Large => (1, plan.lambda_minus.floor() as usize, log.d),
    };
    if cols == 0 {
        return Err(invalid("reduction leaves no columns"));
    }
    let needed = count.saturating_mul(per_sample);
    let mut cells: Vec<Vec<f64>> = vec![Vec::new(); log.n * cols];
    for rec in &log.records {
        let bin = rec.k / width;
        if bin < cols {
            let cell = &mut cells[rec.i * cols + bin];
            if cell.len() < needed {
                cell.push(rec.y);
            }
        }
    }
    if let Some(pos) = cells.iter().position(|c| c.len() < needed) {
        return Err(Error::InsufficientObservations {
            expert: pos / cols,
            bin: pos % cols,
            needed,
            have: cells[pos].len(),
        });
    }
    let mut out = vec![Matrix::zeros((log.n, cols)); count];
    for (pos, cell) in cells.iter().enumerate() {
        let (i, j) = (pos / cols, pos % cols);
        for (s, y) in out.iter_mut().enumerate() {
            let batch = &cell[s * per_sample..(s + 1) * per_sample];
            y[[i, j]] = batch.iter().sum::<f64>() / per_sample as f64;
        }
    }
    Ok(out)
}

/// How the estimator produced its permutation.
#[derive(Debug, Clone, PartialEq)]
pub enum WmpOutcome {
    /// Very small regime: uniform random permutation.
    RandomGuess,
    /// Reduction failed: arbitrary (uniform random) permutation.
    ReductionFailed(String),
    /// Tree sort on the reduced samples.
    Tree(Box<TreeSortOutput>),
}

/// Permutation estimate from a Poisson log.
#[derive(Debug, Clone, PartialEq)]
pub struct WmpOutput {
    /// Estimate.
    pub pi_hat: Permutation,
    /// Reduction plan used.
    pub plan: ReductionPlan,
    /// Path taken.
    pub outcome: WmpOutcome,
}

/// Estimator for partial observations with the plan of the chosen budget mode.
///
/// `params.zeta` is the noise level of a single observation.
pub fn estimate_wmp(
    log: &ObservationLog,
    params: &TrisectionParams,
    mode: BudgetMode,
    rng: &mut Rng,
) -> Result<WmpOutput> {
    let plan = plan_reduction(log.lambda, log.n, log.d, params.zeta, params.delta, mode)?;
    estimate_wmp_with_plan(log, params, &plan, rng)
}

/// Estimator for partial observations with an explicit plan.
pub fn estimate_wmp_with_plan(
    log: &ObservationLog,
    params: &TrisectionParams,
    plan: &ReductionPlan,
    rng: &mut Rng,
) -> Result<WmpOutput> {
    let random = |rng: &mut Rng| Permutation::random(log.n, rng);
    if log.n <= 1 || plan.regime == Regime::VerySmall {
        return Ok(WmpOutput {
            pi_hat: random(rng),
            plan: *plan,
            outcome: WmpOutcome::RandomGuess,
        });
    }
    let pool = match reduce_observations(log, plan) {
        Ok(pool) => pool,
        Err(e @ Error::InsufficientObservations { .. }) => {
            return Ok(WmpOutput {
                pi_hat: random(rng),
                plan: *plan,
                outcome: WmpOutcome::ReductionFailed(e.to_string()),
            })
        }
        Err(e) => return Err(e),
    };
    let tuned = match plan.regime {
        Regime::Small => params.for_variant(Variant::WmSr),
        _ => params
            .for_variant(Variant::Wm)
            .with_zeta(params.zeta / plan.lambda_minus.floor().sqrt()),
    };
    let out = tree_sort(&pool, &tuned, &plan.budget, rng)?;
    Ok(WmpOutput {
        pi_hat: out.pi_hat.clone(),
        plan: *plan,
        outcome: WmpOutcome::Tree(Box::new(out)),
    })
}
