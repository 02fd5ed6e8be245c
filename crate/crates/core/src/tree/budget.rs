use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::Matrix;

/// Sample accounting regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    /// Fresh samples for every draw; exhausting the pool is an error.
    Paper,
    /// The pool is cycled and reuse is counted; block sort may exit early.
    Practical,
}

/// Iteration and sample budget of tree sort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBudget {
    /// Block-sort iterations `τ_∞`.
    pub tau_inf: u64,
    /// Depth cap `t_∞ = ⌈log₂ n⌉`.
    pub t_inf: usize,
    /// Total samples `Υ* = 6·τ_∞·t_∞` (saturating).
    pub upsilon_star: u64,
    /// Accounting regime.
    pub mode: BudgetMode,
}

fn depth_cap(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

impl SampleBudget {
    /// Budget with an explicit iteration count.
    pub fn custom(tau_inf: u64, n: usize, mode: BudgetMode) -> Result<Self> {
        if tau_inf == 0 {
            return Err(invalid("tau_inf must be at least 1"));
        }
        let t_inf = depth_cap(n);
        Ok(Self {
            tau_inf,
            t_inf,
            upsilon_star: 6u64.saturating_mul(tau_inf).saturating_mul(t_inf as u64),
            mode,
        })
    }

    /// `τ_∞ = max(3, ⌈log₂(nd)⌉)` with early exit and pool cycling.
    pub fn practical(n: usize, d: usize) -> Self {
        let nd = (n.max(1) * d.max(1)) as f64;
        let tau = (nd.log2().ceil() as u64).max(3);
        Self::custom(tau, n, BudgetMode::Practical).expect("tau is positive")
    }

    /// `τ_∞ = ⌈4·10⁷ log⁷(nd/(δζ₋²))⌉` with `ζ₋ = ζ ∧ 1`.
    pub fn paper(n: usize, d: usize, delta: f64, zeta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) || !(zeta > 0.0) {
            return Err(invalid("paper budget needs delta in (0,1) and zeta > 0"));
        }
        let zm = zeta.min(1.0);
        let l = ((n * d) as f64 / (delta * zm * zm)).ln().max(0.0);
        let tau = 4e7 * l.powi(7);
        let tau = if tau >= u64::MAX as f64 { u64::MAX } else { tau.ceil().max(1.0) as u64 };
        Self::custom(tau, n, BudgetMode::Paper)
    }
}

/// Hands out samples by global index.
#[derive(Debug)]
pub struct SampleScheduler<'a> {
    pool: &'a [Matrix],
    mode: BudgetMode,
    reused: AtomicU64,
}

impl<'a> SampleScheduler<'a> {
    /// Scheduler over `pool`.
    pub fn new(pool: &'a [Matrix], mode: BudgetMode) -> Result<Self> {
        if pool.is_empty() {
            return Err(invalid("sample pool is empty"));
        }
        Ok(Self {
            pool,
            mode,
            reused: AtomicU64::new(0),
        })
    }

    /// Sample number `index`.
    pub fn draw(&self, index: u64) -> Result<&'a Matrix> {
        let len = self.pool.len() as u64;
        if index < len {
            return Ok(&self.pool[index as usize]);
        }
        match self.mode {
            BudgetMode::Paper => Err(Error::BudgetExhausted {
                requested: index,
                available: self.pool.len(),
            }),
            BudgetMode::Practical => {
                self.reused.fetch_add(1, Ordering::Relaxed);
                Ok(&self.pool[(index % len) as usize])
            }
        }
    }

    /// Draws that reused a sample already in the pool.
    pub fn reuse_count(&self) -> u64 {
        self.reused.load(Ordering::Relaxed)
    }

    /// Accounting regime.
    pub fn mode(&self) -> BudgetMode {
        self.mode
    }

    /// Shape of the samples.
    pub fn dim(&self) -> (usize, usize) {
        self.pool[0].dim()
    }
}
