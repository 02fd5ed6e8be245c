//! Pivot comparisons, CUSUM dimension reduction, spectral weights and the
//! double trisection of an expert group.

mod cusum;
mod double;
mod pca;
mod pivot;

pub use cusum::{
    cusum, cusum_shifted, dimension_reduction_cp, dimension_reduction_wm, rtilde_cp, rtilde_wm,
    NeighborSums, PaddedSeries,
};
pub use double::{double_trisection, DoubleTrisectionOutput};
pub use pca::{pca_direction, threshold_weights, PowerSettings};
pub use pivot::pivot;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Noise level substituted for `ζ = 0`.
pub const ZETA_EFF: f64 = 1.0 / (1u64 << 40) as f64;

/// Estimator variant threaded through the trisection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Oblivious CUSUM dimension reduction.
    Ht,
    /// Dimension reduction with tree memory.
    Wm,
    /// Memory variant for the semi-random model: shifted statistics and
    /// widened pivot thresholds.
    WmSr,
}

impl Variant {
    /// Lower-case name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Ht => "ht",
            Variant::Wm => "wm",
            Variant::WmSr => "wm_sr",
        }
    }
}

/// Tuning of the trisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrisectionParams {
    /// Aggressive pivot constant, `4√2·ζ` by default.
    pub beta_tris: f64,
    /// Conservative pivot constant, `8√2·ζ` by default.
    pub beta_bar_tris: f64,
    /// Failure budget per concentration event.
    pub delta: f64,
    /// Noise level used by all thresholds (`ζ = 0` is replaced by [`ZETA_EFF`]).
    pub zeta: f64,
    /// Variant.
    pub mode: Variant,
    /// Multiplier on the log-prefactors of `r₀`, `r̃` and neighborhood budgets.
    pub practical_scaling: f64,
    /// Power-iteration settings for the spectral direction.
    pub power: PowerSettings,
}

impl TrisectionParams {
    /// Desk-scale defaults: log-prefactors scaled by 1/64.
    pub fn new(zeta: f64, delta: f64, mode: Variant) -> Result<Self> {
        Self::with_scaling(zeta, delta, mode, 1.0 / 64.0)
    }

    /// Unscaled constants.
    pub fn paper(zeta: f64, delta: f64, mode: Variant) -> Result<Self> {
        Self::with_scaling(zeta, delta, mode, 1.0)
    }

    /// Explicit scaling of the log-prefactors.
    pub fn with_scaling(zeta: f64, delta: f64, mode: Variant, scaling: f64) -> Result<Self> {
        if !(zeta >= 0.0 && zeta.is_finite()) {
            return Err(invalid(format!("zeta must be finite and >= 0, got {zeta}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0,1), got {delta}")));
        }
        if !(scaling > 0.0 && scaling.is_finite()) {
            return Err(invalid("practical scaling must be positive"));
        }
        let z = if zeta == 0.0 { ZETA_EFF } else { zeta };
        Ok(Self {
            beta_tris: 4.0 * 2f64.sqrt() * z,
            beta_bar_tris: 8.0 * 2f64.sqrt() * z,
            delta,
            zeta: z,
            mode,
            practical_scaling: scaling,
            power: PowerSettings::default(),
        })
    }

    /// Same parameters with another variant.
    pub fn for_variant(&self, mode: Variant) -> Self {
        Self { mode, ..self.clone() }
    }

    /// Same parameters with another noise level (pivot constants rescaled).
    pub fn with_zeta(&self, zeta: f64) -> Self {
        let z = if zeta <= 0.0 { ZETA_EFF } else { zeta };
        let ratio = z / self.zeta;
        Self {
            zeta: z,
            beta_tris: self.beta_tris * ratio,
            beta_bar_tris: self.beta_bar_tris * ratio,
            ..self.clone()
        }
    }
}

/// Aggressive and conservative trisections of a group.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrisectionResult {
    /// Experts declared below the pivot.
    pub l: Vec<usize>,
    /// Experts declared above the pivot.
    pub u: Vec<usize>,
    /// Confident subset of `l`.
    pub l_bar: Vec<usize>,
    /// Confident subset of `u`.
    pub u_bar: Vec<usize>,
}

impl TrisectionResult {
    /// Element-wise sorted union.
    pub fn union(&self, other: &Self) -> Self {
        use crate::aggregation::union_sorted;
        Self {
            l: union_sorted(&self.l, &other.l),
            u: union_sorted(&self.u, &other.u),
            l_bar: union_sorted(&self.l_bar, &other.l_bar),
            u_bar: union_sorted(&self.u_bar, &other.u_bar),
        }
    }

    /// True when all four sets are empty.
    pub fn is_empty(&self) -> bool {
        self.l.is_empty() && self.u.is_empty() && self.l_bar.is_empty() && self.u_bar.is_empty()
    }
}

/// Ordered same-depth groups around the current leaf.
///
/// Groups are listed nearest first. Past the real groups, the sequence
/// continues with singleton synthetic experts whose rows are constant one
/// (above) or zero (below).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodContext {
    /// `G^(1), G^(2), …`
    pub above: Vec<Vec<usize>>,
    /// `G^(-1), G^(-2), …`
    pub below: Vec<Vec<usize>>,
}

impl NeighborhoodContext {
    /// Only synthetic neighbors (the root of the tree).
    pub fn root() -> Self {
        Self::default()
    }
}
