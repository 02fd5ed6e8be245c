//! Problem instances, noise models, the padding convention and generators.
//!
//! A [`ProblemInstance`] holds the signal matrix `M` (experts × questions), an
//! oracle permutation `π*` such that the rows of `M` listed in rank order form
//! a bi-isotonic matrix, and the noise level `ζ`.

use ndarray::Array2;
use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::Rng as _;
use rand_distr::{Bernoulli, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::perm::Permutation;
use crate::rng::Rng;

/// Dense real matrix, rows are experts and columns are questions.
pub type Matrix = Array2<f64>;

const MONOTONE_TOL: f64 = 1e-12;

/// Ground truth of a ranking problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    /// Signal matrix, `n × d`, entries in `[0, 1]`.
    pub m: Matrix,
    /// One oracle permutation.
    pub pi_star: Permutation,
    /// Sub-Gaussian noise scale.
    pub zeta: f64,
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    n: usize,
    d: usize,
    zeta: f64,
    pi_star: Vec<usize>,
    #[serde(rename = "M")]
    m: Vec<Vec<f64>>,
}

impl ProblemInstance {
    /// Validates dimensions, range and bi-isotonicity under `pi_star`.
    pub fn new(m: Matrix, pi_star: Permutation, zeta: f64) -> Result<Self> {
        if !(zeta >= 0.0 && zeta.is_finite()) {
            return Err(invalid(format!("noise level must be finite and >= 0, got {zeta}")));
        }
        if !validate_bi_isotonic(&m, &pi_star)? {
            return Err(invalid("matrix is not bi-isotonic in [0,1] under the oracle permutation"));
        }
        Ok(Self { m, pi_star, zeta })
    }

    /// Number of experts.
    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    /// Number of questions.
    pub fn d(&self) -> usize {
        self.m.ncols()
    }

    /// `M` with rows listed in oracle rank order.
    pub fn sorted_matrix(&self) -> Matrix {
        permute_rows(&self.m, &self.pi_star)
    }

    /// Same instance with expert labels drawn uniformly at random.
    pub fn shuffled(&self, rng: &mut Rng) -> Self {
        let n = self.n();
        let mut relabel: Vec<usize> = (0..n).collect();
        relabel.shuffle(rng);
        let mut m = Matrix::zeros(self.m.raw_dim());
        let mut rank = vec![0; n];
        for old in 0..n {
            let new = relabel[old];
            m.row_mut(new).assign(&self.m.row(old));
            rank[new] = self.pi_star.rank(old);
        }
        Self {
            m,
            pi_star: Permutation::from_ranks(rank).expect("relabelled ranks stay a bijection"),
            zeta: self.zeta,
        }
    }

    /// JSON document `{n, d, zeta, pi_star, M}` with `M` row-major.
    pub fn to_json(&self) -> Result<String> {
        let doc = InstanceDoc {
            n: self.n(),
            d: self.d(),
            zeta: self.zeta,
            pi_star: self.pi_star.ranks().to_vec(),
            m: self.m.rows().into_iter().map(|r| r.to_vec()).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses the JSON document written by [`ProblemInstance::to_json`].
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        if doc.m.len() != doc.n || doc.m.iter().any(|r| r.len() != doc.d) {
            return Err(invalid("matrix shape does not match n and d"));
        }
        let flat: Vec<f64> = doc.m.into_iter().flatten().collect();
        let m = Matrix::from_shape_vec((doc.n, doc.d), flat)
            .map_err(|e| invalid(format!("bad matrix: {e}")))?;
        Self::new(m, Permutation::from_ranks(doc.pi_star)?, doc.zeta)
    }
}

/// Rows of `m` listed in rank order of `pi` (row `r` is expert `π⁻¹(r)`).
pub fn permute_rows(m: &Matrix, pi: &Permutation) -> Matrix {
    let mut out = Matrix::zeros(m.raw_dim());
    for (r, e) in pi.order().into_iter().enumerate() {
        out.row_mut(r).assign(&m.row(e));
    }
    out
}

/// Writes a matrix as dense CSV without header.
pub fn write_matrix_csv<W: std::io::Write>(m: &Matrix, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in m.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// Additive `N(0, σ²)` noise.
    Gaussian { sigma: f64 },
    /// `Y_ik ~ Ber(M_ik)`, handled with `ζ = 1`.
    Bernoulli,
    /// `Y = M`.
    None,
}

impl NoiseSpec {
    /// Sub-Gaussian scale the estimators should assume.
    pub fn zeta(&self) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sigma } => sigma,
            NoiseSpec::Bernoulli => 1.0,
            NoiseSpec::None => 0.0,
        }
    }

    /// One noisy draw around `mean`.
    pub fn draw(&self, mean: f64, rng: &mut Rng) -> Result<f64> {
        match *self {
            NoiseSpec::Gaussian { sigma } => {
                let normal = Normal::new(mean, sigma).map_err(|e| invalid(e.to_string()))?;
                Ok(normal.sample(rng))
            }
            NoiseSpec::Bernoulli => {
                let b = Bernoulli::new(mean)
                    .map_err(|_| invalid(format!("Bernoulli mean {mean} outside [0,1]")))?;
                Ok(if b.sample(rng) { 1.0 } else { 0.0 })
            }
            NoiseSpec::None => Ok(mean),
        }
    }
}

/// True iff `M` with rows in rank order of `pi` is bi-isotonic with entries in `[0,1]`.
pub fn validate_bi_isotonic(m: &Matrix, pi: &Permutation) -> Result<bool> {
    if pi.len() != m.nrows() {
        return Err(invalid(format!(
            "permutation has {} experts but matrix has {} rows",
            pi.len(),
            m.nrows()
        )));
    }
    if m.iter().any(|&v| !(-MONOTONE_TOL..=1.0 + MONOTONE_TOL).contains(&v)) {
        return Ok(false);
    }
    Ok(is_bi_isotonic(&permute_rows(m, pi)))
}

/// True iff `b` is nondecreasing along rows and down columns.
pub fn is_bi_isotonic(b: &Matrix) -> bool {
    let (n, d) = b.dim();
    for i in 0..n {
        for k in 0..d {
            if k + 1 < d && b[[i, k]] > b[[i, k + 1]] + MONOTONE_TOL {
                return false;
            }
            if i + 1 < n && b[[i, k]] > b[[i + 1, k]] + MONOTONE_TOL {
                return false;
            }
        }
    }
    true
}

/// Entry of the infinitely extended matrix, 1-based indices.
///
/// Zero when `i ≤ 0` or `k ≤ 0`; one when `i ≥ n+1` or `k ≥ d+1`
/// (with the other index positive); `M_{i,k}` otherwise.
pub fn padded_entry(m: &Matrix, i: i64, k: i64) -> f64 {
    let (n, d) = (m.nrows() as i64, m.ncols() as i64);
    if i <= 0 || k <= 0 {
        0.0
    } else if i > n || k > d {
        1.0
    } else {
        m[[(i - 1) as usize, (k - 1) as usize]]
    }
}

/// Parameters of the staircase lower-bound construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseConfig {
    /// Experts.
    pub n: usize,
    /// Questions.
    pub d: usize,
    /// Group size `ñ`, a power of two dividing `n`.
    pub n_tilde: usize,
    /// Block count `d̃`, a power of two dividing `d`.
    pub d_tilde: usize,
    /// Number of bumped blocks per group, `q ≤ d̃`.
    pub q: usize,
    /// Signal amplitude `υ`.
    pub upsilon: f64,
    /// Normalizer `λ₀`.
    pub lambda0: f64,
    /// Noise level attached to the instance.
    pub zeta: f64,
}

impl StaircaseConfig {
    /// Height of the bump, `υζ/√λ₀`.
    pub fn bump(&self) -> f64 {
        self.upsilon * self.zeta / self.lambda0.sqrt()
    }
}

/// Collection of `size`-subsets of `0..m` with pairwise symmetric difference at
/// least `min_dist`, grown by rejection sampling.
pub fn packing_collection(
    m: usize,
    size: usize,
    min_dist: usize,
    target: usize,
    rng: &mut Rng,
) -> Result<Vec<Vec<usize>>> {
    let mut kept: Vec<Vec<bool>> = Vec::new();
    let mut rejections = 0usize;
    let max_rejections = 10 * m.max(1);
    while kept.len() < target {
        let mut member = vec![false; m];
        for j in index::sample(rng, m, size) {
            member[j] = true;
        }
        let far = kept.iter().all(|other| {
            other.iter().zip(&member).filter(|(a, b)| a != b).count() >= min_dist
        });
        if far {
            kept.push(member);
            rejections = 0;
        } else {
            rejections += 1;
            if rejections > max_rejections {
                return Err(Error::GenerationFailed(format!(
                    "packing of {size}-subsets of {m} with distance {min_dist}: stalled at {} of {target} sets",
                    kept.len()
                )));
            }
        }
    }
    Ok(kept
        .into_iter()
        .map(|mask| (0..m).filter(|&j| mask[j]).collect())
        .collect())
}

/// Staircase instance with sparse per-group bumps.
///
/// Expert `ι·ñ + j` belongs to group `ι` at within-group position `j`. Within
/// each group the unbumped experts rank before the bumped ones.
pub fn gen_staircase_instance(cfg: &StaircaseConfig, rng: &mut Rng) -> Result<ProblemInstance> {
    let StaircaseConfig {
        n,
        d,
        n_tilde,
        d_tilde,
        q,
        ..
    } = *cfg;
    if n_tilde == 0 || !n_tilde.is_power_of_two() || n % n_tilde != 0 {
        return Err(invalid("n_tilde must be a power of two dividing n"));
    }
    if d_tilde == 0 || !d_tilde.is_power_of_two() || d % d_tilde != 0 {
        return Err(invalid("d_tilde must be a power of two dividing d"));
    }
    if q > d_tilde {
        return Err(invalid("q must not exceed d_tilde"));
    }
    if !(cfg.lambda0 > 0.0) || cfg.upsilon < 0.0 || cfg.zeta < 0.0 {
        return Err(invalid("lambda0 must be positive, upsilon and zeta nonnegative"));
    }
    let bump = cfg.bump();
    let cap = (n_tilde as f64 / (4.0 * n as f64)).min(1.0 / (4.0 * d_tilde as f64));
    if 2.0 * bump > cap + 1e-15 {
        return Err(invalid(format!("bump {bump} violates 2·bump <= {cap}")));
    }
    let groups = n / n_tilde;
    let width = d / d_tilde;
    let half = n_tilde / 2;
    let target = 1usize << (n_tilde / 8).min(8);
    let packing = if n_tilde >= 2 {
        packing_collection(n_tilde, half, n_tilde.div_ceil(4), target, rng)?
    } else {
        vec![vec![]]
    };

    let mut m = Matrix::zeros((n, d));
    let mut rank = vec![0; n];
    for g in 0..groups {
        let bumped_rows = packing.choose(rng).expect("packing is nonempty").clone();
        let mut bumped_blocks: Vec<usize> = index::sample(rng, d_tilde, q).into_vec();
        bumped_blocks.sort_unstable();
        let mut is_bumped = vec![false; n_tilde];
        for &j in &bumped_rows {
            is_bumped[j] = true;
        }
        let (mut low, mut high) = (0, n_tilde - bumped_rows.len());
        for j in 0..n_tilde {
            let e = g * n_tilde + j;
            for k in 0..d {
                let kappa = k / width;
                let mut v = (g + 1) as f64 * n_tilde as f64 / (4.0 * n as f64)
                    + (kappa + 1) as f64 / (4.0 * d_tilde as f64);
                if is_bumped[j] && bumped_blocks.binary_search(&kappa).is_ok() {
                    v += bump;
                }
                m[[e, k]] = v;
            }
            rank[e] = g * n_tilde
                + if is_bumped[j] {
                    high += 1;
                    high - 1
                } else {
                    low += 1;
                    low - 1
                };
        }
    }
    ProblemInstance::new(m, Permutation::from_ranks(rank)?, cfg.zeta)
}

/// Layout of the two-type toy instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum TwoBlockLayout {
    /// Types coincide except on block `block` (0-based) where they differ by `h`.
    SimpleCp { block: usize },
    /// Lower type rises by `h` per block; the upper type adds `h` on the
    /// blocks flagged in `pattern`.
    SpectralToy { pattern: Vec<bool> },
}

impl TwoBlockLayout {
    /// Spectral toy with `active` flagged blocks spread evenly over `blocks`.
    pub fn spectral(blocks: usize, active: usize) -> Self {
        let mut pattern = vec![false; blocks];
        for a in 0..active.min(blocks) {
            pattern[(2 * a + 1) * blocks / (2 * active)] = true;
        }
        TwoBlockLayout::SpectralToy { pattern }
    }
}

/// Two-type toy instance: experts `0..n/2` are the lower type.
pub fn gen_two_block_instance(
    n: usize,
    d: usize,
    r: usize,
    h: f64,
    layout: &TwoBlockLayout,
    zeta: f64,
) -> Result<ProblemInstance> {
    if n == 0 || n % 2 != 0 {
        return Err(invalid("n must be positive and even"));
    }
    if r == 0 || d % r != 0 {
        return Err(invalid("r must divide d"));
    }
    if !(0.0..=1.0).contains(&h) {
        return Err(invalid("h must lie in [0,1]"));
    }
    let blocks = d / r;
    let mut lower = vec![0.0; d];
    let mut upper = vec![0.0; d];
    match layout {
        TwoBlockLayout::SimpleCp { block } => {
            if *block >= blocks {
                return Err(invalid("block index out of range"));
            }
            for k in 0..d {
                lower[k] = if k >= (block + 1) * r { h } else { 0.0 };
                upper[k] = if k >= block * r { h } else { 0.0 };
            }
        }
        TwoBlockLayout::SpectralToy { pattern } => {
            if pattern.len() != blocks {
                return Err(invalid("pattern length must equal d / r"));
            }
            if blocks as f64 * h > 1.0 + 1e-12 {
                return Err(invalid(format!("h = {h} too large for {blocks} staircase blocks")));
            }
            for k in 0..d {
                let b = k / r;
                lower[k] = b as f64 * h;
                upper[k] = lower[k] + if pattern[b] { h } else { 0.0 };
            }
        }
    }
    let mut m = Matrix::zeros((n, d));
    for i in 0..n {
        let row = if i < n / 2 { &lower } else { &upper };
        for k in 0..d {
            m[[i, k]] = row[k];
        }
    }
    ProblemInstance::new(m, Permutation::identity(n), zeta)
}

/// Instance whose sorted row `i` is `(i + u_k)/n` for a random nondecreasing
/// `u ∈ [0,1)^d`; adjacent rows differ by `1/n` in every column.
pub fn gen_separated_instance(n: usize, d: usize, zeta: f64, rng: &mut Rng) -> Result<ProblemInstance> {
    if n == 0 || d == 0 {
        return Err(invalid("n and d must be positive"));
    }
    let mut u: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    u.sort_by(f64::total_cmp);
    let mut m = Matrix::zeros((n, d));
    for i in 0..n {
        for k in 0..d {
            m[[i, k]] = (i as f64 + u[k]) / n as f64;
        }
    }
    let inst = ProblemInstance::new(m, Permutation::identity(n), zeta)?;
    Ok(inst.shuffled(rng))
}

/// Random bi-isotonic instance: a random convex combination of `components`
/// upper-right quadrant indicators, with shuffled expert labels.
pub fn gen_random_instance(
    n: usize,
    d: usize,
    components: usize,
    zeta: f64,
    rng: &mut Rng,
) -> Result<ProblemInstance> {
    if n == 0 || d == 0 {
        return Err(invalid("n and d must be positive"));
    }
    let weights: Vec<f64> = (0..components).map(|_| rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let scale = rng.random_range(0.5..1.0) / total;
    let mut m = Matrix::zeros((n, d));
    for w in weights {
        let (i0, k0) = (rng.random_range(0..n), rng.random_range(0..d));
        for i in i0..n {
            for k in k0..d {
                m[[i, k]] += w * scale;
            }
        }
    }
    m.mapv_inplace(|v| v.clamp(0.0, 1.0));
    let inst = ProblemInstance::new(m, Permutation::identity(n), zeta)?;
    Ok(inst.shuffled(rng))
}

/// `count` independent noisy copies of `M`.
pub fn sample_full_observations(
    inst: &ProblemInstance,
    count: usize,
    noise: &NoiseSpec,
    rng: &mut Rng,
) -> Result<Vec<Matrix>> {
    if count == 0 {
        return Err(invalid("count must be at least 1"));
    }
    if matches!(noise, NoiseSpec::Bernoulli) && inst.m.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(invalid("Bernoulli noise needs entries in [0,1]"));
    }
    (0..count)
        .map(|_| {
            let mut y = inst.m.clone();
            for v in y.iter_mut() {
                *v = noise.draw(*v, rng)?;
            }
            Ok(y)
        })
        .collect()
}
