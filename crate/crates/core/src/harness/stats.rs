use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// One-sided 95% normal quantile.
pub const Z95_ONE_SIDED: f64 = 1.644_853_626_951_472_2;

/// Sample mean (NaN when empty).
pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance (0 for fewer than two points).
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Standard error of the mean.
pub fn std_error(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 2 {
        return 0.0;
    }
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() - 1) as f64
}

/// Normal-approximation summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Points.
    pub count: usize,
    /// Mean.
    pub mean: f64,
    /// Standard error.
    pub se: f64,
    /// Lower end of the 95% interval.
    pub lo: f64,
    /// Upper end of the 95% interval.
    pub hi: f64,
}

/// Mean with a 95% normal interval.
pub fn summarize(x: &[f64]) -> Summary {
    let (m, se) = (mean(x), std_error(x));
    Summary {
        count: x.len(),
        mean: m,
        se,
        lo: m - Z95 * se,
        hi: m + Z95 * se,
    }
}

/// Ratio of means `ā/b̄` of paired samples with a 95% delta-method interval.
pub fn ratio_of_means(a: &[f64], b: &[f64]) -> Summary {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let (ma, mb) = (mean(a), mean(b));
    let ratio = ma / mb;
    let var = (variance(a) + ratio * ratio * variance(b) - 2.0 * ratio * covariance(a, b))
        / (mb * mb * n as f64);
    let se = var.max(0.0).sqrt();
    Summary {
        count: n,
        mean: ratio,
        se,
        lo: ratio - Z95 * se,
        hi: ratio + Z95 * se,
    }
}

/// Paired z-statistic of `mean(a − b)`.
pub fn paired_z(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let se = std_error(&diff);
    let m = mean(&diff);
    if se == 0.0 {
        if m == 0.0 {
            0.0
        } else {
            m.signum() * f64::INFINITY
        }
    } else {
        m / se
    }
}
