//! Log-log regression and the two-sample chi-square test.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("not enough counts for a chi-square test after pooling")]
    InsufficientCounts,
}

/// Least-squares fit of `log y = intercept + slope · log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr_slope: f64,
    pub r_squared: f64,
    /// Smallest and largest `x` used.
    pub range: (f64, f64),
    pub points: usize,
}

impl PowerLawFit {
    /// Whether two slopes agree within `k` joint standard errors.
    pub fn agrees_with(&self, other: &PowerLawFit, k: f64) -> bool {
        let joint = (self.stderr_slope.powi(2) + other.stderr_slope.powi(2)).sqrt();
        (self.slope - other.slope).abs() <= k * joint
    }
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit, StatsError> {
    if points.len() < 3 {
        return Err(StatsError::DegenerateInput("fewer than three points"));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(StatsError::DegenerateInput("nonpositive or non-finite value"));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= 1e-12 * (1.0 + mx * mx) {
        return Err(StatsError::DegenerateInput("all x values equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr_slope = (ssr.max(0.0) / (n - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { (1.0 - ssr / syy).clamp(0.0, 1.0) } else { 1.0 };
    let xs = points.iter().map(|p| p.0);
    let range = (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max));
    Ok(PowerLawFit { slope, intercept, stderr_slope, r_squared, range, points: points.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Categories left after pooling.
    pub categories: usize,
}

/// Smallest expected count allowed in a category.
pub const MIN_EXPECTED: f64 = 5.0;

/// Two-sample chi-square test of homogeneity. Categories whose smaller
/// expected count is below [`MIN_EXPECTED`] are pooled, rarest first, until
/// every remaining category meets it. Ties in rarity keep the input order,
/// so the pooling never looks at how a category's count splits between the
/// two samples.
pub fn two_sample_chi_square(a: &[u64], b: &[u64]) -> Result<ChiSquareTest, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::DegenerateInput("count vectors differ in length"));
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(StatsError::InsufficientCounts);
    }
    let total = (na + nb) as f64;
    let (fa, fb) = (na as f64 / total, nb as f64 / total);
    let expected_min = |t: u64| t as f64 * fa.min(fb);
    let mut cats: Vec<(u64, u64)> = a.iter().zip(b).map(|(&x, &y)| (x, y)).filter(|c| c.0 + c.1 > 0).collect();
    cats.sort_by_key(|c| c.0 + c.1);
    let mut pooled: Vec<(u64, u64)> = Vec::new();
    let mut pool = (0u64, 0u64);
    for c in cats {
        if pool.0 + pool.1 > 0 && expected_min(pool.0 + pool.1) >= MIN_EXPECTED {
            pooled.push(pool);
            pool = (0, 0);
        }
        if pool.0 + pool.1 == 0 && expected_min(c.0 + c.1) >= MIN_EXPECTED {
            pooled.push(c);
        } else {
            pool = (pool.0 + c.0, pool.1 + c.1);
        }
    }
    if pool.0 + pool.1 > 0 {
        if expected_min(pool.0 + pool.1) >= MIN_EXPECTED {
            pooled.push(pool);
        } else if let Some(last) = pooled.iter_mut().min_by_key(|c| c.0 + c.1) {
            *last = (last.0 + pool.0, last.1 + pool.1);
        }
    }
    if pooled.len() < 2 {
        return Err(StatsError::InsufficientCounts);
    }
    let mut statistic = 0.0;
    for &(x, y) in &pooled {
        let t = (x + y) as f64;
        let (ea, eb) = (t * fa, t * fb);
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let dof = pooled.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|_| StatsError::InsufficientCounts)?;
    let p_value = if statistic <= 0.0 { 1.0 } else { dist.sf(statistic) };
    Ok(ChiSquareTest { statistic, dof, p_value, categories: pooled.len() })
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
