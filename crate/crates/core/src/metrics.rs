//! MSLE scoring and paired significance testing.

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {left} predictions vs {right} labels")]
    Length { left: usize, right: usize },
    #[error("need at least {min} values, got {got}")]
    TooFew { min: usize, got: usize },
    #[error("entry {index} is {value}, expected a finite value >= 0")]
    Negative { index: usize, value: f64 },
}

/// Natural log is used throughout; switch here for a different base.
fn log1p(x: f64) -> f64 {
    x.ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub msle: f64,
    pub per_cascade_sle: Vec<f64>,
    pub n: usize,
}

impl EvalReport {
    pub fn from_sle(per_cascade_sle: Vec<f64>) -> Self {
        let n = per_cascade_sle.len();
        let msle = if n == 0 {
            0.0
        } else {
            per_cascade_sle.iter().sum::<f64>() / n as f64
        };
        Self {
            msle,
            per_cascade_sle,
            n,
        }
    }
}

/// Squared log error of one prediction, `(ln(p+1) - ln(a+1))²`.
pub fn sle(predicted: f64, actual: f64) -> f64 {
    let d = log1p(predicted) - log1p(actual);
    d * d
}

pub fn msle(predicted_growth: &[f64], actual_growth: &[f64]) -> Result<EvalReport, MetricError> {
    if predicted_growth.len() != actual_growth.len() {
        return Err(MetricError::Length {
            left: predicted_growth.len(),
            right: actual_growth.len(),
        });
    }
    if predicted_growth.is_empty() {
        return Err(MetricError::TooFew { min: 1, got: 0 });
    }
    for (i, &v) in predicted_growth.iter().chain(actual_growth).enumerate() {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(MetricError::Negative {
                index: i % predicted_growth.len(),
                value: v,
            });
        }
    }
    Ok(EvalReport::from_sle(
        predicted_growth
            .iter()
            .zip(actual_growth)
            .map(|(&p, &a)| sle(p, a))
            .collect(),
    ))
}

/// Two-sided paired t-test on per-cascade SLE vectors.
///
/// When every difference is identical the statistic is undefined; the
/// p-value is then 1 if that difference is zero and 0 otherwise.
pub fn compare_significance(sle_a: &[f64], sle_b: &[f64]) -> Result<f64, MetricError> {
    if sle_a.len() != sle_b.len() {
        return Err(MetricError::Length {
            left: sle_a.len(),
            right: sle_b.len(),
        });
    }
    let n = sle_a.len();
    if n < 2 {
        return Err(MetricError::TooFew { min: 2, got: n });
    }
    let diffs: Vec<f64> = sle_a.iter().zip(sle_b).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Ok(if mean == 0.0 { 1.0 } else { 0.0 });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("df >= 1");
    Ok((2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0))
}

/// Conventional star annotation for a p-value (0.01 / 0.05 / 0.1 levels).
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}
