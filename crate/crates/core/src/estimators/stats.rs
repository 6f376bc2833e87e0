//! Aggregation of per-shot values.

use crate::error::{arg, Result};

/// A Monte-Carlo mean with its per-shot values.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Unbiased sample variance of the per-shot values.
    pub variance: f64,
    pub values: Vec<f64>,
}

impl Estimate {
    pub fn from_values(values: Vec<f64>) -> Self {
        let (mean, variance) = mean_and_variance(&values);
        Estimate { mean, variance, values }
    }

    pub fn shots(&self) -> usize {
        self.values.len()
    }

    /// Standard error of the mean.
    pub fn std_err(&self) -> f64 {
        if self.values.is_empty() {
            return f64::NAN;
        }
        (self.variance / self.values.len() as f64).sqrt()
    }

    /// Running means after each of `checkpoints` values.
    pub fn running_means(&self, checkpoints: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut acc = 0.0;
        let mut seen = 0;
        for &c in checkpoints {
            let c = c.min(self.values.len());
            while seen < c {
                acc += self.values[seen];
                seen += 1;
            }
            out.push(if c == 0 { f64::NAN } else { acc / c as f64 });
        }
        out
    }
}

/// Mean and unbiased variance (zero variance for fewer than two values).
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let len = values.len();
    if len == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / len as f64;
    if len == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (len - 1) as f64)
}

/// Median of `batches` equal batch means; a trailing remainder is dropped.
pub fn median_of_means(values: &[f64], batches: usize) -> Result<f64> {
    if batches == 0 {
        return arg("median of means needs at least one batch");
    }
    let size = values.len() / batches;
    if size == 0 {
        return arg(format!("{} values cannot fill {batches} batches", values.len()));
    }
    let mut means: Vec<f64> = values
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let mid = means.len() / 2;
    Ok(if means.len() % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    })
}

/// Batch size `⌈34·Var/ε²⌉` for a median-of-means batch.
pub fn mom_batch_size(variance: f64, epsilon: f64) -> usize {
    (34.0 * variance / (epsilon * epsilon)).ceil().max(1.0) as usize
}

/// Root-mean-square deviation of repeated estimates from the exact value.
pub fn rms_error(estimates: &[f64], exact: f64) -> f64 {
    if estimates.is_empty() {
        return f64::NAN;
    }
    (estimates.iter().map(|e| (e - exact).powi(2)).sum::<f64>() / estimates.len() as f64).sqrt()
}
