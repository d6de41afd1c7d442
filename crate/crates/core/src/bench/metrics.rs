//! Utility metrics over absolute release errors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

fn nonempty(errors: &[u64]) -> Result<()> {
    if errors.is_empty() {
        Err(invalid("error list is empty"))
    } else {
        Ok(())
    }
}

/// Fraction of errors at or below each threshold.
pub fn error_cdf(errors: &[u64], thresholds: &[u64]) -> Result<BTreeMap<u64, f64>> {
    nonempty(errors)?;
    let n = errors.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| (t, errors.iter().filter(|&&e| e <= t).count() as f64 / n))
        .collect())
}

/// Fraction of errors within the break point.
pub fn within_bound_fraction(errors: &[u64], c_t: f64) -> Result<f64> {
    nonempty(errors)?;
    Ok(errors.iter().filter(|&&e| e as f64 <= c_t).count() as f64 / errors.len() as f64)
}

/// `E(|Y| given |Y| > c_t) * P(|Y| > c_t) / n`, i.e. the summed tail error per sample over the true count.
pub fn mean_relative_error(errors: &[u64], true_count: u64, c_t: f64) -> Result<f64> {
    nonempty(errors)?;
    if true_count == 0 {
        return Err(Error::UndefinedMetric("mean relative error needs a positive true count".into()));
    }
    let tail: u64 = errors.iter().filter(|&&e| e as f64 > c_t).sum();
    Ok(tail as f64 / errors.len() as f64 / true_count as f64)
}

/// Counts of absolute errors; merging two histograms is order-independent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorHistogram {
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl ErrorHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, error: u64) {
        *self.counts.entry(error).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &ErrorHistogram) {
        for (&e, &c) in &other.counts {
            *self.counts.entry(e).or_insert(0) += c;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    fn check(&self) -> Result<()> {
        if self.total == 0 {
            Err(invalid("error histogram is empty"))
        } else {
            Ok(())
        }
    }

    pub fn cdf(&self, threshold: u64) -> Result<f64> {
        self.check()?;
        let below: u64 = self.counts.range(..=threshold).map(|(_, c)| c).sum();
        Ok(below as f64 / self.total as f64)
    }

    pub fn cdf_at(&self, thresholds: &[u64]) -> Result<BTreeMap<u64, f64>> {
        thresholds.iter().map(|&t| Ok((t, self.cdf(t)?))).collect()
    }

    pub fn within_bound_fraction(&self, c_t: f64) -> Result<f64> {
        self.check()?;
        let inside: u64 = self.counts.iter().filter(|(&e, _)| e as f64 <= c_t).map(|(_, c)| c).sum();
        Ok(inside as f64 / self.total as f64)
    }

    pub fn mean_relative_error(&self, true_count: u64, c_t: f64) -> Result<f64> {
        self.check()?;
        if true_count == 0 {
            return Err(Error::UndefinedMetric("mean relative error needs a positive true count".into()));
        }
        let tail: u128 = self
            .counts
            .iter()
            .filter(|(&e, _)| e as f64 > c_t)
            .map(|(&e, &c)| e as u128 * c as u128)
            .sum();
        Ok(tail as f64 / self.total as f64 / true_count as f64)
    }

    /// Smallest threshold whose CDF reaches `level`.
    pub fn threshold_reaching(&self, level: f64) -> Result<u64> {
        self.check()?;
        let mut acc = 0u64;
        for (&e, &c) in &self.counts {
            acc += c;
            if acc as f64 / self.total as f64 >= level {
                return Ok(e);
            }
        }
        Ok(*self.counts.keys().next_back().expect("nonempty"))
    }
}
