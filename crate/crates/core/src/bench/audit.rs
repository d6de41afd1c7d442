//! Empirical privacy-loss audit over neighboring datasets.
//!
//! One histogram of integer noise draws is shared by both arms of every
//! neighbor pair, so outcome frequencies differ only through the shift of
//! the true answer. Losses are frequency log-ratios on outcomes seen often
//! enough in both arms.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::accounting::worst_case_eps;
use crate::error::{Error, Result};
use crate::mechanism::MechanismSpec;
use crate::query::{count_query, neighbors, Dataset, QuerySpec};
use crate::sampling::{NoiseSampler, SeededStream};

const REPLICATE_SIZE: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AuditOptions {
    /// Minimum observations of an outcome, per arm, before comparing frequencies.
    pub min_count: u64,
    /// Records removed in turn (capped at the row count).
    pub max_records: usize,
    pub allow_unsafe: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            min_count: 50,
            max_records: 200,
            allow_unsafe: false,
        }
    }
}

/// Counts of integer noise values.
pub type NoiseHistogram = BTreeMap<i64, u64>;

/// Draws `trials` integer noise values (continuous laws rounded).
pub fn noise_histogram(
    spec: &MechanismSpec,
    trials: u64,
    stream: &SeededStream,
    allow_unsafe: bool,
    threads: Option<usize>,
) -> Result<NoiseHistogram> {
    let sampler = NoiseSampler::new(spec, allow_unsafe)?;
    let chunks = trials.div_ceil(REPLICATE_SIZE);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let parts: Vec<NoiseHistogram> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut s = stream.child(&[c]);
                let mut h = NoiseHistogram::new();
                for _ in 0..(trials - c * REPLICATE_SIZE).min(REPLICATE_SIZE) {
                    *h.entry(sampler.sample_integer(&mut s)).or_insert(0) += 1;
                }
                h
            })
            .collect()
    });
    let mut total = NoiseHistogram::new();
    for part in parts {
        for (k, c) in part {
            *total.entry(k).or_insert(0) += c;
        }
    }
    Ok(total)
}

fn outcome_counts(noise: &NoiseHistogram, n: u64) -> BTreeMap<i64, u64> {
    let mut out = BTreeMap::new();
    for (&y, &c) in noise {
        *out.entry((n as i64 + y).max(0)).or_insert(0) += c;
    }
    out
}

/// Losses observed for one pair of true answers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairAudit {
    pub n1: u64,
    pub n2: u64,
    /// Largest finite `|ln(c1/c2)|` over compared outcomes.
    pub max_loss: f64,
    /// Standard error of the estimate attaining `max_loss`.
    pub max_loss_sigma: f64,
    /// Largest `|ln(c1/c2)| - 3 sigma` over compared outcomes.
    pub max_loss_lower: f64,
    pub outcomes_compared: usize,
    /// Outcomes seen at least `min_count` times in one arm and never in the other.
    pub one_sided_outcomes: usize,
}

impl PairAudit {
    /// Infinite when any outcome is one-sided.
    pub fn reported_loss(&self) -> f64 {
        if self.one_sided_outcomes > 0 {
            f64::INFINITY
        } else {
            self.max_loss
        }
    }
}

/// Compares outcome frequencies of true answers `n1` and `n2` under shared noise.
pub fn audit_count_pair(n1: u64, n2: u64, noise: &NoiseHistogram, min_count: u64) -> PairAudit {
    let a = outcome_counts(noise, n1);
    let b = outcome_counts(noise, n2);
    let mut keys: Vec<i64> = a.keys().chain(b.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let mut report = PairAudit {
        n1,
        n2,
        max_loss: 0.0,
        max_loss_sigma: 0.0,
        max_loss_lower: 0.0,
        outcomes_compared: 0,
        one_sided_outcomes: 0,
    };
    for k in keys {
        let c1 = a.get(&k).copied().unwrap_or(0);
        let c2 = b.get(&k).copied().unwrap_or(0);
        if c1 >= min_count && c2 >= min_count {
            let loss = (c1 as f64 / c2 as f64).ln().abs();
            let sigma = (1.0 / c1 as f64 + 1.0 / c2 as f64).sqrt();
            report.outcomes_compared += 1;
            if loss > report.max_loss {
                report.max_loss = loss;
                report.max_loss_sigma = sigma;
            }
            report.max_loss_lower = report.max_loss_lower.max(loss - 3.0 * sigma);
        } else if (c1 >= min_count && c2 == 0) || (c2 >= min_count && c1 == 0) {
            report.one_sided_outcomes += 1;
        }
    }
    report
}

/// Aggregates over one class of neighbor pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LossSummary {
    pub pairs: u64,
    /// Largest finite loss over all pairs.
    pub max_finite_loss: f64,
    pub max_loss_lower: f64,
    pub one_sided_pairs: u64,
    /// Histogram of per-pair reported loss in bins of width 0.05 (lower edge to count);
    /// infinite losses land under the key "inf".
    pub loss_histogram: BTreeMap<String, u64>,
}

impl LossSummary {
    fn add(&mut self, p: &PairAudit, multiplicity: u64) {
        self.pairs += multiplicity;
        self.max_finite_loss = self.max_finite_loss.max(p.max_loss);
        self.max_loss_lower = self.max_loss_lower.max(p.max_loss_lower);
        let key = if p.one_sided_outcomes > 0 {
            self.one_sided_pairs += multiplicity;
            "inf".to_string()
        } else {
            format!("{:.2}", (p.max_loss / 0.05).floor() * 0.05)
        };
        *self.loss_histogram.entry(key).or_insert(0) += multiplicity;
    }

    /// Largest loss including infinite (one-sided) outcomes.
    pub fn max_reported_loss(&self) -> f64 {
        if self.one_sided_pairs > 0 {
            f64::INFINITY
        } else {
            self.max_finite_loss
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrivacyAuditReport {
    pub mechanism: MechanismSpec,
    /// Worst-case epsilon the losses are checked against; `None` when unbounded.
    pub bound: Option<f64>,
    pub trials: u64,
    pub records_sampled: usize,
    pub queries: usize,
    pub total_pairs: u64,
    pub same_answer: LossSummary,
    pub different_answer: LossSummary,
    pub same_answer_fraction: f64,
    /// Largest `|count(ds) - count(neighbor)|` seen; 1 for count queries.
    pub max_count_difference: u64,
    /// Pairs whose `loss - 3 sigma` exceeds the bound, or that have one-sided outcomes.
    pub violations: u64,
    /// Per distinct pair of true answers.
    pub groups: Vec<PairGroup>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairGroup {
    pub multiplicity: u64,
    #[serde(flatten)]
    pub audit: PairAudit,
}

impl PrivacyAuditReport {
    pub fn max_reported_loss(&self) -> f64 {
        self.same_answer.max_reported_loss().max(self.different_answer.max_reported_loss())
    }
}

/// Removes sampled records one at a time and compares the release
/// distributions of every query on the full and reduced datasets.
pub fn audit_privacy(
    ds: &Dataset,
    queries: &[QuerySpec],
    spec: &MechanismSpec,
    trials: u64,
    stream: &SeededStream,
    options: AuditOptions,
    threads: Option<usize>,
) -> Result<PrivacyAuditReport> {
    if ds.row_count() == 0 {
        return Err(Error::EmptyDataset);
    }
    if queries.is_empty() {
        return Err(Error::Query("audit needs at least one query".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let noise = noise_histogram(spec, trials, &stream.child(&[0]), options.allow_unsafe, threads)?;

    // partial Fisher-Yates over record indices
    let mut picker = stream.child(&[1]);
    let mut order: Vec<usize> = (0..ds.row_count()).collect();
    let take = options.max_records.min(order.len());
    for i in 0..take {
        let j = i + picker.below((order.len() - i) as u64) as usize;
        order.swap(i, j);
    }
    let sampled = &order[..take];

    let full: Vec<u64> = queries.iter().map(|q| count_query(ds, q)).collect::<Result<_>>()?;
    let mut pairs: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    let mut max_diff = 0u64;
    for &idx in sampled {
        let reduced = neighbors(ds, idx)?;
        for (q, &n1) in queries.iter().zip(&full) {
            let n2 = count_query(&reduced, q)?;
            max_diff = max_diff.max(n1.abs_diff(n2));
            *pairs.entry((n1, n2)).or_insert(0) += 1;
        }
    }

    let bound = worst_case_eps(spec)?;
    let bound = bound.is_finite().then_some(bound);
    let mut same = LossSummary::default();
    let mut different = LossSummary::default();
    let mut violations = 0;
    let mut groups = Vec::with_capacity(pairs.len());
    for (&(n1, n2), &mult) in &pairs {
        let audit = audit_count_pair(n1, n2, &noise, options.min_count);
        if n1 == n2 {
            same.add(&audit, mult);
        } else {
            different.add(&audit, mult);
        }
        let exceeds = match bound {
            Some(b) => audit.max_loss_lower > b,
            None => false,
        };
        if exceeds || audit.one_sided_outcomes > 0 {
            violations += mult;
        }
        groups.push(PairGroup {
            multiplicity: mult,
            audit,
        });
    }
    let total_pairs = same.pairs + different.pairs;
    Ok(PrivacyAuditReport {
        mechanism: *spec,
        bound,
        trials,
        records_sampled: take,
        queries: queries.len(),
        total_pairs,
        same_answer_fraction: same.pairs as f64 / total_pairs as f64,
        same_answer: same,
        different_answer: different,
        max_count_difference: max_diff,
        violations,
        groups,
    })
}
