//! Monte Carlo utility simulation of clamped count releases.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accounting::{equivalent_epsilon, release_charge, NoiseFamily};
use crate::bench::metrics::ErrorHistogram;
use crate::error::{invalid, Error, Result};
use crate::mechanism::MechanismSpec;
use crate::sampling::{derive_stream_id, NoiseSampler, SeededStream};

/// Draws per parallel work unit. Fixed so results do not depend on the
/// number of workers.
const REPLICATE_SIZE: u64 = 1 << 16;

/// A mechanism to simulate: given explicitly, or as the standard mechanism
/// whose general budget matches that of an earlier entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MechanismEntry {
    Spec(MechanismSpec),
    Matched { matched_to: usize, family: NoiseFamily },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub true_counts: Vec<u64>,
    pub mechanisms: Vec<MechanismEntry>,
    #[serde(default = "default_samples")]
    pub samples_per_cell: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_break_point")]
    pub c_t_for_metrics: f64,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<u64>,
    /// Permit non-private mechanisms (the zero-noise stub, truncated Laplace).
    #[serde(default)]
    pub allow_unsafe: bool,
}

fn default_samples() -> u64 {
    1_000_000
}

fn default_break_point() -> f64 {
    5.0
}

fn default_thresholds() -> Vec<u64> {
    (0..=30).collect()
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_cell == 0 {
            return Err(invalid("samples_per_cell must be at least 1"));
        }
        if self.mechanisms.is_empty() {
            return Err(invalid("at least one mechanism is required"));
        }
        if self.true_counts.is_empty() {
            return Err(invalid("at least one true count is required"));
        }
        if !(self.c_t_for_metrics.is_finite() && self.c_t_for_metrics >= 0.0) {
            return Err(invalid("c_t_for_metrics must be a nonnegative number"));
        }
        Ok(())
    }

    /// Resolves matched entries into concrete specs.
    pub fn resolve_mechanisms(&self) -> Result<Vec<MechanismSpec>> {
        let mut out: Vec<MechanismSpec> = Vec::with_capacity(self.mechanisms.len());
        for (i, entry) in self.mechanisms.iter().enumerate() {
            let spec = match entry {
                MechanismEntry::Spec(s) => {
                    s.validate()?;
                    *s
                }
                MechanismEntry::Matched { matched_to, family } => {
                    let base = out.get(*matched_to).filter(|_| *matched_to < i).ok_or_else(|| {
                        invalid(format!("mechanism {i} is matched to {matched_to}, which is not an earlier entry"))
                    })?;
                    let zeta = release_charge(base)?;
                    let eps = equivalent_epsilon(zeta, *family)?;
                    match family {
                        NoiseFamily::Geometric => MechanismSpec::geometric(eps)?,
                        NoiseFamily::RoundedLaplace => MechanismSpec::rounded_laplace(eps)?,
                    }
                }
            };
            out.push(spec);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellReport {
    pub true_count: u64,
    pub samples: u64,
    pub error_cdf: BTreeMap<u64, f64>,
    pub within_bound_fraction: f64,
    /// Absent for a true count of zero.
    pub mean_relative_error: Option<f64>,
    pub clamped_fraction: f64,
    #[serde(skip)]
    pub histogram: ErrorHistogram,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MechanismReport {
    pub label: String,
    pub spec: MechanismSpec,
    /// General budget charged per release; absent for non-private mechanisms.
    pub zeta: Option<f64>,
    pub cells: Vec<CellReport>,
    /// Within-bound fraction averaged over the true counts.
    pub mean_within_bound_fraction: f64,
    /// Mean relative error summed over the positive true counts.
    pub total_mean_relative_error: f64,
    /// Error CDF with every true count weighted equally.
    pub pooled_error_cdf: BTreeMap<u64, f64>,
    /// Smallest error threshold at which the pooled CDF reaches 0.999.
    pub pooled_threshold_999: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub master_seed: u64,
    pub samples_per_cell: u64,
    pub c_t_for_metrics: f64,
    pub mechanisms: Vec<MechanismReport>,
}

struct Unit {
    mech: usize,
    count: usize,
    replicate: u64,
    draws: u64,
}

/// Runs every (mechanism, true count) cell. Released values are clamped at
/// zero and the error is `|released - true|`. Output depends only on the
/// configuration, never on `threads`.
pub fn run_simulation(config: &SimulationConfig, threads: Option<usize>) -> Result<SimulationReport> {
    config.validate()?;
    let specs = config.resolve_mechanisms()?;
    let samplers: Vec<NoiseSampler> = specs
        .iter()
        .map(|s| NoiseSampler::new(s, config.allow_unsafe))
        .collect::<Result<_>>()?;

    let per_cell = config.samples_per_cell.div_ceil(REPLICATE_SIZE);
    let mut units = Vec::new();
    for mech in 0..specs.len() {
        for count in 0..config.true_counts.len() {
            for replicate in 0..per_cell {
                let start = replicate * REPLICATE_SIZE;
                units.push(Unit {
                    mech,
                    count,
                    replicate,
                    draws: (config.samples_per_cell - start).min(REPLICATE_SIZE),
                });
            }
        }
    }

    let work = |u: &Unit| {
        let id = derive_stream_id(0, &[u.mech as u64, u.count as u64, u.replicate]);
        let mut stream = SeededStream::new(config.master_seed, id);
        let n = config.true_counts[u.count] as i64;
        let mut hist = ErrorHistogram::new();
        let mut clamped = 0u64;
        for _ in 0..u.draws {
            let y = samplers[u.mech].sample_integer(&mut stream);
            if n + y < 0 {
                clamped += 1;
            }
            hist.record(y.max(-n).unsigned_abs());
        }
        (hist, clamped)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let results: Vec<(ErrorHistogram, u64)> = pool.install(|| units.par_iter().map(work).collect());

    let mut cells: Vec<Vec<(ErrorHistogram, u64)>> =
        vec![vec![(ErrorHistogram::new(), 0); config.true_counts.len()]; specs.len()];
    for (u, (h, c)) in units.iter().zip(results) {
        let slot = &mut cells[u.mech][u.count];
        slot.0.merge(&h);
        slot.1 += c;
    }

    let ct = config.c_t_for_metrics;
    let mut mechanisms = Vec::with_capacity(specs.len());
    for (spec, cell_hists) in specs.iter().zip(cells) {
        let mut reports = Vec::new();
        let mut pooled = ErrorHistogram::new();
        for (&n, (hist, clamped)) in config.true_counts.iter().zip(cell_hists) {
            pooled.merge(&hist);
            reports.push(CellReport {
                true_count: n,
                samples: hist.total(),
                error_cdf: hist.cdf_at(&config.thresholds)?,
                within_bound_fraction: hist.within_bound_fraction(ct)?,
                mean_relative_error: if n > 0 { Some(hist.mean_relative_error(n, ct)?) } else { None },
                clamped_fraction: clamped as f64 / hist.total() as f64,
                histogram: hist,
            });
        }
        let k = reports.len() as f64;
        mechanisms.push(MechanismReport {
            label: spec.label(),
            spec: *spec,
            zeta: if spec.is_private() { release_charge(spec).ok() } else { None },
            mean_within_bound_fraction: reports.iter().map(|c| c.within_bound_fraction).sum::<f64>() / k,
            total_mean_relative_error: reports.iter().filter_map(|c| c.mean_relative_error).sum(),
            pooled_error_cdf: pooled.cdf_at(&config.thresholds)?,
            pooled_threshold_999: pooled.threshold_reaching(0.999)?,
            cells: reports,
        });
    }
    Ok(SimulationReport {
        master_seed: config.master_seed,
        samples_per_cell: config.samples_per_cell,
        c_t_for_metrics: ct,
        mechanisms,
    })
}
