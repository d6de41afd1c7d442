use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Deserialize;
use serde_json::{json, Map, Value};

use pwmix::accounting::{compose, release_charge, worst_case_eps, BudgetLedger, HistogramCharging};
use pwmix::analytics::{integer_release_stats, mechanism_stats};
use pwmix::bench::audit::AuditOptions;
use pwmix::bench::simulation::SimulationConfig;
use pwmix::bench::{audit_privacy, run_simulation, table1_grid, table_sweep, write_table_csv};
use pwmix::query::{
    count_query, histogram_query, load_dataset, random_pair_queries, release as release_cells, synthetic_dataset, Dataset,
    IngestOptions, QuerySpec,
};
use pwmix::{MechanismSpec, SeededStream};

use crate::mechanism_args::MechanismArgs;
use crate::output::{fmt_num, manifest, to_pretty_json, write_atomic, write_outputs};
use crate::{Charging, Failure, Format};

fn threads() -> Result<Option<usize>, Failure> {
    match std::env::var("PWMIX_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Failure::usage(format!("PWMIX_THREADS must be a nonnegative integer, got {v:?}"))),
        _ => Ok(None),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
        let s = (nanos as u64) ^ ((nanos >> 64) as u64) ^ std::process::id() as u64;
        eprintln!("pwmix: using generated seed {s}");
        s
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!("inf")
    }
}

pub fn stats(args: &MechanismArgs, integer: bool, format: Format) -> Result<(), Failure> {
    let spec = args.spec().map_err(Failure::usage)?;
    let s = if integer {
        integer_release_stats(&spec)?
    } else {
        mechanism_stats(&spec)?
    };
    let zeta = match release_charge(&spec) {
        Ok(z) => z,
        Err(pwmix::Error::Refused(_)) => f64::INFINITY,
        Err(e) => return Err(e.into()),
    };
    let worst = worst_case_eps(&spec)?;
    let cols = ["mechanism", "mean_abs_noise", "variance", "entropy", "zeta", "worst_case_eps"];
    let vals = [
        spec.label(),
        fmt_num(s.mean_abs_noise),
        fmt_num(s.variance),
        fmt_num(s.entropy),
        fmt_num(zeta),
        fmt_num(worst),
    ];
    let mut out = std::io::stdout().lock();
    match format {
        Format::Json => {
            let v = json!({
                "mechanism": spec,
                "label": spec.label(),
                "mean_abs_noise": s.mean_abs_noise,
                "variance": s.variance,
                "entropy": s.entropy,
                "zeta": finite_or_null(zeta),
                "worst_case_eps": finite_or_null(worst),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
        Format::Csv => {
            writeln!(out, "{}", cols.join(","))?;
            let quoted: Vec<String> = vals
                .iter()
                .map(|v| if v.contains(',') { format!("\"{v}\"") } else { v.clone() })
                .collect();
            writeln!(out, "{}", quoted.join(","))?;
        }
        Format::Table => {
            let width = vals.iter().zip(cols).map(|(v, c)| v.len().max(c.len())).collect::<Vec<_>>();
            let line = |items: Vec<&str>| {
                items
                    .iter()
                    .zip(&width)
                    .map(|(s, w)| format!("{s:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            writeln!(out, "{}", line(cols.to_vec()).trim_end())?;
            writeln!(out, "{}", line(vals.iter().map(String::as_str).collect()).trim_end())?;
        }
    }
    Ok(())
}

pub fn sweep(grid: Option<&Path>, out: Option<&Path>) -> Result<(), Failure> {
    let points: Vec<(f64, f64, f64)> = match grid {
        None => table1_grid(),
        Some(path) => {
            let bytes = read_file(path)?;
            let raw: Vec<[f64; 3]> = serde_json::from_slice(&bytes)
                .map_err(|e| Failure::usage(format!("{}: expected a JSON list of [c_t, eps, r_eps]: {e}", path.display())))?;
            raw.into_iter().map(|[c, e, r]| (c, e, r)).collect()
        }
    };
    let rows = table_sweep(&points)?;
    let mut buf = Vec::new();
    write_table_csv(&rows, &mut buf)?;
    match out {
        Some(path) => write_atomic(path, &buf)?,
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

pub struct ReleaseArgs {
    pub data: PathBuf,
    pub query: Option<String>,
    pub hist: Option<String>,
    pub filter: Option<String>,
    pub mechanism: MechanismArgs,
    pub seed: Option<u64>,
    pub ledger: Option<PathBuf>,
    pub budget_cap: Option<f64>,
    pub allow_unsafe: bool,
    pub reveal_true: bool,
    pub no_header: bool,
    pub charging: Charging,
}

fn load_ledger(path: &Path) -> Result<BudgetLedger, Failure> {
    match fs::read(path) {
        Ok(bytes) if bytes.iter().all(u8::is_ascii_whitespace) => Ok(BudgetLedger::new()),
        Ok(bytes) => {
            let ledger: BudgetLedger = serde_json::from_slice(&bytes)
                .map_err(|e| Failure::usage(format!("{}: malformed ledger: {e}", path.display())))?;
            Ok(BudgetLedger::from_entries(ledger.entries().to_vec())?)
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BudgetLedger::new()),
        Err(e) => Err(Failure::usage(format!("{}: {e}", path.display()))),
    }
}

pub fn release_cmd_dataset(path: &Path, no_header: bool) -> Result<Dataset, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(load_dataset(file, IngestOptions { has_header: !no_header })?)
}

pub fn release(args: ReleaseArgs) -> Result<(), Failure> {
    let spec = args.mechanism.spec().map_err(Failure::usage)?;
    spec.ensure_permitted(args.allow_unsafe)?;
    let ds = release_cmd_dataset(&args.data, args.no_header)?;
    let seed = resolve_seed(args.seed);
    let stream = SeededStream::new(seed, 0);
    let charging = match args.charging {
        Charging::Parallel => HistogramCharging::Parallel,
        Charging::Sequential => HistogramCharging::Sequential,
    };

    let (query, cells) = match &args.hist {
        Some(attr) => {
            let preds = QuerySpec::parse_predicates(args.filter.as_deref().unwrap_or(""))?;
            let q = QuerySpec::histogram(attr, preds)?;
            let bins = histogram_query(&ds, &q)?;
            (q, bins.into_iter().map(|(k, v)| (Some(k), v)).collect::<Vec<_>>())
        }
        None => {
            let q = QuerySpec::parse_count(args.query.as_deref().unwrap_or(""))?;
            let n = count_query(&ds, &q)?;
            (q, vec![(None, n)])
        }
    };
    let noisy = release_cells(&cells, &spec, &stream, args.allow_unsafe)?;
    let is_hist = args.hist.is_some();
    let per_query = release_charge(&spec).ok();
    let charge = per_query.map(|z| if is_hist { charging.charge(z, cells.len()) } else { z });

    if let Some(path) = &args.ledger {
        let charge = release_charge(&spec).map(|_| charge.expect("charge exists"))?;
        let ledger = load_ledger(path)?;
        if let Some(cap) = args.budget_cap {
            let total = ledger.total() + charge;
            if total > cap * (1.0 + 1e-12) {
                return Err(Failure::refused(format!(
                    "budget cap {cap} would be exceeded: ledger total {:.6} + charge {charge:.6} = {total:.6}",
                    ledger.total()
                )));
            }
        }
        let label = if is_hist {
            format!("{query} [{}] {}", charging.name(), spec.label())
        } else {
            format!("{query} {}", spec.label())
        };
        let updated = compose(&ledger, charge, &label)?;
        write_atomic(path, &to_pretty_json(&updated)?)?;
    }

    let mut out = Map::new();
    out.insert("query".into(), json!(query.to_string()));
    out.insert("mechanism".into(), json!(spec));
    if is_hist {
        let key = |c: &pwmix::query::ReleasedCell| c.key.clone().unwrap_or_default();
        if args.reveal_true {
            let t: BTreeMap<String, u64> = noisy.cells.iter().map(|c| (key(c), c.true_value)).collect();
            out.insert("true".into(), json!(t));
        }
        let r: BTreeMap<String, Value> = noisy.cells.iter().map(|c| (key(c), json!(c.released))).collect();
        let cl: BTreeMap<String, bool> = noisy.cells.iter().map(|c| (key(c), c.clamped)).collect();
        out.insert("released".into(), json!(r));
        out.insert("clamped".into(), json!(cl));
        out.insert("charging".into(), json!(charging.name()));
    } else {
        let c = &noisy.cells[0];
        if args.reveal_true {
            out.insert("true".into(), json!(c.true_value));
        }
        out.insert("released".into(), json!(c.released));
        out.insert("clamped".into(), json!(c.clamped));
    }
    out.insert("zeta_charged".into(), json!(charge));
    out.insert("seed".into(), json!(seed));
    println!("{}", serde_json::to_string_pretty(&Value::Object(out))?);
    Ok(())
}

pub fn bench(config_path: &Path, out: &Path, seed: Option<u64>, samples: Option<u64>) -> Result<(), Failure> {
    let bytes = read_file(config_path)?;
    let mut config: SimulationConfig = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::usage(format!("{}: {e}", config_path.display())))?;
    if let Some(s) = samples {
        config.samples_per_cell = s;
    }
    config.master_seed = resolve_seed(seed.or(Some(config.master_seed)).filter(|_| seed.is_some() || has_seed(&bytes)));
    config.validate()?;
    let report = run_simulation(&config, threads()?)?;

    let mut cdf = String::from("mechanism,true_count,threshold,probability\n");
    let mut cells = String::from("mechanism,true_count,samples,within_bound_fraction,mean_relative_error,clamped_fraction\n");
    let mut pooled = String::from("threshold");
    for m in &report.mechanisms {
        pooled.push_str(&format!(",\"{}\"", m.label));
        for c in &m.cells {
            for (t, p) in &c.error_cdf {
                cdf.push_str(&format!("\"{}\",{},{t},{p}\n", m.label, c.true_count));
            }
            let mre = c.mean_relative_error.map(|x| x.to_string()).unwrap_or_default();
            cells.push_str(&format!(
                "\"{}\",{},{},{},{mre},{}\n",
                m.label, c.true_count, c.samples, c.within_bound_fraction, c.clamped_fraction
            ));
        }
    }
    pooled.push('\n');
    for t in &config.thresholds {
        pooled.push_str(&t.to_string());
        for m in &report.mechanisms {
            pooled.push_str(&format!(",{}", m.pooled_error_cdf[t]));
        }
        pooled.push('\n');
    }
    let names = ["utility_report.json", "error_cdf.csv", "pooled_error_cdf.csv", "cells.csv", "manifest.json"];
    let man = manifest("bench", &bytes, config.master_seed, &names[..4]);
    write_outputs(
        out,
        &[
            (names[0], to_pretty_json(&report)?),
            (names[1], cdf.into_bytes()),
            (names[2], pooled.into_bytes()),
            (names[3], cells.into_bytes()),
            (names[4], to_pretty_json(&man)?),
        ],
    )?;
    Ok(())
}

fn has_seed(config: &[u8]) -> bool {
    serde_json::from_slice::<Value>(config)
        .ok()
        .and_then(|v| v.get("master_seed").cloned())
        .is_some()
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum DatasetSource {
    Synthetic {
        rows: usize,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        path: PathBuf,
        #[serde(default = "yes")]
        has_header: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AuditConfig {
    dataset: DatasetSource,
    mechanisms: Vec<MechanismSpec>,
    #[serde(default = "default_trials")]
    trials: u64,
    /// Number of random two-attribute count queries.
    #[serde(default = "default_queries")]
    queries: usize,
    #[serde(default = "default_records")]
    max_records: usize,
    #[serde(default = "default_min_count")]
    min_count: u64,
    #[serde(default)]
    allow_unsafe: bool,
    #[serde(default)]
    master_seed: Option<u64>,
}

fn default_trials() -> u64 {
    1_000_000
}
fn default_queries() -> usize {
    100
}
fn default_records() -> usize {
    200
}
fn default_min_count() -> u64 {
    50
}

pub fn audit(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let bytes = read_file(config_path)?;
    let config: AuditConfig = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::usage(format!("{}: {e}", config_path.display())))?;
    if config.mechanisms.is_empty() {
        return Err(Failure::usage("audit config lists no mechanisms"));
    }
    if config.trials == 0 || config.queries == 0 {
        return Err(Failure::usage("trials and queries must be positive"));
    }
    let ds = match &config.dataset {
        DatasetSource::Synthetic { rows, seed } => synthetic_dataset(*rows, *seed),
        DatasetSource::Csv { path, has_header } => {
            let resolved = if path.is_relative() {
                config_path.parent().unwrap_or(Path::new(".")).join(path)
            } else {
                path.clone()
            };
            let file =
                fs::File::open(&resolved).map_err(|e| Failure::usage(format!("{}: {e}", resolved.display())))?;
            load_dataset(file, IngestOptions { has_header: *has_header })?
        }
    };
    let seed = resolve_seed(seed.or(config.master_seed));
    let root = SeededStream::new(seed, 0);
    let queries = random_pair_queries(&ds, config.queries, &mut root.child(&[0]))?;
    let options = AuditOptions {
        min_count: config.min_count,
        max_records: config.max_records,
        allow_unsafe: config.allow_unsafe,
    };
    let threads = threads()?;
    let mut audits = Vec::new();
    let mut hist_csv = String::from("mechanism,class,loss_bin,pairs\n");
    for (i, spec) in config.mechanisms.iter().enumerate() {
        let report = audit_privacy(&ds, &queries, spec, config.trials, &root.child(&[1, i as u64]), options, threads)?;
        for (class, summary) in [("same", &report.same_answer), ("different", &report.different_answer)] {
            for (bin, n) in &summary.loss_histogram {
                hist_csv.push_str(&format!("\"{}\",{class},{bin},{n}\n", spec.label()));
            }
        }
        audits.push(json!({
            "label": spec.label(),
            "max_reported_loss": finite_or_null(report.max_reported_loss()),
            "report": report,
        }));
    }
    let report = json!({
        "dataset": { "rows": ds.row_count(), "schema": ds.schema() },
        "queries": queries.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
        "audits": audits,
    });
    let names = ["audit_report.json", "loss_histogram.csv", "manifest.json"];
    let man = manifest("audit", &bytes, seed, &names[..2]);
    write_outputs(
        out,
        &[
            (names[0], to_pretty_json(&report)?),
            (names[1], hist_csv.into_bytes()),
            (names[2], to_pretty_json(&man)?),
        ],
    )?;
    Ok(())
}
