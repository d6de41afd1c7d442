use std::collections::BTreeMap;

use proptest::prelude::*;
use pwmix::bench::audit::{audit_count_pair, noise_histogram, AuditOptions, NoiseHistogram};
use pwmix::bench::metrics::{error_cdf, mean_relative_error, within_bound_fraction, ErrorHistogram};
use pwmix::bench::simulation::{MechanismEntry, SimulationConfig};
use pwmix::bench::{audit_privacy, run_simulation, table1_grid, table_row, table_sweep, write_table_csv, TABLE_COLUMNS};
use pwmix::query::{random_pair_queries, synthetic_dataset};
use pwmix::{MechanismSpec, MixtureParams, SeededStream};

fn headline() -> MixtureParams {
    MixtureParams::new(0.2, 5.0, 5.0).unwrap()
}

#[test]
fn metrics_on_a_hand_example() {
    let errors = [0, 1, 2, 7, 9, 3];
    let cdf = error_cdf(&errors, &[0, 2, 8, 9]).unwrap();
    assert_eq!(cdf[&0], 1.0 / 6.0);
    assert_eq!(cdf[&2], 0.5);
    assert_eq!(cdf[&8], 5.0 / 6.0);
    assert_eq!(cdf[&9], 1.0);
    assert_eq!(within_bound_fraction(&errors, 5.0).unwrap(), 4.0 / 6.0);
    // only the 7 and 9 lie beyond the bound: (7 + 9) / 6 / 4
    assert!((mean_relative_error(&errors, 4, 5.0).unwrap() - 16.0 / 24.0).abs() < 1e-15);
    assert!(mean_relative_error(&errors, 0, 5.0).is_err());
    assert!(error_cdf(&[], &[1]).is_err());
}

proptest! {
    #[test]
    fn histogram_agrees_with_list_metrics(errors in prop::collection::vec(0u64..40, 1..300), split in 0usize..300, n in 1u64..50) {
        let split = split.min(errors.len());
        let (mut a, mut b, mut all) = (ErrorHistogram::new(), ErrorHistogram::new(), ErrorHistogram::new());
        for (i, &e) in errors.iter().enumerate() {
            if i < split { a.record(e) } else { b.record(e) }
            all.record(e);
        }
        a.merge(&b);
        prop_assert_eq!(&a, &all);
        let ts: Vec<u64> = (0..=40).collect();
        let listed = error_cdf(&errors, &ts).unwrap();
        let binned = all.cdf_at(&ts).unwrap();
        for t in ts {
            prop_assert!((listed[&t] - binned[&t]).abs() < 1e-12);
        }
        prop_assert!((all.within_bound_fraction(5.0).unwrap() - within_bound_fraction(&errors, 5.0).unwrap()).abs() < 1e-12);
        prop_assert!((all.mean_relative_error(n, 5.0).unwrap() - mean_relative_error(&errors, n, 5.0).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn table_grid_has_every_reference_row() {
    let grid = table1_grid();
    assert_eq!(grid.len(), 69);
    let mut buf = Vec::new();
    write_table_csv(&table_sweep(&grid).unwrap(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TABLE_COLUMNS.join(","));
    assert_eq!(lines.count(), 69);
}

#[test]
fn empty_grid_writes_only_the_header() {
    let mut buf = Vec::new();
    write_table_csv(&table_sweep(&[]).unwrap(), &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().trim_end(), TABLE_COLUMNS.join(","));
}

#[test]
fn table_row_spot_values() {
    let r = table_row(5.0, 0.2, 1.0).unwrap();
    assert!((r.zeta_gm - 0.328).abs() < 0.0005);
    assert!((r.zeta_lm - 0.309).abs() < 0.0005);
    assert!((r.eps_lap - 0.332).abs() < 0.0005);
    let r = table_row(6.0, 0.1, 1.0).unwrap();
    assert!((r.zeta_gm - 0.257).abs() < 0.0005);
    assert!((r.zeta_lm - 0.243).abs() < 0.0005);
    assert!((r.eps_lap - 0.257).abs() < 0.0005);
    // a mixture always beats its matched standard on mean absolute noise here
    assert!(r.e_gm < r.e_geo && r.e_lm < r.e_lap);
}

fn small_config() -> SimulationConfig {
    serde_json::from_value(serde_json::json!({
        "true_counts": [0, 1, 10, 100],
        "mechanisms": [
            { "kind": "geometric_mixture", "epsilon": 0.2, "ratio": 5.0, "break_point": 5.0 },
            { "matched_to": 0, "family": "geometric" },
            { "kind": "no_noise" }
        ],
        "samples_per_cell": 150_000,
        "master_seed": 99,
        "allow_unsafe": true
    }))
    .unwrap()
}

#[test]
fn simulation_is_identical_across_thread_counts() {
    let cfg = small_config();
    let one = serde_json::to_string(&run_simulation(&cfg, Some(1)).unwrap()).unwrap();
    let four = serde_json::to_string(&run_simulation(&cfg, Some(4)).unwrap()).unwrap();
    assert_eq!(one, four);
}

#[test]
fn simulation_reports_expected_structure() {
    let report = run_simulation(&small_config(), Some(2)).unwrap();
    assert_eq!(report.mechanisms.len(), 3);
    let matched = &report.mechanisms[1];
    assert_eq!(matched.spec, MechanismSpec::geometric(report.mechanisms[0].zeta.unwrap()).unwrap());
    let stub = &report.mechanisms[2];
    assert_eq!(stub.zeta, None);
    assert_eq!(stub.mean_within_bound_fraction, 1.0);
    assert_eq!(stub.pooled_threshold_999, 0);
    // zero true count: relative error undefined, clamping frequent
    let zero = &report.mechanisms[0].cells[0];
    assert_eq!(zero.mean_relative_error, None);
    assert!(zero.clamped_fraction > 0.3);
}

#[test]
fn simulation_rejects_bad_configs() {
    let mut cfg = small_config();
    cfg.samples_per_cell = 0;
    assert!(run_simulation(&cfg, None).is_err());
    let mut cfg = small_config();
    cfg.mechanisms[1] = MechanismEntry::Matched { matched_to: 1, family: pwmix::accounting::NoiseFamily::Geometric };
    assert!(run_simulation(&cfg, None).is_err());
    let mut cfg = small_config();
    cfg.allow_unsafe = false;
    assert!(run_simulation(&cfg, None).is_err());
}

#[test]
fn noise_histogram_is_thread_independent() {
    let spec = MechanismSpec::GeometricMixture(headline());
    let s = SeededStream::new(5, 0);
    let a = noise_histogram(&spec, 300_000, &s, false, Some(1)).unwrap();
    let b = noise_histogram(&spec, 300_000, &s, false, Some(3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.values().sum::<u64>(), 300_000);
}

#[test]
fn pair_audit_on_a_constructed_histogram() {
    // noise uniform on {-1, 0, 1}: shifting by one moves mass off one end
    let noise: NoiseHistogram = BTreeMap::from([(-1, 1000), (0, 1000), (1, 1000)]);
    let same = audit_count_pair(4, 4, &noise, 50);
    assert_eq!(same.max_loss, 0.0);
    assert_eq!(same.one_sided_outcomes, 0);
    let diff = audit_count_pair(4, 3, &noise, 50);
    assert_eq!(diff.one_sided_outcomes, 2);
    assert_eq!(diff.reported_loss(), f64::INFINITY);
    assert_eq!(diff.outcomes_compared, 2);
}

#[test]
fn audit_of_a_mixture_stays_within_its_level() {
    let ds = synthetic_dataset(1000, 2);
    let root = SeededStream::new(8, 0);
    let queries = random_pair_queries(&ds, 30, &mut root.child(&[0])).unwrap();
    let spec = MechanismSpec::GeometricMixture(headline());
    let options = AuditOptions { max_records: 60, ..AuditOptions::default() };
    let r = audit_privacy(&ds, &queries, &spec, 400_000, &root.child(&[1]), options, None).unwrap();
    assert_eq!(r.bound, Some(1.0));
    assert_eq!(r.violations, 0);
    assert_eq!(r.max_count_difference, 1);
    assert_eq!(r.same_answer.max_finite_loss, 0.0);
    assert_eq!(r.total_pairs, 60 * 30);
    assert!(r.different_answer.pairs > 0);
}

#[test]
fn audit_flags_truncated_laplace() {
    let ds = synthetic_dataset(400, 2);
    let root = SeededStream::new(8, 0);
    let queries = random_pair_queries(&ds, 30, &mut root.child(&[0])).unwrap();
    let spec = MechanismSpec::truncated_laplace(1.0, 3.0).unwrap();
    let options = AuditOptions { max_records: 60, ..AuditOptions::default() };
    assert!(audit_privacy(&ds, &queries, &spec, 100_000, &root, options, None).is_err());
    let options = AuditOptions { allow_unsafe: true, ..options };
    let r = audit_privacy(&ds, &queries, &spec, 200_000, &root, options, None).unwrap();
    assert_eq!(r.bound, None);
    assert!(r.different_answer.one_sided_pairs > 0);
    assert_eq!(r.max_reported_loss(), f64::INFINITY);
}
