//! Goodness-of-fit statistics for checking samplers against exact laws.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::beta::beta_reg;

/// Result of a goodness-of-fit test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom for chi-square; sample size for KS.
    pub dof: f64,
}

/// Asymptotic Kolmogorov distribution tail `P(K > lambda)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sided one-sample Kolmogorov–Smirnov test. Sorts `samples` in place.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> TestOutcome {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let root = n.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * d;
    TestOutcome {
        statistic: d,
        p_value: kolmogorov_tail(lambda),
        dof: n,
    }
}

/// Pearson chi-square test of observed integer counts against expected
/// probabilities. `observed[i]` pairs with `probs[i]`; `rest_observed` holds
/// the draws outside the listed support and is compared against the missing
/// mass `1 - sum(probs)`. Adjacent cells are pooled until each expected count
/// is at least 5.
pub fn chi_square_test(observed: &[u64], probs: &[f64], rest_observed: u64) -> TestOutcome {
    assert_eq!(observed.len(), probs.len(), "observed and expected lengths differ");
    let n = observed.iter().sum::<u64>() + rest_observed;
    let n_f = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o as f64;
        e_acc += p * n_f;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    let rest_p = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    o_acc += rest_observed as f64;
    e_acc += rest_p * n_f;
    if e_acc >= 5.0 || cells.is_empty() {
        cells.push((o_acc, e_acc));
    } else if let Some(last) = cells.last_mut() {
        last.0 += o_acc;
        last.1 += e_acc;
    }
    let stat: f64 = cells
        .iter()
        .filter(|c| c.1 > 0.0)
        .map(|&(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = (cells.len() as f64 - 1.0).max(1.0);
    let dist = ChiSquared::new(dof).expect("positive degrees of freedom");
    TestOutcome {
        statistic: stat,
        p_value: dist.sf(stat),
        dof,
    }
}

/// Upper tail `P(X >= successes)` for `X ~ Binomial(trials, p)`.
pub fn binomial_upper_tail(successes: u64, trials: u64, p: f64) -> f64 {
    if successes == 0 {
        return 1.0;
    }
    if successes > trials {
        return 0.0;
    }
    beta_reg(successes as f64, (trials - successes + 1) as f64, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_tail_known_points() {
        // Critical values of the limiting distribution.
        assert!((kolmogorov_tail(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_tail(1.628) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ks_uniform_grid_fits() {
        let mut xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let out = ks_test(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(out.statistic <= 0.0005 + 1e-12);
        assert!(out.p_value > 0.99);
    }

    #[test]
    fn chi_square_detects_mismatch() {
        let ok = chi_square_test(&[250, 250, 250, 250], &[0.25; 4], 0);
        assert!(ok.statistic.abs() < 1e-12 && ok.p_value > 0.99);
        let bad = chi_square_test(&[400, 200, 200, 200], &[0.25; 4], 0);
        assert!(bad.p_value < 1e-10);
    }

    #[test]
    fn binomial_tail_matches_direct_sum() {
        let (n, p) = (20u64, 0.3f64);
        let pmf = |k: u64| {
            let mut c = 1.0;
            for i in 0..k {
                c *= (n - i) as f64 / (i + 1) as f64;
            }
            c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
        };
        let direct: f64 = (9..=n).map(pmf).sum();
        assert!((binomial_upper_tail(9, n, p) - direct).abs() < 1e-12);
        assert_eq!(binomial_upper_tail(0, n, p), 1.0);
    }
}
