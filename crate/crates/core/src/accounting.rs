//! Privacy loss, the general privacy budget, composition and usefulness bounds.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mechanism::{
    ContinuousNoise, GeometricMixture, LaplaceMixture, MechanismSpec, MixtureParams, NoiseModel,
};
use crate::numeric::{bisect, integrate_piecewise};

/// Probability (or density) of the noise value `x` under `model`.
fn likelihood(model: &NoiseModel, x: f64) -> f64 {
    model.density(x)
}

/// `ln(P[noise = outcome - shift] / P[noise = outcome])`, signed.
///
/// Infinite when only the denominator vanishes; zero when both do.
pub fn directional_loss(model: &NoiseModel, outcome_noise: f64, shift: i64) -> f64 {
    let num = likelihood(model, outcome_noise - shift as f64);
    let den = likelihood(model, outcome_noise);
    match (num > 0.0, den > 0.0) {
        (true, true) => (num / den).ln(),
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        (false, false) => 0.0,
    }
}

/// Absolute privacy loss at an outcome, maximized over both shift directions.
pub fn privacy_loss(spec: &MechanismSpec, outcome_noise: f64, shift: i64) -> Result<f64> {
    let model = spec.model()?;
    let up = directional_loss(&model, outcome_noise, shift).abs();
    let down = directional_loss(&model, outcome_noise, -shift).abs();
    Ok(up.max(down))
}

/// Worst-case epsilon: for unit sensitivity with standard specs, for the configured
/// sensitivity with mixtures. Infinite for non-private specs.
pub fn worst_case_eps(spec: &MechanismSpec) -> Result<f64> {
    spec.validate()?;
    Ok(match spec {
        MechanismSpec::Laplace { scale } | MechanismSpec::RoundedLaplace { scale } => 1.0 / scale,
        MechanismSpec::Geometric { alpha } => alpha.ln(),
        MechanismSpec::LaplaceMixture(p) | MechanismSpec::GeometricMixture(p) => {
            p.epsilon().max(p.outer_epsilon())
        }
        MechanismSpec::TruncatedLaplace { .. } | MechanismSpec::NoNoise => f64::INFINITY,
    })
}

/// General budget of the rounded Laplace mechanism with parameter `eps`.
pub fn zeta_rounded_laplace(eps: f64) -> f64 {
    let t = (-0.5 * eps).exp();
    let t3 = (-1.5 * eps).exp();
    let p0 = 1.0 - t;
    (p0 * p0 / (0.5 * t - 0.5 * t3) + p0 + eps.exp() * (0.5 * t3 + 0.5 * t)).ln()
}

/// General budget of the geometric mixture.
pub fn zeta_geometric_mixture(params: &MixtureParams) -> Result<f64> {
    let gm = GeometricMixture::new(*params)?;
    let a1g = gm.constants().a1g;
    let outer = a1g * gm.outer_alpha().powf(-(gm.break_point() as f64));
    Ok((gm.inner_alpha() * (1.0 - outer) + gm.outer_alpha() * outer).ln())
}

/// General budget of the Laplace mixture released as a rounded count.
pub fn zeta_laplace_mixture(params: &MixtureParams) -> f64 {
    let lm = LaplaceMixture::new(*params);
    let f = |x: f64| lm.cdf(x);
    let ct = params.break_point();
    let eps = params.epsilon() / params.sensitivity();
    let reps = params.outer_epsilon() / params.sensitivity();
    let center = f(0.5) - f(-0.5);
    let next = f(-0.5) - f(-1.5);
    let inner = (f(-1.5) - f(-ct)) + (f(ct) - f(0.5));
    let outer = lm.outer_mass();
    (center * center / next + center + eps.exp() * inner + reps.exp() * outer).ln()
}

/// General privacy budget from the closed-form expressions.
pub fn zeta_closed_form(spec: &MechanismSpec) -> Result<f64> {
    spec.validate()?;
    match spec {
        MechanismSpec::Geometric { alpha } => Ok(alpha.ln()),
        MechanismSpec::RoundedLaplace { scale } => Ok(zeta_rounded_laplace(1.0 / scale)),
        MechanismSpec::GeometricMixture(p) => zeta_geometric_mixture(p),
        MechanismSpec::LaplaceMixture(p) => Ok(zeta_laplace_mixture(p)),
        other => Err(Error::UnsupportedSpec {
            operation: "zeta_closed_form",
            mechanism: other.name(),
        }),
    }
}

/// General privacy budget from its definition: exact summation over the
/// integer outcome space for discrete mechanisms, quadrature otherwise.
pub fn zeta_empirical(spec: &MechanismSpec, shift: i64) -> Result<f64> {
    if shift == 0 {
        return Err(invalid("shift must be nonzero"));
    }
    let model = spec.model()?;
    match model {
        NoiseModel::TruncatedLaplace(_) | NoiseModel::NoNoise => Ok(f64::INFINITY),
        NoiseModel::Laplace(_) | NoiseModel::LaplaceMixture(_) => continuous_zeta(&model, spec, shift),
        _ => Ok(discrete_zeta(&model, shift)),
    }
}

fn discrete_zeta(model: &NoiseModel, shift: i64) -> f64 {
    let term = |k: i64| {
        let p = model.integer_pmf(k);
        let q = model.integer_pmf(k - shift);
        if p > 0.0 {
            p.max(q * q / p)
        } else if q > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    let reach = shift.unsigned_abs() as i64;
    let mut sum = 0.0;
    for k in -reach..=reach {
        sum += term(k);
    }
    let mut k = reach + 1;
    loop {
        sum += term(k) + term(-k);
        // Terms beyond k are at most e^{worst loss} times the remaining tail.
        if model.integer_two_sided_tail(k as u64) < 1e-17 * sum.max(1.0) || k > 50_000_000 {
            break;
        }
        k += 1;
    }
    sum.ln()
}

fn continuous_zeta(model: &NoiseModel, spec: &MechanismSpec, shift: i64) -> Result<f64> {
    let s = shift as f64;
    let (scale, ct) = match spec {
        MechanismSpec::Laplace { scale } => (*scale, 0.0),
        MechanismSpec::LaplaceMixture(p) => (p.inner_scale().max(p.outer_scale()), p.break_point()),
        _ => unreachable!("continuous_zeta called on {}", spec.name()),
    };
    let reach = ct + s.abs() + 60.0 * scale;
    let integrand = |x: f64| {
        let p = model.density(x);
        let q = model.density(x - s);
        if p > 0.0 {
            p.max(q * q / p)
        } else {
            0.0
        }
    };
    let breaks = [0.0, s, -ct, ct, -ct + s, ct + s];
    let total = integrate_piecewise(integrand, -reach, reach, &breaks, 1e-14)?;
    Ok(total.ln())
}

/// One charge recorded in a [`BudgetLedger`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub zeta: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Ordered record of budget charges; the total is their plain sum.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BudgetLedger {
    entries: Vec<LedgerEntry>,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<LedgerEntry>) -> Result<Self> {
        for e in &entries {
            check_charge(e.zeta)?;
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.zeta).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn check_charge(zeta: f64) -> Result<()> {
    if zeta.is_finite() && zeta > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("budget charge must be positive and finite, got {zeta}")))
    }
}

/// Appends a charge, returning the extended ledger.
pub fn compose(ledger: &BudgetLedger, zeta: f64, label: &str) -> Result<BudgetLedger> {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    compose_at(ledger, zeta, label, timestamp)
}

pub fn compose_at(ledger: &BudgetLedger, zeta: f64, label: &str, timestamp: u64) -> Result<BudgetLedger> {
    check_charge(zeta)?;
    let mut entries = ledger.entries.clone();
    entries.push(LedgerEntry {
        label: label.to_string(),
        zeta,
        timestamp,
    });
    Ok(BudgetLedger { entries })
}

/// How a histogram release over disjoint cells is charged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramCharging {
    /// One record touches one cell, so the whole histogram costs one charge.
    #[default]
    Parallel,
    /// Basic composition over cells: `cells * zeta`.
    Sequential,
}

impl HistogramCharging {
    pub fn charge(self, zeta: f64, cells: usize) -> f64 {
        match self {
            Self::Parallel => zeta,
            Self::Sequential => zeta * cells as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Parallel => "parallel",
            Self::Sequential => "sequential",
        }
    }
}

/// Budget summary of a mechanism.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrivacyReport {
    pub worst_case_eps: f64,
    pub zeta: f64,
    /// Loss at each noise value `k`, maximized over both neighbor directions.
    pub per_outcome_losses: BTreeMap<i64, f64>,
}

/// Worst-case level, general budget and per-outcome losses over `|k| <= span`.
pub fn privacy_report(spec: &MechanismSpec, span: i64) -> Result<PrivacyReport> {
    let zeta = match spec {
        MechanismSpec::Laplace { scale } => 1.0 / scale,
        _ => zeta_closed_form(spec).or_else(|_| zeta_empirical(spec, 1))?,
    };
    let mut per_outcome_losses = BTreeMap::new();
    for k in -span..=span {
        per_outcome_losses.insert(k, privacy_loss(spec, k as f64, 1)?);
    }
    Ok(PrivacyReport {
        worst_case_eps: worst_case_eps(spec)?,
        zeta,
        per_outcome_losses,
    })
}

/// The budget a release with `spec` is charged, if it has a finite one.
/// Continuous Laplace is charged its epsilon.
pub fn release_charge(spec: &MechanismSpec) -> Result<f64> {
    match spec {
        MechanismSpec::Laplace { scale } => Ok(1.0 / scale),
        MechanismSpec::TruncatedLaplace { .. } | MechanismSpec::NoNoise => Err(Error::Refused(format!(
            "{} has no finite privacy budget to charge",
            spec.name()
        ))),
        _ => zeta_closed_form(spec),
    }
}

/// Standard family used as the comparison baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    RoundedLaplace,
    Geometric,
}

/// Epsilon of the standard `family` whose general budget equals `target_zeta`.
pub fn equivalent_epsilon(target_zeta: f64, family: NoiseFamily) -> Result<f64> {
    if !(target_zeta.is_finite() && target_zeta > 0.0) {
        return Err(invalid(format!("target budget must be positive, got {target_zeta}")));
    }
    match family {
        NoiseFamily::Geometric => Ok(target_zeta),
        NoiseFamily::RoundedLaplace => {
            let g = |e: f64| zeta_rounded_laplace(e) - target_zeta;
            let (mut lo, mut hi) = (target_zeta / 2.0, 2.0 * target_zeta);
            for _ in 0..40 {
                if g(lo) < 0.0 && g(hi) > 0.0 {
                    return bisect(g, lo, hi, 1e-12);
                }
                if g(lo) >= 0.0 {
                    lo /= 2.0;
                }
                if g(hi) <= 0.0 {
                    hi *= 2.0;
                }
            }
            Err(Error::Solver(format!(
                "could not bracket rounded-Laplace epsilon for budget {target_zeta}: \
                 zeta({lo:.3e}) = {:.6}, zeta({hi:.3e}) = {:.6}",
                zeta_rounded_laplace(lo),
                zeta_rounded_laplace(hi)
            )))
        }
    }
}

/// Which mixture family a usefulness radius is computed for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureFamily {
    Laplace,
    Geometric,
}

/// Accuracy radius `R` with `P[max_i |Y_i| >= R] <= delta` over `k` independent draws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UsefulnessBound {
    pub radius: f64,
    /// `ln(k a1 / delta) * sensitivity / eps`; for the geometric family rounded up
    /// to a whole number of outer steps.
    pub nominal_radius: f64,
    /// `k * P[|Y| >= radius]`, never above `delta`.
    pub union_tail: f64,
}

/// Usefulness radius of a mixture mechanism.
///
/// For the geometric family the returned `radius` is the smallest integer
/// `m > c_t` meeting the guarantee exactly; the nominal value can fall one step
/// short because the outer tail carries the factor `2 / (alpha1 + 1)` rather than 1.
pub fn usefulness_bound(
    params: &MixtureParams,
    family: MixtureFamily,
    k: u64,
    delta: f64,
) -> Result<UsefulnessBound> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if k == 0 {
        return Err(invalid("number of coordinates must be positive"));
    }
    let kf = k as f64;
    let ct = params.break_point();
    match family {
        MixtureFamily::Laplace => {
            let lm = LaplaceMixture::new(*params);
            let a1 = lm.constants().a1;
            let b1 = params.outer_scale();
            let radius = (kf * a1 / delta).ln() * b1;
            if radius <= ct {
                return Err(Error::BoundNotApplicable { radius, break_point: ct });
            }
            Ok(UsefulnessBound {
                radius,
                nominal_radius: radius,
                union_tail: kf * a1 * (-radius / b1).exp(),
            })
        }
        MixtureFamily::Geometric => {
            let gm = GeometricMixture::new(*params)?;
            let a1g = gm.constants().a1g;
            let al1 = gm.outer_alpha();
            let step = al1.ln();
            let real = (kf * a1g / delta).ln() / step;
            if real <= ct {
                return Err(Error::BoundNotApplicable { radius: real, break_point: ct });
            }
            let nominal = real.ceil();
            // P[|Y| >= m] = 2 a1g alpha1^{1-m} / (alpha1 + 1) for m > c_t
            let tail = |m: f64| 2.0 * a1g * al1.powf(1.0 - m) / (al1 + 1.0);
            let exact = 1.0 + (2.0 * kf * a1g / ((al1 + 1.0) * delta)).ln() / step;
            let mut m = exact.ceil().max(ct + 1.0);
            // guard against rounding at exact integers
            while kf * tail(m) > delta {
                m += 1.0;
            }
            while m - 1.0 >= ct + 1.0 && kf * tail(m - 1.0) <= delta {
                m -= 1.0;
            }
            Ok(UsefulnessBound {
                radius: m,
                nominal_radius: nominal,
                union_tail: kf * tail(m),
            })
        }
    }
}
