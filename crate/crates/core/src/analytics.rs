//! Closed-form first absolute moment, variance and entropy of every mechanism.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanism::{
    GeometricMixture, LapMixtureConstants, MechanismSpec, MixtureParams, NoiseModel,
};

/// Summary statistics of a zero-mean noise distribution. Entropy is in nats;
/// differential entropy for continuous laws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MechanismStats {
    pub mean_abs_noise: f64,
    pub variance: f64,
    pub entropy: f64,
}

/// Loss applied to the noise when computing expected cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFunction {
    Abs,
    Square,
}

// Sums over k >= m of q^k, k q^k and k^2 q^k, for 0 < q < 1.
fn tail0(q: f64, m: i64) -> f64 {
    q.powf(m as f64) / (1.0 - q)
}

fn tail1(q: f64, m: i64) -> f64 {
    let m = m as f64;
    q.powf(m) * (m - (m - 1.0) * q) / ((1.0 - q) * (1.0 - q))
}

fn tail2(q: f64, m: i64) -> f64 {
    let m = m as f64;
    q.powf(m) * (m * m - (2.0 * m * m - 2.0 * m - 1.0) * q + (m - 1.0) * (m - 1.0) * q * q) / (1.0 - q).powi(3)
}

/// One-sided partial sums of `c q^k` over `k` in `[lo, hi]` (`hi = None` for infinity),
/// returned as (mass, first moment, second moment).
fn geometric_segment(q: f64, lo: i64, hi: Option<i64>) -> (f64, f64, f64) {
    match hi {
        None => (tail0(q, lo), tail1(q, lo), tail2(q, lo)),
        Some(h) => (
            tail0(q, lo) - tail0(q, h + 1),
            tail1(q, lo) - tail1(q, h + 1),
            tail2(q, lo) - tail2(q, h + 1),
        ),
    }
}

/// Closed-form statistics of the continuous Laplace mixture.
pub fn lapmix_stats(params: &MixtureParams) -> MechanismStats {
    let LapMixtureConstants { a1, a2, .. } = LapMixtureConstants::new(params);
    let c = params.break_point();
    let b1 = params.outer_scale();
    let b2 = params.inner_scale();
    let e1 = (-c / b1).exp();
    let e2 = (-c / b2).exp();

    let inner_mass = a2 * (1.0 - e2);
    let inner_abs = a2 * (b2 - e2 * (c + b2));
    let inner_sq = a2 * (2.0 * b2 * b2 - e2 * (c * c + 2.0 * c * b2 + 2.0 * b2 * b2));
    let outer_mass = a1 * e1;
    let outer_abs = a1 * e1 * (c + b1);
    let outer_sq = a1 * e1 * (c * c + 2.0 * c * b1 + 2.0 * b1 * b1);

    // -ln p = -ln(a/2b) + |x|/b on each branch
    let entropy = -(a2 / (2.0 * b2)).ln() * inner_mass + inner_abs / b2 - (a1 / (2.0 * b1)).ln() * outer_mass
        + outer_abs / b1;
    MechanismStats {
        mean_abs_noise: inner_abs + outer_abs,
        variance: inner_sq + outer_sq,
        entropy,
    }
}

/// Closed-form statistics of the geometric mixture.
pub fn geomix_stats(params: &MixtureParams) -> Result<MechanismStats> {
    let gm = GeometricMixture::new(*params)?;
    Ok(geomix_stats_of(&gm))
}

fn geomix_stats_of(gm: &GeometricMixture) -> MechanismStats {
    let ct = gm.break_point();
    let consts = gm.constants();
    let (al2, al1) = (gm.inner_alpha(), gm.outer_alpha());
    let c2 = consts.a2g * (al2 - 1.0) / (al2 + 1.0);
    let c1 = consts.a1g * (al1 - 1.0) / (al1 + 1.0);
    let (m_in, s1_in, s2_in) = geometric_segment(1.0 / al2, 1, Some(ct));
    let (m_out, s1_out, s2_out) = geometric_segment(1.0 / al1, ct + 1, None);

    let mass_in = c2 * (1.0 + 2.0 * m_in);
    let abs_in = 2.0 * c2 * s1_in;
    let mass_out = 2.0 * c1 * m_out;
    let abs_out = 2.0 * c1 * s1_out;
    MechanismStats {
        mean_abs_noise: abs_in + abs_out,
        variance: 2.0 * c2 * s2_in + 2.0 * c1 * s2_out,
        entropy: -c2.ln() * mass_in + al2.ln() * abs_in - c1.ln() * mass_out + al1.ln() * abs_out,
    }
}

fn laplace_stats(b: f64) -> MechanismStats {
    MechanismStats {
        mean_abs_noise: b,
        variance: 2.0 * b * b,
        entropy: 1.0 + (2.0 * b).ln(),
    }
}

fn geometric_stats(alpha: f64) -> MechanismStats {
    let q = 1.0 / alpha;
    let c = (alpha - 1.0) / (alpha + 1.0);
    let abs = 2.0 * c * tail1(q, 1);
    MechanismStats {
        mean_abs_noise: abs,
        variance: 2.0 * c * tail2(q, 1),
        entropy: -c.ln() + alpha.ln() * abs,
    }
}

fn rounded_laplace_stats(b: f64) -> MechanismStats {
    // P(0) = 1 - e^{-1/2b}; P(k) = sinh(1/2b) e^{-|k|/b} for k != 0
    let p0 = -(-0.5 / b).exp_m1();
    let s = (0.5 / b).sinh();
    let q = (-1.0 / b).exp();
    let abs = 2.0 * s * tail1(q, 1);
    let mass = 2.0 * s * tail0(q, 1);
    MechanismStats {
        mean_abs_noise: abs,
        variance: 2.0 * s * tail2(q, 1),
        entropy: -p0 * p0.ln() - s.ln() * mass + abs / b,
    }
}

fn truncated_laplace_stats(b: f64, bound: f64) -> MechanismStats {
    let e = (-bound / b).exp();
    let mass = 1.0 - e;
    let abs = (b - e * (bound + b)) / mass;
    let sq = (2.0 * b * b - e * (bound * bound + 2.0 * bound * b + 2.0 * b * b)) / mass;
    MechanismStats {
        mean_abs_noise: abs,
        variance: sq,
        entropy: (2.0 * b * mass).ln() + abs / b,
    }
}

/// Statistics of the standard (non-mixture) mechanisms.
pub fn standard_stats(spec: &MechanismSpec) -> Result<MechanismStats> {
    spec.validate()?;
    match *spec {
        MechanismSpec::Laplace { scale } => Ok(laplace_stats(scale)),
        MechanismSpec::RoundedLaplace { scale } => Ok(rounded_laplace_stats(scale)),
        MechanismSpec::Geometric { alpha } => Ok(geometric_stats(alpha)),
        other => Err(Error::UnsupportedSpec {
            operation: "standard_stats",
            mechanism: other.name(),
        }),
    }
}

/// Statistics of the noise as drawn, for any mechanism.
pub fn mechanism_stats(spec: &MechanismSpec) -> Result<MechanismStats> {
    spec.validate()?;
    match spec {
        MechanismSpec::LaplaceMixture(p) => Ok(lapmix_stats(p)),
        MechanismSpec::GeometricMixture(p) => geomix_stats(p),
        MechanismSpec::TruncatedLaplace { scale, bound } => Ok(truncated_laplace_stats(*scale, *bound)),
        MechanismSpec::NoNoise => Ok(MechanismStats {
            mean_abs_noise: 0.0,
            variance: 0.0,
            entropy: 0.0,
        }),
        standard => standard_stats(standard),
    }
}

/// Statistics of the integer noise actually added to a count: continuous
/// laws are rounded to the nearest integer first. Entropy is the discrete
/// Shannon entropy of the rounded law.
pub fn integer_release_stats(spec: &MechanismSpec) -> Result<MechanismStats> {
    match *spec {
        MechanismSpec::Laplace { scale } | MechanismSpec::RoundedLaplace { scale } => {
            spec.validate()?;
            Ok(rounded_laplace_stats(scale))
        }
        MechanismSpec::Geometric { .. } | MechanismSpec::GeometricMixture(_) | MechanismSpec::NoNoise => {
            mechanism_stats(spec)
        }
        _ => Ok(series_stats(&spec.model()?)),
    }
}

/// Moments of the integer-valued noise by direct summation until the
/// two-sided tail mass is negligible.
fn series_stats(model: &NoiseModel) -> MechanismStats {
    let p0 = model.integer_pmf(0);
    let (mut abs, mut sq) = (0.0, 0.0);
    let mut entropy = if p0 > 0.0 { -p0 * p0.ln() } else { 0.0 };
    let mut k: i64 = 1;
    loop {
        let p = model.integer_pmf(k);
        let kf = k as f64;
        abs += 2.0 * kf * p;
        sq += 2.0 * kf * kf * p;
        if p > 0.0 {
            entropy -= 2.0 * p * p.ln();
        }
        let tail = model.integer_two_sided_tail(k as u64);
        if (tail * (kf + 1.0) * (kf + 1.0) < 1e-15 && k > 2) || k > 10_000_000 {
            break;
        }
        k += 1;
    }
    MechanismStats {
        mean_abs_noise: abs,
        variance: sq,
        entropy,
    }
}

/// Expected cost `E[L(Y)]` of the noise as drawn.
pub fn expected_cost(spec: &MechanismSpec, loss: LossFunction) -> Result<f64> {
    let stats = mechanism_stats(spec)?;
    Ok(match loss {
        LossFunction::Abs => stats.mean_abs_noise,
        LossFunction::Square => stats.variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn laplace_unit_scale() {
        let s = standard_stats(&MechanismSpec::Laplace { scale: 1.0 }).unwrap();
        assert_eq!(s.mean_abs_noise, 1.0);
        assert_eq!(s.variance, 2.0);
        assert!(close(s.entropy, 1.0 + 2f64.ln(), 1e-15));
    }

    #[test]
    fn lapmix_reference_row() {
        let s = lapmix_stats(&MixtureParams::new(0.2, 5.0, 5.0).unwrap());
        assert!(close(s.mean_abs_noise, 2.49, 0.02), "{s:?}");
        assert!(close(s.entropy, 2.54, 0.02));
        assert!(close(s.variance, 9.547, 1e-3));
        let s = lapmix_stats(&MixtureParams::new(0.1, 10.0, 6.0).unwrap());
        assert!(close(s.mean_abs_noise, 3.16, 0.02));
        assert!(close(s.variance, 14.64, 0.1));
        assert!(close(s.entropy, 2.73, 0.02));
    }

    #[test]
    fn geomix_reference_rows() {
        let s = geomix_stats(&MixtureParams::new(0.2, 5.0, 5.0).unwrap()).unwrap();
        assert!(close(s.mean_abs_noise, 2.48, 0.02) && close(s.variance, 9.61, 0.1) && close(s.entropy, 2.54, 0.02));
        let s = geomix_stats(&MixtureParams::new(0.1, 10.0, 6.0).unwrap()).unwrap();
        assert!(close(s.mean_abs_noise, 3.17, 0.02) && close(s.variance, 14.71, 0.1));
        let s = geomix_stats(&MixtureParams::new(0.25, 4.0, 4.0).unwrap()).unwrap();
        assert!(close(s.mean_abs_noise, 2.07, 0.02) && close(s.variance, 6.88, 0.1));
    }

    #[test]
    fn unit_ratio_collapses() {
        let eps = 0.37;
        let l = lapmix_stats(&MixtureParams::new(eps, 1.0, 3.3).unwrap());
        let s = laplace_stats(1.0 / eps);
        assert!(close(l.mean_abs_noise, s.mean_abs_noise, 1e-12));
        assert!(close(l.variance, s.variance, 1e-11));
        assert!(close(l.entropy, s.entropy, 1e-12));
        let g = geomix_stats(&MixtureParams::new(eps, 1.0, 4.0).unwrap()).unwrap();
        let s = geometric_stats(eps.exp());
        assert!(close(g.mean_abs_noise, s.mean_abs_noise, 1e-12));
        assert!(close(g.variance, s.variance, 1e-10));
        assert!(close(g.entropy, s.entropy, 1e-12));
    }

    #[test]
    fn standard_equivalents() {
        let s = standard_stats(&MechanismSpec::laplace(0.332).unwrap()).unwrap();
        assert!(close(s.mean_abs_noise, 3.0, 0.02) && close(s.variance, 18.1, 0.1) && close(s.entropy, 2.80, 0.02));
        let s = standard_stats(&MechanismSpec::geometric(0.328).unwrap()).unwrap();
        assert!(close(s.mean_abs_noise, 2.99, 0.02) && close(s.variance, 18.41, 0.1));
        assert!(matches!(
            standard_stats(&MechanismSpec::LaplaceMixture(MixtureParams::new(0.2, 5.0, 5.0).unwrap())),
            Err(Error::UnsupportedSpec { .. })
        ));
    }

    #[test]
    fn expected_cost_specializations() {
        let lap = MechanismSpec::Laplace { scale: 5.0 };
        assert_eq!(expected_cost(&lap, LossFunction::Abs).unwrap(), 5.0);
        assert_eq!(expected_cost(&lap, LossFunction::Square).unwrap(), 50.0);
        let lm = MechanismSpec::LaplaceMixture(MixtureParams::new(0.2, 5.0, 5.0).unwrap());
        assert!(close(expected_cost(&lm, LossFunction::Abs).unwrap(), 2.49, 0.02));
    }

    #[test]
    fn rounded_closed_form_matches_series() {
        let b = 1.0 / 0.332;
        let closed = rounded_laplace_stats(b);
        let series = series_stats(&MechanismSpec::Laplace { scale: b }.model().unwrap());
        assert!(close(closed.mean_abs_noise, series.mean_abs_noise, 1e-10));
        assert!(close(closed.variance, series.variance, 1e-9));
        assert!(close(closed.entropy, series.entropy, 1e-10));
    }

    #[test]
    fn truncated_laplace_reduces_spread() {
        let t = truncated_laplace_stats(2.0, 3.0);
        let l = laplace_stats(2.0);
        assert!(t.mean_abs_noise < l.mean_abs_noise && t.variance < l.variance && t.entropy < l.entropy);
        let wide = truncated_laplace_stats(2.0, 200.0);
        assert!(close(wide.variance, l.variance, 1e-9));
    }
}
