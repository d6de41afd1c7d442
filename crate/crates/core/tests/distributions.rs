//! Distribution and analytics checks against the oracles in `oracles/`.

use proptest::prelude::*;
use pwmix::analytics::{geomix_stats, integer_release_stats, lapmix_stats, mechanism_stats};
use pwmix::mechanism::{
    geometric_pmf, laplace_pdf, ContinuousNoise, DiscreteNoise, GeometricMixture, LaplaceMixture, Rounded,
};
use pwmix::{MechanismSpec, MixtureParams};

mod oracles;

use oracles::*;

#[test]
fn geomix_closed_form_matches_series_oracle() {
    for (eps, ratio, ct) in parameter_sets() {
        let p = MixtureParams::new(eps, ratio, ct as f64).unwrap();
        let got = geomix_stats(&p).unwrap();
        let (pmf, reach) = geomix_oracle(eps, ratio, ct);
        let want = series_moments(&pmf, reach);
        assert!(rel_close(got.mean_abs_noise, want.abs, 1e-9), "{eps} {ratio} {ct}: E|Y| {} vs {}", got.mean_abs_noise, want.abs);
        assert!(rel_close(got.variance, want.var, 1e-9), "{eps} {ratio} {ct}: var {} vs {}", got.variance, want.var);
        assert!(rel_close(got.entropy, want.entropy, 1e-9), "{eps} {ratio} {ct}: H {} vs {}", got.entropy, want.entropy);
    }
}

#[test]
fn lapmix_closed_form_matches_quadrature_oracle() {
    for (eps, ratio, ct) in parameter_sets() {
        // non-integer break points are fine for the continuous law
        let c = ct as f64 * 0.75;
        let p = MixtureParams::new(eps, ratio, c).unwrap();
        let got = lapmix_stats(&p);
        let want = quadrature_moments(eps, ratio, c);
        assert!(rel_close(got.mean_abs_noise, want.abs, 1e-7), "{eps} {ratio} {c}: E|Y| {} vs {}", got.mean_abs_noise, want.abs);
        assert!(rel_close(got.variance, want.var, 1e-7), "{eps} {ratio} {c}: var {} vs {}", got.variance, want.var);
        assert!(rel_close(got.entropy, want.entropy, 1e-7), "{eps} {ratio} {c}: H {} vs {}", got.entropy, want.entropy);
    }
}

#[test]
fn pmf_and_pdf_match_shape_oracles_pointwise() {
    for (eps, ratio, ct) in parameter_sets().into_iter().take(10) {
        let p = MixtureParams::new(eps, ratio, ct as f64).unwrap();
        let gm = GeometricMixture::new(p).unwrap();
        let (pmf, reach) = geomix_oracle(eps, ratio, ct);
        for k in -3 * ct..=3 * ct {
            let want = pmf[(k + reach) as usize];
            assert!((gm.pmf(k) - want).abs() <= 1e-12 * want.max(1e-3), "k={k}");
        }
        let lm = LaplaceMixture::new(p);
        let f = lapmix_oracle_pdf(eps, ratio, ct as f64);
        for i in -60..=60 {
            let x = i as f64 * ct as f64 / 20.0;
            assert!((lm.pdf(x) - f(x)).abs() <= 1e-12 * f(x).max(1e-3), "x={x}");
        }
    }
}

#[test]
fn quadrature_normalization_of_continuous_laws() {
    for (eps, ratio, ct) in parameter_sets().into_iter().take(10) {
        let c = ct as f64;
        let lm = LaplaceMixture::new(MixtureParams::new(eps, ratio, c).unwrap());
        let total = half_line(|x| lm.pdf(x), c, 1.0 / (ratio * eps));
        assert!((total - 1.0).abs() < 1e-9, "lapmix mass {total}");
        let total = half_line(|x| laplace_pdf(x, 1.0 / eps).unwrap(), c, 1.0 / eps);
        assert!((total - 1.0).abs() < 1e-9, "laplace mass {total}");
    }
}

#[test]
fn rounded_laplace_series_matches_release_stats() {
    for eps in [0.1, 0.3318, 0.7, 1.5] {
        let spec = MechanismSpec::rounded_laplace(eps).unwrap();
        let model = Rounded(pwmix::mechanism::Laplace::new(1.0 / eps).unwrap());
        let reach = (90.0 / eps) as i64;
        let pmf: Vec<f64> = (-reach..=reach).map(|k| model.pmf(k)).collect();
        let want = series_moments(&pmf, reach);
        let got = integer_release_stats(&spec).unwrap();
        assert!(rel_close(got.mean_abs_noise, want.abs, 1e-9));
        assert!(rel_close(got.variance, want.var, 1e-9));
        assert!(rel_close(got.entropy, want.entropy, 1e-9));
    }
}

#[test]
fn standard_geometric_stats_match_series() {
    for eps in [0.05, 0.328, 1.0, 3.0] {
        let spec = MechanismSpec::geometric(eps).unwrap();
        let reach = (90.0 / eps) as i64;
        let pmf: Vec<f64> = (-reach..=reach).map(|k| geometric_pmf(k, eps.exp()).unwrap()).collect();
        let want = series_moments(&pmf, reach);
        let got = mechanism_stats(&spec).unwrap();
        assert!(rel_close(got.mean_abs_noise, want.abs, 1e-9));
        assert!(rel_close(got.variance, want.var, 1e-9));
        assert!(rel_close(got.entropy, want.entropy, 1e-9));
    }
}

#[test]
fn inner_scale_uses_sensitivity() {
    let p = MixtureParams::with_sensitivity(0.5, 4.0, 3.0, 2.0).unwrap();
    assert!((p.inner_scale() - 4.0).abs() < 1e-15);
    assert!((p.outer_scale() - 1.0).abs() < 1e-15);
    assert!((p.outer_alpha() - 1f64.exp()).abs() < 1e-15);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(MixtureParams::new(0.0, 2.0, 5.0).is_err());
    assert!(MixtureParams::new(0.2, 0.0, 5.0).is_err());
    assert!(MixtureParams::new(0.2, 2.0, -1.0).is_err());
    assert!(MixtureParams::new(f64::NAN, 2.0, 1.0).is_err());
    assert!(MechanismSpec::geometric(-1.0).is_err());
}

fn mixture_params() -> impl Strategy<Value = MixtureParams> {
    (0.05f64..2.0, 1.0f64..8.0, 1u32..12).prop_map(|(e, r, c)| MixtureParams::new(e, r, c as f64).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geomix_cdf_is_monotone_and_sums_pmf(p in mixture_params(), k in -40i64..40) {
        let gm = GeometricMixture::new(p).unwrap();
        let c0 = gm.cdf(k as f64);
        let c1 = gm.cdf(k as f64 + 1.0);
        prop_assert!(c1 >= c0);
        prop_assert!((c1 - c0 - gm.pmf(k + 1)).abs() < 1e-12);
        prop_assert!((gm.cdf(k as f64) + gm.sf(k as f64) - 1.0).abs() < 1e-12);
        prop_assert!((gm.pmf(k) - gm.pmf(-k)).abs() < 1e-15);
    }

    #[test]
    fn geomix_cdf_limits(p in mixture_params()) {
        let gm = GeometricMixture::new(p).unwrap();
        prop_assert!(gm.cdf(-1e7) < 1e-12);
        prop_assert!((gm.cdf(1e7) - 1.0).abs() < 1e-12);
        // symmetric: P(Y <= -1) = P(Y >= 1)
        prop_assert!((gm.cdf(-1.0) - gm.sf(0.0)).abs() < 1e-12);
    }

    #[test]
    fn lapmix_cdf_derivative_is_pdf(p in mixture_params(), x in -40.0f64..40.0) {
        let lm = LaplaceMixture::new(p);
        let c = p.break_point();
        prop_assume!((x.abs() - c).abs() > 1e-3 && x.abs() > 1e-3);
        let h = 1e-5;
        let d = (lm.cdf(x + h) - lm.cdf(x - h)) / (2.0 * h);
        prop_assert!((d - lm.pdf(x)).abs() < 1e-6 * lm.pdf(x).max(1e-3));
    }

    #[test]
    fn lapmix_cdf_is_continuous_and_monotone(p in mixture_params(), x in -40.0f64..40.0, dx in 0.0f64..5.0) {
        let lm = LaplaceMixture::new(p);
        prop_assert!(lm.cdf(x + dx) >= lm.cdf(x));
        let c = p.break_point();
        for b in [-c, 0.0, c] {
            prop_assert!((lm.cdf(b - 1e-12) - lm.cdf(b + 1e-12)).abs() < 1e-9);
        }
        prop_assert!((lm.cdf(x) + lm.sf(x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_ratio_collapses_to_standard(eps in 0.05f64..3.0, c in 1u32..10, k in -30i64..30) {
        let p = MixtureParams::new(eps, 1.0, c as f64).unwrap();
        let gm = GeometricMixture::new(p).unwrap();
        prop_assert!((gm.pmf(k) - geometric_pmf(k, eps.exp()).unwrap()).abs() < 1e-12);
        let lm = LaplaceMixture::new(p);
        let x = k as f64 * 0.37;
        prop_assert!((lm.pdf(x) - laplace_pdf(x, 1.0 / eps).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn larger_ratio_concentrates_mass(eps in 0.05f64..1.0, r in 1.0f64..6.0, c in 2u32..10) {
        let lo = geomix_stats(&MixtureParams::new(eps, r, c as f64).unwrap()).unwrap();
        let hi = geomix_stats(&MixtureParams::new(eps, r * 1.5, c as f64).unwrap()).unwrap();
        prop_assert!(hi.mean_abs_noise <= lo.mean_abs_noise + 1e-12);
        prop_assert!(hi.entropy <= lo.entropy + 1e-12);
    }

    #[test]
    fn standard_noise_shrinks_with_eps(eps in 0.05f64..3.0) {
        let a = mechanism_stats(&MechanismSpec::geometric(eps).unwrap()).unwrap();
        let b = mechanism_stats(&MechanismSpec::geometric(eps * 1.2).unwrap()).unwrap();
        prop_assert!(b.variance < a.variance);
        prop_assert!(b.entropy < a.entropy);
    }
}
