//! Independently coded reference values for the mixture families.
//!
//! Each mixture is rebuilt from its shape alone: exponential decay at rate
//! `eps` up to the break point, continuity there, then decay at rate `r eps`.
//! Normalization and moments come from plain summation or composite Simpson
//! quadrature, never from the library under test.
#![allow(dead_code)]

use pwmix::SeededStream;

pub struct Moments {
    pub abs: f64,
    pub var: f64,
    pub entropy: f64,
}

/// Unnormalized geometric-mixture weight at `k`.
pub fn geomix_weight(k: i64, alpha_in: f64, alpha_out: f64, ct: i64) -> f64 {
    let a = k.abs();
    if a <= ct {
        alpha_in.powi(-a as i32)
    } else {
        alpha_in.powi(-ct as i32) * alpha_out.powf(-((a - ct) as f64))
    }
}

pub fn geomix_oracle(eps: f64, ratio: f64, ct: i64) -> (Vec<f64>, i64) {
    let (ai, ao) = (eps.exp(), (ratio * eps).exp());
    let reach = ct + (80.0 / (ratio * eps)).ceil() as i64;
    let w: Vec<f64> = (-reach..=reach).map(|k| geomix_weight(k, ai, ao, ct)).collect();
    let z: f64 = w.iter().sum();
    (w.into_iter().map(|x| x / z).collect(), reach)
}

pub fn series_moments(p: &[f64], reach: i64) -> Moments {
    let mut m = Moments { abs: 0.0, var: 0.0, entropy: 0.0 };
    for (i, &q) in p.iter().enumerate() {
        let k = (i as i64 - reach) as f64;
        m.abs += q * k.abs();
        m.var += q * k * k;
        if q > 0.0 {
            m.entropy -= q * q.ln();
        }
    }
    m
}

/// Normalized continuous-mixture density built from its shape.
pub fn lapmix_oracle_pdf(eps: f64, ratio: f64, c: f64) -> impl Fn(f64) -> f64 {
    let (bi, bo) = (1.0 / eps, 1.0 / (ratio * eps));
    let z = 2.0 * (bi * (1.0 - (-c / bi).exp()) + (-c / bi).exp() * bo);
    move |x: f64| {
        let a = x.abs();
        let u = if a <= c { (-a / bi).exp() } else { (-c / bi - (a - c) / bo).exp() };
        u / z
    }
}

pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Twice the integral over `[0, inf)` split at the break point.
pub fn half_line<F: Fn(f64) -> f64>(f: F, c: f64, bo: f64) -> f64 {
    2.0 * (simpson(&f, 0.0, c, 40_000) + simpson(&f, c, c + 70.0 * bo, 400_000))
}

pub fn quadrature_moments(eps: f64, ratio: f64, c: f64) -> Moments {
    let f = lapmix_oracle_pdf(eps, ratio, c);
    let bo = 1.0 / (ratio * eps);
    Moments {
        abs: half_line(|x| x * f(x), c, bo),
        var: half_line(|x| x * x * f(x), c, bo),
        entropy: half_line(
            |x| {
                let p = f(x);
                if p > 0.0 {
                    -p * p.ln()
                } else {
                    0.0
                }
            },
            c,
            bo,
        ),
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// 50 fixed pseudo-random parameter sets.
pub fn parameter_sets() -> Vec<(f64, f64, i64)> {
    let mut s = SeededStream::new(2718, 1);
    (0..50)
        .map(|_| {
            let eps = 0.05 + 1.45 * s.uniform();
            let ratio = 1.0 + 9.0 * s.uniform();
            let eps = eps.min(5.0 / ratio);
            let ct = 1 + s.below(10) as i64;
            (eps, ratio, ct)
        })
        .collect()
}
