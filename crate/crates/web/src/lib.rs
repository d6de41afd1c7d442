//! Browser bindings: density curves, summary statistics and sample histograms.
//!
//! Every function takes the mechanism as `kind, eps, reps, ct` (the last two are
//! ignored by single-scale kinds) and returns JSON text, so the page needs no
//! glue beyond `JSON.parse`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use pwmix::accounting::{release_charge, worst_case_eps};
use pwmix::analytics::{integer_release_stats, mechanism_stats};
use pwmix::sampling::NoiseSampler;
use pwmix::{MechanismSpec, MixtureParams, SeededStream};

fn spec(kind: &str, eps: f64, reps: f64, ct: f64) -> Result<MechanismSpec, String> {
    let mix = || MixtureParams::from_outer_epsilon(eps, reps, ct).map_err(|e| e.to_string());
    let s = match kind {
        "geomix" => MechanismSpec::GeometricMixture(mix()?),
        "lapmix" => MechanismSpec::LaplaceMixture(mix()?),
        "geometric" => MechanismSpec::geometric(eps).map_err(|e| e.to_string())?,
        "laplace" => MechanismSpec::laplace(eps).map_err(|e| e.to_string())?,
        "rlaplace" => MechanismSpec::rounded_laplace(eps).map_err(|e| e.to_string())?,
        other => return Err(format!("unknown mechanism {other:?}")),
    };
    s.validate().map_err(|e| e.to_string())?;
    Ok(s)
}

fn error_json(message: String) -> String {
    json!({ "error": message }).to_string()
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(null)
    }
}

/// `{label, discrete, x: [...], y: [...]}` over `[-span, span]`; pmf values at
/// integers for discrete laws, `points` density samples otherwise.
#[wasm_bindgen]
pub fn density_curve(kind: &str, eps: f64, reps: f64, ct: f64, span: f64, points: u32) -> String {
    let run = || -> Result<String, String> {
        let s = spec(kind, eps, reps, ct)?;
        let model = s.model().map_err(|e| e.to_string())?;
        let span = span.clamp(1.0, 1e4);
        let (x, y): (Vec<f64>, Vec<f64>) = if model.is_discrete() {
            let m = span.ceil() as i64;
            (-m..=m).map(|k| (k as f64, model.integer_pmf(k))).unzip()
        } else {
            let n = points.clamp(2, 20_000) as usize;
            (0..n)
                .map(|i| {
                    let x = -span + 2.0 * span * i as f64 / (n - 1) as f64;
                    (x, model.density(x))
                })
                .unzip()
        };
        Ok(json!({ "label": s.label(), "discrete": model.is_discrete(), "x": x, "y": y }).to_string())
    };
    run().unwrap_or_else(error_json)
}

/// Mean absolute noise, variance, entropy (continuous and integer-released),
/// general budget and worst-case epsilon.
#[wasm_bindgen]
pub fn mechanism_summary(kind: &str, eps: f64, reps: f64, ct: f64) -> String {
    let run = || -> Result<String, String> {
        let s = spec(kind, eps, reps, ct)?;
        let st = mechanism_stats(&s).map_err(|e| e.to_string())?;
        let int = integer_release_stats(&s).map_err(|e| e.to_string())?;
        Ok(json!({
            "label": s.label(),
            "mean_abs_noise": st.mean_abs_noise,
            "variance": st.variance,
            "entropy": st.entropy,
            "integer": { "mean_abs_noise": int.mean_abs_noise, "variance": int.variance, "entropy": int.entropy },
            "zeta": finite(release_charge(&s).map_err(|e| e.to_string())?),
            "worst_case_eps": finite(worst_case_eps(&s).map_err(|e| e.to_string())?),
        })
        .to_string())
    };
    run().unwrap_or_else(error_json)
}

/// Histogram of `n` integer noise draws (continuous laws rounded), plus the
/// fraction within `|Y| <= ct`.
#[wasm_bindgen]
pub fn sample_histogram(kind: &str, eps: f64, reps: f64, ct: f64, n: u32, seed: u32) -> String {
    let run = || -> Result<String, String> {
        let s = spec(kind, eps, reps, ct)?;
        let sampler = NoiseSampler::new(&s, false).map_err(|e| e.to_string())?;
        let mut stream = SeededStream::new(seed as u64, 0);
        let n = n.clamp(1, 5_000_000);
        let mut counts = std::collections::BTreeMap::<i64, u64>::new();
        let mut within = 0u64;
        for _ in 0..n {
            let k = sampler.sample_integer(&mut stream);
            *counts.entry(k).or_insert(0) += 1;
            within += (k.unsigned_abs() as f64 <= ct) as u64;
        }
        let (values, freq): (Vec<i64>, Vec<u64>) = counts.into_iter().unzip();
        Ok(json!({
            "label": s.label(),
            "n": n,
            "values": values,
            "counts": freq,
            "within_bound_fraction": within as f64 / n as f64,
        })
        .to_string())
    };
    run().unwrap_or_else(error_json)
}
