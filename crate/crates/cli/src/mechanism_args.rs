use clap::{Args, ValueEnum};
use pwmix::{MechanismSpec, MixtureParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MechanismKind {
    Laplace,
    Rlaplace,
    Geometric,
    Lapmix,
    Geomix,
    Trunclap,
    /// Adds no noise. For harness testing only; requires --unsafe where noise matters.
    None,
}

#[derive(Args, Debug, Clone)]
pub struct MechanismArgs {
    #[arg(long, value_enum)]
    pub mechanism: MechanismKind,
    /// Privacy parameter (the inner one for mixtures).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Outer privacy parameter r*eps of a mixture.
    #[arg(long)]
    pub reps: Option<f64>,
    /// Break point of a mixture.
    #[arg(long)]
    pub ct: Option<f64>,
    /// L1 sensitivity.
    #[arg(long, default_value_t = 1.0)]
    pub sens: f64,
    /// Truncation bound for trunclap.
    #[arg(long)]
    pub bound: Option<f64>,
}

fn need(value: Option<f64>, flag: &str, kind: MechanismKind) -> Result<f64, String> {
    value.ok_or_else(|| format!("--{flag} is required for --mechanism {}", kind.to_possible_value().unwrap().get_name()))
}

impl MechanismArgs {
    pub fn spec(&self) -> Result<MechanismSpec, String> {
        let kind = self.mechanism;
        let sens = self.sens;
        if !(sens.is_finite() && sens > 0.0) {
            return Err(format!("--sens must be positive, got {sens}"));
        }
        let spec = match kind {
            MechanismKind::None => MechanismSpec::NoNoise,
            MechanismKind::Laplace => MechanismSpec::Laplace {
                scale: sens / need(self.eps, "eps", kind)?,
            },
            MechanismKind::Rlaplace => MechanismSpec::RoundedLaplace {
                scale: sens / need(self.eps, "eps", kind)?,
            },
            MechanismKind::Geometric => MechanismSpec::Geometric {
                alpha: (need(self.eps, "eps", kind)? / sens).exp(),
            },
            MechanismKind::Trunclap => MechanismSpec::TruncatedLaplace {
                scale: sens / need(self.eps, "eps", kind)?,
                bound: need(self.bound, "bound", kind)?,
            },
            MechanismKind::Lapmix | MechanismKind::Geomix => {
                let eps = need(self.eps, "eps", kind)?;
                let reps = need(self.reps, "reps", kind)?;
                let ct = need(self.ct, "ct", kind)?;
                if !(eps > 0.0 && reps > 0.0) {
                    return Err("--eps and --reps must be positive".into());
                }
                let p = MixtureParams::with_sensitivity(eps, reps / eps, ct, sens).map_err(|e| e.to_string())?;
                if kind == MechanismKind::Lapmix {
                    MechanismSpec::LaplaceMixture(p)
                } else {
                    MechanismSpec::GeometricMixture(p)
                }
            }
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}
