//! Mechanism parameterizations and exact noise distributions.
//!
//! Every distribution here is symmetric about zero. The two mixture families
//! fuse an inner component with privacy parameter `epsilon` on `|x| <= c_t`
//! and an outer component with privacy parameter `ratio * epsilon` beyond it,
//! rescaled so the density (or mass function) is continuous at the break
//! point and has unit mass. The point `|x| = c_t` belongs to the inner branch.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Parameters shared by the Laplace and geometric mixture families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureParamsRepr", into = "MixtureParamsRepr")]
pub struct MixtureParams {
    epsilon: f64,
    ratio: f64,
    break_point: f64,
    sensitivity: f64,
}

impl MixtureParams {
    /// Mixture with inner parameter `epsilon`, outer parameter
    /// `ratio * epsilon` and break point `break_point`, sensitivity 1.
    pub fn new(epsilon: f64, ratio: f64, break_point: f64) -> Result<Self> {
        Self::with_sensitivity(epsilon, ratio, break_point, 1.0)
    }

    /// Same as [`MixtureParams::new`] but takes the outer parameter `r * epsilon` directly.
    pub fn from_outer_epsilon(epsilon: f64, outer_epsilon: f64, break_point: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        check_positive("outer epsilon", outer_epsilon)?;
        Self::new(epsilon, outer_epsilon / epsilon, break_point)
    }

    pub fn with_sensitivity(epsilon: f64, ratio: f64, break_point: f64, sensitivity: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        check_positive("ratio", ratio)?;
        check_positive("break point", break_point)?;
        check_positive("sensitivity", sensitivity)?;
        Ok(Self {
            epsilon,
            ratio,
            break_point,
            sensitivity,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// The outer privacy parameter `r * epsilon`.
    pub fn outer_epsilon(&self) -> f64 {
        self.ratio * self.epsilon
    }

    pub fn break_point(&self) -> f64 {
        self.break_point
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    /// Inner Laplace scale `b2 = sensitivity / epsilon`.
    pub fn inner_scale(&self) -> f64 {
        self.sensitivity / self.epsilon
    }

    /// Outer Laplace scale `b1 = sensitivity / (r * epsilon)`.
    pub fn outer_scale(&self) -> f64 {
        self.sensitivity / self.outer_epsilon()
    }

    /// Inner geometric base `alpha2 = exp(epsilon / sensitivity)`.
    pub fn inner_alpha(&self) -> f64 {
        (self.epsilon / self.sensitivity).exp()
    }

    /// Outer geometric base `alpha1 = exp(r * epsilon / sensitivity)`.
    pub fn outer_alpha(&self) -> f64 {
        (self.outer_epsilon() / self.sensitivity).exp()
    }

    /// The break point as an integer; the geometric family requires `c_t >= 1` integral.
    pub fn integer_break_point(&self) -> Result<i64> {
        let ct = self.break_point;
        if ct.fract() != 0.0 || ct < 1.0 || ct > i32::MAX as f64 {
            return Err(invalid(format!(
                "geometric mixtures need a positive integer break point, got {ct}"
            )));
        }
        Ok(ct as i64)
    }
}

#[derive(Serialize, Deserialize)]
struct MixtureParamsRepr {
    epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outer_epsilon: Option<f64>,
    break_point: f64,
    #[serde(default = "unit_sensitivity")]
    sensitivity: f64,
}

fn unit_sensitivity() -> f64 {
    1.0
}

impl TryFrom<MixtureParamsRepr> for MixtureParams {
    type Error = Error;

    fn try_from(repr: MixtureParamsRepr) -> Result<Self> {
        let ratio = match (repr.ratio, repr.outer_epsilon) {
            (Some(r), None) => r,
            (None, Some(outer)) => outer / repr.epsilon,
            (Some(_), Some(_)) => return Err(invalid("give either ratio or outer_epsilon, not both")),
            (None, None) => return Err(invalid("missing ratio or outer_epsilon")),
        };
        Self::with_sensitivity(repr.epsilon, ratio, repr.break_point, repr.sensitivity)
    }
}

impl From<MixtureParams> for MixtureParamsRepr {
    fn from(p: MixtureParams) -> Self {
        Self {
            epsilon: p.epsilon,
            ratio: Some(p.ratio),
            outer_epsilon: None,
            break_point: p.break_point,
            sensitivity: p.sensitivity,
        }
    }
}

/// The noise mechanism applied to a query answer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MechanismSpec {
    Laplace { scale: f64 },
    /// Laplace noise rounded to the nearest integer (half away from zero).
    RoundedLaplace { scale: f64 },
    Geometric { alpha: f64 },
    LaplaceMixture(MixtureParams),
    GeometricMixture(MixtureParams),
    /// Laplace noise conditioned on `|Y| <= bound`. Not differentially private.
    TruncatedLaplace { scale: f64, bound: f64 },
    /// Adds nothing. Degenerate stub for harness tests; not differentially private.
    NoNoise,
}

impl MechanismSpec {
    /// Laplace mechanism for privacy parameter `epsilon` and sensitivity 1.
    pub fn laplace(epsilon: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        Ok(Self::Laplace { scale: 1.0 / epsilon })
    }

    pub fn rounded_laplace(epsilon: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        Ok(Self::RoundedLaplace { scale: 1.0 / epsilon })
    }

    /// Geometric mechanism with `alpha = exp(epsilon)`.
    pub fn geometric(epsilon: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        Ok(Self::Geometric { alpha: epsilon.exp() })
    }

    pub fn truncated_laplace(epsilon: f64, bound: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        check_positive("bound", bound)?;
        Ok(Self::TruncatedLaplace {
            scale: 1.0 / epsilon,
            bound,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Laplace { scale } | Self::RoundedLaplace { scale } => check_positive("scale", scale),
            Self::Geometric { alpha } => {
                if alpha.is_finite() && alpha > 1.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("geometric alpha must exceed 1, got {alpha}")))
                }
            }
            Self::LaplaceMixture(p) => {
                MixtureParams::with_sensitivity(p.epsilon, p.ratio, p.break_point, p.sensitivity).map(|_| ())
            }
            Self::GeometricMixture(p) => {
                MixtureParams::with_sensitivity(p.epsilon, p.ratio, p.break_point, p.sensitivity)?;
                p.integer_break_point().map(|_| ())
            }
            Self::TruncatedLaplace { scale, bound } => {
                check_positive("scale", scale)?;
                check_positive("bound", bound)
            }
            Self::NoNoise => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Laplace { .. } => "laplace",
            Self::RoundedLaplace { .. } => "rounded_laplace",
            Self::Geometric { .. } => "geometric",
            Self::LaplaceMixture(_) => "laplace_mixture",
            Self::GeometricMixture(_) => "geometric_mixture",
            Self::TruncatedLaplace { .. } => "truncated_laplace",
            Self::NoNoise => "no_noise",
        }
    }

    /// Short human-readable label including parameters.
    pub fn label(&self) -> String {
        match self {
            Self::Laplace { scale } => format!("Lap(eps={:.4})", 1.0 / scale),
            Self::RoundedLaplace { scale } => format!("RoundLap(eps={:.4})", 1.0 / scale),
            Self::Geometric { alpha } => format!("Geo(eps={:.4})", alpha.ln()),
            Self::LaplaceMixture(p) => format!(
                "Lm(ct={}, eps={:.4}, reps={:.4})",
                p.break_point(),
                p.epsilon(),
                p.outer_epsilon()
            ),
            Self::GeometricMixture(p) => format!(
                "Gm(ct={}, eps={:.4}, reps={:.4})",
                p.break_point(),
                p.epsilon(),
                p.outer_epsilon()
            ),
            Self::TruncatedLaplace { scale, bound } => format!("TruncLap(eps={:.4}, c={bound})", 1.0 / scale),
            Self::NoNoise => "NoNoise".to_string(),
        }
    }

    /// False for mechanisms with unbounded privacy loss.
    pub fn is_private(&self) -> bool {
        !matches!(self, Self::TruncatedLaplace { .. } | Self::NoNoise)
    }

    /// Whether the noise takes integer values as drawn.
    pub fn is_integer_valued(&self) -> bool {
        matches!(
            self,
            Self::RoundedLaplace { .. } | Self::Geometric { .. } | Self::GeometricMixture(_) | Self::NoNoise
        )
    }

    /// Fails with [`Error::Refused`] unless the mechanism is private or `allow_unsafe` is set.
    pub fn ensure_permitted(&self, allow_unsafe: bool) -> Result<()> {
        if self.is_private() || allow_unsafe {
            Ok(())
        } else {
            Err(Error::Refused(format!(
                "{} has unbounded privacy loss and provides no differential privacy; pass the unsafe flag to use it",
                self.name()
            )))
        }
    }

    /// Builds the distribution object for this mechanism.
    pub fn model(&self) -> Result<NoiseModel> {
        self.validate()?;
        Ok(match *self {
            Self::Laplace { scale } => NoiseModel::Laplace(Laplace::new(scale)?),
            Self::RoundedLaplace { scale } => NoiseModel::RoundedLaplace(Rounded(Laplace::new(scale)?)),
            Self::Geometric { alpha } => NoiseModel::Geometric(Geometric::new(alpha)?),
            Self::LaplaceMixture(p) => NoiseModel::LaplaceMixture(LaplaceMixture::new(p)),
            Self::GeometricMixture(p) => NoiseModel::GeometricMixture(GeometricMixture::new(p)?),
            Self::TruncatedLaplace { scale, bound } => {
                NoiseModel::TruncatedLaplace(TruncatedLaplace::new(scale, bound)?)
            }
            Self::NoNoise => NoiseModel::NoNoise,
        })
    }
}

/// A symmetric distribution on the real line.
pub trait ContinuousNoise {
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
    /// `P(Y > x)`; accurate in the upper tail.
    fn sf(&self, x: f64) -> f64 {
        self.cdf(-x)
    }
}

/// A symmetric distribution on the integers.
pub trait DiscreteNoise {
    fn pmf(&self, k: i64) -> f64;
    /// `P(Y <= x)` for real `x`; a right-continuous step function.
    fn cdf(&self, x: f64) -> f64;
    /// `P(Y > x)`.
    fn sf(&self, x: f64) -> f64 {
        // P(Y > x) = P(Y < -x) = P(Y <= ceil(-x) - 1)
        self.cdf((-x).ceil() - 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Laplace {
    scale: f64,
}

impl Laplace {
    pub fn new(scale: f64) -> Result<Self> {
        check_positive("scale", scale)?;
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl ContinuousNoise for Laplace {
    fn pdf(&self, x: f64) -> f64 {
        (-x.abs() / self.scale).exp() / (2.0 * self.scale)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.5 * (x / self.scale).exp()
        } else {
            1.0 - 0.5 * (-x / self.scale).exp()
        }
    }

    fn sf(&self, x: f64) -> f64 {
        if x > 0.0 {
            0.5 * (-x / self.scale).exp()
        } else {
            1.0 - 0.5 * (x / self.scale).exp()
        }
    }
}

/// Density `(1/2b) exp(-|x|/b)`.
pub fn laplace_pdf(x: f64, scale: f64) -> Result<f64> {
    Ok(Laplace::new(scale)?.pdf(x))
}

/// Normalizers of the Laplace mixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LapMixtureConstants {
    pub a1: f64,
    pub a2: f64,
    pub p1: f64,
    pub p2: f64,
    pub k_c: f64,
}

impl LapMixtureConstants {
    pub fn new(params: &MixtureParams) -> Self {
        let ct = params.break_point();
        let b1 = params.outer_scale();
        let b2 = params.inner_scale();
        let e1 = (-ct / b1).exp();
        let e2 = (-ct / b2).exp();
        let joint = e1 / (2.0 * b1) + e2 / (2.0 * b2);
        let p1 = e2 / (b2 * joint);
        let p2 = e1 / (b1 * joint);
        let norm = p1 * e1 + p2 * (1.0 - e2);
        let a1 = p1 / norm;
        let a2 = p2 / norm;
        let k_c = a1 / 2.0 * e1 - a2 / 2.0 * e2;
        Self { a1, a2, p1, p2, k_c }
    }
}

pub fn lapmix_constants(params: &MixtureParams) -> LapMixtureConstants {
    LapMixtureConstants::new(params)
}

/// Laplace piecewise mixture with precomputed normalizers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceMixture {
    params: MixtureParams,
    constants: LapMixtureConstants,
    inner_scale: f64,
    outer_scale: f64,
}

impl LaplaceMixture {
    pub fn new(params: MixtureParams) -> Self {
        Self {
            params,
            constants: LapMixtureConstants::new(&params),
            inner_scale: params.inner_scale(),
            outer_scale: params.outer_scale(),
        }
    }

    pub fn params(&self) -> &MixtureParams {
        &self.params
    }

    pub fn constants(&self) -> &LapMixtureConstants {
        &self.constants
    }

    /// `P(|Y| > c_t) = a1 exp(-c_t / b1)`.
    pub fn outer_mass(&self) -> f64 {
        self.constants.a1 * (-self.params.break_point() / self.outer_scale).exp()
    }

    /// CDF restricted to `x <= 0`.
    fn lower_cdf(&self, x: f64) -> f64 {
        let LapMixtureConstants { a1, a2, k_c, .. } = self.constants;
        if x < -self.params.break_point() {
            a1 / 2.0 * (x / self.outer_scale).exp()
        } else {
            a2 / 2.0 * (x / self.inner_scale).exp() + k_c
        }
    }
}

impl ContinuousNoise for LaplaceMixture {
    fn pdf(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= self.params.break_point() {
            self.constants.a2 / (2.0 * self.inner_scale) * (-ax / self.inner_scale).exp()
        } else {
            self.constants.a1 / (2.0 * self.outer_scale) * (-ax / self.outer_scale).exp()
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.lower_cdf(x)
        } else {
            1.0 - self.lower_cdf(-x)
        }
    }

    fn sf(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.lower_cdf(-x)
        } else {
            1.0 - self.lower_cdf(x)
        }
    }
}

pub fn lapmix_pdf(x: f64, params: &MixtureParams) -> f64 {
    LaplaceMixture::new(*params).pdf(x)
}

pub fn lapmix_cdf(x: f64, params: &MixtureParams) -> f64 {
    LaplaceMixture::new(*params).cdf(x)
}

/// Symmetric geometric (discrete Laplace) distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometric {
    alpha: f64,
}

impl Geometric {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(invalid(format!("geometric alpha must exceed 1, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// `P(Y <= k)` for integer `k < 0` under the symmetric geometric law: `alpha^(k+1) / (alpha+1)`.
fn geometric_lower_tail(alpha: f64, k: i64) -> f64 {
    alpha.powf((k + 1) as f64) / (alpha + 1.0)
}

impl DiscreteNoise for Geometric {
    fn pmf(&self, k: i64) -> f64 {
        (self.alpha - 1.0) / (self.alpha + 1.0) * self.alpha.powf(-(k.unsigned_abs() as f64))
    }

    fn cdf(&self, x: f64) -> f64 {
        let k = x.floor();
        if k < 0.0 {
            if k < i64::MIN as f64 {
                return 0.0;
            }
            geometric_lower_tail(self.alpha, k as i64)
        } else {
            1.0 - self.alpha.powf(-k) / (self.alpha + 1.0)
        }
    }
}

/// Mass `((alpha-1)/(alpha+1)) alpha^(-|k|)`.
pub fn geometric_pmf(k: i64, alpha: f64) -> Result<f64> {
    Ok(Geometric::new(alpha)?.pmf(k))
}

/// Normalizers of the geometric mixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeoMixtureConstants {
    pub a1g: f64,
    pub a2g: f64,
    pub g1: f64,
    pub g2: f64,
    pub k_c: f64,
}

impl GeoMixtureConstants {
    pub fn new(params: &MixtureParams) -> Result<Self> {
        let ct = params.integer_break_point()?;
        let alpha1 = params.outer_alpha();
        let alpha2 = params.inner_alpha();
        let geo1 = Geometric::new(alpha1)?.pmf(-ct);
        let geo2 = Geometric::new(alpha2)?.pmf(-ct);
        let g1 = 2.0 * geo2 / (geo2 + geo1);
        let g2 = 2.0 * geo1 / (geo2 + geo1);
        let t1 = alpha1.powf(-(ct as f64));
        let t2 = alpha2.powf(-(ct as f64));
        let norm = g1 * t1 + g2 * (1.0 - t2);
        let a1g = g1 / norm;
        let a2g = g2 / norm;
        let k_c = a1g / 2.0 * t1 - a2g / 2.0 * t2;
        Ok(Self { a1g, a2g, g1, g2, k_c })
    }
}

pub fn geomix_constants(params: &MixtureParams) -> Result<GeoMixtureConstants> {
    GeoMixtureConstants::new(params)
}

/// Geometric piecewise mixture with precomputed normalizers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricMixture {
    params: MixtureParams,
    constants: GeoMixtureConstants,
    break_point: i64,
    inner_alpha: f64,
    outer_alpha: f64,
    /// Offset making the inner CDF branch continuous with the outer tail.
    cdf_offset: f64,
}

impl GeometricMixture {
    pub fn new(params: MixtureParams) -> Result<Self> {
        let constants = GeoMixtureConstants::new(&params)?;
        let break_point = params.integer_break_point()?;
        let inner_alpha = params.inner_alpha();
        let outer_alpha = params.outer_alpha();
        let ct = break_point as f64;
        let cdf_offset = constants.a1g * outer_alpha.powf(-ct) / (outer_alpha + 1.0)
            - constants.a2g * inner_alpha.powf(-ct) / (inner_alpha + 1.0);
        Ok(Self {
            params,
            constants,
            break_point,
            inner_alpha,
            outer_alpha,
            cdf_offset,
        })
    }

    pub fn params(&self) -> &MixtureParams {
        &self.params
    }

    pub fn constants(&self) -> &GeoMixtureConstants {
        &self.constants
    }

    pub fn break_point(&self) -> i64 {
        self.break_point
    }

    pub fn inner_alpha(&self) -> f64 {
        self.inner_alpha
    }

    pub fn outer_alpha(&self) -> f64 {
        self.outer_alpha
    }

    /// `P(|Y| > c_t) = 2 a1g alpha1^(-c_t) / (alpha1 + 1)`.
    pub fn outer_mass(&self) -> f64 {
        2.0 * self.constants.a1g * self.outer_alpha.powf(-(self.break_point as f64)) / (self.outer_alpha + 1.0)
    }

    /// `P(Y <= k)` for integer `k <= -1`.
    fn lower_cdf(&self, k: i64) -> f64 {
        if k < -self.break_point {
            self.constants.a1g * geometric_lower_tail(self.outer_alpha, k)
        } else {
            self.constants.a2g * geometric_lower_tail(self.inner_alpha, k) + self.cdf_offset
        }
    }
}

impl DiscreteNoise for GeometricMixture {
    fn pmf(&self, k: i64) -> f64 {
        let ak = k.unsigned_abs();
        if ak <= self.break_point as u64 {
            let a = self.inner_alpha;
            self.constants.a2g * (a - 1.0) / (a + 1.0) * a.powf(-(ak as f64))
        } else {
            let a = self.outer_alpha;
            self.constants.a1g * (a - 1.0) / (a + 1.0) * a.powf(-(ak as f64))
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let k = x.floor();
        if k <= -1.0 {
            if k < -((1u64 << 62) as f64) {
                return 0.0;
            }
            self.lower_cdf(k as i64)
        } else {
            if k > (1u64 << 62) as f64 {
                return 1.0;
            }
            1.0 - self.lower_cdf(-(k as i64) - 1)
        }
    }

    fn sf(&self, x: f64) -> f64 {
        let k = x.floor();
        if k >= 0.0 {
            if k > (1u64 << 62) as f64 {
                return 0.0;
            }
            self.lower_cdf(-(k as i64) - 1)
        } else {
            1.0 - self.cdf(x)
        }
    }
}

pub fn geomix_pmf(k: i64, params: &MixtureParams) -> Result<f64> {
    Ok(GeometricMixture::new(*params)?.pmf(k))
}

pub fn geomix_cdf(x: f64, params: &MixtureParams) -> Result<f64> {
    Ok(GeometricMixture::new(*params)?.cdf(x))
}

/// Laplace noise conditioned on `|Y| <= bound`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedLaplace {
    base: Laplace,
    bound: f64,
    mass: f64,
}

impl TruncatedLaplace {
    pub fn new(scale: f64, bound: f64) -> Result<Self> {
        check_positive("bound", bound)?;
        let base = Laplace::new(scale)?;
        let mass = 1.0 - (-bound / scale).exp();
        Ok(Self { base, bound, mass })
    }

    pub fn scale(&self) -> f64 {
        self.base.scale()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

impl ContinuousNoise for TruncatedLaplace {
    fn pdf(&self, x: f64) -> f64 {
        if x.abs() <= self.bound {
            self.base.pdf(x) / self.mass
        } else {
            0.0
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let c = self.bound;
        if x < -c {
            0.0
        } else if x >= c {
            1.0
        } else {
            (self.base.cdf(x) - self.base.cdf(-c)) / self.mass
        }
    }
}

/// Integer-valued noise obtained by rounding a continuous law to the nearest integer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rounded<D>(pub D);

impl<D: ContinuousNoise> DiscreteNoise for Rounded<D> {
    fn pmf(&self, k: i64) -> f64 {
        let ak = k.unsigned_abs() as f64;
        if ak == 0.0 {
            1.0 - 2.0 * self.0.sf(0.5)
        } else {
            (self.0.sf(ak - 0.5) - self.0.sf(ak + 0.5)).max(0.0)
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        // P(round(Y) <= k) = P(Y < k + 1/2)
        self.0.cdf(x.floor() + 0.5)
    }

    fn sf(&self, x: f64) -> f64 {
        self.0.sf(x.floor() + 0.5)
    }
}

/// Resolved distribution for a [`MechanismSpec`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseModel {
    Laplace(Laplace),
    RoundedLaplace(Rounded<Laplace>),
    Geometric(Geometric),
    LaplaceMixture(LaplaceMixture),
    GeometricMixture(GeometricMixture),
    TruncatedLaplace(TruncatedLaplace),
    NoNoise,
}

impl NoiseModel {
    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            Self::RoundedLaplace(_) | Self::Geometric(_) | Self::GeometricMixture(_) | Self::NoNoise
        )
    }

    /// Density for continuous models; mass at `x` for discrete ones (zero off the integers).
    pub fn density(&self, x: f64) -> f64 {
        match self {
            Self::Laplace(d) => d.pdf(x),
            Self::LaplaceMixture(d) => d.pdf(x),
            Self::TruncatedLaplace(d) => d.pdf(x),
            _ => {
                if x.fract() == 0.0 && x.abs() < 9.0e15 {
                    self.integer_pmf(x as i64)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Laplace(d) => d.cdf(x),
            Self::RoundedLaplace(d) => d.cdf(x),
            Self::Geometric(d) => d.cdf(x),
            Self::LaplaceMixture(d) => d.cdf(x),
            Self::GeometricMixture(d) => d.cdf(x),
            Self::TruncatedLaplace(d) => d.cdf(x),
            Self::NoNoise => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Mass function of the integer noise actually added to counts; continuous
    /// models are rounded to the nearest integer.
    pub fn integer_pmf(&self, k: i64) -> f64 {
        match *self {
            Self::Laplace(d) => Rounded(d).pmf(k),
            Self::RoundedLaplace(d) => d.pmf(k),
            Self::Geometric(d) => d.pmf(k),
            Self::LaplaceMixture(d) => Rounded(d).pmf(k),
            Self::GeometricMixture(d) => d.pmf(k),
            Self::TruncatedLaplace(d) => Rounded(d).pmf(k),
            Self::NoNoise => {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `P(|N| > t)` for the integer-valued noise `N`, `t >= 0` integral.
    pub fn integer_two_sided_tail(&self, t: u64) -> f64 {
        let x = t as f64;
        let upper = match *self {
            Self::Laplace(d) => Rounded(d).sf(x),
            Self::RoundedLaplace(d) => d.sf(x),
            Self::Geometric(d) => d.sf(x),
            Self::LaplaceMixture(d) => Rounded(d).sf(x),
            Self::GeometricMixture(d) => d.sf(x),
            Self::TruncatedLaplace(d) => Rounded(d).sf(x),
            Self::NoNoise => 0.0,
        };
        2.0 * upper
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> MixtureParams {
        MixtureParams::new(0.2, 5.0, 5.0).unwrap()
    }

    #[test]
    fn laplace_pdf_values() {
        assert_eq!(laplace_pdf(0.0, 1.0).unwrap(), 0.5);
        assert!((laplace_pdf(0.0, 10.0).unwrap() - 0.05).abs() < 1e-15);
        assert!((laplace_pdf(4.5, 10.0).unwrap() - 0.05 * (-0.45f64).exp()).abs() < 1e-15);
        assert!((laplace_pdf(4.5, 10.0).unwrap() - 0.031881).abs() < 1e-6);
        assert!(matches!(laplace_pdf(1.0, 0.0), Err(Error::InvalidParameter(_))));
        assert!(laplace_pdf(1.0, -2.0).is_err());
    }

    #[test]
    fn lapmix_constants_reference_values() {
        let c = lapmix_constants(&reference());
        assert!((c.a1 - 15.4737).abs() < 1e-3, "a1 = {}", c.a1);
        assert!((c.a2 - 1.41705).abs() < 1e-4, "a2 = {}", c.a2);
        assert!((c.k_c + 0.208486).abs() < 1e-4, "k_c = {}", c.k_c);
        assert!((c.p1 + c.p2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lapmix_constants_collapse_for_unit_ratio() {
        let c = lapmix_constants(&MixtureParams::new(0.3, 1.0, 2.5).unwrap());
        assert!((c.a1 - 1.0).abs() < 1e-12);
        assert!((c.a2 - 1.0).abs() < 1e-12);
        assert!(c.k_c.abs() < 1e-12);
    }

    #[test]
    fn lapmix_pdf_reference_values() {
        let p = reference();
        assert!((lapmix_pdf(0.0, &MixtureParams::new(0.1, 1.0, 4.5).unwrap()) - 0.05).abs() < 1e-12);
        assert!((lapmix_pdf(0.0, &p) - 0.141705).abs() < 1e-5);
        let inner = lapmix_pdf(5.0, &p);
        let outer = lapmix_pdf(5.0 + 1e-12, &p);
        assert!((inner - 0.052133).abs() < 1e-5, "{inner}");
        assert!((inner - outer).abs() < 1e-9);
        assert_eq!(lapmix_pdf(-5.0, &p), inner);
    }

    #[test]
    fn lapmix_cdf_reference_values() {
        let p = reference();
        assert!((lapmix_cdf(0.0, &p) - 0.5).abs() < 1e-12);
        assert!((lapmix_cdf(-5.0, &p) - 0.052131).abs() < 1e-5);
        assert!(lapmix_cdf(-1e3, &p) < 1e-300);
        assert_eq!(lapmix_cdf(1e3, &p), 1.0);
        // continuity at both break points
        for x in [-5.0, 5.0] {
            let l = lapmix_cdf(x - 1e-10, &p);
            let r = lapmix_cdf(x + 1e-10, &p);
            assert!((l - r).abs() < 1e-9);
        }
    }

    #[test]
    fn geometric_pmf_values() {
        let e = std::f64::consts::E;
        assert!((geometric_pmf(0, e).unwrap() - 0.462117).abs() < 1e-6);
        assert!((geometric_pmf(5, 0.2f64.exp()).unwrap() - 0.036666).abs() < 1e-6);
        for k in 0..20 {
            assert_eq!(geometric_pmf(k, 1.7).unwrap(), geometric_pmf(-k, 1.7).unwrap());
        }
        assert!(geometric_pmf(0, 1.0).is_err());
        assert!(geometric_pmf(0, 0.5).is_err());
    }

    #[test]
    fn geomix_constants_reference_values() {
        let c = geomix_constants(&reference()).unwrap();
        assert!((c.a1g - 16.549).abs() < 5e-3, "a1g = {}", c.a1g);
        assert!((c.a2g - 1.40548).abs() < 1e-4, "a2g = {}", c.a2g);
        assert!((c.g1 + c.g2 - 2.0).abs() < 1e-12);
        let r1 = geomix_constants(&MixtureParams::new(0.4, 1.0, 3.0).unwrap()).unwrap();
        assert!((r1.a1g - 1.0).abs() < 1e-12 && (r1.a2g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geomix_rejects_fractional_break_point() {
        let p = MixtureParams::new(0.2, 5.0, 4.5).unwrap();
        assert!(matches!(geomix_constants(&p), Err(Error::InvalidParameter(_))));
        assert!(geomix_pmf(0, &p).is_err());
    }

    #[test]
    fn geomix_pmf_reference_values() {
        let p = reference();
        let p0 = geomix_pmf(0, &p).unwrap();
        let p5 = geomix_pmf(5, &p).unwrap();
        let p6 = geomix_pmf(6, &p).unwrap();
        assert!((p0 - 0.140085).abs() < 1e-4, "{p0}");
        assert!((p5 - 0.051538).abs() < 1e-5, "{p5}");
        assert!((p6 - 0.018958).abs() < 1e-5, "{p6}");
        assert!(((p5 / p6).ln() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn geomix_cdf_reference_values() {
        let p = reference();
        let gm = GeometricMixture::new(p).unwrap();
        assert!((gm.cdf(-0.5) - (1.0 - gm.pmf(0)) / 2.0).abs() < 1e-12);
        assert!((gm.cdf(-6.0) - 0.029993).abs() < 1e-5);
        assert!((gm.cdf(1e6) - 1.0).abs() < 1e-15);
        assert!((gm.cdf(-1.0) + gm.pmf(0) + gm.sf(0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn printed_kc_matches_continuity_offset() {
        let gm = GeometricMixture::new(reference()).unwrap();
        assert!((gm.constants().k_c - gm.cdf_offset).abs() < 1e-12);
    }

    #[test]
    fn truncated_laplace_has_bounded_support() {
        let t = TruncatedLaplace::new(2.0, 3.0).unwrap();
        assert_eq!(t.pdf(3.5), 0.0);
        assert!(t.pdf(3.0) > 0.0);
        assert!((t.cdf(0.0) - 0.5).abs() < 1e-12);
        assert_eq!(t.cdf(3.0), 1.0);
    }

    #[test]
    fn spec_validation_and_policy() {
        assert!(MechanismSpec::Laplace { scale: 0.0 }.validate().is_err());
        assert!(MechanismSpec::Geometric { alpha: 1.0 }.validate().is_err());
        let trunc = MechanismSpec::truncated_laplace(0.5, 5.0).unwrap();
        assert!(!trunc.is_private());
        assert!(matches!(trunc.ensure_permitted(false), Err(Error::Refused(_))));
        assert!(trunc.ensure_permitted(true).is_ok());
        assert!(MechanismSpec::GeometricMixture(MixtureParams::new(0.2, 5.0, 2.5).unwrap())
            .validate()
            .is_err());
    }

    #[test]
    fn mechanism_spec_json_shape() {
        let spec = MechanismSpec::GeometricMixture(reference());
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"geometric_mixture","epsilon":0.2,"ratio":5.0,"break_point":5.0,"sensitivity":1.0}"#
        );
        let back: MechanismSpec =
            serde_json::from_str(r#"{"kind":"geometric_mixture","epsilon":0.2,"outer_epsilon":1.0,"break_point":5}"#)
                .unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<MechanismSpec>(r#"{"kind":"laplace_mixture","epsilon":-1,"ratio":2,"break_point":5}"#).is_err());
    }
}
