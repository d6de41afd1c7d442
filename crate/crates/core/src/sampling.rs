//! Seeded inverse-transform samplers for every mechanism family.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanism::{
    GeometricMixture, Laplace, LaplaceMixture, MechanismSpec, MixtureParams, TruncatedLaplace,
};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream identifier derived from a parent stream and a path of indices.
pub fn derive_stream_id(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(parent), |acc, &i| splitmix64(acc ^ splitmix64(i)))
}

/// A reproducible random stream: ChaCha20 keyed by `seed`, on stream `stream_id`.
///
/// The same `(seed, stream_id)` pair yields the same sequence on every
/// platform; distinct stream ids select disjoint keystreams.
#[derive(Clone, Debug)]
pub struct SeededStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// An independent child stream under the same seed.
    pub fn child(&self, path: &[u64]) -> Self {
        Self::new(self.seed, derive_stream_id(self.stream_id, path))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.rng.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }
}

/// A noise draw: integer for integer-valued mechanisms, real otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Noise {
    Integer(i64),
    Real(f64),
}

impl Noise {
    pub fn as_f64(self) -> f64 {
        match self {
            Noise::Integer(k) => k as f64,
            Noise::Real(x) => x,
        }
    }

    /// Nearest integer, halves away from zero.
    pub fn rounded(self) -> i64 {
        match self {
            Noise::Integer(k) => k,
            Noise::Real(x) => x.round() as i64,
        }
    }
}

/// Inverse CDF of the Laplace mixture; four branches on the uniform `u`.
pub fn lapmix_inverse_cdf(u: f64, dist: &LaplaceMixture) -> f64 {
    let c = dist.constants();
    let b1 = dist.params().outer_scale();
    let b2 = dist.params().inner_scale();
    let tail = c.a1 / 2.0 * (-dist.params().break_point() / b1).exp();
    if u < tail {
        b1 * (2.0 * u / c.a1).ln()
    } else if u > 1.0 - tail {
        -b1 * (2.0 * (1.0 - u) / c.a1).ln()
    } else if u <= 0.5 {
        b2 * (2.0 / c.a2 * (u - c.k_c)).ln()
    } else {
        -b2 * (2.0 / c.a2 * (1.0 - u - c.k_c)).ln()
    }
}

/// Inverse CDF of the geometric mixture: the smallest integer `k` with `F(k) >= u`.
pub fn geomix_inverse_cdf(u: f64, dist: &GeometricMixture) -> i64 {
    let c = dist.constants();
    let ct = dist.break_point() as f64;
    let (al1, al2) = (dist.outer_alpha(), dist.inner_alpha());
    let (ln1, ln2) = (al1.ln(), al2.ln());
    let (q1, q2) = (1.0 / al1, 1.0 / al2);
    let y = if u < c.a1g * q1.powf(ct) / (1.0 + q1) {
        ((1.0 + q1) * u / c.a1g).ln() / ln1
    } else if u > 1.0 - c.a1g * q1.powf(ct + 1.0) / (1.0 + q1) {
        -((1.0 - u) * (1.0 + q1) / c.a1g).ln() / ln1 - 1.0
    } else if u <= c.a2g / (1.0 + q2) + c.k_c {
        ((1.0 + q2) * (u - c.k_c) / c.a2g).ln() / ln2
    } else {
        -((1.0 - u - c.k_c) * (1.0 + q2) / c.a2g).ln() / ln2 - 1.0
    };
    y.ceil() as i64
}

fn laplace_inverse_cdf(u: f64, scale: f64) -> f64 {
    if u < 0.5 {
        scale * (2.0 * u).ln()
    } else {
        -scale * (2.0 * (1.0 - u)).ln()
    }
}

pub fn sample_lapmix(params: &MixtureParams, stream: &mut SeededStream) -> f64 {
    lapmix_inverse_cdf(stream.uniform(), &LaplaceMixture::new(*params))
}

pub fn sample_geomix(params: &MixtureParams, stream: &mut SeededStream) -> Result<i64> {
    Ok(geomix_inverse_cdf(stream.uniform(), &GeometricMixture::new(*params)?))
}

/// One draw from a standard mechanism. Non-private mechanisms are refused
/// unless `allow_unsafe` is set.
pub fn sample_standard(spec: &MechanismSpec, stream: &mut SeededStream, allow_unsafe: bool) -> Result<Noise> {
    match spec {
        MechanismSpec::LaplaceMixture(_) | MechanismSpec::GeometricMixture(_) => Err(Error::UnsupportedSpec {
            operation: "sample_standard",
            mechanism: spec.name(),
        }),
        _ => Ok(NoiseSampler::new(spec, allow_unsafe)?.sample(stream)),
    }
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Laplace(f64),
    RoundedLaplace(f64),
    /// Rate `ln alpha` of the exponentials whose floors are differenced.
    Geometric(f64),
    LaplaceMixture(LaplaceMixture),
    GeometricMixture(GeometricMixture),
    TruncatedLaplace(TruncatedLaplace),
    NoNoise,
}

/// Precomputed sampler for a mechanism; cheap to copy into parallel workers.
#[derive(Clone, Copy, Debug)]
pub struct NoiseSampler {
    kind: Kind,
}

impl NoiseSampler {
    pub fn new(spec: &MechanismSpec, allow_unsafe: bool) -> Result<Self> {
        spec.validate()?;
        spec.ensure_permitted(allow_unsafe)?;
        let kind = match *spec {
            MechanismSpec::Laplace { scale } => Kind::Laplace(Laplace::new(scale)?.scale()),
            MechanismSpec::RoundedLaplace { scale } => Kind::RoundedLaplace(scale),
            MechanismSpec::Geometric { alpha } => Kind::Geometric(alpha.ln()),
            MechanismSpec::LaplaceMixture(p) => Kind::LaplaceMixture(LaplaceMixture::new(p)),
            MechanismSpec::GeometricMixture(p) => Kind::GeometricMixture(GeometricMixture::new(p)?),
            MechanismSpec::TruncatedLaplace { scale, bound } => {
                Kind::TruncatedLaplace(TruncatedLaplace::new(scale, bound)?)
            }
            MechanismSpec::NoNoise => Kind::NoNoise,
        };
        Ok(Self { kind })
    }

    pub fn sample(&self, stream: &mut SeededStream) -> Noise {
        match &self.kind {
            Kind::Laplace(b) => Noise::Real(laplace_inverse_cdf(stream.uniform(), *b)),
            Kind::RoundedLaplace(b) => Noise::Integer(laplace_inverse_cdf(stream.uniform(), *b).round() as i64),
            Kind::Geometric(rate) => {
                let x = (-stream.uniform().ln() / rate).floor();
                let y = (-stream.uniform().ln() / rate).floor();
                Noise::Integer((x - y) as i64)
            }
            Kind::LaplaceMixture(d) => Noise::Real(lapmix_inverse_cdf(stream.uniform(), d)),
            Kind::GeometricMixture(d) => Noise::Integer(geomix_inverse_cdf(stream.uniform(), d)),
            Kind::TruncatedLaplace(d) => loop {
                let y = laplace_inverse_cdf(stream.uniform(), d.scale());
                if y.abs() <= d.bound() {
                    break Noise::Real(y);
                }
            },
            Kind::NoNoise => Noise::Integer(0),
        }
    }

    /// Integer noise for count release; continuous draws are rounded.
    pub fn sample_integer(&self, stream: &mut SeededStream) -> i64 {
        self.sample(stream).rounded()
    }
}
