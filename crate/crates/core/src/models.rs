//! Parametric trawl functions and Lévy seed laws.
//!
//! Every trawl family exposes closed forms for its tail integral
//! `A(t) = ∫_t^∞ a(s) ds`, the power tail `∫_t^∞ a(s)^p ds` and the
//! generalized inverse of `a`, so downstream quadrature always has an
//! analytic cross-check.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A trawl function `a: [0, ∞) → [0, ∞)`, non-increasing with `a(0) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", try_from = "RawTrawl")]
pub enum TrawlSpec {
    /// `a(s) = exp(-rate * s)`.
    Exponential { rate: f64 },
    /// `a(s) = (1 + s/delta)^(-alpha)` with `alpha > 1`.
    PowerLaw { alpha: f64, delta: f64 },
    /// `a(s) = max(0, 1 - s/support)`. Vanishes beyond `support`, so the
    /// process is `support`-dependent.
    CompactTriangle { support: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum RawTrawl {
    Exponential { rate: f64 },
    PowerLaw { alpha: f64, delta: f64 },
    CompactTriangle { support: f64 },
}

impl TryFrom<RawTrawl> for TrawlSpec {
    type Error = Error;

    fn try_from(raw: RawTrawl) -> Result<Self> {
        match raw {
            RawTrawl::Exponential { rate } => TrawlSpec::exponential(rate),
            RawTrawl::PowerLaw { alpha, delta } => TrawlSpec::power_law(alpha, delta),
            RawTrawl::CompactTriangle { support } => TrawlSpec::compact_triangle(support),
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

impl TrawlSpec {
    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(TrawlSpec::Exponential {
            rate: positive("rate", rate)?,
        })
    }

    pub fn power_law(alpha: f64, delta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::invalid("alpha", format!("must be > 1, got {alpha}")));
        }
        Ok(TrawlSpec::PowerLaw {
            alpha,
            delta: positive("delta", delta)?,
        })
    }

    pub fn compact_triangle(support: f64) -> Result<Self> {
        Ok(TrawlSpec::CompactTriangle {
            support: positive("support", support)?,
        })
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            TrawlSpec::Exponential { .. } => "exponential",
            TrawlSpec::PowerLaw { .. } => "power_law",
            TrawlSpec::CompactTriangle { .. } => "compact_triangle",
        }
    }

    /// `a(s)` for `s ≥ 0`, rejecting negative arguments.
    pub fn eval_a(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::OutOfDomain {
                what: "trawl function",
                value: s,
            });
        }
        Ok(self.a(s))
    }

    /// Unchecked `a(s)`. Callers guarantee `s ≥ 0`.
    #[inline]
    pub fn a(&self, s: f64) -> f64 {
        debug_assert!(s >= -1e-12, "trawl function evaluated at {s}");
        match *self {
            TrawlSpec::Exponential { rate } => (-rate * s).exp(),
            TrawlSpec::PowerLaw { alpha, delta } => (1.0 + s / delta).powf(-alpha),
            TrawlSpec::CompactTriangle { support } => (1.0 - s / support).max(0.0),
        }
    }

    /// `φ(s) = -a'(s)`, so that `a(s) = ∫_s^∞ φ(y) dy`.
    pub fn phi(&self, s: f64) -> f64 {
        match *self {
            TrawlSpec::Exponential { rate } => rate * (-rate * s).exp(),
            TrawlSpec::PowerLaw { alpha, delta } => alpha / delta * (1.0 + s / delta).powf(-alpha - 1.0),
            TrawlSpec::CompactTriangle { support } => {
                if s < support {
                    1.0 / support
                } else {
                    0.0
                }
            }
        }
    }

    /// The compact triangle has a `φ` that is not strictly positive. It is
    /// only meant for T-dependence null experiments.
    pub fn violates_assumption1(&self) -> bool {
        matches!(self, TrawlSpec::CompactTriangle { .. })
    }

    /// Power-law tail exponent of `φ(s) = O(s^{-α-1})`; infinite for the
    /// exponential and compactly supported families.
    pub fn tail_exponent(&self) -> f64 {
        match *self {
            TrawlSpec::PowerLaw { alpha, .. } => alpha,
            _ => f64::INFINITY,
        }
    }

    /// End of the support of `a`, if finite.
    pub fn support_end(&self) -> Option<f64> {
        match *self {
            TrawlSpec::CompactTriangle { support } => Some(support),
            _ => None,
        }
    }

    /// Points where `a` is not differentiable, excluding the origin.
    pub fn kinks(&self) -> &[f64] {
        match self {
            TrawlSpec::CompactTriangle { support } => std::slice::from_ref(support),
            _ => &[],
        }
    }

    /// `A(t) = ∫_t^∞ a(s) ds`; `A(0) = Leb(A)`.
    pub fn tail_integral(&self, t: f64) -> f64 {
        self.power_tail(t, 1.0)
    }

    /// `Leb(A)`, the area of the trawl set.
    pub fn leb(&self) -> f64 {
        self.tail_integral(0.0)
    }

    /// `∫_t^∞ a(s)^p ds` for `p ≥ 1`.
    pub fn power_tail_integral(&self, t: f64, p: f64) -> Result<f64> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::invalid("p", format!("power must be ≥ 1, got {p}")));
        }
        if !(t >= 0.0) {
            return Err(Error::OutOfDomain {
                what: "power tail integral",
                value: t,
            });
        }
        Ok(self.power_tail(t, p))
    }

    fn power_tail(&self, t: f64, p: f64) -> f64 {
        match *self {
            TrawlSpec::Exponential { rate } => {
                let k = p * rate;
                (-k * t).exp() / k
            }
            TrawlSpec::PowerLaw { alpha, delta } => {
                let e = p * alpha - 1.0;
                delta / e * (1.0 + t / delta).powf(-e)
            }
            TrawlSpec::CompactTriangle { support } => {
                if t >= support {
                    0.0
                } else {
                    support / (p + 1.0) * (1.0 - t / support).powf(p + 1.0)
                }
            }
        }
    }

    /// `ρ_X(h) = A(h) / A(0)`.
    pub fn autocorrelation(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return Err(Error::OutOfDomain {
                what: "autocorrelation",
                value: h,
            });
        }
        Ok(self.tail_integral(h) / self.leb())
    }

    /// `sup{s : a(s) ≥ y}` for `0 < y ≤ a(0)`.
    pub fn inverse_a(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y <= self.a(0.0)) {
            return Err(Error::OutOfDomain {
                what: "inverse trawl function",
                value: y,
            });
        }
        Ok(self.inverse_a_unchecked(y))
    }

    #[inline]
    pub(crate) fn inverse_a_unchecked(&self, y: f64) -> f64 {
        match *self {
            TrawlSpec::Exponential { rate } => -y.ln() / rate,
            TrawlSpec::PowerLaw { alpha, delta } => delta * (y.powf(-1.0 / alpha) - 1.0),
            TrawlSpec::CompactTriangle { support } => support * (1.0 - y),
        }
    }

    /// The `t` with `A(t) = x`, for `0 < x ≤ A(0)`. Used to draw abscissae
    /// with density proportional to `a`.
    pub(crate) fn inverse_tail_integral(&self, x: f64) -> f64 {
        let t = match *self {
            TrawlSpec::Exponential { rate } => -(rate * x).ln() / rate,
            TrawlSpec::PowerLaw { alpha, delta } => {
                delta * ((x * (alpha - 1.0) / delta).powf(1.0 / (1.0 - alpha)) - 1.0)
            }
            TrawlSpec::CompactTriangle { support } => support - (2.0 * support * x).sqrt(),
        };
        t.max(0.0)
    }
}

/// Law of the Lévy seed `L'`, i.e. of `L(B)` for a unit-area set `B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", try_from = "RawSeed")]
pub enum LevySeedSpec {
    Gaussian { mean: f64, variance: f64 },
    Poisson { rate: f64 },
    Gamma { shape: f64, scale: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum RawSeed {
    Gaussian { mean: f64, variance: f64 },
    Poisson { rate: f64 },
    Gamma { shape: f64, scale: f64 },
}

impl TryFrom<RawSeed> for LevySeedSpec {
    type Error = Error;

    fn try_from(raw: RawSeed) -> Result<Self> {
        match raw {
            RawSeed::Gaussian { mean, variance } => LevySeedSpec::gaussian(mean, variance),
            RawSeed::Poisson { rate } => LevySeedSpec::poisson(rate),
            RawSeed::Gamma { shape, scale } => LevySeedSpec::gamma(shape, scale),
        }
    }
}

/// Per-unit-area cumulants of the seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cumulants {
    pub mean: f64,
    pub variance: f64,
    /// `∫ x³ ν(dx)`.
    pub third: f64,
    /// `𝔎₄ = ∫ x⁴ ν(dx)`.
    pub fourth: f64,
}

impl LevySeedSpec {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid("mean", "must be finite"));
        }
        Ok(LevySeedSpec::Gaussian {
            mean,
            variance: positive("variance", variance)?,
        })
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        Ok(LevySeedSpec::Poisson {
            rate: positive("rate", rate)?,
        })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Ok(LevySeedSpec::Gamma {
            shape: positive("shape", shape)?,
            scale: positive("scale", scale)?,
        })
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            LevySeedSpec::Gaussian { .. } => "gaussian",
            LevySeedSpec::Poisson { .. } => "poisson",
            LevySeedSpec::Gamma { .. } => "gamma",
        }
    }

    pub fn cumulants(&self) -> Cumulants {
        match *self {
            LevySeedSpec::Gaussian { mean, variance } => Cumulants {
                mean,
                variance,
                third: 0.0,
                fourth: 0.0,
            },
            LevySeedSpec::Poisson { rate } => Cumulants {
                mean: rate,
                variance: rate,
                third: rate,
                fourth: rate,
            },
            LevySeedSpec::Gamma { shape, scale } => Cumulants {
                mean: shape * scale,
                variance: shape * scale.powi(2),
                third: 2.0 * shape * scale.powi(3),
                fourth: 6.0 * shape * scale.powi(4),
            },
        }
    }

    /// `Var(L') = 1`, which the inference formulas assume.
    pub fn unit_variance(&self) -> bool {
        (self.cumulants().variance - 1.0).abs() <= 1e-12
    }

    /// One draw of `L(B)` with `Leb(B) = area`.
    pub fn sample<R: Rng + ?Sized>(&self, area: f64, rng: &mut R) -> Result<f64> {
        if !(area >= 0.0) || !area.is_finite() {
            return Err(Error::OutOfDomain {
                what: "seed sampler area",
                value: area,
            });
        }
        Ok(self.sample_unchecked(area, rng))
    }

    #[inline]
    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(&self, area: f64, rng: &mut R) -> f64 {
        if area == 0.0 {
            return 0.0;
        }
        match *self {
            LevySeedSpec::Gaussian { mean, variance } => {
                let z: f64 = StandardNormal.sample(rng);
                mean * area + (variance * area).sqrt() * z
            }
            LevySeedSpec::Poisson { rate } => poisson_count(rate * area, rng),
            LevySeedSpec::Gamma { shape, scale } => match Gamma::new(shape * area, scale) {
                Ok(d) => d.sample(rng),
                Err(_) => 0.0,
            },
        }
    }
}

/// Poisson draw. Slice areas are mostly tiny, so small means use sequential
/// inversion, which costs one uniform and usually a single comparison.
pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if !(mean > 0.0) {
        return 0.0;
    }
    if mean < 10.0 {
        let u: f64 = rng.gen();
        let mut p = (-mean).exp();
        let mut cdf = p;
        let mut k = 0u32;
        while u > cdf && p > 0.0 {
            k += 1;
            p *= mean / f64::from(k);
            cdf += p;
        }
        f64::from(k)
    } else {
        Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(0.0)
    }
}

/// Free-function form of [`LevySeedSpec::sample`].
pub fn sample_seed<R: Rng + ?Sized>(seed: &LevySeedSpec, area: f64, rng: &mut R) -> Result<f64> {
    seed.sample(area, rng)
}
