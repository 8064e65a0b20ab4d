//! Packet-size and inter-arrival laws.
//!
//! Parameter conventions are explicit in the names:
//! `Gamma { shape, scale }` has mean `shape * scale`, and
//! `InverseGaussian { mean, shape }` has variance `mean³ / shape`.
//! The config syntax additionally accepts `gamma shape=.. rate=..`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Distribution;
use serde::Serialize;

use crate::special::{gamma_p, gamma_q, ln_gamma, ln_normal_sf, normal_cdf};
use crate::{Error, Result};

/// A non-negative law with finite first three moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    Exponential { rate: f64 },
    Gamma { shape: f64, scale: f64 },
    InverseGaussian { mean: f64, shape: f64 },
    Uniform { lo: f64, hi: f64 },
    Deterministic { value: f64 },
}

/// Mean, variance, and third raw moment `E[X³]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawMoments {
    pub mean: f64,
    pub variance: f64,
    pub third: f64,
}

#[derive(Debug, Clone, Copy)]
enum Sampler {
    Direct,
    Gamma(rand_distr::Gamma<f64>),
    InverseGaussian(rand_distr::InverseGaussian<f64>),
}

/// A validated [`Law`] together with its sampler.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone, Copy)]
pub struct DistributionSpec {
    law: Law,
    sampler: Sampler,
}

impl PartialEq for DistributionSpec {
    fn eq(&self, other: &Self) -> bool {
        self.law == other.law
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

impl DistributionSpec {
    pub fn new(law: Law) -> Result<Self> {
        let sampler = match law {
            Law::Exponential { rate } => {
                positive("rate", rate)?;
                Sampler::Direct
            }
            Law::Gamma { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)?;
                Sampler::Gamma(
                    rand_distr::Gamma::new(shape, scale)
                        .map_err(|e| Error::invalid("gamma", e.to_string()))?,
                )
            }
            Law::InverseGaussian { mean, shape } => {
                positive("mean", mean)?;
                positive("shape", shape)?;
                Sampler::InverseGaussian(
                    rand_distr::InverseGaussian::new(mean, shape)
                        .map_err(|e| Error::invalid("inverse_gaussian", e.to_string()))?,
                )
            }
            Law::Uniform { lo, hi } => {
                if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                    return Err(Error::invalid(
                        "uniform",
                        format!("need 0 <= lo < hi < inf, got lo={lo} hi={hi}"),
                    ));
                }
                Sampler::Direct
            }
            Law::Deterministic { value } => {
                positive("value", value)?;
                Sampler::Direct
            }
        };
        Ok(Self { law, sampler })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Law::Exponential { rate })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Law::Gamma { shape, scale })
    }

    pub fn inverse_gaussian(mean: f64, shape: f64) -> Result<Self> {
        Self::new(Law::InverseGaussian { mean, shape })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Law::Uniform { lo, hi })
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        Self::new(Law::Deterministic { value })
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    /// Short lowercase name used in file names and reports.
    pub fn name(&self) -> &'static str {
        match self.law {
            Law::Exponential { .. } => "exponential",
            Law::Gamma { .. } => "gamma",
            Law::InverseGaussian { .. } => "inverse_gaussian",
            Law::Uniform { .. } => "uniform",
            Law::Deterministic { .. } => "deterministic",
        }
    }

    /// Returns a copy with every draw multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        positive("scale factor", c)?;
        Self::new(match self.law {
            Law::Exponential { rate } => Law::Exponential { rate: rate / c },
            Law::Gamma { shape, scale } => Law::Gamma {
                shape,
                scale: scale * c,
            },
            Law::InverseGaussian { mean, shape } => Law::InverseGaussian {
                mean: mean * c,
                shape: shape * c,
            },
            Law::Uniform { lo, hi } => Law::Uniform {
                lo: lo * c,
                hi: hi * c,
            },
            Law::Deterministic { value } => Law::Deterministic { value: value * c },
        })
    }

    /// One draw. Exponential and uniform use inversion of a single uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match (self.law, &self.sampler) {
            (Law::Exponential { rate }, _) => {
                let u: f64 = rng.random();
                -(1.0 - u).ln() / rate
            }
            (Law::Uniform { lo, hi }, _) => lo + (hi - lo) * rng.random::<f64>(),
            (Law::Deterministic { value }, _) => value,
            (_, Sampler::Gamma(g)) => g.sample(rng),
            (_, Sampler::InverseGaussian(ig)) => ig.sample(rng),
            (_, Sampler::Direct) => unreachable!("sampler built in new()"),
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match self.law {
            Law::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Law::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_p(shape, x / scale)
                }
            }
            Law::InverseGaussian { mean, shape } => {
                if x <= 0.0 {
                    return 0.0;
                }
                if x.is_infinite() {
                    return 1.0;
                }
                let (a, b) = ig_arguments(mean, shape, x);
                (normal_cdf(a) + (2.0 * shape / mean + ln_normal_sf(b)).exp()).min(1.0)
            }
            Law::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Law::Deterministic { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `P(X > x)`, computed without cancellation where a direct form exists.
    pub fn survival(&self, x: f64) -> f64 {
        match self.law {
            Law::Exponential { rate } if x > 0.0 => (-rate * x).exp(),
            Law::Gamma { shape, scale } if x > 0.0 => gamma_q(shape, x / scale),
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Density for the continuous laws; `None` for the point mass.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        Some(match self.law {
            Law::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Law::Gamma { shape, scale } => {
                if x <= 0.0 {
                    if x == 0.0 && shape == 1.0 {
                        1.0 / scale
                    } else {
                        0.0
                    }
                } else {
                    ((shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln())
                        .exp()
                }
            }
            Law::InverseGaussian { mean, shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = x - mean;
                    (shape / (2.0 * std::f64::consts::PI * x.powi(3))).sqrt()
                        * (-shape * z * z / (2.0 * mean * mean * x)).exp()
                }
            }
            Law::Uniform { lo, hi } => {
                if x < lo || x > hi {
                    0.0
                } else {
                    1.0 / (hi - lo)
                }
            }
            Law::Deterministic { .. } => return None,
        })
    }

    pub fn raw_moments(&self) -> RawMoments {
        match self.law {
            Law::Exponential { rate } => RawMoments {
                mean: 1.0 / rate,
                variance: 1.0 / (rate * rate),
                third: 6.0 / rate.powi(3),
            },
            Law::Gamma { shape, scale } => RawMoments {
                mean: shape * scale,
                variance: shape * scale * scale,
                third: shape * (shape + 1.0) * (shape + 2.0) * scale.powi(3),
            },
            Law::InverseGaussian { mean, shape } => {
                let r = mean / shape;
                RawMoments {
                    mean,
                    variance: mean.powi(3) / shape,
                    third: mean.powi(3) * (1.0 + 3.0 * r + 3.0 * r * r),
                }
            }
            Law::Uniform { lo, hi } => RawMoments {
                mean: 0.5 * (lo + hi),
                variance: (hi - lo).powi(2) / 12.0,
                third: (hi * hi + lo * lo) * (hi + lo) / 4.0,
            },
            Law::Deterministic { value } => RawMoments {
                mean: value,
                variance: 0.0,
                third: value.powi(3),
            },
        }
    }

    /// Partial first moment `E[X; X <= t] = ∫₀ᵗ s dF(s)`.
    pub fn partial_mean(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t.is_infinite() {
            return self.raw_moments().mean;
        }
        match self.law {
            Law::Exponential { rate } => {
                let e = (-rate * t).exp();
                (1.0 - e - rate * t * e) / rate
            }
            Law::Gamma { shape, scale } => shape * scale * gamma_p(shape + 1.0, t / scale),
            Law::InverseGaussian { mean, shape } => {
                let (a, b) = ig_arguments(mean, shape, t);
                mean * (normal_cdf(a) - (2.0 * shape / mean + ln_normal_sf(b)).exp()).max(0.0)
            }
            Law::Uniform { lo, hi } => {
                let t = t.min(hi);
                if t <= lo {
                    0.0
                } else {
                    (t * t - lo * lo) / (2.0 * (hi - lo))
                }
            }
            Law::Deterministic { value } => {
                if t >= value {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    /// `∫₀ᵗ (1 − F(s)) ds = t·(1 − F(t)) + E[X; X <= t]`.
    pub fn survival_integral(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.law {
            Law::Uniform { lo, hi } if t >= hi => 0.5 * (lo + hi),
            Law::Deterministic { value } => t.min(value),
            _ => t * self.survival(t) + self.partial_mean(t),
        }
    }

    /// A point `x` with `P(X > x) <= tail`.
    pub fn upper_bound(&self, tail: f64) -> f64 {
        match self.law {
            Law::Uniform { hi, .. } => hi,
            Law::Deterministic { value } => value,
            Law::Exponential { rate } => -tail.ln() / rate,
            _ => {
                let mut x = self.raw_moments().mean.max(f64::MIN_POSITIVE);
                while self.survival(x) > tail {
                    x *= 2.0;
                }
                x
            }
        }
    }
}

fn ig_arguments(mean: f64, shape: f64, x: f64) -> (f64, f64) {
    let s = (shape / x).sqrt();
    (s * (x / mean - 1.0), s * (x / mean + 1.0))
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.law {
            Law::Exponential { rate } => write!(f, "exponential rate={rate}"),
            Law::Gamma { shape, scale } => write!(f, "gamma shape={shape} scale={scale}"),
            Law::InverseGaussian { mean, shape } => {
                write!(f, "inverse_gaussian mean={mean} shape={shape}")
            }
            Law::Uniform { lo, hi } => write!(f, "uniform lo={lo} hi={hi}"),
            Law::Deterministic { value } => write!(f, "deterministic value={value}"),
        }
    }
}

/// Parses `name key=value ...` into a list of named parameters.
pub(crate) fn split_params(text: &str) -> Result<(String, Vec<(String, f64)>)> {
    let mut words = text.split_whitespace();
    let name = words
        .next()
        .ok_or_else(|| Error::invalid("law", "empty description"))?
        .to_ascii_lowercase();
    let mut params = Vec::new();
    for word in words {
        let (k, v) = word
            .split_once('=')
            .ok_or_else(|| Error::invalid(word, "expected key=value"))?;
        let v: f64 = v
            .parse()
            .map_err(|_| Error::invalid(k, format!("`{v}` is not a number")))?;
        params.push((k.to_ascii_lowercase(), v));
    }
    Ok((name, params))
}

pub(crate) struct Params {
    law: String,
    values: Vec<(String, f64)>,
}

impl Params {
    pub(crate) fn new(law: String, values: Vec<(String, f64)>) -> Self {
        Self { law, values }
    }

    pub(crate) fn get(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub(crate) fn require(&self, key: &str) -> Result<f64> {
        self.get(key).ok_or_else(|| {
            Error::invalid(format!("{}.{key}", self.law), "required parameter missing")
        })
    }

    pub(crate) fn only(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.values {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::invalid(
                    format!("{}.{k}", self.law),
                    format!("unknown parameter; expected one of {allowed:?}"),
                ));
            }
        }
        Ok(())
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Accepts e.g. `exponential rate=1`, `poisson rate=1` (exponential
    /// inter-arrivals), `gamma shape=1 scale=2`, `gamma shape=1 rate=0.5`,
    /// `inverse_gaussian mean=1 shape=2`, `uniform lo=0 hi=1`,
    /// `deterministic value=3`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, values) = split_params(s)?;
        let p = Params::new(name.clone(), values);
        match name.as_str() {
            "exponential" | "exp" | "poisson" => {
                p.only(&["rate", "mean"])?;
                let rate = match (p.get("rate"), p.get("mean")) {
                    (Some(r), None) => r,
                    (None, Some(m)) => 1.0 / m,
                    _ => return Err(Error::invalid(name, "give exactly one of rate= or mean=")),
                };
                Self::exponential(rate)
            }
            "gamma" => {
                p.only(&["shape", "scale", "rate"])?;
                let shape = p.require("shape")?;
                let scale = match (p.get("scale"), p.get("rate")) {
                    (Some(s), None) => s,
                    (None, Some(r)) => 1.0 / r,
                    _ => return Err(Error::invalid(name, "give exactly one of scale= or rate=")),
                };
                Self::gamma(shape, scale)
            }
            "inverse_gaussian" | "ig" | "wald" => {
                p.only(&["mean", "shape"])?;
                Self::inverse_gaussian(p.require("mean")?, p.require("shape")?)
            }
            "uniform" => {
                p.only(&["lo", "hi"])?;
                Self::uniform(p.require("lo")?, p.require("hi")?)
            }
            "deterministic" | "constant" => {
                p.only(&["value"])?;
                Self::deterministic(p.require("value")?)
            }
            other => Err(Error::invalid("law", format!("unknown law `{other}`"))),
        }
    }
}

/// Wireless-power-transfer packet: `X = ξ · d^(−α) · q̄ · T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WptPacketSpec {
    channel_gain: DistributionSpec,
    distance: f64,
    pathloss_exponent: f64,
    transmit_power: f64,
    duration: f64,
}

impl WptPacketSpec {
    pub fn new(
        channel_gain: DistributionSpec,
        distance: f64,
        pathloss_exponent: f64,
        transmit_power: f64,
        duration: f64,
    ) -> Result<Self> {
        positive("distance", distance)?;
        positive("transmit_power", transmit_power)?;
        positive("duration", duration)?;
        if !(pathloss_exponent >= 0.0 && pathloss_exponent.is_finite()) {
            return Err(Error::invalid(
                "pathloss_exponent",
                "must be finite and >= 0",
            ));
        }
        let spec = Self {
            channel_gain,
            distance,
            pathloss_exponent,
            transmit_power,
            duration,
        };
        if !(spec.raw_moments().mean > 0.0) {
            return Err(Error::invalid("wpt", "packet mean must be > 0"));
        }
        Ok(spec)
    }

    pub fn channel_gain(&self) -> &DistributionSpec {
        &self.channel_gain
    }

    /// Deterministic factor `d^(−α) · q̄ · T` multiplying the channel gain.
    pub fn energy_scale(&self) -> f64 {
        self.distance.powf(-self.pathloss_exponent) * self.transmit_power * self.duration
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.channel_gain.sample(rng) * self.energy_scale()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.channel_gain.cdf(x / self.energy_scale())
    }

    pub fn raw_moments(&self) -> RawMoments {
        let k = self.energy_scale();
        let m = self.channel_gain.raw_moments();
        RawMoments {
            mean: m.mean * k,
            variance: m.variance * k * k,
            third: m.third * k.powi(3),
        }
    }
}

impl fmt::Display for WptPacketSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "wpt distance={} alpha={} power={} duration={} (gain: {})",
            self.distance,
            self.pathloss_exponent,
            self.transmit_power,
            self.duration,
            self.channel_gain
        )
    }
}

/// Where packet energies come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PacketSource {
    Law(DistributionSpec),
    Wpt(WptPacketSpec),
}

impl PacketSource {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            PacketSource::Law(d) => d.sample(rng),
            PacketSource::Wpt(w) => w.sample(rng),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            PacketSource::Law(d) => d.cdf(x),
            PacketSource::Wpt(w) => w.cdf(x),
        }
    }

    pub fn raw_moments(&self) -> RawMoments {
        match self {
            PacketSource::Law(d) => d.raw_moments(),
            PacketSource::Wpt(w) => w.raw_moments(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PacketSource::Law(d) => d.name(),
            PacketSource::Wpt(_) => "wpt",
        }
    }

    /// True when packets are exponentially distributed.
    pub fn is_exponential(&self) -> bool {
        let law = match self {
            PacketSource::Law(d) => d.law,
            PacketSource::Wpt(w) => w.channel_gain.law,
        };
        matches!(law, Law::Exponential { .. } | Law::Gamma { shape: 1.0, .. })
    }
}

impl From<DistributionSpec> for PacketSource {
    fn from(d: DistributionSpec) -> Self {
        PacketSource::Law(d)
    }
}

impl fmt::Display for PacketSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PacketSource::Law(d) => d.fmt(f),
            PacketSource::Wpt(w) => w.fmt(f),
        }
    }
}
