//! Renewal arrival streams observed from an arbitrary origin.
//!
//! In [`RenewalMode::Equilibrium`] the first arrival `A₀` has the residual
//! density `(1 − F_A(t)) / μ_A`, which is the law of the time to the next
//! arrival seen from a uniformly random instant of a long-running process.
//! [`RenewalMode::Pure`] puts the first arrival at the origin.

use rand::Rng;
use serde::Serialize;

use crate::distributions::{DistributionSpec, Law};
use crate::Result;

const RESIDUAL_TOLERANCE: f64 = 1e-10;
const RESIDUAL_TAIL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RenewalMode {
    #[default]
    Equilibrium,
    Pure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalProcess {
    pub interarrival: DistributionSpec,
    pub mode: RenewalMode,
}

impl ArrivalProcess {
    pub fn new(interarrival: DistributionSpec, mode: RenewalMode) -> Self {
        Self { interarrival, mode }
    }

    pub fn equilibrium(interarrival: DistributionSpec) -> Self {
        Self::new(interarrival, RenewalMode::Equilibrium)
    }

    pub fn pure(interarrival: DistributionSpec) -> Self {
        Self::new(interarrival, RenewalMode::Pure)
    }

    /// Arrival rate `λ = 1 / E[A]`.
    pub fn rate(&self) -> f64 {
        1.0 / self.interarrival.raw_moments().mean
    }

    /// True for an equilibrium stream with exponential inter-arrivals.
    pub fn is_poisson(&self) -> bool {
        self.mode == RenewalMode::Equilibrium
            && matches!(
                self.interarrival.law(),
                Law::Exponential { .. } | Law::Gamma { shape: 1.0, .. }
            )
    }

    /// CDF of the residual time, `(1/μ_A) ∫₀ᵗ (1 − F_A(s)) ds`.
    pub fn residual_cdf(&self, t: f64) -> f64 {
        match self.mode {
            RenewalMode::Pure => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            RenewalMode::Equilibrium => {
                let mean = self.interarrival.raw_moments().mean;
                (self.interarrival.survival_integral(t) / mean).clamp(0.0, 1.0)
            }
        }
    }

    /// Draws the first arrival time `A₀`.
    pub fn residual_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.mode == RenewalMode::Pure {
            return 0.0;
        }
        match *self.interarrival.law() {
            Law::Exponential { .. } => self.interarrival.sample(rng),
            Law::Gamma { shape: 1.0, scale } => {
                let u: f64 = rng.random();
                -(1.0 - u).ln() * scale
            }
            Law::Deterministic { value } => value * rng.random::<f64>(),
            Law::Uniform { lo: 0.0, hi } => {
                // G(t) = 2t/h − t²/h²  ⇒  t = h (1 − √(1 − p))
                let p: f64 = rng.random();
                hi * (1.0 - (1.0 - p).sqrt())
            }
            _ => {
                let p: f64 = rng.random();
                self.residual_quantile(p)
            }
        }
    }

    /// Inverts [`Self::residual_cdf`] by bisection on
    /// `[0, F_A⁻¹(1 − 1e-12)]`, stopping once the probability error is
    /// below `1e-10`.
    pub fn residual_quantile(&self, p: f64) -> f64 {
        if self.mode == RenewalMode::Pure || p <= 0.0 {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = self.interarrival.upper_bound(RESIDUAL_TAIL);
        if p >= self.residual_cdf(hi) {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let g = self.residual_cdf(mid);
            if (g - p).abs() < RESIDUAL_TOLERANCE {
                return mid;
            }
            if g < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Mean and variance of `A₀`; `(0, 0)` in pure mode.
    pub fn residual_moments(&self) -> (f64, f64) {
        if self.mode == RenewalMode::Pure {
            return (0.0, 0.0);
        }
        let m = self.interarrival.raw_moments();
        let mean = (m.mean * m.mean + m.variance) / (2.0 * m.mean);
        let var = m.third / (3.0 * m.mean) - mean * mean;
        (mean, var.max(0.0))
    }

    /// Lazily generated arrival epochs `t₁ < t₂ < …`.
    pub fn stream<R: Rng>(&self, rng: R) -> ArrivalStream<'_, R> {
        ArrivalStream {
            process: self,
            rng,
            last: None,
        }
    }

    /// Returns a copy with every inter-arrival time multiplied by `c`.
    pub fn time_scaled(&self, c: f64) -> Result<Self> {
        Ok(Self::new(self.interarrival.scaled(c)?, self.mode))
    }
}

/// Unbounded iterator over arrival epochs. Never inspects packet values.
#[derive(Debug)]
pub struct ArrivalStream<'a, R> {
    process: &'a ArrivalProcess,
    rng: R,
    last: Option<f64>,
}

impl<R: Rng> Iterator for ArrivalStream<'_, R> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let t = match self.last {
            None => self.process.residual_sample(&mut self.rng),
            Some(prev) => prev + self.process.interarrival.sample(&mut self.rng),
        };
        self.last = Some(t);
        Some(t)
    }
}
