//! Closed-form and asymptotic recharge-time formulas.
//!
//! All CDFs are `P(τ(u) <= t)`. Poisson weights `e^{−λt}(λt)ⁿ/n!` are
//! generated in log space so large `λt` does not overflow.
//!
//! * [`poisson_cdf_normal`]: Poisson arrivals, any packet law, with the
//!   n-fold packet convolution replaced by a normal law.
//! * [`poisson_cdf_exp_exact`]: Poisson arrivals, exponential packets, exact.
//! * [`renewal_mean_tau`], [`renewal_var_tau`], [`renewal_cdf_clt`]: general
//!   renewal arrivals, large-`u` asymptotics.
//! * [`nonlinear_cdf`]: any of the above evaluated at the non-linear battery's
//!   transformed threshold.

use serde::Serialize;

use crate::battery::BatteryModel;
use crate::distributions::PacketSource;
use crate::renewal::ArrivalProcess;
use crate::special::{gamma_p, gamma_q, normal_cdf, normal_sf};
use crate::{Error, Result};

/// Series length used by default for the normal-approximation formula.
pub const DEFAULT_TERMS: usize = 100;

/// Omitted Poisson mass above which a result is flagged.
pub const TRUNCATION_WARNING_MASS: f64 = 1e-9;

const ADAPTIVE_TAIL: f64 = 1e-12;
const ADAPTIVE_TERM: f64 = 1e-12;
const MAX_ADAPTIVE_TERMS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Sum terms `n = 0..=N`.
    Fixed(usize),
    /// Sum until the remaining Poisson mass (or term size) drops below 1e-12.
    Adaptive,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Fixed(DEFAULT_TERMS)
    }
}

/// A truncated series together with the probability mass it left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub omitted_mass: f64,
    pub terms: usize,
}

impl SeriesValue {
    pub fn truncation_warning(&self) -> bool {
        self.omitted_mass > TRUNCATION_WARNING_MASS
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

/// Iterates `(n, e^{−m} mⁿ / n!)` for `n = 0, 1, …`.
fn poisson_weights(m: f64) -> impl Iterator<Item = (usize, f64)> {
    let ln_m = m.ln();
    let mut ln_w = -m;
    (0..).map(move |n: usize| {
        if n > 0 {
            ln_w += ln_m - (n as f64).ln();
        }
        let w = if m == 0.0 {
            if n == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            ln_w.exp()
        };
        (n, w)
    })
}

/// Normal-approximation CDF for Poisson arrivals with a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonNormalCdf {
    threshold: f64,
    rate: f64,
    packet_mean: f64,
    packet_sd: f64,
    truncation: Truncation,
}

impl PoissonNormalCdf {
    pub fn new(
        threshold: f64,
        rate: f64,
        packet_mean: f64,
        packet_sd: f64,
        truncation: Truncation,
    ) -> Result<Self> {
        check_positive("u", threshold)?;
        check_positive("rate", rate)?;
        check_positive("packet_mean", packet_mean)?;
        if !(packet_sd >= 0.0 && packet_sd.is_finite()) {
            return Err(Error::invalid("packet_sd", "must be finite and >= 0"));
        }
        if truncation == Truncation::Fixed(0) {
            return Err(Error::invalid("n_max", "must be >= 1"));
        }
        Ok(Self {
            threshold,
            rate,
            packet_mean,
            packet_sd,
            truncation,
        })
    }

    /// Approximate `P(S_n <= u)`; `n = 0` is the unit step at the origin and
    /// a zero packet variance gives the indicator `n·X̄ <= u`.
    pub fn within_threshold(&self, n: usize) -> f64 {
        1.0 - self.beyond_threshold(n)
    }

    fn beyond_threshold(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let nf = n as f64;
        let gap = self.threshold - nf * self.packet_mean;
        if self.packet_sd == 0.0 {
            return if gap >= 0.0 { 0.0 } else { 1.0 };
        }
        normal_sf(gap / (self.packet_sd * nf.sqrt()))
    }

    /// `1 − e^{−λt} Σₙ (λt)ⁿ/n! · Φ((u − nX̄)/(σ√n))`, summed as
    /// `Σₙ wₙ (1 − Φₙ)` plus the Poisson mass beyond the last term.
    pub fn cdf(&self, t: f64) -> SeriesValue {
        if !(t > 0.0) {
            return SeriesValue {
                value: 0.0,
                omitted_mass: 0.0,
                terms: 1,
            };
        }
        let m = self.rate * t;
        let mut sum = 0.0;
        let mut cum = 0.0;
        let mut terms = 0;
        match self.truncation {
            Truncation::Fixed(n_max) => {
                for (n, w) in poisson_weights(m).take(n_max + 1) {
                    sum += w * self.beyond_threshold(n);
                    terms = n + 1;
                }
                let tail = gamma_p(n_max as f64 + 1.0, m);
                SeriesValue {
                    value: (sum + tail).clamp(0.0, 1.0),
                    omitted_mass: tail,
                    terms,
                }
            }
            Truncation::Adaptive => {
                let past = (self.threshold / self.packet_mean).max(m);
                for (n, w) in poisson_weights(m).take(MAX_ADAPTIVE_TERMS) {
                    sum += w * self.beyond_threshold(n);
                    cum += w;
                    terms = n + 1;
                    if n as f64 > past && 1.0 - cum < ADAPTIVE_TAIL {
                        break;
                    }
                }
                // every omitted term has Φₙ ≈ 0
                let tail = (1.0 - cum).max(0.0);
                SeriesValue {
                    value: (sum + tail).clamp(0.0, 1.0),
                    omitted_mass: tail,
                    terms,
                }
            }
        }
    }

    /// `E[τ] = (1/λ) Σₙ Φₙ`.
    pub fn mean(&self) -> f64 {
        let mut sum = 0.0;
        match self.truncation {
            Truncation::Fixed(n_max) => {
                for n in 0..=n_max {
                    sum += self.within_threshold(n);
                }
            }
            Truncation::Adaptive => {
                let crossing = self.threshold / self.packet_mean;
                for n in 0..MAX_ADAPTIVE_TERMS {
                    let phi = self.within_threshold(n);
                    sum += phi;
                    if phi < ADAPTIVE_TERM && n as f64 > crossing {
                        break;
                    }
                }
            }
        }
        sum / self.rate
    }
}

/// `P(τ(u) <= t)` for Poisson(`rate`) arrivals, normal-approximated packet
/// sums with mean `packet_mean` and standard deviation `packet_sd`.
pub fn poisson_cdf_normal(
    u: f64,
    t: f64,
    rate: f64,
    packet_mean: f64,
    packet_sd: f64,
    truncation: Truncation,
) -> Result<SeriesValue> {
    Ok(PoissonNormalCdf::new(u, rate, packet_mean, packet_sd, truncation)?.cdf(t))
}

/// `E[τ(u)] = (1/λ) Σₙ Φ((u − nX̄)/(σ√n))` with the `n = 0` term equal to 1.
pub fn poisson_mean_tau(
    u: f64,
    rate: f64,
    packet_mean: f64,
    packet_sd: f64,
    truncation: Truncation,
) -> Result<f64> {
    Ok(PoissonNormalCdf::new(u, rate, packet_mean, packet_sd, truncation)?.mean())
}

/// Exact CDF for Poisson arrivals and exponential packets,
/// `Σ_{n>=1} e^{−λt}(λt)ⁿ/n! · Q(n, u/X̄)`, with the Poisson mass beyond the
/// last summed term counted as crossed.
///
/// `Q(n, u/X̄)` depends only on the threshold and is cached up to the index
/// where it reaches 1 in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactExponentialCdf {
    rate: f64,
    truncation: Truncation,
    upper_gamma: Vec<f64>,
}

impl ExactExponentialCdf {
    pub fn new(
        threshold: f64,
        rate: f64,
        packet_mean: f64,
        truncation: Truncation,
    ) -> Result<Self> {
        check_positive("u", threshold)?;
        check_positive("rate", rate)?;
        check_positive("packet_mean", packet_mean)?;
        if truncation == Truncation::Fixed(0) {
            return Err(Error::invalid("n_max", "must be >= 1"));
        }
        let x = threshold / packet_mean;
        // index 0 is unused; Q(n, x) is increasing in n
        let mut upper_gamma = vec![0.0];
        for n in 1.. {
            let q = gamma_q(n as f64, x);
            upper_gamma.push(q);
            if q >= 1.0 - f64::EPSILON / 2.0 || n >= MAX_ADAPTIVE_TERMS {
                break;
            }
        }
        Ok(Self {
            rate,
            truncation,
            upper_gamma,
        })
    }

    fn q(&self, n: usize) -> f64 {
        self.upper_gamma.get(n).copied().unwrap_or(1.0)
    }

    pub fn cdf(&self, t: f64) -> SeriesValue {
        if !(t > 0.0) {
            return SeriesValue {
                value: 0.0,
                omitted_mass: 0.0,
                terms: 1,
            };
        }
        let m = self.rate * t;
        let mut sum = 0.0;
        let mut cum = 0.0;
        let mut terms = 0;
        let limit = match self.truncation {
            Truncation::Fixed(n_max) => n_max,
            Truncation::Adaptive => MAX_ADAPTIVE_TERMS,
        };
        for (n, w) in poisson_weights(m).take(limit + 1) {
            if n > 0 {
                sum += w * self.q(n);
            }
            cum += w;
            terms = n + 1;
            if self.truncation == Truncation::Adaptive && n as f64 > m && 1.0 - cum < ADAPTIVE_TAIL
            {
                break;
            }
        }
        // omitted terms have Q(n, x) close to 1 once n exceeds x
        let omitted = match self.truncation {
            Truncation::Fixed(n_max) => gamma_p(n_max as f64 + 1.0, m),
            Truncation::Adaptive => (1.0 - cum).max(0.0),
        };
        SeriesValue {
            value: (sum + omitted).clamp(0.0, 1.0),
            omitted_mass: omitted,
            terms,
        }
    }
}

/// `P(τ(u) <= t)` for Poisson(`rate`) arrivals and exponential packets with
/// mean `packet_mean`.
pub fn poisson_cdf_exp_exact(
    u: f64,
    t: f64,
    rate: f64,
    packet_mean: f64,
    truncation: Truncation,
) -> Result<SeriesValue> {
    Ok(ExactExponentialCdf::new(u, rate, packet_mean, truncation)?.cdf(t))
}

/// Rate, packet and residual moments feeding the renewal asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticMoments {
    /// `λ = 1/E[A]`.
    pub rate: f64,
    pub packet_mean: f64,
    pub packet_variance: f64,
    pub arrival_variance: f64,
    /// `γ² = σ_X²/λ² + σ_A²·X̄²`.
    pub gamma2: f64,
    pub residual_mean: f64,
    pub residual_variance: f64,
}

impl AsymptoticMoments {
    pub fn new(arrival: &ArrivalProcess, packets: &PacketSource) -> Self {
        let a = arrival.interarrival.raw_moments();
        let x = packets.raw_moments();
        let rate = 1.0 / a.mean;
        let (residual_mean, residual_variance) = arrival.residual_moments();
        Self {
            rate,
            packet_mean: x.mean,
            packet_variance: x.variance,
            arrival_variance: a.variance,
            gamma2: x.variance / (rate * rate) + a.variance * x.mean * x.mean,
            residual_mean,
            residual_variance,
        }
    }
}

/// Two-term asymptotic mean `E[A₀] + E[A]·((σ_X²/X̄² − 1)/2 + u/X̄)`.
///
/// For an equilibrium stream this is `λγ²/(2X̄²) + u/(λX̄)`; a pure stream
/// drops the residual mean.
pub fn renewal_mean_tau(u: f64, m: &AsymptoticMoments) -> f64 {
    let xbar = m.packet_mean;
    m.residual_mean + (0.5 * (m.packet_variance / (xbar * xbar) - 1.0) + u / xbar) / m.rate
}

/// Two-term asymptotic variance `V[A₀] + γ²u/X̄³`.
pub fn renewal_var_tau(u: f64, m: &AsymptoticMoments) -> f64 {
    m.residual_variance + m.gamma2 * u / m.packet_mean.powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CltMode {
    /// Leading terms only: mean `u/(λX̄)`, variance `γ²u/X̄³`.
    Plain,
    /// Constant terms of the mean and variance included.
    #[default]
    Refined,
}

/// Normal approximation `Φ((t − mean)/sd)` of `P(τ(u) <= t)`.
///
/// Returns 0 for `t <= 0`. A zero variance degenerates to a unit step at the
/// mean.
pub fn renewal_cdf_clt(u: f64, t: f64, m: &AsymptoticMoments, mode: CltMode) -> f64 {
    if !(t > 0.0) {
        return 0.0;
    }
    let (center, var) = match mode {
        CltMode::Plain => (
            u / (m.rate * m.packet_mean),
            m.gamma2 * u / m.packet_mean.powi(3),
        ),
        CltMode::Refined => (renewal_mean_tau(u, m), renewal_var_tau(u, m)),
    };
    if var <= 0.0 {
        return if t >= center { 1.0 } else { 0.0 };
    }
    normal_cdf((t - center) / var.sqrt())
}

/// Evaluates a linear-battery CDF `linear_cdf(threshold, t)` at the
/// non-linear battery's transformed threshold `u'`.
pub fn nonlinear_cdf(
    u: f64,
    t: f64,
    model: &BatteryModel,
    linear_cdf: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    let transformed = model.input_for_level(u)?;
    Ok(linear_cdf(transformed, t))
}
