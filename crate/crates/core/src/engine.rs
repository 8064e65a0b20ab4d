//! Monte-Carlo estimation of the first passage time `τ(u) = inf{t : U(t) > u}`.
//!
//! Stored energy only changes at arrival epochs, so every realization of
//! `τ(u)` is the epoch of the packet that first lifts `U` strictly above `u`.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::battery::BatteryModel;
use crate::distributions::PacketSource;
use crate::renewal::ArrivalProcess;
use crate::rng::replication_streams;
use crate::stats::{self, CdfCurve, SummaryStats};
use crate::{Error, Result};

/// Upper bound on packets per replication before a threshold is declared
/// unreachable.
pub const MAX_PACKETS: u64 = 1_000_000_000;

/// How a non-linear battery absorbs packets during simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateRule {
    /// `U ← U + η(U)·X` with `η` at the pre-packet level.
    #[default]
    PerPacket,
    /// Accumulate raw input and map it through the continuous transform.
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub arrival: ArrivalProcess,
    pub packets: PacketSource,
    pub battery: BatteryModel,
    pub threshold: f64,
    pub replications: u64,
    pub seed: u64,
    pub time_grid: Vec<f64>,
    pub update: UpdateRule,
}

impl ExperimentConfig {
    /// Config with a linear unbounded battery, 2000 replications, seed 0,
    /// per-packet update and an empty grid.
    pub fn new(arrival: ArrivalProcess, packets: impl Into<PacketSource>, threshold: f64) -> Self {
        Self {
            arrival,
            packets: packets.into(),
            battery: BatteryModel::linear(),
            threshold,
            replications: 2000,
            seed: 0,
            time_grid: Vec::new(),
            update: UpdateRule::PerPacket,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let u = self.threshold;
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::invalid(
                "u",
                format!("must be finite and > 0, got {u}"),
            ));
        }
        if let Some(cap) = self.battery.capacity() {
            if u > cap {
                return Err(Error::invalid(
                    "u",
                    format!("u={u} exceeds battery umax={cap}"),
                ));
            }
        }
        self.battery.input_for_level(u)?;
        if self.replications == 0 || self.replications > (1 << 62) {
            return Err(Error::invalid("replications", "must be in [1, 2^62]"));
        }
        validate_grid(&self.time_grid)?;
        Ok(())
    }

    /// Stable 64-bit FNV-1a hash of the config's canonical text.
    pub fn fingerprint(&self) -> u64 {
        self.to_string()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
                (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
            })
    }
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::invalid("grid", "times must be finite and >= 0"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "times must be strictly increasing"));
    }
    Ok(())
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "arrivals={} mode={:?} packets={} battery={:?} u={} replications={} seed={} update={:?} grid={:?}",
            self.arrival.interarrival,
            self.arrival.mode,
            self.packets,
            self.battery,
            self.threshold,
            self.replications,
            self.seed,
            self.update,
            self.time_grid
        )
    }
}

/// One `τ(u)` realization per replication, ordered by replication index.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageSamples {
    pub taus: Vec<f64>,
    pub fingerprint: u64,
    pub seed: u64,
}

/// Runs one replication against the given arrival and packet streams.
pub fn simulate_once<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    arrival_rng: &mut R,
    packet_rng: &mut R,
) -> Result<f64> {
    let u = config.threshold;
    if !config.battery.can_exceed(u) {
        return Err(Error::UnreachableThreshold {
            threshold: u,
            reason: format!(
                "battery saturates at {:?} ({})",
                config.battery.capacity(),
                config
            ),
        });
    }
    let mut level = 0.0;
    let mut input = 0.0;
    for (count, epoch) in config.arrival.stream(arrival_rng).enumerate() {
        if count as u64 >= MAX_PACKETS {
            return Err(Error::UnreachableThreshold {
                threshold: u,
                reason: format!("not crossed after {MAX_PACKETS} packets ({config})"),
            });
        }
        let x = config.packets.sample(packet_rng);
        level = match config.update {
            UpdateRule::PerPacket => config.battery.step_update(level, x),
            UpdateRule::Continuous => {
                input += x;
                config.battery.stored_from_input(input)
            }
        };
        if level > u {
            return Ok(epoch);
        }
    }
    unreachable!("arrival streams are unbounded")
}

/// Replication `index` on its own counter-derived substreams.
pub fn simulate_replication(config: &ExperimentConfig, index: u64) -> Result<f64> {
    let mut streams = replication_streams(config.seed, index);
    simulate_once(config, &mut streams.arrivals, &mut streams.packets).map_err(|e| {
        Error::Replication {
            index,
            source: Box::new(e),
        }
    })
}

fn collect(config: &ExperimentConfig, results: Vec<Result<f64>>) -> Result<PassageSamples> {
    let taus = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(PassageSamples {
        taus,
        fingerprint: config.fingerprint(),
        seed: config.seed,
    })
}

/// Runs every replication on the calling thread.
pub fn run_sequential(config: &ExperimentConfig) -> Result<PassageSamples> {
    config.validate()?;
    let results = (0..config.replications)
        .map(|i| simulate_replication(config, i))
        .collect();
    collect(config, results)
}

/// Runs replications on the current rayon pool. Output equals
/// [`run_sequential`] bit for bit.
#[cfg(feature = "parallel")]
pub fn run_parallel(config: &ExperimentConfig) -> Result<PassageSamples> {
    use rayon::prelude::*;

    config.validate()?;
    let results = (0..config.replications)
        .into_par_iter()
        .map(|i| simulate_replication(config, i))
        .collect();
    collect(config, results)
}

/// Runs all replications, in parallel when the `parallel` feature is on.
pub fn run(config: &ExperimentConfig) -> Result<PassageSamples> {
    #[cfg(feature = "parallel")]
    {
        run_parallel(config)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sequential(config)
    }
}

/// Runs on a dedicated pool of `workers` threads. Without the `parallel`
/// feature `workers` is ignored.
pub fn run_with_workers(config: &ExperimentConfig, workers: usize) -> Result<PassageSamples> {
    #[cfg(feature = "parallel")]
    {
        if workers <= 1 {
            return run_sequential(config);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?;
        pool.install(|| run_parallel(config))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        run_sequential(config)
    }
}

/// Point estimates and the empirical CDF on `grid`.
pub fn summarize(samples: &PassageSamples, grid: &[f64]) -> Result<(SummaryStats, CdfCurve)> {
    let summary = SummaryStats::from_samples(&samples.taus)?;
    let curve = stats::ecdf(&samples.taus, grid)?;
    Ok((summary, curve))
}
