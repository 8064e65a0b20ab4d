//! Recharge time of energy-harvesting storage under discrete stochastic
//! energy arrivals.
//!
//! Energy arrives as instantaneous packets on a renewal process. The crate
//! estimates the first passage time `τ(u) = inf{t : U(t) > u}` of the stored
//! energy by Monte-Carlo replication ([`engine`]) and evaluates closed-form and
//! asymptotic approximations of its distribution and moments ([`analytic`]).
//! Linear (unit efficiency) and non-linear (state-dependent efficiency)
//! batteries are supported ([`battery`]).
//!
//! Replications run on rayon when the `parallel` feature is enabled (default)
//! and sequentially otherwise; both produce identical results for a seed.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod battery;
pub mod config;
pub mod distributions;
pub mod engine;
mod error;
pub mod experiment;
pub mod renewal;
pub mod rng;
pub mod special;
pub mod stats;

pub use battery::BatteryModel;
pub use config::{parse_config, ExperimentSet};
pub use distributions::{DistributionSpec, Law, PacketSource, WptPacketSpec};
pub use engine::{ExperimentConfig, PassageSamples, UpdateRule};
pub use error::{Error, Result};
pub use renewal::{ArrivalProcess, RenewalMode};
pub use stats::CdfCurve;
