//! Flat `key = value` experiment files.
//!
//! ```text
//! # Poisson arrivals, four packet laws, linear battery
//! arrivals = poisson rate=1
//! packets = deterministic value=3
//! packets = gamma shape=1 scale=2
//! battery = linear
//! u = 20
//! replications = 2000
//! seed = 42
//! grid = 0:0.5:60
//! ```
//!
//! `arrivals` and `packets` may repeat; the file then describes one curve per
//! (arrivals, packets) pair, arrivals-major. Every other key appears at most
//! once. Recognized keys:
//!
//! | key | values | default |
//! |-----|--------|---------|
//! | `name` | identifier used in output file names | `experiment` |
//! | `arrivals` | inter-arrival law (`poisson rate=..` = exponential) | required |
//! | `mode` | `equilibrium`, `pure` | `equilibrium` |
//! | `packets` | packet law, or `wpt distance=.. alpha=.. power=.. duration=..` | required |
//! | `gain` | channel-gain law for `wpt` packets | required with `wpt` |
//! | `battery` | `linear`, `linear umax=..`, `nonlinear umax=.. beta=..` | `linear` |
//! | `u` | threshold | required |
//! | `replications` | count | 2000 |
//! | `seed` | unsigned 64-bit | 0 |
//! | `grid` | `start:step:end` or comma list | 0 to 3·E[τ] in 200 steps |
//! | `update` | `per-packet`, `continuous` | `per-packet` |
//! | `n_max` | series length or `adaptive` | 100 |
//! | `formula` | `auto`, `poisson-normal`, `poisson-exact`, `renewal-clt`, `renewal-clt-plain` | `auto` |
//! | `ks_tolerance` | KS distance above which a run fails | 0.06 |
//! | `compare_u` | comma list of thresholds for `compare` | the value of `u` |

use crate::analytic::{renewal_mean_tau, AsymptoticMoments, Truncation, DEFAULT_TERMS};
use crate::battery::BatteryModel;
use crate::distributions::{split_params, DistributionSpec, PacketSource, Params, WptPacketSpec};
use crate::engine::{validate_grid, ExperimentConfig, UpdateRule};
use crate::experiment::Formula;
use crate::renewal::{ArrivalProcess, RenewalMode};
use crate::{Error, Result};

pub const DEFAULT_REPLICATIONS: u64 = 2000;
pub const DEFAULT_KS_TOLERANCE: f64 = 0.06;
pub const DEFAULT_GRID_STEPS: usize = 200;

/// Every curve described by one config file plus the shared analysis options.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSet {
    pub name: String,
    pub experiments: Vec<ExperimentConfig>,
    pub formula: Formula,
    pub truncation: Truncation,
    pub ks_tolerance: f64,
    pub compare_thresholds: Vec<f64>,
    /// Grid given in the file; `None` when each curve got its default grid.
    pub grid: Option<Vec<f64>>,
    /// The config text as read.
    pub source: String,
}

impl ExperimentSet {
    pub fn with_seed(mut self, seed: u64) -> Self {
        for e in &mut self.experiments {
            e.seed = seed;
        }
        self
    }

    pub fn with_replications(mut self, replications: u64) -> Result<Self> {
        for e in &mut self.experiments {
            e.replications = replications;
            e.validate()?;
        }
        Ok(self)
    }
}

/// `0 .. 3·E[τ]` in [`DEFAULT_GRID_STEPS`] steps, with `E[τ]` from the
/// renewal asymptotic at the (transformed) threshold.
pub fn default_grid(
    arrival: &ArrivalProcess,
    packets: &PacketSource,
    battery: &BatteryModel,
    u: f64,
) -> Result<Vec<f64>> {
    let threshold = battery.input_for_level(u)?;
    let moments = AsymptoticMoments::new(arrival, packets);
    let end = 3.0 * renewal_mean_tau(threshold, &moments);
    if !(end > 0.0 && end.is_finite()) {
        return Err(Error::invalid("grid", "could not derive a default grid"));
    }
    Ok((0..=DEFAULT_GRID_STEPS)
        .map(|i| end * i as f64 / DEFAULT_GRID_STEPS as f64)
        .collect())
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid("grid", format!("`{s}` is not a number")))
    };
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, step, end] = parts[..] else {
            return Err(Error::invalid("grid", "expected start:step:end"));
        };
        let (start, step, end) = (num(start)?, num(step)?, num(end)?);
        if !(step > 0.0) || end < start {
            return Err(Error::invalid("grid", "need step > 0 and end >= start"));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + step * i as f64).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must not be empty"));
    }
    validate_grid(&grid)?;
    Ok(grid)
}

fn parse_battery(text: &str) -> Result<BatteryModel> {
    let (name, values) = split_params(text)?;
    let p = Params::new(name.clone(), values);
    match name.as_str() {
        "linear" => {
            p.only(&["umax"])?;
            match p.get("umax") {
                Some(cap) => BatteryModel::linear_with_capacity(cap),
                None => Ok(BatteryModel::linear()),
            }
        }
        "nonlinear" | "non-linear" => {
            p.only(&["umax", "beta"])?;
            BatteryModel::nonlinear(p.require("umax")?, p.require("beta")?)
        }
        other => Err(Error::invalid(
            "battery",
            format!("unknown model `{other}`"),
        )),
    }
}

enum PacketLine {
    Law(DistributionSpec),
    Wpt {
        distance: f64,
        alpha: f64,
        power: f64,
        duration: f64,
    },
}

fn parse_packets(text: &str) -> Result<PacketLine> {
    if text.split_whitespace().next() == Some("wpt") {
        let (name, values) = split_params(text)?;
        let p = Params::new(name, values);
        p.only(&["distance", "alpha", "power", "duration"])?;
        return Ok(PacketLine::Wpt {
            distance: p.require("distance")?,
            alpha: p.require("alpha")?,
            power: p.require("power")?,
            duration: p.require("duration")?,
        });
    }
    Ok(PacketLine::Law(text.parse()?))
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(key, format!("`{value}` is not a valid value")))
}

/// Parses and validates a config file.
pub fn parse_config(text: &str) -> Result<ExperimentSet> {
    let mut arrivals = Vec::new();
    let mut packets = Vec::new();
    let mut singles: Vec<(&str, &str, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let at_line = |e: Error| match e {
            Error::InvalidParameter { name, constraint } => Error::Config {
                line: line_no,
                message: format!("`{key}`: invalid `{name}`: {constraint}"),
            },
            other => other,
        };
        match key {
            "arrivals" => arrivals.push(value.parse::<DistributionSpec>().map_err(at_line)?),
            "packets" => packets.push(parse_packets(value).map_err(at_line)?),
            "name" | "mode" | "gain" | "battery" | "u" | "replications" | "seed" | "grid"
            | "update" | "n_max" | "formula" | "ks_tolerance" | "compare_u" => {
                if singles.iter().any(|(k, _, _)| *k == key) {
                    return Err(Error::Config {
                        line: line_no,
                        message: format!("duplicate key `{key}`"),
                    });
                }
                singles.push((key, value, line_no));
            }
            other => {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }

    let get = |key: &str| {
        singles
            .iter()
            .find(|(k, _, _)| *k == key)
            .map(|(_, v, _)| *v)
    };

    if arrivals.is_empty() {
        return Err(Error::invalid(
            "arrivals",
            "at least one `arrivals` line is required",
        ));
    }
    if packets.is_empty() {
        return Err(Error::invalid(
            "packets",
            "at least one `packets` line is required",
        ));
    }
    let threshold: f64 = parse_number(
        "u",
        get("u").ok_or_else(|| Error::invalid("u", "required key missing"))?,
    )?;
    let mode = match get("mode").unwrap_or("equilibrium") {
        "equilibrium" | "stationary" => RenewalMode::Equilibrium,
        "pure" => RenewalMode::Pure,
        other => {
            return Err(Error::invalid(
                "mode",
                format!("expected equilibrium|pure, got `{other}`"),
            ))
        }
    };
    let battery = match get("battery") {
        Some(b) => parse_battery(b)?,
        None => BatteryModel::linear(),
    };
    let replications = match get("replications") {
        Some(v) => parse_number("replications", v)?,
        None => DEFAULT_REPLICATIONS,
    };
    let seed = match get("seed") {
        Some(v) => parse_number("seed", v)?,
        None => 0,
    };
    let update = match get("update").unwrap_or("per-packet") {
        "per-packet" | "per_packet" | "discrete" => UpdateRule::PerPacket,
        "continuous" => UpdateRule::Continuous,
        other => {
            return Err(Error::invalid(
                "update",
                format!("expected per-packet|continuous, got `{other}`"),
            ))
        }
    };
    let truncation = match get("n_max") {
        None => Truncation::Fixed(DEFAULT_TERMS),
        Some("adaptive") => Truncation::Adaptive,
        Some(v) => {
            let n: usize = parse_number("n_max", v)?;
            if n == 0 {
                return Err(Error::invalid("n_max", "must be >= 1"));
            }
            Truncation::Fixed(n)
        }
    };
    let formula: Formula = get("formula").unwrap_or("auto").parse()?;
    let ks_tolerance = match get("ks_tolerance") {
        Some(v) => parse_number("ks_tolerance", v)?,
        None => DEFAULT_KS_TOLERANCE,
    };
    if !(ks_tolerance > 0.0 && ks_tolerance <= 1.0) {
        return Err(Error::invalid("ks_tolerance", "must be in (0, 1]"));
    }
    let compare_thresholds = match get("compare_u") {
        Some(v) => v
            .split(',')
            .map(|s| parse_number::<f64>("compare_u", s.trim()))
            .collect::<Result<Vec<_>>>()?,
        None => vec![threshold],
    };
    if compare_thresholds
        .iter()
        .any(|u| !(*u > 0.0 && u.is_finite()))
    {
        return Err(Error::invalid(
            "compare_u",
            "thresholds must be finite and > 0",
        ));
    }
    let grid = get("grid").map(parse_grid).transpose()?;
    let gain = get("gain")
        .map(str::parse::<DistributionSpec>)
        .transpose()?;
    let name = get("name").unwrap_or("experiment").to_string();
    if name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(Error::invalid(
            "name",
            "use ASCII letters, digits, `_` or `-`",
        ));
    }

    let packets = packets
        .into_iter()
        .map(|p| match p {
            PacketLine::Law(d) => Ok(PacketSource::Law(d)),
            PacketLine::Wpt {
                distance,
                alpha,
                power,
                duration,
            } => {
                let gain =
                    gain.ok_or_else(|| Error::invalid("gain", "required with `packets = wpt`"))?;
                Ok(PacketSource::Wpt(WptPacketSpec::new(
                    gain, distance, alpha, power, duration,
                )?))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if gain.is_some() && !packets.iter().any(|p| matches!(p, PacketSource::Wpt(_))) {
        return Err(Error::invalid(
            "gain",
            "only valid together with `packets = wpt`",
        ));
    }

    let mut experiments = Vec::with_capacity(arrivals.len() * packets.len());
    for interarrival in &arrivals {
        for packet in &packets {
            let arrival = ArrivalProcess::new(*interarrival, mode);
            let mut cfg = ExperimentConfig {
                arrival,
                packets: *packet,
                battery,
                threshold,
                replications,
                seed,
                time_grid: Vec::new(),
                update,
            };
            cfg.validate()?;
            cfg.time_grid = match &grid {
                Some(g) => g.clone(),
                None => default_grid(&arrival, packet, &battery, threshold)?,
            };
            experiments.push(cfg);
        }
    }

    Ok(ExperimentSet {
        name,
        experiments,
        formula,
        truncation,
        ks_tolerance,
        compare_thresholds,
        grid,
        source: text.to_string(),
    })
}
