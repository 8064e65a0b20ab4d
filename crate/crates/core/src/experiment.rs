//! Experiment driver: Monte-Carlo runs, theory curves, CSV and manifest output.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::analytic::{
    renewal_cdf_clt, renewal_mean_tau, renewal_var_tau, AsymptoticMoments, CltMode,
    ExactExponentialCdf, PoissonNormalCdf, Truncation,
};
use crate::config::{default_grid, ExperimentSet};
use crate::engine::{self, ExperimentConfig, UpdateRule};
use crate::renewal::RenewalMode;
use crate::stats::{dkw_band, ks_distance, CdfCurve, SummaryStats};
use crate::{BatteryModel, Error, Result};

/// Confidence level of the DKW band reported next to each KS distance.
pub const DKW_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    /// Poisson normal approximation for equilibrium exponential arrivals,
    /// refined renewal CLT otherwise.
    #[default]
    Auto,
    PoissonNormal,
    PoissonExact,
    RenewalClt,
    RenewalCltPlain,
}

impl FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => Formula::Auto,
            "poisson-normal" => Formula::PoissonNormal,
            "poisson-exact" => Formula::PoissonExact,
            "renewal-clt" => Formula::RenewalClt,
            "renewal-clt-plain" => Formula::RenewalCltPlain,
            other => {
                return Err(Error::invalid(
                    "formula",
                    format!(
                        "unknown formula `{other}`; expected auto|poisson-normal|poisson-exact|renewal-clt|renewal-clt-plain"
                    ),
                ))
            }
        })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formula::Auto => "auto",
            Formula::PoissonNormal => "poisson-normal",
            Formula::PoissonExact => "poisson-exact",
            Formula::RenewalClt => "renewal-clt",
            Formula::RenewalCltPlain => "renewal-clt-plain",
        })
    }
}

#[derive(Debug, Clone)]
enum Evaluator {
    Normal(PoissonNormalCdf),
    Exact(ExactExponentialCdf),
    Clt(CltMode),
}

/// Analytic recharge-time distribution matching one experiment.
///
/// For a non-linear battery every formula is evaluated at the transformed
/// threshold `u'`, exactly as [`crate::analytic::nonlinear_cdf`] does.
#[derive(Debug, Clone)]
pub struct Theory {
    formula: Formula,
    threshold: f64,
    moments: AsymptoticMoments,
    evaluator: Evaluator,
}

impl Theory {
    pub fn for_config(
        cfg: &ExperimentConfig,
        formula: Formula,
        truncation: Truncation,
    ) -> Result<Self> {
        let poisson = cfg.arrival.is_poisson();
        let formula = match formula {
            Formula::Auto if poisson => Formula::PoissonNormal,
            Formula::Auto => Formula::RenewalClt,
            f => f,
        };
        let threshold = cfg.battery.input_for_level(cfg.threshold)?;
        let moments = AsymptoticMoments::new(&cfg.arrival, &cfg.packets);
        let needs_poisson = || {
            if poisson {
                Ok(())
            } else {
                Err(Error::NotApplicable(format!(
                    "{formula} needs equilibrium exponential arrivals, got {} ({:?})",
                    cfg.arrival.interarrival, cfg.arrival.mode
                )))
            }
        };
        let evaluator = match formula {
            Formula::PoissonNormal => {
                needs_poisson()?;
                Evaluator::Normal(PoissonNormalCdf::new(
                    threshold,
                    moments.rate,
                    moments.packet_mean,
                    moments.packet_variance.sqrt(),
                    truncation,
                )?)
            }
            Formula::PoissonExact => {
                needs_poisson()?;
                if !cfg.packets.is_exponential() {
                    return Err(Error::NotApplicable(format!(
                        "poisson-exact needs exponential packets, got {}",
                        cfg.packets
                    )));
                }
                Evaluator::Exact(ExactExponentialCdf::new(
                    threshold,
                    moments.rate,
                    moments.packet_mean,
                    truncation,
                )?)
            }
            Formula::RenewalClt => Evaluator::Clt(CltMode::Refined),
            Formula::RenewalCltPlain => Evaluator::Clt(CltMode::Plain),
            Formula::Auto => unreachable!(),
        };
        Ok(Self {
            formula,
            threshold,
            moments,
            evaluator,
        })
    }

    pub fn formula(&self) -> Formula {
        self.formula
    }

    /// Threshold the linear formula is evaluated at (`u'` for non-linear).
    pub fn effective_threshold(&self) -> f64 {
        self.threshold
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match &self.evaluator {
            Evaluator::Normal(c) => c.cdf(t).value,
            Evaluator::Exact(c) => c.cdf(t).value,
            Evaluator::Clt(mode) => renewal_cdf_clt(self.threshold, t, &self.moments, *mode),
        }
    }

    /// True if any grid point lost more than 1e-9 Poisson mass to truncation.
    pub fn truncation_warning(&self, grid: &[f64]) -> bool {
        grid.iter().any(|&t| match &self.evaluator {
            Evaluator::Normal(c) => c.cdf(t).truncation_warning(),
            Evaluator::Exact(c) => c.cdf(t).truncation_warning(),
            Evaluator::Clt(_) => false,
        })
    }

    /// Poisson series mean for the normal formula, renewal asymptotic otherwise.
    pub fn mean(&self) -> f64 {
        match &self.evaluator {
            Evaluator::Normal(c) => c.mean(),
            _ => renewal_mean_tau(self.threshold, &self.moments),
        }
    }

    pub fn variance(&self) -> f64 {
        renewal_var_tau(self.threshold, &self.moments)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveReport {
    pub file: String,
    pub arrivals: String,
    pub mode: RenewalMode,
    pub packets: String,
    pub battery: BatteryModel,
    pub threshold: f64,
    pub effective_threshold: f64,
    pub update: UpdateRule,
    pub formula: Formula,
    pub seed: u64,
    pub replications: u64,
    pub fingerprint: String,
    pub ks_distance: f64,
    pub dkw_band_99: f64,
    pub ks_tolerance: f64,
    pub pass: bool,
    pub monte_carlo: SummaryStats,
    pub analytic_mean: f64,
    pub analytic_variance: f64,
    pub truncation_warning: bool,
}

/// Everything needed to recompute a run: config text, seeds, and per-curve results.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub name: String,
    pub config: String,
    pub truncation: Truncation,
    pub curves: Vec<CurveReport>,
    pub all_pass: bool,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// CSV with header `t,ecdf,analytic_cdf`, 17 significant digits per value.
pub fn write_curves_csv(path: &Path, empirical: &CdfCurve, analytic: &CdfCurve) -> Result<()> {
    let mut out = String::from("t,ecdf,analytic_cdf\n");
    for ((t, e), a) in empirical
        .grid
        .iter()
        .zip(&empirical.values)
        .zip(&analytic.values)
    {
        out.push_str(&format!("{t:.16e},{e:.16e},{a:.16e}\n"));
    }
    fs::write(path, out).map_err(io_err(path))
}

fn curve_file_name(set: &ExperimentSet, index: usize, cfg: &ExperimentConfig) -> String {
    format!(
        "{}_{index:02}_{}_{}.csv",
        set.name,
        cfg.arrival.interarrival.name(),
        cfg.packets.name()
    )
}

/// Runs every curve of `set`, writes one CSV per curve plus `manifest.json`
/// into `out_dir`. `workers = None` uses the global rayon pool.
pub fn run_experiment(
    set: &ExperimentSet,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<RunManifest> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut curves = Vec::with_capacity(set.experiments.len());
    for (index, cfg) in set.experiments.iter().enumerate() {
        let theory = Theory::for_config(cfg, set.formula, set.truncation)?;
        let samples = match workers {
            Some(w) => engine::run_with_workers(cfg, w)?,
            None => engine::run(cfg)?,
        };
        let (summary, empirical) = engine::summarize(&samples, &cfg.time_grid)?;
        let analytic = CdfCurve::analytic(&cfg.time_grid, theory.formula().to_string(), |t| {
            theory.cdf(t)
        });
        let ks = ks_distance(&empirical, &analytic)?;
        let file = curve_file_name(set, index, cfg);
        write_curves_csv(&out_dir.join(&file), &empirical, &analytic)?;
        curves.push(CurveReport {
            file,
            arrivals: cfg.arrival.interarrival.to_string(),
            mode: cfg.arrival.mode,
            packets: cfg.packets.to_string(),
            battery: cfg.battery,
            threshold: cfg.threshold,
            effective_threshold: theory.effective_threshold(),
            update: cfg.update,
            formula: theory.formula(),
            seed: cfg.seed,
            replications: cfg.replications,
            fingerprint: format!("{:016x}", samples.fingerprint),
            ks_distance: ks,
            dkw_band_99: dkw_band(samples.taus.len(), DKW_ALPHA),
            ks_tolerance: set.ks_tolerance,
            pass: ks <= set.ks_tolerance,
            monte_carlo: summary,
            analytic_mean: theory.mean(),
            analytic_variance: theory.variance(),
            truncation_warning: theory.truncation_warning(&cfg.time_grid),
        });
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        name: set.name.clone(),
        config: set.source.clone(),
        truncation: set.truncation,
        all_pass: curves.iter().all(|c| c.pass),
        curves,
    };
    let path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    Ok(manifest)
}

/// Largest `|f − g|` over `grid`, with the time where it occurs.
pub fn max_gap(grid: &[f64], f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> (f64, f64) {
    grid.iter().map(|&t| ((f(t) - g(t)).abs(), t)).fold(
        (0.0, grid.first().copied().unwrap_or(0.0)),
        |best, cur| {
            if cur.0 > best.0 {
                cur
            } else {
                best
            }
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub experiment: usize,
    pub threshold: f64,
    pub max_gap: f64,
    pub t_at_max: f64,
    pub grid_points: usize,
}

/// Normal-approximation versus exact Poisson/exponential CDFs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub truncation: Truncation,
    pub rows: Vec<CompareRow>,
}

/// Tabulates `max_t |normal − exact|` for every experiment and every
/// threshold in `set.compare_thresholds`. Needs equilibrium exponential
/// arrivals, exponential packets and a linear battery.
pub fn compare_formulas(set: &ExperimentSet) -> Result<CompareReport> {
    let mut rows = Vec::new();
    for (index, cfg) in set.experiments.iter().enumerate() {
        if !cfg.arrival.is_poisson() || !cfg.packets.is_exponential() {
            return Err(Error::NotApplicable(format!(
                "compare needs equilibrium exponential arrivals and exponential packets, got arrivals `{}`, packets `{}`",
                cfg.arrival.interarrival, cfg.packets
            )));
        }
        if !matches!(cfg.battery, BatteryModel::Linear { .. }) {
            return Err(Error::NotApplicable(
                "compare needs a linear battery".into(),
            ));
        }
        let moments = AsymptoticMoments::new(&cfg.arrival, &cfg.packets);
        for &u in &set.compare_thresholds {
            let grid = match &set.grid {
                Some(g) => g.clone(),
                None => default_grid(&cfg.arrival, &cfg.packets, &cfg.battery, u)?,
            };
            let normal = PoissonNormalCdf::new(
                u,
                moments.rate,
                moments.packet_mean,
                moments.packet_variance.sqrt(),
                set.truncation,
            )?;
            let exact = ExactExponentialCdf::new(
                u,
                moments.rate,
                moments.packet_mean,
                Truncation::Adaptive,
            )?;
            let (gap, t) = max_gap(&grid, |t| normal.cdf(t).value, |t| exact.cdf(t).value);
            rows.push(CompareRow {
                experiment: index,
                threshold: u,
                max_gap: gap,
                t_at_max: t,
                grid_points: grid.len(),
            });
        }
    }
    Ok(CompareReport {
        truncation: set.truncation,
        rows,
    })
}

/// Writes `experiment,u,max_gap,t_at_max` rows to `path`.
pub fn write_compare_csv(path: &Path, report: &CompareReport) -> Result<PathBuf> {
    let mut out = Vec::new();
    writeln!(out, "experiment,u,max_gap,t_at_max").expect("write to Vec");
    for r in &report.rows {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e}",
            r.experiment, r.threshold, r.max_gap, r.t_at_max
        )
        .expect("write to Vec");
    }
    fs::write(path, out).map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_names_round_trip() {
        for f in [
            Formula::Auto,
            Formula::PoissonNormal,
            Formula::PoissonExact,
            Formula::RenewalClt,
            Formula::RenewalCltPlain,
        ] {
            assert_eq!(f.to_string().parse::<Formula>().unwrap(), f);
        }
        assert!("gauss".parse::<Formula>().is_err());
    }

    #[test]
    fn gap_of_a_formula_with_itself_is_zero() {
        let grid: Vec<f64> = (0..100).map(|i| i as f64 * 0.5).collect();
        let c = ExactExponentialCdf::new(20.0, 1.0, 1.0, Truncation::Adaptive).unwrap();
        assert_eq!(
            max_gap(&grid, |t| c.cdf(t).value, |t| c.cdf(t).value).0,
            0.0
        );
    }

    #[test]
    fn formula_applicability() {
        let set = crate::parse_config(
            "arrivals = gamma shape=2 scale=1\npackets = exponential rate=1\nu = 20\nformula = poisson-normal\n",
        )
        .unwrap();
        assert!(matches!(
            Theory::for_config(&set.experiments[0], set.formula, set.truncation),
            Err(Error::NotApplicable(_))
        ));
        assert!(compare_formulas(&set).is_err());
        let set =
            crate::parse_config("arrivals = poisson rate=1\npackets = uniform lo=0 hi=1\nu = 20\n")
                .unwrap();
        assert!(
            Theory::for_config(&set.experiments[0], Formula::PoissonExact, set.truncation).is_err()
        );
        let auto = Theory::for_config(&set.experiments[0], Formula::Auto, set.truncation).unwrap();
        assert_eq!(auto.formula(), Formula::PoissonNormal);
    }
}
