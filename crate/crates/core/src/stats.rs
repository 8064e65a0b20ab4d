//! Empirical CDFs and simulation-versus-theory distances.

use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveKind {
    Empirical { n_samples: usize },
    Analytic { formula: String },
}

/// CDF values aligned to an increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: CurveKind,
}

impl CdfCurve {
    /// Evaluates `cdf` on `grid`.
    pub fn analytic(grid: &[f64], formula: impl Into<String>, cdf: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: grid.to_vec(),
            values: grid.iter().map(|&t| cdf(t)).collect(),
            kind: CurveKind::Analytic {
                formula: formula.into(),
            },
        }
    }

    /// Right-continuous step interpolation; `None` before the first grid point.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let idx = self.grid.partition_point(|&g| g <= t);
        (idx > 0).then(|| self.values[idx - 1])
    }
}

/// Empirical CDF `#{x_i <= t} / n` at each grid time.
pub fn ecdf(samples: &[f64], grid: &[f64]) -> Result<CdfCurve> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "must be non-empty"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(CdfCurve {
        grid: grid.to_vec(),
        values: grid
            .iter()
            .map(|&t| sorted.partition_point(|&x| x <= t) as f64 / n)
            .collect(),
        kind: CurveKind::Empirical {
            n_samples: samples.len(),
        },
    })
}

/// `sup |a − b|` over the union of both grids, restricted to their overlap.
pub fn ks_distance(a: &CdfCurve, b: &CdfCurve) -> Result<f64> {
    let (Some(&a0), Some(&a1), Some(&b0), Some(&b1)) =
        (a.grid.first(), a.grid.last(), b.grid.first(), b.grid.last())
    else {
        return Err(Error::DisjointGrids);
    };
    let lo = a0.max(b0);
    let hi = a1.min(b1);
    if lo > hi {
        return Err(Error::DisjointGrids);
    }
    let mut sup: f64 = 0.0;
    for &t in a.grid.iter().chain(&b.grid) {
        if t < lo || t > hi {
            continue;
        }
        if let (Some(x), Some(y)) = (a.value_at(t), b.value_at(t)) {
            sup = sup.max((x - y).abs());
        }
    }
    Ok(sup)
}

/// Exact one-sample Kolmogorov–Smirnov statistic `sup_t |F_n(t) − F(t)|`
/// for a continuous reference CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Dvoretzky–Kiefer–Wolfowitz band half-width `√(ln(2/α) / (2n))`.
pub fn dkw_band(n: usize, alpha: f64) -> f64 {
    assert!(n >= 1, "dkw_band needs n >= 1");
    assert!(alpha > 0.0 && alpha < 1.0, "dkw_band needs 0 < alpha < 1");
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Sample moments with normal-theory 95% intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub std_error: f64,
    pub mean_ci95: (f64, f64),
    /// Large-sample interval using the fourth central moment.
    pub variance_ci95: (f64, f64),
}

impl SummaryStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "must be non-empty"));
        }
        let n = samples.len();
        let nf = n as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        let (m2, m4) = samples.iter().fold((0.0, 0.0), |(s2, s4), &x| {
            let d = (x - mean) * (x - mean);
            (s2 + d, s4 + d * d)
        });
        let variance = if n > 1 { m2 / (nf - 1.0) } else { 0.0 };
        let std_error = (variance / nf).sqrt();
        let z = 1.959_963_984_540_054;
        let biased = m2 / nf;
        let var_se = ((m4 / nf - biased * biased).max(0.0) / nf).sqrt();
        Ok(Self {
            n,
            mean,
            variance,
            std_error,
            mean_ci95: (mean - z * std_error, mean + z * std_error),
            variance_ci95: ((variance - z * var_se).max(0.0), variance + z * var_se),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_values() {
        let c = ecdf(&[3.0, 1.0, 2.0], &[0.0, 1.0, 2.0, 2.5, 3.0, 9.0]).unwrap();
        assert_eq!(
            c.values,
            vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0, 1.0]
        );
        assert!(ecdf(&[], &[1.0]).is_err());
    }

    #[test]
    fn ks_distance_basics() {
        let grid = [0.0, 1.0, 2.0];
        let a = CdfCurve::analytic(&grid, "step at 0", |_| 1.0);
        let b = CdfCurve::analytic(&grid, "step at inf", |_| 0.0);
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_distance(&a, &b).unwrap(), 1.0);
        let far = CdfCurve::analytic(&[5.0, 6.0], "late", |_| 0.5);
        assert!(matches!(ks_distance(&a, &far), Err(Error::DisjointGrids)));
    }

    #[test]
    fn ks_distance_resamples_by_steps() {
        let a = CdfCurve::analytic(&[0.0, 1.0, 2.0], "a", |t| t / 2.0);
        let b = CdfCurve::analytic(&[0.0, 0.5, 1.5, 2.0], "b", |t| t / 2.0);
        // at t = 1.5: a holds 0.5 from t = 1, b = 0.75
        assert!((ks_distance(&a, &b).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dkw_values() {
        assert!((dkw_band(2000, 0.01) - 0.036_39).abs() < 1e-5);
        assert!(dkw_band(1_000_000_000, 0.01) < 1e-4);
        let n = 3;
        let alpha = 2.0 * (-2.0 * n as f64).exp();
        assert!((dkw_band(n, alpha) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_statistic_of_a_perfect_grid() {
        // midpoints of n equal cells: sup is 1/(2n)
        let n = 10;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!((ks_statistic(&xs, |x| x.clamp(0.0, 1.0)) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn summary_stats() {
        let s = SummaryStats::from_samples(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.variance), (2.0, 1.0));
        assert!(s.mean_ci95.0 < 2.0 && s.mean_ci95.1 > 2.0);
        let one = SummaryStats::from_samples(&[4.0]).unwrap();
        assert_eq!(one.variance, 0.0);
    }
}
