mod common;

use common::{integrate, mean_and_var};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use recharge_core::distributions::{DistributionSpec, Law};
use recharge_core::stats::{dkw_band, ks_statistic};

fn laws() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::exponential(1.0).unwrap(),
        DistributionSpec::gamma(1.0, 2.0).unwrap(),
        DistributionSpec::gamma(0.4, 1.5).unwrap(),
        DistributionSpec::gamma(3.5, 0.7).unwrap(),
        DistributionSpec::inverse_gaussian(1.0, 2.0).unwrap(),
        DistributionSpec::inverse_gaussian(3.0, 0.5).unwrap(),
        DistributionSpec::uniform(0.0, 1.0).unwrap(),
        DistributionSpec::uniform(0.5, 2.0).unwrap(),
        DistributionSpec::deterministic(3.0).unwrap(),
    ]
}

#[test]
fn exponential_sample_mean_band() {
    let d = DistributionSpec::exponential(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let xs: Vec<f64> = (0..1_000_000).map(|_| d.sample(&mut rng)).collect();
    let (mean, _) = mean_and_var(&xs);
    // σ/√n = 0.001, band ±0.004
    assert!((mean - 1.0).abs() < 0.004, "mean {mean}");
}

#[test]
fn inverse_gaussian_sample_variance_band() {
    let d = DistributionSpec::inverse_gaussian(1.0, 2.0).unwrap();
    let f = |x: f64| d.pdf(x).unwrap();
    // variance from the density, independent of the closed form μ³/λ
    let m1 = integrate(&|x| x * f(x), 0.0, 60.0, 1e-12);
    let m2 = integrate(&|x| x * x * f(x), 0.0, 60.0, 1e-12);
    let var_quad = m2 - m1 * m1;
    assert!((var_quad - 0.5).abs() < 1e-8, "{var_quad}");

    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let xs: Vec<f64> = (0..1_000_000).map(|_| d.sample(&mut rng)).collect();
    let (_, var) = mean_and_var(&xs);
    // Var(s²) ≈ (μ₄ − σ⁴)/n with μ₄ = 15μ⁷/λ³ + 3σ⁴ for the IG law
    let sigma4 = 0.25;
    let mu4 = 15.0 / 8.0 + 3.0 * sigma4;
    let sd = ((mu4 - sigma4) / 1e6_f64).sqrt();
    assert!((var - 0.5).abs() < 3.0 * sd, "var {var} band {}", 3.0 * sd);
}

#[test]
fn samples_match_cdf_within_dkw_band() {
    let n = 100_000;
    let band = dkw_band(n, 0.01);
    for (i, d) in laws().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + i as u64);
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        if matches!(d.law(), Law::Deterministic { .. }) {
            assert!(xs.iter().all(|&x| x == 3.0));
            continue;
        }
        let ks = ks_statistic(&xs, |x| d.cdf(x));
        assert!(ks < band, "{d}: KS {ks} >= {band}");
    }
}

#[test]
fn raw_moments_match_quadrature() {
    for d in laws() {
        let m = d.raw_moments();
        let Some(_) = d.pdf(1.0) else {
            assert_eq!((m.mean, m.variance, m.third), (3.0, 0.0, 27.0));
            continue;
        };
        if matches!(d.law(), Law::Gamma { shape, .. } if *shape < 1.0) {
            // integrable singularity at 0: integrate k x^{k−1} S(x) instead
            let hi = d.upper_bound(1e-18);
            let e1 = integrate(&|x| d.survival(x), 0.0, hi, 1e-13);
            let e2 = integrate(&|x| 2.0 * x * d.survival(x), 0.0, hi, 1e-13);
            let e3 = integrate(&|x| 3.0 * x * x * d.survival(x), 0.0, hi, 1e-13);
            assert!((e1 / m.mean - 1.0).abs() < 1e-6, "{d}");
            assert!(((e2 - e1 * e1) / m.variance - 1.0).abs() < 1e-6, "{d}");
            assert!((e3 / m.third - 1.0).abs() < 1e-6, "{d}");
            continue;
        }
        let (lo, hi) = match *d.law() {
            Law::Uniform { lo, hi } => (lo, hi),
            _ => (0.0, d.upper_bound(1e-20) * 1.5),
        };
        let f = |x: f64| d.pdf(x).unwrap();
        let e1 = integrate(&|x| x * f(x), lo, hi, 1e-13);
        let e2 = integrate(&|x| x * x * f(x), lo, hi, 1e-13);
        let e3 = integrate(&|x| x.powi(3) * f(x), lo, hi, 1e-13);
        assert!((e1 / m.mean - 1.0).abs() < 1e-6, "{d} mean {e1}");
        assert!(((e2 - e1 * e1) / m.variance - 1.0).abs() < 1e-6, "{d} var");
        assert!(
            (e3 / m.third - 1.0).abs() < 1e-6,
            "{d} third {e3} vs {}",
            m.third
        );
    }
}

#[test]
fn cdf_matches_integrated_density() {
    for d in laws() {
        if d.pdf(1.0).is_none() || matches!(d.law(), Law::Gamma { shape, .. } if *shape < 1.0) {
            continue;
        }
        for x in [0.3, 1.0, 2.5] {
            let lo = match *d.law() {
                Law::Uniform { lo, .. } => lo.min(x),
                _ => 0.0,
            };
            let q = integrate(&|s| d.pdf(s).unwrap(), lo, x, 1e-14);
            assert!(
                (q - d.cdf(x)).abs() < 1e-10,
                "{d} at {x}: {q} vs {}",
                d.cdf(x)
            );
        }
    }
}

proptest! {
    #[test]
    fn display_round_trips(
        rate in 1e-3f64..1e3,
        shape in 1e-2f64..50.0,
        scale in 1e-2f64..50.0,
        lo in 0.0f64..10.0,
        width in 1e-3f64..10.0,
    ) {
        for d in [
            DistributionSpec::exponential(rate).unwrap(),
            DistributionSpec::gamma(shape, scale).unwrap(),
            DistributionSpec::inverse_gaussian(scale, shape).unwrap(),
            DistributionSpec::uniform(lo, lo + width).unwrap(),
            DistributionSpec::deterministic(rate).unwrap(),
        ] {
            prop_assert_eq!(d.to_string().parse::<DistributionSpec>().unwrap(), d);
        }
    }

    #[test]
    fn survival_plus_cdf_is_one(x in 0.0f64..20.0, shape in 0.2f64..8.0, scale in 0.1f64..4.0) {
        let d = DistributionSpec::gamma(shape, scale).unwrap();
        prop_assert!((d.cdf(x) + d.survival(x) - 1.0).abs() < 1e-13);
        let ig = DistributionSpec::inverse_gaussian(scale, shape).unwrap();
        prop_assert!((ig.cdf(x) + ig.survival(x) - 1.0).abs() < 1e-13);
    }
}
