mod common;

use common::{integrate, mean_and_var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recharge_core::renewal::{ArrivalProcess, RenewalMode};
use recharge_core::stats::{dkw_band, ecdf, ks_distance, ks_statistic};
use recharge_core::DistributionSpec;

fn processes() -> Vec<ArrivalProcess> {
    [
        DistributionSpec::exponential(1.0).unwrap(),
        DistributionSpec::uniform(0.0, 1.0).unwrap(),
        DistributionSpec::deterministic(3.0).unwrap(),
        DistributionSpec::inverse_gaussian(1.0, 2.0).unwrap(),
        DistributionSpec::gamma(1.0, 2.0).unwrap(),
        DistributionSpec::gamma(2.5, 0.4).unwrap(),
    ]
    .into_iter()
    .map(ArrivalProcess::equilibrium)
    .collect()
}

#[test]
fn residual_sample_mean_matches_moment_formula() {
    for (i, p) in processes().into_iter().enumerate() {
        let m = p.interarrival.raw_moments();
        let expected = (m.mean * m.mean + m.variance) / (2.0 * m.mean);
        let (mean_formula, var_formula) = p.residual_moments();
        assert!((mean_formula - expected).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(300 + i as u64);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| p.residual_sample(&mut rng)).collect();
        let (mean, _) = mean_and_var(&xs);
        let se = (var_formula / n as f64).sqrt();
        assert!(
            (mean - expected).abs() < 4.0 * se,
            "{}: {mean} vs {expected} (se {se})",
            p.interarrival
        );
    }
}

#[test]
fn uniform_residual_mean_by_quadrature() {
    let p = ArrivalProcess::equilibrium(DistributionSpec::uniform(0.0, 1.0).unwrap());
    let mean = integrate(&|t| 1.0 - p.residual_cdf(t), 0.0, 1.0, 1e-14);
    assert!((mean - 1.0 / 3.0).abs() < 1e-12, "{mean}");
    assert!((p.residual_moments().0 - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn residual_cdf_matches_integrated_survival() {
    for p in processes() {
        let d = &p.interarrival;
        let mu = d.raw_moments().mean;
        for t in [0.1, 0.5, 1.0, 2.0, 4.0] {
            let q = integrate(&|s| d.survival(s), 0.0, t, 1e-14) / mu;
            assert!(
                (q - p.residual_cdf(t)).abs() < 1e-9,
                "{d} at {t}: {q} vs {}",
                p.residual_cdf(t)
            );
        }
    }
}

#[test]
fn residual_samples_follow_residual_cdf() {
    let n = 100_000;
    for (i, p) in processes().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + i as u64);
        let xs: Vec<f64> = (0..n).map(|_| p.residual_sample(&mut rng)).collect();
        let ks = ks_statistic(&xs, |t| p.residual_cdf(t));
        assert!(ks < dkw_band(n, 0.01), "{}: KS {ks}", p.interarrival);
    }
}

/// Forward recurrence time seen from a uniformly placed inspection time in a
/// long pure renewal sequence: length-biased interval times a uniform split.
fn length_biased_residuals(d: &DistributionSpec, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaps: Vec<f64> = (0..200_000).map(|_| d.sample(&mut rng)).collect();
    let mut ends = Vec::with_capacity(gaps.len());
    let mut acc = 0.0;
    for g in &gaps {
        acc += g;
        ends.push(acc);
    }
    (0..n)
        .map(|_| {
            let t = rng.random::<f64>() * acc;
            let k = ends.partition_point(|&e| e <= t);
            ends[k] - t
        })
        .collect()
}

#[test]
fn numeric_residual_path_matches_length_biased_construction() {
    let n = 50_000;
    // two-sample Kolmogorov bound at α = 0.01
    let band = (-(0.005f64).ln() / 2.0).sqrt() * (2.0 / n as f64).sqrt();
    for (i, d) in [
        DistributionSpec::inverse_gaussian(1.0, 2.0).unwrap(),
        DistributionSpec::gamma(2.5, 0.4).unwrap(),
        DistributionSpec::uniform(0.5, 2.0).unwrap(),
    ]
    .into_iter()
    .enumerate()
    {
        let p = ArrivalProcess::equilibrium(d);
        let mut rng = ChaCha8Rng::seed_from_u64(500 + i as u64);
        let a: Vec<f64> = (0..n).map(|_| p.residual_sample(&mut rng)).collect();
        let b = length_biased_residuals(&d, n, 600 + i as u64);
        let hi = d.upper_bound(1e-9);
        let grid: Vec<f64> = (0..=2000).map(|k| hi * k as f64 / 2000.0).collect();
        let ks = ks_distance(&ecdf(&a, &grid).unwrap(), &ecdf(&b, &grid).unwrap()).unwrap();
        assert!(ks < band, "{d}: two-sample KS {ks} >= {band}");
    }
}

#[test]
fn equilibrium_exponential_counts_are_poisson() {
    let p = ArrivalProcess::equilibrium(DistributionSpec::exponential(1.0).unwrap());
    let windows = 100_000usize;
    let mut counts = vec![0u64; windows];
    for t in p.stream(ChaCha8Rng::seed_from_u64(700)) {
        if t >= windows as f64 {
            break;
        }
        counts[t as usize] += 1;
    }
    let bins = 8;
    let mut observed = vec![0f64; bins];
    for c in counts {
        observed[(c as usize).min(bins - 1)] += 1.0;
    }
    let mut expected = vec![0f64; bins];
    let mut pk = (-1.0f64).exp();
    let mut tail = 1.0;
    for (k, e) in expected.iter_mut().enumerate().take(bins - 1) {
        *e = pk * windows as f64;
        tail -= pk;
        pk /= (k + 1) as f64;
    }
    expected[bins - 1] = tail * windows as f64;
    let chi2: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    // χ²₇ 0.999 quantile
    assert!(chi2 < 24.32, "chi2 {chi2} observed {observed:?}");
}

#[test]
fn equilibrium_is_shift_invariant() {
    // the forward recurrence time at any fixed s has the law of A₀
    let n = 50_000;
    for (i, d) in [
        DistributionSpec::inverse_gaussian(1.0, 2.0).unwrap(),
        DistributionSpec::deterministic(3.0).unwrap(),
        DistributionSpec::uniform(0.0, 1.0).unwrap(),
    ]
    .into_iter()
    .enumerate()
    {
        let p = ArrivalProcess::equilibrium(d);
        for s in [0.7, 5.0] {
            let xs: Vec<f64> = (0..n)
                .map(|k| {
                    let rng = ChaCha8Rng::seed_from_u64(((800 + i) as u64) << 32 | k as u64);
                    p.stream(rng).find(|&t| t > s).unwrap() - s
                })
                .collect();
            let ks = ks_statistic(&xs, |t| p.residual_cdf(t));
            assert!(ks < dkw_band(n, 0.01), "{d} shift {s}: KS {ks}");
        }
    }
}

#[test]
fn pure_mode_starts_at_zero() {
    for p in processes() {
        let pure = ArrivalProcess::new(p.interarrival, RenewalMode::Pure);
        let first = pure.stream(ChaCha8Rng::seed_from_u64(1)).next().unwrap();
        assert_eq!(first, 0.0);
        assert_eq!(pure.residual_moments(), (0.0, 0.0));
    }
}

#[test]
fn time_scaling_scales_epochs() {
    let p = ArrivalProcess::equilibrium(DistributionSpec::inverse_gaussian(1.0, 2.0).unwrap());
    let q = p.time_scaled(2.5).unwrap();
    assert!((q.rate() - p.rate() / 2.5).abs() < 1e-15);
    let (m0, v0) = p.residual_moments();
    let (m1, v1) = q.residual_moments();
    assert!((m1 - 2.5 * m0).abs() < 1e-12);
    assert!((v1 - 6.25 * v0).abs() < 1e-12);
}
