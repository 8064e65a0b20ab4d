//! Test-only oracles, independent of the library's numerical paths.
#![allow(dead_code)]

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    // split into panels so narrow peaks are not missed
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = lo + h;
            let (flo, fhi) = (f(lo), f(hi));
            let (m, fm, whole) = simpson(f, lo, flo, hi, fhi);
            recurse(f, lo, flo, hi, fhi, m, fm, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// `Σ_{i<n} xⁱ/i!` by direct summation.
pub fn truncated_exp_sum(n: usize, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for i in 0..n {
        if i > 0 {
            term *= x / i as f64;
        }
        sum += term;
    }
    sum
}

/// Exact `P(τ(u) <= t)` for Poisson(λ) arrivals and Exp(mean X̄) packets,
/// coded as `1 − e^{−λt} Σₙ (λt)ⁿ/n! · F⁽ⁿ⁾(u)` with Erlang CDFs written as
/// finite sums and all factors accumulated by plain multiplication.
pub fn exp_exp_cdf_by_erlang_sums(u: f64, t: f64, rate: f64, mean: f64, n_max: usize) -> f64 {
    let x = u / mean;
    let m = rate * t;
    let mut poisson = (-m).exp();
    let mut below = poisson; // n = 0: F⁽⁰⁾(u) = 1
    for n in 1..=n_max {
        poisson *= m / n as f64;
        let erlang_cdf = 1.0 - (-x).exp() * truncated_exp_sum(n, x);
        below += poisson * erlang_cdf;
    }
    1.0 - below
}

pub fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
