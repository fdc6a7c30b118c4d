//! Goodness-of-fit tests used as statistical oracles.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Asymptotic Kolmogorov tail `Q(l) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 l^2)`.
fn kolmogorov_q(l: f64) -> f64 {
    if l < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * l * l).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Kolmogorov p-value with the effective-size correction `sqrt(n) + 0.12 + 0.11/sqrt(n)`.
fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov-Smirnov test against a continuous `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> TestResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    TestResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    TestResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    }
}

/// Pearson chi-square test of `counts` against equal cell probabilities.
pub fn chi_square_uniform(counts: &[u64]) -> TestResult {
    let k = counts.len();
    let n: u64 = counts.iter().sum();
    let e = n as f64 / k as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let dist = ChiSquared::new((k - 1) as f64).expect("at least two cells");
    TestResult {
        statistic: stat,
        p_value: 1.0 - dist.cdf(stat),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use statrs::distribution::Normal;

    #[test]
    fn kolmogorov_tail_known_values() {
        // Q(1.3581) is the 5% critical point
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_q(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn normal_sample_passes_and_shifted_fails() {
        let mut rng = RngStream::from_seed(1);
        let xs = rng.normal_vec(20_000);
        let n = Normal::new(0.0, 1.0).unwrap();
        assert!(ks_one_sample(&xs, |x| n.cdf(x)).p_value > 0.01);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.05).collect();
        assert!(ks_one_sample(&shifted, |x| n.cdf(x)).p_value < 0.01);
    }

    #[test]
    fn two_sample() {
        let mut rng = RngStream::from_seed(2);
        let a = rng.normal_vec(10_000);
        let b = rng.normal_vec(10_000);
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
        let c: Vec<f64> = b.iter().map(|x| 1.1 * x).collect();
        let d: Vec<f64> = a.iter().map(|x| x + 0.1).collect();
        assert!(ks_two_sample(&d, &c).p_value < 0.01);
    }

    #[test]
    fn chi_square() {
        assert!(chi_square_uniform(&[100, 100, 100, 100]).p_value > 0.99);
        assert!(chi_square_uniform(&[10, 100, 100, 190]).p_value < 1e-6);
    }
}
