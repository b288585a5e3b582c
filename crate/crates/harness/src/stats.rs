//! Summary statistics and the hypothesis tests used for acceptance checks.

use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation with the `n − 1` denominator; 0 for fewer than two values.
pub fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn standard_error(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    sample_std(v) / (v.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub statistic: f64,
    pub p_value: f64,
    pub mean_difference: f64,
}

/// Paired one-sided t-test of `H1: mean(a − b) < 0`.
pub fn paired_t_less(a: &[f64], b: &[f64]) -> TTest {
    assert_eq!(a.len(), b.len(), "paired samples differ in length");
    assert!(a.len() >= 2, "need at least two pairs");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&d);
    let se = standard_error(&d);
    let statistic = if se > 0.0 {
        m / se
    } else if m < 0.0 {
        f64::NEG_INFINITY
    } else if m > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let dist = StudentsT::new(0.0, 1.0, (d.len() - 1) as f64).expect("valid degrees of freedom");
    let p_value = match statistic {
        s if s == f64::NEG_INFINITY => 0.0,
        s if s == f64::INFINITY => 1.0,
        s => dist.cdf(s),
    };
    TTest { statistic, p_value, mean_difference: m }
}

/// `P(X ≤ successes)` for `X ~ Binomial(trials, p)`: the p-value of `H1: rate < p`.
pub fn binomial_lower_p(successes: u64, trials: u64, p: f64) -> f64 {
    Binomial::new(p, trials).expect("valid binomial").cdf(successes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn moments() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&v), 2.5);
        assert_abs_diff_eq!(sample_std(&v), (5.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(standard_error(&v), (5.0f64 / 3.0).sqrt() / 2.0, epsilon = 1e-15);
        assert_eq!(standard_error(&[3.0]), 0.0);
    }

    #[test]
    fn paired_t_matches_hand_value() {
        // d = (-1, -2, -3): mean −2, sd 1, se 1/√3, t = −2√3 on 2 df
        let t = paired_t_less(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(t.statistic, -2.0 * 3f64.sqrt(), epsilon = 1e-12);
        // two-sided 2-df t cdf: 1/2 + t/(2√(2+t²))
        let s = t.statistic;
        assert_abs_diff_eq!(t.p_value, 0.5 + s / (2.0 * (2.0 + s * s).sqrt()), epsilon = 1e-10);
        assert_eq!(paired_t_less(&[0.0, 0.0], &[1.0, 1.0]).p_value, 0.0);
    }

    #[test]
    fn binomial_tail() {
        // P(X ≤ 1) for Binomial(3, 0.5) = 4/8
        assert_abs_diff_eq!(binomial_lower_p(1, 3, 0.5), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(binomial_lower_p(200, 200, 0.9), 1.0, epsilon = 1e-12);
    }
}
