//! Paired two-tailed Student t-test.
//!
//! The t CDF goes through the regularized incomplete beta function, evaluated
//! with a modified-Lentz continued fraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub p_value: f64,
    pub df: usize,
    pub significant: bool,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Student-t CDF with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Two-tailed p-value of a t statistic.
pub fn two_tailed_p(t: f64, df: f64) -> f64 {
    regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Paired t-test on `a - b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::data(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let r = a.len();
    if r < 2 {
        return Err(Error::data(format!("runs < 2 (got {r})")));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let sd = sample_sd(&d);
    if sd.is_nan() || sd <= 0.0 {
        return Err(Error::data("degenerate paired sample: differences have zero variance"));
    }
    let t = mean(&d) / (sd / (r as f64).sqrt());
    let df = r - 1;
    let p = two_tailed_p(t, df as f64);
    Ok(TTestResult {
        t_statistic: t,
        p_value: p,
        df,
        significant: p < SIGNIFICANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
        assert!(ln_gamma(1.0).abs() < 1e-13);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x and I_x(a, 1) = x^a.
        for &x in &[0.1, 0.37, 0.5, 0.9] {
            assert!((regularized_incomplete_beta(x, 1.0, 1.0) - x).abs() < 1e-12);
            assert!((regularized_incomplete_beta(x, 3.0, 1.0) - x.powi(3)).abs() < 1e-12);
        }
        assert_eq!(regularized_incomplete_beta(0.0, 2.0, 3.0), 0.0);
        assert_eq!(regularized_incomplete_beta(1.0, 2.0, 3.0), 1.0);
    }

    #[test]
    fn t_cdf_cauchy_case() {
        // df = 1 is the Cauchy distribution: F(t) = 1/2 + atan(t)/pi.
        for &t in &[-3.0, -0.5, 0.0, 1.0, 7.5] {
            let expected = 0.5 + f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_cdf(t, 1.0) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn textbook_paired_example() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [0.0; 5];
        let r = paired_t_test(&a, &b).unwrap();
        assert!((r.t_statistic - 4.242_640_687_119_285).abs() < 1e-12);
        assert_eq!(r.df, 4);
        // Closed form for df = 4: P(|T| > t) = 1 - t(t^2 + 6) / (t^2 + 4)^1.5.
        let t = r.t_statistic;
        let exact = 1.0 - t * (t * t + 6.0) / (t * t + 4.0).powf(1.5);
        assert!((r.p_value - exact).abs() < 1e-10);
        assert!((r.p_value - 0.0132).abs() < 1e-4);
        assert!(r.significant);
    }

    #[test]
    fn swap_negates_t() {
        let a = [0.9, 0.85, 0.88, 0.91];
        let b = [0.8, 0.83, 0.86, 0.84];
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        assert_eq!(ab.t_statistic, -ba.t_statistic);
        assert!((ab.p_value - ba.p_value).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        let a = [0.5, 0.6, 0.7];
        let err = paired_t_test(&a, &a).unwrap_err();
        assert!(err.to_string().contains("degenerate paired sample"));
        assert!(paired_t_test(&[0.1], &[0.2]).unwrap_err().to_string().contains("runs < 2"));
        assert!(paired_t_test(&[0.1, 0.2], &[0.2]).is_err());
    }
}
