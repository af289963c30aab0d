//! Confidence intervals for binomial proportions.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::PowerError;

const CF_MAX_ITER: usize = 200_000;
const CF_EPS: f64 = 1e-16;

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)` for `a, b > 0`.
///
/// Unlike common library versions this does not cap the continued fraction
/// at a few hundred terms, so it stays accurate for shape parameters in the
/// millions (binomial counts from large Monte Carlo runs).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (-x).ln_1p();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Solves `I_x(a, b) = target` for `x` by bisection.
pub fn inverse_regularized_incomplete_beta(a: f64, b: f64, target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    if target >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if regularized_incomplete_beta(a, b, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Clopper-Pearson exact interval for `successes` out of `trials` at
/// confidence `level`.
pub fn clopper_pearson(successes: u64, trials: u64, level: f64) -> Result<(f64, f64), PowerError> {
    if trials == 0 {
        return Err(PowerError::EmptySample);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(PowerError::InvalidLevel(level));
    }
    let k = successes.min(trials) as f64;
    let n = trials as f64;
    let tail = (1.0 - level) / 2.0;
    let low = if successes == 0 {
        0.0
    } else {
        inverse_regularized_incomplete_beta(k, n - k + 1.0, tail)
    };
    let high = if successes >= trials {
        1.0
    } else {
        inverse_regularized_incomplete_beta(k + 1.0, n - k, 1.0 - tail)
    };
    Ok((low, high))
}

/// Two-sided standard normal critical value for confidence `level`.
pub fn normal_critical_value(level: f64) -> f64 {
    if level >= 1.0 {
        return f64::INFINITY;
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(1.0 - (1.0 - level) / 2.0)
}

/// Wald interval for a difference of two proportions:
/// `(p1 - p2) ± z·sqrt(p1(1-p1)/n1 + p2(1-p2)/n2)`, clipped to [-1, 1].
pub fn wald_difference(p1: f64, n1: u64, p2: f64, n2: u64, level: f64) -> Result<(f64, f64, f64), PowerError> {
    if n1 == 0 || n2 == 0 {
        return Err(PowerError::EmptySample);
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(PowerError::InvalidLevel(level));
    }
    let estimate = p1 - p2;
    let se = (p1 * (1.0 - p1) / n1 as f64 + p2 * (1.0 - p2) / n2 as f64).sqrt();
    let half = if se == 0.0 { 0.0 } else { normal_critical_value(level) * se };
    Ok((estimate, (estimate - half).max(-1.0), (estimate + half).min(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn incomplete_beta_known_values() {
        // I_x(1, 1) = x; I_x(2, 1) = x^2; I_0.5(a, a) = 0.5
        assert_abs_diff_eq!(regularized_incomplete_beta(1.0, 1.0, 0.3), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(regularized_incomplete_beta(2.0, 1.0, 0.3), 0.09, epsilon = 1e-15);
        assert_abs_diff_eq!(regularized_incomplete_beta(7.5, 7.5, 0.5), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(regularized_incomplete_beta(4e5, 4e5, 0.5), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn boundary_intervals() {
        let (lo, hi) = clopper_pearson(0, 100, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        assert_abs_diff_eq!(hi, 1.0 - 0.025f64.powf(1.0 / 100.0), epsilon = 1e-12);
        let (lo, hi) = clopper_pearson(100, 100, 0.95).unwrap();
        assert_abs_diff_eq!(lo, 0.025f64.powf(1.0 / 100.0), epsilon = 1e-12);
        assert_eq!(hi, 1.0);
        assert!(clopper_pearson(1, 0, 0.95).is_err());
        assert!(clopper_pearson(1, 10, 1.5).is_err());
    }

    #[test]
    fn large_count_interval() {
        // Table-3 style interval at B = 10^6.
        let (lo, hi) = clopper_pearson(781_300, 1_000_000, 0.95).unwrap();
        assert_eq!((lo * 1e4).round() / 1e4, 0.7805);
        assert_eq!((hi * 1e4).round() / 1e4, 0.7821);
        let (lo, hi) = clopper_pearson(781_000, 1_000_000, 0.95).unwrap();
        assert!(lo < 0.781 && 0.781 < hi);
        assert_abs_diff_eq!(hi - lo, 0.0016, epsilon = 1e-4);
    }

    #[test]
    fn critical_value() {
        assert_abs_diff_eq!(normal_critical_value(0.95), 1.959963984540054, epsilon = 1e-12);
        assert_eq!(normal_critical_value(1.0), f64::INFINITY);
    }

    #[test]
    fn wald_examples() {
        let (e, lo, hi) = wald_difference(0.8, 10_000, 0.7, 10_000, 0.95).unwrap();
        let half = 1.959963984540054 * (0.8f64 * 0.2 / 1e4 + 0.7 * 0.3 / 1e4).sqrt();
        assert_abs_diff_eq!(e, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(hi - e, half, epsilon = 1e-12);
        assert_abs_diff_eq!(e - lo, half, epsilon = 1e-12);
        assert_abs_diff_eq!(half, 0.01192, epsilon = 1e-5);

        let (e, lo, hi) = wald_difference(0.6, 50, 0.6, 80, 0.95).unwrap();
        assert_eq!(e, 0.0);
        assert_abs_diff_eq!(lo, -hi, epsilon = 1e-15);

        let (_, lo, hi) = wald_difference(0.5, 40, 0.4, 40, 1.0).unwrap();
        assert_eq!((lo, hi), (-1.0, 1.0));
    }
}
