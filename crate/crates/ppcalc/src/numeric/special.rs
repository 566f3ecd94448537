//! Special functions not covered by statrs: the exponential integral and the
//! upper incomplete gamma function with parameter in (-1, 0).

use statrs::function::gamma::{gamma, gamma_ur};

/// Exponential integral `E1(x) = integral_x^inf e^{-t}/t dt` for `x > 0`.
///
/// Series expansion below 1, continued fraction (modified Lentz) above.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 requires x > 0");
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if x <= 1.0 {
        // E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k * k!)
        let mut sum = 0.0f64;
        let mut term = 1.0f64;
        for k in 1..=60 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // E1(x) = e^{-x} * (1 / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...))))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let a = -(i as f64) * (i as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Upper incomplete gamma `Gamma(a, z)` for `a` in `(-1, 0)` and `z > 0`,
/// via the recurrence `Gamma(a, z) = (Gamma(a+1, z) - z^a e^{-z}) / a`.
pub fn upper_incomplete_gamma_neg(a: f64, z: f64) -> f64 {
    assert!(a > -1.0 && a < 0.0, "parameter must lie in (-1, 0)");
    assert!(z > 0.0);
    let a1 = a + 1.0; // in (0, 1)
    let upper_a1 = gamma(a1) * gamma_ur(a1, z);
    // Guard against catastrophic cancellation for tiny z where both terms blow up:
    // use logs when z^a e^{-z} dominates.
    (upper_a1 - (a * z.ln() - z).exp()) / a
}

/// log(Gamma(x)) shorthand used throughout.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Log-sum-exp over a slice; returns -inf for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::quad;
    use approx::assert_relative_eq;

    #[test]
    fn e1_matches_quadrature() {
        for &x in &[0.1, 0.5, 1.0, 2.0, 10.0] {
            let direct = quad::integrate_from(&|t| (-t).exp() / t, x, 1e-13).unwrap();
            assert_relative_eq!(exp_integral_e1(x), direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn e1_at_one() {
        assert_relative_eq!(exp_integral_e1(1.0), 0.219_383_934_395_520_3, max_relative = 1e-12);
    }

    #[test]
    fn negative_parameter_incomplete_gamma_matches_quadrature() {
        for &(a, z) in &[(-0.5, 0.25), (-0.5, 1.0), (-0.2, 2.0), (-0.8, 0.5)] {
            let direct = quad::integrate_from(&|t: f64| t.powf(a - 1.0) * (-t).exp(), z, 1e-13)
                .unwrap();
            assert_relative_eq!(
                upper_incomplete_gamma_neg(a, z),
                direct,
                max_relative = 1e-9
            );
        }
    }
}
