//! Bracketing and bisection for monotone functions.

use crate::error::{Error, Result};

/// Solve `f(x) = target` for a (weakly) decreasing `f` on `(0, inf)`:
/// returns `inf { x : f(x) <= target }` refined to relative tolerance
/// `rel_tol`. `hint` seeds the bracket search.
pub fn invert_decreasing(
    f: &dyn Fn(f64) -> f64,
    target: f64,
    hint: f64,
    rel_tol: f64,
) -> Result<f64> {
    let op = "invert_decreasing";
    let mut hi = hint.max(1e-300);
    let mut steps = 0;
    while f(hi) > target {
        hi *= 4.0;
        steps += 1;
        if steps > 600 || !hi.is_finite() {
            return Err(Error::numeric(op, "no upper bracket: f stays above target"));
        }
    }
    let mut lo = hi;
    steps = 0;
    while f(lo) <= target {
        lo *= 0.25;
        steps += 1;
        if steps > 600 {
            // f(x) <= target all the way to 0: the infimum is 0
            return Ok(0.0);
        }
        if lo < 1e-300 {
            return Ok(0.0);
        }
    }
    // invariant: f(lo) > target >= f(hi)
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * mid || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::numeric(
        op,
        format!("bisection failed to converge (lo={lo}, hi={hi}, target={target})"),
    ))
}

/// Solve `f(x) = target` for an increasing `f` on the finite interval `[a, b]`.
pub fn invert_increasing_on(
    f: &dyn Fn(f64) -> f64,
    target: f64,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    let mut lo = a;
    let mut hi = b;
    if f(lo) >= target {
        return Ok(lo);
    }
    if f(hi) <= target {
        return Ok(hi);
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * mid.abs().max(1e-12) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::numeric(
        "invert_increasing_on",
        "bisection failed to converge",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_exponential_tail() {
        let f = |x: f64| (-x).exp();
        let x = invert_decreasing(&f, 0.1, 1.0, 1e-12).unwrap();
        assert!((x - 0.1f64.recip().ln()).abs() < 1e-9);
    }

    #[test]
    fn infimum_zero_when_target_above_range() {
        let f = |x: f64| (-x).exp(); // f <= 1 everywhere
        let x = invert_decreasing(&f, 2.0, 1.0, 1e-12).unwrap();
        assert_eq!(x, 0.0);
    }
}
