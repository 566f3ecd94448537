//! Base measures over the location space: named densities with samplers and
//! quantiles. A base measure is an unnormalized measure `eta`; dividing by
//! `total_mass` gives the probability measure `H`.

use crate::error::{Error, Result};
use crate::numeric::quad;
use rand::Rng;

#[derive(Debug, Clone)]
pub enum BaseKind {
    /// Uniform density on `[a, b]`.
    Uniform { a: f64, b: f64 },
    /// Exponential density `rate * exp(-rate * y)` on `[0, inf)`.
    Exponential { rate: f64 },
    /// Piecewise-constant density table on consecutive cells
    /// `[xs[i], xs[i+1])` with relative weights `weights[i]`.
    Piecewise { xs: Vec<f64>, weights: Vec<f64> },
}

/// A sigma-finite (here: finite) non-atomic measure on an interval of the
/// real line.
#[derive(Debug, Clone)]
pub struct BaseMeasure {
    kind: BaseKind,
    mass: f64,
    /// cumulative weights for the piecewise sampler
    cum: Vec<f64>,
}

impl BaseMeasure {
    pub fn uniform(a: f64, b: f64, mass: f64) -> Result<Self> {
        let op = "BaseMeasure::uniform";
        if !(b > a) {
            return Err(Error::invalid(op, "b", b, "b > a"));
        }
        if !(mass > 0.0) {
            return Err(Error::invalid(op, "mass", mass, "mass > 0"));
        }
        Ok(Self {
            kind: BaseKind::Uniform { a, b },
            mass,
            cum: Vec::new(),
        })
    }

    pub fn exponential(rate: f64, mass: f64) -> Result<Self> {
        let op = "BaseMeasure::exponential";
        if !(rate > 0.0) {
            return Err(Error::invalid(op, "rate", rate, "rate > 0"));
        }
        if !(mass > 0.0) {
            return Err(Error::invalid(op, "mass", mass, "mass > 0"));
        }
        Ok(Self {
            kind: BaseKind::Exponential { rate },
            mass,
            cum: Vec::new(),
        })
    }

    pub fn piecewise(xs: Vec<f64>, weights: Vec<f64>, mass: f64) -> Result<Self> {
        let op = "BaseMeasure::piecewise";
        if xs.len() != weights.len() + 1 || weights.is_empty() {
            return Err(Error::numeric(op, "need k+1 breakpoints for k weights"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::numeric(op, "breakpoints must increase"));
        }
        if weights.iter().any(|&w| w < 0.0) || weights.iter().all(|&w| w == 0.0) {
            return Err(Error::numeric(op, "weights must be nonnegative, not all zero"));
        }
        let mut cum = Vec::with_capacity(weights.len() + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            acc += w * (xs[i + 1] - xs[i]);
            cum.push(acc);
        }
        Ok(Self {
            kind: BaseKind::Piecewise { xs, weights },
            mass,
            cum,
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.mass
    }

    /// Support interval; the exponential support is truncated at the point
    /// carrying all but 1e-14 of the mass for quadrature purposes.
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            BaseKind::Uniform { a, b } => (*a, *b),
            BaseKind::Exponential { rate } => (0.0, -(1e-14f64).ln() / rate),
            BaseKind::Piecewise { xs, .. } => (xs[0], *xs.last().unwrap()),
        }
    }

    /// Unnormalized density of `eta` at `y` (integrates to `total_mass`).
    pub fn density(&self, y: f64) -> f64 {
        self.mass * self.h_density(y)
    }

    /// Normalized density of `H = eta / eta(Y)`.
    pub fn h_density(&self, y: f64) -> f64 {
        match &self.kind {
            BaseKind::Uniform { a, b } => {
                if y >= *a && y <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            BaseKind::Exponential { rate } => {
                if y >= 0.0 {
                    rate * (-rate * y).exp()
                } else {
                    0.0
                }
            }
            BaseKind::Piecewise { xs, weights } => {
                if y < xs[0] || y >= *xs.last().unwrap() {
                    return 0.0;
                }
                let idx = match xs.binary_search_by(|v| v.partial_cmp(&y).unwrap()) {
                    Ok(i) => i.min(weights.len() - 1),
                    Err(i) => i - 1,
                };
                weights[idx] / self.cum.last().unwrap()
            }
        }
    }

    /// Quantile of `H`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.kind {
            BaseKind::Uniform { a, b } => a + u * (b - a),
            BaseKind::Exponential { rate } => -(1.0 - u).max(1e-300).ln() / rate,
            BaseKind::Piecewise { xs, weights } => {
                let total = *self.cum.last().unwrap();
                let target = u * total;
                let idx = match self
                    .cum
                    .binary_search_by(|c| c.partial_cmp(&target).unwrap())
                {
                    Ok(i) => i.min(weights.len()),
                    Err(i) => i,
                };
                if idx == 0 {
                    return xs[0];
                }
                let i = idx - 1;
                let w = weights[i];
                if w <= 0.0 {
                    return xs[idx];
                }
                xs[i] + (target - self.cum[i]) / w
            }
        }
    }

    /// Draw a location from `H`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// `H`-measure of the interval `[lo, hi]`.
    pub fn h_interval(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match &self.kind {
            BaseKind::Uniform { a, b } => {
                let l = lo.max(*a);
                let h = hi.min(*b);
                ((h - l) / (b - a)).max(0.0)
            }
            BaseKind::Exponential { rate } => {
                let l = lo.max(0.0);
                if hi <= 0.0 {
                    return 0.0;
                }
                (-rate * l).exp() - (-rate * hi).exp()
            }
            BaseKind::Piecewise { .. } => {
                let f = |y: f64| self.h_density(y);
                let (a, b) = self.support();
                quad::integrate(&f, lo.max(a), hi.min(b), 1e-12).unwrap_or(0.0)
            }
        }
    }

    /// Verify that the density integrates to the total mass within `tol`.
    pub fn check_consistency(&self, tol: f64) -> Result<()> {
        let (a, b) = self.support();
        let f = |y: f64| self.density(y);
        let integral = quad::integrate(&f, a, b, 1e-10)?;
        if (integral - self.mass).abs() > tol * self.mass.max(1.0) {
            return Err(Error::numeric(
                "BaseMeasure::check_consistency",
                format!("density integrates to {integral}, declared mass {}", self.mass),
            ));
        }
        Ok(())
    }
}
