//! Joint Cauchy-Stieltjes transforms of linear functionals of normalized
//! random measures: `E[(1 + sum_l z_l P f_l)^{-q}]` with `q = theta` or
//! `theta + n`, evaluated through the mixing-density representation, the
//! Pitman-Yor closed form, and a Monte Carlo oracle.

use crate::base::BaseMeasure;
use crate::error::{Error, Result};
use crate::levy::{AtomicMeasureDraw, LocationFn, TiltTerm};
use crate::numeric::quad;
use crate::numeric::stats;
use crate::partition::enumerate_partitions;
use crate::scaled::ScaledLawSpec;

/// A transform request: bounded functionals with nonnegative scalars.
pub struct TransformRequest {
    pub spec: ScaledLawSpec,
    pub functionals: Vec<(LocationFn, f64)>,
}

impl TransformRequest {
    pub fn new(spec: ScaledLawSpec, functionals: Vec<(LocationFn, f64)>) -> Result<Self> {
        let op = "TransformRequest::new";
        if functionals.is_empty() {
            return Err(Error::EmptyInput {
                operation: op,
                what: "functionals",
            });
        }
        for (_, z) in &functionals {
            if !(*z >= 0.0) {
                return Err(Error::invalid(op, "z", *z, "z >= 0"));
            }
        }
        Ok(Self { spec, functionals })
    }

    fn combined(&self) -> impl Fn(f64) -> f64 + '_ {
        move |y: f64| {
            self.functionals
                .iter()
                .map(|(f, z)| z * f(y))
                .sum::<f64>()
        }
    }
}

/// `E[(1 + sum z_l P f_l)^{-(theta+n)}]` by mixing-density quadrature:
/// for `n = 0` the plain `pi_theta` mixture of Laplace functionals, for
/// `n >= 1` the partition sum over the joint mixing density.
pub fn stieltjes_via_mixing(req: &TransformRequest) -> Result<f64> {
    let op = "stieltjes_via_mixing";
    let spec = &req.spec;
    let theta = spec.theta();
    let n = spec.n() as usize;
    let g = req.combined();
    let mass = spec.intensity().base().total_mass();
    if n == 0 {
        if !(theta > 0.0) {
            return Err(Error::invalid(op, "theta", theta, "theta > 0 when n = 0"));
        }
        // integral L_mu(v * g | e^{-vh} rho) pi_theta(dv)
        let norm = spec.negative_moment(theta)?
            * crate::numeric::special::ln_gamma(theta).exp();
        let f = |v: f64| {
            let tilted = match spec.intensity().tilt(TiltTerm::ScalarJump(v)) {
                Ok(t) => t,
                Err(_) => return f64::NAN,
            };
            let scaled_g = |y: f64| v * g(y);
            let psi = match tilted.laplace_exponent(&scaled_g) {
                Ok(p) => p,
                Err(_) => return f64::NAN,
            };
            let lt = spec.total_mass_laplace(v).unwrap_or(f64::NAN);
            (-psi).exp() * v.powf(theta - 1.0) * lt / norm
        };
        let v = quad::integrate_logaxis(&f, 1e-8)?;
        if v.is_nan() {
            return Err(Error::Divergence {
                operation: op,
                family: spec.intensity().family_name(),
            });
        }
        return Ok(v);
    }
    // partition form: sum_p integral L_mu(vg | e^{-vh} rho, eta, p)
    // pi_{theta+n, theta}(dv, p)
    if n > 8 {
        return Err(Error::SizeLimit {
            operation: op,
            what: "n",
            got: n,
            max: 8,
        });
    }
    // E[T^{-(theta+n)}] cancels between the moment ratio and the
    // pi_{theta+n} normalizer
    let norm = spec.negative_moment(theta)?
        * crate::numeric::special::ln_gamma(theta + n as f64).exp();
    let neg_ratio = 1.0;
    let (lo, hi) = spec.intensity().base().support();
    let mut total = crate::numeric::kahan::KahanSum::new();
    for p in enumerate_partitions(n)? {
        let sizes = p.block_sizes().to_vec();
        let f = |v: f64| {
            let tilted = match spec.intensity().tilt(TiltTerm::ScalarJump(v)) {
                Ok(t) => t,
                Err(_) => return f64::NAN,
            };
            let scaled_g = |y: f64| v * g(y);
            let psi = match tilted.laplace_exponent(&scaled_g) {
                Ok(pv) => pv,
                Err(_) => return f64::NAN,
            };
            let mut prod = (-psi).exp();
            // per-block jump-law Laplace ratios integrated over H
            for &e in &sizes {
                let denom = match spec.kappa_omega(e, v) {
                    Ok(k) => k / mass,
                    Err(_) => return f64::NAN,
                };
                let ratio_f = |y: f64| {
                    let num = spec.kappa_omega(e, v + v * g(y)).unwrap_or(f64::NAN) / mass;
                    num / denom * spec.intensity().base().h_density(y)
                };
                match quad::integrate(&ratio_f, lo, hi, 1e-9) {
                    Ok(r) => prod *= r,
                    Err(_) => return f64::NAN,
                }
            }
            // joint mixing density pi_{theta+n, theta}(v, p)
            let lt = spec.total_mass_laplace(v).unwrap_or(f64::NAN);
            let mut dens = neg_ratio * v.powf(theta + n as f64 - 1.0) * lt / norm;
            for &e in &sizes {
                dens *= spec.kappa_omega(e, v).unwrap_or(f64::NAN);
            }
            prod * dens
        };
        let piece = quad::integrate_logaxis(&f, 1e-8)?;
        if piece.is_nan() {
            return Err(Error::Divergence {
                operation: op,
                family: spec.intensity().family_name(),
            });
        }
        total.add(piece);
    }
    Ok(total.value())
}

/// Pitman-Yor closed form:
/// `[integral (sum_l z_l f_l(y) + 1)^alpha H(dy)]^{-theta/alpha}`.
pub fn pd_stieltjes_closed_form(
    alpha: f64,
    theta: f64,
    base: &BaseMeasure,
    functionals: &[(LocationFn, f64)],
) -> Result<f64> {
    let op = "pd_stieltjes_closed_form";
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(op, "alpha", alpha, "0 < alpha < 1"));
    }
    if !(theta > -alpha) {
        return Err(Error::invalid(op, "theta", theta, "theta > -alpha"));
    }
    let (lo, hi) = base.support();
    let f = |y: f64| {
        let s: f64 = functionals.iter().map(|(f, z)| z * f(y)).sum();
        (s + 1.0).powf(alpha) * base.h_density(y)
    };
    let integral = quad::integrate(&f, lo, hi, 1e-11)?;
    Ok(integral.powf(-theta / alpha))
}

/// Monte Carlo transform estimate over draws of a normalized measure:
/// the empirical mean of `(1 + sum_l z_l P f_l)^{-exponent}`.
pub fn mc_transform_estimate(
    draws: &[AtomicMeasureDraw],
    functionals: &[(LocationFn, f64)],
    exponent: f64,
) -> Result<(f64, f64)> {
    if draws.is_empty() {
        return Err(Error::EmptyInput {
            operation: "mc_transform_estimate",
            what: "draws",
        });
    }
    let values: Vec<f64> = draws
        .iter()
        .map(|d| {
            let total = d.total_mass();
            let mut s = 0.0;
            for &(w, y) in &d.atoms {
                let fy: f64 = functionals.iter().map(|(f, z)| z * f(y)).sum();
                s += w / total * fy;
            }
            (1.0 + s).powf(-exponent)
        })
        .collect();
    Ok(stats::mean_stderr(&values))
}
