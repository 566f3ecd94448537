//! Poisson-Kingman partition distributions for weighted laws `w(N) = g(T)`:
//! EPPF evaluation by nested quadrature over the size-biased jumps and the
//! remaining total mass, plus the structural description of the posterior.
//!
//! Only families with a closed-form total-mass density are supported: the
//! gamma process (Gamma density) and the generalized gamma family at
//! `alpha = 1/2` (inverse-Gaussian-type density, including the pure stable
//! case `b = 0`). Everything else is refused so every number stays
//! verifiable.

use crate::error::{Error, Result};
use crate::levy::{Family, LevyIntensity};
use crate::numeric::kahan::KahanSum;
use crate::numeric::lowdisc::HaltonShifted;
use crate::numeric::quad;
use crate::numeric::special::ln_gamma;
use crate::numeric::stats;
use crate::partition::Partition;
use std::sync::Arc;

pub type WeightFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A supported intensity with its total-mass density and a weight function
/// `g` on the total mass (default 1).
#[derive(Clone)]
pub struct PkSpec {
    li: LevyIntensity,
    g: Option<WeightFn>,
}

impl PkSpec {
    pub fn new(li: LevyIntensity, g: Option<WeightFn>) -> Result<Self> {
        let op = "PkSpec::new";
        if !li.is_homogeneous() || !li.transform().is_identity() {
            return Err(Error::Unsupported {
                operation: op,
                what: "non-homogeneous intensity or non-identity transform".into(),
            });
        }
        match li.family() {
            Family::GeneralizedGamma { alpha, .. } if *alpha == 0.0 || *alpha == 0.5 => {}
            Family::Stable { alpha } if *alpha == 0.5 => {}
            other => {
                return Err(Error::Unsupported {
                    operation: op,
                    what: format!(
                        "{}: total-mass density only known for the gamma and alpha = 1/2 families",
                        other.name()
                    ),
                });
            }
        }
        let spec = Self { li, g };
        // the weighted law needs E[g(T)] finite
        let eg = spec.weight_normalizer()?;
        if !eg.is_finite() || !(eg > 0.0) {
            return Err(Error::numeric(op, "E[g(T)] is not positive and finite"));
        }
        Ok(spec)
    }

    fn params(&self) -> (f64, f64, f64) {
        let mass = self.li.base().total_mass();
        match self.li.family() {
            Family::GeneralizedGamma { alpha, b } => (*alpha, *b, mass),
            Family::Stable { alpha } => (*alpha, 0.0, mass),
            _ => unreachable!(),
        }
    }

    fn weight(&self, t: f64) -> f64 {
        match &self.g {
            None => 1.0,
            Some(g) => g(t),
        }
    }

    /// Levy density of the total-mass subordinator (base mass included).
    pub fn levy_density(&self, s: f64) -> f64 {
        let (alpha, b, mass) = self.params();
        if s <= 0.0 {
            return 0.0;
        }
        mass * (-(alpha + 1.0) * s.ln() - b * s - ln_gamma(1.0 - alpha)).exp()
    }

    /// Closed-form density of the total mass `T`.
    pub fn total_mass_density(&self, t: f64) -> f64 {
        let (alpha, b, mass) = self.params();
        if t <= 0.0 {
            return 0.0;
        }
        if alpha == 0.0 {
            // gamma process scaled by b: T ~ Gamma(mass, rate b)
            (mass * b.ln() + (mass - 1.0) * t.ln() - b * t - ln_gamma(mass)).exp()
        } else {
            // alpha = 1/2: tilted one-sided stable with c = 2 * mass / ...
            let c = 2.0 * mass / (2.0 * alpha).sqrt().powi(0); // alpha = 1/2
            let stable = c / (2.0 * std::f64::consts::PI.sqrt())
                * t.powf(-1.5)
                * (-c * c / (4.0 * t)).exp();
            stable * (-b * t + c * b.sqrt()).exp()
        }
    }

    /// `E[g(T)]`.
    pub fn weight_normalizer(&self) -> Result<f64> {
        if self.g.is_none() {
            return Ok(1.0);
        }
        let f = |t: f64| self.weight(t) * self.total_mass_density(t);
        quad::integrate_logaxis(&f, 1e-9)
    }
}

/// An EPPF value with the reported quasi-Monte Carlo error when the
/// high-dimensional path was taken.
#[derive(Debug, Clone, Copy)]
pub struct PkValue {
    pub value: f64,
    pub qmc_stderr: Option<f64>,
}

/// The Poisson-Kingman EPPF
/// `(1/E[g(T)]) integral g(t + sum s_j) f_T(t) prod_j s_j^{e_j} rho(ds_j)
/// / (t + sum s_j)^n`, by nested quadrature up to dimension 5 and
/// randomized quasi-Monte Carlo beyond.
pub fn pk_eppf(spec: &PkSpec, p: &Partition) -> Result<PkValue> {
    pk_eppf_sizes(spec, p.block_sizes(), p.n())
}

/// EPPF by block-size multiset (the value depends only on the sizes).
pub fn pk_eppf_sizes(spec: &PkSpec, sizes: &[u32], n: usize) -> Result<PkValue> {
    let op = "pk_eppf";
    if n == 0 || n > 8 {
        return Err(Error::SizeLimit {
            operation: op,
            what: "n",
            got: n,
            max: 8,
        });
    }
    let k = sizes.len();
    let eg = spec.weight_normalizer()?;
    if k + 1 <= 5 {
        let unnorm = nested_integral(spec, sizes, n)?;
        Ok(PkValue {
            value: unnorm / eg,
            qmc_stderr: None,
        })
    } else {
        let (value, stderr) = qmc_integral(spec, sizes, n)?;
        Ok(PkValue {
            value: value / eg,
            qmc_stderr: Some(stderr / eg),
        })
    }
}

/// Nested quadrature through the convolution recursion:
/// `W_0(x) = g(x)/x^n`, `W_j(x) = integral s^{e_j} rho(s) W_{j-1}(x+s) ds`,
/// answer `integral f_T(t) W_k(t) dt`.
fn nested_integral(spec: &PkSpec, sizes: &[u32], n: usize) -> Result<f64> {
    let w0 = {
        let spec = spec.clone();
        let nf = n as f64;
        move |x: f64| spec.weight(x) * x.powf(-nf)
    };
    if sizes.len() == 1 {
        // two-dimensional case: direct nesting, no tables
        let e = f64::from(sizes[0]);
        let inner = |t: f64| {
            let f = |s: f64| s.powf(e) * spec.levy_density(s) * w0(t + s);
            quad::integrate_pos(&f, 1e-8).unwrap_or(f64::NAN)
        };
        let outer = |t: f64| spec.total_mass_density(t) * inner(t);
        let v = quad::integrate_logaxis(&outer, 1e-7)?;
        if v.is_nan() {
            return Err(Error::numeric("pk_eppf", "inner quadrature failed"));
        }
        return Ok(v);
    }
    // tabulate the convolution levels on a log grid
    let mut level: Box<dyn Fn(f64) -> f64 + Sync> = Box::new(w0);
    for &e in sizes {
        let table = WTable::build(spec, e, level.as_ref())?;
        level = Box::new(move |x: f64| table.eval(x));
    }
    let outer = |t: f64| spec.total_mass_density(t) * level(t);
    quad::integrate_logaxis(&outer, 1e-8)
}

/// Log-log table of one convolution level with local quadratic
/// interpolation and power-law extrapolation at both ends.
struct WTable {
    log_x: Vec<f64>,
    log_w: Vec<f64>,
}

impl WTable {
    fn build(spec: &PkSpec, e: u32, prev: &(dyn Fn(f64) -> f64 + Sync)) -> Result<Self> {
        const POINTS: usize = 4000;
        let lo = (1e-9f64).ln();
        let hi = (1e5f64).ln();
        let ef = f64::from(e);
        let log_x: Vec<f64> = (0..POINTS)
            .map(|i| lo + (hi - lo) * i as f64 / (POINTS - 1) as f64)
            .collect();
        let log_w = crate::exec::map_indexed(POINTS, |i| {
            let x = log_x[i].exp();
            let f = |s: f64| s.powf(ef) * spec.levy_density(s) * prev(x + s);
            let v = quad::integrate_pos(&f, 1e-7).unwrap_or(f64::NAN);
            v.max(1e-300).ln()
        });
        if log_w.iter().any(|v| v.is_nan()) {
            return Err(Error::numeric("pk_eppf", "convolution level failed"));
        }
        Ok(Self { log_x, log_w })
    }

    fn eval(&self, x: f64) -> f64 {
        let lx = x.max(1e-300).ln();
        let m = self.log_x.len();
        let step = (self.log_x[m - 1] - self.log_x[0]) / (m - 1) as f64;
        let pos = (lx - self.log_x[0]) / step;
        if pos <= 1.0 {
            // power-law extension using the first two nodes
            let slope = (self.log_w[1] - self.log_w[0]) / step;
            return (self.log_w[0] + slope * (lx - self.log_x[0])).exp();
        }
        if pos >= (m - 2) as f64 {
            let slope = (self.log_w[m - 1] - self.log_w[m - 2]) / step;
            return (self.log_w[m - 1] + slope * (lx - self.log_x[m - 1])).exp();
        }
        // local quadratic through the three nearest nodes
        let i = pos.round() as usize;
        let d = (lx - self.log_x[i]) / step;
        let (ym, y0, yp) = (self.log_w[i - 1], self.log_w[i], self.log_w[i + 1]);
        let value = y0 + 0.5 * d * (yp - ym) + 0.5 * d * d * (yp - 2.0 * y0 + ym);
        value.exp()
    }
}

/// Randomized quasi-Monte Carlo for block counts `k >= 5`: shifted Halton
/// points on the transformed cube, error from 8 independent shifts.
fn qmc_integral(spec: &PkSpec, sizes: &[u32], n: usize) -> Result<(f64, f64)> {
    use rand::{Rng, SeedableRng};
    let dim = sizes.len() + 1;
    let shifts = 8;
    let points_per_shift = 1usize << 13; // 2^16 nodes in total
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
    let mut estimates = Vec::with_capacity(shifts);
    // map u in (0,1) to s in (0, inf) with square-law behavior at 0 so the
    // s^{e-alpha-1} factor stays integrable on the cube
    let to_pos = |u: f64| {
        let r = u / (1.0 - u);
        r * r
    };
    let jac = |u: f64| 2.0 * u / (1.0 - u).powi(3);
    for _ in 0..shifts {
        let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let seq = HaltonShifted::new(shift);
        let mut acc = KahanSum::new();
        let mut point = vec![0.0f64; dim];
        for i in 0..points_per_shift {
            seq.point(i as u64, &mut point);
            let t = to_pos(point[0]);
            let mut total = t;
            let mut weight = spec.total_mass_density(t) * jac(point[0]);
            for (j, &e) in sizes.iter().enumerate() {
                let s = to_pos(point[j + 1]);
                total += s;
                weight *= s.powf(f64::from(e)) * spec.levy_density(s) * jac(point[j + 1]);
            }
            let value = weight * spec.weight(total) * total.powf(-(n as f64));
            if value.is_finite() {
                acc.add(value);
            }
        }
        estimates.push(acc.value() / points_per_shift as f64);
    }
    let (mean, stderr) = stats::mean_stderr(&estimates);
    Ok((mean, stderr))
}

/// Structural description of the normalized-measure posterior: the joint
/// unnormalized density of the size-biased jumps and the remaining total,
/// the ratio statistic, and a materialized grid for one block.
pub struct PkPosteriorStructure {
    spec: PkSpec,
    sizes: Vec<u32>,
    n: usize,
}

impl PkPosteriorStructure {
    pub fn new(spec: &PkSpec, p: &Partition) -> Self {
        Self {
            spec: spec.clone(),
            sizes: p.block_sizes().to_vec(),
            n: p.n(),
        }
    }

    /// Unnormalized joint density of `(J_1..J_k, T_remaining)`:
    /// `g(t + sum s_j) f_T(t) prod_j s_j^{e_j} rho(s_j) / (t + sum s_j)^n`.
    pub fn density(&self, jumps: &[f64], t_rem: f64) -> Result<f64> {
        if jumps.len() != self.sizes.len() {
            return Err(Error::numeric(
                "pk_posterior_structure",
                "one jump per block required",
            ));
        }
        if t_rem <= 0.0 {
            return Ok(0.0);
        }
        let total = t_rem + jumps.iter().sum::<f64>();
        let mut v = self.spec.weight(total) * self.spec.total_mass_density(t_rem)
            / total.powf(self.n as f64);
        for (j, &s) in jumps.iter().enumerate() {
            v *= s.powf(f64::from(self.sizes[j])) * self.spec.levy_density(s);
        }
        Ok(v)
    }

    /// `R = T_remaining / (T_remaining + sum h(J_j))`, always in (0, 1).
    pub fn r_statistic(&self, jumps: &[f64], t_rem: f64) -> f64 {
        t_rem / (t_rem + jumps.iter().sum::<f64>())
    }

    /// For a single block: the density on a `(jump, t)` grid.
    pub fn structural_grid(
        &self,
        s_grid: &[f64],
        t_grid: &[f64],
    ) -> Result<Vec<Vec<f64>>> {
        if self.sizes.len() != 1 {
            return Err(Error::Unsupported {
                operation: "structural_grid",
                what: "grids materialized only for a single block".into(),
            });
        }
        let mut out = Vec::with_capacity(s_grid.len());
        for &s in s_grid {
            let mut row = Vec::with_capacity(t_grid.len());
            for &t in t_grid {
                row.push(self.density(&[s], t)?);
            }
            out.push(row);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BaseMeasure;
    use crate::eppf::{self, EppfSpec};
    use crate::partition::enumerate_partitions;
    use approx::assert_relative_eq;

    fn gamma_pk(mass: f64) -> PkSpec {
        let li =
            LevyIntensity::gamma_process(BaseMeasure::uniform(0.0, 1.0, mass).unwrap()).unwrap();
        PkSpec::new(li, None).unwrap()
    }

    fn ig_pk(b: f64, mass: f64) -> PkSpec {
        let li =
            LevyIntensity::generalized_gamma(0.5, b, BaseMeasure::uniform(0.0, 1.0, mass).unwrap())
                .unwrap();
        PkSpec::new(li, None).unwrap()
    }

    #[test]
    fn total_mass_density_normalizes() {
        for spec in [gamma_pk(1.0), gamma_pk(2.5), ig_pk(1.0, 1.0)] {
            let f = |t: f64| spec.total_mass_density(t);
            let total = quad::integrate_logaxis(&f, 1e-10).unwrap();
            assert_relative_eq!(total, 1.0, epsilon = 1e-8);
        }
        // pure stable: t^{-3/2} tail, so add the analytic mass beyond the
        // quadrature window at 1e14
        let spec = ig_pk(0.0, 0.7);
        let f = |t: f64| spec.total_mass_density(t);
        let total = quad::integrate_logaxis(&f, 1e-10).unwrap();
        let c = 2.0 * 0.7;
        let tail = c / (std::f64::consts::PI.sqrt() * 1e7);
        assert_relative_eq!(total + tail, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn total_mass_density_matches_laplace_transform() {
        // integral e^{-vt} f_T(t) dt must equal exp(-psi(v))
        for spec in [gamma_pk(1.5), ig_pk(1.0, 1.0)] {
            for &v in &[0.3, 1.0, 2.7] {
                let f = |t: f64| (-v * t).exp() * spec.total_mass_density(t);
                let direct = quad::integrate_logaxis(&f, 1e-10).unwrap();
                let expect = spec.li.total_mass_laplace(v).unwrap();
                assert_relative_eq!(direct, expect, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn gamma_pair_probability() {
        // theta = 1, n = 2, single block: Ewens gives 1/2
        let spec = gamma_pk(1.0);
        let p = Partition::from_assignment(vec![0, 0]).unwrap();
        let v = pk_eppf(&spec, &p).unwrap();
        assert!(v.qmc_stderr.is_none());
        assert_relative_eq!(v.value, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn gamma_eppf_matches_ewens_n3() {
        let theta = 1.0;
        let spec = gamma_pk(theta);
        let ewens = EppfSpec::ewens(theta).unwrap();
        let mut total = 0.0;
        for p in enumerate_partitions(3).unwrap() {
            let v = pk_eppf(&spec, &p).unwrap().value;
            assert_relative_eq!(v, eppf::eppf_eval(&ewens, &p), epsilon = 1e-5);
            total += v;
        }
        assert_relative_eq!(total, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn inverse_gaussian_matches_mixing_route() {
        // the alpha = 1/2, b = 1 EPPF from the total-mass representation
        // must agree with the scaling-operation quadrature
        let spec = ig_pk(1.0, 1.0);
        let sspec = crate::scaled::ScaledLawSpec::new(
            LevyIntensity::generalized_gamma(
                0.5,
                1.0,
                BaseMeasure::uniform(0.0, 1.0, 1.0).unwrap(),
            )
            .unwrap(),
            0.0,
            2,
        )
        .unwrap();
        for p in enumerate_partitions(2).unwrap() {
            let a = pk_eppf(&spec, &p).unwrap().value;
            let b = crate::scaled::eppf_via_mixing(&sspec, &p).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-5);
        }
    }

    #[test]
    fn weighted_stable_law_gives_pitman_yor() {
        // g(t) = t^{-theta} on the stable family reproduces PD(1/2, theta)
        let theta = 0.5;
        let g: WeightFn = Arc::new(move |t: f64| t.powf(-theta));
        let li = LevyIntensity::stable(0.5, BaseMeasure::uniform(0.0, 1.0, 1.0).unwrap())
            .unwrap();
        let spec = PkSpec::new(li, Some(g)).unwrap();
        let pd = EppfSpec::two_param(0.5, theta).unwrap();
        for n in 1..=3usize {
            for p in enumerate_partitions(n).unwrap() {
                let v = pk_eppf(&spec, &p).unwrap().value;
                assert_relative_eq!(v, eppf::eppf_eval(&pd, &p), epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn qmc_path_for_many_blocks() {
        // all-singletons partition of n = 5: dimension 6 forces the
        // quasi-Monte Carlo path; Ewens(theta) gives the exact answer
        let theta = 1.0;
        let spec = gamma_pk(theta);
        let p = Partition::from_assignment(vec![0, 1, 2, 3, 4]).unwrap();
        let v = pk_eppf(&spec, &p).unwrap();
        let exact = eppf::eppf_eval(&EppfSpec::ewens(theta).unwrap(), &p);
        let err = v.qmc_stderr.expect("qmc path must report an error");
        assert!(
            (v.value - exact).abs() < (4.0 * err).max(2e-3),
            "qmc {} vs exact {exact} (err {err})",
            v.value
        );
    }

    #[test]
    fn structural_density_factorizes_for_gamma() {
        // n = 1, g = 1: density(s, t) = [s rho(s)] f_T(t) / (t + s)
        let spec = gamma_pk(1.0);
        let p = Partition::singleton();
        let st = PkPosteriorStructure::new(&spec, &p);
        for &s in &[0.2, 0.8, 2.0] {
            for &t in &[0.3, 1.0, 2.5] {
                let got = st.density(&[s], t).unwrap();
                let expect = (-s).exp() * spec.total_mass_density(t) / (t + s);
                assert_relative_eq!(got, expect, max_relative = 1e-6);
                let r = st.r_statistic(&[s], t);
                assert!(r > 0.0 && r < 1.0);
            }
        }
    }

    #[test]
    fn structural_density_integrates_to_eppf() {
        let spec = gamma_pk(1.0);
        let p = Partition::singleton();
        let st = PkPosteriorStructure::new(&spec, &p);
        let outer = |t: f64| {
            let inner = |s: f64| st.density(&[s], t).unwrap();
            quad::integrate_pos(&inner, 1e-8).unwrap()
        };
        let total = quad::integrate_logaxis(&outer, 1e-7).unwrap();
        let eppf_val = pk_eppf(&spec, &p).unwrap().value * spec.weight_normalizer().unwrap();
        assert_relative_eq!(total, eppf_val, epsilon = 1e-5);
        assert_relative_eq!(total, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn unsupported_family_refused() {
        let li = LevyIntensity::generalized_gamma(
            0.3,
            1.0,
            BaseMeasure::uniform(0.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            PkSpec::new(li, None),
            Err(Error::Unsupported { .. })
        ));
    }

    #[test]
    fn exchangeable_in_block_sizes() {
        let spec = gamma_pk(1.3);
        let a = pk_eppf_sizes(&spec, &[2, 1], 3).unwrap().value;
        let b = pk_eppf_sizes(&spec, &[1, 2], 3).unwrap().value;
        assert_relative_eq!(a, b, max_relative = 1e-9);
    }
}
