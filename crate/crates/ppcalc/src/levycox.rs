//! Posterior analysis of kernel-mixed intensity and hazard models
//! `lambda(t|mu) = integral K(t|v) mu(dv)` under the multiplicative
//! intensity likelihood: marginal likelihood, posterior partition law,
//! posterior intensity expectations, and the sequential-importance posterior
//! simulation scheme.
//!
//! The data tilt `e^{-f_K(y) s}` enters as a location-dependent linear tilt
//! on the prior intensity. The continuous posterior part is sampled exactly
//! by thinning a dominating homogeneous draw with acceptance
//! `e^{-f_K(y) s}`, which is valid for any bounded nonnegative `f_K`.


use crate::error::{Error, Result};
use crate::exec;
use crate::levy::{
    AtomicMeasureDraw, CFunction, LevyIntensity, SeedRecord, TiltTerm, Truncation,
};
use crate::numeric::grid::InverseCdfGrid;
use crate::numeric::kahan::KahanSum;
use crate::numeric::quad;
use crate::partition::{check_enum_size, enumerate_partitions, Partition};
use crate::wcr::{self, PhiSeating, SeatingWeights, WeightedDraw};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erf;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

/// Right-continuous step function given by breakpoints and values:
/// `value(s) = values[i]` on `[breaks[i], breaks[i+1])`, zero outside.
#[derive(Debug, Clone)]
pub struct StepFn {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFn {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let op = "StepFn::new";
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::numeric(op, "need k+1 breakpoints for k values"));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::numeric(op, "breakpoints must increase"));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::numeric(op, "values must be nonnegative"));
        }
        Ok(Self { breaks, values })
    }

    /// Constant value over `[lo, hi)`.
    pub fn constant(value: f64, lo: f64, hi: f64) -> Self {
        Self {
            breaks: vec![lo, hi],
            values: vec![value],
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        if s < self.breaks[0] || s >= *self.breaks.last().unwrap() {
            return 0.0;
        }
        let idx = match self.breaks.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(self.values.len() - 1),
            Err(i) => i - 1,
        };
        self.values[idx]
    }

    fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.values.len()).map(|i| (self.breaks[i], self.breaks[i + 1], self.values[i]))
    }
}

/// Mixing kernels on time x location.
#[derive(Debug, Clone, Copy)]
pub enum Kernel {
    /// `K(x|y) = 1` when `y <= x < y + width`.
    UniformWindow { width: f64 },
    /// `K(x|y) = exp(-rate (x - y))` when `x >= y`.
    OneSidedExp { rate: f64 },
    /// Gaussian density kernel with the given bandwidth.
    Gaussian { sigma: f64 },
    /// Symmetric set indicator `K(x|y) = 1` when `|x - y| <= half_width`.
    Indicator { half_width: f64 },
}

impl Kernel {
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        match self {
            Kernel::UniformWindow { width } => {
                if y <= x && x < y + width {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::OneSidedExp { rate } => {
                if x >= y {
                    (-rate * (x - y)).exp()
                } else {
                    0.0
                }
            }
            Kernel::Gaussian { sigma } => {
                let z = (x - y) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            Kernel::Indicator { half_width } => {
                if (x - y).abs() <= *half_width {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Support of `y -> K(x|y)` (None means the whole line). Keeping the
    /// support tight also keeps block integrands smooth inside the bounds.
    fn support_in_y(&self, x: f64) -> Option<(f64, f64)> {
        match self {
            Kernel::UniformWindow { width } => Some((x - width, x)),
            Kernel::OneSidedExp { .. } => Some((f64::NEG_INFINITY, x)),
            Kernel::Gaussian { .. } => None,
            Kernel::Indicator { half_width } => Some((x - half_width, x + half_width)),
        }
    }

    /// `f_K(y) = integral Y(s) K(s|y) tau(ds)` over the observation window,
    /// in closed form per step segment of the at-risk function.
    pub fn integrate_x(&self, at_risk: &StepFn, window: (f64, f64), y: f64) -> f64 {
        let (wlo, whi) = window;
        let mut total = 0.0;
        for (a, b, v) in at_risk.segments() {
            if v == 0.0 {
                continue;
            }
            let lo = a.max(wlo);
            let hi = b.min(whi);
            if hi <= lo {
                continue;
            }
            total += v
                * match self {
                    Kernel::UniformWindow { width } => {
                        let l = lo.max(y);
                        let h = hi.min(y + width);
                        (h - l).max(0.0)
                    }
                    Kernel::OneSidedExp { rate } => {
                        let l = lo.max(y);
                        if hi <= l {
                            0.0
                        } else {
                            ((-rate * (l - y)).exp() - (-rate * (hi - y)).exp()) / rate
                        }
                    }
                    Kernel::Gaussian { sigma } => {
                        let phi = |z: f64| 0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2));
                        phi((hi - y) / sigma) - phi((lo - y) / sigma)
                    }
                    Kernel::Indicator { half_width } => {
                        let l = lo.max(y - half_width);
                        let h = hi.min(y + half_width);
                        (h - l).max(0.0)
                    }
                };
        }
        total
    }
}

/// A kernel-mixed intensity model: kernel, prior completely random measure,
/// at-risk process and observation window.
#[derive(Clone)]
pub struct IntensityModel {
    pub kernel: Kernel,
    pub prior: LevyIntensity,
    pub at_risk: StepFn,
    pub window: (f64, f64),
}

impl IntensityModel {
    pub fn new(
        kernel: Kernel,
        prior: LevyIntensity,
        at_risk: StepFn,
        window: (f64, f64),
    ) -> Result<Self> {
        if !(window.1 > window.0) {
            return Err(Error::numeric("IntensityModel::new", "empty window"));
        }
        Ok(Self {
            kernel,
            prior,
            at_risk,
            window,
        })
    }

    /// The data exponent `f_K(y)`.
    pub fn kernel_exponent(&self, y: f64) -> f64 {
        self.kernel.integrate_x(&self.at_risk, self.window, y)
    }

    /// Prior tilted by `e^{-f_K(y) s}`.
    pub fn tilted_prior(&self) -> Result<LevyIntensity> {
        let kernel = self.kernel;
        let at_risk = self.at_risk.clone();
        let window = self.window;
        let f_k = move |y: f64| kernel.integrate_x(&at_risk, window, y);
        self.prior
            .tilt(TiltTerm::LinearJump(CFunction::Varying(Arc::new(f_k))))
    }

    /// Prepare for posterior computations with the given observations;
    /// verifies `kappa_n(e^{-f_K} rho | y)` is finite up to the data size.
    pub fn fit(&self, xs: &[f64]) -> Result<FittedModel> {
        let op = "IntensityModel::fit";
        if xs.is_empty() {
            return Err(Error::EmptyInput {
                operation: op,
                what: "observations",
            });
        }
        let tilted = self.tilted_prior()?;
        let (lo, hi) = self.prior.base().support();
        for i in 0..5 {
            let y = lo + (hi - lo) * (0.1 + 0.2 * i as f64);
            tilted.kappa(xs.len() as u32, y)?;
        }
        Ok(FittedModel {
            model: self.clone(),
            tilted,
            xs: xs.to_vec(),
            phi_cache: RwLock::new(HashMap::new()),
            grid_cache: RwLock::new(HashMap::new()),
        })
    }
}

/// An intensity model bound to a data set, with caches for block integrals
/// and block-location sampling grids.
pub struct FittedModel {
    model: IntensityModel,
    tilted: LevyIntensity,
    xs: Vec<f64>,
    phi_cache: RwLock<HashMap<Vec<usize>, f64>>,
    grid_cache: RwLock<HashMap<Vec<usize>, Arc<InverseCdfGrid>>>,
}

impl FittedModel {
    pub fn observations(&self) -> &[f64] {
        &self.xs
    }

    pub fn model(&self) -> &IntensityModel {
        &self.model
    }

    pub fn tilted(&self) -> &LevyIntensity {
        &self.tilted
    }

    /// Integration bounds for a block: intersection of the kernel supports
    /// with the base support.
    fn block_bounds(&self, items: &[usize]) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = self.model.prior.base().support();
        for &i in items {
            if let Some((a, b)) = self.model.kernel.support_in_y(self.xs[i]) {
                lo = lo.max(a);
                hi = hi.min(b);
            }
        }
        if hi > lo {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// Unnormalized posterior block density at `y`:
    /// `prod_{i in C} K(x_i|y) kappa_{|C|}(e^{-f_K} rho|y) eta(y)`.
    fn block_density(&self, items: &[usize], y: f64) -> f64 {
        let mut v = self.model.prior.base().density(y);
        if v == 0.0 {
            return 0.0;
        }
        for &i in items {
            v *= self.model.kernel.evaluate(self.xs[i], y);
            if v == 0.0 {
                return 0.0;
            }
        }
        v * self.tilted.kappa(items.len() as u32, y).unwrap_or(f64::NAN)
    }

    /// Cached block integral `phi(C)`.
    pub fn phi(&self, items: &[usize]) -> Result<f64> {
        let mut key = items.to_vec();
        key.sort_unstable();
        if let Some(v) = self.phi_cache.read().expect("phi cache").get(&key) {
            return Ok(*v);
        }
        let v = match self.block_bounds(&key) {
            None => 0.0,
            Some((lo, hi)) => {
                let f = |y: f64| self.block_density(&key, y);
                let v = quad::integrate(&f, lo, hi, 1e-10)?;
                if v.is_nan() {
                    return Err(Error::Divergence {
                        operation: "FittedModel::phi",
                        family: self.model.prior.family_name(),
                    });
                }
                v
            }
        };
        self.phi_cache.write().expect("phi cache").insert(key, v);
        Ok(v)
    }

    /// The seating-weight view for the sequential importance sampler.
    pub fn seating(&self) -> PhiSeating<impl Fn(&[usize]) -> f64 + Sync + Send + '_> {
        PhiSeating::new(move |items: &[usize]| self.phi(items).unwrap_or(f64::NAN))
    }

    /// Cached inverse-CDF grid for the posterior block-location law.
    fn location_grid(&self, items: &[usize]) -> Result<Arc<InverseCdfGrid>> {
        let mut key = items.to_vec();
        key.sort_unstable();
        if let Some(g) = self.grid_cache.read().expect("grid cache").get(&key) {
            return Ok(g.clone());
        }
        let (lo, hi) = self
            .block_bounds(&key)
            .ok_or_else(|| Error::numeric("location_grid", "block has empty kernel support"))?;
        let f = |y: f64| self.block_density(&key, y);
        let grid = Arc::new(InverseCdfGrid::build(&f, lo, hi, 1e-6)?);
        self.grid_cache
            .write()
            .expect("grid cache")
            .insert(key, grid.clone());
        Ok(grid)
    }
}

/// Exact marginal likelihood `L_mu(f_K) sum_p prod_j phi(C_j)` by partition
/// enumeration; data size capped by the enumeration ceiling.
pub fn marginal_likelihood(fitted: &FittedModel) -> Result<f64> {
    let n = fitted.xs.len();
    check_enum_size("marginal_likelihood", n, 10)?;
    let f_k = |y: f64| fitted.model.kernel_exponent(y);
    let log_lap = fitted.model.prior.laplace_exponent(&f_k)?;
    let mut total = KahanSum::new();
    for p in enumerate_partitions(n)? {
        let mut prod = 1.0;
        for block in p.blocks() {
            prod *= fitted.phi(&block)?;
        }
        total.add(prod);
    }
    Ok((-log_lap).exp() * total.value())
}

/// Importance-sampling estimate of the marginal likelihood with its
/// standard error (any data size).
pub fn marginal_likelihood_wcr(
    fitted: &FittedModel,
    draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = fitted.xs.len();
    let seating = fitted.seating();
    let batch = wcr::sample_batch(&seating, n, draws, seed)?;
    let est = wcr::importance_estimate(&batch, &|_| 1.0)?;
    let f_k = |y: f64| fitted.model.kernel_exponent(y);
    let lap = (-fitted.model.prior.laplace_exponent(&f_k)?).exp();
    Ok((lap * est.unnormalized_mean, lap * est.unnormalized_stderr))
}

/// Posterior partition probability `pi(p|X)`, normalized by enumeration.
pub fn posterior_partition_density(fitted: &FittedModel, p: &Partition) -> Result<f64> {
    let n = fitted.xs.len();
    check_enum_size("posterior_partition_density", n, 10)?;
    if p.n() != n {
        return Err(Error::numeric(
            "posterior_partition_density",
            "partition size must match the data",
        ));
    }
    let mut norm = KahanSum::new();
    let mut target = 0.0;
    for q in enumerate_partitions(n)? {
        let mut prod = 1.0;
        for block in q.blocks() {
            prod *= fitted.phi(&block)?;
        }
        norm.add(prod);
        if q == *p {
            target = prod;
        }
    }
    let z = norm.value();
    if !(z > 0.0) {
        return Err(Error::numeric(
            "posterior_partition_density",
            "all partitions carry zero likelihood (degenerate kernel)",
        ));
    }
    Ok(target / z)
}

/// Posterior intensity expectation given latent block data:
/// `integral K(t|v) kappa_1 eta(dv) + sum_j K(t|Y*_j)
/// kappa_{1+e_j}/kappa_{e_j}`.
pub fn posterior_intensity_mean_given_latent(
    fitted: &FittedModel,
    p: &Partition,
    ystars: &[f64],
    t: f64,
) -> Result<f64> {
    if ystars.len() != p.n_blocks() {
        return Err(Error::numeric(
            "posterior_intensity_mean",
            "one location per block required",
        ));
    }
    let mut total = prior_intensity_mean(fitted, t)?;
    for (j, &e) in p.block_sizes().iter().enumerate() {
        let y = ystars[j];
        let k1 = fitted.tilted.kappa(e + 1, y)?;
        let k0 = fitted.tilted.kappa(e, y)?;
        total += fitted.model.kernel.evaluate(t, y) * k1 / k0;
    }
    Ok(total)
}

/// The continuous-part (prior-tilted) intensity expectation
/// `integral K(t|v) kappa_1(e^{-f_K} rho|v) eta(dv)`.
pub fn prior_intensity_mean(fitted: &FittedModel, t: f64) -> Result<f64> {
    let (mut lo, mut hi) = fitted.model.prior.base().support();
    if let Some((a, b)) = fitted.model.kernel.support_in_y(t) {
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if hi <= lo {
        return Ok(0.0);
    }
    let f = |y: f64| {
        fitted.model.kernel.evaluate(t, y)
            * fitted.tilted.kappa(1, y).unwrap_or(f64::NAN)
            * fitted.model.prior.base().density(y)
    };
    let v = quad::integrate(&f, lo, hi, 1e-9)?;
    if v.is_nan() {
        return Err(Error::Divergence {
            operation: "prior_intensity_mean",
            family: fitted.model.prior.family_name(),
        });
    }
    Ok(v)
}

/// Exact posterior intensity expectation given the data, averaging the
/// latent-data expression over the posterior partition law and the block
/// location posteriors.
pub fn posterior_intensity_mean(fitted: &FittedModel, t: f64) -> Result<f64> {
    let block_part =
        posterior_block_average(fitted, &|y| fitted.model.kernel.evaluate(t, y))?;
    Ok(block_part + prior_intensity_mean(fitted, t)?)
}

/// Exact posterior mean of the total mass `E[T | X]`.
pub fn posterior_total_mass_mean(fitted: &FittedModel) -> Result<f64> {
    let k1 = fitted.tilted.kappa_total(1, None)?;
    Ok(posterior_block_average(fitted, &|_| 1.0)? + k1)
}

/// `sum_p pi(p|X) sum_j integral w(v) [kappa_{1+e_j}/kappa_{e_j}](v)
/// pi(dv|C_j)` for a weight function `w` of the block location.
fn posterior_block_average(fitted: &FittedModel, w: &dyn Fn(f64) -> f64) -> Result<f64> {
    let n = fitted.xs.len();
    check_enum_size("posterior_intensity_mean", n, 10)?;
    let mut norm = KahanSum::new();
    let mut acc = KahanSum::new();
    for p in enumerate_partitions(n)? {
        let blocks = p.blocks();
        let mut prod = 1.0;
        for block in &blocks {
            prod *= fitted.phi(block)?;
        }
        if prod == 0.0 {
            norm.add(0.0);
            continue;
        }
        norm.add(prod);
        let mut inner = 0.0;
        for block in &blocks {
            let phi_c = fitted.phi(block)?;
            let (lo, hi) = match fitted.block_bounds(block) {
                Some(b) => b,
                None => continue,
            };
            let e = block.len() as u32;
            let f = |y: f64| {
                let dens = fitted.block_density(block, y);
                if dens == 0.0 {
                    return 0.0;
                }
                let ratio = fitted.tilted.kappa(e + 1, y).unwrap_or(f64::NAN)
                    / fitted.tilted.kappa(e, y).unwrap_or(f64::NAN);
                w(y) * ratio * dens / phi_c
            };
            inner += quad::integrate(&f, lo, hi, 1e-9)?;
        }
        acc.add(prod * inner);
    }
    let z = norm.value();
    if !(z > 0.0) {
        return Err(Error::numeric(
            "posterior_intensity_mean",
            "zero marginal likelihood",
        ));
    }
    Ok(acc.value() / z)
}

/// One draw from the approximate posterior of `mu | X`.
#[derive(Debug, Clone)]
pub struct PosteriorDraw {
    pub partition: Partition,
    pub locations: Vec<f64>,
    pub jumps: Vec<f64>,
    pub continuous: AtomicMeasureDraw,
    pub log_importance: f64,
}

impl PosteriorDraw {
    /// The sampled intensity `lambda(t | mu)` at time `t`.
    pub fn intensity_at(&self, kernel: &Kernel, t: f64) -> f64 {
        let mut total = 0.0;
        for (j, &jmp) in self.jumps.iter().enumerate() {
            total += kernel.evaluate(t, self.locations[j]) * jmp;
        }
        for &(w, y) in &self.continuous.atoms {
            total += kernel.evaluate(t, y) * w;
        }
        total
    }

    pub fn total_mass(&self) -> f64 {
        self.jumps.iter().sum::<f64>() + self.continuous.total_mass()
    }
}

/// Result of the posterior simulation: per-draw failures are recorded, not
/// fatal.
pub struct FitResult {
    pub draws: Vec<PosteriorDraw>,
    pub failures: Vec<(usize, Error)>,
}

/// Posterior simulation: weighted seating, block locations by grid
/// inverse-CDF, exact conditional jumps, and a thinned dominating draw for
/// the continuous part. Deterministic given the seed.
pub fn fit_posterior(
    fitted: &FittedModel,
    draws: usize,
    eps: f64,
    seed: u64,
) -> Result<FitResult> {
    fit_posterior_inner(fitted, draws, eps, seed, true)
}

/// Sequential twin of [`fit_posterior`] for the bench suite.
pub fn fit_posterior_seq(
    fitted: &FittedModel,
    draws: usize,
    eps: f64,
    seed: u64,
) -> Result<FitResult> {
    fit_posterior_inner(fitted, draws, eps, seed, false)
}

fn fit_posterior_inner(
    fitted: &FittedModel,
    draws: usize,
    eps: f64,
    seed: u64,
    parallel: bool,
) -> Result<FitResult> {
    let seating = fitted.seating();
    let run = |i: usize| -> Result<PosteriorDraw> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        single_posterior_draw(fitted, &seating, eps, &mut rng, seed, i as u64)
    };
    let results: Vec<Result<PosteriorDraw>> = if parallel {
        exec::map_indexed(draws, run)
    } else {
        exec::map_indexed_seq(draws, run)
    };
    let mut out = Vec::with_capacity(draws);
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(d) => out.push(d),
            Err(e) => failures.push((i, e)),
        }
    }
    Ok(FitResult {
        draws: out,
        failures,
    })
}

fn single_posterior_draw<S: SeatingWeights, R: Rng + ?Sized>(
    fitted: &FittedModel,
    seating: &S,
    eps: f64,
    rng: &mut R,
    seed: u64,
    stream: u64,
) -> Result<PosteriorDraw> {
    let n = fitted.xs.len();
    let WeightedDraw {
        partition,
        log_importance,
        ..
    } = wcr::wcr_sample(seating, n, rng)?;
    // block locations from the grid inverse-CDF
    let blocks = partition.blocks();
    let mut locations = Vec::with_capacity(blocks.len());
    for block in &blocks {
        let grid = fitted.location_grid(block)?;
        locations.push(grid.sample(rng.random::<f64>()));
    }
    // conditional jumps at the sampled locations
    let mut jumps = Vec::with_capacity(blocks.len());
    for (j, block) in blocks.iter().enumerate() {
        jumps.push(
            fitted
                .tilted
                .jump_sample(block.len() as u32, locations[j], rng)?,
        );
    }
    // continuous part: dominating homogeneous draw thinned by e^{-f_K(y) s}
    let mass = fitted.model.prior.base().total_mass();
    let dominating = fitted.model.prior.inverse_levy_atoms(
        mass,
        Truncation::ExpectedResidual(eps),
        rng,
        SeedRecord { seed, stream },
    )?;
    let mut atoms = Vec::with_capacity(dominating.atoms.len());
    for &(w, y) in &dominating.atoms {
        let accept = (-fitted.model.kernel_exponent(y) * w).exp();
        if rng.random::<f64>() < accept {
            atoms.push((w, y));
        }
    }
    Ok(PosteriorDraw {
        partition,
        locations,
        jumps,
        continuous: AtomicMeasureDraw {
            atoms,
            truncation_bound: dominating.truncation_bound,
            seed_record: dominating.seed_record,
        },
        log_importance,
    })
}

/// Self-normalized posterior expectation of a functional of the draw.
pub fn weighted_posterior_mean(
    draws: &[PosteriorDraw],
    f: &dyn Fn(&PosteriorDraw) -> f64,
) -> Result<(f64, f64)> {
    if draws.is_empty() {
        return Err(Error::EmptyInput {
            operation: "weighted_posterior_mean",
            what: "draws",
        });
    }
    let max_log = draws
        .iter()
        .map(|d| d.log_importance)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum_w = KahanSum::new();
    let mut sum_wt = KahanSum::new();
    let scaled: Vec<(f64, f64)> = draws
        .iter()
        .map(|d| ((d.log_importance - max_log).exp(), f(d)))
        .collect();
    for &(w, t) in &scaled {
        sum_w.add(w);
        sum_wt.add(w * t);
    }
    let est = sum_wt.value() / sum_w.value();
    let mut var = KahanSum::new();
    for &(w, t) in &scaled {
        let d = w * (t - est);
        var.add(d * d);
    }
    Ok((est, var.value().sqrt() / sum_w.value()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BaseMeasure;
    use approx::assert_relative_eq;

    fn gamma_prior(mass: f64) -> LevyIntensity {
        LevyIntensity::gamma_process(BaseMeasure::uniform(0.0, 2.0, mass).unwrap()).unwrap()
    }

    fn toy_model() -> IntensityModel {
        IntensityModel::new(
            Kernel::UniformWindow { width: 1.0 },
            gamma_prior(1.0),
            StepFn::constant(1.0, 0.0, 3.0),
            (0.0, 3.0),
        )
        .unwrap()
    }

    #[test]
    fn kernel_exponent_examples() {
        let model = toy_model();
        // Y = 1 on a window containing [y, y+1]: f_K = 1
        assert_relative_eq!(model.kernel_exponent(0.5), 1.0, max_relative = 1e-12);
        // zero at-risk
        let zero = IntensityModel::new(
            Kernel::UniformWindow { width: 1.0 },
            gamma_prior(1.0),
            StepFn::constant(0.0, 0.0, 3.0),
            (0.0, 3.0),
        )
        .unwrap();
        assert_eq!(zero.kernel_exponent(0.5), 0.0);
        // step at-risk Y = 2 on [0, 1), kernel [0.5, 1.5): 2 * 0.5
        let step = IntensityModel::new(
            Kernel::UniformWindow { width: 1.0 },
            gamma_prior(1.0),
            StepFn::new(vec![0.0, 1.0, 3.0], vec![2.0, 0.0]).unwrap(),
            (0.0, 3.0),
        )
        .unwrap();
        assert_relative_eq!(step.kernel_exponent(0.5), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn kernel_exponent_matches_quadrature() {
        let at_risk = StepFn::new(vec![0.0, 0.7, 1.4, 3.0], vec![3.0, 1.0, 2.0]).unwrap();
        let window = (0.0, 3.0);
        for kernel in [
            Kernel::UniformWindow { width: 0.8 },
            Kernel::OneSidedExp { rate: 1.3 },
            Kernel::Gaussian { sigma: 0.4 },
            Kernel::Indicator { half_width: 0.5 },
        ] {
            for &y in &[0.2, 0.9, 1.6] {
                let closed = kernel.integrate_x(&at_risk, window, y);
                let f = |s: f64| at_risk.value(s) * kernel.evaluate(s, y);
                // integrate piecewise between the discontinuity points
                let mut cuts = vec![
                    window.0, 0.7, 1.4, y, y + 0.8, y - 0.5, y + 0.5, window.1,
                ];
                cuts.retain(|&c| c >= window.0 && c <= window.1);
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut direct = 0.0;
                for w in cuts.windows(2) {
                    direct += quad::integrate(&f, w[0], w[1], 1e-12).unwrap();
                }
                assert_relative_eq!(closed, direct, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn single_observation_marginal() {
        let model = toy_model();
        let xs = [1.0];
        let fitted = model.fit(&xs).unwrap();
        let exact = marginal_likelihood(&fitted).unwrap();
        // n = 1: L_mu(f_K) * integral K(x|y) kappa_1(e^{-f_K} rho|y) eta(dy)
        let f_k = |y: f64| model.kernel_exponent(y);
        let lap = (-model.prior.laplace_exponent(&f_k).unwrap()).exp();
        let tilted = model.tilted_prior().unwrap();
        let f = |y: f64| {
            model.kernel.evaluate(1.0, y)
                * tilted.kappa(1, y).unwrap()
                * model.prior.base().density(y)
        };
        let direct = lap * quad::integrate(&f, 0.0, 2.0, 1e-11).unwrap();
        assert_relative_eq!(exact, direct, max_relative = 1e-9);
    }

    #[test]
    fn posterior_partition_law_normalizes_and_single_obs_trivial() {
        let model = toy_model();
        let xs = [0.8, 1.1, 1.4];
        let fitted = model.fit(&xs).unwrap();
        let mut total = 0.0;
        for p in enumerate_partitions(3).unwrap() {
            total += posterior_partition_density(&fitted, &p).unwrap();
        }
        assert_relative_eq!(total, 1.0, epsilon = 1e-10);

        let single = model.fit(&[1.0]).unwrap();
        assert_relative_eq!(
            posterior_partition_density(&single, &Partition::singleton()).unwrap(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn constant_kernel_reduces_to_partition_law() {
        // an indicator kernel covering the whole base support makes K = 1,
        // so pi(p|X) must equal the partition law of the tilted intensity
        let model = IntensityModel::new(
            Kernel::Indicator { half_width: 10.0 },
            gamma_prior(1.0),
            StepFn::constant(1.0, 0.0, 3.0),
            (0.0, 3.0),
        )
        .unwrap();
        let xs = [0.5, 1.0, 1.5];
        let fitted = model.fit(&xs).unwrap();
        let tilted = model.tilted_prior().unwrap();
        let law = crate::moments::partition_law(&tilted, 3).unwrap();
        for (p, prob) in &law {
            let post = posterior_partition_density(&fitted, p).unwrap();
            assert_relative_eq!(post, *prob, max_relative = 1e-8);
        }
    }

    #[test]
    fn marginal_monotone_in_base_mass() {
        let xs = [0.8, 1.1, 1.4];
        let small = toy_model().fit(&xs).unwrap();
        let big = IntensityModel::new(
            Kernel::UniformWindow { width: 1.0 },
            gamma_prior(2.0),
            StepFn::constant(1.0, 0.0, 3.0),
            (0.0, 3.0),
        )
        .unwrap()
        .fit(&xs)
        .unwrap();
        assert!(
            marginal_likelihood(&big).unwrap() > marginal_likelihood(&small).unwrap(),
            "doubling the base mass must increase the marginal here"
        );
    }

    #[test]
    fn wcr_estimate_matches_exact_marginal() {
        let model = toy_model();
        let xs = [0.8, 1.1, 1.4];
        let fitted = model.fit(&xs).unwrap();
        let exact = marginal_likelihood(&fitted).unwrap();
        let (est, se) = marginal_likelihood_wcr(&fitted, 40_000, 707).unwrap();
        assert!(
            (est - exact).abs() < 3.0 * se,
            "estimate {est} exact {exact} se {se}"
        );
    }

    #[test]
    fn tilt_splitting_invariance() {
        // applying f_K as one tilt or as two sequential halves must agree
        let model = toy_model();
        let xs = [0.8, 1.4];
        let fitted = model.fit(&xs).unwrap();
        let kernel = model.kernel;
        let at_risk = model.at_risk.clone();
        let window = model.window;
        let half = move |y: f64| 0.5 * kernel.integrate_x(&at_risk, window, y);
        let split = model
            .prior
            .tilt(TiltTerm::LinearJump(CFunction::Varying(Arc::new(
                half.clone(),
            ))))
            .unwrap()
            .tilt(TiltTerm::LinearJump(CFunction::Varying(Arc::new(half))))
            .unwrap();
        for &y in &[0.3, 0.9, 1.7] {
            for e in 1..=3 {
                assert_relative_eq!(
                    fitted.tilted().kappa(e, y).unwrap(),
                    split.kappa(e, y).unwrap(),
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn intensity_mean_no_data_is_prior_mean() {
        let model = toy_model();
        // fit with one observation but query the continuous part only
        let fitted = model.fit(&[1.0]).unwrap();
        let t = 1.0;
        let direct = prior_intensity_mean(&fitted, t).unwrap();
        let f = |y: f64| {
            model.kernel.evaluate(t, y)
                * fitted.tilted().kappa(1, y).unwrap()
                * model.prior.base().density(y)
        };
        let expect = quad::integrate(&f, 0.0, 2.0, 1e-11).unwrap();
        assert_relative_eq!(direct, expect, max_relative = 1e-8);
    }

    #[test]
    fn single_obs_given_x_integrates_given_latent() {
        // for n = 1 the exact posterior mean equals the latent-data mean
        // integrated over the single-block location posterior
        let model = toy_model();
        let xs = [1.0];
        let fitted = model.fit(&xs).unwrap();
        let t = 1.2;
        let exact = posterior_intensity_mean(&fitted, t).unwrap();
        let block = vec![0usize];
        let (lo, hi) = fitted.block_bounds(&block).unwrap();
        let phi = fitted.phi(&block).unwrap();
        let f = |y: f64| {
            let dens = fitted.block_density(&block, y) / phi;
            let given = posterior_intensity_mean_given_latent(
                &fitted,
                &Partition::singleton(),
                &[y],
                t,
            )
            .unwrap();
            given * dens
        };
        let averaged = quad::integrate(&f, lo, hi, 1e-10).unwrap();
        assert_relative_eq!(exact, averaged, epsilon = 1e-9);
    }

    #[test]
    fn posterior_draws_match_exact_total_mass() {
        let model = toy_model();
        let xs = [0.8, 1.3];
        let fitted = model.fit(&xs).unwrap();
        let exact = posterior_total_mass_mean(&fitted).unwrap();
        let result = fit_posterior(&fitted, 4000, 1e-4, 99).unwrap();
        assert!(result.failures.is_empty());
        let (est, se) = weighted_posterior_mean(&result.draws, &|d| d.total_mass()).unwrap();
        assert!(
            (est - exact).abs() < 4.0 * se,
            "MC {est} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn posterior_draw_determinism() {
        let model = toy_model();
        let xs = [0.8, 1.3];
        let fitted = model.fit(&xs).unwrap();
        let a = fit_posterior(&fitted, 50, 1e-3, 5).unwrap();
        let b = fit_posterior(&fitted, 50, 1e-3, 5).unwrap();
        let c = fit_posterior_seq(&fitted, 50, 1e-3, 5).unwrap();
        for ((x, y), z) in a.draws.iter().zip(&b.draws).zip(&c.draws) {
            assert_eq!(x.partition, y.partition);
            assert_eq!(x.partition, z.partition);
            assert_eq!(x.jumps, y.jumps);
            assert_eq!(x.jumps, z.jumps);
            assert_eq!(x.continuous.atoms, z.continuous.atoms);
        }
    }

    #[test]
    fn smaller_eps_means_more_atoms() {
        let model = toy_model();
        let fitted = model.fit(&[1.0]).unwrap();
        let coarse = fit_posterior(&fitted, 200, 1e-2, 7).unwrap();
        let fine = fit_posterior(&fitted, 200, 1e-5, 7).unwrap();
        let mean_atoms = |r: &FitResult| {
            r.draws
                .iter()
                .map(|d| d.continuous.atoms.len())
                .sum::<usize>() as f64
                / r.draws.len() as f64
        };
        assert!(mean_atoms(&fine) > mean_atoms(&coarse));
        for d in &fine.draws {
            assert!(d.continuous.truncation_bound < 1e-5);
        }
    }

    #[test]
    fn degenerate_kernel_flagged() {
        // observation outside every kernel window: zero likelihood
        let model = toy_model();
        let fitted = model.fit(&[25.0]).unwrap();
        assert!(matches!(
            posterior_partition_density(&fitted, &Partition::singleton()),
            Err(Error::Numeric { .. })
        ));
    }
}
