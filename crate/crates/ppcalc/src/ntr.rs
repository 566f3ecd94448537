//! Extended neutral-to-the-right survival analysis: Beta-family hazard
//! priors, posterior hazards under right censoring, posterior survival
//! curves via product integration, marginal and EPPF formulas, the Beta
//! change of measure, and the Beta-Stacy EPPF.
//!
//! A hazard prior is stored as the total intensity
//! `weight(s) u^{-1} (1-u)^{shape(s)-1} du A0(ds)` on `(0,1] x (0,inf)`.
//! The canonical Beta process has `weight = shape = c`, which makes the
//! prior mean hazard exactly `A0`; the Dirichlet construction uses
//! `c(s) = theta S0(s)` with `A0(ds) = F0(ds)/S0(s)`. Jump laws use the
//! strict at-risk count, the continuous tilt the left-closed count.

use crate::error::{Error, Result};
use crate::exec;
use crate::levy::CFunction;
use crate::numeric::kahan::KahanSum;
use crate::numeric::quad;
use crate::numeric::special::ln_gamma;
use crate::partition::Partition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use statrs::function::gamma::digamma;
use std::sync::Arc;

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One subject: time, event indicator (false = right-censored), optional
/// mark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalRecord {
    pub time: f64,
    pub event: bool,
    pub mark: Option<f64>,
}

impl SurvivalRecord {
    pub fn event(time: f64) -> Self {
        Self {
            time,
            event: true,
            mark: None,
        }
    }

    pub fn censored(time: f64) -> Self {
        Self {
            time,
            event: false,
            mark: None,
        }
    }
}

/// Survival data with derived views: distinct uncensored times with
/// multiplicities, and censoring times.
#[derive(Debug, Clone, Default)]
pub struct SurvivalDataset {
    records: Vec<SurvivalRecord>,
}

/// Strict (`> s`) or left-closed (`>= s`) at-risk counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtRiskMode {
    Strict,
    LeftClosed,
}

impl SurvivalDataset {
    pub fn new(records: Vec<SurvivalRecord>) -> Result<Self> {
        if records.iter().any(|r| !(r.time > 0.0)) {
            return Err(Error::numeric(
                "SurvivalDataset::new",
                "times must be positive",
            ));
        }
        Ok(Self { records })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }

    pub fn n_censored(&self) -> usize {
        self.records.len() - self.n_events()
    }

    /// Event times in record order.
    pub fn event_times(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.event)
            .map(|r| r.time)
            .collect()
    }

    pub fn censor_times(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| !r.event)
            .map(|r| r.time)
            .collect()
    }

    /// Sorted distinct uncensored times with multiplicities and the mark of
    /// the first matching event.
    pub fn distinct_event_times(&self) -> Vec<(f64, u32, Option<f64>)> {
        let mut times: Vec<(f64, Option<f64>)> = self
            .records
            .iter()
            .filter(|r| r.event)
            .map(|r| (r.time, r.mark))
            .collect();
        times.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut out: Vec<(f64, u32, Option<f64>)> = Vec::new();
        for (t, m) in times {
            match out.last_mut() {
                Some(last) if last.0 == t => last.1 += 1,
                _ => out.push((t, 1, m)),
            }
        }
        out
    }

    /// All break times (events and censorings), sorted and deduplicated.
    pub fn break_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.records.iter().map(|r| r.time).collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        ts
    }
}

/// At-risk count at time `s` over events and censorings.
pub fn at_risk(ds: &SurvivalDataset, s: f64, mode: AtRiskMode) -> u32 {
    ds.records
        .iter()
        .filter(|r| match mode {
            AtRiskMode::Strict => r.time > s,
            AtRiskMode::LeftClosed => r.time >= s,
        })
        .count() as u32
}

/// Named time distributions used for `F0` and base hazards.
#[derive(Debug, Clone, Copy)]
pub enum TimeDistribution {
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
}

impl TimeDistribution {
    pub fn survival(&self, t: f64) -> f64 {
        match self {
            TimeDistribution::Exponential { rate } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-rate * t).exp()
                }
            }
            TimeDistribution::Uniform { a, b } => {
                if t <= *a {
                    1.0
                } else if t >= *b {
                    0.0
                } else {
                    (b - t) / (b - a)
                }
            }
        }
    }

    pub fn density(&self, t: f64) -> f64 {
        match self {
            TimeDistribution::Exponential { rate } => {
                if t >= 0.0 {
                    rate * (-rate * t).exp()
                } else {
                    0.0
                }
            }
            TimeDistribution::Uniform { a, b } => {
                if t >= *a && t < *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            TimeDistribution::Exponential { rate } => -(1.0 - u).max(1e-300).ln() / rate,
            TimeDistribution::Uniform { a, b } => a + u * (b - a),
        }
    }

    /// Effective upper end for quadrature.
    fn horizon(&self) -> f64 {
        match self {
            TimeDistribution::Exponential { .. } => self.quantile(1.0 - 1e-13),
            TimeDistribution::Uniform { b, .. } => *b,
        }
    }
}

/// Base cumulative hazard `A0`.
#[derive(Debug, Clone)]
pub enum HazardMeasure {
    /// `A0(t) = -log S0(t)` for a named distribution (infinite total mass).
    FromDistribution(TimeDistribution),
    /// `A0(t) = rate * min(t, horizon)` (finite total mass).
    Bounded { rate: f64, horizon: f64 },
}

impl HazardMeasure {
    pub fn cumulative(&self, t: f64) -> f64 {
        match self {
            HazardMeasure::FromDistribution(d) => -d.survival(t).max(1e-300).ln(),
            HazardMeasure::Bounded { rate, horizon } => rate * t.min(*horizon).max(0.0),
        }
    }

    pub fn density(&self, s: f64) -> f64 {
        match self {
            HazardMeasure::FromDistribution(d) => {
                let surv = d.survival(s);
                if surv <= 0.0 {
                    0.0
                } else {
                    d.density(s) / surv
                }
            }
            HazardMeasure::Bounded { rate, horizon } => {
                if s >= 0.0 && s < *horizon {
                    *rate
                } else {
                    0.0
                }
            }
        }
    }

    fn horizon(&self) -> f64 {
        match self {
            HazardMeasure::FromDistribution(d) => d.horizon(),
            HazardMeasure::Bounded { horizon, .. } => *horizon,
        }
    }

    /// `inf { t : A0(t) >= x }` for path sampling.
    fn inverse_cumulative(&self, x: f64) -> f64 {
        match self {
            HazardMeasure::FromDistribution(d) => d.quantile(1.0 - (-x).exp()),
            HazardMeasure::Bounded { rate, horizon } => (x / rate).min(*horizon),
        }
    }
}

/// A Beta-family hazard prior with total intensity
/// `weight(s) u^{-1} (1-u)^{shape(s)-1} du A0(ds)`.
#[derive(Clone)]
pub struct HazardPrior {
    pub shape: CFunction,
    pub weight: CFunction,
    pub a0: HazardMeasure,
    pub dirichlet: Option<(f64, TimeDistribution)>,
}

impl HazardPrior {
    /// Canonical Beta process: `weight = shape = c`, prior mean hazard `A0`.
    pub fn beta(c: CFunction, a0: HazardMeasure) -> Result<Self> {
        if let Some(v) = c.constant() {
            if !(v > 0.0) {
                return Err(Error::invalid("HazardPrior::beta", "c", v, "c > 0"));
            }
        }
        Ok(Self {
            shape: c.clone(),
            weight: c,
            a0,
            dirichlet: None,
        })
    }

    /// The Dirichlet process prior with shape measure `theta F0`:
    /// `c(s) = theta S0(s)`, `A0(ds) = F0(ds)/S0(s)`.
    pub fn dirichlet(theta: f64, f0: TimeDistribution) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::invalid(
                "HazardPrior::dirichlet",
                "theta",
                theta,
                "theta > 0",
            ));
        }
        let c = move |s: f64| theta * f0.survival(s);
        Ok(Self {
            shape: CFunction::Varying(Arc::new(c)),
            weight: CFunction::Varying(Arc::new(move |s: f64| theta * f0.survival(s))),
            a0: HazardMeasure::FromDistribution(f0),
            dirichlet: Some((theta, f0)),
        })
    }

    /// Check the Dirichlet consistency `c(s) = theta S0(s)` on a grid.
    pub fn check_dirichlet_consistency(&self, tol: f64) -> Result<()> {
        if let Some((theta, f0)) = &self.dirichlet {
            for i in 1..20 {
                let t = f0.quantile(i as f64 / 20.0);
                let expect = theta * f0.survival(t);
                if (self.shape.eval(t) - expect).abs() > tol * expect.max(1.0) {
                    return Err(Error::numeric(
                        "check_dirichlet_consistency",
                        format!("shape mismatch at t={t}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Per-unit-`A0` jump cumulant of the tilted intensity:
    /// `kappa_e((1-u)^{risk} rho | s) = weight(s) B(e, shape(s) + risk)`.
    fn kappa(&self, e: u32, s: f64, risk: f64) -> f64 {
        let c = self.shape.eval(s);
        let w = self.weight.eval(s);
        let ef = f64::from(e);
        w * (ln_gamma(ef) + ln_gamma(c + risk) - ln_gamma(ef + c + risk)).exp()
    }

    /// `integral_0^t weight/(shape + risk(s)) dA0` where `risk` is the
    /// left-closed at-risk count of `ds`, integrating piecewise between the
    /// data break times.
    fn tilted_cumulative(&self, ds: &SurvivalDataset, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let mut cuts = vec![0.0];
        for b in ds.break_times() {
            if b < t {
                cuts.push(b);
            }
        }
        cuts.push(t);
        let mut total = KahanSum::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1].min(self.a0.horizon()));
            if b <= a {
                continue;
            }
            let f = |s: f64| {
                let risk = at_risk(ds, s, AtRiskMode::LeftClosed) as f64;
                self.weight.eval(s) / (self.shape.eval(s) + risk) * self.a0.density(s)
            };
            total.add(quad::integrate(&f, a, b, 1e-10)?);
        }
        Ok(total.value())
    }
}

/// A posterior hazard: the tilted continuous part plus fixed Beta jumps at
/// the distinct uncensored times.
#[derive(Clone)]
pub struct PosteriorHazard {
    pub prior: HazardPrior,
    pub dataset: SurvivalDataset,
    pub jumps: Vec<PosteriorJump>,
}

/// One fixed jump of the posterior hazard; the jump law is
/// `Beta(mult, shape(time) + strict at-risk)`.
#[derive(Debug, Clone)]
pub struct PosteriorJump {
    pub time: f64,
    pub mult: u32,
    pub beta_a: f64,
    pub beta_b: f64,
    pub mark: Option<f64>,
}

impl PosteriorJump {
    pub fn mean(&self) -> f64 {
        self.beta_a / (self.beta_a + self.beta_b)
    }
}

/// Posterior hazard under (possibly right-censored) data: continuous part
/// tilted by `(1-u)^{Y+}`, jumps `Beta(e_j, shape(T*_j) + Y(T*_j))` with
/// the strict count.
pub fn posterior_hazard(prior: &HazardPrior, ds: &SurvivalDataset) -> PosteriorHazard {
    let jumps = ds
        .distinct_event_times()
        .into_iter()
        .map(|(t, e, mark)| {
            let strict = at_risk(ds, t, AtRiskMode::Strict) as f64;
            PosteriorJump {
                time: t,
                mult: e,
                beta_a: f64::from(e),
                beta_b: prior.shape.eval(t) + strict,
                mark,
            }
        })
        .collect();
    PosteriorHazard {
        prior: prior.clone(),
        dataset: ds.clone(),
        jumps,
    }
}

impl PosteriorHazard {
    /// Absorb a second batch sequentially: tilts add, matching jump times
    /// update their Beta parameters, new event times open new jumps.
    pub fn absorb(&self, more: &SurvivalDataset) -> Result<PosteriorHazard> {
        let mut records = self.dataset.records().to_vec();
        records.extend(more.records().iter().cloned());
        let mut jumps: Vec<PosteriorJump> = Vec::new();
        // update existing jumps with the extra ties and at-risk counts
        for j in &self.jumps {
            let extra_ties = more
                .records()
                .iter()
                .filter(|r| r.event && r.time == j.time)
                .count() as f64;
            let extra_risk = at_risk(more, j.time, AtRiskMode::Strict) as f64;
            jumps.push(PosteriorJump {
                time: j.time,
                mult: j.mult + extra_ties as u32,
                beta_a: j.beta_a + extra_ties,
                beta_b: j.beta_b + extra_risk,
                mark: j.mark,
            });
        }
        // new jump times sample from the batch-1-tilted continuous part
        for (t, e, mark) in more.distinct_event_times() {
            if self.jumps.iter().any(|j| j.time == t) {
                continue;
            }
            let old_risk = at_risk(&self.dataset, t, AtRiskMode::LeftClosed) as f64;
            let new_risk = at_risk(more, t, AtRiskMode::Strict) as f64;
            jumps.push(PosteriorJump {
                time: t,
                mult: e,
                beta_a: f64::from(e),
                beta_b: self.prior.shape.eval(t) + old_risk + new_risk,
                mark,
            });
        }
        jumps.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        Ok(PosteriorHazard {
            prior: self.prior.clone(),
            dataset: SurvivalDataset::new(records)?,
            jumps,
        })
    }
}

/// Posterior mean survival
/// `E[S(t)|data] = exp(-Atilde(t)) prod_{T*_j <= t} (1 - E[J_j])`;
/// with no data this is the prior mean `exp(-A0(t))` for canonical priors.
pub fn posterior_survival_mean(
    prior: &HazardPrior,
    ds: &SurvivalDataset,
    t: f64,
) -> Result<f64> {
    let post = posterior_hazard(prior, ds);
    let cont = prior.tilted_cumulative(ds, t)?;
    let mut surv = (-cont).exp();
    for j in &post.jumps {
        if j.time <= t {
            surv *= 1.0 - j.mean();
        }
    }
    Ok(surv)
}

/// Natural log of the joint marginal density of complete (uncensored) data
/// in record order, per the sequential-tilt product form.
pub fn ntr_log_marginal(prior: &HazardPrior, times: &[f64]) -> Result<f64> {
    let op = "ntr_marginal";
    if times.is_empty() {
        return Err(Error::EmptyInput {
            operation: op,
            what: "times",
        });
    }
    let full: Vec<SurvivalRecord> = times.iter().map(|&t| SurvivalRecord::event(t)).collect();
    let full_ds = SurvivalDataset::new(full.clone())?;
    let mut log = 0.0f64;
    // sequential exponential factors e^{-A_{i-1}(T_i)}
    for i in 0..times.len() {
        let prefix = SurvivalDataset::new(full[..i].to_vec())?;
        log -= prior.tilted_cumulative(&prefix, times[i])?;
    }
    // block factors kappa_{e_j}(tilted | T*_j) a0(T*_j)
    for (t, e, _) in full_ds.distinct_event_times() {
        let strict = at_risk(&full_ds, t, AtRiskMode::Strict) as f64;
        let k = prior.kappa(e, t, strict);
        let dens = prior.a0.density(t);
        if !(k > 0.0) || !(dens > 0.0) {
            return Err(Error::numeric(op, format!("zero marginal factor at t={t}")));
        }
        log += k.ln() + dens.ln();
    }
    Ok(log)
}

/// The same marginal through the rearranged form: partition factor times
/// the product of effective prior time densities
/// `F0_eff(dt) = exp(-A_eff(t)) kappa_1(rho|t) a0(t)`.
pub fn ntr_log_marginal_rearranged(prior: &HazardPrior, times: &[f64]) -> Result<f64> {
    let full: Vec<SurvivalRecord> = times.iter().map(|&t| SurvivalRecord::event(t)).collect();
    let full_ds = SurvivalDataset::new(full)?;
    let mut log = ntr_log_partition_factor(prior, times)?;
    let empty = SurvivalDataset::empty();
    // one effective-density factor per distinct time
    for (t, _, _) in full_ds.distinct_event_times() {
        let a_eff = prior.tilted_cumulative(&empty, t)?;
        let dens = prior.kappa(1, t, 0.0) * prior.a0.density(t);
        log += -a_eff + dens.ln();
    }
    Ok(log)
}

/// Log of the partition factor `pi(p | rho, T*)` of the rearranged form:
/// the sequential exponential factors divided by one prior-density factor
/// per distinct time.
fn ntr_log_partition_factor(prior: &HazardPrior, times: &[f64]) -> Result<f64> {
    let full: Vec<SurvivalRecord> = times.iter().map(|&t| SurvivalRecord::event(t)).collect();
    let full_ds = SurvivalDataset::new(full.clone())?;
    let empty = SurvivalDataset::empty();
    let mut log = 0.0f64;
    for i in 0..times.len() {
        let prefix = SurvivalDataset::new(full[..i].to_vec())?;
        log -= prior.tilted_cumulative(&prefix, times[i])?;
    }
    for (t, e, _) in full_ds.distinct_event_times() {
        let strict = at_risk(&full_ds, t, AtRiskMode::Strict) as f64;
        log += prior.kappa(e, t, strict).ln();
        log += prior.tilted_cumulative(&empty, t)?;
        log -= prior.kappa(1, t, 0.0).ln();
    }
    Ok(log)
}

/// EPPF factor of the complete-data marginal for a given partition and
/// distinct times: item `i` takes the time of its block.
pub fn ntr_eppf_factor(prior: &HazardPrior, p: &Partition, tstars: &[f64]) -> Result<f64> {
    if tstars.len() != p.n_blocks() {
        return Err(Error::numeric(
            "ntr_eppf",
            "one distinct time per block required",
        ));
    }
    let times: Vec<f64> = p
        .assignment()
        .iter()
        .map(|&b| tstars[b as usize])
        .collect();
    Ok(ntr_log_partition_factor(prior, &times)?.exp())
}

/// The aggregate exponent `Atilde_{n,m}(infinity)` of the prior-mean
/// likelihood factorization.
pub fn aggregate_exponent(prior: &HazardPrior, ds: &SurvivalDataset) -> Result<f64> {
    let horizon = prior.a0.horizon();
    let mut cuts = vec![0.0];
    cuts.extend(ds.break_times());
    cuts.push(horizon);
    cuts.retain(|&c| c <= horizon);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut total = KahanSum::new();
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let f = |s: f64| {
            let risk = at_risk(ds, s, AtRiskMode::LeftClosed) as f64;
            let c = prior.shape.eval(s);
            // integral_0^1 (1 - (1-u)^risk) w u^{-1} (1-u)^{c-1} du
            //   = w [digamma(c + risk) - digamma(c)]
            prior.weight.eval(s) * (digamma(c + risk) - digamma(c)) * prior.a0.density(s)
        };
        total.add(quad::integrate(&f, w[0], w[1], 1e-10)?);
    }
    Ok(total.value())
}

/// Beta change of measure: tilting by `e^{-T_beta}` with a decreasing
/// `beta` adds `beta` to the shape exponent and leaves the weight; the log
/// normalizer is `-integral w(s) [digamma(shape+beta) - digamma(shape)]
/// A0(ds)`.
pub fn beta_tilt(prior: &HazardPrior, beta: TimeFn) -> Result<(HazardPrior, f64)> {
    let op = "beta_tilt";
    let horizon = prior.a0.horizon();
    let integrand = {
        let prior = prior.clone();
        let beta = beta.clone();
        move |s: f64| {
            let c = prior.shape.eval(s);
            let b = beta(s);
            if b <= 0.0 {
                return 0.0;
            }
            prior.weight.eval(s) * (digamma(c + b) - digamma(c)) * prior.a0.density(s)
        }
    };
    // finiteness check for unbounded base hazards: the mass between far
    // quantiles must vanish
    if let HazardMeasure::FromDistribution(d) = &prior.a0 {
        let t1 = d.quantile(1.0 - 1e-4);
        let t2 = d.quantile(1.0 - 1e-8);
        let tail = quad::integrate(&|s| integrand(s), t1, t2, 1e-7)?;
        let head = quad::integrate(&|s| integrand(s), 0.0, t1, 1e-7)?;
        if tail.abs() > 1e-5 * head.abs().max(1.0) {
            return Err(Error::Divergence {
                operation: op,
                family: "BetaProcess".into(),
            });
        }
    }
    let log_norm = -quad::integrate(&|s| integrand(s), 0.0, horizon, 1e-9)?;
    let old_shape = prior.shape.clone();
    let new_shape = move |s: f64| old_shape.eval(s) + beta(s);
    let tilted = HazardPrior {
        shape: CFunction::Varying(Arc::new(new_shape)),
        weight: prior.weight.clone(),
        a0: prior.a0.clone(),
        dirichlet: None,
    };
    Ok((tilted, log_norm))
}

/// The Beta-Stacy EPPF closed form as printed:
/// `PD(p|theta) prod_j integral Gamma(e_j + theta S0) Gamma(theta S0 +
/// beta) / (Gamma(theta S0) Gamma(e_j + theta S0 + beta)) F0(dy)`.
pub fn beta_stacy_eppf(
    theta: f64,
    f0: TimeDistribution,
    beta: &dyn Fn(f64) -> f64,
    p: &Partition,
) -> Result<f64> {
    let op = "beta_stacy_eppf";
    if !(theta > 0.0) {
        return Err(Error::invalid(op, "theta", theta, "theta > 0"));
    }
    let spec = crate::eppf::EppfSpec::ewens(theta)?;
    let mut log = crate::eppf::log_eppf(&spec, p);
    for &e in p.block_sizes() {
        let ef = f64::from(e);
        // substitute u = F0(y); y = quantile(u); S0 = 1 - u
        let f = |u: f64| {
            let y = f0.quantile(u);
            let b = beta(y);
            if b == 0.0 {
                return 1.0;
            }
            let x = theta * (1.0 - u);
            if x <= 0.0 {
                return 0.0;
            }
            (ln_gamma(ef + x) + ln_gamma(x + b) - ln_gamma(x) - ln_gamma(ef + x + b)).exp()
        };
        log += quad::integrate(&f, 0.0, 1.0, 1e-9)?.max(1e-300).ln();
    }
    Ok(log.exp())
}

/// One sampled posterior survival path evaluated on a grid.
pub fn sample_posterior_survival<R: Rng + ?Sized>(
    prior: &HazardPrior,
    ds: &SurvivalDataset,
    eps: f64,
    grid: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let op = "sample_posterior_survival";
    if grid.is_empty() {
        return Err(Error::EmptyInput {
            operation: op,
            what: "grid",
        });
    }
    let t_max = grid.iter().cloned().fold(0.0f64, f64::max);
    let post = posterior_hazard(prior, ds);
    // fixed jumps
    let mut events: Vec<(f64, f64)> = Vec::new();
    for j in &post.jumps {
        let draw = rand_distr::Beta::new(j.beta_a, j.beta_b)
            .map_err(|e| Error::numeric(op, e.to_string()))?
            .sample(rng);
        events.push((j.time, draw));
    }
    // continuous part, segment by segment between break times; within a
    // segment the at-risk count is constant and the shape decreasing, so a
    // constant-parameter Beta measure dominates and thinning is exact
    let mut cuts = vec![0.0];
    for b in ds.break_times() {
        if b < t_max {
            cuts.push(b);
        }
    }
    cuts.push(t_max.min(prior.a0.horizon()));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    // sub-split segments so the dominating constants stay tight
    let mut fine = Vec::with_capacity(4 * cuts.len());
    for w in cuts.windows(2) {
        for k in 0..4 {
            fine.push(w[0] + (w[1] - w[0]) * k as f64 / 4.0);
        }
    }
    fine.push(*cuts.last().unwrap());
    let n_seg = fine.len().saturating_sub(1).max(1);
    let seg_eps = eps / n_seg as f64;
    for w in fine.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let risk = at_risk(ds, mid, AtRiskMode::LeftClosed) as f64;
        let mass_a0 = prior.a0.cumulative(b) - prior.a0.cumulative(a);
        if mass_a0 <= 0.0 {
            continue;
        }
        // dominating constants over [a, b]: the canonical weight decreases,
        // so take it at the left end; the shape at the right end
        let w_bar = prior.weight.eval(a).max(prior.weight.eval(mid));
        let c_low = prior.shape.eval(b).min(prior.shape.eval(mid));
        if !(c_low + risk > 0.0) || w_bar <= 0.0 {
            continue;
        }
        let p_dom = c_low + risk;
        // dominating unit-weight Beta measure u^{-1}(1-u)^{p_dom-1} with
        // arrival scale w_bar * mass_a0; the tail inverse runs on a
        // precomputed table per segment
        let table = BetaTailTable::build(p_dom);
        let small = |u: f64| (1.0 - (1.0 - u.min(1.0)).powf(p_dom)) / p_dom;
        let exp_dist = rand_distr::Exp::new(1.0).unwrap();
        let scale = w_bar * mass_a0;
        let mut arrivals = 0.0f64;
        loop {
            arrivals += exp_dist.sample(rng);
            let target = arrivals / scale;
            let u = match table.inverse(target) {
                Some(u) => u,
                // remaining atoms below the table floor are negligible
                None => break,
            };
            // time location from A0 restricted to the segment
            let x = prior.a0.cumulative(a) + rng.random::<f64>() * mass_a0;
            let s = prior.a0.inverse_cumulative(x).clamp(a, b);
            // thin to the target intensity
            let accept = (prior.weight.eval(s) / w_bar)
                * (1.0 - u).powf(prior.shape.eval(s) - c_low);
            if rng.random::<f64>() < accept {
                events.push((s, u));
            }
            if scale * small(u) < seg_eps {
                break;
            }
        }
    }
    events.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    // compose the product integral over the grid
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        let mut s = 1.0f64;
        for &(time, u) in &events {
            if time <= t {
                s *= 1.0 - u;
            }
        }
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
/// Tail mass of the unit-weight Beta measure `u^{-1}(1-u)^{p-1}` above `x`.
/// The lower part runs on the log axis so tiny `x` stays cheap and exact;
/// the upper part runs in the complement variable.
fn beta_tail(p: f64, x: f64) -> f64 {
    if x >= 1.0 {
        return 0.0;
    }
    if x <= 0.0 {
        return f64::INFINITY;
    }
    let in_t = |t: f64| t.powf(p - 1.0) / (1.0 - t);
    if x >= 0.5 {
        return quad::integrate_zero_to(&in_t, 1.0 - x, 1e-10).unwrap_or(f64::NAN);
    }
    // [x, 0.5] via u = e^w in bounded panels (integrand ~ 1 per log unit)
    let g = |w: f64| (1.0 - w.exp()).powf(p - 1.0);
    let mut left = 0.0;
    let mut hi = (0.5f64).ln();
    let lo = x.ln();
    while hi > lo {
        let a = (hi - 60.0).max(lo);
        left += quad::integrate(&g, a, hi, 1e-10).unwrap_or(f64::NAN);
        hi = a;
    }
    left + quad::integrate_zero_to(&in_t, 0.5, 1e-10).unwrap_or(f64::NAN)
}

/// Tabulated tail of the unit-weight Beta measure on a log grid of jump
/// sizes from 1e-30 up to 1 - 1e-12, for fast repeated inversion inside the
/// path sampler. Monotone linear interpolation in (log u, tail).
struct BetaTailTable {
    log_u: Vec<f64>,
    tail: Vec<f64>,
}

impl BetaTailTable {
    fn build(p: f64) -> Self {
        const N_LOW: usize = 1200;
        const N_HIGH: usize = 600;
        let mut log_u = Vec::with_capacity(N_LOW + N_HIGH + 1);
        let w_lo = (1e-30f64).ln();
        let w_mid = (0.5f64).ln();
        for i in 0..N_LOW {
            log_u.push(w_lo + (w_mid - w_lo) * i as f64 / N_LOW as f64);
        }
        // upper half: u = 1 - t with t log-spaced down to 1e-12
        for i in 0..=N_HIGH {
            let log_t = w_mid + ((1e-12f64).ln() - w_mid) * i as f64 / N_HIGH as f64;
            log_u.push((1.0 - log_t.exp()).ln());
        }
        // cumulative trapezoid of u * density(u) on the log-u axis, from top
        let dens = |w: f64| {
            let u = w.exp();
            (1.0 - u).powf(p - 1.0)
        };
        let m = log_u.len();
        let mut tail = vec![0.0f64; m];
        let mut acc = KahanSum::new();
        for i in (0..m - 1).rev() {
            let (wa, wb) = (log_u[i], log_u[i + 1]);
            acc.add(0.5 * (dens(wa) + dens(wb)) * (wb - wa));
            tail[i] = acc.value();
        }
        Self { log_u, tail }
    }

    /// `inf { u : tail(u) <= target }`, or None once the target exceeds the
    /// table floor (all remaining atoms are below 1e-30).
    fn inverse(&self, target: f64) -> Option<f64> {
        if target >= self.tail[0] {
            return None;
        }
        // tail is decreasing in u; binary search for the bracketing cell
        let mut lo = 0usize;
        let mut hi = self.tail.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.tail[mid] > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (t0, t1) = (self.tail[lo], self.tail[hi]);
        let (w0, w1) = (self.log_u[lo], self.log_u[hi]);
        let frac = if t0 > t1 { (t0 - target) / (t0 - t1) } else { 1.0 };
        Some((w0 + frac * (w1 - w0)).exp())
    }
}

/// Mean posterior survival path over Monte Carlo draws with per-draw
/// substreams; returns (means, standard errors) per grid point.
pub fn mean_posterior_survival(
    prior: &HazardPrior,
    ds: &SurvivalDataset,
    eps: f64,
    grid: &[f64],
    draws: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let paths: Vec<Result<Vec<f64>>> = exec::map_indexed(draws, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        sample_posterior_survival(prior, ds, eps, grid, &mut rng)
    });
    let mut collected = Vec::with_capacity(draws);
    for p in paths {
        collected.push(p?);
    }
    let mut means = Vec::with_capacity(grid.len());
    let mut ses = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let col: Vec<f64> = collected.iter().map(|p| p[k]).collect();
        let (m, se) = crate::numeric::stats::mean_stderr(&col);
        means.push(m);
        ses.push(se);
    }
    Ok((means, ses))
}
