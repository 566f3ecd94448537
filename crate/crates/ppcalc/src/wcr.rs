//! The generalized weighted Chinese restaurant sequential importance
//! sampler, generic over seating-weight providers.
//!
//! A weight model supplies, for the next customer, the weight of opening a
//! new table and of joining each occupied table. Seating by these weights
//! produces a partition with density `q(p|g)` and an importance factor
//! `I(p|g) = prod_r l(r-1)` satisfying `I(p|g) q(p|g) = prod_j phi(C_j)`
//! where `phi` is the model's block integral. All weights are carried in log
//! space and the step normalizer is a log-sum-exp.

use crate::eppf::EppfSpec;
use crate::error::{Error, Result};
use crate::exec;
use crate::numeric::kahan::KahanSum;
use crate::numeric::special::log_sum_exp;
use crate::partition::Partition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::RwLock;

/// Seating weights for the sequential sampler. Items are indexed `0..n`.
pub trait SeatingWeights: Sync {
    /// Weight of customer `next` opening a new table, given `n_blocks`
    /// occupied tables.
    fn new_table(&self, next: usize, n_blocks: usize) -> f64;

    /// Weight of customer `next` joining the table currently holding
    /// `block_items`.
    fn join_table(&self, next: usize, block_items: &[usize]) -> f64;
}

/// A sampled partition with its importance weight and optional per-block
/// latent payload.
#[derive(Debug, Clone)]
pub struct WeightedDraw {
    pub partition: Partition,
    pub log_importance: f64,
    pub latent: Option<Vec<f64>>,
}

/// Draw one partition of `{1..n}` by weighted seating.
pub fn wcr_sample<R: Rng + ?Sized>(
    weights: &dyn SeatingWeights,
    n: usize,
    rng: &mut R,
) -> Result<WeightedDraw> {
    let op = "wcr_sample";
    if n == 0 {
        return Err(Error::EmptyInput {
            operation: op,
            what: "n",
        });
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut log_importance = 0.0f64;
    let mut assignment = Vec::with_capacity(n);
    for r in 0..n {
        let mut logw: Vec<f64> = Vec::with_capacity(blocks.len() + 1);
        for b in &blocks {
            logw.push(weights.join_table(r, b).ln());
        }
        logw.push(weights.new_table(r, blocks.len()).ln());
        let log_l = log_sum_exp(&logw);
        if !log_l.is_finite() {
            return Err(Error::DegenerateWeights { operation: op, step: r });
        }
        log_importance += log_l;
        // categorical draw over normalized weights
        let u: f64 = rng.random::<f64>();
        let mut acc = 0.0;
        let mut chosen = logw.len() - 1;
        for (j, &lw) in logw.iter().enumerate() {
            acc += (lw - log_l).exp();
            if u < acc {
                chosen = j;
                break;
            }
        }
        if chosen == blocks.len() {
            blocks.push(vec![r]);
        } else {
            blocks[chosen].push(r);
        }
        assignment.push(chosen as u32);
    }
    Ok(WeightedDraw {
        partition: Partition::from_assignment(assignment)?,
        log_importance,
        latent: None,
    })
}

/// Exact sampling density `q(p|g)`: the sequential product of seating
/// probabilities along the canonical item order.
pub fn wcr_density(weights: &dyn SeatingWeights, p: &Partition) -> Result<f64> {
    Ok(wcr_log_density(weights, p)?.exp())
}

pub fn wcr_log_density(weights: &dyn SeatingWeights, p: &Partition) -> Result<f64> {
    let (log_q, _) = replay(weights, p)?;
    Ok(log_q)
}

/// The importance factor `I(p|g) = prod_{r=1}^n l(r-1)` along `p`'s
/// canonical construction path.
pub fn wcr_log_importance(weights: &dyn SeatingWeights, p: &Partition) -> Result<f64> {
    let (_, log_i) = replay(weights, p)?;
    Ok(log_i)
}

fn replay(weights: &dyn SeatingWeights, p: &Partition) -> Result<(f64, f64)> {
    let op = "wcr_density";
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut log_q = 0.0f64;
    let mut log_i = 0.0f64;
    for (r, &a) in p.assignment().iter().enumerate() {
        let mut logw: Vec<f64> = Vec::with_capacity(blocks.len() + 1);
        for b in &blocks {
            logw.push(weights.join_table(r, b).ln());
        }
        logw.push(weights.new_table(r, blocks.len()).ln());
        let log_l = log_sum_exp(&logw);
        if !log_l.is_finite() {
            return Err(Error::DegenerateWeights { operation: op, step: r });
        }
        log_i += log_l;
        let chosen = a as usize;
        log_q += logw[chosen.min(blocks.len())] - log_l;
        if chosen == blocks.len() {
            blocks.push(vec![r]);
        } else {
            blocks[chosen].push(r);
        }
    }
    Ok((log_q, log_i))
}

/// Batch of draws with counter-derived substreams.
pub fn sample_batch(
    weights: &dyn SeatingWeights,
    n: usize,
    draws: usize,
    seed: u64,
) -> Result<Vec<WeightedDraw>> {
    let out = exec::map_indexed(draws, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        wcr_sample(weights, n, &mut rng)
    });
    out.into_iter().collect()
}

/// Sequential twin of [`sample_batch`].
pub fn sample_batch_seq(
    weights: &dyn SeatingWeights,
    n: usize,
    draws: usize,
    seed: u64,
) -> Result<Vec<WeightedDraw>> {
    let out = exec::map_indexed_seq(draws, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        wcr_sample(weights, n, &mut rng)
    });
    out.into_iter().collect()
}

/// Output of the self-normalized importance estimator.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ImportanceEstimate {
    /// `sum t(p_b) I_b / sum I_b`
    pub estimate: f64,
    /// delta-method standard error of `estimate`
    pub stderr: f64,
    /// `B^{-1} sum I_b`, the unbiased estimate of `sum_p prod_j phi(C_j)`
    pub unnormalized_mean: f64,
    pub unnormalized_stderr: f64,
}

/// Self-normalized importance-sampling estimate of `E_pi[t(p)]` where `pi`
/// is the target proportional to the block-integral products.
pub fn importance_estimate(
    draws: &[WeightedDraw],
    t: &dyn Fn(&Partition) -> f64,
) -> Result<ImportanceEstimate> {
    if draws.is_empty() {
        return Err(Error::EmptyInput {
            operation: "importance_estimate",
            what: "draws",
        });
    }
    let b = draws.len() as f64;
    let max_log = draws
        .iter()
        .map(|d| d.log_importance)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum_w = KahanSum::new();
    let mut sum_wt = KahanSum::new();
    let scaled: Vec<(f64, f64)> = draws
        .iter()
        .map(|d| ((d.log_importance - max_log).exp(), t(&d.partition)))
        .collect();
    for &(w, tv) in &scaled {
        sum_w.add(w);
        sum_wt.add(w * tv);
    }
    let estimate = sum_wt.value() / sum_w.value();
    // delta-method variance for the ratio estimator
    let mut var = KahanSum::new();
    for &(w, tv) in &scaled {
        let d = w * (tv - estimate);
        var.add(d * d);
    }
    let stderr = var.value().sqrt() / sum_w.value();
    let unnorm_scale = max_log.exp();
    let unnormalized_mean = unnorm_scale * sum_w.value() / b;
    let mut var_u = KahanSum::new();
    let w_mean = sum_w.value() / b;
    for &(w, _) in &scaled {
        let d = w - w_mean;
        var_u.add(d * d);
    }
    let unnormalized_stderr = unnorm_scale * (var_u.value() / (b - 1.0)).sqrt() / b.sqrt();
    Ok(ImportanceEstimate {
        estimate,
        stderr,
        unnormalized_mean,
        unnormalized_stderr,
    })
}

/// Poisson-Dirichlet prediction-rule weights: `l(r) = theta + r` is
/// recovered and the sampled law equals the EPPF exactly.
pub struct PdSeating {
    spec: EppfSpec,
}

impl PdSeating {
    pub fn new(spec: EppfSpec) -> Self {
        Self { spec }
    }
}

impl SeatingWeights for PdSeating {
    fn new_table(&self, _next: usize, n_blocks: usize) -> f64 {
        self.spec.theta() + n_blocks as f64 * self.spec.alpha()
    }

    fn join_table(&self, _next: usize, block_items: &[usize]) -> f64 {
        block_items.len() as f64 - self.spec.alpha()
    }
}

/// Generic block-integral weights: `phi(C)` is a nonnegative block integral;
/// new-table weight is `phi({next})` and join weight the ratio
/// `phi(C + next)/phi(C)`. Values are cached; the cache is shared across
/// parallel draws.
pub struct PhiSeating<F>
where
    F: Fn(&[usize]) -> f64 + Sync + Send,
{
    phi: F,
    cache: RwLock<HashMap<Vec<usize>, f64>>,
}

impl<F> PhiSeating<F>
where
    F: Fn(&[usize]) -> f64 + Sync + Send,
{
    pub fn new(phi: F) -> Self {
        Self {
            phi,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// The cached block integral for a sorted list of item indices.
    pub fn phi(&self, items: &[usize]) -> f64 {
        let mut key = items.to_vec();
        key.sort_unstable();
        if let Some(v) = self.cache.read().expect("phi cache").get(&key) {
            return *v;
        }
        let v = (self.phi)(&key);
        self.cache.write().expect("phi cache").insert(key, v);
        v
    }
}

impl<F> SeatingWeights for PhiSeating<F>
where
    F: Fn(&[usize]) -> f64 + Sync + Send,
{
    fn new_table(&self, next: usize, _n_blocks: usize) -> f64 {
        self.phi(&[next])
    }

    fn join_table(&self, next: usize, block_items: &[usize]) -> f64 {
        let denom = self.phi(block_items);
        if denom <= 0.0 {
            return 0.0;
        }
        let mut joined = block_items.to_vec();
        joined.push(next);
        self.phi(&joined) / denom
    }
}

/// Direct product of block integrals `prod_j phi(C_j)` for a partition,
/// the right-hand side of the seating identity.
pub fn block_integral_product<F>(seating: &PhiSeating<F>, p: &Partition) -> f64
where
    F: Fn(&[usize]) -> f64 + Sync + Send,
{
    p.blocks().iter().map(|b| seating.phi(b)).product()
}
