//! Exact partition-sum evaluation of moments of random measures and their
//! linear functionals.
//!
//! Every formula here is a sum over set partitions of products of per-block
//! integrals. Block integrals are precomputed (they depend only on the block
//! size, or on the per-functional count vector), the enumeration streams
//! restricted-growth strings sharded by prefix, and accumulation is
//! compensated so results do not depend on thread count.

use crate::base::BaseMeasure;
use crate::eppf::{self, EppfSpec};
use crate::error::{Error, Result};
use crate::exec;
use crate::levy::{LevyIntensity, LocationFn};
use crate::numeric::kahan::KahanSum;
use crate::numeric::quad;
use crate::partition::{
    check_enum_size, enumerate_partitions, for_each_completion, shard_prefixes, Partition,
};

/// Hard ceiling on moment order: Bell(12) = 4,213,597 terms.
pub const MAX_MOMENT_ORDER: usize = 12;

/// Subset of the location space entering a moment computation.
#[derive(Debug, Clone, Copy)]
pub enum Region {
    All,
    Interval { lo: f64, hi: f64 },
}

impl Region {
    fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            Region::All => None,
            Region::Interval { lo, hi } => Some((*lo, *hi)),
        }
    }
}

/// Streamed sum over all partitions of `{1..n}` of `term(assignment, sizes)`,
/// sharded by restricted-growth prefix. `parallel` chooses the thread pool
/// or the sequential fallback; both produce identical bits.
pub fn partition_sum<F>(n: usize, parallel: bool, term: F) -> f64
where
    F: Fn(&[u32], &[u32]) -> f64 + Sync + Send,
{
    let prefixes = shard_prefixes(n, n.min(6));
    let run_shard = |i: usize| {
        let mut acc = KahanSum::new();
        let mut sizes = vec![0u32; n];
        for_each_completion(&prefixes[i], n, |a| {
            let mut k = 0usize;
            for s in sizes.iter_mut() {
                *s = 0;
            }
            for &b in a {
                let b = b as usize;
                if b + 1 > k {
                    k = b + 1;
                }
                sizes[b] += 1;
            }
            acc.add(term(a, &sizes[..k]));
        });
        acc
    };
    let partials = if parallel {
        exec::map_indexed(prefixes.len(), run_shard)
    } else {
        exec::map_indexed_seq(prefixes.len(), run_shard)
    };
    let mut total = KahanSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

fn block_values(li: &LevyIntensity, region: Region, n: usize) -> Result<Vec<f64>> {
    let mut vals = vec![0.0f64; n + 1];
    for e in 1..=n {
        vals[e] = li.kappa_total(e as u32, region.bounds())?;
    }
    Ok(vals)
}

/// `E[mu(B)^n] = sum_p prod_j integral_B kappa_{e_j}(rho|y) eta(dy)`.
pub fn measure_moment(li: &LevyIntensity, region: Region, n: usize) -> Result<f64> {
    check_enum_size("measure_moment", n, MAX_MOMENT_ORDER)?;
    let vals = block_values(li, region, n)?;
    Ok(partition_sum(n, true, |_, sizes| {
        sizes.iter().map(|&e| vals[e as usize]).product()
    }))
}

/// Sequential twin of [`measure_moment`] (bench + determinism checks).
pub fn measure_moment_seq(li: &LevyIntensity, region: Region, n: usize) -> Result<f64> {
    check_enum_size("measure_moment", n, MAX_MOMENT_ORDER)?;
    let vals = block_values(li, region, n)?;
    Ok(partition_sum(n, false, |_, sizes| {
        sizes.iter().map(|&e| vals[e as usize]).product()
    }))
}

/// `E[T^n]` for the total mass `T = mu(Y)`.
pub fn total_mass_moment(li: &LevyIntensity, n: usize) -> Result<f64> {
    measure_moment(li, Region::All, n)
}

/// Joint moments of linear functionals:
/// `E[prod_l mu(f_l)^{n_l}] = sum_p prod_j integral kappa_{e_j}(rho|u)
/// prod_l f_l(u)^{e^l_j} eta(du)` with block label counts `e^l_j`.
pub fn joint_linear_moments(li: &LevyIntensity, pairs: &[(LocationFn, u32)]) -> Result<f64> {
    let op = "joint_linear_moments";
    if pairs.is_empty() {
        return Err(Error::EmptyInput {
            operation: op,
            what: "pairs",
        });
    }
    let n: usize = pairs.iter().map(|p| p.1 as usize).sum();
    check_enum_size(op, n, MAX_MOMENT_ORDER)?;
    // item labels in canonical order: n_1 items for f_1, then n_2 for f_2, ...
    let mut labels = Vec::with_capacity(n);
    for (l, p) in pairs.iter().enumerate() {
        labels.extend(std::iter::repeat(l).take(p.1 as usize));
    }
    let q = pairs.len();
    // precompute the block integral for every count vector
    let mut table: std::collections::HashMap<Vec<u8>, f64> = std::collections::HashMap::new();
    let mut counts = vec![0u8; q];
    fill_count_table(li, pairs, &mut counts, 0, &mut table)?;
    Ok(partition_sum(n, true, |assignment, sizes| {
        let k = sizes.len();
        let mut block_counts = vec![[0u8; 8]; k];
        debug_assert!(q <= 8);
        for (item, &b) in assignment.iter().enumerate() {
            block_counts[b as usize][labels[item]] += 1;
        }
        let mut prod = 1.0;
        for bc in block_counts.iter() {
            let key: Vec<u8> = bc[..q].to_vec();
            prod *= table[&key];
        }
        prod
    }))
}

fn fill_count_table(
    li: &LevyIntensity,
    pairs: &[(LocationFn, u32)],
    counts: &mut Vec<u8>,
    idx: usize,
    table: &mut std::collections::HashMap<Vec<u8>, f64>,
) -> Result<()> {
    if idx == pairs.len() {
        let total: u32 = counts.iter().map(|&c| u32::from(c)).sum();
        if total == 0 {
            return Ok(());
        }
        let value = block_integral(li, pairs, counts, total)?;
        table.insert(counts.clone(), value);
        return Ok(());
    }
    for c in 0..=pairs[idx].1 {
        counts[idx] = c as u8;
        fill_count_table(li, pairs, counts, idx + 1, table)?;
    }
    counts[idx] = 0;
    Ok(())
}

fn block_integral(
    li: &LevyIntensity,
    pairs: &[(LocationFn, u32)],
    counts: &[u8],
    total: u32,
) -> Result<f64> {
    let (lo, hi) = li.base().support();
    // probe for divergence before quadrature
    li.kappa(total, 0.5 * (lo + hi))?;
    let f = |y: f64| {
        let mut v = li.kappa(total, y).unwrap_or(f64::NAN) * li.base().density(y);
        for (l, &c) in counts.iter().enumerate() {
            if c > 0 {
                v *= (pairs[l].0)(y).powi(i32::from(c));
            }
        }
        v
    };
    let v = quad::integrate(&f, lo, hi, 1e-10)?;
    if v.is_nan() {
        return Err(Error::Divergence {
            operation: "joint_linear_moments",
            family: li.family_name(),
        });
    }
    Ok(v)
}

/// Partition distribution induced by a finite-mass intensity:
/// probabilities proportional to `prod_j kappa_{e_j}(Omega)`.
pub fn partition_law(li: &LevyIntensity, n: usize) -> Result<Vec<(Partition, f64)>> {
    check_enum_size("partition_law", n, MAX_MOMENT_ORDER)?;
    let vals = block_values(li, Region::All, n)?;
    let mut items = Vec::new();
    let mut norm = KahanSum::new();
    for p in enumerate_partitions(n)? {
        let w: f64 = p.block_sizes().iter().map(|&e| vals[e as usize]).product();
        norm.add(w);
        items.push((p, w));
    }
    let z = norm.value();
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::numeric(
            "partition_law",
            format!("normalizer {z} is not positive and finite"),
        ));
    }
    for item in items.iter_mut() {
        item.1 /= z;
    }
    Ok(items)
}

/// Moments of linear functionals of a Poisson-Dirichlet random probability
/// measure: `sum_p EPPF(p) prod_j integral prod_l f_l(u)^{e^l_j} H(du)`.
pub fn pd_functional_moments(
    spec: &EppfSpec,
    base: &BaseMeasure,
    pairs: &[(LocationFn, u32)],
) -> Result<f64> {
    let op = "pd_functional_moments";
    if pairs.is_empty() {
        return Err(Error::EmptyInput {
            operation: op,
            what: "pairs",
        });
    }
    let n: usize = pairs.iter().map(|p| p.1 as usize).sum();
    check_enum_size(op, n, MAX_MOMENT_ORDER)?;
    let mut labels = Vec::with_capacity(n);
    for (l, p) in pairs.iter().enumerate() {
        labels.extend(std::iter::repeat(l).take(p.1 as usize));
    }
    let q = pairs.len();
    let (lo, hi) = base.support();
    let mut table: std::collections::HashMap<Vec<u8>, f64> = std::collections::HashMap::new();
    let mut stack = vec![0u8; q];
    fill_h_table(base, pairs, &mut stack, 0, &mut table, lo, hi)?;
    let mut acc = KahanSum::new();
    for p in enumerate_partitions(n)? {
        let w = eppf::eppf_eval(spec, &p);
        let mut block_counts = vec![[0u8; 8]; p.n_blocks()];
        for (item, &b) in p.assignment().iter().enumerate() {
            block_counts[b as usize][labels[item]] += 1;
        }
        let mut prod = w;
        for bc in block_counts.iter() {
            prod *= table[&bc[..q].to_vec()];
        }
        acc.add(prod);
    }
    Ok(acc.value())
}

fn fill_h_table(
    base: &BaseMeasure,
    pairs: &[(LocationFn, u32)],
    counts: &mut Vec<u8>,
    idx: usize,
    table: &mut std::collections::HashMap<Vec<u8>, f64>,
    lo: f64,
    hi: f64,
) -> Result<()> {
    if idx == pairs.len() {
        let total: u32 = counts.iter().map(|&c| u32::from(c)).sum();
        if total == 0 {
            return Ok(());
        }
        let f = |y: f64| {
            let mut v = base.h_density(y);
            for (l, &c) in counts.iter().enumerate() {
                if c > 0 {
                    v *= (pairs[l].0)(y).powi(i32::from(c));
                }
            }
            v
        };
        let v = quad::integrate(&f, lo, hi, 1e-11)?;
        table.insert(counts.clone(), v);
        return Ok(());
    }
    for c in 0..=pairs[idx].1 {
        counts[idx] = c as u8;
        fill_h_table(base, pairs, counts, idx + 1, table, lo, hi)?;
    }
    counts[idx] = 0;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BaseMeasure;
    use crate::levy::LevyIntensity;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn unit_base(mass: f64) -> BaseMeasure {
        BaseMeasure::uniform(0.0, 1.0, mass).unwrap()
    }

    fn poisson_li(lambda: f64) -> LevyIntensity {
        LevyIntensity::unit_jumps(1.0, unit_base(lambda)).unwrap()
    }

    #[test]
    fn poisson_third_raw_moment() {
        // nu(B) = 2, n = 3: 2 + 3*4 + 8 = 22
        let li = poisson_li(2.0);
        let m = measure_moment(&li, Region::All, 3).unwrap();
        assert_relative_eq!(m, 22.0, max_relative = 1e-12);
    }

    #[test]
    fn poisson_unit_rate_gives_bell_numbers() {
        let li = poisson_li(1.0);
        for n in 1..=6 {
            let m = measure_moment(&li, Region::All, n).unwrap();
            assert_relative_eq!(m, crate::partition::bell(n) as f64, max_relative = 1e-11);
        }
    }

    #[test]
    fn gamma_process_rising_factorials() {
        for &theta in &[0.5, 1.0, 2.5] {
            let li = LevyIntensity::gamma_process(unit_base(theta)).unwrap();
            for n in 1..=5 {
                let expect: f64 = (0..n).map(|j| theta + j as f64).product();
                let m = total_mass_moment(&li, n).unwrap();
                assert_relative_eq!(m, expect, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn gamma_second_moment_is_two() {
        let li = LevyIntensity::gamma_process(unit_base(1.0)).unwrap();
        assert_relative_eq!(total_mass_moment(&li, 2).unwrap(), 2.0, max_relative = 1e-10);
    }

    #[test]
    fn generalized_gamma_second_moment() {
        // alpha=0.5, b=1, mass 1: kappa_2 + kappa_1^2 = 0.5 + 1 = 1.5
        let li = LevyIntensity::generalized_gamma(0.5, 1.0, unit_base(1.0)).unwrap();
        assert_relative_eq!(total_mass_moment(&li, 2).unwrap(), 1.5, max_relative = 1e-9);
    }

    #[test]
    fn parallel_and_sequential_bit_identical() {
        let li = LevyIntensity::gamma_process(unit_base(1.5)).unwrap();
        let a = measure_moment(&li, Region::All, 7).unwrap();
        let b = measure_moment_seq(&li, Region::All, 7).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn partition_law_gamma_matches_ewens() {
        let li = LevyIntensity::gamma_process(unit_base(1.0)).unwrap();
        let law = partition_law(&li, 3).unwrap();
        let spec = EppfSpec::ewens(1.0).unwrap();
        let mut total = 0.0;
        for (p, prob) in &law {
            assert_relative_eq!(*prob, eppf::eppf_eval(&spec, p), max_relative = 1e-10);
            total += prob;
        }
        assert_relative_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn partition_law_normalizes_for_generalized_gamma() {
        let li = LevyIntensity::generalized_gamma(0.5, 1.0, unit_base(1.0)).unwrap();
        let law = partition_law(&li, 4).unwrap();
        let total: f64 = law.iter().map(|x| x.1).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-10);
        let single = partition_law(&li, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert_relative_eq!(single[0].1, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn joint_reduces_to_measure_moment() {
        let li = LevyIntensity::gamma_process(unit_base(1.0)).unwrap();
        let f: LocationFn = Arc::new(|y: f64| if y < 0.5 { 1.0 } else { 0.0 });
        let joint = joint_linear_moments(&li, &[(f, 3)]).unwrap();
        let direct = measure_moment(&li, Region::Interval { lo: 0.0, hi: 0.5 }, 3).unwrap();
        assert_relative_eq!(joint, direct, max_relative = 1e-8);
    }

    #[test]
    fn first_linear_moment() {
        let li = LevyIntensity::gamma_process(unit_base(1.0)).unwrap();
        let f: LocationFn = Arc::new(|y: f64| y);
        let m = joint_linear_moments(&li, &[(f, 1)]).unwrap();
        assert_relative_eq!(m, 0.5, max_relative = 1e-10);
    }

    #[test]
    fn disjoint_indicator_cross_moment() {
        let li = LevyIntensity::gamma_process(unit_base(1.0)).unwrap();
        let f: LocationFn = Arc::new(|y: f64| if y < 0.5 { 1.0 } else { 0.0 });
        let g: LocationFn = Arc::new(|y: f64| if y >= 0.5 { 1.0 } else { 0.0 });
        let m = joint_linear_moments(&li, &[(f, 1), (g, 1)]).unwrap();
        // merged partition contributes zero; split contributes (1/2)(1/2)
        assert_relative_eq!(m, 0.25, max_relative = 1e-9);
    }

    #[test]
    fn pd_functional_first_and_second_moment() {
        let spec = EppfSpec::ewens(1.0).unwrap();
        let base = unit_base(1.0);
        let f: LocationFn = Arc::new(|y: f64| y);
        let m1 = pd_functional_moments(&spec, &base, &[(f.clone(), 1)]).unwrap();
        assert_relative_eq!(m1, 0.5, max_relative = 1e-10);
        let m2 = pd_functional_moments(&spec, &base, &[(f, 2)]).unwrap();
        assert_relative_eq!(m2, 7.0 / 24.0, max_relative = 1e-9);
    }

    #[test]
    fn pd_constant_functional_is_one() {
        let spec = EppfSpec::two_param(0.3, 0.7).unwrap();
        let base = unit_base(1.0);
        let f: LocationFn = Arc::new(|_| 1.0);
        for n in 1..=4 {
            let m = pd_functional_moments(&spec, &base, &[(f.clone(), n)]).unwrap();
            assert_relative_eq!(m, 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn moment_monotone_in_order_when_mean_above_one() {
        let li = LevyIntensity::gamma_process(unit_base(1.5)).unwrap();
        let mut prev = 1.0;
        for n in 1..=6 {
            let m = total_mass_moment(&li, n).unwrap();
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn order_ceiling_enforced() {
        let li = poisson_li(1.0);
        assert!(measure_moment(&li, Region::All, 13).is_err());
        assert!(measure_moment(&li, Region::All, 0).is_err());
    }

    #[test]
    fn stable_divergence_propagates() {
        let li = LevyIntensity::stable(0.5, unit_base(1.0)).unwrap();
        assert!(matches!(
            total_mass_moment(&li, 2),
            Err(Error::Divergence { .. })
        ));
    }
}
