//! Two-implementation oracle for the partition-sum engine: an independent
//! recursive enumerator over restricted-growth strings, compared against
//! the engine's sharded streaming enumeration. With integer-valued block
//! terms every addition is exact, so bit equality certifies that the two
//! enumerations produce exactly the same multiset of partition terms.

use ppcalc::base::BaseMeasure;
use ppcalc::levy::LevyIntensity;
use ppcalc::moments::{self, Region};
use ppcalc::numeric::kahan::KahanSum;

/// Depth-first recursion over block extensions in lexicographic
/// restricted-growth order, structurally unlike the library's in-place
/// string iterator.
fn recurse(
    sizes: &mut Vec<u32>,
    remaining: usize,
    acc: &mut KahanSum,
    term: &dyn Fn(&[u32]) -> f64,
) {
    if remaining == 0 {
        acc.add(term(sizes));
        return;
    }
    for b in 0..sizes.len() {
        sizes[b] += 1;
        recurse(sizes, remaining - 1, acc, term);
        sizes[b] -= 1;
    }
    sizes.push(1);
    recurse(sizes, remaining - 1, acc, term);
    sizes.pop();
}

fn recursive_sum(n: usize, term: &dyn Fn(&[u32]) -> f64) -> f64 {
    let mut acc = KahanSum::new();
    let mut sizes = vec![1u32];
    recurse(&mut sizes, n - 1, &mut acc, term);
    acc.value()
}

#[test]
fn partition_counts_match() {
    for n in 1..=8 {
        let count = recursive_sum(n, &|_| 1.0);
        assert_eq!(count, ppcalc::partition::bell(n) as f64);
    }
}

#[test]
fn engine_equals_recursive_oracle_exactly_on_integer_terms() {
    // unit jumps with integer rate: every partition term is a power of two,
    // all sums stay below 2^53, so float addition is exact and any
    // difference in the enumerated term multisets would change the bits
    let lambda = 2.0;
    let li = LevyIntensity::unit_jumps(1.0, BaseMeasure::uniform(0.0, 1.0, lambda).unwrap())
        .unwrap();
    for n in 1..=8usize {
        let engine = moments::measure_moment(&li, Region::All, n).unwrap();
        let oracle = recursive_sum(n, &|sizes| lambda.powi(sizes.len() as i32));
        assert_eq!(
            engine.to_bits(),
            oracle.to_bits(),
            "n = {n}: engine {engine:.17e} vs oracle {oracle:.17e}"
        );
    }
}

#[test]
fn engine_matches_recursive_oracle_on_continuous_terms() {
    // gamma-process block values: the two accumulation protocols (sharded
    // merge vs a single pass) may differ in the last bits only
    let theta = 1.3f64;
    let li =
        LevyIntensity::gamma_process(BaseMeasure::uniform(0.0, 1.0, theta).unwrap()).unwrap();
    for n in 1..=8usize {
        let mut vals = vec![0.0f64; n + 1];
        for e in 1..=n {
            vals[e] = li.kappa_total(e as u32, None).unwrap();
        }
        let engine = moments::measure_moment(&li, Region::All, n).unwrap();
        let oracle = recursive_sum(n, &|sizes| {
            sizes.iter().map(|&e| vals[e as usize]).product()
        });
        let rel = (engine - oracle).abs() / oracle;
        assert!(rel < 1e-14, "n = {n}: rel {rel:.2e}");
    }
}
