//! Canonical set partitions of `{1..n}` in restricted-growth form, with
//! exhaustive enumeration and Bell numbers.
//!
//! A partition stores its restricted-growth string (item `i` maps to the
//! index of its block, blocks numbered by first appearance) together with the
//! block sizes. Equality and hashing use the restricted-growth string, which
//! is unique per partition.

use crate::error::{Error, Result};

/// Enumeration ceiling; Bell(14) is about 1.9e8 which is the largest count
/// we are willing to stream through.
pub const MAX_ENUM_N: usize = 14;

/// A set partition of `{1..n}` in canonical (restricted-growth) form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    assignment: Vec<u32>,
    block_sizes: Vec<u32>,
}

impl Partition {
    /// Build from a restricted-growth string. The first item must sit in
    /// block 0 and each later index may exceed the running maximum by at
    /// most one.
    pub fn from_assignment(assignment: Vec<u32>) -> Result<Self> {
        let op = "Partition::from_assignment";
        if assignment.is_empty() {
            return Err(Error::EmptyInput {
                operation: op,
                what: "assignment",
            });
        }
        if assignment[0] != 0 {
            return Err(Error::numeric(op, "first item must open block 0"));
        }
        let mut max_seen = 0u32;
        for (i, &a) in assignment.iter().enumerate().skip(1) {
            if a > max_seen + 1 {
                return Err(Error::numeric(
                    op,
                    format!("index {a} at position {i} breaks restricted growth"),
                ));
            }
            max_seen = max_seen.max(a);
        }
        let n_blocks = max_seen as usize + 1;
        let mut block_sizes = vec![0u32; n_blocks];
        for &a in &assignment {
            block_sizes[a as usize] += 1;
        }
        Ok(Self {
            assignment,
            block_sizes,
        })
    }

    /// Build from explicit blocks of 0-based item indices; blocks are
    /// re-labeled by first appearance.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let op = "Partition::from_blocks";
        let mut assignment = vec![u32::MAX; n];
        for (label, block) in blocks.iter().enumerate() {
            for &item in block {
                if item >= n || assignment[item] != u32::MAX {
                    return Err(Error::numeric(op, "blocks must partition 0..n"));
                }
                assignment[item] = label as u32;
            }
        }
        if assignment.iter().any(|&a| a == u32::MAX) {
            return Err(Error::numeric(op, "blocks must cover every item"));
        }
        // canonicalize labels by first appearance
        let mut relabel = vec![u32::MAX; blocks.len()];
        let mut next = 0u32;
        for a in assignment.iter_mut() {
            let old = *a as usize;
            if relabel[old] == u32::MAX {
                relabel[old] = next;
                next += 1;
            }
            *a = relabel[old];
        }
        Self::from_assignment(assignment)
    }

    /// The one-block partition of a single item.
    pub fn singleton() -> Self {
        Self {
            assignment: vec![0],
            block_sizes: vec![1],
        }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn block_sizes(&self) -> &[u32] {
        &self.block_sizes
    }

    /// Items of each block, in block order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_blocks()];
        for (i, &a) in self.assignment.iter().enumerate() {
            out[a as usize].push(i);
        }
        out
    }

    /// Extend with one more item seated in `block` (an existing index, or
    /// `n_blocks()` for a new block).
    pub fn extended(&self, block: usize) -> Self {
        let mut assignment = self.assignment.clone();
        assignment.push(block as u32);
        let mut block_sizes = self.block_sizes.clone();
        if block == block_sizes.len() {
            block_sizes.push(1);
        } else {
            block_sizes[block] += 1;
        }
        Self {
            assignment,
            block_sizes,
        }
    }

    /// Relabel after permuting items: item `i` of the result is item
    /// `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let reordered: Vec<u32> = perm.iter().map(|&i| self.assignment[i]).collect();
        // renumber by first appearance
        let mut relabel = vec![u32::MAX; self.n_blocks()];
        let mut next = 0u32;
        let mut canon = Vec::with_capacity(reordered.len());
        for a in reordered {
            let old = a as usize;
            if relabel[old] == u32::MAX {
                relabel[old] = next;
                next += 1;
            }
            canon.push(relabel[old]);
        }
        Self::from_assignment(canon)
    }
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let blocks = self.blocks();
        let parts: Vec<String> = blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|i| (i + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        write!(f, "{{{}}}", parts.join("|"))
    }
}

/// Bell numbers B(0)..B(25); B(25) still fits in u128.
pub fn bell(n: usize) -> u128 {
    // Bell triangle
    assert!(n <= 25, "bell table covers n <= 25");
    let mut prev: Vec<u128> = vec![1];
    let mut bn: u128 = 1; // B(0)
    for _ in 0..n {
        let mut row = Vec::with_capacity(prev.len() + 1);
        row.push(*prev.last().unwrap());
        for &p in &prev {
            let last = *row.last().unwrap();
            row.push(last + p);
        }
        bn = row[0];
        prev = row;
    }
    bn
}

/// Validate an enumeration size request.
pub fn check_enum_size(operation: &'static str, n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(Error::SizeLimit {
            operation,
            what: "n",
            got: n,
            max,
        });
    }
    Ok(())
}

/// Lazy lexicographic iterator over all restricted-growth strings of length
/// `n`. Yields `&[u32]` views through the visitor to avoid allocation.
pub struct RgsIter {
    a: Vec<u32>,
    m: Vec<u32>, // m[i] = max(a[0..=i])
    done: bool,
    fresh: bool,
}

impl RgsIter {
    pub fn new(n: usize) -> Self {
        Self {
            a: vec![0; n],
            m: vec![0; n],
            done: n == 0,
            fresh: true,
        }
    }

    /// Advance to the next string; returns current on success.
    pub fn next_slice(&mut self) -> Option<&[u32]> {
        if self.done {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            return Some(&self.a);
        }
        let n = self.a.len();
        // find rightmost position (>=1) that can be incremented
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.a[i] <= self.m[i - 1] {
                break;
            }
        }
        self.a[i] += 1;
        self.m[i] = self.m[i - 1].max(self.a[i]);
        for j in i + 1..n {
            self.a[j] = 0;
            self.m[j] = self.m[j - 1];
        }
        Some(&self.a)
    }
}

impl Iterator for RgsIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        let slice = self.next_slice()?.to_vec();
        Some(Partition::from_assignment(slice).expect("iterator emits valid strings"))
    }
}

/// Every set partition of `{1..n}` in lexicographic restricted-growth order.
/// The iterator is lazy; `n` may go up to [`MAX_ENUM_N`].
pub fn enumerate_partitions(n: usize) -> Result<RgsIter> {
    check_enum_size("enumerate_partitions", n, MAX_ENUM_N)?;
    Ok(RgsIter::new(n))
}

/// Prefixes of restricted-growth strings of length `min(n, depth)`, used to
/// shard an enumeration: every full string extends exactly one prefix, and
/// prefixes are produced in lexicographic order so a shard-by-shard reduce
/// reproduces the sequential order.
pub fn shard_prefixes(n: usize, depth: usize) -> Vec<Vec<u32>> {
    let d = depth.min(n).max(1);
    let mut out = Vec::new();
    let mut iter = RgsIter::new(d);
    while let Some(p) = iter.next_slice() {
        out.push(p.to_vec());
    }
    out
}

/// Visit every restricted-growth string of length `n` extending `prefix`,
/// in lexicographic order.
pub fn for_each_completion(prefix: &[u32], n: usize, mut visit: impl FnMut(&[u32])) {
    debug_assert!(!prefix.is_empty() && prefix.len() <= n);
    let mut a = vec![0u32; n];
    let mut m = vec![0u32; n];
    a[..prefix.len()].copy_from_slice(prefix);
    let mut running = 0;
    for i in 0..prefix.len() {
        running = running.max(a[i]);
        m[i] = running;
    }
    for i in prefix.len()..n {
        a[i] = 0;
        m[i] = m[i - 1];
    }
    let lo = prefix.len(); // positions below lo are frozen
    loop {
        visit(&a);
        // advance within positions lo..n
        let mut i = n;
        let found = loop {
            if i <= lo {
                break false;
            }
            i -= 1;
            if a[i] <= m[i - 1] {
                break true;
            }
        };
        if !found {
            return;
        }
        a[i] += 1;
        m[i] = m[i - 1].max(a[i]);
        for j in i + 1..n {
            a[j] = 0;
            m[j] = m[j - 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_small_values() {
        // oracle: the Bell recurrence B(n+1) = sum C(n,k) B(k)
        let mut oracle = vec![1u128; 1];
        for n in 0..14 {
            let mut next = 0u128;
            let mut c = 1u128; // C(n, k)
            for k in 0..=n {
                next += c * oracle[k];
                c = c * (n as u128 - k as u128) / (k as u128 + 1);
            }
            oracle.push(next);
        }
        for (n, &b) in oracle.iter().enumerate() {
            assert_eq!(bell(n), b, "bell({n})");
        }
        assert_eq!(bell(3), 5);
        assert_eq!(bell(5), 52);
    }

    #[test]
    fn enumeration_counts_match_bell() {
        for n in 1..=9 {
            let count = enumerate_partitions(n).unwrap().count() as u128;
            assert_eq!(count, bell(n), "n={n}");
        }
    }

    #[test]
    fn enumeration_is_lexicographic_and_unique() {
        let all: Vec<Partition> = enumerate_partitions(4).unwrap().collect();
        assert_eq!(all.len(), 15);
        for w in all.windows(2) {
            assert!(w[0].assignment() < w[1].assignment());
        }
        assert_eq!(all[0].n_blocks(), 1);
        assert_eq!(all.last().unwrap().n_blocks(), 4);
    }

    #[test]
    fn single_item() {
        let all: Vec<Partition> = enumerate_partitions(1).unwrap().collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0], Partition::singleton());
    }

    #[test]
    fn size_limits_enforced() {
        assert!(enumerate_partitions(0).is_err());
        assert!(enumerate_partitions(15).is_err());
    }

    #[test]
    fn invalid_growth_string_rejected() {
        assert!(Partition::from_assignment(vec![0, 2]).is_err());
        assert!(Partition::from_assignment(vec![1]).is_err());
    }

    #[test]
    fn blocks_round_trip() {
        let p = Partition::from_blocks(4, &[vec![1, 3], vec![0, 2]]).unwrap();
        // canonical labels start at item 0
        assert_eq!(p.assignment(), &[0, 1, 0, 1]);
        assert_eq!(p.block_sizes(), &[2, 2]);
        assert_eq!(p.to_string(), "{1,3|2,4}");
    }

    #[test]
    fn sharded_enumeration_covers_everything() {
        let n = 6;
        let mut direct = Vec::new();
        let mut it = RgsIter::new(n);
        while let Some(s) = it.next_slice() {
            direct.push(s.to_vec());
        }
        let mut sharded = Vec::new();
        for prefix in shard_prefixes(n, 3) {
            for_each_completion(&prefix, n, |s| sharded.push(s.to_vec()));
        }
        assert_eq!(direct, sharded);
    }

    #[test]
    fn permutation_preserves_block_size_multiset() {
        let p = Partition::from_assignment(vec![0, 0, 1, 2]).unwrap();
        let q = p.permuted(&[3, 2, 1, 0]).unwrap();
        let mut a = p.block_sizes().to_vec();
        let mut b = q.block_sizes().to_vec();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }
}
