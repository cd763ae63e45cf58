//! Non-crossing partitions, non-crossing pair partitions and the Kreweras
//! complement.
//!
//! Ground sets are `{1, …, n}` (1-based, as in the combinatorics literature).
//! Canonical forms: pairs are sorted by their first element, blocks are
//! sorted internally and ordered by their minimum. Kreweras blocks are the
//! exception: they are ordered by their *maximum*, which is the labeling
//! used by the moment formula.

use std::fmt;

use crate::error::{Error, Result};

/// Largest `m` accepted by [`enumerate_nc2`] (|NC₂(20)| = 16796).
pub const DEFAULT_NC2_LIMIT: usize = 10;
/// Largest `n` accepted by [`enumerate_nc`] (|NC(12)| = 208012).
pub const DEFAULT_NC_LIMIT: usize = 12;

/// A non-crossing perfect matching of `{1, …, 2m}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairPartition {
    m: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    /// Validates and canonicalizes a list of pairs over `{1, …, 2·len}`.
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Malformed("a pair partition needs at least one pair".into()));
        }
        let m = pairs.len();
        let mut pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort_unstable();
        let mut seen = vec![false; 2 * m + 1];
        for &(u, v) in &pairs {
            for x in [u, v] {
                if x == 0 || x > 2 * m || seen[x] {
                    return Err(Error::Malformed(format!(
                        "pairs do not form a perfect matching of 1..={}",
                        2 * m
                    )));
                }
                seen[x] = true;
            }
        }
        let blocks: Vec<Vec<usize>> = pairs.iter().map(|&(u, v)| vec![u, v]).collect();
        if !is_noncrossing(&blocks, 2 * m)? {
            return Err(Error::Malformed("pair partition is crossing".into()));
        }
        Ok(Self { m, pairs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `partner[i]` is the element matched with `i`; index 0 is unused.
    pub fn partner_table(&self) -> Vec<usize> {
        let mut p = vec![0; 2 * self.m + 1];
        for &(u, v) in &self.pairs {
            p[u] = v;
            p[v] = u;
        }
        p
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        self.pairs.iter().map(|&(u, v)| vec![u, v]).collect()
    }
}

impl fmt::Display for PairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (u, v) in &self.pairs {
            write!(f, "({u} {v})")?;
        }
        Ok(())
    }
}

/// A non-crossing partition of `{1, …, n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NonCrossingPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl NonCrossingPartition {
    pub fn new(blocks: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        if !is_noncrossing(&blocks, n)? {
            return Err(Error::Malformed("partition is crossing".into()));
        }
        Ok(Self {
            n,
            blocks: canonical_blocks(blocks),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Relabels every element `i` as `i + by` (mod n, kept in `1..=n`).
    pub fn rotated(&self, by: isize) -> Self {
        let n = self.n as isize;
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&i| ((i as isize - 1 + by).rem_euclid(n) + 1) as usize)
                    .collect()
            })
            .collect();
        Self {
            n: self.n,
            blocks: canonical_blocks(blocks),
        }
    }
}

impl fmt::Display for NonCrossingPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_blocks(f, &self.blocks)
    }
}

/// Kreweras complement of a pair partition together with the block
/// labeling `T_σ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KrewerasLabeling {
    source: PairPartition,
    blocks: Vec<Vec<usize>>,
    tsigma: Vec<usize>,
}

impl KrewerasLabeling {
    pub fn source(&self) -> &PairPartition {
        &self.source
    }

    /// `V₁, …, V_{m+1}`, increasing in their maximal element.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// `tsigma()[i - 1]` is the 1-based index of the block containing `i`.
    pub fn tsigma(&self) -> &[usize] {
        &self.tsigma
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// One edge per pair `(u, v)` of σ, joining the 0-based block indices
    /// `T(u) - 1` and `T(v) - 1`. The resulting graph on `m + 1` vertices is
    /// a tree.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.source
            .pairs()
            .iter()
            .map(|&(u, v)| (self.tsigma[u - 1] - 1, self.tsigma[v - 1] - 1))
            .collect()
    }
}

impl fmt::Display for KrewerasLabeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_blocks(f, &self.blocks)
    }
}

fn write_blocks(f: &mut fmt::Formatter<'_>, blocks: &[Vec<usize>]) -> fmt::Result {
    for b in blocks {
        write!(f, "{{")?;
        for (k, x) in b.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")?;
    }
    Ok(())
}

fn canonical_blocks(mut blocks: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.sort_unstable_by_key(|b| b[0]);
    blocks
}

/// Whether `blocks` (which must partition `{1, …, n}`) is non-crossing.
pub fn is_noncrossing(blocks: &[Vec<usize>], n: usize) -> Result<bool> {
    let owner = block_owner(blocks, n)?;
    let span: Vec<(usize, usize)> = blocks
        .iter()
        .map(|b| (*b.iter().min().unwrap(), *b.iter().max().unwrap()))
        .collect();
    for (id, b) in blocks.iter().enumerate() {
        let mut sorted = b.clone();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            let (a, c) = (w[0], w[1]);
            for &other in &owner[a + 1..c] {
                if other != id && (span[other].0 < a || span[other].1 > c) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn block_owner(blocks: &[Vec<usize>], n: usize) -> Result<Vec<usize>> {
    let mut owner = vec![usize::MAX; n + 1];
    for (id, b) in blocks.iter().enumerate() {
        if b.is_empty() {
            return Err(Error::Malformed("empty block".into()));
        }
        for &x in b {
            if x == 0 || x > n || owner[x] != usize::MAX {
                return Err(Error::Malformed(format!("blocks do not partition 1..={n}")));
            }
            owner[x] = id;
        }
    }
    if owner[1..].contains(&usize::MAX) {
        return Err(Error::Malformed(format!("blocks do not cover 1..={n}")));
    }
    Ok(owner)
}

/// Whether `primal ∪ dual` is non-crossing on the interleaved ground set
/// `1, 1̄, 2, 2̄, …, n, n̄` (element `i` sits at position `2i − 1`, `ī` at `2i`).
pub fn is_noncrossing_with_dual(
    primal: &[Vec<usize>],
    dual: &[Vec<usize>],
    n: usize,
) -> Result<bool> {
    let mut joint: Vec<Vec<usize>> = primal
        .iter()
        .map(|b| b.iter().map(|&i| 2 * i - 1).collect())
        .collect();
    joint.extend(dual.iter().map(|b| b.iter().map(|&i| 2 * i).collect()));
    is_noncrossing(&joint, 2 * n)
}

/// All of NC₂(2m) in lexicographic order, with the default size limit.
pub fn enumerate_nc2(m: usize) -> Result<Vec<PairPartition>> {
    enumerate_nc2_within(m, DEFAULT_NC2_LIMIT)
}

pub fn enumerate_nc2_within(m: usize, limit: usize) -> Result<Vec<PairPartition>> {
    if m == 0 {
        return Err(Error::Domain("m must be positive".into()));
    }
    if m > limit {
        return Err(Error::SizeLimit {
            what: "pair-partition half size m",
            requested: m,
            limit,
        });
    }
    Ok(matchings(1, 2 * m)
        .into_iter()
        .map(|pairs| PairPartition { m, pairs })
        .collect())
}

fn matchings(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
    if lo > hi {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for j in (lo + 1..=hi).step_by(2) {
        let inside = matchings(lo + 1, j - 1);
        let outside = matchings(j + 1, hi);
        for a in &inside {
            for b in &outside {
                let mut v = Vec::with_capacity(1 + a.len() + b.len());
                v.push((lo, j));
                v.extend_from_slice(a);
                v.extend_from_slice(b);
                out.push(v);
            }
        }
    }
    out
}

/// All of NC(n) in lexicographic order of canonical block lists, with the
/// default size limit.
pub fn enumerate_nc(n: usize) -> Result<Vec<NonCrossingPartition>> {
    enumerate_nc_within(n, DEFAULT_NC_LIMIT)
}

pub fn enumerate_nc_within(n: usize, limit: usize) -> Result<Vec<NonCrossingPartition>> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    if n > limit {
        return Err(Error::SizeLimit {
            what: "non-crossing partition size n",
            requested: n,
            limit,
        });
    }
    let elems: Vec<usize> = (1..=n).collect();
    let mut all: Vec<NonCrossingPartition> = nc_of(&elems)
        .into_iter()
        .map(|blocks| NonCrossingPartition {
            n,
            blocks: canonical_blocks(blocks),
        })
        .collect();
    all.sort_unstable();
    Ok(all)
}

// Non-crossing partitions of a sorted run of elements: choose the block of the
// first element; the gaps it leaves are partitioned independently.
fn nc_of(elems: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let Some((&first, rest)) = elems.split_first() else {
        return vec![Vec::new()];
    };
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << rest.len()) {
        let mut block = vec![first];
        let mut segments: Vec<Vec<usize>> = vec![Vec::new()];
        for (k, &x) in rest.iter().enumerate() {
            if mask & (1 << k) != 0 {
                block.push(x);
                segments.push(Vec::new());
            } else {
                segments.last_mut().unwrap().push(x);
            }
        }
        let mut partial: Vec<Vec<Vec<usize>>> = vec![vec![block]];
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            let parts = nc_of(seg);
            let mut next = Vec::with_capacity(partial.len() * parts.len());
            for p in &partial {
                for q in &parts {
                    let mut v = p.clone();
                    v.extend(q.iter().cloned());
                    next.push(v);
                }
            }
            partial = next;
        }
        out.extend(partial);
    }
    out
}

/// Kreweras complement of σ ∈ NC₂(2m), blocks ordered by maximal element.
///
/// With γ the cycle `i ↦ i + 1 (mod 2m)`, the dual point `ī` is joined to
/// the dual point of `σ(γ(i))`; the cycles of `σ ∘ γ` are the blocks.
pub fn kreweras(sigma: &PairPartition) -> KrewerasLabeling {
    let n = 2 * sigma.m;
    let partner = sigma.partner_table();
    let next = |i: usize| partner[i % n + 1];
    let mut blocks = cycles(n, next);
    blocks.sort_unstable_by_key(|b| *b.last().unwrap());
    let mut tsigma = vec![0; n];
    for (j, b) in blocks.iter().enumerate() {
        for &i in b {
            tsigma[i - 1] = j + 1;
        }
    }
    KrewerasLabeling {
        source: sigma.clone(),
        blocks,
        tsigma,
    }
}

/// Kreweras complement on NC(n): the blocks of `π⁻¹ ∘ γ`, where π is read as
/// the permutation cycling each block in increasing order.
pub fn kreweras_complement(pi: &NonCrossingPartition) -> NonCrossingPartition {
    let n = pi.n;
    let mut inv = vec![0; n + 1];
    for b in &pi.blocks {
        for (k, &x) in b.iter().enumerate() {
            let succ = b[(k + 1) % b.len()];
            inv[succ] = x;
        }
    }
    let blocks = cycles(n, |i| inv[i % n + 1]);
    NonCrossingPartition {
        n,
        blocks: canonical_blocks(blocks),
    }
}

fn cycles(n: usize, next: impl Fn(usize) -> usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n + 1];
    let mut out = Vec::new();
    for start in 1..=n {
        if seen[start] {
            continue;
        }
        let mut cyc = Vec::new();
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            cyc.push(i);
            i = next(i);
        }
        cyc.sort_unstable();
        out.push(cyc);
    }
    out
}

/// The n-th Catalan number, `binomial(2n, n) / (n + 1)`, for `n ≤ 30`.
pub fn catalan(n: usize) -> Result<u64> {
    if n > 30 {
        return Err(Error::SizeLimit {
            what: "Catalan index",
            requested: n,
            limit: 30,
        });
    }
    let mut c: u128 = 1;
    for k in 0..n as u128 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    Ok(c as u64)
}
