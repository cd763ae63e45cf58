//! Brute-force oracles shared by the integration and acceptance tests. None of
//! these reuse library code paths.
#![allow(dead_code)]

/// All set partitions of {1..n} as restricted growth strings (label per element).
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for l in 0..=max + 1 {
            cur.push(l);
            go(n, cur, max.max(l), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut cur = vec![0];
    go(n, &mut cur, 0, &mut out);
    out
}

/// Labels to blocks of 1-based elements, each sorted, ordered by first element.
pub fn labels_to_blocks(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut blocks = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        blocks[l].push(i + 1);
    }
    blocks
}

/// Crossing test by the definition: a<b<c<d with a,c in one block and b,d in another.
pub fn crosses_by_definition(labels: &[usize]) -> bool {
    let n = labels.len();
    for a in 0..n {
        for b in a + 1..n {
            if labels[b] == labels[a] {
                continue;
            }
            for c in b + 1..n {
                if labels[c] != labels[a] {
                    continue;
                }
                for d in c + 1..n {
                    if labels[d] == labels[b] {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Arcs joining consecutive elements of each block; a partition is
/// non-crossing exactly when no two arcs of different blocks interleave.
pub fn crosses_by_arcs(labels: &[usize]) -> bool {
    let mut last = vec![usize::MAX; labels.len()];
    let mut arcs = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if last[l] != usize::MAX {
            arcs.push((last[l], i, l));
        }
        last[l] = i;
    }
    for (x, &(a, c, l1)) in arcs.iter().enumerate() {
        for &(b, d, l2) in &arcs[x + 1..] {
            if l1 != l2 && ((a < b && b < c && c < d) || (b < a && a < d && d < c)) {
                return true;
            }
        }
    }
    false
}

/// All perfect matchings of {1..2m}.
pub fn matchings(m: usize) -> Vec<Vec<(usize, usize)>> {
    fn go(free: Vec<usize>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if free.is_empty() {
            out.push(cur.clone());
            return;
        }
        let a = free[0];
        for k in 1..free.len() {
            let b = free[k];
            let rest: Vec<usize> = free.iter().copied().filter(|&x| x != a && x != b).collect();
            cur.push((a, b));
            go(rest, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go((1..=2 * m).collect(), &mut Vec::new(), &mut out);
    out
}

/// Pairs (a,c),(b,d) with a<b<c<d.
pub fn matching_crosses(pairs: &[(usize, usize)]) -> bool {
    pairs.iter().any(|&(a, c)| pairs.iter().any(|&(b, d)| a < b && b < c && c < d))
}

/// Maximal partition τ of the dual points such that σ ∪ τ is non-crossing on
/// the interleaved ground set 1 < 1̄ < 2 < 2̄ < …, found by scanning every
/// partition of the dual points. Returns the blocks of τ (dual point ī written
/// as i) together with whether the maximum is a greatest element.
pub fn kreweras_by_search(pairs: &[(usize, usize)], m: usize) -> (Vec<Vec<usize>>, bool) {
    let n = 2 * m;
    let mut valid: Vec<Vec<usize>> = Vec::new();
    let mut combined = vec![0; 2 * n];
    for (k, &(u, v)) in pairs.iter().enumerate() {
        combined[2 * (u - 1)] = k;
        combined[2 * (v - 1)] = k;
    }
    for tau in set_partitions(n) {
        for (i, &l) in tau.iter().enumerate() {
            combined[2 * i + 1] = m + l;
        }
        if !crosses_by_arcs(&combined) {
            valid.push(tau);
        }
    }
    let fewest = valid.iter().map(|t| t.iter().max().unwrap() + 1).min().unwrap();
    let coarsest: Vec<&Vec<usize>> = valid.iter().filter(|t| t.iter().max().unwrap() + 1 == fewest).collect();
    let top = coarsest[0];
    // every valid τ must refine the coarsest one
    let greatest = coarsest.len() == 1
        && valid.iter().all(|t| {
            (0..n).all(|i| (0..n).all(|j| t[i] != t[j] || top[i] == top[j]))
        });
    (labels_to_blocks(top), greatest)
}

pub fn catalan(n: u64) -> u64 {
    let mut c = 1u64;
    for k in 0..n {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}

/// Even moments of μ_f on a G-point midpoint grid by the operator recursion
/// φ₀ = 1, φₙ(x) = Σ_{k<n} (Kφ_k)(x) φ_{n−1−k}(x), m_{2n} = ∫ φₙ, where
/// (Kφ)(x) = ∫ f²(x,y) φ(y) dy.
pub fn operator_recursion(f: impl Fn(f64, f64) -> f64, grid: usize, n: usize) -> Vec<f64> {
    let pts: Vec<f64> = (0..grid).map(|i| (i as f64 + 0.5) / grid as f64).collect();
    let kern: Vec<Vec<f64>> = pts.iter().map(|&x| pts.iter().map(|&y| f(x, y).powi(2)).collect()).collect();
    let apply = |phi: &[f64]| -> Vec<f64> {
        kern.iter()
            .map(|row| row.iter().zip(phi).map(|(k, p)| k * p).sum::<f64>() / grid as f64)
            .collect()
    };
    let mut phis = vec![vec![1.0; grid]];
    let mut kphis = vec![apply(&phis[0])];
    let mut out = Vec::new();
    for j in 1..=n {
        let mut next = vec![0.0; grid];
        for k in 0..j {
            for x in 0..grid {
                next[x] += kphis[k][x] * phis[j - 1 - k][x];
            }
        }
        out.push(next.iter().sum::<f64>() / grid as f64);
        kphis.push(apply(&next));
        phis.push(next);
    }
    out
}
