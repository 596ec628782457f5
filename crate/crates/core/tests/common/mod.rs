//! Test-side oracles. Nothing here calls into the library's relation,
//! closure or enumeration code; relations on at most 8 points are plain
//! `u64` bit matrices (bit `8 * i + j` is the pair `(i, j)`).

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

pub mod props;

use quleq::poset::Poset;
use quleq::rel::QuasiRel;

pub const W: usize = 8;

pub fn bit(i: usize, j: usize) -> u64 {
    1u64 << (W * i + j)
}

pub fn identity(n: usize) -> u64 {
    (0..n).fold(0, |r, i| r | bit(i, i))
}

pub fn full(n: usize) -> u64 {
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).fold(0, |r, (i, j)| r | bit(i, j))
}

/// Warshall's algorithm on the bit matrix.
pub fn closure(n: usize, mut r: u64) -> u64 {
    for k in 0..n {
        for i in 0..n {
            if r & bit(i, k) != 0 {
                let row_k = (r >> (W * k)) & 0xff;
                r |= row_k << (W * i);
            }
        }
    }
    r
}

pub fn is_transitive(n: usize, r: u64) -> bool {
    closure(n, r) == r
}

/// Number of quasiorders of an `n`-set by checking every reflexive relation.
pub fn count_quasiorders(n: usize) -> usize {
    let off: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let id = identity(n);
    (0u64..1 << off.len())
        .filter(|mask| {
            let r = off.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).fold(id, |r, (_, &(i, j))| r | bit(i, j));
            is_transitive(n, r)
        })
        .count()
}

/// The order of `p` rebuilt from its cover pairs.
pub fn order_of(p: &Poset) -> u64 {
    assert!(p.n() <= W);
    let r = p.covers().iter().fold(identity(p.n()), |r, &(a, b)| r | bit(a, b));
    closure(p.n(), r)
}

pub fn to_bits(r: &QuasiRel) -> u64 {
    r.pairs().fold(0, |acc, (i, j)| acc | bit(i, j))
}

/// Least quasiorder containing `mu` and `(a, b)`, by closing the union.
pub fn qum(n: usize, mu: u64, a: usize, b: usize) -> u64 {
    closure(n, mu | bit(a, b))
}

/// Closed form `μ ∪ (↓a × ↑b)` on an arbitrary-size poset, as pair lists.
pub fn qum_closed_form(p: &Poset, a: usize, b: usize) -> Vec<(usize, usize)> {
    let n = p.n();
    let mut leq = vec![vec![false; n]; n];
    for (i, row) in leq.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(x, y) in p.covers() {
        leq[x][y] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if leq[i][k] && leq[k][j] {
                    leq[i][j] = true;
                }
            }
        }
    }
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if leq[x][y] || (leq[x][a] && leq[b][y]) {
                out.push((x, y));
            }
        }
    }
    out
}

/// All quasiorders containing `mu`, by adding one pair at a time.
pub fn filter_elements(n: usize, mu: u64, cap: usize) -> Option<Vec<u64>> {
    let mut seen = HashSet::from([mu]);
    let mut queue = VecDeque::from([mu]);
    while let Some(r) = queue.pop_front() {
        for i in 0..n {
            for j in 0..n {
                if r & bit(i, j) == 0 {
                    let s = closure(n, r | bit(i, j));
                    if seen.insert(s) {
                        if seen.len() > cap {
                            return None;
                        }
                        queue.push_back(s);
                    }
                }
            }
        }
    }
    Some(seen.into_iter().collect())
}

/// Sublattice of `↑bottom` generated by `gens` together with the bounds.
pub fn generated(n: usize, bottom: u64, gens: &[u64], cap: usize) -> Option<HashSet<u64>> {
    let mut all: Vec<u64> = vec![bottom, full(n)];
    all.extend_from_slice(gens);
    let mut seen: HashSet<u64> = HashSet::new();
    all.retain(|x| seen.insert(*x));
    let mut next = 0;
    while next < all.len() {
        let x = all[next];
        for k in 0..=next {
            let y = all[k];
            for z in [x & y, closure(n, x | y)] {
                if seen.insert(z) {
                    if seen.len() > cap {
                        return None;
                    }
                    all.push(z);
                }
            }
        }
        next += 1;
    }
    Some(seen)
}

/// Does some `size`-subset of `elems` generate all of `elems`?
pub fn some_subset_generates(n: usize, bottom: u64, elems: &[u64], size: usize) -> bool {
    fn rec(n: usize, bottom: u64, elems: &[u64], size: usize, start: usize, pick: &mut Vec<u64>) -> bool {
        if pick.len() == size {
            return generated(n, bottom, pick, elems.len()).is_some_and(|g| g.len() == elems.len());
        }
        for i in start..elems.len() {
            pick.push(elems[i]);
            if rec(n, bottom, elems, size, i + 1, pick) {
                return true;
            }
            pick.pop();
        }
        false
    }
    rec(n, bottom, elems, size, 0, &mut Vec::new())
}

/// Brute-force satisfiability over all assignments.
pub fn sat(m: usize, pos: &[[usize; 3]], neg: &[[usize; 2]]) -> Option<Vec<bool>> {
    (0u32..1 << m).map(|mask| (1..=m).map(|i| mask >> (i - 1) & 1 == 1).collect::<Vec<_>>()).find(|v| {
        pos.iter().all(|c| c.iter().any(|&i| v[i - 1])) && neg.iter().all(|c| c.iter().any(|&i| !v[i - 1]))
    })
}

/// Intersection of the generators containing `i`.
pub fn recover_singleton(gens: &[Vec<usize>], i: usize, m: usize) -> Vec<usize> {
    let mut acc: Vec<usize> = (1..=m).collect();
    for g in gens.iter().filter(|g| g.contains(&i)) {
        acc.retain(|x| g.contains(x));
    }
    acc
}
