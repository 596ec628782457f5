//! The lattice interface shared by term evaluation, closure and equation
//! solving, with the concrete lattices used throughout the crate.

use std::fmt::Debug;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::rel::QuasiRel;

pub trait Lattice {
    type Elem: Clone + Eq + Hash + Debug;

    fn meet(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn join(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn bottom(&self) -> Self::Elem;
    fn top(&self) -> Self::Elem;

    fn leq(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        self.meet(a, b) == *a
    }
}

/// `Quo(n)`: all quasiorders of an `n`-element set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuoLattice {
    pub n: usize,
}

impl Lattice for QuoLattice {
    type Elem = QuasiRel;

    fn meet(&self, a: &QuasiRel, b: &QuasiRel) -> QuasiRel {
        a.meet(b)
    }

    fn join(&self, a: &QuasiRel, b: &QuasiRel) -> QuasiRel {
        a.join(b)
    }

    fn bottom(&self) -> QuasiRel {
        QuasiRel::identity(self.n)
    }

    fn top(&self) -> QuasiRel {
        QuasiRel::full(self.n)
    }

    fn leq(&self, a: &QuasiRel, b: &QuasiRel) -> bool {
        a.is_subset(b)
    }
}

/// The filter `↑μ` of `Quo(n)`. Only the bottom differs from [`QuoLattice`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuleqLattice {
    pub mu: QuasiRel,
}

impl QuleqLattice {
    pub fn new(mu: QuasiRel) -> Self {
        QuleqLattice { mu }
    }
}

impl Lattice for QuleqLattice {
    type Elem = QuasiRel;

    fn meet(&self, a: &QuasiRel, b: &QuasiRel) -> QuasiRel {
        a.meet(b)
    }

    fn join(&self, a: &QuasiRel, b: &QuasiRel) -> QuasiRel {
        a.join(b)
    }

    fn bottom(&self) -> QuasiRel {
        self.mu.clone()
    }

    fn top(&self) -> QuasiRel {
        QuasiRel::full(self.mu.n())
    }

    fn leq(&self, a: &QuasiRel, b: &QuasiRel) -> bool {
        a.is_subset(b)
    }
}

/// A finite lattice given by its order, with meet and join tables derived
/// from it. Elements are `0..size`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableLattice {
    name: String,
    labels: Vec<String>,
    leq: Vec<bool>,
    meet: Vec<usize>,
    join: Vec<usize>,
    bottom: usize,
    top: usize,
}

impl TableLattice {
    /// Builds the lattice from an order matrix `leq[a * size + b]`.
    /// Fails if the order is not a partial order or some pair lacks a
    /// meet or a join.
    pub fn from_order(name: &str, labels: Vec<String>, leq: Vec<bool>) -> Result<Self> {
        let n = labels.len();
        if n == 0 || leq.len() != n * n {
            return Err(Error::Precondition("order matrix must be nonempty and square".into()));
        }
        let le = |a: usize, b: usize| leq[a * n + b];
        for a in 0..n {
            if !le(a, a) {
                return Err(Error::Precondition(format!("order not reflexive at {a}")));
            }
            for b in 0..n {
                if a != b && le(a, b) && le(b, a) {
                    return Err(Error::Precondition(format!("order not antisymmetric at {a},{b}")));
                }
                for c in 0..n {
                    if le(a, b) && le(b, c) && !le(a, c) {
                        return Err(Error::Precondition(format!("order not transitive at {a},{b},{c}")));
                    }
                }
            }
        }
        let bound = |a: usize, b: usize, lower: bool| -> Option<usize> {
            let below = |x: usize, y: usize| if lower { le(x, y) } else { le(y, x) };
            let cands: Vec<usize> = (0..n).filter(|&c| below(c, a) && below(c, b)).collect();
            cands.iter().copied().find(|&c| cands.iter().all(|&d| below(d, c)))
        };
        let mut meet = vec![0; n * n];
        let mut join = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                meet[a * n + b] = bound(a, b, true)
                    .ok_or_else(|| Error::Precondition(format!("{a} and {b} have no meet")))?;
                join[a * n + b] = bound(a, b, false)
                    .ok_or_else(|| Error::Precondition(format!("{a} and {b} have no join")))?;
            }
        }
        let bottom = (0..n).find(|&a| (0..n).all(|b| le(a, b))).expect("a lattice has a bottom");
        let top = (0..n).find(|&a| (0..n).all(|b| le(b, a))).expect("a lattice has a top");
        Ok(TableLattice { name: name.to_string(), labels, leq, meet, join, bottom, top })
    }

    fn from_covers(name: &str, labels: &[&str], covers: &[(usize, usize)]) -> Self {
        let n = labels.len();
        let rel = QuasiRel::from_pairs(n, covers.iter().copied()).expect("static covers").tr_close();
        let leq = (0..n * n).map(|k| rel.contains(k / n, k % n)).collect();
        Self::from_order(name, labels.iter().map(|s| s.to_string()).collect(), leq).expect("static lattice")
    }

    /// The chain `0 < 1 < .. < k-1`.
    pub fn chain(k: usize) -> Self {
        assert!(k >= 1);
        let labels: Vec<String> = (0..k).map(|i| i.to_string()).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let covers: Vec<(usize, usize)> = (1..k).map(|i| (i - 1, i)).collect();
        Self::from_covers(&format!("chain{k}"), &refs, &covers)
    }

    /// The pentagon `0 < a < b < 1`, `0 < c < 1`.
    pub fn n5() -> Self {
        Self::from_covers("n5", &["0", "a", "b", "c", "1"], &[(0, 1), (1, 2), (2, 4), (0, 3), (3, 4)])
    }

    /// The diamond with three atoms.
    pub fn m3() -> Self {
        Self::from_covers("m3", &["0", "a", "b", "c", "1"], &[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)])
    }

    /// Tabulates a finite sublattice of another lattice. Labels are the
    /// `Debug` renderings unless `labels` is given.
    pub fn from_elements<L: Lattice>(name: &str, lat: &L, elems: &[L::Elem], labels: Option<Vec<String>>) -> Result<Self> {
        let n = elems.len();
        let labels = labels.unwrap_or_else(|| elems.iter().map(|e| format!("{e:?}")).collect());
        let leq = (0..n * n).map(|k| lat.leq(&elems[k / n], &elems[k % n])).collect();
        let t = Self::from_order(name, labels, leq)?;
        for a in 0..n {
            for b in 0..n {
                if elems[t.meet(&a, &b)] != lat.meet(&elems[a], &elems[b])
                    || elems[t.join(&a, &b)] != lat.join(&elems[a], &elems[b])
                {
                    return Err(Error::Precondition("element list is not a sublattice".into()));
                }
            }
        }
        Ok(t)
    }

    /// `Quo(2)`, the four-element Boolean lattice of quasiorders on two points.
    pub fn quo2() -> Self {
        let rel = |pairs: &[(usize, usize)]| QuasiRel::from_pairs(2, pairs.iter().copied()).unwrap().tr_close();
        let elems = [rel(&[]), rel(&[(0, 1)]), rel(&[(1, 0)]), rel(&[(0, 1), (1, 0)])];
        let labels = ["D", "q01", "q10", "N"].map(String::from).to_vec();
        Self::from_elements("quo2", &QuoLattice { n: 2 }, &elems, Some(labels)).expect("Quo(2) is a lattice")
    }

    /// Looks up one of the built-in lattices by name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "n5" => Ok(Self::n5()),
            "m3" => Ok(Self::m3()),
            "quo2" => Ok(Self::quo2()),
            _ => match name.strip_prefix("chain").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Ok(Self::chain(k)),
                _ => Err(Error::Precondition(format!("unknown lattice `{name}`"))),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.size()
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn lookup(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `a ≺ b`: `a < b` with nothing strictly between.
    pub fn covers(&self, a: usize, b: usize) -> bool {
        let n = self.size();
        a != b
            && self.leq[a * n + b]
            && !(0..n).any(|c| c != a && c != b && self.leq[a * n + c] && self.leq[c * n + b])
    }

    pub fn covering_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.size();
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| self.covers(a, b)).collect()
    }
}

impl Lattice for TableLattice {
    type Elem = usize;

    fn meet(&self, a: &usize, b: &usize) -> usize {
        self.meet[a * self.size() + b]
    }

    fn join(&self, a: &usize, b: &usize) -> usize {
        self.join[a * self.size() + b]
    }

    fn bottom(&self) -> usize {
        self.bottom
    }

    fn top(&self) -> usize {
        self.top
    }

    fn leq(&self, a: &usize, b: &usize) -> bool {
        self.leq[a * self.size() + b]
    }
}
