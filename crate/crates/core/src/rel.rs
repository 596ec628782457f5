//! Binary relations on `{0, .., n-1}` stored as row-major packed bit matrices.
//!
//! [`QuasiRel`] is the value type for every element of `Quo(n)` and of the
//! filters `Quleq(P)`. Row `i` holds the set `{j : (i, j) ∈ ρ}`; for a
//! quasiorder that is the principal filter `↑i`.

use std::fmt;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// An `n × n` boolean matrix.
///
/// Bits outside the `n` columns of a row are always zero, so derived
/// equality and hashing agree with equality of relations.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuasiRel {
    n: usize,
    words: SmallVec<[u64; 8]>,
}

#[inline]
fn stride(n: usize) -> usize {
    n.div_ceil(WORD).max(1)
}

impl QuasiRel {
    /// The empty relation.
    pub fn empty(n: usize) -> Self {
        QuasiRel {
            n,
            words: SmallVec::from_elem(0, n * stride(n)),
        }
    }

    /// `Δ`, the diagonal.
    pub fn identity(n: usize) -> Self {
        let mut r = Self::empty(n);
        for i in 0..n {
            r.insert(i, i);
        }
        r
    }

    /// `∇`, the full relation.
    pub fn full(n: usize) -> Self {
        let mut r = Self::empty(n);
        for i in 0..n {
            r.set_row_all(i);
        }
        r
    }

    pub fn from_pairs<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut r = Self::empty(n);
        for (i, j) in pairs {
            for id in [i, j] {
                if id >= n {
                    return Err(Error::OutOfRange { id, n });
                }
            }
            r.insert(i, j);
        }
        Ok(r)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn stride(&self) -> usize {
        stride(self.n)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        let s = self.stride();
        &self.words[i * s..(i + 1) * s]
    }

    #[inline]
    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        let s = self.stride();
        &mut self.words[i * s..(i + 1) * s]
    }

    fn set_row_all(&mut self, i: usize) {
        let n = self.n;
        let row = self.row_mut(i);
        for (w, word) in row.iter_mut().enumerate() {
            let lo = w * WORD;
            let hi = (lo + WORD).min(n);
            if hi > lo {
                let bits = hi - lo;
                *word = if bits == WORD { u64::MAX } else { (1u64 << bits) - 1 };
            }
        }
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        self.row(i)[j / WORD] >> (j % WORD) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize, j: usize) {
        debug_assert!(i < self.n && j < self.n);
        self.row_mut(i)[j / WORD] |= 1 << (j % WORD);
    }

    #[inline]
    pub fn remove(&mut self, i: usize, j: usize) {
        self.row_mut(i)[j / WORD] &= !(1 << (j % WORD));
    }

    /// All pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).filter(move |&j| self.contains(i, j)).map(move |j| (i, j)))
    }

    /// Number of pairs.
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// `{p : (p, i) ∈ ρ}`, which is `↓i` for a quasiorder.
    pub fn column(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&p| self.contains(p, i)).collect()
    }

    /// `{q : (i, q) ∈ ρ}`, which is `↑i` for a quasiorder.
    pub fn row_elems(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&q| self.contains(i, q)).collect()
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        debug_assert_eq!(self.n, other.n);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut r = self.clone();
        for (a, b) in r.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        r
    }

    pub fn intersection(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut r = self.clone();
        for (a, b) in r.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
        r
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// Reflexive-transitive closure (Warshall over packed rows).
    pub fn tr_close(&self) -> Self {
        let mut r = self.clone();
        r.close_in_place();
        r
    }

    pub fn close_in_place(&mut self) {
        for i in 0..self.n {
            self.insert(i, i);
        }
        let s = self.stride();
        let mut pivot: SmallVec<[u64; 2]> = SmallVec::from_elem(0, s);
        for k in 0..self.n {
            pivot.copy_from_slice(self.row(k));
            let (kw, kb) = (k / WORD, k % WORD);
            for i in 0..self.n {
                let base = i * s;
                if self.words[base + kw] >> kb & 1 == 1 {
                    for w in 0..s {
                        self.words[base + w] |= pivot[w];
                    }
                }
            }
        }
    }

    /// Lattice meet in `Quo(n)`: intersection.
    pub fn meet(&self, other: &Self) -> Self {
        self.intersection(other)
    }

    /// Lattice join in `Quo(n)`: transitive closure of the union.
    pub fn join(&self, other: &Self) -> Self {
        let mut r = self.union(other);
        r.close_in_place();
        r
    }

    pub fn try_meet(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.meet(other))
    }

    pub fn try_join(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.join(other))
    }

    /// Join of a list; the empty list gives `Δ`.
    pub fn big_join<'a, I>(n: usize, rels: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a QuasiRel>,
    {
        let mut acc = Self::identity(n);
        for r in rels {
            acc.check_dim(r)?;
            for (a, b) in acc.words.iter_mut().zip(&r.words) {
                *a |= b;
            }
        }
        acc.close_in_place();
        Ok(acc)
    }

    /// For a quasiorder `ρ`, returns `ρ ∨ quo(i, j) = ρ ∪ (↓i × ↑j)`.
    pub fn with_pair_closed(&self, i: usize, j: usize) -> Self {
        let mut r = self.clone();
        r.add_pair_closed(i, j);
        r
    }

    pub fn add_pair_closed(&mut self, i: usize, j: usize) {
        if self.contains(i, j) {
            return;
        }
        let s = self.stride();
        let up: SmallVec<[u64; 2]> = SmallVec::from_slice(self.row(j));
        let (iw, ib) = (i / WORD, i % WORD);
        for p in 0..self.n {
            let base = p * s;
            if self.words[base + iw] >> ib & 1 == 1 {
                for w in 0..s {
                    self.words[base + w] |= up[w];
                }
            }
        }
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|i| self.contains(i, i))
    }

    pub fn is_transitive(&self) -> bool {
        let s = self.stride();
        for i in 0..self.n {
            for k in 0..self.n {
                if self.contains(i, k) {
                    let (ri, rk) = (i * s, k * s);
                    if (0..s).any(|w| self.words[rk + w] & !self.words[ri + w] != 0) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn is_quasiorder(&self) -> bool {
        self.is_reflexive() && self.is_transitive()
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.pairs().all(|(i, j)| i == j || !self.contains(j, i))
    }

    pub fn inverse(&self) -> Self {
        let mut r = Self::empty(self.n);
        for (i, j) in self.pairs() {
            r.insert(j, i);
        }
        r
    }

    /// Restriction to `elems`, re-indexed by position in `elems`.
    pub fn restrict(&self, elems: &[usize]) -> Self {
        let mut r = Self::empty(elems.len());
        for (a, &x) in elems.iter().enumerate() {
            for (b, &y) in elems.iter().enumerate() {
                if self.contains(x, y) {
                    r.insert(a, b);
                }
            }
        }
        r
    }

    /// Packs a relation on at most 8 points into one word, bit `8i + j`.
    pub fn to_packed(&self) -> Option<u64> {
        if self.n > 8 {
            return None;
        }
        let mut x = 0u64;
        for i in 0..self.n {
            x |= (self.row(i)[0] & 0xff) << (8 * i);
        }
        Some(x)
    }

    pub fn from_packed(n: usize, x: u64) -> Self {
        assert!(n <= 8);
        let mut r = Self::empty(n);
        for i in 0..n {
            r.row_mut(i)[0] = (x >> (8 * i)) & 0xff & ((1u64 << n) - 1);
        }
        r
    }

    /// The `⌈n²/8⌉` payload bytes: row-major, most significant bit first.
    pub fn encode_bits(&self) -> Vec<u8> {
        let total = self.n * self.n;
        let mut out = vec![0u8; total.div_ceil(8)];
        for (i, j) in self.pairs() {
            let k = i * self.n + j;
            out[k / 8] |= 0x80 >> (k % 8);
        }
        out
    }

    /// Canonical wire encoding: a 4-byte big-endian `n`, then the payload.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = (self.n as u32).to_be_bytes().to_vec();
        out.extend(self.encode_bits());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Encoding("missing header".into()));
        }
        let n = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
        let body = &bytes[4..];
        if body.len() != (n * n).div_ceil(8) {
            return Err(Error::Encoding(format!(
                "expected {} payload bytes for n = {n}, got {}",
                (n * n).div_ceil(8),
                body.len()
            )));
        }
        let mut r = Self::empty(n);
        for k in 0..n * n {
            if body[k / 8] & (0x80 >> (k % 8)) != 0 {
                r.insert(k / n, k % n);
            }
        }
        let pad = body.len() * 8 - n * n;
        if pad > 0 && body[body.len() - 1] & ((1u8 << pad) - 1) != 0 {
            return Err(Error::Encoding("nonzero padding bits".into()));
        }
        Ok(r)
    }

    pub fn to_base64(&self) -> String {
        base64::engine::general_purpose::STANDARD.encode(self.encode())
    }

    pub fn from_base64(s: &str) -> Result<Self> {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(s.trim())
            .map_err(|e| Error::Encoding(e.to_string()))?;
        Self::decode(&bytes)
    }
}

impl fmt::Debug for QuasiRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QuasiRel[{}]{{", self.n)?;
        let mut first = true;
        for (i, j) in self.pairs().filter(|(i, j)| i != j) {
            if !first {
                write!(f, ",")?;
            }
            first = false;
            write!(f, "{i}{j}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for QuasiRel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_base64())
    }
}

impl<'de> Deserialize<'de> for QuasiRel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        QuasiRel::from_base64(&s).map_err(serde::de::Error::custom)
    }
}
