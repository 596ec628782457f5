//! Principal quasiorders, the embeddings `φ_X`, exhaustive enumeration of
//! `Quo(n)` and its filters, and closure under meet and join with witness
//! terms.

use std::collections::HashMap;
use std::hash::Hash;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::latterm::LatTerm;
use crate::poset::Poset;
use crate::rel::QuasiRel;

/// `|Quo(n)|` for `n = 0..=10` (OEIS A000798).
pub const QUO_SIZES: [u64; 11] =
    [1, 1, 4, 29, 355, 6942, 209527, 9535241, 642779354, 63260289423, 8977053873043];

pub const DEFAULT_QUO_MAX_N: usize = 6;
pub const DEFAULT_QULEQ_MAX: usize = 10_000_000;

/// `quo(x, y)`: the least quasiorder of `n` points containing `(x, y)`.
pub fn quo_pair(n: usize, x: usize, y: usize) -> QuasiRel {
    let mut r = QuasiRel::identity(n);
    r.insert(x, y);
    r
}

/// `qum(x, y) = μ ∪ (↓x × ↑y)`.
pub fn qum_pair(p: &Poset, x: usize, y: usize) -> QuasiRel {
    p.order().with_pair_closed(x, y)
}

/// `γ⁺`, the least member of `Quleq(P)` including `gamma`.
pub fn qum_set(p: &Poset, gamma: &[(usize, usize)]) -> Result<QuasiRel> {
    let mut r = p.order().clone();
    for &(x, y) in gamma {
        for id in [x, y] {
            if id >= p.n() {
                return Err(Error::OutOfRange { id, n: p.n() });
            }
        }
        r.add_pair_closed(x, y);
    }
    Ok(r)
}

/// `∇⁺X = μ ∪ (X × X)` for a component `X`, or its closure in general.
pub fn nabla_plus(p: &Poset, xs: &[usize]) -> QuasiRel {
    let mut r = p.order().clone();
    for &x in xs {
        for &y in xs {
            r.insert(x, y);
        }
    }
    r.tr_close()
}

/// `φ_X(ρ) = tr(μ ∪ ρ)` for a quasiorder `ρ` on `X`, given in the
/// coordinates of `xs`. `X` may meet each component in at most one element.
pub fn phi_embed(p: &Poset, xs: &[usize], rho: &QuasiRel) -> Result<QuasiRel> {
    if rho.n() != xs.len() {
        return Err(Error::DimensionMismatch { left: xs.len(), right: rho.n() });
    }
    let comps = p.components();
    let mut seen = vec![false; comps.len()];
    for &x in xs {
        if x >= p.n() {
            return Err(Error::OutOfRange { id: x, n: p.n() });
        }
        let c = comps.comp_of[x];
        if seen[c] {
            return Err(Error::Precondition(format!(
                "element {x} is the second element of its component in X"
            )));
        }
        seen[c] = true;
    }
    // φ'(ρ) = ρ ∪ Δ_P, then φ♭ joins with μ
    let mut lifted = QuasiRel::identity(p.n());
    for (a, b) in rho.pairs() {
        lifted.insert(xs[a], xs[b]);
    }
    Ok(lifted.join(p.order()))
}

// ---------------------------------------------------------------------------
// enumeration

/// Calls `visit` on every quasiorder of `base.n()` points that includes
/// the quasiorder `base`, stopping with a budget error after `cap` of them.
pub fn enumerate_filter_with<F: FnMut(&QuasiRel)>(base: &QuasiRel, cap: usize, mut visit: F) -> Result<usize> {
    let n = base.n();
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| i != j && !base.contains(i, j)).collect();
    let mut forbidden = QuasiRel::empty(n);
    let mut count = 0usize;
    let mut over = false;
    filter_rec(&pairs, 0, base, &mut forbidden, &mut count, cap, &mut over, &mut visit);
    if over {
        return Err(Error::Budget(format!("filter has more than {cap} elements")));
    }
    Ok(count)
}

#[allow(clippy::too_many_arguments)]
fn filter_rec<F: FnMut(&QuasiRel)>(
    pairs: &[(usize, usize)],
    mut k: usize,
    rho: &QuasiRel,
    forbidden: &mut QuasiRel,
    count: &mut usize,
    cap: usize,
    over: &mut bool,
    visit: &mut F,
) {
    if *over {
        return;
    }
    while k < pairs.len() && rho.contains(pairs[k].0, pairs[k].1) {
        k += 1;
    }
    if k == pairs.len() {
        if *count == cap {
            *over = true;
            return;
        }
        *count += 1;
        visit(rho);
        return;
    }
    let (i, j) = pairs[k];
    forbidden.insert(i, j);
    filter_rec(pairs, k + 1, rho, forbidden, count, cap, over, visit);
    forbidden.remove(i, j);
    let grown = rho.with_pair_closed(i, j);
    if !grown.intersects(forbidden) {
        filter_rec(pairs, k + 1, &grown, forbidden, count, cap, over, visit);
    }
}

fn quo_bound_check(n: usize, max_n: usize) -> Result<()> {
    if n > max_n {
        let est = QUO_SIZES.get(n).map(|s| s.to_string()).unwrap_or_else(|| format!("more than {}", QUO_SIZES[10]));
        return Err(Error::Budget(format!(
            "Quo({n}) has {est} elements; enumeration is limited to n <= {max_n}"
        )));
    }
    Ok(())
}

/// All of `Quo(n)`, for `n` up to [`DEFAULT_QUO_MAX_N`].
pub fn enumerate_quo(n: usize) -> Result<LatticeSnapshot> {
    enumerate_quo_with(n, DEFAULT_QUO_MAX_N)
}

pub fn enumerate_quo_with(n: usize, max_n: usize) -> Result<LatticeSnapshot> {
    quo_bound_check(n, max_n)?;
    let mut snap = LatticeSnapshot::default();
    enumerate_filter_with(&QuasiRel::identity(n), usize::MAX, |r| {
        snap.push(r.clone(), Provenance::Listed);
    })?;
    Ok(snap)
}

/// Counts `Quo(n)` without storing it.
pub fn count_quo(n: usize, max_n: usize) -> Result<usize> {
    quo_bound_check(n, max_n)?;
    enumerate_filter_with(&QuasiRel::identity(n), usize::MAX, |_| {})
}

/// All of `Quleq(P)`, refusing beyond [`DEFAULT_QULEQ_MAX`] elements.
pub fn enumerate_quleq(p: &Poset) -> Result<LatticeSnapshot> {
    enumerate_quleq_with(p, DEFAULT_QULEQ_MAX)
}

pub fn enumerate_quleq_with(p: &Poset, cap: usize) -> Result<LatticeSnapshot> {
    let mut snap = LatticeSnapshot::default();
    enumerate_filter_with(p.order(), cap, |r| {
        snap.push(r.clone(), Provenance::Listed);
    })
    .map_err(|e| match e {
        Error::Budget(msg) => Error::Budget(format!(
            "{msg}; |Quo({})| = {} bounds it",
            p.n(),
            QUO_SIZES.get(p.n()).map(|s| s.to_string()).unwrap_or_else(|| "astronomical".into())
        )),
        e => e,
    })?;
    Ok(snap)
}

// ---------------------------------------------------------------------------
// closure with witnesses

/// How an element of a snapshot first arose.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Generator(usize),
    Bottom,
    Top,
    Meet(usize, usize),
    Join(usize, usize),
    /// Produced by enumeration rather than by an operation.
    Listed,
}

/// A deduplicated element list with provenance.
#[derive(Clone, Debug)]
pub struct LatticeSnapshot<E = QuasiRel> {
    pub elements: Vec<E>,
    pub index: HashMap<E, usize>,
    pub provenance: Vec<Provenance>,
}

impl<E> Default for LatticeSnapshot<E> {
    fn default() -> Self {
        LatticeSnapshot { elements: Vec::new(), index: HashMap::new(), provenance: Vec::new() }
    }
}

impl<E: Clone + Eq + Hash> LatticeSnapshot<E> {
    /// Inserts `e` unless present; returns its position and whether it is new.
    pub fn push(&mut self, e: E, prov: Provenance) -> (usize, bool) {
        if let Some(&i) = self.index.get(&e) {
            return (i, false);
        }
        let i = self.elements.len();
        self.index.insert(e.clone(), i);
        self.elements.push(e);
        self.provenance.push(prov);
        (i, true)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, e: &E) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn contains(&self, e: &E) -> bool {
        self.index.contains_key(e)
    }

    /// Reconstructs a term for element `i` from provenance. Generator `g`
    /// becomes the variable `x{g+1}`; the bounds become `#bot` and `#top`.
    pub fn term(&self, i: usize) -> Option<LatTerm> {
        let mut memo: HashMap<usize, LatTerm> = HashMap::new();
        self.term_memo(i, &mut memo)
    }

    fn term_memo(&self, i: usize, memo: &mut HashMap<usize, LatTerm>) -> Option<LatTerm> {
        if let Some(t) = memo.get(&i) {
            return Some(t.clone());
        }
        let t = match self.provenance[i] {
            Provenance::Generator(g) => LatTerm::var(g as i64 + 1),
            Provenance::Bottom => LatTerm::constant("bot"),
            Provenance::Top => LatTerm::constant("top"),
            Provenance::Meet(a, b) => LatTerm::meet2(self.term_memo(a, memo)?, self.term_memo(b, memo)?),
            Provenance::Join(a, b) => LatTerm::join2(self.term_memo(a, memo)?, self.term_memo(b, memo)?),
            Provenance::Listed => return None,
        };
        memo.insert(i, t.clone());
        Some(t)
    }
}

/// Limits for closure computations.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub max_elems: usize,
    pub deadline: Option<Instant>,
}

impl Budget {
    pub fn elems(max_elems: usize) -> Self {
        Budget { max_elems, deadline: None }
    }

    pub fn with_time(mut self, secs: f64) -> Self {
        self.deadline = Some(Instant::now() + Duration::from_secs_f64(secs));
        self
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::elems(2_000_000)
    }
}

/// Result of [`close_with_witnesses`].
#[derive(Clone, Debug)]
pub struct Closure<E = QuasiRel> {
    pub snapshot: LatticeSnapshot<E>,
    /// Position of each target in the snapshot, if reached.
    pub found: Vec<Option<usize>>,
    /// No new element can arise: the snapshot is the generated sublattice.
    pub saturated: bool,
    /// Stopped by the element cap or the deadline.
    pub budget_hit: bool,
    /// Completed breadth-first rounds.
    pub depth: usize,
}

impl<E: Clone + Eq + Hash> Closure<E> {
    pub fn all_found(&self) -> bool {
        self.found.iter().all(Option::is_some)
    }

    pub fn missing(&self) -> Vec<usize> {
        self.found.iter().enumerate().filter(|(_, f)| f.is_none()).map(|(i, _)| i).collect()
    }

    /// Witness term for target `t` over the generators `x1, x2, ..`.
    pub fn witness(&self, t: usize) -> Option<LatTerm> {
        self.found[t].and_then(|i| self.snapshot.term(i))
    }
}

/// Breadth-first closure of `generators` under binary meet and join,
/// seeded with the two bounds (generation is meant in the complete-lattice
/// sense, where the empty meet and join are free).
///
/// Round `r` combines every element first produced in round `r - 1` with
/// every element of index not above it, in index order, so the element
/// order and the witnesses depend only on the generator order. The run
/// stops as soon as every target is present, when nothing new appears, or
/// when the budget runs out; with no targets it runs to saturation.
pub fn close_with_witnesses<L: Lattice>(
    lat: &L,
    generators: &[L::Elem],
    targets: &[L::Elem],
    budget: &Budget,
) -> Closure<L::Elem> {
    let mut snap = LatticeSnapshot::default();
    let mut pending: HashMap<&L::Elem, Vec<usize>> = HashMap::new();
    for (t, e) in targets.iter().enumerate() {
        pending.entry(e).or_default().push(t);
    }
    let mut found = vec![None; targets.len()];
    let mut remaining = targets.len();
    let mut note = |i: usize, e: &L::Elem, found: &mut Vec<Option<usize>>, remaining: &mut usize| {
        if let Some(ts) = pending.remove(e) {
            for t in ts {
                found[t] = Some(i);
                *remaining -= 1;
            }
        }
    };

    for (g, e) in generators.iter().enumerate() {
        let (i, new) = snap.push(e.clone(), Provenance::Generator(g));
        if new {
            note(i, e, &mut found, &mut remaining);
        }
    }
    for (e, prov) in [(lat.bottom(), Provenance::Bottom), (lat.top(), Provenance::Top)] {
        let (i, new) = snap.push(e.clone(), prov);
        if new {
            note(i, &e, &mut found, &mut remaining);
        }
    }
    let bot = snap.position(&lat.bottom()).unwrap();
    let top = snap.position(&lat.top()).unwrap();

    let mut lo = 0;
    let mut depth = 0;
    let mut budget_hit = false;
    let mut steps = 0u32;
    'outer: loop {
        if !targets.is_empty() && remaining == 0 {
            break;
        }
        let hi = snap.len();
        if lo == hi {
            break;
        }
        for i in lo..hi {
            if i == bot || i == top {
                continue;
            }
            for j in 0..=i {
                if j == bot || j == top {
                    continue;
                }
                steps = steps.wrapping_add(1);
                if steps.is_multiple_of(4096) && budget.expired() {
                    budget_hit = true;
                    break 'outer;
                }
                let (a, b) = (&snap.elements[i], &snap.elements[j]);
                let m = lat.meet(a, b);
                let jn = lat.join(a, b);
                for (e, prov) in [(m, Provenance::Meet(i, j)), (jn, Provenance::Join(i, j))] {
                    if snap.contains(&e) {
                        continue;
                    }
                    if snap.len() >= budget.max_elems {
                        budget_hit = true;
                        break 'outer;
                    }
                    let (k, _) = snap.push(e.clone(), prov);
                    note(k, &e, &mut found, &mut remaining);
                    if !targets.is_empty() && remaining == 0 {
                        depth += 1;
                        break 'outer;
                    }
                }
            }
        }
        lo = hi;
        depth += 1;
    }
    let saturated = !budget_hit && lo == snap.len();
    Closure { snapshot: snap, found, saturated, budget_hit, depth }
}

/// Extends a snapshot that contains every join-irreducible `qum(a, b)` to
/// its join-closure by joining with those elements only. Returns the number
/// of elements added.
pub fn complete_by_joins(snap: &mut LatticeSnapshot, join_irreducibles: &[usize], cap: usize) -> Result<usize> {
    let before = snap.len();
    let mut i = 0;
    while i < snap.len() {
        for &g in join_irreducibles {
            let e = snap.elements[i].join(&snap.elements[g]);
            if !snap.contains(&e) {
                if snap.len() >= cap {
                    return Err(Error::Budget(format!("join completion exceeded {cap} elements")));
                }
                snap.push(e, Provenance::Join(i, g));
            }
        }
        i += 1;
    }
    Ok(snap.len() - before)
}

/// The targets `qum(a, b)` for all `a ≰ b`: the join-irreducible elements
/// of `Quleq(P)`, which generate it under joins.
pub fn join_irreducible_targets(p: &Poset) -> Vec<QuasiRel> {
    let n = p.n();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if !p.leq(a, b) {
                let q = qum_pair(p, a, b);
                if seen.insert(q.clone()) {
                    out.push(q);
                }
            }
        }
    }
    out
}
