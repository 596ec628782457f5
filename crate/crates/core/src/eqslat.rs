//! Systems of lattice equations `p(x) = u` over finite lattices, brute-force
//! solving, and the reduction from CNFs whose clauses are `xi ∨ xj ∨ xt`
//! or `¬xi ∨ ¬xj`.
//!
//! ```
//! use quleq::eqslat::{reduce_cnfhk, sat_brute, solve_brute, CnfHK, Solve};
//! use quleq::TableLattice;
//!
//! let h = CnfHK::new(3, vec![[1, 2, 3]], vec![[1, 2], [1, 3], [2, 3]]).unwrap();
//! let sat = sat_brute(&h).unwrap();
//! assert!(sat.is_some());
//!
//! let n5 = TableLattice::n5();
//! let (a0, a1) = (n5.lookup("a").unwrap(), n5.lookup("b").unwrap());
//! let sys = reduce_cnfhk(&h, &n5, a0, a1).unwrap();
//! let domain: Vec<usize> = n5.elements().collect();
//! assert!(matches!(solve_brute(&n5, &domain, &sys, 1 << 20).unwrap(), Solve::Solved(_)));
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, TableLattice};
use crate::latterm::{EvalContext, LatTerm};

/// A system `p_1(x) = u_1, .., p_b(x) = u_b` in the unknowns
/// `x_base, .., x_(base + k - 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqSystem<E = usize> {
    pub k: usize,
    pub base: i64,
    pub equations: Vec<(LatTerm, E)>,
    pub constants: BTreeMap<String, E>,
}

impl<E: Clone + PartialEq> EqSystem<E> {
    pub fn new(k: usize, base: i64, equations: Vec<(LatTerm, E)>) -> Result<Self> {
        let sys = EqSystem { k, base, equations, constants: BTreeMap::new() };
        sys.check_vars()?;
        Ok(sys)
    }

    pub fn with_constant(mut self, name: &str, value: E) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    fn check_vars(&self) -> Result<()> {
        let hi = self.base + self.k as i64;
        for (t, _) in &self.equations {
            if let (Some(lo), Some(mx)) = (t.min_var(), t.max_var()) {
                if lo < self.base || mx >= hi {
                    return Err(Error::Precondition(format!(
                        "term {t} uses a variable outside x{}..x{}",
                        self.base,
                        hi - 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn b(&self) -> usize {
        self.equations.len()
    }

    /// Total node count of the left-hand sides.
    pub fn size(&self) -> usize {
        self.equations.iter().map(|(t, _)| t.nodes()).sum()
    }

    pub fn check<L: Lattice<Elem = E>>(&self, lat: &L, sol: &[E]) -> Result<bool> {
        if sol.len() != self.k {
            return Err(Error::DimensionMismatch { left: sol.len(), right: self.k });
        }
        let mut ctx = EvalContext::new(lat, sol).with_base(self.base);
        for (name, v) in &self.constants {
            ctx = ctx.with_constant(name, v.clone());
        }
        for (t, u) in &self.equations {
            if t.eval(&ctx)? != *u {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solve<E> {
    Solved(Vec<E>),
    Unsolvable,
}

/// The first solution in lexicographic order of assignments (unknowns in
/// index order, values in `domain` order), or `Unsolvable` after
/// exhausting `domain^k`. Refuses with a budget error if `|domain|^k`
/// exceeds `budget`.
pub fn solve_brute<L: Lattice>(lat: &L, domain: &[L::Elem], sys: &EqSystem<L::Elem>, budget: u128) -> Result<Solve<L::Elem>> {
    let space = (domain.len() as u128).checked_pow(sys.k as u32).unwrap_or(u128::MAX);
    if space > budget {
        return Err(Error::Budget(format!("search space {}^{} exceeds {budget}", domain.len(), sys.k)));
    }
    if domain.is_empty() {
        return Err(Error::Precondition("empty domain".into()));
    }
    // check each equation as soon as its last unknown is set
    let mut at_level: Vec<Vec<usize>> = vec![Vec::new(); sys.k + 1];
    for (e, (t, _)) in sys.equations.iter().enumerate() {
        let lvl = t.max_var().map_or(0, |v| (v - sys.base + 1) as usize);
        at_level[lvl].push(e);
    }
    let mut assign: Vec<L::Elem> = vec![domain[0].clone(); sys.k];
    let mut choice = vec![0usize; sys.k];
    let holds = |assign: &[L::Elem], lvl: usize| -> Result<bool> {
        let mut ctx = EvalContext::new(lat, assign).with_base(sys.base);
        for (name, v) in &sys.constants {
            ctx = ctx.with_constant(name, v.clone());
        }
        for &e in &at_level[lvl] {
            let (t, u) = &sys.equations[e];
            if t.eval(&ctx)? != *u {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if !holds(&assign, 0)? {
        return Ok(Solve::Unsolvable);
    }
    if sys.k == 0 {
        return Ok(Solve::Solved(Vec::new()));
    }
    let mut lvl = 0;
    loop {
        assign[lvl] = domain[choice[lvl]].clone();
        if holds(&assign, lvl + 1)? {
            if lvl + 1 == sys.k {
                return Ok(Solve::Solved(assign));
            }
            lvl += 1;
            choice[lvl] = 0;
            continue;
        }
        // advance, backtracking over exhausted levels
        loop {
            choice[lvl] += 1;
            if choice[lvl] < domain.len() {
                break;
            }
            if lvl == 0 {
                return Ok(Solve::Unsolvable);
            }
            lvl -= 1;
        }
    }
}

/// A CNF with clauses `x_i ∨ x_j ∨ x_t` and `¬x_i ∨ ¬x_j`, variables `1..=m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfHK {
    pub m: usize,
    pub pos: Vec<[usize; 3]>,
    pub neg: Vec<[usize; 2]>,
}

impl CnfHK {
    pub fn new(m: usize, pos: Vec<[usize; 3]>, neg: Vec<[usize; 2]>) -> Result<Self> {
        let ok = |c: &[usize]| {
            c.iter().all(|&i| (1..=m).contains(&i)) && (0..c.len()).all(|a| (a + 1..c.len()).all(|b| c[a] != c[b]))
        };
        for c in &pos {
            if !ok(c) {
                return Err(Error::Precondition(format!("bad positive clause {c:?} for m = {m}")));
            }
        }
        for c in &neg {
            if !ok(c) {
                return Err(Error::Precondition(format!("bad negative clause {c:?} for m = {m}")));
            }
        }
        Ok(CnfHK { m, pos, neg })
    }

    pub fn len(&self) -> usize {
        self.pos.len() + self.neg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eval(&self, g: &[bool]) -> bool {
        self.pos.iter().all(|c| c.iter().any(|&i| g[i - 1])) && self.neg.iter().all(|c| c.iter().any(|&i| !g[i - 1]))
    }

    /// `(x1 v x3 v x5) & (~x1 v ~x2) & (~x3 v ~x4) & (x2 v x3 v x5)`.
    pub fn sample() -> Self {
        CnfHK::new(5, vec![[1, 3, 5], [2, 3, 5]], vec![[1, 2], [3, 4]]).unwrap()
    }

    /// Parses lines `P i j k`, `N i j`, an optional `m <count>`, and
    /// comments starting with `c`. Without `m` the largest index is used.
    pub fn parse(text: &str) -> Result<Self> {
        let mut m = None;
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut offset = 0;
        for line in text.lines() {
            let here = offset;
            offset += line.len() + 1;
            let mut w = line.split_whitespace();
            let Some(tag) = w.next() else { continue };
            if tag == "c" {
                continue;
            }
            let nums: Vec<usize> = w
                .map(|x| x.parse().map_err(|_| Error::parse(here, format!("bad number `{x}`"))))
                .collect::<Result<_>>()?;
            match (tag, nums.as_slice()) {
                ("m", [n]) => m = Some(*n),
                ("P", [i, j, k]) => pos.push([*i, *j, *k]),
                ("N", [i, j]) => neg.push([*i, *j]),
                _ => return Err(Error::parse(here, format!("bad line `{line}`"))),
            }
        }
        let max = pos.iter().flatten().chain(neg.iter().flatten()).copied().max().unwrap_or(0);
        CnfHK::new(m.unwrap_or(max), pos, neg)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("m {}\n", self.m);
        for [i, j, k] in &self.pos {
            writeln!(s, "P {i} {j} {k}").unwrap();
        }
        for [i, j] in &self.neg {
            writeln!(s, "N {i} {j}").unwrap();
        }
        s
    }

    /// `p1⁽⁰⁾`: meet of the positive clauses as joins; `#a1` when there
    /// are none. Variable `x_j` is replaced by `var(j)`.
    pub fn p1_with(&self, var: &dyn Fn(usize) -> LatTerm) -> LatTerm {
        LatTerm::meet_all(
            self.pos.iter().map(|c| LatTerm::join_all(c.iter().map(|&i| var(i)).collect()).unwrap()).collect(),
        )
        .unwrap_or_else(|| LatTerm::constant("a1"))
    }

    /// `p2⁽⁰⁾`: join of the negative clauses as meets; `#a0` when there
    /// are none.
    pub fn p2_with(&self, var: &dyn Fn(usize) -> LatTerm) -> LatTerm {
        LatTerm::join_all(
            self.neg.iter().map(|c| LatTerm::meet_all(c.iter().map(|&i| var(i)).collect()).unwrap()).collect(),
        )
        .unwrap_or_else(|| LatTerm::constant("a0"))
    }
}

/// Exhaustive satisfiability for `m ≤ 24`. Each assignment is also checked
/// against `h(g) = 1 ⇔ p1⁽⁰⁾(g) = 1 ∧ p2⁽⁰⁾(g) = 0` in the two-element
/// lattice.
pub fn sat_brute(h: &CnfHK) -> Result<Option<Vec<bool>>> {
    if h.m > 24 {
        return Err(Error::Budget(format!("sat_brute is limited to 24 variables, got {}", h.m)));
    }
    let two = TableLattice::chain(2);
    let p1 = h.p1_with(&|i| LatTerm::var(i as i64));
    let p2 = h.p2_with(&|i| LatTerm::var(i as i64));
    let mut first = None;
    for bits in 0u32..(1 << h.m) {
        let g: Vec<bool> = (0..h.m).map(|i| bits >> i & 1 == 1).collect();
        let vals: Vec<usize> = g.iter().map(|&b| b as usize).collect();
        let ctx = EvalContext::new(&two, &vals).with_constant("a0", 0).with_constant("a1", 1);
        let via_terms = p1.eval(&ctx)? == 1 && p2.eval(&ctx)? == 0;
        let direct = h.eval(&g);
        if via_terms != direct {
            return Err(Error::Verification(format!("term form disagrees with the CNF at {g:?}")));
        }
        if direct && first.is_none() {
            first = Some(g);
        }
    }
    Ok(first)
}

/// `(x_j ∨ x₋₁) ∧ x₀`.
pub fn masked(j: usize) -> LatTerm {
    LatTerm::meet2(LatTerm::join2(LatTerm::var(j as i64), LatTerm::var(-1)), LatTerm::var(0))
}

/// The four-equation system `x₋₁ = a0, x₀ = a1, p1 = a1, p2 = a0` over
/// `lat`, unknowns `x₋₁, x₀, x₁, .., x_m` (base `-1`). Requires `a0 ≺ a1`.
pub fn reduce_cnfhk(h: &CnfHK, lat: &TableLattice, a0: usize, a1: usize) -> Result<EqSystem<usize>> {
    if !lat.covers(a0, a1) {
        return Err(Error::Precondition(format!(
            "{} is not covered by {} in {}",
            lat.label(a0),
            lat.label(a1),
            lat.name()
        )));
    }
    let p1 = h.p1_with(&masked);
    let p2 = h.p2_with(&masked);
    let eqs = vec![(LatTerm::var(-1), a0), (LatTerm::var(0), a1), (p1, a1), (p2, a0)];
    Ok(EqSystem::new(h.m + 2, -1, eqs)?.with_constant("a0", a0).with_constant("a1", a1))
}

/// `(a0, a1, a_(g_1), .., a_(g_m))`.
pub fn lift_solution(g: &[bool], a0: usize, a1: usize) -> Vec<usize> {
    let mut w = vec![a0, a1];
    w.extend(g.iter().map(|&b| if b { a1 } else { a0 }));
    w
}

/// Reads the Boolean assignment back from a solution of a reduced system.
pub fn project_solution(lat: &TableLattice, w: &[usize], a1: usize) -> Vec<bool> {
    w[2..].iter().map(|x| lat.meet(&lat.join(x, &w[0]), &w[1]) == a1).collect()
}

/// Parses an equation file over a table lattice:
///
/// ```text
/// // comment
/// k 3
/// base 1
/// const a0 = a
/// (x1 ^ x2) = 0
/// ```
///
/// `k` defaults to the largest variable index minus `base` plus one.
pub fn parse_system(text: &str, lat: &TableLattice) -> Result<EqSystem<usize>> {
    let mut k = None;
    let mut base = 1;
    let mut eqs = Vec::new();
    let mut constants = BTreeMap::new();
    let mut offset = 0;
    let value = |s: &str, at: usize| {
        lat.lookup(s.trim()).ok_or_else(|| Error::parse(at, format!("`{}` is not an element of {}", s.trim(), lat.name())))
    };
    for line in text.lines() {
        let here = offset;
        offset += line.len() + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with("//") {
            continue;
        }
        if let Some(r) = t.strip_prefix("k ") {
            k = Some(r.trim().parse().map_err(|_| Error::parse(here, "bad `k`"))?);
        } else if let Some(r) = t.strip_prefix("base ") {
            base = r.trim().parse().map_err(|_| Error::parse(here, "bad `base`"))?;
        } else if let Some(r) = t.strip_prefix("const ") {
            let (name, v) = r.split_once('=').ok_or_else(|| Error::parse(here, "expected `const name = value`"))?;
            constants.insert(name.trim().trim_start_matches('#').to_string(), value(v, here)?);
        } else {
            let (lhs, rhs) = t.rsplit_once('=').ok_or_else(|| Error::parse(here, "expected `<term> = <value>`"))?;
            let term = crate::latterm::parse(lhs).map_err(|e| match e {
                Error::Parse { pos, msg } => Error::parse(here + pos, msg),
                e => e,
            })?;
            eqs.push((term, value(rhs, here)?));
        }
    }
    let k = k.unwrap_or_else(|| {
        eqs.iter().filter_map(|(t, _)| t.max_var()).max().map_or(0, |m| (m - base + 1).max(0) as usize)
    });
    let mut sys = EqSystem::new(k, base, eqs)?;
    sys.constants = constants;
    Ok(sys)
}

pub fn system_to_text(sys: &EqSystem<usize>, lat: &TableLattice) -> String {
    let mut s = format!("k {}\nbase {}\n", sys.k, sys.base);
    for (name, v) in &sys.constants {
        writeln!(s, "const {name} = {}", lat.label(*v)).unwrap();
    }
    for (t, u) in &sys.equations {
        writeln!(s, "{t} = {}", lat.label(*u)).unwrap();
    }
    s
}
