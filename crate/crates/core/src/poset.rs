//! Finite posets: construction from cover pairs, the built-in example
//! shapes, component structure and the parameters of the generation bounds.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genset::{tree_parameter, TreeParam, DEFAULT_NTP_MAX_SIZE};
use crate::rel::QuasiRel;

/// A finite poset on `0..n`, stored as its cover relation and its order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poset {
    n: usize,
    covers: Vec<(usize, usize)>,
    order: QuasiRel,
    labels: Option<Vec<String>>,
}

/// Builds the poset whose order is the reflexive-transitive closure of
/// `covers`. Redundant pairs are dropped from the stored covers.
pub fn build_poset(covers: &[(usize, usize)], n: usize) -> Result<Poset> {
    let mut succ = vec![Vec::new(); n];
    for &(x, y) in covers {
        for id in [x, y] {
            if id >= n {
                return Err(Error::OutOfRange { id, n });
            }
        }
        succ[x].push(y);
    }
    if let Some(cycle) = find_cycle(&succ) {
        return Err(Error::Cycle(cycle));
    }
    let order = QuasiRel::from_pairs(n, covers.iter().copied())?.tr_close();
    Ok(Poset::from_order_unchecked(order))
}

fn find_cycle(succ: &[Vec<usize>]) -> Option<Vec<usize>> {
    // 0 = unseen, 1 = on stack, 2 = done
    let n = succ.len();
    let mut state = vec![0u8; n];
    let mut parent = vec![usize::MAX; n];
    for root in 0..n {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < succ[v].len() {
                let w = succ[v][*next];
                *next += 1;
                match state[w] {
                    0 => {
                        state[w] = 1;
                        parent[w] = v;
                        stack.push((w, 0));
                    }
                    1 => {
                        let mut cycle = vec![w];
                        let mut u = v;
                        while u != w {
                            cycle.push(u);
                            u = parent[u];
                        }
                        cycle[1..].reverse();
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                state[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

impl Poset {
    fn from_order_unchecked(order: QuasiRel) -> Self {
        let n = order.n();
        let mut covers = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if x != y
                    && order.contains(x, y)
                    && !(0..n).any(|z| z != x && z != y && order.contains(x, z) && order.contains(z, y))
                {
                    covers.push((x, y));
                }
            }
        }
        Poset { n, covers, order, labels: None }
    }

    /// Wraps a partial order given as a relation.
    pub fn from_order(order: QuasiRel) -> Result<Self> {
        if !order.is_quasiorder() || !order.is_antisymmetric() {
            return Err(Error::Precondition("relation is not a partial order".into()));
        }
        Ok(Self::from_order_unchecked(order))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch { left: self.n, right: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Cover pairs `(x, y)` with `x ≺ y`, sorted.
    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    /// The order `μ` as a relation.
    pub fn order(&self) -> &QuasiRel {
        &self.order
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, x: usize) -> String {
        match &self.labels {
            Some(l) => l[x].clone(),
            None => x.to_string(),
        }
    }

    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.order.contains(x, y)
    }

    pub fn lt(&self, x: usize, y: usize) -> bool {
        x != y && self.leq(x, y)
    }

    pub fn comparable(&self, x: usize, y: usize) -> bool {
        self.leq(x, y) || self.leq(y, x)
    }

    /// `↓x`.
    pub fn down(&self, x: usize) -> Vec<usize> {
        self.order.column(x)
    }

    /// `↑x`.
    pub fn up(&self, x: usize) -> Vec<usize> {
        self.order.row_elems(x)
    }

    /// Number of covers in a longest chain.
    pub fn length(&self) -> usize {
        // elements sorted by the size of their down-set form a linear extension
        let mut by_height: Vec<usize> = (0..self.n).collect();
        by_height.sort_by_key(|&x| self.down(x).len());
        let mut height = vec![0usize; self.n];
        for &y in &by_height {
            for &(x, z) in &self.covers {
                if z == y {
                    height[y] = height[y].max(height[x] + 1);
                }
            }
        }
        height.into_iter().max().unwrap_or(0)
    }

    pub fn components(&self) -> ComponentInfo {
        ComponentInfo::of(self)
    }

    /// The graph of the poset has no cycle.
    pub fn is_forest(&self) -> bool {
        self.covers.len() + self.components().len() == self.n
    }

    /// Nonempty and totally ordered.
    pub fn is_chain(&self) -> bool {
        self.n > 0 && (0..self.n).all(|x| (0..self.n).all(|y| self.comparable(x, y)))
    }

    /// The induced subposet on `elems`, re-indexed by position.
    pub fn restrict(&self, elems: &[usize]) -> Poset {
        let p = Poset::from_order_unchecked(self.order.restrict(elems));
        match &self.labels {
            Some(l) => Poset { labels: Some(elems.iter().map(|&x| l[x].clone()).collect()), ..p },
            None => p,
        }
    }

    pub fn to_file(&self) -> PosetFile {
        PosetFile {
            n: self.n,
            covers: self.covers.iter().map(|&(x, y)| [x, y]).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn from_file(f: &PosetFile) -> Result<Self> {
        let covers: Vec<(usize, usize)> = f.covers.iter().map(|c| (c[0], c[1])).collect();
        let p = build_poset(&covers, f.n)?;
        match &f.labels {
            Some(l) => p.with_labels(l.clone()),
            None => Ok(p),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("poset serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(s)?)
    }
}

/// On-disk form of a poset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosetFile {
    pub n: usize,
    pub covers: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

// ---------------------------------------------------------------------------
// builders

pub fn antichain(m: usize) -> Poset {
    build_poset(&[], m).expect("antichain")
}

/// The chain of length `len`, which has `len + 1` elements.
pub fn chain(len: usize) -> Poset {
    let covers: Vec<(usize, usize)> = (0..len).map(|i| (i, i + 1)).collect();
    build_poset(&covers, len + 1).expect("chain")
}

/// `0 ≺ a ≺ b`, `a ≺ c`.
pub fn y_poset() -> Poset {
    build_poset(&[(0, 1), (1, 2), (1, 3)], 4)
        .and_then(|p| p.with_labels(["0", "a", "b", "c"].map(String::from).to_vec()))
        .expect("Y-poset")
}

/// Disjoint union; the `i`-th summand occupies the next block of ids.
pub fn cardinal_sum(parts: &[Poset]) -> Result<Poset> {
    if parts.is_empty() {
        return Err(Error::Precondition("cardinal sum of no posets".into()));
    }
    let mut covers = Vec::new();
    let mut offset = 0;
    for p in parts {
        covers.extend(p.covers().iter().map(|&(x, y)| (x + offset, y + offset)));
        offset += p.n();
    }
    build_poset(&covers, offset)
}

/// Parses a poset description: summands joined by `+`, each an optional
/// repeat count `k*` followed by `antichainN`, `chainN` (length `N`), `y`,
/// `figure1` or `figure2`. For example `5*y` or `chain2+chain2+antichain2`.
pub fn parse_poset_spec(spec: &str) -> Result<Poset> {
    let mut parts = Vec::new();
    let mut at = 0;
    for item in spec.split('+') {
        let here = at;
        at += item.len() + 1;
        let item = item.trim();
        let (count, name) = match item.split_once('*') {
            Some((c, n)) => (c.trim().parse::<usize>().map_err(|_| Error::parse(here, "bad repeat count"))?, n.trim()),
            None => (1, item),
        };
        let num = |prefix: &str| name.strip_prefix(prefix).and_then(|d| d.parse::<usize>().ok());
        let p = if let Some(m) = num("antichain") {
            antichain(m)
        } else if let Some(len) = num("chain") {
            chain(len)
        } else {
            match name {
                "y" | "Y" => y_poset(),
                "figure1" => figure1(),
                "figure2" => figure2(),
                _ => return Err(Error::parse(here, format!("unknown poset `{name}`"))),
            }
        };
        if p.n() == 0 {
            return Err(Error::parse(here, "empty summand"));
        }
        parts.extend(std::iter::repeat_n(p, count));
    }
    if parts.len() == 1 {
        return Ok(parts.pop().unwrap());
    }
    cardinal_sum(&parts)
}

fn tree(n: usize, covers: &[(usize, usize)]) -> Poset {
    build_poset(covers, n).expect("static tree")
}

/// A forest with seven trees matching the parameters of the first figure:
/// `ncmp = 7`, `ncs = 6`, `ncedge = 5`, `ncextr = 4`, and two chain
/// selectors.
pub fn figure1() -> Poset {
    let x_tree = tree(6, &[(0, 2), (1, 2), (2, 3), (3, 4), (3, 5)]);
    let lambda = tree(3, &[(0, 2), (1, 2)]);
    let broom = tree(5, &[(0, 1), (0, 2), (0, 3), (3, 4)]);
    cardinal_sum(&[x_tree, chain(1), chain(2), y_poset(), lambda, chain(5), broom]).expect("figure1")
}

/// Two singletons and twelve chains matching the second figure:
/// `ncmp = 14`, `ncs = 5`, `ncedge = 4`, `ncextr = 2`.
pub fn figure2() -> Poset {
    let mut parts = vec![antichain(1), antichain(1)];
    parts.extend([5, 5, 4, 4, 3, 3, 2, 2, 5, 4, 3, 2].map(|size| chain(size - 1)));
    cardinal_sum(&parts).expect("figure2")
}

// ---------------------------------------------------------------------------
// components and parameters

/// One connected component `T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub elements: Vec<usize>,
    /// `Edge T`: covers `(x, y)` inside `T`.
    pub edges: Vec<(usize, usize)>,
    pub max: Vec<usize>,
    pub min: Vec<usize>,
    /// `Extr T = Max T ∪ Min T`, sorted.
    pub extr: Vec<usize>,
}

impl Component {
    /// `iEdge T`: reversed covers `(y, x)` with `x ≺ y`.
    pub fn iedges(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self.edges.iter().map(|&(x, y)| (y, x)).collect();
        v.sort_unstable();
        v
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Components ordered by their smallest element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentInfo {
    pub comps: Vec<Component>,
    pub comp_of: Vec<usize>,
}

impl ComponentInfo {
    fn of(p: &Poset) -> Self {
        let n = p.n();
        let mut comp_of = vec![usize::MAX; n];
        let mut adj = vec![Vec::new(); n];
        for &(x, y) in p.covers() {
            adj[x].push(y);
            adj[y].push(x);
        }
        let mut comps = Vec::new();
        for root in 0..n {
            if comp_of[root] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut elements = vec![root];
            comp_of[root] = id;
            let mut k = 0;
            while k < elements.len() {
                let v = elements[k];
                k += 1;
                for &w in &adj[v] {
                    if comp_of[w] == usize::MAX {
                        comp_of[w] = id;
                        elements.push(w);
                    }
                }
            }
            elements.sort_unstable();
            let edges: Vec<(usize, usize)> = p.covers().iter().copied().filter(|&(x, _)| comp_of[x] == id).collect();
            let max: Vec<usize> = elements.iter().copied().filter(|&x| !edges.iter().any(|&(a, _)| a == x)).collect();
            let min: Vec<usize> = elements.iter().copied().filter(|&x| !edges.iter().any(|&(_, b)| b == x)).collect();
            let mut extr: Vec<usize> = max.iter().chain(&min).copied().collect();
            extr.sort_unstable();
            extr.dedup();
            comps.push(Component { elements, edges, max, min, extr });
        }
        ComponentInfo { comps, comp_of }
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn of_elem(&self, x: usize) -> &Component {
        &self.comps[self.comp_of[x]]
    }
}

/// A selector component with its tree parameter and a witness `Y(T)` in
/// the component's own coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selector {
    pub comp: usize,
    pub ntp: usize,
    pub y: Vec<QuasiRel>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosetParams {
    pub ncs: usize,
    pub ncmp: usize,
    pub ncedge: usize,
    pub ncextr: usize,
    pub is_forest: bool,
    /// Present iff `ncmp ≥ 3`.
    pub selectors: Option<[Selector; 2]>,
    pub components: ComponentInfo,
}

impl PosetParams {
    pub fn ntp1(&self) -> Option<usize> {
        self.selectors.as_ref().map(|s| s[0].ntp)
    }

    pub fn ntp2(&self) -> Option<usize> {
        self.selectors.as_ref().map(|s| s[1].ntp)
    }

    pub fn ncorr(&self) -> Option<usize> {
        self.selectors.as_ref().map(|s| s[0].ntp + s[1].ntp)
    }
}

/// Cheap lower bound on the tree parameter, exact for singletons and chains.
/// Non-chain trees need at least two because the reversed edges of a tree
/// only generate a Boolean sublattice.
fn ntp_lower_bound(t: &Poset) -> usize {
    if t.n() == 1 {
        0
    } else if t.is_chain() || !t.is_forest() {
        1
    } else {
        2
    }
}

/// Memoizes tree parameters by the shape of a component.
#[derive(Default)]
pub struct NtpCache {
    map: HashMap<(usize, Vec<(usize, usize)>), TreeParam>,
    max_size: Option<usize>,
}

impl NtpCache {
    pub fn with_max_size(max_size: usize) -> Self {
        NtpCache { map: HashMap::new(), max_size: Some(max_size) }
    }

    pub fn get(&mut self, t: &Poset) -> Result<TreeParam> {
        let key = (t.n(), t.covers().to_vec());
        if let Some(tp) = self.map.get(&key) {
            return Ok(tp.clone());
        }
        let tp = tree_parameter(t, self.max_size.unwrap_or(DEFAULT_NTP_MAX_SIZE))?;
        self.map.insert(key, tp.clone());
        Ok(tp)
    }
}

pub fn compute_params(p: &Poset) -> Result<PosetParams> {
    compute_params_with(p, &mut NtpCache::default())
}

/// As [`compute_params`]. Tree parameters are only computed for components
/// that could become selectors.
pub fn compute_params_with(p: &Poset, cache: &mut NtpCache) -> Result<PosetParams> {
    let components = p.components();
    let comps = &components.comps;
    let ncs = comps.iter().map(Component::len).max().unwrap_or(0);
    let ncedge = comps.iter().map(|c| c.edges.len()).max().unwrap_or(0);
    let ncextr = comps.iter().map(|c| c.extr.len()).max().unwrap_or(0);
    let is_forest = p.covers().len() + comps.len() == p.n();

    let selectors = if comps.len() >= 3 {
        let subs: Vec<Poset> = comps.iter().map(|c| p.restrict(&c.elements)).collect();
        let mut order: Vec<(usize, usize, usize)> =
            subs.iter().enumerate().map(|(i, t)| (ntp_lower_bound(t), t.n(), i)).collect();
        order.sort_unstable();
        // exact keys (ntp, size, id) of the two best components so far
        let mut best: Vec<((usize, usize, usize), TreeParam)> = Vec::new();
        for &(lb, size, id) in &order {
            if best.len() == 2 && (lb, size, id) >= best[1].0 {
                break;
            }
            let tp = cache.get(&subs[id])?;
            best.push(((tp.ntp, size, id), tp));
            best.sort_by_key(|b| b.0);
            best.truncate(2);
        }
        let sel = |b: &((usize, usize, usize), TreeParam)| Selector { comp: b.0 .2, ntp: b.1.ntp, y: b.1.y.clone() };
        Some([sel(&best[0]), sel(&best[1])])
    } else {
        None
    };

    Ok(PosetParams { ncs, ncmp: comps.len(), ncedge, ncextr, is_forest, selectors, components })
}

/// Collapses `Θ(μ) = μ ∩ μ⁻¹`. Returns the quotient poset and the block
/// index of every element; blocks are numbered by their least member.
pub fn quotient_by_theta(mu: &QuasiRel) -> Result<(Poset, Vec<usize>)> {
    if !mu.is_quasiorder() {
        return Err(Error::Precondition("relation is not a quasiorder".into()));
    }
    let n = mu.n();
    let mut block = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for x in 0..n {
        if block[x] == usize::MAX {
            for (y, b) in block.iter_mut().enumerate().skip(x) {
                if mu.contains(x, y) && mu.contains(y, x) {
                    *b = reps.len();
                }
            }
            reps.push(x);
        }
    }
    let order = mu.restrict(&reps);
    Ok((Poset::from_order(order)?, block))
}
