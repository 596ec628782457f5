//! Small generating sets of `Quleq(P)`: the functions `s` and `f`, Boolean
//! generators, strips and threads, tree parameters, generating sets of
//! `Quo(m)`, and the assembly of `E = F(S₁) ∪ F(S₂) ∪ G ∪ H` with witness
//! terms for every `qum(a, b)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{QuleqLattice, QuoLattice};
use crate::latterm::{EvalContext, LatTerm};
use crate::poset::{compute_params_with, ComponentInfo, NtpCache, Poset, PosetParams};
use crate::quolattice::{
    close_with_witnesses, complete_by_joins, enumerate_quleq, enumerate_quleq_with, join_irreducible_targets,
    nabla_plus, phi_embed, quo_pair, qum_pair, qum_set, Budget, LatticeSnapshot, QUO_SIZES,
};
use crate::rel::QuasiRel;

pub const DEFAULT_NTP_MAX_SIZE: usize = 6;

// ---------------------------------------------------------------------------
// s(n) and f(n)

/// `C(k, ⌊k/2⌋)`.
pub fn central_binomial(k: u32) -> BigUint {
    let mut c = BigUint::one();
    let h = k / 2;
    for i in 0..h {
        c = c * BigUint::from(k - i) / BigUint::from(i + 1);
    }
    c
}

/// `s(n)`: the least `k ≥ 1` with `n ≤ C(k, ⌊k/2⌋)`, and `s(0) = 0`.
pub fn lasp_big(n: &BigUint) -> u32 {
    if n.is_zero() {
        return 0;
    }
    let mut k = 1;
    while central_binomial(k) < *n {
        k += 1;
    }
    k
}

pub fn lasp(n: u64) -> u32 {
    lasp_big(&BigUint::from(n))
}

/// `s(n)` for a decimal string, so that `10^100` can be given literally.
pub fn lasp_str(s: &str) -> Result<u32> {
    let s = s.trim();
    let n = if let Some((b, e)) = s.split_once('^') {
        let b: BigUint = b.trim().parse().map_err(|_| Error::parse(0, "bad base"))?;
        let e: u32 = e.trim().parse().map_err(|_| Error::parse(b.to_string().len() + 1, "bad exponent"))?;
        num_traits::pow(b, e as usize)
    } else {
        s.parse().map_err(|_| Error::parse(0, "expected a nonnegative integer"))?
    };
    Ok(lasp_big(&n))
}

/// Sizes of known generating sets of `Quo(n)`: 0, 2, 4, 5, then 4.
pub fn f_card(n: u64) -> Result<usize> {
    match n {
        0 => Err(Error::Precondition("f is defined for n >= 1".into())),
        1 => Ok(0),
        2 => Ok(2),
        3 => Ok(4),
        4 => Ok(5),
        _ => Ok(4),
    }
}

// ---------------------------------------------------------------------------
// Boolean generators

/// The `⌊k/2⌋`-subsets `B_1, .., B_m` of `[k]` in colex order, `k = s(m)`.
/// For `m = 1` the single set is `{1}`.
pub fn sperner_assignment(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return Vec::new();
    }
    let k = lasp(m as u64) as usize;
    if k == 1 {
        return vec![vec![1]];
    }
    let r = k / 2;
    // colex order: by largest element, then recursively
    let mut out = Vec::with_capacity(m);
    let mut cur: Vec<usize> = (1..=r).collect();
    loop {
        out.push(cur.clone());
        if out.len() == m {
            return out;
        }
        // next r-subset in colex order
        let mut i = 0;
        while i + 1 < r && cur[i] + 1 == cur[i + 1] {
            i += 1;
        }
        cur[i] += 1;
        for (j, c) in cur.iter_mut().enumerate().take(i) {
            *c = j + 1;
        }
        debug_assert!(cur[r - 1] <= k);
    }
}

/// `G₀ = {X_1, .., X_k}` with `X_j = {i : j ∈ B_i}`; subsets of `[m]`.
pub fn boolean_generators(m: usize) -> Vec<Vec<usize>> {
    let bs = sperner_assignment(m);
    let k = lasp(m as u64) as usize;
    (1..=k).map(|j| (1..=m).filter(|&i| bs[i - 1].contains(&j)).collect()).collect()
}

// ---------------------------------------------------------------------------
// strips and threads

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripPartition {
    /// Blocks of reversed covers `(y, x)`, `x ≺ y`.
    pub strips: Vec<Vec<(usize, usize)>>,
}

impl StripPartition {
    pub fn strip_of(&self, e: (usize, usize)) -> Option<usize> {
        self.strips.iter().position(|s| s.contains(&e))
    }
}

/// The `j`-th reversed cover of every component (in sorted order) goes to
/// strip `j`.
pub fn make_strips(comps: &ComponentInfo) -> StripPartition {
    let ncedge = comps.comps.iter().map(|c| c.edges.len()).max().unwrap_or(0);
    let mut strips = vec![Vec::new(); ncedge];
    for c in &comps.comps {
        for (j, e) in c.iedges().into_iter().enumerate() {
            strips[j].push(e);
        }
    }
    StripPartition { strips }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadCover {
    /// `threads[d][t]` is the element of thread `d` in component `t`.
    pub threads: Vec<Vec<usize>>,
}

impl ThreadCover {
    pub fn thread_of(&self, x: usize) -> Option<usize> {
        self.threads.iter().position(|d| d.contains(&x))
    }

    pub fn common_thread(&self, x: usize, y: usize) -> Option<usize> {
        self.threads.iter().position(|d| d.contains(&x) && d.contains(&y))
    }
}

/// Thread `d` takes the `(d mod |Extr T|)`-th extremal of each component `T`.
pub fn make_threads(comps: &ComponentInfo) -> ThreadCover {
    let ncextr = comps.comps.iter().map(|c| c.extr.len()).max().unwrap_or(0);
    let threads = (0..ncextr).map(|d| comps.comps.iter().map(|c| c.extr[d % c.extr.len()]).collect()).collect();
    ThreadCover { threads }
}

// ---------------------------------------------------------------------------
// tree parameter

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeParam {
    pub ntp: usize,
    /// A witness `Y(T)` of size `ntp - 1`, in the coordinates of `T`.
    pub y: Vec<QuasiRel>,
}

fn reversed_edge_atoms(t: &Poset) -> Vec<QuasiRel> {
    t.covers().iter().map(|&(x, y)| qum_pair(t, y, x)).collect()
}

/// Generation test in `Quleq(T)`: the closure must reach every
/// join-irreducible `qum(a, b)`.
fn generates(t: &Poset, gens: &[QuasiRel], targets: &[QuasiRel], cap: usize) -> bool {
    let lat = QuleqLattice::new(t.order().clone());
    close_with_witnesses(&lat, gens, targets, &Budget::elems(cap)).all_found()
}

/// `ntp(T)` for a connected poset `T`, by exhaustive search over subsets of
/// `Quleq(T)` of increasing size.
pub fn tree_parameter(t: &Poset, max_size: usize) -> Result<TreeParam> {
    if t.n() == 0 || t.components().len() != 1 {
        return Err(Error::Precondition("tree parameter needs a connected poset".into()));
    }
    if t.n() == 1 {
        return Ok(TreeParam { ntp: 0, y: Vec::new() });
    }
    if t.is_chain() {
        return Ok(TreeParam { ntp: 1, y: Vec::new() });
    }
    if t.n() > max_size {
        return Err(Error::Budget(format!(
            "tree parameter search is limited to {max_size} elements, component has {}",
            t.n()
        )));
    }
    let all = enumerate_quleq(t)?.elements;
    let cap = all.len() + 2;
    let atoms = reversed_edge_atoms(t);
    let targets = join_irreducible_targets(t);
    let lat = QuleqLattice::new(t.order().clone());
    let base = close_with_witnesses(&lat, &atoms, &[], &Budget::elems(cap));
    if targets.iter().all(|x| base.snapshot.contains(x)) {
        return Ok(TreeParam { ntp: 1, y: Vec::new() });
    }
    // members of the sublattice already generated never help
    let pool: Vec<&QuasiRel> = all.iter().filter(|r| !base.snapshot.contains(r)).collect();
    for size in 1..=pool.len() {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let mut gens = atoms.clone();
            gens.extend(idx.iter().map(|&i| pool[i].clone()));
            if generates(t, &gens, &targets, cap) {
                return Ok(TreeParam { ntp: size + 1, y: idx.iter().map(|&i| pool[i].clone()).collect() });
            }
            if !next_combination(&mut idx, pool.len()) {
                break;
            }
        }
    }
    unreachable!("Quleq(T) generates itself")
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Whether some `size`-subset of `elems` generates the lattice whose
/// join-irreducibles are `targets`, under the complete-lattice convention.
pub fn exists_generating_subset(p: &Poset, elems: &[QuasiRel], size: usize) -> bool {
    let targets = join_irreducible_targets(p);
    let cap = elems.len() + 2;
    if size == 0 {
        return generates(p, &[], &targets, cap);
    }
    if size > elems.len() {
        return generates(p, elems, &targets, cap);
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        let gens: Vec<QuasiRel> = idx.iter().map(|&i| elems[i].clone()).collect();
        if generates(p, &gens, &targets, cap) {
            return true;
        }
        if !next_combination(&mut idx, elems.len()) {
            return false;
        }
    }
}

// ---------------------------------------------------------------------------
// generating sets of Quo(m)

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuoGenerators {
    pub m: usize,
    pub gens: Vec<QuasiRel>,
    /// Witness over `x1..` for `quo(i, j)`, stored at `i * m + j`.
    pub atom_terms: Vec<Option<LatTerm>>,
    pub target_size: usize,
}

impl QuoGenerators {
    pub fn atom_term(&self, i: usize, j: usize) -> &LatTerm {
        self.atom_terms[i * self.m + j].as_ref().expect("atom witness")
    }

    /// The atoms themselves: always generating, but of size `m(m-1)`.
    pub fn atoms(m: usize) -> Self {
        let mut gens = Vec::new();
        let mut atom_terms = vec![None; m * m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    gens.push(quo_pair(m, i, j));
                    atom_terms[i * m + j] = Some(LatTerm::var(gens.len() as i64));
                }
            }
        }
        QuoGenerators { m, gens, atom_terms, target_size: m * (m - 1) }
    }
}

fn atom_targets(m: usize) -> Vec<QuasiRel> {
    (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| quo_pair(m, i, j)).collect()
}

/// Random matching whose pairs are joined one way or both ways.
fn random_quasiorder<R: Rng>(rng: &mut R, m: usize) -> QuasiRel {
    let mut pts: Vec<usize> = (0..m).collect();
    pts.shuffle(rng);
    let mut r = QuasiRel::identity(m);
    for i in 0..rng.gen_range(1..=(m / 2).max(1)) {
        let (a, b) = (pts[2 * i], pts[2 * i + 1]);
        r.add_pair_closed(a, b);
        if rng.gen_bool(0.6) {
            r.add_pair_closed(b, a);
        }
    }
    r
}

/// Ladder-shaped candidate on the points `perm`: a top row `a_0..a_k`, a
/// bottom row `b_0..b_{k-1}`, the equivalences `{a_i, b_i}` and
/// `{b_i, a_(i+1)}`, the path `a_0 → .. → a_k` together with
/// `b_(k-1) → .. → b_0`, and its inverse. For even `m` the last point `p`
/// is glued to `a_k` by a fifth generator `{a_k, p}`.
pub fn ladder_generators(perm: &[usize]) -> Vec<QuasiRel> {
    let m = perm.len();
    if m < 3 {
        return Vec::new();
    }
    let odd = if m % 2 == 1 { m } else { m - 1 };
    let k = odd / 2;
    let a = |i: usize| perm[i];
    let b = |i: usize| perm[k + 1 + i];
    let mut alpha = QuasiRel::identity(m);
    let mut beta = QuasiRel::identity(m);
    let mut gamma = QuasiRel::identity(m);
    for i in 0..k {
        alpha.insert(a(i), b(i));
        alpha.insert(b(i), a(i));
        beta.insert(b(i), a(i + 1));
        beta.insert(a(i + 1), b(i));
        gamma.insert(a(i), a(i + 1));
        if i + 1 < k {
            gamma.insert(b(i + 1), b(i));
        }
    }
    let gamma = gamma.tr_close();
    let delta = gamma.inverse();
    let mut out = vec![alpha, beta, gamma, delta];
    if m.is_multiple_of(2) {
        let mut eps = QuasiRel::identity(m);
        eps.insert(a(k), perm[m - 1]);
        eps.insert(perm[m - 1], a(k));
        out.push(eps);
    }
    out
}

fn with_witnesses(m: usize, gens: Vec<QuasiRel>, c: &crate::quolattice::Closure, target_size: usize) -> QuoGenerators {
    let mut atom_terms = vec![None; m * m];
    let mut t = 0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                atom_terms[i * m + j] = c.witness(t);
                t += 1;
            }
        }
    }
    QuoGenerators { m, gens, atom_terms, target_size }
}

/// Search for a generating set of `Quo(m)` with at most `target_size`
/// members; sizes up to `target_size + 2` are tried before giving up.
///
/// Each size first tries the ladder candidate on a seeded relabelling of
/// the points, then `tries` random restarts. A set generates once its
/// closure holds every atom `quo(i, j)`.
pub fn search_quo_generators(
    m: usize,
    target_size: usize,
    budget: &Budget,
    tries: usize,
    seed: u64,
) -> Result<QuoGenerators> {
    if m <= 1 {
        return Ok(QuoGenerators { m, gens: Vec::new(), atom_terms: vec![None; m * m], target_size });
    }
    if m == 2 && target_size >= 2 {
        return Ok(QuoGenerators::atoms(2));
    }
    let lat = QuoLattice { n: m };
    let targets = atom_targets(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut rng);
    let ladder = ladder_generators(&perm);
    let out_of_time = || budget.deadline.is_some_and(|d| std::time::Instant::now() >= d);
    let mut ladder_tried = false;
    for size in target_size..=target_size + 2 {
        if !ladder_tried && !ladder.is_empty() && ladder.len() <= size {
            ladder_tried = true;
            let c = close_with_witnesses(&lat, &ladder, &targets, budget);
            if c.all_found() {
                return Ok(with_witnesses(m, ladder, &c, target_size));
            }
        }
        for _ in 0..tries {
            if out_of_time() {
                return Err(Error::Budget(format!("no generating set of Quo({m}) found before the deadline")));
            }
            let mut gens: Vec<QuasiRel> = Vec::new();
            while gens.len() < size {
                let r = random_quasiorder(&mut rng, m);
                if !gens.contains(&r) {
                    gens.push(r);
                }
            }
            let c = close_with_witnesses(&lat, &gens, &targets, budget);
            if c.all_found() {
                return Ok(with_witnesses(m, gens, &c, target_size));
            }
        }
    }
    Err(Error::Budget(format!(
        "no generating set of Quo({m}) with at most {} members found in {tries} tries per size",
        target_size + 2
    )))
}

// ---------------------------------------------------------------------------
// plans

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
    C,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Mode::A),
            "B" | "b" => Ok(Mode::B),
            "C" | "c" => Ok(Mode::C),
            _ => Err(Error::Precondition(format!("unknown mode `{s}`"))),
        }
    }
}

/// Where a member of `E` comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "part", rename_all = "snake_case")]
pub enum Origin {
    /// `∇⁺Selc_i`.
    SelectorTop { selector: usize },
    /// `ψ_i` of the `j`-th member of `Y(Selc_i)`.
    SelectorY { selector: usize, j: usize },
    /// `qum(S_j)` (mode A).
    Strip { j: usize },
    /// `qum(X_j)` for the Boolean generator `X_j` (modes B and C).
    Boolean { j: usize },
    /// `φ_D` of the `g`-th generator of `Quo(D)` for thread `D_d`.
    Thread { d: usize, g: usize },
}

/// Positions in `E` of the parts, for building certificates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub selectors: Vec<SelectorLayout>,
    /// Mode A: per strip. Modes B, C: per Boolean generator.
    pub g: Vec<usize>,
    pub g0: Vec<Vec<usize>>,
    /// `h[d][g]`.
    pub h: Vec<Vec<usize>>,
    pub strips: StripPartition,
    pub threads: ThreadCover,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorLayout {
    pub comp: usize,
    pub ntp: usize,
    pub top: Option<usize>,
    pub y: Vec<usize>,
    /// `Y(Selc_i)` in the component's coordinates.
    pub y_local: Vec<QuasiRel>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenPlan {
    pub mode: Mode,
    /// The bound of the chosen mode.
    pub bound: usize,
    pub bound_a: Option<usize>,
    pub bound_b: Option<usize>,
    #[serde(rename = "E")]
    pub e: Vec<QuasiRel>,
    pub origins: Vec<Vec<Origin>>,
    pub layout: Layout,
    pub h0: Option<QuoGenerators>,
    /// Witness term over `E` (`x{i+1}` is `E[i]`) for `qum(a, b)`.
    #[serde(with = "cert_map")]
    pub certificates: BTreeMap<(usize, usize), LatTerm>,
    pub warnings: Vec<String>,
}

mod cert_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<(usize, usize), LatTerm>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let flat: BTreeMap<String, String> = m.iter().map(|((a, b), t)| (format!("{a},{b}"), t.to_string())).collect();
        flat.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<(usize, usize), LatTerm>, D::Error> {
        let flat = BTreeMap::<String, String>::deserialize(d)?;
        let mut out = BTreeMap::new();
        for (k, v) in flat {
            let (a, b) = k.split_once(',').ok_or_else(|| serde::de::Error::custom("certificate key must be `a,b`"))?;
            let a = a.trim().parse().map_err(serde::de::Error::custom)?;
            let b = b.trim().parse().map_err(serde::de::Error::custom)?;
            out.insert((a, b), v.parse().map_err(serde::de::Error::custom)?);
        }
        Ok(out)
    }
}

impl GenPlan {
    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    pub fn within_bound(&self) -> bool {
        self.e.len() <= self.bound
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Evaluates a term over `E` in `Quleq(P)`.
    pub fn eval(&self, p: &Poset, t: &LatTerm) -> Result<QuasiRel> {
        let lat = QuleqLattice::new(p.order().clone());
        t.eval(&EvalContext::new(&lat, &self.e))
    }
}

/// Size bounds from the parameters: `(A, B)`, each present when the
/// mode applies.
pub fn bounds(pp: &PosetParams) -> (Option<usize>, Option<usize>) {
    let Some(ncorr) = pp.ncorr() else {
        return (None, None);
    };
    let h = pp.ncextr * f_card(pp.ncmp as u64).unwrap_or(0);
    let a = h + pp.ncedge + ncorr;
    let b = pp.is_forest.then(|| h + lasp(pp.ncedge as u64) as usize + ncorr);
    (Some(a), b)
}

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub mode: Option<Mode>,
    pub seed: u64,
    /// Element cap for each closure in the `Quo(ncmp)` search.
    pub search_elems: usize,
    /// Wall-clock limit for the whole search.
    pub search_secs: Option<f64>,
    pub search_tries: usize,
    pub ntp_max_size: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            mode: None,
            seed: 1,
            search_elems: 400_000,
            search_secs: Some(20.0),
            search_tries: 200,
            ntp_max_size: DEFAULT_NTP_MAX_SIZE,
        }
    }
}

struct PlanBuilder {
    e: Vec<QuasiRel>,
    origins: Vec<Vec<Origin>>,
    index: HashMap<QuasiRel, usize>,
}

impl PlanBuilder {
    fn add(&mut self, r: QuasiRel, o: Origin) -> usize {
        if let Some(&i) = self.index.get(&r) {
            self.origins[i].push(o);
            return i;
        }
        let i = self.e.len();
        self.index.insert(r.clone(), i);
        self.e.push(r);
        self.origins.push(vec![o]);
        i
    }
}

/// Assembles `E` for `p` and builds and checks its certificates.
pub fn synthesize(p: &Poset, cfg: &SynthConfig) -> Result<GenPlan> {
    let mut plan = synthesize_unchecked(p, cfg)?;
    build_certificates(p, &mut plan)?;
    Ok(plan)
}

/// Assembles `E` without certificates.
pub fn synthesize_unchecked(p: &Poset, cfg: &SynthConfig) -> Result<GenPlan> {
    if p.n() == 0 {
        return Err(Error::Precondition("empty poset".into()));
    }
    let mut cache = NtpCache::with_max_size(cfg.ntp_max_size);
    let comps = p.components();
    let is_chain = p.is_chain();
    let mode = match cfg.mode {
        Some(m) => m,
        None if is_chain => Mode::C,
        None if comps.len() >= 3 && p.is_forest() => Mode::B,
        None => Mode::A,
    };
    let mut b = PlanBuilder { e: Vec::new(), origins: Vec::new(), index: HashMap::new() };
    let mut layout = Layout::default();
    let mut warnings = Vec::new();

    if mode == Mode::C {
        if !is_chain {
            return Err(Error::Precondition("mode C needs a chain".into()));
        }
        let strips = make_strips(&comps);
        let g0 = boolean_generators(strips.strips.len());
        for (j, x) in g0.iter().enumerate() {
            let gamma: Vec<(usize, usize)> = x.iter().flat_map(|&s| strips.strips[s - 1].clone()).collect();
            let i = b.add(qum_set(p, &gamma)?, Origin::Boolean { j });
            layout.g.push(i);
        }
        layout.g0 = g0;
        layout.strips = strips;
        let bound = lasp(comps.comps[0].edges.len() as u64) as usize;
        return Ok(GenPlan {
            mode,
            bound,
            bound_a: None,
            bound_b: None,
            e: b.e,
            origins: b.origins,
            layout,
            h0: None,
            certificates: BTreeMap::new(),
            warnings,
        });
    }

    let pp = compute_params_with(p, &mut cache)?;
    let Some(selectors) = pp.selectors.clone() else {
        return Err(Error::Precondition(format!("modes A and B need at least 3 components, found {}", pp.ncmp)));
    };
    if mode == Mode::B && !pp.is_forest {
        return Err(Error::Precondition("mode B needs a forest".into()));
    }
    let (bound_a, bound_b) = bounds(&pp);
    let bound = if mode == Mode::A { bound_a.unwrap() } else { bound_b.unwrap() };

    // F(S_i)
    for (i, sel) in selectors.iter().enumerate() {
        let elems = &pp.components.comps[sel.comp].elements;
        let mut sl = SelectorLayout { comp: sel.comp, ntp: sel.ntp, top: None, y: Vec::new(), y_local: sel.y.clone() };
        if sel.ntp > 0 {
            sl.top = Some(b.add(nabla_plus(p, elems), Origin::SelectorTop { selector: i }));
            for (j, rho) in sel.y.iter().enumerate() {
                let gamma: Vec<(usize, usize)> = rho.pairs().map(|(x, y)| (elems[x], elems[y])).collect();
                sl.y.push(b.add(qum_set(p, &gamma)?, Origin::SelectorY { selector: i, j }));
            }
        }
        layout.selectors.push(sl);
    }

    // G
    let strips = make_strips(&pp.components);
    if mode == Mode::A {
        for (j, s) in strips.strips.iter().enumerate() {
            layout.g.push(b.add(qum_set(p, s)?, Origin::Strip { j }));
        }
    } else {
        let g0 = boolean_generators(strips.strips.len());
        for (j, x) in g0.iter().enumerate() {
            let gamma: Vec<(usize, usize)> = x.iter().flat_map(|&s| strips.strips[s - 1].clone()).collect();
            layout.g.push(b.add(qum_set(p, &gamma)?, Origin::Boolean { j }));
        }
        layout.g0 = g0;
    }
    layout.strips = strips;

    // H
    let threads = make_threads(&pp.components);
    let m = pp.ncmp;
    let f = f_card(m as u64)?;
    let mut budget = Budget::elems(cfg.search_elems);
    if let Some(secs) = cfg.search_secs {
        budget = budget.with_time(secs);
    }
    let h0 = match search_quo_generators(m, f, &budget, cfg.search_tries, cfg.seed) {
        Ok(h) => h,
        Err(e) if e.is_budget() => {
            warnings.push(format!("{e}; using the {} atoms of Quo({m}) instead", m * (m - 1)));
            QuoGenerators::atoms(m)
        }
        Err(e) => return Err(e),
    };
    if h0.gens.len() > f {
        warnings.push(format!("generating set of Quo({m}) has {} members, more than f({m}) = {f}", h0.gens.len()));
    }
    for (d, thread) in threads.threads.iter().enumerate() {
        let mut row = Vec::new();
        for (g, rho) in h0.gens.iter().enumerate() {
            row.push(b.add(phi_embed(p, thread, rho)?, Origin::Thread { d, g }));
        }
        layout.h.push(row);
    }
    layout.threads = threads;

    if b.e.len() > bound {
        warnings.push(format!("|E| = {} exceeds the bound {bound}", b.e.len()));
    }
    Ok(GenPlan {
        mode,
        bound,
        bound_a,
        bound_b,
        e: b.e,
        origins: b.origins,
        layout,
        h0: Some(h0),
        certificates: BTreeMap::new(),
        warnings,
    })
}

// ---------------------------------------------------------------------------
// certificates

struct Certs<'a> {
    p: &'a Poset,
    plan: &'a GenPlan,
    comps: ComponentInfo,
    /// Per selector, witness terms over `E` for `qum(a, b)`, `a ≰ b` inside it.
    internal: Vec<HashMap<(usize, usize), LatTerm>>,
}

fn evar(i: usize) -> LatTerm {
    LatTerm::var(i as i64 + 1)
}

fn join_opt(parts: Vec<Option<LatTerm>>) -> Option<LatTerm> {
    LatTerm::join_all(parts.into_iter().flatten().collect())
}

impl Certs<'_> {
    fn sel_index(&self, comp: usize) -> Option<usize> {
        self.plan.layout.selectors.iter().position(|s| s.comp == comp)
    }

    fn comp(&self, x: usize) -> usize {
        self.comps.comp_of[x]
    }

    /// `qum(S)` for strip `s`.
    fn strip_term(&self, s: usize) -> LatTerm {
        let l = &self.plan.layout;
        match self.plan.mode {
            Mode::A => evar(l.g[s]),
            _ => LatTerm::meet_all(
                l.g0.iter().enumerate().filter(|(_, x)| x.contains(&(s + 1))).map(|(j, _)| evar(l.g[j])).collect(),
            )
            .expect("every strip lies in some Boolean generator"),
        }
    }

    /// `qum(x, y)` for `x, y` in thread `d`, different components.
    fn thread_term(&self, d: usize, x: usize, y: usize) -> LatTerm {
        let h0 = self.plan.h0.as_ref().expect("modes A and B carry H");
        let t = h0.atom_term(self.comp(x), self.comp(y));
        let row = &self.plan.layout.h[d];
        t.substitute(&|v| evar(row[(v - 1) as usize]))
    }

    /// `qum(a, b)` inside selector `i`; `None` when it is `μ`.
    fn internal(&self, i: usize, a: usize, b: usize) -> Option<LatTerm> {
        if self.p.leq(a, b) {
            None
        } else {
            Some(self.internal[i][&(a, b)].clone())
        }
    }

    /// `qum(x, y)` for extremal `x`, `y` in distinct components, or
    /// `spech(x, y)` when they share a non-selector component.
    fn route(&self, x: usize, y: usize) -> LatTerm {
        let (t1, t2) = (self.comp(x), self.comp(y));
        let threads = &self.plan.layout.threads;
        if t1 != t2 {
            if let Some(d) = threads.common_thread(x, y) {
                return self.thread_term(d, x, y);
            }
        }
        let dx = threads.thread_of(x).expect("extremal lies on a thread");
        let dy = threads.thread_of(y).expect("extremal lies on a thread");
        let factors: Vec<LatTerm> = self
            .plan
            .layout
            .selectors
            .iter()
            .enumerate()
            .map(|(i, sel)| {
                let sc = sel.comp;
                let steps = if sc == t1 && t1 != t2 {
                    let x1 = threads.threads[dy][t1];
                    vec![if x1 == x { None } else { self.internal(i, x, x1) }, Some(self.thread_term(dy, x1, y))]
                } else if sc == t2 && t1 != t2 {
                    let y1 = threads.threads[dx][t2];
                    vec![Some(self.thread_term(dx, x, y1)), if y1 == y { None } else { self.internal(i, y1, y) }]
                } else {
                    let xi = threads.threads[dx][sc];
                    let yi = threads.threads[dy][sc];
                    vec![
                        Some(self.thread_term(dx, x, xi)),
                        if xi == yi { None } else { self.internal(i, xi, yi) },
                        Some(self.thread_term(dy, yi, y)),
                    ]
                };
                join_opt(steps).expect("a route has a step")
            })
            .collect();
        LatTerm::meet_all(factors).unwrap()
    }

    /// `qum(v, u)` for the reversed cover `(v, u)`, `u ≺ v`.
    fn reversed_edge(&self, v: usize, u: usize) -> LatTerm {
        let s = self.plan.layout.strips.strip_of((v, u)).expect("reversed edge lies in a strip");
        let c = self.comp(v);
        if let Some(i) = self.sel_index(c) {
            let top = self.plan.layout.selectors[i].top.expect("selector with an edge has ∇⁺");
            return LatTerm::meet2(self.strip_term(s), evar(top));
        }
        let comp = &self.comps.comps[c];
        let vs = *comp.max.iter().find(|&&m| self.p.leq(v, m)).unwrap();
        let us = *comp.min.iter().find(|&&m| self.p.leq(m, u)).unwrap();
        LatTerm::meet2(self.strip_term(s), self.route(vs, us))
    }

    /// `qum(b, a)` for `a < b`: join of the reversed covers in `[a, b]`.
    fn interval(&self, a: usize, b: usize) -> LatTerm {
        let parts: Vec<LatTerm> = self
            .p
            .covers()
            .iter()
            .filter(|&&(x, y)| self.p.leq(a, x) && self.p.leq(y, b))
            .map(|&(x, y)| self.reversed_edge(y, x))
            .collect();
        LatTerm::join_all(parts).expect("a < b has a cover in between")
    }

    fn is_extremal(&self, x: usize) -> bool {
        self.comps.of_elem(x).extr.contains(&x)
    }

    /// `qum(a, b)` for `a`, `b` in different components.
    fn cross(&self, a: usize, b: usize) -> LatTerm {
        if self.is_extremal(a) && self.is_extremal(b) {
            return self.route(a, b);
        }
        let ca = self.comps.of_elem(a);
        let cb = self.comps.of_elem(b);
        let a_up = *ca.max.iter().find(|&&m| self.p.leq(a, m)).unwrap();
        let a_dn = *ca.min.iter().find(|&&m| self.p.leq(m, a)).unwrap();
        let b_up = *cb.max.iter().find(|&&m| self.p.leq(b, m)).unwrap();
        let b_dn = *cb.min.iter().find(|&&m| self.p.leq(m, b)).unwrap();
        let beta = join_opt(vec![Some(self.route(a_up, b_up)), (b != b_up).then(|| self.interval(b, b_up))]).unwrap();
        let gamma = join_opt(vec![(a != a_dn).then(|| self.interval(a_dn, a)), Some(self.route(a_dn, b_dn))]).unwrap();
        LatTerm::meet2(beta, gamma)
    }

    /// An element outside component `c`, taken from a selector.
    fn outside(&self, c: usize) -> usize {
        let l = &self.plan.layout.selectors;
        let sc = if l[0].comp != c { l[0].comp } else { l[1].comp };
        self.comps.comps[sc].elements[0]
    }

    fn pair(&self, a: usize, b: usize) -> (LatTerm, &'static str) {
        let (ca, cb) = (self.comp(a), self.comp(b));
        if ca != cb {
            return (self.cross(a, b), if self.is_extremal(a) && self.is_extremal(b) { "route" } else { "cross" });
        }
        if self.p.lt(a, b) {
            let c = self.outside(ca);
            return (LatTerm::meet2(self.cross(a, c), self.cross(c, a)), "mu");
        }
        if let Some(i) = self.sel_index(ca) {
            return (self.internal(i, a, b).unwrap(), "selector");
        }
        if self.p.lt(b, a) {
            return (self.interval(b, a), "interval");
        }
        let factors = self
            .plan
            .layout
            .selectors
            .iter()
            .map(|s| {
                let c = self.comps.comps[s.comp].elements[0];
                LatTerm::join2(self.cross(a, c), self.cross(c, b))
            })
            .collect();
        (LatTerm::meet_all(factors).unwrap(), "two-selector")
    }
}

/// Builds a witness term for every `qum(a, b)`, `a ≠ b`, and checks each
/// against the closed form `μ ∪ (↓a × ↑b)`.
pub fn build_certificates(p: &Poset, plan: &mut GenPlan) -> Result<()> {
    let certs = match plan.mode {
        Mode::C => chain_certificates(p, plan)?,
        _ => mode_ab_certificates(p, plan)?,
    };
    plan.certificates = certs;
    verify_certificates(p, plan)
}

fn chain_certificates(p: &Poset, plan: &GenPlan) -> Result<BTreeMap<(usize, usize), LatTerm>> {
    let l = &plan.layout;
    let atom = |s: usize| -> LatTerm {
        LatTerm::meet_all(l.g0.iter().enumerate().filter(|(_, x)| x.contains(&(s + 1))).map(|(j, _)| evar(l.g[j])).collect())
            .expect("strip covered by G0")
    };
    let lat = QuleqLattice::new(p.order().clone());
    let all_meet = LatTerm::meet_all((0..plan.e.len()).map(evar).collect());
    let mu_term = match all_meet {
        Some(t) if t.eval(&EvalContext::new(&lat, &plan.e))? == *p.order() => t,
        _ => LatTerm::constant("bot"),
    };
    let mut out = BTreeMap::new();
    for a in 0..p.n() {
        for b in 0..p.n() {
            if a == b {
                continue;
            }
            let t = if p.leq(a, b) {
                mu_term.clone()
            } else {
                let parts = p
                    .covers()
                    .iter()
                    .filter(|&&(x, y)| p.leq(b, x) && p.leq(y, a))
                    .map(|&(x, y)| atom(l.strips.strip_of((y, x)).unwrap()))
                    .collect();
                LatTerm::join_all(parts).unwrap()
            };
            out.insert((a, b), t);
        }
    }
    Ok(out)
}

fn mode_ab_certificates(p: &Poset, plan: &GenPlan) -> Result<BTreeMap<(usize, usize), LatTerm>> {
    let comps = p.components();
    let mut certs = Certs { p, plan, comps: comps.clone(), internal: Vec::new() };

    // selector-internal witnesses: closure inside Quleq(Selc_i) of
    // F⁽⁰⁾(Selc_i) and the reversed covers, mapped through ψ_i
    let mut internal = Vec::new();
    for sl in &plan.layout.selectors {
        let elems = comps.comps[sl.comp].elements.clone();
        let t = p.restrict(&elems);
        let mut map = HashMap::new();
        if t.n() > 1 {
            let mut gens = vec![QuasiRel::full(t.n())];
            let mut gen_terms = vec![evar(sl.top.unwrap())];
            for (j, y) in sl.y_local.iter().enumerate() {
                gens.push(y.clone());
                gen_terms.push(evar(sl.y[j]));
            }
            for &(x, y) in t.covers() {
                gens.push(qum_pair(&t, y, x));
                gen_terms.push(certs.reversed_edge(elems[y], elems[x]));
            }
            let pairs: Vec<(usize, usize)> =
                (0..t.n()).flat_map(|a| (0..t.n()).map(move |b| (a, b))).filter(|&(a, b)| !t.leq(a, b)).collect();
            let targets: Vec<QuasiRel> = pairs.iter().map(|&(a, b)| qum_pair(&t, a, b)).collect();
            let lat = QuleqLattice::new(t.order().clone());
            let cap = QUO_SIZES.get(t.n()).map_or(usize::MAX, |&s| s as usize + 2);
            let c = close_with_witnesses(&lat, &gens, &targets, &Budget::elems(cap));
            if !c.all_found() {
                return Err(Error::Verification(format!(
                    "selector component {} is not generated by its F and reversed edges",
                    sl.comp
                )));
            }
            let top = evar(sl.top.unwrap());
            for (k, &(a, b)) in pairs.iter().enumerate() {
                let w = c.witness(k).unwrap();
                let w = w.substitute_all(&|v| gen_terms[(v - 1) as usize].clone(), &|name| {
                    if name == "top" {
                        top.clone()
                    } else {
                        LatTerm::constant(name)
                    }
                });
                map.insert((elems[a], elems[b]), w);
            }
        }
        internal.push(map);
        certs.internal = internal.clone();
    }
    certs.internal = internal;

    let mut out = BTreeMap::new();
    for a in 0..p.n() {
        for b in 0..p.n() {
            if a != b {
                out.insert((a, b), certs.pair(a, b).0);
            }
        }
    }
    Ok(out)
}

/// The proof step that produced the certificate for `(a, b)`.
pub fn certificate_step(p: &Poset, plan: &GenPlan, a: usize, b: usize) -> &'static str {
    if plan.mode == Mode::C {
        return if p.leq(a, b) { "mu" } else { "boolean" };
    }
    let comps = p.components();
    let (ca, cb) = (comps.comp_of[a], comps.comp_of[b]);
    let extr = |x: usize| comps.of_elem(x).extr.contains(&x);
    if ca != cb {
        if extr(a) && extr(b) {
            "route"
        } else {
            "cross"
        }
    } else if p.lt(a, b) {
        "mu"
    } else if plan.layout.selectors.iter().any(|s| s.comp == ca) {
        "selector"
    } else if p.lt(b, a) {
        "interval"
    } else {
        "two-selector"
    }
}

/// Checks every certificate against the closed form and that all pairs are
/// covered.
pub fn verify_certificates(p: &Poset, plan: &GenPlan) -> Result<()> {
    let lat = QuleqLattice::new(p.order().clone());
    let ctx = EvalContext::new(&lat, &plan.e);
    for a in 0..p.n() {
        for b in 0..p.n() {
            if a == b {
                continue;
            }
            let step = certificate_step(p, plan, a, b);
            let t = plan
                .certificates
                .get(&(a, b))
                .ok_or_else(|| Error::Verification(format!("no certificate for ({a},{b})")))?;
            let got = t.eval(&ctx)?;
            if got != qum_pair(p, a, b) {
                return Err(Error::Verification(format!(
                    "certificate for ({a},{b}) from step `{step}` evaluates to {got:?}, expected {:?}",
                    qum_pair(p, a, b)
                )));
            }
        }
    }
    Ok(())
}

/// Outcome of a full-closure check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FullCheck {
    pub quleq_size: usize,
    pub closure_size: usize,
    pub generated: bool,
}

/// Closes `E` in `Quleq(P)` and compares with the enumerated lattice. The
/// closure is run until every `qum(a, b)` appears and then completed by
/// joins with those, which yields the whole generated sublattice.
pub fn verify_full(p: &Poset, plan: &GenPlan, cap: usize) -> Result<FullCheck> {
    let all = enumerate_quleq_with(p, cap)?;
    let lat = QuleqLattice::new(p.order().clone());
    let targets = join_irreducible_targets(p);
    let c = close_with_witnesses(&lat, &plan.e, &targets, &Budget::elems(cap));
    if c.budget_hit {
        return Err(Error::Budget(format!("closure exceeded {cap} elements")));
    }
    let mut snap: LatticeSnapshot = c.snapshot;
    let generated = c.found.iter().all(Option::is_some);
    if generated {
        let ji: Vec<usize> = c.found.iter().map(|f| f.unwrap()).collect();
        complete_by_joins(&mut snap, &ji, cap)?;
    }
    let closure_size = snap.len();
    let same = generated && closure_size == all.len() && all.elements.iter().all(|r| snap.contains(r));
    Ok(FullCheck { quleq_size: all.len(), closure_size, generated: same })
}
