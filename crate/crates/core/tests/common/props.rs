//! Property bodies shared by the standalone property target and the
//! acceptance report. Each takes generated raw data and checks the library
//! against the oracles in the parent module.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use quleq::lattice::{Lattice, QuleqLattice};
use quleq::poset::{build_poset, Poset};
use quleq::quolattice::{phi_embed, qum_pair};
use quleq::rel::QuasiRel;

use super::{bit, closure, full, identity, to_bits, W};

pub const CASES: u32 = 1000;

/// Up to 8 points and a list of pairs `i < j`, read as an acyclic relation.
pub fn dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..=W).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let len = pairs.len();
        (Just(n), proptest::sample::subsequence(pairs, 0..=len))
    })
}

/// A forest on up to `max_n` points: each point after the first is a new
/// root or hangs above or below an earlier point.
pub fn forest(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((any::<u8>(), any::<bool>(), 0u8..4), n).prop_map(move |v| {
            let mut covers = Vec::new();
            for (i, &(pick, up, root)) in v.iter().enumerate().skip(1) {
                if root == 0 {
                    continue;
                }
                let j = pick as usize % i;
                covers.push(if up { (j, i) } else { (i, j) });
            }
            (n, covers)
        })
    })
}

/// Extra pairs to close into a quasiorder above some order.
pub fn extra_pairs(n: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    proptest::collection::vec((0..n, 0..n), 0..6)
}

fn poset(n: usize, pairs: &[(usize, usize)]) -> Result<Poset, TestCaseError> {
    build_poset(pairs, n).map_err(|e| TestCaseError::fail(e.to_string()))
}

fn oracle_order(n: usize, pairs: &[(usize, usize)]) -> u64 {
    closure(n, pairs.iter().fold(identity(n), |r, &(a, b)| r | bit(a, b)))
}

fn closed(n: usize, base: u64, extra: &[(usize, usize)]) -> u64 {
    closure(n, extra.iter().fold(base, |r, &(a, b)| r | bit(a, b)))
}

fn rel_of(n: usize, bits: u64) -> QuasiRel {
    let pairs = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| bits & bit(i, j) != 0);
    QuasiRel::from_pairs(n, pairs).unwrap()
}

/// Meet and join of the filter agree with intersection and closed union,
/// and satisfy the lattice laws.
pub fn lattice_laws(
    n: usize,
    pairs: &[(usize, usize)],
    xs: [&[(usize, usize)]; 3],
) -> Result<(), TestCaseError> {
    let p = poset(n, pairs)?;
    let mu = oracle_order(n, pairs);
    prop_assert_eq!(to_bits(p.order()), mu);
    let lat = QuleqLattice::new(p.order().clone());
    let bits = xs.map(|x| closed(n, mu, x));
    let [a, b, c] = bits.map(|x| rel_of(n, x));
    prop_assert_eq!(to_bits(&lat.meet(&a, &b)), bits[0] & bits[1]);
    prop_assert_eq!(to_bits(&lat.join(&a, &b)), closure(n, bits[0] | bits[1]));
    prop_assert_eq!(lat.meet(&a, &b), lat.meet(&b, &a));
    prop_assert_eq!(lat.join(&a, &b), lat.join(&b, &a));
    prop_assert_eq!(lat.meet(&lat.meet(&a, &b), &c), lat.meet(&a, &lat.meet(&b, &c)));
    prop_assert_eq!(lat.join(&lat.join(&a, &b), &c), lat.join(&a, &lat.join(&b, &c)));
    prop_assert_eq!(lat.meet(&a, &lat.join(&a, &b)), a.clone());
    prop_assert_eq!(lat.join(&a, &lat.meet(&a, &b)), a.clone());
    prop_assert_eq!(lat.meet(&a, &a), a.clone());
    prop_assert_eq!(lat.join(&a, &a), a.clone());
    prop_assert_eq!(to_bits(&lat.bottom()), mu);
    prop_assert_eq!(to_bits(&lat.top()), full(n));
    Ok(())
}

/// `qum(a, b)` equals the closure of `μ ∪ {(a, b)}` for every pair.
pub fn qum_closed_form(n: usize, pairs: &[(usize, usize)]) -> Result<(), TestCaseError> {
    let p = poset(n, pairs)?;
    let mu = oracle_order(n, pairs);
    for a in 0..n {
        for b in 0..n {
            prop_assert_eq!(to_bits(&qum_pair(&p, a, b)), closure(n, mu | bit(a, b)), "pair ({}, {})", a, b);
        }
    }
    Ok(())
}

fn comp_ids(n: usize, covers: &[(usize, usize)]) -> Vec<usize> {
    let mut id: Vec<usize> = (0..n).collect();
    fn root(id: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while id[r] != r {
            r = id[r];
        }
        id[x] = r;
        r
    }
    for &(a, b) in covers {
        let (ra, rb) = (root(&mut id, a), root(&mut id, b));
        id[ra] = rb;
    }
    (0..n).map(|x| root(&mut id, x)).collect()
}

/// A pair inside one component never relates points of another component.
pub fn independence(n: usize, covers: &[(usize, usize)]) -> Result<(), TestCaseError> {
    let p = poset(n, covers)?;
    let comp = comp_ids(n, covers);
    for pp in 0..n {
        for q in (0..n).filter(|&q| comp[q] == comp[pp]) {
            let r = qum_pair(&p, pp, q);
            for x in (0..n).filter(|&x| comp[x] != comp[pp]) {
                for y in (0..n).filter(|&y| comp[y] != comp[pp]) {
                    prop_assert_eq!(r.contains(x, y), p.leq(x, y), "qum({}, {}) at ({}, {})", pp, q, x, y);
                }
            }
        }
    }
    Ok(())
}

/// For `a < b`, `(b, a) ∈ ρ` iff every cover of `[a, b]` is reversed in `ρ`.
pub fn convexity(n: usize, pairs: &[(usize, usize)], extra: &[(usize, usize)]) -> Result<(), TestCaseError> {
    let p = poset(n, pairs)?;
    let mu = oracle_order(n, pairs);
    let rho = closed(n, mu, extra);
    let le = |x: usize, y: usize| mu & bit(x, y) != 0;
    let covers: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .filter(|&(x, y)| x != y && le(x, y) && !(0..n).any(|z| z != x && z != y && le(x, z) && le(z, y)))
        .collect();
    prop_assert_eq!(covers.len(), p.covers().len());
    for a in 0..n {
        for b in (0..n).filter(|&b| b != a && le(a, b)) {
            let all = covers.iter().filter(|&&(x, y)| le(a, x) && le(y, b)).all(|&(x, y)| rho & bit(y, x) != 0);
            prop_assert_eq!(rho & bit(b, a) != 0, all, "interval [{}, {}]", a, b);
        }
    }
    Ok(())
}

/// `φ_X` preserves meets and joins of families and restricts back to `ρ`.
pub fn phi_embedding(
    n: usize,
    covers: &[(usize, usize)],
    family: &[Vec<(usize, usize)>],
) -> Result<(), TestCaseError> {
    let p = poset(n, covers)?;
    let comp = comp_ids(n, covers);
    let mut xs: Vec<usize> = Vec::new();
    for x in 0..n {
        if !xs.iter().any(|&y| comp[y] == comp[x]) {
            xs.push(x);
        }
    }
    let k = xs.len();
    let rhos: Vec<u64> = family
        .iter()
        .map(|f| closed(k, identity(k), &f.iter().map(|&(a, b)| (a % k, b % k)).collect::<Vec<_>>()))
        .collect();
    let phi = |r: u64| phi_embed(&p, &xs, &rel_of(k, r)).map(|q| to_bits(&q)).map_err(|e| TestCaseError::fail(e.to_string()));
    let images = rhos.iter().map(|&r| phi(r)).collect::<Result<Vec<_>, _>>()?;
    let meet = rhos.iter().fold(full(k), |a, &r| a & r);
    let join = closure(k, rhos.iter().fold(identity(k), |a, &r| a | r));
    prop_assert_eq!(phi(meet)?, images.iter().fold(full(n), |a, &r| a & r));
    prop_assert_eq!(phi(join)?, closure(n, images.iter().fold(to_bits(p.order()), |a, &r| a | r)));
    for (&r, &img) in rhos.iter().zip(&images) {
        let back = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).filter(|&(i, j)| img & bit(xs[i], xs[j]) != 0);
        prop_assert_eq!(back.fold(0, |acc, (i, j)| acc | bit(i, j)), r);
    }
    Ok(())
}

/// In a forest, no reversed cover follows from the other reversed covers.
pub fn edge_independence(n: usize, covers: &[(usize, usize)]) -> Result<(), TestCaseError> {
    let p = poset(n, covers)?;
    let rev: Vec<QuasiRel> = p.covers().iter().map(|&(u, v)| qum_pair(&p, v, u)).collect();
    for (i, &(u, v)) in p.covers().iter().enumerate() {
        let others = rev.iter().enumerate().filter(|&(j, _)| j != i).fold(p.order().clone(), |acc, (_, r)| acc.join(r));
        prop_assert!(!others.contains(v, u), "cover ({}, {}) follows from the others", u, v);
    }
    Ok(())
}
