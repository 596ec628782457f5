//! Lattice terms over variables and named constants.
//!
//! Text form: `^` is meet, `v` is join, variables are `x<digits>` with
//! `xm<digits>` for negative indices, constants are `#name`. Operator nodes
//! are always printed in parentheses, and chains of one operator are
//! flattened:
//!
//! ```
//! use quleq::latterm::LatTerm;
//! let t: LatTerm = "((x1 v xm1) ^ (x0 ^ #a0))".parse().unwrap();
//! assert_eq!(t.to_string(), "((x1 v xm1) ^ x0 ^ #a0)");
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LatTerm {
    Var(i64),
    Const(String),
    /// At least two children, none of them a `Meet`.
    Meet(Vec<LatTerm>),
    /// At least two children, none of them a `Join`.
    Join(Vec<LatTerm>),
}

impl LatTerm {
    pub fn var(i: i64) -> Self {
        LatTerm::Var(i)
    }

    pub fn constant(name: &str) -> Self {
        LatTerm::Const(name.to_string())
    }

    pub fn meet2(a: LatTerm, b: LatTerm) -> Self {
        Self::meet_all(vec![a, b]).unwrap()
    }

    pub fn join2(a: LatTerm, b: LatTerm) -> Self {
        Self::join_all(vec![a, b]).unwrap()
    }

    /// Flattened meet; `None` for an empty list, the child itself for one.
    pub fn meet_all(children: Vec<LatTerm>) -> Option<Self> {
        Self::build(children, true)
    }

    pub fn join_all(children: Vec<LatTerm>) -> Option<Self> {
        Self::build(children, false)
    }

    fn build(children: Vec<LatTerm>, is_meet: bool) -> Option<Self> {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c {
                LatTerm::Meet(cs) if is_meet => flat.extend(cs),
                LatTerm::Join(cs) if !is_meet => flat.extend(cs),
                c => flat.push(c),
            }
        }
        match flat.len() {
            0 => None,
            1 => flat.pop(),
            _ if is_meet => Some(LatTerm::Meet(flat)),
            _ => Some(LatTerm::Join(flat)),
        }
    }

    /// Largest variable index, if any variable occurs.
    pub fn max_var(&self) -> Option<i64> {
        self.fold_vars(None, &|acc: Option<i64>, v| Some(acc.map_or(v, |a| a.max(v))))
    }

    pub fn min_var(&self) -> Option<i64> {
        self.fold_vars(None, &|acc: Option<i64>, v| Some(acc.map_or(v, |a| a.min(v))))
    }

    fn fold_vars<A: Copy>(&self, acc: A, f: &dyn Fn(A, i64) -> A) -> A {
        match self {
            LatTerm::Var(v) => f(acc, *v),
            LatTerm::Const(_) => acc,
            LatTerm::Meet(cs) | LatTerm::Join(cs) => cs.iter().fold(acc, |a, c| c.fold_vars(a, f)),
        }
    }

    /// Number of variables needed when indices start at `base`.
    pub fn arity(&self, base: i64) -> usize {
        self.max_var().map_or(0, |m| (m - base + 1).max(0) as usize)
    }

    pub fn leaves(&self) -> usize {
        match self {
            LatTerm::Var(_) | LatTerm::Const(_) => 1,
            LatTerm::Meet(cs) | LatTerm::Join(cs) => cs.iter().map(LatTerm::leaves).sum(),
        }
    }

    pub fn nodes(&self) -> usize {
        match self {
            LatTerm::Var(_) | LatTerm::Const(_) => 1,
            LatTerm::Meet(cs) | LatTerm::Join(cs) => 1 + cs.iter().map(LatTerm::nodes).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            LatTerm::Var(_) | LatTerm::Const(_) => 0,
            LatTerm::Meet(cs) | LatTerm::Join(cs) => 1 + cs.iter().map(LatTerm::depth).max().unwrap_or(0),
        }
    }

    /// Distinct leaf symbols as their printed forms.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            LatTerm::Var(_) | LatTerm::Const(_) => {
                out.insert(self.to_string());
            }
            LatTerm::Meet(cs) | LatTerm::Join(cs) => cs.iter().for_each(|c| c.collect_symbols(out)),
        }
    }

    pub fn has_var(&self) -> bool {
        self.max_var().is_some()
    }

    /// Replaces every variable by a term, rebuilding with flattening.
    pub fn substitute(&self, f: &dyn Fn(i64) -> LatTerm) -> LatTerm {
        self.substitute_all(f, &|c: &str| LatTerm::Const(c.to_string()))
    }

    /// Replaces variables and constants.
    pub fn substitute_all(&self, fv: &dyn Fn(i64) -> LatTerm, fc: &dyn Fn(&str) -> LatTerm) -> LatTerm {
        match self {
            LatTerm::Var(v) => fv(*v),
            LatTerm::Const(c) => fc(c),
            LatTerm::Meet(cs) => Self::meet_all(cs.iter().map(|c| c.substitute_all(fv, fc)).collect()).unwrap(),
            LatTerm::Join(cs) => Self::join_all(cs.iter().map(|c| c.substitute_all(fv, fc)).collect()).unwrap(),
        }
    }

    pub fn eval<L: Lattice>(&self, ctx: &EvalContext<'_, L>) -> Result<L::Elem> {
        match self {
            LatTerm::Var(v) => {
                let idx = v - ctx.base;
                if idx < 0 || idx as usize >= ctx.vars.len() {
                    return Err(Error::MissingVariable(self.to_string()));
                }
                Ok(ctx.vars[idx as usize].clone())
            }
            LatTerm::Const(name) => match ctx.constants.get(name) {
                Some(v) => Ok(v.clone()),
                None if name == "bot" => Ok(ctx.lattice.bottom()),
                None if name == "top" => Ok(ctx.lattice.top()),
                None => Err(Error::UnboundConstant(name.clone())),
            },
            LatTerm::Meet(cs) => {
                let mut acc = cs[0].eval(ctx)?;
                for c in &cs[1..] {
                    acc = ctx.lattice.meet(&acc, &c.eval(ctx)?);
                }
                Ok(acc)
            }
            LatTerm::Join(cs) => {
                let mut acc = cs[0].eval(ctx)?;
                for c in &cs[1..] {
                    acc = ctx.lattice.join(&acc, &c.eval(ctx)?);
                }
                Ok(acc)
            }
        }
    }
}

/// Values for the variables and constants of a term.
///
/// Variable `x{base + i}` takes `vars[i]`. The constants `#bot` and `#top`
/// fall back to the lattice bounds when not bound explicitly.
pub struct EvalContext<'a, L: Lattice> {
    pub lattice: &'a L,
    pub vars: &'a [L::Elem],
    pub base: i64,
    pub constants: HashMap<String, L::Elem>,
}

impl<'a, L: Lattice> EvalContext<'a, L> {
    pub fn new(lattice: &'a L, vars: &'a [L::Elem]) -> Self {
        EvalContext { lattice, vars, base: 1, constants: HashMap::new() }
    }

    pub fn with_base(mut self, base: i64) -> Self {
        self.base = base;
        self
    }

    pub fn with_constant(mut self, name: &str, value: L::Elem) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }
}

impl fmt::Display for LatTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatTerm::Var(v) if *v < 0 => write!(f, "xm{}", -v),
            LatTerm::Var(v) => write!(f, "x{v}"),
            LatTerm::Const(c) => write!(f, "#{c}"),
            LatTerm::Meet(cs) | LatTerm::Join(cs) => {
                let op = if matches!(self, LatTerm::Meet(_)) { " ^ " } else { " v " };
                write!(f, "(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl FromStr for LatTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

impl Serialize for LatTerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LatTerm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

pub fn parse(text: &str) -> Result<LatTerm> {
    let mut p = Parser { s: text.as_bytes(), pos: 0 };
    let t = p.expr()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(Error::parse(p.pos, "unexpected trailing input"));
    }
    Ok(t)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<LatTerm> {
        let mut items = vec![self.atom()?];
        let mut op: Option<u8> = None;
        loop {
            self.ws();
            match self.peek() {
                Some(c @ (b'^' | b'v')) => {
                    if op.is_some_and(|o| o != c) {
                        return Err(Error::parse(self.pos, "mixed `^` and `v` need parentheses"));
                    }
                    op = Some(c);
                    self.pos += 1;
                    items.push(self.atom()?);
                }
                _ => break,
            }
        }
        Ok(match op {
            None => items.pop().unwrap(),
            Some(b'^') => LatTerm::meet_all(items).unwrap(),
            Some(_) => LatTerm::join_all(items).unwrap(),
        })
    }

    fn atom(&mut self) -> Result<LatTerm> {
        self.ws();
        let start = self.pos;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let t = self.expr()?;
                self.ws();
                if self.peek() != Some(b')') {
                    return Err(Error::parse(self.pos, "expected `)`"));
                }
                self.pos += 1;
                Ok(t)
            }
            Some(b'x') => {
                self.pos += 1;
                let neg = self.peek() == Some(b'm');
                if neg {
                    self.pos += 1;
                }
                let digits = self.take_while(|c| c.is_ascii_digit());
                if digits.is_empty() {
                    return Err(Error::parse(start, "variable needs an index"));
                }
                let v: i64 = digits.parse().map_err(|_| Error::parse(start, "variable index too large"))?;
                if neg && v == 0 {
                    return Err(Error::parse(start, "`xm0` is not a variable; use `x0`"));
                }
                Ok(LatTerm::Var(if neg { -v } else { v }))
            }
            Some(b'#') => {
                self.pos += 1;
                let name = self.take_while(|c| c.is_ascii_alphanumeric() || c == b'_');
                if name.is_empty() {
                    return Err(Error::parse(start, "constant needs a name"));
                }
                Ok(LatTerm::Const(name))
            }
            Some(_) => Err(Error::parse(start, "expected a variable, constant or `(`")),
            None => Err(Error::parse(start, "unexpected end of input")),
        }
    }

    fn take_while(&mut self, f: impl Fn(u8) -> bool) -> String {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.s[start..self.pos]).into_owned()
    }
}

// ---------------------------------------------------------------------------
// random terms

/// Rejects bare leaves, variable-free terms, and terms that repeat a single
/// symbol although more were available.
pub fn is_trivial(t: &LatTerm, k: usize, n_constants: usize) -> bool {
    match t {
        LatTerm::Var(_) | LatTerm::Const(_) => true,
        _ => !t.has_var() || (t.symbols().len() == 1 && k + n_constants >= 2),
    }
}

/// A random term in `x1..=xk` and the given constants, of depth at most
/// `depth` (binary nodes, so at most `2^depth` leaves before flattening).
/// Deterministic in `seed`; trivial shapes are redrawn.
pub fn random_term(k: usize, depth: usize, constants: &[String], seed: u64) -> LatTerm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_term_with(&mut rng, k, depth, constants)
}

pub fn random_term_with<R: Rng>(rng: &mut R, k: usize, depth: usize, constants: &[String]) -> LatTerm {
    assert!(k >= 1 && depth >= 1, "random terms need a variable and positive depth");
    loop {
        let t = gen_node(rng, k, depth, constants);
        if !is_trivial(&t, k, constants.len()) {
            return t;
        }
    }
}

fn gen_node<R: Rng>(rng: &mut R, k: usize, depth: usize, constants: &[String]) -> LatTerm {
    if depth == 0 || rng.gen_bool(0.25) {
        if !constants.is_empty() && rng.gen_bool(0.2) {
            return LatTerm::Const(constants[rng.gen_range(0..constants.len())].clone());
        }
        return LatTerm::Var(rng.gen_range(1..=k as i64));
    }
    let a = gen_node(rng, k, depth - 1, constants);
    let b = gen_node(rng, k, depth - 1, constants);
    if rng.gen_bool(0.5) {
        LatTerm::meet2(a, b)
    } else {
        LatTerm::join2(a, b)
    }
}
