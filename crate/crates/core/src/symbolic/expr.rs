//! Expression types: loops, decorated traces, coefficient entries and
//! rational combinations of their products.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};

/// A formal loop: a base symbol or one of the two resolutions of a crossing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Loop {
    Base(String),
    Compose {
        left: Box<Loop>,
        right: Box<Loop>,
        inverted: bool,
    },
}

impl Loop {
    pub fn base(name: impl Into<String>) -> Self {
        Loop::Base(name.into())
    }

    /// `left ∘ right`, or `left ∘ right⁻¹` when `inverted`.
    pub fn compose(left: Loop, right: Loop, inverted: bool) -> Self {
        Loop::Compose {
            left: Box::new(left),
            right: Box::new(right),
            inverted,
        }
    }

    pub fn is_base(&self) -> bool {
        matches!(self, Loop::Base(_))
    }

    pub fn base_symbols(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_bases(&mut out);
        out
    }

    fn collect_bases<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Loop::Base(n) => {
                out.insert(n);
            }
            Loop::Compose { left, right, .. } => {
                left.collect_bases(out);
                right.collect_bases(out);
            }
        }
    }
}

impl fmt::Display for Loop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loop::Base(n) => f.write_str(n),
            Loop::Compose { left, right, inverted } => {
                write!(f, "{left}.{}", if *inverted { "~" } else { "" })?;
                if right.is_base() {
                    write!(f, "{right}")
                } else {
                    write!(f, "({right})")
                }
            }
        }
    }
}

/// A summation index ranging over `1..=7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Idx(pub u32);

/// `tr(M_loop O_{w1} … O_{wp})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceAtom {
    pub loop_: Loop,
    pub word: Vec<Idx>,
}

impl TraceAtom {
    pub fn plain(loop_: Loop) -> Self {
        TraceAtom {
            loop_,
            word: Vec::new(),
        }
    }

    pub fn decorated(loop_: Loop, word: Vec<Idx>) -> Self {
        TraceAtom { loop_, word }
    }
}

/// Entry `symbol[row, col]` of an abstract G2-valued coefficient matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoeffAtom {
    pub symbol: String,
    pub row: Idx,
    pub col: Idx,
}

/// One monomial: a rational factor times trace and coefficient atoms,
/// summed over `bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Rational64,
    pub traces: Vec<TraceAtom>,
    pub coeffs: Vec<CoeffAtom>,
    pub bound: Vec<Idx>,
    /// Produced by the decorated×decorated rule on words longer than one.
    pub extended: bool,
    /// The γ∘ρ⁻¹ term carries the printed `+` sign while the parity of the
    /// decoration word suggests the opposite one.
    pub sign_flagged: bool,
}

impl Term {
    pub fn constant(c: Rational64) -> Self {
        Term {
            coeff: c,
            traces: Vec::new(),
            coeffs: Vec::new(),
            bound: Vec::new(),
            extended: false,
            sign_flagged: false,
        }
    }

    pub fn trace(atom: TraceAtom) -> Self {
        let mut t = Term::constant(Rational64::one());
        t.traces.push(atom);
        t
    }

    /// Every index occurrence, in atom order (coefficients first).
    pub fn occurrences(&self) -> Vec<Idx> {
        let mut v = Vec::new();
        for c in &self.coeffs {
            v.push(c.row);
            v.push(c.col);
        }
        for t in &self.traces {
            v.extend(&t.word);
        }
        v
    }

    pub fn used_indices(&self) -> BTreeSet<Idx> {
        self.occurrences().into_iter().collect()
    }

    /// Indices that occur in an atom without a binder.
    pub fn dangling(&self) -> Vec<Idx> {
        let bound: BTreeSet<Idx> = self.bound.iter().copied().collect();
        let mut out: Vec<Idx> = self.used_indices().into_iter().filter(|i| !bound.contains(i)).collect();
        out.dedup();
        out
    }

    pub fn max_index(&self) -> Option<u32> {
        self.bound.iter().chain(self.occurrences().iter()).map(|i| i.0).max()
    }

    pub fn relabel(&self, f: &mut impl FnMut(Idx) -> Idx) -> Term {
        let mut t = self.clone();
        for c in &mut t.coeffs {
            c.row = f(c.row);
            c.col = f(c.col);
        }
        for tr in &mut t.traces {
            for w in &mut tr.word {
                *w = f(*w);
            }
        }
        for b in &mut t.bound {
            *b = f(*b);
        }
        t
    }

    /// Product of two terms whose index sets are already disjoint.
    pub fn product(&self, other: &Term) -> Term {
        Term {
            coeff: self.coeff * other.coeff,
            traces: self.traces.iter().chain(&other.traces).cloned().collect(),
            coeffs: self.coeffs.iter().chain(&other.coeffs).cloned().collect(),
            bound: self.bound.iter().chain(&other.bound).copied().collect(),
            extended: self.extended || other.extended,
            sign_flagged: self.sign_flagged || other.sign_flagged,
        }
    }

    /// Drop unused binders; each one multiplies the term by 7.
    pub fn prune_unused_binders(mut self) -> Term {
        let used = self.used_indices();
        let before = self.bound.len();
        self.bound.retain(|b| used.contains(b));
        let dropped = before - self.bound.len();
        self.coeff *= Rational64::from_integer(7i64.pow(dropped as u32));
        self
    }
}

const INDEX_NAMES: [&str; 10] = ["i", "j", "k", "l", "m", "n", "p", "q", "u", "v"];

fn index_name(pos: usize) -> String {
    INDEX_NAMES
        .get(pos)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("x{pos}"))
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: BTreeMap<Idx, String> = BTreeMap::new();
        for (p, b) in self.bound.iter().enumerate() {
            names.insert(*b, index_name(p));
        }
        let name = |i: &Idx| names.get(i).cloned().unwrap_or_else(|| format!("?{}", i.0));
        let atoms = self.traces.len() + self.coeffs.len();
        let c = self.coeff;
        if atoms == 0 {
            return write!(f, "{c}");
        }
        if c == -Rational64::one() {
            f.write_str("-")?;
        } else if !c.is_one() {
            write!(f, "{c} ")?;
        }
        if !self.bound.is_empty() {
            let list: Vec<String> = self.bound.iter().map(name).collect();
            write!(f, "sum {}: ", list.join(","))?;
        }
        let mut parts = Vec::with_capacity(atoms);
        for a in &self.coeffs {
            parts.push(format!("{}[{},{}]", a.symbol, name(&a.row), name(&a.col)));
        }
        for t in &self.traces {
            if t.word.is_empty() {
                parts.push(format!("tr({})", t.loop_));
            } else {
                let w: Vec<String> = t.word.iter().map(|i| format!("O {}", name(i))).collect();
                parts.push(format!("tr({}; {})", t.loop_, w.join(" ")));
            }
        }
        f.write_str(&parts.join("*"))
    }
}

/// A finite rational combination of terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expression {
    pub terms: Vec<Term>,
}

impl Expression {
    pub fn zero() -> Self {
        Expression::default()
    }

    pub fn from_term(t: Term) -> Self {
        Expression { terms: vec![t] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.terms.iter().filter_map(Term::max_index).max()
    }

    pub fn shifted(&self, offset: u32) -> Expression {
        Expression {
            terms: self
                .terms
                .iter()
                .map(|t| t.relabel(&mut |i| Idx(i.0 + offset)))
                .collect(),
        }
    }

    pub fn add(&self, other: &Expression) -> Expression {
        let mut terms = self.terms.clone();
        terms.extend(other.shifted(self.max_index().map_or(0, |m| m + 1)).terms);
        Expression { terms }
    }

    pub fn scale(&self, c: Rational64) -> Expression {
        if c.is_zero() {
            return Expression::zero();
        }
        Expression {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * c,
                    ..t.clone()
                })
                .collect(),
        }
    }

    pub fn mul(&self, other: &Expression) -> Expression {
        self.mul_disjoint(&other.shifted(self.max_index().map_or(0, |m| m + 1)))
    }

    /// Product when the two index sets are already disjoint.
    pub fn mul_disjoint(&self, rhs: &Expression) -> Expression {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                terms.push(a.product(b));
            }
        }
        Expression { terms }
    }

    /// Rename indices so that every binder across all terms owns a distinct id.
    pub fn renumbered(&self) -> Expression {
        let mut next = 0u32;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut map: BTreeMap<Idx, Idx> = BTreeMap::new();
                for b in &t.bound {
                    map.insert(*b, Idx(next));
                    next += 1;
                }
                t.relabel(&mut |i| *map.get(&i).unwrap_or(&Idx(u32::MAX - i.0)))
            })
            .collect();
        Expression { terms }
    }

    /// No index id is bound twice, within or across terms.
    pub fn is_hygienic(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.terms.iter().flat_map(|t| &t.bound).all(|b| seen.insert(*b))
    }

    pub fn dangling(&self) -> Vec<(usize, Vec<Idx>)> {
        self.terms
            .iter()
            .enumerate()
            .filter_map(|(k, t)| {
                let d = t.dangling();
                (!d.is_empty()).then_some((k, d))
            })
            .collect()
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k == 0 {
                write!(f, "{t}")?;
            } else if t.coeff.is_negative() {
                let flipped = Term {
                    coeff: -t.coeff,
                    ..t.clone()
                };
                write!(f, " - {flipped}")?;
            } else {
                write!(f, " + {t}")?;
            }
        }
        Ok(())
    }
}
