//! Reading exotic-observable parameters off a monomial, and building the
//! monomial of a given parameter set.
//!
//! Single-letter traces are candidates for the simple slots; every other
//! decorated trace is a row. Each summed index is then classified by where
//! it occurs:
//!
//! | simple | rows | coefficients | role |
//! |--------|------|--------------|------|
//! | 1 | 1 | 0 | direct K column |
//! | 1 | 0 | 1 | α-paired simple index |
//! | 0 | 1 | 1 | K column of an α, or half of a β pair |
//! | 0 | 2 | 0 | shared Q column |
//!
//! Column orders come from a topological sort of the order in which the
//! indices appear along each row.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use num_traits::One;
use serde::Serialize;
use serde_json::{json, Value};

use super::canon::simplify;
use super::expr::{CoeffAtom, Expression, Idx, Loop, Term, TraceAtom};
use crate::exotic::ObservableSpec;

/// A coefficient factor used as an α or β matrix, possibly transposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoeffUse {
    pub coeff: usize,
    pub transposed: bool,
}

/// How a monomial matches the exotic-observable pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signature {
    /// `None` for a product of plain traces.
    pub spec: Option<ObservableSpec>,
    /// Positions in `term.traces` of the `n1` simple traces, in slot order.
    pub simple: Vec<usize>,
    /// Positions in `term.traces` of the `t` decorated traces.
    pub decorated: Vec<usize>,
    pub alphas: Vec<CoeffUse>,
    pub betas: Vec<CoeffUse>,
    /// Undecorated traces multiplying the observable.
    pub canonical: Vec<usize>,
}

impl Signature {
    pub fn describe(&self) -> String {
        match &self.spec {
            Some(s) if self.canonical.is_empty() => s.to_string(),
            Some(s) => format!("{s} times {} plain trace(s)", self.canonical.len()),
            None => format!("product of {} plain trace(s)", self.canonical.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Direct,
    AlphaSimple,
    AlphaColumn,
    Shared,
    BetaHalf,
}

impl Role {
    fn block(self) -> usize {
        match self {
            Role::Direct => 0,
            Role::AlphaColumn => 1,
            Role::Shared => 2,
            Role::BetaHalf => 3,
            Role::AlphaSimple => usize::MAX,
        }
    }
}

#[derive(Default)]
struct Occ {
    simple: Vec<usize>,
    rows: Vec<(usize, usize)>,
    coeffs: Vec<(usize, usize)>,
}

/// Kahn's algorithm on `n` items with `edges`, always taking the available
/// item with the smallest priority. `None` on a cycle.
fn topo(n: usize, edges: &BTreeSet<(usize, usize)>, priority: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    for &(_, b) in edges {
        indeg[b] += 1;
    }
    let mut ready: BTreeSet<((usize, usize), usize)> =
        (0..n).filter(|&i| indeg[i] == 0).map(|i| (priority[i], i)).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(&first) = ready.iter().next() {
        ready.remove(&first);
        let v = first.1;
        out.push(v);
        for &(a, b) in edges.range((v, 0)..(v + 1, 0)) {
            debug_assert_eq!(a, v);
            indeg[b] -= 1;
            if indeg[b] == 0 {
                ready.insert((priority[b], b));
            }
        }
    }
    (out.len() == n).then_some(out)
}

fn try_assign(term: &Term, word_traces: &[usize], simple: &[usize]) -> Result<Signature, String> {
    let rows: Vec<usize> = word_traces.iter().copied().filter(|p| !simple.contains(p)).collect();
    if rows.is_empty() {
        return Err("no trace is left for the decorated rows".into());
    }
    let mut occ: BTreeMap<Idx, Occ> = BTreeMap::new();
    for (slot, &p) in simple.iter().enumerate() {
        occ.entry(term.traces[p].word[0]).or_default().simple.push(slot);
    }
    for (r, &p) in rows.iter().enumerate() {
        let w = &term.traces[p].word;
        for (pos, &i) in w.iter().enumerate() {
            if w[..pos].contains(&i) {
                return Err(format!("an index repeats inside tr({})", term.traces[p].loop_));
            }
            occ.entry(i).or_default().rows.push((r, pos));
        }
    }
    for (c, a) in term.coeffs.iter().enumerate() {
        if a.row == a.col {
            return Err(format!("{} uses one index for both slots", a.symbol));
        }
        occ.entry(a.row).or_default().coeffs.push((c, 0));
        occ.entry(a.col).or_default().coeffs.push((c, 1));
    }
    let partner = |i: Idx| -> Idx {
        let (c, slot) = occ[&i].coeffs[0];
        let a: &CoeffAtom = &term.coeffs[c];
        if slot == 0 {
            a.col
        } else {
            a.row
        }
    };
    let shape = |o: &Occ| (o.simple.len(), o.rows.len(), o.coeffs.len());
    let mut role: BTreeMap<Idx, Role> = BTreeMap::new();
    for (&i, o) in &occ {
        let r = match shape(o) {
            (1, 1, 0) => Role::Direct,
            (1, 0, 1) => Role::AlphaSimple,
            (0, 2, 0) => Role::Shared,
            (0, 1, 1) => match shape(&occ[&partner(i)]) {
                (1, 0, 1) => Role::AlphaColumn,
                (0, 1, 1) => Role::BetaHalf,
                _ => return Err("a coefficient pairs an index with one of the wrong kind".into()),
            },
            (s, r, c) => {
                return Err(format!(
                    "an index occurs in {s} simple trace(s), {r} decorated trace(s) and {c} coefficient slot(s)"
                ))
            }
        };
        role.insert(i, r);
    }
    let rank = |i: &Idx| role[i].block();
    for &p in &rows {
        let w = &term.traces[p].word;
        if w.windows(2).any(|x| rank(&x[0]) > rank(&x[1])) {
            return Err(format!(
                "the word of tr({}) does not list K indices before Q indices",
                term.traces[p].loop_
            ));
        }
    }
    let first_seen = |i: &Idx| occ[i].rows.first().copied().unwrap_or((usize::MAX, usize::MAX));
    let ordered = |r: Role| -> Option<Vec<Idx>> {
        let items: Vec<Idx> = role.iter().filter(|(_, &x)| x == r).map(|(&i, _)| i).collect();
        let at: BTreeMap<Idx, usize> = items.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut edges = BTreeSet::new();
        for &p in &rows {
            let chain: Vec<usize> = term.traces[p].word.iter().filter_map(|i| at.get(i).copied()).collect();
            for w in chain.windows(2) {
                edges.insert((w[0], w[1]));
            }
        }
        let prio: Vec<(usize, usize)> = items.iter().map(first_seen).collect();
        topo(items.len(), &edges, &prio).map(|o| o.into_iter().map(|k| items[k]).collect())
    };
    let cycle = |what: &str| format!("the rows order the {what} indices inconsistently");
    let direct = ordered(Role::Direct).ok_or_else(|| cycle("direct"))?;
    let alpha_cols = ordered(Role::AlphaColumn).ok_or_else(|| cycle("α"))?;
    let shared = ordered(Role::Shared).ok_or_else(|| cycle("shared"))?;

    // β pairs are ordered as units; the earlier member in a row is the first.
    let beta_coeffs: Vec<usize> = {
        let mut v: Vec<usize> = role
            .iter()
            .filter(|(_, &r)| r == Role::BetaHalf)
            .map(|(i, _)| occ[i].coeffs[0].0)
            .collect();
        v.sort();
        v.dedup();
        v
    };
    let unit: BTreeMap<usize, usize> = beta_coeffs.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    let mut edges = BTreeSet::new();
    let mut forced_first: BTreeMap<usize, Idx> = BTreeMap::new();
    for &p in &rows {
        let chain: Vec<Idx> = term.traces[p]
            .word
            .iter()
            .copied()
            .filter(|i| role[i] == Role::BetaHalf)
            .collect();
        for w in chain.windows(2) {
            let (u, v) = (unit[&occ[&w[0]].coeffs[0].0], unit[&occ[&w[1]].coeffs[0].0]);
            if u == v {
                forced_first.insert(u, w[0]);
            } else {
                edges.insert((u, v));
            }
        }
    }
    let prio: Vec<(usize, usize)> = beta_coeffs
        .iter()
        .map(|&c| first_seen(&term.coeffs[c].row).min(first_seen(&term.coeffs[c].col)))
        .collect();
    let pair_order = topo(beta_coeffs.len(), &edges, &prio).ok_or_else(|| cycle("β"))?;

    let (n1, r, s) = (simple.len(), direct.len(), shared.len());
    let t = rows.len();
    let pairs = pair_order.len();
    let n2 = s + pairs;
    if r + alpha_cols.len() != n1 {
        return Err("simple traces and K columns do not match up".into());
    }
    let base = 2 * n1 - r;
    let mut position: BTreeMap<Idx, usize> = BTreeMap::new();
    let mut k_col: BTreeMap<Idx, usize> = BTreeMap::new();
    let mut q_col: BTreeMap<Idx, usize> = BTreeMap::new();
    let mut slot_of_simple: Vec<usize> = Vec::with_capacity(n1);
    let simple_slot = |i: &Idx| occ[i].simple[0];
    for (p, i) in direct.iter().enumerate() {
        position.insert(*i, p);
        k_col.insert(*i, p);
        slot_of_simple.push(simple[simple_slot(i)]);
    }
    let mut alphas = Vec::new();
    for (m, i) in alpha_cols.iter().enumerate() {
        let (c, slot) = occ[i].coeffs[0];
        let partner_idx = partner(*i);
        position.insert(partner_idx, r + m);
        position.insert(*i, n1 + m);
        k_col.insert(*i, r + m);
        slot_of_simple.push(simple[simple_slot(&partner_idx)]);
        // α rows are indexed by the simple trace, columns by the K column.
        alphas.push(CoeffUse {
            coeff: c,
            transposed: slot == 0,
        });
    }
    for (q, i) in shared.iter().enumerate() {
        position.insert(*i, base + q);
        q_col.insert(*i, q);
    }
    let mut betas = Vec::new();
    for (p, &u) in pair_order.iter().enumerate() {
        let c = beta_coeffs[u];
        let a = &term.coeffs[c];
        let first = forced_first.get(&u).copied().unwrap_or_else(|| {
            if first_seen(&a.col) < first_seen(&a.row) {
                a.col
            } else {
                a.row
            }
        });
        let second = if first == a.row { a.col } else { a.row };
        position.insert(first, base + s + p);
        position.insert(second, base + n2 + p);
        q_col.insert(first, s + 2 * p);
        q_col.insert(second, s + 2 * p + 1);
        betas.push(CoeffUse {
            coeff: c,
            transposed: first != a.row,
        });
    }
    let mut k = vec![vec![0u8; n1]; t];
    let mut qm = vec![vec![0u8; 2 * n2 - s]; t];
    for (row, &p) in rows.iter().enumerate() {
        for i in &term.traces[p].word {
            if let Some(&c) = k_col.get(i) {
                k[row][c] = 1;
            } else {
                qm[row][q_col[i]] = 1;
            }
        }
    }
    let spec = ObservableSpec {
        r,
        n1,
        s,
        n2,
        t,
        k,
        q: qm,
    };
    let layout = spec.layout().map_err(|e| e.to_string())?;
    for (row, &p) in rows.iter().enumerate() {
        let mapped: Vec<usize> = term.traces[p].word.iter().map(|i| position[i]).collect();
        if mapped != layout.words[row] {
            return Err(format!(
                "the word of tr({}) cannot follow the column order",
                term.traces[p].loop_
            ));
        }
    }
    for (u, &(a, b)) in alphas.iter().zip(&layout.alphas) {
        let c = &term.coeffs[u.coeff];
        let (x, y) = if u.transposed { (c.col, c.row) } else { (c.row, c.col) };
        if (position[&x], position[&y]) != (a, b) {
            return Err("α wiring does not match the layout".into());
        }
    }
    for (u, &(a, b)) in betas.iter().zip(&layout.betas) {
        let c = &term.coeffs[u.coeff];
        let (x, y) = if u.transposed { (c.col, c.row) } else { (c.row, c.col) };
        if (position[&x], position[&y]) != (a, b) {
            return Err("β wiring does not match the layout".into());
        }
    }
    Ok(Signature {
        spec: Some(spec),
        simple: slot_of_simple,
        decorated: rows,
        alphas,
        betas,
        canonical: Vec::new(),
    })
}

fn subsets_by_size(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < left {
                break;
            }
            cur.push(i);
            go(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, size, &mut Vec::new(), &mut out);
    out
}

/// Most single-letter traces that can serve as simple slots are preferred.
pub fn recognize(term: &Term) -> Result<Signature, String> {
    let dangling = term.dangling();
    if !dangling.is_empty() {
        return Err(format!("{} index occurrence(s) have no binder", dangling.len()));
    }
    let canonical: Vec<usize> = (0..term.traces.len())
        .filter(|&p| term.traces[p].word.is_empty())
        .collect();
    let word_traces: Vec<usize> = (0..term.traces.len())
        .filter(|&p| !term.traces[p].word.is_empty())
        .collect();
    if word_traces.is_empty() {
        if !term.coeffs.is_empty() {
            return Err("coefficient entries without decorated traces".into());
        }
        return Ok(Signature {
            spec: None,
            simple: Vec::new(),
            decorated: Vec::new(),
            alphas: Vec::new(),
            betas: Vec::new(),
            canonical,
        });
    }
    let singles: Vec<usize> = word_traces
        .iter()
        .copied()
        .filter(|&p| term.traces[p].word.len() == 1)
        .collect();
    if singles.len() > 16 {
        return Err("too many single-letter traces to search".into());
    }
    let mut last = String::from("no assignment of simple traces works");
    for size in (0..=singles.len()).rev() {
        for pick in subsets_by_size(singles.len(), size) {
            let simple: Vec<usize> = pick.iter().map(|&k| singles[k]).collect();
            match try_assign(term, &word_traces, &simple) {
                Ok(mut sig) => {
                    sig.canonical = canonical;
                    return Ok(sig);
                }
                Err(e) => last = e,
            }
        }
    }
    Err(last)
}

/// A simplified expression with the signature of each of its terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub expr: Expression,
    pub signatures: Vec<Result<Signature, String>>,
}

impl Normalized {
    pub fn all_recognized(&self) -> bool {
        self.signatures.iter().all(Result::is_ok)
    }

    /// One JSON object per term: coefficient, text, atoms, flags, signature.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .expr
            .terms
            .iter()
            .zip(&self.signatures)
            .map(|(t, sig)| {
                let unit = Term {
                    coeff: Rational64::one(),
                    ..t.clone()
                };
                let atoms: Vec<String> = unit
                    .to_string()
                    .split('*')
                    .map(|s| s.rsplit(": ").next().unwrap_or(s).to_string())
                    .collect();
                json!({
                    "coeff": t.coeff.to_string(),
                    "term": t.to_string(),
                    "atoms": atoms,
                    "extended": t.extended,
                    "sign_flagged": t.sign_flagged,
                    "signature": match sig {
                        Ok(s) => json!({
                            "spec": s.spec,
                            "canonical_factors": s.canonical.len(),
                        }),
                        Err(_) => Value::Null,
                    },
                    "unrecognized": sig.as_ref().err(),
                })
            })
            .collect();
        Value::Array(terms)
    }
}

/// Merge monomials and read off each one's signature.
pub fn normalize(expr: &Expression) -> Normalized {
    let expr = simplify(expr);
    let signatures = expr.terms.iter().map(recognize).collect();
    Normalized { expr, signatures }
}

/// The monomial of `spec`, with loops named `loops[slot]` (simple slots
/// first) and coefficient matrices `alpha1, …` and `beta1, …`.
pub fn spec_term(spec: &ObservableSpec, loops: &[String]) -> crate::Result<Term> {
    let layout = spec.layout()?;
    if loops.len() != spec.n1 + spec.t {
        return Err(crate::Error::Dimension(format!(
            "{} loop names for {} slots",
            loops.len(),
            spec.n1 + spec.t
        )));
    }
    let idx = |l: usize| Idx(l as u32);
    let mut term = Term::constant(Rational64::one());
    for (j, &l) in layout.simple.iter().enumerate() {
        term.traces
            .push(TraceAtom::decorated(Loop::base(&loops[j]), vec![idx(l)]));
    }
    for (i, w) in layout.words.iter().enumerate() {
        term.traces.push(TraceAtom::decorated(
            Loop::base(&loops[spec.n1 + i]),
            w.iter().map(|&l| idx(l)).collect(),
        ));
    }
    for (m, &(a, b)) in layout.alphas.iter().enumerate() {
        term.coeffs.push(CoeffAtom {
            symbol: format!("alpha{}", m + 1),
            row: idx(a),
            col: idx(b),
        });
    }
    for (k, &(a, b)) in layout.betas.iter().enumerate() {
        term.coeffs.push(CoeffAtom {
            symbol: format!("beta{}", k + 1),
            row: idx(a),
            col: idx(b),
        });
    }
    term.bound = (0..layout.index_count).map(idx).collect();
    Ok(term.prune_unused_binders())
}

/// [`spec_term`] with loops `m1, m2, …`.
pub fn spec_expression(spec: &ObservableSpec) -> crate::Result<Expression> {
    let loops: Vec<String> = (1..=spec.n1 + spec.t).map(|k| format!("m{k}")).collect();
    Ok(Expression::from_term(spec_term(spec, &loops)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exotic::{composite_example_spec, enumerate_specs, first_example_spec, third_type_example_spec};
    use crate::symbolic::bracket::{bracket, BracketConfig};
    use crate::symbolic::parse::parse_expr;

    fn sig(text: &str) -> Result<Signature, String> {
        recognize(&parse_expr(text).unwrap().terms[0])
    }

    #[test]
    fn printed_examples() {
        let s = sig("sum i: tr(a; O i)*tr(b; O i)").unwrap();
        assert_eq!(s.spec.unwrap(), first_example_spec());
        let s = sig("sum i,j,k: alpha[k,j]*tr(g1.g3; O i O k)*tr(g2; O i)*tr(g4; O j)").unwrap();
        assert_eq!(s.spec.as_ref().unwrap(), &composite_example_spec());
        assert!(s.alphas[0].transposed);
        let s = sig("sum i,j,m,l: gamma[m,l]*tr(g1; O i O l)*tr(g3; O j O m)*tr(g2; O i)*tr(g4; O j)").unwrap();
        assert_eq!(s.spec.as_ref().unwrap(), &third_type_example_spec());
        assert!(s.betas[0].transposed);
    }

    #[test]
    fn canonical_term_and_failures() {
        let s = sig("tr(a.b)").unwrap();
        assert!(s.spec.is_none());
        assert_eq!(s.canonical, vec![0]);
        assert!(sig("sum i,j: tr(a; O i O j)").is_err());
        assert!(sig("sum i: g[i,i]*tr(a; O i)").is_err());
        assert!(sig("sum i,j: g[i,j]").is_err());
        let mut t = parse_expr("sum i: tr(a; O i)*tr(b; O i)").unwrap().terms.remove(0);
        t.bound.clear();
        assert!(recognize(&t).unwrap_err().contains("no binder"));
    }

    #[test]
    fn every_small_spec_is_recognized() {
        // A term may fit several parameter sets; any valid one with the same
        // number of summed indices is accepted.
        for (r, n1, s, n2, t) in [
            (1, 1, 0, 0, 1),
            (0, 2, 0, 0, 2),
            (2, 3, 0, 0, 2),
            (0, 1, 1, 1, 2),
            (1, 1, 0, 1, 2),
            (0, 0, 1, 2, 3),
            (1, 2, 1, 2, 2),
        ] {
            for spec in enumerate_specs(r, n1, s, n2, t).unwrap() {
                let term = spec_expression(&spec).unwrap().terms.remove(0);
                let got = recognize(&term).unwrap_or_else(|e| panic!("{spec}: {e}"));
                let empty_rows = spec
                    .k
                    .iter()
                    .zip(&spec.q)
                    .filter(|(a, b)| !a.contains(&1) && !b.contains(&1))
                    .count();
                assert_eq!(got.canonical.len(), empty_rows);
                let got = got.spec.unwrap();
                assert!(crate::exotic::validate_spec(&got).is_ok());
                assert_eq!(got.free_indices(), spec.free_indices(), "{spec} read back as {got}");
                assert_eq!(got.n1 + got.t + empty_rows, n1 + t);
            }
        }
    }

    #[test]
    fn bracket_third_term_signature() {
        let e = bracket(
            &parse_expr("tr(a)").unwrap(),
            &parse_expr("tr(b)").unwrap(),
            &BracketConfig::default(),
        )
        .unwrap();
        let n = normalize(&e);
        assert!(n.all_recognized());
        assert_eq!(
            n.signatures[2].as_ref().unwrap().spec.as_ref().unwrap(),
            &first_example_spec()
        );
        let json = n.to_json();
        assert_eq!(json.as_array().unwrap().len(), 3);
        assert_eq!(json[0]["coeff"], "1/2");
        assert!(json[0]["signature"]["spec"].is_null());
        assert_eq!(json[2]["signature"]["spec"]["K"], serde_json::json!([[1]]));
    }

    #[test]
    fn first_summand_parameters() {
        // Bracketing a direct simple trace: (r, n1, s, n2, t) → (r−1, n1, s+1, n2+1, t+1).
        let f = spec_expression(&first_example_spec()).unwrap();
        let e = bracket(&parse_expr("tr(c)").unwrap(), &f, &BracketConfig::default()).unwrap();
        let n = normalize(&e);
        assert!(n.all_recognized(), "{:?}", n.signatures);
        let specs: Vec<(usize, usize, usize, usize, usize)> = n
            .signatures
            .iter()
            .map(|s| {
                let s = s.as_ref().unwrap().spec.clone().unwrap();
                (s.r, s.n1, s.s, s.n2, s.t)
            })
            .collect();
        assert!(specs.contains(&(0, 1, 1, 1, 2)), "{specs:?}");
    }
}
