//! Canonical forms of terms up to index renaming and reordering of
//! commuting factors, and merging of equal monomials.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;

use super::expr::{Expression, Idx, Term};

/// Beyond this many candidate factor orders only the sorted order is tried.
const MAX_ORDERS: usize = 40_320;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

/// Group positions `0..keys.len()` by equal key, groups in key order.
fn groups(keys: &[String]) -> Vec<Vec<usize>> {
    let mut by: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        by.entry(k.as_str()).or_default().push(i);
    }
    by.into_values().collect()
}

fn all_orders(gs: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let count: usize = gs
        .iter()
        .map(|g| (1..=g.len()).product::<usize>())
        .fold(1usize, |a, b| a.saturating_mul(b));
    if count > MAX_ORDERS {
        return vec![gs.iter().flatten().copied().collect()];
    }
    let mut orders = vec![Vec::new()];
    for g in gs {
        let perms = permutations(g.len());
        let mut next = Vec::with_capacity(orders.len() * perms.len());
        for o in &orders {
            for p in &perms {
                let mut v: Vec<usize> = o.clone();
                v.extend(p.iter().map(|&k| g[k]));
                next.push(v);
            }
        }
        orders = next;
    }
    orders
}

fn encode(
    term: &Term,
    coeff_order: &[usize],
    trace_order: &[usize],
    abstract_symbols: bool,
) -> (String, BTreeMap<Idx, Idx>) {
    let bound: std::collections::BTreeSet<Idx> = term.bound.iter().copied().collect();
    let mut map: BTreeMap<Idx, Idx> = BTreeMap::new();
    let name = |i: Idx, map: &mut BTreeMap<Idx, Idx>| -> String {
        if !bound.contains(&i) {
            return format!("?{}", i.0);
        }
        let n = map.len() as u32;
        format!("{}", map.entry(i).or_insert(Idx(n)).0)
    };
    let mut s = String::new();
    for &c in coeff_order {
        let a = &term.coeffs[c];
        let sym = if abstract_symbols { "#" } else { a.symbol.as_str() };
        let r = name(a.row, &mut map);
        let col = name(a.col, &mut map);
        s.push_str(&format!("{sym}[{r},{col}];"));
    }
    for &t in trace_order {
        let a = &term.traces[t];
        let w: Vec<String> = a.word.iter().map(|&i| name(i, &mut map)).collect();
        s.push_str(&format!("tr({}|{});", a.loop_, w.join(" ")));
    }
    let unused = term.bound.iter().filter(|b| !map.contains_key(b)).count();
    if unused > 0 {
        s.push_str(&format!("unused={unused};"));
    }
    (s, map)
}

/// Canonical key of `term` and the term rewritten in canonical order with
/// indices `0, 1, …` in first-appearance order.
pub fn canonical_form(term: &Term, abstract_symbols: bool) -> (String, Term) {
    let coeff_keys: Vec<String> = term
        .coeffs
        .iter()
        .map(|c| {
            if abstract_symbols {
                "#".to_string()
            } else {
                c.symbol.clone()
            }
        })
        .collect();
    let trace_keys: Vec<String> = term
        .traces
        .iter()
        .map(|t| format!("{}|{}", t.loop_, t.word.len()))
        .collect();
    let coeff_orders = all_orders(&groups(&coeff_keys));
    let trace_orders = all_orders(&groups(&trace_keys));
    let mut best: Option<(String, Vec<usize>, Vec<usize>, BTreeMap<Idx, Idx>)> = None;
    'outer: for co in &coeff_orders {
        for to in &trace_orders {
            let (s, map) = encode(term, co, to, abstract_symbols);
            if best.as_ref().is_none_or(|b| s < b.0) {
                best = Some((s, co.clone(), to.clone(), map));
            }
            if coeff_orders.len() * trace_orders.len() > MAX_ORDERS {
                break 'outer;
            }
        }
    }
    let (key, co, to, mut map) = best.expect("at least one order");
    for b in &term.bound {
        let n = map.len() as u32;
        map.entry(*b).or_insert(Idx(n));
    }
    let mut out = Term {
        coeffs: co.iter().map(|&c| term.coeffs[c].clone()).collect(),
        traces: to.iter().map(|&t| term.traces[t].clone()).collect(),
        ..term.clone()
    };
    out = out.relabel(&mut |i| *map.get(&i).unwrap_or(&i));
    out.bound.sort();
    (key, out)
}

/// Merge monomials that agree up to index renaming and factor order, drop
/// zero coefficients and give every binder a globally distinct id.
pub fn simplify(expr: &Expression) -> Expression {
    simplify_with(expr, false)
}

pub fn simplify_with(expr: &Expression, abstract_symbols: bool) -> Expression {
    let mut slots: HashMap<String, usize> = HashMap::new();
    let mut terms: Vec<Term> = Vec::new();
    for t in &expr.terms {
        let (key, canon) = canonical_form(&t.clone().prune_unused_binders(), abstract_symbols);
        match slots.get(&key) {
            Some(&k) => {
                let e = &mut terms[k];
                e.coeff += canon.coeff;
                e.extended |= canon.extended;
                e.sign_flagged |= canon.sign_flagged;
            }
            None => {
                slots.insert(key, terms.len());
                terms.push(canon);
            }
        }
    }
    terms.retain(|t| !t.coeff.is_zero());
    Expression { terms }.renumbered()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse::parse_expr;

    fn key(text: &str) -> String {
        let e = parse_expr(text).unwrap();
        canonical_form(&e.terms[0], false).0
    }

    #[test]
    fn keys_ignore_index_names_and_factor_order() {
        assert_eq!(key("sum i: tr(a; O i)*tr(b; O i)"), key("sum z: tr(b; O z)*tr(a; O z)"));
        assert_eq!(
            key("sum i,j,k: g[k,j]*tr(a; O i O k)*tr(b; O i)*tr(c; O j)"),
            key("sum p,q,r: tr(c; O q)*g[r,q]*tr(b; O p)*tr(a; O p O r)")
        );
        assert_ne!(
            key("sum i,j: g[i,j]*tr(a; O i)*tr(b; O j)"),
            key("sum i,j: g[j,i]*tr(a; O i)*tr(b; O j)")
        );
        assert_ne!(
            key("sum i,j: tr(a; O i O j)*tr(b; O i O j)"),
            key("sum i,j: tr(a; O i O j)*tr(b; O j O i)")
        );
    }

    #[test]
    fn equal_shape_factors_are_permuted() {
        assert_eq!(
            key("sum i,j: tr(a; O i)*tr(a; O j)*tr(b; O i O j)"),
            key("sum i,j: tr(a; O j)*tr(a; O i)*tr(b; O i O j)")
        );
    }

    #[test]
    fn merging() {
        let e = parse_expr("1/2 sum i: tr(a; O i)*tr(b; O i) + 1/2 sum j: tr(b; O j)*tr(a; O j)").unwrap();
        let s = simplify(&e);
        assert_eq!(s.to_string(), "sum i: tr(a; O i)*tr(b; O i)");
        assert!(simplify(&parse_expr("tr(a) - tr(a)").unwrap()).is_zero());
        let sym = parse_expr("sum i,j: x[i,j]*tr(a; O i)*tr(b; O j) - sum i,j: y[i,j]*tr(a; O i)*tr(b; O j)").unwrap();
        assert_eq!(simplify(&sym).len(), 2);
        assert!(simplify_with(&sym, true).is_zero());
    }
}
