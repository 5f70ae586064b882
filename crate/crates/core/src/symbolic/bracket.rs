//! Bracket of expressions: pairwise atom rules extended by bilinearity and
//! the Leibniz rule.
//!
//! Atom rules, for distinct base loops `a`, `b`, `γ`, `ρ`:
//!
//! * plain × plain:
//!   `{tr a, tr b} = ½ tr(a.b) − ½ tr(a.~b) + ⅙ Σ_i tr(a;O i) tr(b;O i)`
//! * plain × decorated:
//!   `{tr γ, tr(ρ;W)} = ½ tr(γ.ρ;W) + ½ tr(γ.~ρ;W) + ⅙ Σ_{k,k'} g[k,k'] tr(γ;O k) tr(ρ;W')`
//!   where `W'` puts `O k'` in front of a one-letter `W` and after a longer one;
//! * decorated × decorated, with `W₂ = V O j`:
//!   `½ Σ_k α[k,j] tr(ρ₁.ρ₂;W₁ V O k) + ½ Σ_k β[k,j] tr(ρ₁.~ρ₂;W₁ V O k)
//!    + ⅙ Σ_{m,l} g[m,l] tr(ρ₁;W₁ O l) tr(ρ₂;W₂ O m)`.
//!
//! Swapping the two arguments negates the result. Coefficient matrices are
//! named after the rule and the ordered loop pair, so the same crossing
//! always yields the same symbols.

use num_rational::Rational64;
use num_traits::One;

use super::canon::simplify;
use super::expr::{CoeffAtom, Expression, Idx, Loop, Term, TraceAtom};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BracketConfig {
    /// Longest decoration word an atom rule accepts.
    pub max_word_len: usize,
    /// Permit the decorated×decorated rule on words longer than one letter.
    pub allow_extended: bool,
}

impl Default for BracketConfig {
    fn default() -> Self {
        BracketConfig {
            max_word_len: 8,
            allow_extended: false,
        }
    }
}

struct Fresh(u32);

impl Fresh {
    fn next(&mut self) -> Idx {
        self.0 += 1;
        Idx(self.0 - 1)
    }
}

fn trace_text(a: &TraceAtom) -> String {
    let mut t = Term::trace(a.clone());
    t.bound = a.word.clone();
    t.to_string()
}

fn gap(a: &TraceAtom, b: &TraceAtom, reason: impl Into<String>) -> Error {
    Error::RuleGap {
        lhs: trace_text(a),
        rhs: trace_text(b),
        reason: reason.into(),
    }
}

fn rational(p: i64, q: i64) -> Rational64 {
    Rational64::new(p, q)
}

fn piece(coeff: Rational64, traces: Vec<TraceAtom>, coeffs: Vec<CoeffAtom>, bound: Vec<Idx>) -> Term {
    Term {
        coeff,
        traces,
        coeffs,
        bound,
        extended: false,
        sign_flagged: false,
    }
}

fn coeff(symbol: &str, x: &Loop, y: &Loop, row: Idx, col: Idx) -> CoeffAtom {
    CoeffAtom {
        symbol: format!("{symbol}{{{x},{y}}}"),
        row,
        col,
    }
}

fn negated(terms: Vec<Term>) -> Vec<Term> {
    terms.into_iter().map(|t| Term { coeff: -t.coeff, ..t }).collect()
}

fn plain_plain(a: &Loop, b: &Loop, fresh: &mut Fresh) -> Vec<Term> {
    let i = fresh.next();
    vec![
        piece(
            rational(1, 2),
            vec![TraceAtom::plain(Loop::compose(a.clone(), b.clone(), false))],
            vec![],
            vec![],
        ),
        piece(
            rational(-1, 2),
            vec![TraceAtom::plain(Loop::compose(a.clone(), b.clone(), true))],
            vec![],
            vec![],
        ),
        piece(
            rational(1, 6),
            vec![
                TraceAtom::decorated(a.clone(), vec![i]),
                TraceAtom::decorated(b.clone(), vec![i]),
            ],
            vec![],
            vec![i],
        ),
    ]
}

fn plain_decorated(g: &Loop, rho: &TraceAtom, fresh: &mut Fresh) -> Vec<Term> {
    let w = &rho.word;
    let (k, k2) = (fresh.next(), fresh.next());
    let grown = if w.len() == 1 {
        std::iter::once(k2).chain(w.iter().copied()).collect()
    } else {
        w.iter().copied().chain(std::iter::once(k2)).collect()
    };
    let mut inverse = piece(
        rational(1, 2),
        vec![TraceAtom::decorated(
            Loop::compose(g.clone(), rho.loop_.clone(), true),
            w.clone(),
        )],
        vec![],
        vec![],
    );
    inverse.sign_flagged = w.len() % 2 == 0;
    vec![
        piece(
            rational(1, 2),
            vec![TraceAtom::decorated(
                Loop::compose(g.clone(), rho.loop_.clone(), false),
                w.clone(),
            )],
            vec![],
            vec![],
        ),
        inverse,
        piece(
            rational(1, 6),
            vec![
                TraceAtom::decorated(g.clone(), vec![k]),
                TraceAtom::decorated(rho.loop_.clone(), grown),
            ],
            vec![coeff("gamma", g, &rho.loop_, k, k2)],
            vec![k, k2],
        ),
    ]
}

fn decorated_decorated(x: &TraceAtom, y: &TraceAtom, fresh: &mut Fresh) -> Vec<Term> {
    let (p, q) = (&x.loop_, &y.loop_);
    let (k, m, l) = (fresh.next(), fresh.next(), fresh.next());
    let j = *y.word.last().expect("decorated atom");
    let mut joined: Vec<Idx> = x.word.clone();
    joined.extend(&y.word[..y.word.len() - 1]);
    joined.push(k);
    let mut x_grown = x.word.clone();
    x_grown.push(l);
    let mut y_grown = y.word.clone();
    y_grown.push(m);
    let extended = x.word.len() > 1 || y.word.len() > 1;
    let mut out = vec![
        piece(
            rational(1, 2),
            vec![TraceAtom::decorated(
                Loop::compose(p.clone(), q.clone(), false),
                joined.clone(),
            )],
            vec![coeff("alpha", p, q, k, j)],
            vec![k],
        ),
        piece(
            rational(1, 2),
            vec![TraceAtom::decorated(Loop::compose(p.clone(), q.clone(), true), joined)],
            vec![coeff("beta", p, q, k, j)],
            vec![k],
        ),
        piece(
            rational(1, 6),
            vec![
                TraceAtom::decorated(p.clone(), x_grown),
                TraceAtom::decorated(q.clone(), y_grown),
            ],
            vec![coeff("gamma", p, q, m, l)],
            vec![m, l],
        ),
    ];
    for t in &mut out {
        t.extended = extended;
    }
    out
}

fn loop_key(l: &Loop) -> String {
    l.to_string()
}

/// Bracket of two trace atoms; the returned pieces use fresh indices and
/// may reference the indices already present in the atoms.
fn atom_bracket(a: &TraceAtom, b: &TraceAtom, cfg: &BracketConfig, fresh: &mut Fresh) -> Result<Vec<Term>> {
    if a.loop_ == b.loop_ {
        return Ok(Vec::new());
    }
    if !a.loop_.base_symbols().is_disjoint(&b.loop_.base_symbols()) {
        return Err(gap(a, b, "the loops share a base loop without being identical"));
    }
    if !a.loop_.is_base() || !b.loop_.is_base() {
        return Err(gap(a, b, "a composite loop crosses the other loop more than once"));
    }
    if a.word.len() > cfg.max_word_len || b.word.len() > cfg.max_word_len {
        return Err(gap(
            a,
            b,
            format!("decoration exceeds the configured word length {}", cfg.max_word_len),
        ));
    }
    let swapped = loop_key(&a.loop_) > loop_key(&b.loop_);
    Ok(match (a.word.is_empty(), b.word.is_empty()) {
        (true, true) if swapped => negated(plain_plain(&b.loop_, &a.loop_, fresh)),
        (true, true) => plain_plain(&a.loop_, &b.loop_, fresh),
        (true, false) => plain_decorated(&a.loop_, b, fresh),
        (false, true) => negated(plain_decorated(&b.loop_, a, fresh)),
        (false, false) => {
            if (a.word.len() > 1 || b.word.len() > 1) && !cfg.allow_extended {
                return Err(gap(
                    a,
                    b,
                    "decorated words longer than one letter need the extended rule, which is disabled",
                ));
            }
            if swapped {
                negated(decorated_decorated(b, a, fresh))
            } else {
                decorated_decorated(a, b, fresh)
            }
        }
    })
}

fn without(list: &[TraceAtom], skip: usize) -> impl Iterator<Item = &TraceAtom> {
    list.iter().enumerate().filter(move |(k, _)| *k != skip).map(|(_, t)| t)
}

/// Unsimplified bracket.
pub fn bracket_raw(lhs: &Expression, rhs: &Expression, cfg: &BracketConfig) -> Result<Expression> {
    let rhs = rhs.shifted(lhs.max_index().map_or(0, |m| m + 1));
    let mut fresh = Fresh(rhs.max_index().max(lhs.max_index()).map_or(0, |m| m + 1));
    let mut terms = Vec::new();
    for x in &lhs.terms {
        for y in &rhs.terms {
            for (pa, a) in x.traces.iter().enumerate() {
                for (pb, b) in y.traces.iter().enumerate() {
                    for p in atom_bracket(a, b, cfg, &mut fresh)? {
                        let mut traces = p.traces;
                        traces.extend(without(&x.traces, pa).cloned());
                        traces.extend(without(&y.traces, pb).cloned());
                        let mut coeffs = p.coeffs;
                        coeffs.extend(x.coeffs.iter().cloned());
                        coeffs.extend(y.coeffs.iter().cloned());
                        let mut bound = x.bound.clone();
                        bound.extend(&y.bound);
                        bound.extend(p.bound);
                        terms.push(Term {
                            coeff: x.coeff * y.coeff * p.coeff,
                            traces,
                            coeffs,
                            bound,
                            extended: x.extended || y.extended || p.extended,
                            sign_flagged: x.sign_flagged || y.sign_flagged || p.sign_flagged,
                        });
                    }
                }
            }
        }
    }
    Ok(Expression { terms })
}

/// Bracket of two expressions, simplified, with every binder renamed apart.
pub fn bracket(lhs: &Expression, rhs: &Expression, cfg: &BracketConfig) -> Result<Expression> {
    Ok(simplify(&bracket_raw(lhs, rhs, cfg)?))
}

/// `a − b` simplifies to zero.
pub fn equivalent(a: &Expression, b: &Expression) -> bool {
    simplify(&a.add(&b.scale(-Rational64::one()))).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse::parse_expr;

    fn p(s: &str) -> Expression {
        parse_expr(s).unwrap()
    }

    fn br(a: &str, b: &str) -> Expression {
        bracket(&p(a), &p(b), &BracketConfig::default()).unwrap()
    }

    #[test]
    fn canonical_pair() {
        let e = br("tr(a)", "tr(b)");
        assert_eq!(
            e.to_string(),
            "1/2 tr(a.b) - 1/2 tr(a.~b) + 1/6 sum i: tr(a; O i)*tr(b; O i)"
        );
        let coeffs: Vec<Rational64> = e.terms.iter().map(|t| t.coeff).collect();
        assert_eq!(coeffs, vec![rational(1, 2), rational(-1, 2), rational(1, 6)]);
        assert!(equivalent(&br("tr(b)", "tr(a)"), &e.scale(-Rational64::one())));
    }

    #[test]
    fn self_bracket_vanishes() {
        for x in [
            "tr(a)",
            "tr(a) + tr(b)",
            "sum i: tr(a;O i)*tr(b;O i)",
            "tr(a)*tr(b) + 2 tr(c)",
            "sum i,j: g[i,j]*tr(a;O i)*tr(b;O j)",
        ] {
            assert!(br(x, x).is_zero(), "{x}");
        }
    }

    #[test]
    fn bilinear_and_leibniz() {
        let (x, y, z) = ("sum i: tr(a;O i)*tr(b;O i)", "2 tr(c)", "sum j: tr(d;O j)*tr(e;O j)");
        let cfg = BracketConfig::default();
        let sum = bracket(&p(x).add(&p(y)), &p(z), &cfg).unwrap();
        assert!(equivalent(&sum, &br(x, z).add(&br(y, z))));
        let (x, y, z) = ("tr(a)", "sum i: tr(b;O i)*tr(c;O i)", "tr(d)*tr(e)");
        let prod = bracket(&p(x).mul(&p(y)), &p(z), &cfg).unwrap();
        let rhs = br(x, z).mul(&p(y)).add(&p(x).mul(&br(y, z)));
        assert!(equivalent(&prod, &rhs));
    }

    #[test]
    fn fresh_indices_are_hygienic() {
        let e = br("sum i: tr(a;O i)*tr(b;O i)", "sum i: tr(c;O i)*tr(d;O i)");
        assert!(e.is_hygienic());
        assert!(e.dangling().is_empty());
        assert_eq!(e.len(), 12);
    }

    #[test]
    fn decorated_rule_shapes() {
        let e = br("tr(c)", "sum i: tr(a;O i)*tr(b;O i)");
        assert_eq!(e.len(), 6);
        let text = e.to_string();
        assert!(text.contains("1/2 sum i: tr(b; O i)*tr(c.a; O i)"), "{text}");
        assert!(text.contains("1/2 sum i: tr(b; O i)*tr(c.~a; O i)"), "{text}");
        assert!(
            text.contains("gamma{c,a}[i,j]*tr(a; O j O k)*tr(b; O k)*tr(c; O i)"),
            "{text}"
        );
        assert!(text.contains("gamma{c,a}"), "{text}");
        assert!(e.terms.iter().all(|t| !t.extended && !t.sign_flagged));
        let long = br("tr(c)", "sum i,j: tr(a;O i O j)*tr(b;O i)*tr(d;O j)");
        assert!(long.terms.iter().any(|t| t.sign_flagged));
    }

    #[test]
    fn rule_gaps_are_reported() {
        let cfg = BracketConfig::default();
        let err = bracket(&p("tr(a.b)"), &p("tr(a)"), &cfg).unwrap_err();
        assert!(matches!(err, Error::RuleGap { .. }));
        let err = bracket(&p("tr(a.b)"), &p("tr(c)"), &cfg).unwrap_err();
        assert!(err.to_string().contains("more than once"));
        let long = "sum i,j: tr(a;O i O j)*tr(b;O i)*tr(d;O j)";
        let err = bracket(&p(long), &p("sum k: tr(c;O k)*tr(e;O k)"), &cfg).unwrap_err();
        assert!(err.to_string().contains("extended"));
        let ext = BracketConfig {
            allow_extended: true,
            ..cfg
        };
        let out = bracket(&p(long), &p("sum k: tr(c;O k)*tr(e;O k)"), &ext).unwrap();
        assert!(out.terms.iter().any(|t| t.extended));
        let short = BracketConfig { max_word_len: 1, ..cfg };
        assert!(bracket(&p("tr(c)"), &p(long), &short).is_err());
        assert!(br("tr(a)", "tr(a)").is_zero());
    }
}
