//! Reproduction of the bracket of two first-type observables on four
//! pairwise crossing loops, checked against its known 12-term expansion.

use std::collections::BTreeMap;
use std::time::Instant;

use num_rational::Rational64;

use super::bracket::{bracket, BracketConfig};
use super::canon::canonical_form;
use super::expr::Expression;
use super::parse::parse_expr;
use super::signature::recognize;
use crate::error::Result;
use crate::exotic::{composite_example_spec, third_type_example_spec};
use crate::report::VerificationReport;

pub const LHS: &str = "sum i: tr(g1; O i)*tr(g2; O i)";
pub const RHS: &str = "sum j: tr(g3; O j)*tr(g4; O j)";

/// The expected expansion, one crossing pair per line.
pub const EXPANSION: &str = "\
1/2 sum i,j,k: alpha[k,j]*tr(g1.g3; O i O k)*tr(g2; O i)*tr(g4; O j)
+ 1/2 sum i,j,k: beta[k,j]*tr(g1.~g3; O i O k)*tr(g2; O i)*tr(g4; O j)
+ 1/6 sum i,j,m,l: gamma[m,l]*tr(g1; O i O l)*tr(g3; O j O m)*tr(g2; O i)*tr(g4; O j)
+ 1/2 sum i,j,k: alpha'[k,j]*tr(g1.g4; O i O k)*tr(g2; O i)*tr(g3; O j)
+ 1/2 sum i,j,k: beta'[k,j]*tr(g1.~g4; O i O k)*tr(g2; O i)*tr(g3; O j)
+ 1/6 sum i,j,m,l: gamma'[m,l]*tr(g1; O i O l)*tr(g4; O j O m)*tr(g2; O i)*tr(g3; O j)
+ 1/2 sum i,j,k: alpha''[k,j]*tr(g2.g3; O i O k)*tr(g1; O i)*tr(g4; O j)
+ 1/2 sum i,j,k: beta''[k,j]*tr(g2.~g3; O i O k)*tr(g1; O i)*tr(g4; O j)
+ 1/6 sum i,j,m,l: gamma''[m,l]*tr(g2; O i O l)*tr(g3; O j O m)*tr(g1; O i)*tr(g4; O j)
+ 1/2 sum i,j,k: alpha'''[k,j]*tr(g2.g4; O i O k)*tr(g1; O i)*tr(g3; O j)
+ 1/2 sum i,j,k: beta'''[k,j]*tr(g2.~g4; O i O k)*tr(g1; O i)*tr(g3; O j)
+ 1/6 sum i,j,m,l: gamma'''[m,l]*tr(g2; O i O l)*tr(g4; O j O m)*tr(g1; O i)*tr(g3; O j)";

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleReport {
    pub report: VerificationReport,
    pub derived: Expression,
    /// Human-readable mismatches; empty on success.
    pub diff: Vec<String>,
}

fn coefficient_counts(e: &Expression) -> BTreeMap<Rational64, usize> {
    let mut m = BTreeMap::new();
    for t in &e.terms {
        *m.entry(t.coeff).or_insert(0) += 1;
    }
    m
}

fn render(m: &BTreeMap<Rational64, usize>) -> String {
    m.iter()
        .map(|(c, n)| format!("{c} x{n}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Derive the expansion with the bracket engine and compare it with
/// [`EXPANSION`] term by term, ignoring coefficient-matrix names.
pub fn reproduce_examples() -> Result<ExampleReport> {
    let start = Instant::now();
    let derived = bracket(&parse_expr(LHS)?, &parse_expr(RHS)?, &BracketConfig::default())?;
    let expected = parse_expr(EXPANSION)?;
    let mut diff = Vec::new();
    if derived.len() != expected.len() {
        diff.push(format!(
            "term count: derived {}, expected {}",
            derived.len(),
            expected.len()
        ));
    }
    let (dc, ec) = (coefficient_counts(&derived), coefficient_counts(&expected));
    if dc != ec {
        diff.push(format!(
            "coefficients: derived {{{}}}, expected {{{}}}",
            render(&dc),
            render(&ec)
        ));
    }
    let key = |t| canonical_form(t, true).0;
    let mut pending: Vec<(String, String)> = derived.terms.iter().map(|t| (key(t), t.to_string())).collect();
    for t in &expected.terms {
        let k = key(t);
        match pending.iter().position(|(d, _)| *d == k) {
            Some(p) => {
                pending.remove(p);
            }
            None => diff.push(format!("missing: {t}")),
        }
    }
    diff.extend(pending.into_iter().map(|(_, s)| format!("unexpected: {s}")));
    for t in &derived.terms {
        let want = if t.coeff == Rational64::new(1, 6) {
            third_type_example_spec()
        } else {
            composite_example_spec()
        };
        match recognize(t) {
            Ok(s) if s.spec.as_ref() == Some(&want) => {}
            Ok(s) => diff.push(format!("signature of `{t}` is {}, expected {want}", s.describe())),
            Err(e) => diff.push(format!("signature of `{t}` not recognized: {e}")),
        }
    }
    let report = VerificationReport::new("reproduce-examples")
        .param("terms", derived.len())
        .param("coefficients", render(&dc))
        .param("mismatches", diff.len())
        .errors(diff.len() as f64, 0.0)
        .verdict(diff.is_empty())
        .timed(start);
    Ok(ExampleReport { report, derived, diff })
}
