//! Brackets of a plain trace with every small exotic observable.

use goldmankit::exotic::{enumerate_specs, ObservableSpec};
use goldmankit::symbolic::{bracket, closure_check, parse_expr, spec_expression, BracketConfig, ClosureOptions};

fn small_specs(bound: usize) -> Vec<ObservableSpec> {
    let mut out = Vec::new();
    for n2 in 0..=bound / 2 {
        for n1 in 0..=bound - 2 * n2 {
            for r in 0..=n1 {
                for s in 0..=n2 {
                    for t in 1..=n1 + 2 * n2 {
                        out.extend(enumerate_specs(r, n1, s, n2, t).unwrap());
                    }
                }
            }
        }
    }
    out
}

/// Some row holds both the K column of an α and a shared Q column.
fn alpha_column_meets_shared_column(spec: &ObservableSpec) -> bool {
    (0..spec.t).any(|row| (spec.r..spec.n1).any(|c| spec.k[row][c] == 1) && (0..spec.s).any(|c| spec.q[row][c] == 1))
}

#[test]
fn closure_outside_the_word_order_exception() {
    let c = parse_expr("tr(c)").unwrap();
    let specs = small_specs(3);
    assert_eq!(specs.len(), 261);
    let mut exceptional = 0;
    for spec in &specs {
        let e = bracket(&c, &spec_expression(spec).unwrap(), &BracketConfig::default()).unwrap();
        let r = closure_check(
            &e,
            &ClosureOptions {
                trials: 3,
                seed: 1,
                rel_tol: 1e-7,
            },
        )
        .unwrap();
        if !alpha_column_meets_shared_column(spec) {
            assert!(r.report.pass, "{spec}: {:#?}", r.failures().collect::<Vec<_>>());
            continue;
        }
        exceptional += 1;
        for f in r.failures() {
            let reason = f.reason.as_deref().unwrap_or_default();
            assert!(reason.contains("K indices before Q indices"), "{spec}: {reason}");
            assert!(f.invariance < 1e-7, "{spec}: {}", f.term);
        }
        assert_eq!(r.failures().count(), 1, "{spec}");
    }
    assert_eq!(exceptional, 8);
}

#[test]
fn closure_report_lists_each_term() {
    let e = bracket(
        &parse_expr("tr(c)").unwrap(),
        &parse_expr("sum i: tr(a;O i)*tr(b;O i)").unwrap(),
        &BracketConfig::default(),
    )
    .unwrap();
    let r = closure_check(&e, &ClosureOptions::default()).unwrap();
    assert!(r.report.pass);
    assert_eq!(r.terms.len(), 6);
    assert!(r.terms.iter().all(|t| t.spec.is_some()));
}
