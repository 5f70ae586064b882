//! Closure check: every monomial must match the exotic pattern, and the
//! match is cross-validated numerically on random G2 data.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::expr::{Expression, Idx, Loop, Term};
use super::signature::{recognize, Signature};
use crate::error::{Error, Result};
use crate::exotic::{evaluate, invariance_test, EvalConfig, ObservableInstance, ObservableSpec};
use crate::goldman::sample_g2;
use crate::lie_bases::{build_basis, GroupFamily};
use crate::matrix::RMatrix;
use crate::network::{contract_factorized, to_mat7, Factor, Network, DEFAULT_MAX_ENTRIES};
use crate::report::VerificationReport;
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureOptions {
    pub trials: u64,
    pub seed: u64,
    /// Allowed relative change under gauge transformations.
    pub rel_tol: f64,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions {
            trials: 5,
            seed: 0,
            rel_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermCheck {
    pub term: String,
    pub signature: Option<String>,
    pub spec: Option<ObservableSpec>,
    /// Relative gap between the direct contraction and the signature's evaluation.
    pub consistency: f64,
    /// Largest relative change under random simultaneous conjugation; for an
    /// unrecognized term this is measured on the raw contraction.
    pub invariance: f64,
    pub extended: bool,
    pub pass: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport {
    pub report: VerificationReport,
    pub terms: Vec<TermCheck>,
}

/// Random G2 matrices for every base loop and coefficient symbol.
struct Sample {
    loops: BTreeMap<String, RMatrix>,
    coeffs: BTreeMap<String, RMatrix>,
}

impl Sample {
    fn draw(expr: &Expression, seed: u64) -> Result<Sample> {
        let mut loops = BTreeSet::new();
        let mut symbols = BTreeSet::new();
        for t in &expr.terms {
            for a in &t.traces {
                loops.extend(a.loop_.base_symbols().into_iter().map(str::to_string));
            }
            symbols.extend(t.coeffs.iter().map(|c| c.symbol.clone()));
        }
        let basis = build_basis(GroupFamily::g2())?;
        let mut rng = substream(seed, 0);
        let mut fill = |names: BTreeSet<String>| -> Result<BTreeMap<String, RMatrix>> {
            names
                .into_iter()
                .map(|n| Ok((n, sample_g2(&basis, &mut rng, 1.0)?)))
                .collect()
        };
        Ok(Sample {
            loops: fill(loops)?,
            coeffs: fill(symbols)?,
        })
    }

    /// `a.b ↦ AB`, `a.~b ↦ AB⁻¹`.
    fn conjugated(&self, g: &RMatrix) -> Sample {
        let gt = g.transpose();
        let conj = |m: &BTreeMap<String, RMatrix>| m.iter().map(|(k, v)| (k.clone(), g * v * &gt)).collect();
        Sample {
            loops: conj(&self.loops),
            coeffs: conj(&self.coeffs),
        }
    }

    fn monodromy(&self, l: &Loop) -> RMatrix {
        match l {
            Loop::Base(n) => self.loops[n].clone(),
            Loop::Compose { left, right, inverted } => {
                let r = self.monodromy(right);
                self.monodromy(left) * if *inverted { r.transpose() } else { r }
            }
        }
    }
}

fn direct_value(term: &Term, sample: &Sample) -> Result<f64> {
    let pos: BTreeMap<Idx, usize> = term.bound.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut net = Network::new(term.bound.len());
    net.scalar = term.coeff.to_f64().unwrap_or(f64::NAN);
    for a in &term.traces {
        let m = sample.monodromy(&a.loop_);
        if a.word.is_empty() {
            net.scalar *= m.trace();
        } else {
            net.push(Factor::Trace {
                matrix: to_mat7(&m)?,
                word: a.word.iter().map(|i| pos[i]).collect(),
            });
        }
    }
    for c in &term.coeffs {
        net.push(Factor::Coeff {
            matrix: to_mat7(&sample.coeffs[&c.symbol])?,
            row: pos[&c.row],
            col: pos[&c.col],
        });
    }
    contract_factorized(&net, DEFAULT_MAX_ENTRIES)
}

/// Largest relative change of the direct contraction when every loop and
/// coefficient matrix is conjugated by the same random G2 element.
fn direct_invariance(term: &Term, sample: &Sample, trials: u64, seed: u64) -> Result<f64> {
    let basis = build_basis(GroupFamily::g2())?;
    let base = direct_value(term, sample)?;
    let mut worst = 0.0f64;
    for k in 0..trials {
        let g = sample_g2(&basis, &mut substream(seed, k), 1.0)?;
        let moved = direct_value(term, &sample.conjugated(&g))?;
        worst = worst.max((moved - base).abs() / base.abs().max(1.0));
    }
    Ok(worst)
}

fn instance(term: &Term, sig: &Signature, spec: &ObservableSpec, sample: &Sample) -> Result<ObservableInstance> {
    let monos = sig
        .simple
        .iter()
        .chain(&sig.decorated)
        .map(|&p| sample.monodromy(&term.traces[p].loop_))
        .collect();
    let pick = |uses: &[super::signature::CoeffUse]| -> Vec<RMatrix> {
        uses.iter()
            .map(|u| {
                let m = &sample.coeffs[&term.coeffs[u.coeff].symbol];
                if u.transposed {
                    m.transpose()
                } else {
                    m.clone()
                }
            })
            .collect()
    };
    ObservableInstance::new(spec.clone(), monos, pick(&sig.alphas), pick(&sig.betas))
}

fn check_term(k: usize, term: &Term, sample: &Sample, opts: &ClosureOptions) -> Result<TermCheck> {
    let mut check = TermCheck {
        term: term.to_string(),
        signature: None,
        spec: None,
        consistency: 0.0,
        invariance: 0.0,
        extended: term.extended,
        pass: false,
        reason: None,
    };
    let sig = match recognize(term) {
        Ok(s) => s,
        Err(e) => {
            check.reason = Some(format!("unrecognized: {e}"));
            if term.dangling().is_empty() {
                check.invariance = direct_invariance(term, sample, opts.trials, opts.seed.wrapping_add(k as u64))?;
            } else {
                check.invariance = f64::NAN;
            }
            return Ok(check);
        }
    };
    check.signature = Some(sig.describe());
    check.spec = sig.spec.clone();
    let Some(spec) = &sig.spec else {
        check.pass = true;
        return Ok(check);
    };
    let inst = instance(term, &sig, spec, sample)?;
    let direct = direct_value(term, sample)?;
    let plain: f64 = sig
        .canonical
        .iter()
        .map(|&p| sample.monodromy(&term.traces[p].loop_).trace())
        .product();
    let via = evaluate(&inst, &EvalConfig::default())? * plain * term.coeff.to_f64().unwrap_or(f64::NAN);
    check.consistency = (direct - via).abs() / direct.abs().max(1.0);
    let inv = invariance_test(&inst, opts.trials, opts.seed.wrapping_add(k as u64), opts.rel_tol)?;
    check.invariance = inv.report.max_rel_err;
    let consistent = check.consistency < 1e-9;
    check.pass = consistent && inv.report.pass;
    if !consistent {
        check.reason = Some(format!(
            "signature evaluation differs from the direct sum by {:.3e}",
            check.consistency
        ));
    } else if !inv.report.pass {
        check.reason = Some(format!("relative change {:.3e} under conjugation", check.invariance));
    }
    Ok(check)
}

/// Pass iff every monomial has an exotic-observable signature that
/// reproduces its value and is invariant within `opts.rel_tol`.
pub fn closure_check(expr: &Expression, opts: &ClosureOptions) -> Result<ClosureReport> {
    let start = Instant::now();
    let sample = Sample::draw(expr, opts.seed)?;
    let terms: Vec<TermCheck> = expr
        .terms
        .par_iter()
        .enumerate()
        .map(|(k, t)| check_term(k, t, &sample, opts))
        .collect::<Result<_>>()?;
    let pass = terms.iter().all(|c| c.pass);
    let worst_inv = terms.iter().map(|c| c.invariance).fold(0.0, f64::max);
    let worst_cons = terms.iter().map(|c| c.consistency).fold(0.0, f64::max);
    let recognized = terms.iter().filter(|c| c.signature.is_some()).count();
    let report = VerificationReport::new("closure")
        .param("terms", terms.len())
        .param("recognized", recognized)
        .param("max_consistency_gap", worst_cons)
        .seeded(opts.seed, opts.trials)
        .errors(worst_cons, worst_inv)
        .verdict(pass)
        .timed(start);
    Ok(ClosureReport { report, terms })
}

impl ClosureReport {
    pub fn failures(&self) -> impl Iterator<Item = &TermCheck> {
        self.terms.iter().filter(|c| !c.pass)
    }

    /// Error naming the first failing term, for callers that need one.
    pub fn into_result(self) -> Result<ClosureReport> {
        let failure = self.failures().next().map(|f| {
            format!(
                "closure fails on `{}`: {}",
                f.term,
                f.reason.clone().unwrap_or_default()
            )
        });
        match failure {
            Some(msg) => Err(Error::Domain(msg)),
            None => Ok(self),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exotic::first_example_spec;
    use crate::symbolic::bracket::{bracket, BracketConfig};
    use crate::symbolic::parse::parse_expr;
    use crate::symbolic::signature::spec_expression;

    #[test]
    fn canonical_bracket_closes() {
        let e = bracket(
            &parse_expr("tr(a)").unwrap(),
            &parse_expr("tr(b)").unwrap(),
            &BracketConfig::default(),
        )
        .unwrap();
        let r = closure_check(&e, &ClosureOptions::default()).unwrap();
        assert!(r.report.pass, "{:?}", r.terms);
        assert_eq!(r.terms.iter().filter(|c| c.signature.is_some()).count(), 3);
    }

    #[test]
    fn bracket_with_first_observable_closes() {
        let f = spec_expression(&first_example_spec()).unwrap();
        let e = bracket(&parse_expr("tr(c)").unwrap(), &f, &BracketConfig::default()).unwrap();
        let r = closure_check(&e, &ClosureOptions::default()).unwrap();
        assert!(r.report.pass, "{:#?}", r.terms);
        assert!(r.terms.iter().all(|c| c.consistency < 1e-9));
    }

    #[test]
    fn dangling_index_fails() {
        let mut e = parse_expr("sum i: tr(a; O i)*tr(b; O i)").unwrap();
        e.terms[0].bound.clear();
        let r = closure_check(&e, &ClosureOptions::default()).unwrap();
        assert!(!r.report.pass);
        assert!(r.terms[0].reason.as_ref().unwrap().contains("no binder"));
        assert!(r.into_result().is_err());
    }

    #[test]
    fn unrecognized_term_fails() {
        let e = parse_expr("sum i,j: tr(a; O i O j)*tr(b; O j O i)").unwrap();
        let r = closure_check(&e, &ClosureOptions::default()).unwrap();
        assert!(!r.report.pass);
        assert!(r.terms[0].invariance < 1e-9);
    }
}
