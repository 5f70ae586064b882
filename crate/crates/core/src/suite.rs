//! Standard verification grids. Each function returns reports in a fixed
//! order so a whole run is reproducible from its seed.

use std::time::Instant;

use rayon::prelude::*;

use crate::casimir::{verify_closed_form, verify_tensor_lemmas};
use crate::error::Result;
use crate::exotic::{
    composite_example_spec, enumerate_specs, enumeration_count, evaluate, first_example_spec, invariance_test,
    third_type_example_spec, validate_spec, EvalConfig, ObservableInstance, ObservableSpec,
};
use crate::goldman::{sample_g2, split_harness, verify_bracket, verify_defect, verify_symplectic_inverse};
use crate::lie_bases::{build_basis, check_normalization, FamilyTag, GroupFamily};
use crate::matrix::Tolerance;
use crate::octonion::{
    automorphism_residual, conjugation_residual, oct_mul, rebuild_from_table, right_mult_matrices, structure_residual,
    Octonion, StructureConstants, TRIPLES,
};
use crate::report::{ErrorMax, VerificationReport};
use crate::rng::substream;
use crate::symbolic::{
    bracket, closure_check, parse_expr, reproduce_examples, spec_expression, BracketConfig, ClosureOptions,
};

/// Families and sizes covered by the structural checks.
pub fn family_grid() -> Vec<GroupFamily> {
    let mut out = Vec::new();
    for tag in [FamilyTag::GL, FamilyTag::U, FamilyTag::SL, FamilyTag::SU] {
        out.extend((2..=6).map(|n| GroupFamily::new(tag, n)));
    }
    out.extend((1..=3).map(|n| GroupFamily::new(FamilyTag::SP, n)));
    out.extend((2..=7).map(|n| GroupFamily::new(FamilyTag::SO, n)));
    out.push(Ok(GroupFamily::g2()));
    out.into_iter().map(|f| f.expect("grid sizes are in range")).collect()
}

pub fn normalization_suite() -> Result<Vec<VerificationReport>> {
    family_grid()
        .into_par_iter()
        .map(|f| Ok(check_normalization(&build_basis(f)?)))
        .collect()
}

pub fn casimir_suite() -> Result<Vec<VerificationReport>> {
    family_grid().into_par_iter().map(verify_closed_form).collect()
}

pub fn tensor_lemma_suite(seed: u64) -> Result<Vec<VerificationReport>> {
    (2..=6).map(|n| verify_tensor_lemmas(n, seed)).collect()
}

pub fn bracket_suite(trials: u64, seed: u64, tol: Tolerance) -> Result<Vec<VerificationReport>> {
    family_grid()
        .into_iter()
        .map(|f| verify_bracket(f, trials, seed, tol))
        .collect()
}

pub fn defect_suite(trials: u64, seed: u64) -> Result<Vec<VerificationReport>> {
    let sp = (1..=3).map(|n| (FamilyTag::SP, n));
    let so = (3..=7).map(|n| (FamilyTag::SO, n));
    sp.chain(so)
        .map(|(tag, n)| verify_defect(tag, n, trials, seed))
        .collect()
}

pub fn symplectic_inverse_suite(trials: u64, seed: u64) -> Result<Vec<VerificationReport>> {
    (1..=3).map(|n| verify_symplectic_inverse(n, trials, seed)).collect()
}

pub fn split_suite(seed: u64, tol: Tolerance) -> Result<Vec<VerificationReport>> {
    family_grid().into_iter().map(|f| split_harness(f, seed, tol)).collect()
}

/// Expected `e_i e_j` read straight off the triple list, as `(real, [im])`
/// with integer entries.
fn table_product(i: usize, j: usize) -> (i32, [i32; 7]) {
    let mut im = [0; 7];
    if i == j {
        return (-1, im);
    }
    for t in TRIPLES {
        for rot in 0..3 {
            let (a, b, c) = (t[rot], t[(rot + 1) % 3], t[(rot + 2) % 3]);
            if (a, b) == (i, j) {
                im[c - 1] = 1;
                return (0, im);
            }
            if (b, a) == (i, j) {
                im[c - 1] = -1;
                return (0, im);
            }
        }
    }
    unreachable!("every pair of distinct units lies on one triple")
}

/// Count of table entries where the implemented product or `ε` disagree
/// with the triple list.
pub fn table_mismatches() -> usize {
    let eps = StructureConstants::new();
    let mut bad = 0;
    for i in 1..=7 {
        for j in 1..=7 {
            let (re, im) = table_product(i, j);
            let got = oct_mul(&Octonion::unit(i), &Octonion::unit(j));
            if got.re != re as f64 {
                bad += 1;
            }
            for k in 0..7 {
                if got.im[k] != im[k] as f64 {
                    bad += 1;
                }
                if i != j && eps.get(i, j, k + 1) as i32 != im[k] {
                    bad += 1;
                }
            }
        }
    }
    bad
}

/// Octonion table, structure identity, operator rebuild, conjugation lemma
/// over `conj_trials` elements and sampler quality over `draws` elements.
pub fn octonion_suite(conj_trials: u64, draws: u64, seed: u64) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();

    let start = Instant::now();
    let bad = table_mismatches();
    out.push(
        VerificationReport::new("octonion-table")
            .param("mismatches", bad)
            .seeded(0, 49)
            .errors(bad as f64, bad as f64)
            .verdict(bad == 0)
            .timed(start),
    );

    let start = Instant::now();
    let s = structure_residual();
    out.push(
        VerificationReport::new("octonion-structure")
            .seeded(0, 49)
            .errors(s, s)
            .verdict(s == 0.0)
            .timed(start),
    );

    let start = Instant::now();
    let rebuilt = rebuild_from_table();
    let diff = rebuilt
        .iter()
        .zip(right_mult_matrices())
        .map(|(a, b)| a.iter().zip(b.iter()).filter(|(x, y)| x != y).count())
        .sum::<usize>();
    out.push(
        VerificationReport::new("octonion-rebuild")
            .param("differing_entries", diff)
            .seeded(0, 7)
            .errors(diff as f64, diff as f64)
            .verdict(diff == 0)
            .timed(start),
    );

    let basis = build_basis(GroupFamily::g2())?;
    let start = Instant::now();
    let m = (0..conj_trials)
        .into_par_iter()
        .map(|k| {
            let g = sample_g2(&basis, &mut substream(seed, k), 1.0)?;
            let r = conjugation_residual(&g)?;
            Ok(ErrorMax::single(r, r, r < 1e-8))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(ErrorMax::ok(), ErrorMax::merge);
    out.push(
        VerificationReport::new("octonion-conjugation")
            .seeded(seed, conj_trials)
            .errors(m.abs, m.rel)
            .verdict(m.all_ok)
            .timed(start),
    );

    let start = Instant::now();
    let m = (0..draws)
        .into_par_iter()
        .map(|k| {
            let g = sample_g2(&basis, &mut substream(seed, k), 1.0)?;
            let r = automorphism_residual(&g)?;
            Ok(ErrorMax::single(r, r, r < 1e-8))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(ErrorMax::ok(), ErrorMax::merge);
    out.push(
        VerificationReport::new("g2-sampler-automorphism")
            .seeded(seed, draws)
            .errors(m.abs, m.rel)
            .verdict(m.all_ok)
            .timed(start),
    );
    Ok(out)
}

/// Every spec with `n1 + 2·n2 <= bound`, in a fixed order.
pub fn small_specs(bound: usize) -> Result<Vec<ObservableSpec>> {
    let mut out = Vec::new();
    for n2 in 0..=bound / 2 {
        for n1 in 0..=bound - 2 * n2 {
            for r in 0..=n1 {
                for s in 0..=n2 {
                    for t in 1..=n1 + 2 * n2 {
                        out.extend(enumerate_specs(r, n1, s, n2, t)?);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Spec sizes used by the enumeration and engine-agreement checks.
pub const EXOTIC_GRID_BOUND: usize = 4;

/// Enumerated spec lists against the closed-form count for every shape
/// tuple within the grid.
pub fn enumeration_report() -> Result<VerificationReport> {
    let start = Instant::now();
    let (mut tuples, mut bad, mut total) = (0u64, 0u64, 0u128);
    for n2 in 0..=EXOTIC_GRID_BOUND / 2 {
        for n1 in 0..=EXOTIC_GRID_BOUND - 2 * n2 {
            for r in 0..=n1 {
                for s in 0..=n2 {
                    for t in 1..=n1 + 2 * n2 {
                        let list = enumerate_specs(r, n1, s, n2, t)?;
                        let expected = enumeration_count(n1, s, n2, t);
                        let distinct = list.iter().collect::<std::collections::HashSet<_>>().len();
                        let valid = list.iter().all(|sp| validate_spec(sp).is_ok());
                        if list.len() as u128 != expected || distinct != list.len() || !valid {
                            bad += 1;
                        }
                        tuples += 1;
                        total += expected;
                    }
                }
            }
        }
    }
    Ok(VerificationReport::new("exotic-enumeration")
        .param("bound", EXOTIC_GRID_BOUND)
        .param("specs", total as u64)
        .param("mismatched_tuples", bad)
        .seeded(0, tuples)
        .errors(bad as f64, bad as f64)
        .verdict(bad == 0)
        .timed(start))
}

/// Brute-force and factorized values on one random instance of every spec
/// in the grid whose network has at most six free indices.
pub fn engine_agreement_report(seed: u64) -> Result<VerificationReport> {
    let start = Instant::now();
    let specs: Vec<ObservableSpec> = small_specs(EXOTIC_GRID_BOUND)?
        .into_iter()
        .filter(|s| s.free_indices() <= 6)
        .collect();
    let brute = EvalConfig::brute_force();
    let fact = EvalConfig::default();
    let m = specs
        .par_iter()
        .enumerate()
        .map(|(k, spec)| {
            let inst = ObservableInstance::sample(spec.clone(), seed.wrapping_add(k as u64))?;
            let a = evaluate(&inst, &brute)?;
            let b = evaluate(&inst, &fact)?;
            let d = (a - b).abs();
            let rel = d / a.abs().max(1.0);
            Ok(ErrorMax::single(d, rel, rel < 1e-12))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(ErrorMax::ok(), ErrorMax::merge);
    Ok(VerificationReport::new("exotic-engines")
        .param("bound", EXOTIC_GRID_BOUND)
        .param("max_free", 6)
        .seeded(seed, specs.len() as u64)
        .errors(m.abs, m.rel)
        .verdict(m.all_ok)
        .timed(start))
}

pub fn exotic_suite(trials: u64, seed: u64) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    let examples = [
        first_example_spec(),
        third_type_example_spec(),
        composite_example_spec(),
    ];
    for spec in &examples {
        let start = Instant::now();
        let res = validate_spec(spec);
        let n = res.as_ref().err().map_or(0, |v| v.len());
        out.push(
            VerificationReport::new("exotic-validate")
                .param("spec", spec.to_string())
                .param("violations", n)
                .seeded(0, 1)
                .errors(n as f64, n as f64)
                .verdict(res.is_ok())
                .timed(start),
        );
    }
    for spec in &examples {
        let inst = ObservableInstance::sample(spec.clone(), seed)?;
        let inv = invariance_test(&inst, trials, seed, 1e-8)?;
        let start = Instant::now();
        let c = inv.negative_control;
        out.push(inv.report);
        out.push(
            VerificationReport::new("exotic-negative-control")
                .param("spec", spec.to_string())
                .param("threshold", 1e-3)
                .seeded(seed, trials)
                .errors(c, c)
                .verdict(c > 1e-3)
                .timed(start),
        );
    }
    out.push(enumeration_report()?);
    out.push(engine_agreement_report(seed)?);
    Ok(out)
}

/// The plain-trace bracket must have the three canonical terms.
pub fn canonical_bracket_report() -> Result<VerificationReport> {
    let start = Instant::now();
    let e = bracket(&parse_expr("tr(a)")?, &parse_expr("tr(b)")?, &BracketConfig::default())?;
    let mut coeffs: Vec<String> = e.terms.iter().map(|t| t.coeff.to_string()).collect();
    coeffs.sort();
    let ok = e.len() == 3 && coeffs == ["-1/2", "1/2", "1/6"];
    Ok(VerificationReport::new("symbolic-canonical-bracket")
        .param("expression", e.to_string())
        .param("terms", e.len())
        .seeded(0, 1)
        .verdict(ok)
        .timed(start))
}

/// Bracket of `tr(c)` with every spec up to `n1 + 2·n2 <= 3`, each checked
/// for closure. Params list the specs whose brackets fail.
pub fn closure_sweep_report(trials: u64, seed: u64) -> Result<VerificationReport> {
    let start = Instant::now();
    let specs = small_specs(3)?;
    let c = parse_expr("tr(c)")?;
    let opts = ClosureOptions {
        trials,
        seed,
        rel_tol: 1e-7,
    };
    let results = specs
        .par_iter()
        .map(|spec| {
            let e = bracket(&c, &spec_expression(spec)?, &BracketConfig::default())?;
            let r = closure_check(&e, &opts)?;
            let worst = r.terms.iter().map(|t| t.invariance).fold(0.0, f64::max);
            Ok((spec, r.report.pass, worst, r.failures().count()))
        })
        .collect::<Result<Vec<_>>>()?;
    let failing: Vec<String> = results.iter().filter(|r| !r.1).map(|r| r.0.to_string()).collect();
    let failing_terms: usize = results.iter().map(|r| r.3).sum();
    let worst = results.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(VerificationReport::new("symbolic-closure-sweep")
        .param("specs", specs.len())
        .param("failing_specs", failing.clone())
        .param("failing_terms", failing_terms)
        .seeded(seed, trials)
        .errors(worst, worst)
        .verdict(failing.is_empty())
        .timed(start))
}

pub fn symbolic_suite(trials: u64, seed: u64) -> Result<Vec<VerificationReport>> {
    Ok(vec![
        canonical_bracket_report()?,
        reproduce_examples()?.report,
        closure_sweep_report(trials, seed)?,
    ])
}

/// Trial counts for a full run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub tol: Tolerance,
    pub bracket_trials: u64,
    pub defect_trials: u64,
    pub octonion_draws: u64,
    pub exotic_trials: u64,
    pub closure_trials: u64,
}

impl SuiteConfig {
    pub fn new(seed: u64) -> Self {
        SuiteConfig {
            seed,
            tol: Tolerance::default(),
            bracket_trials: 100,
            defect_trials: 100,
            octonion_draws: 10_000,
            exotic_trials: 50,
            closure_trials: 3,
        }
    }
}

/// Every suite, sorted by check name and then by parameters.
pub fn run_all(cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    let s = cfg.seed;
    let mut out = normalization_suite()?;
    out.extend(casimir_suite()?);
    out.extend(tensor_lemma_suite(s)?);
    out.extend(bracket_suite(cfg.bracket_trials, s, cfg.tol)?);
    out.extend(defect_suite(cfg.defect_trials, s)?);
    out.extend(symplectic_inverse_suite(cfg.defect_trials, s)?);
    out.extend(octonion_suite(100, cfg.octonion_draws, s)?);
    out.extend(split_suite(s, cfg.tol)?);
    out.extend(exotic_suite(cfg.exotic_trials, s)?);
    out.extend(symbolic_suite(cfg.closure_trials, s)?);
    sort_reports(&mut out);
    Ok(out)
}

/// Stable order by `(check, params)`.
pub fn sort_reports(reports: &mut [VerificationReport]) {
    reports.sort_by_cached_key(|r| (r.check.clone(), serde_json::to_string(&r.params).unwrap_or_default()));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(family_grid().len(), 4 * 5 + 3 + 6 + 1);
        assert_eq!(small_specs(3).unwrap().len(), 261);
    }

    #[test]
    fn table_matches_triples() {
        assert_eq!(table_mismatches(), 0);
        assert_eq!(table_product(2, 1), (0, [0, 0, -1, 0, 0, 0, 0]));
    }

    #[test]
    fn canonical_bracket_passes() {
        assert!(canonical_bracket_report().unwrap().pass);
    }
}
