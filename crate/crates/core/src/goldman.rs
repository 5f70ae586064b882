//! Random group elements and numerical checks of the trace bracket
//! identities `½ tr₁₂[(A⊗B)Γ] = RHS(A, B)` for every supported family.

use std::time::Instant;

use rayon::prelude::*;

use crate::casimir::{casimir_tensor, defect_matrix};
use crate::error::{Error, Result};
use crate::lie_bases::{build_basis, symplectic_form, FamilyTag, GroupFamily, LieBasis};
use crate::matrix::{
    inverse, kron, mat_exp, max_abs_diff, split_real, to_complex, trace_of_product, CMatrix, RMatrix, Tolerance, C64,
};
use crate::octonion::{automorphism_residual, right_mult_matrices};
use crate::report::{ErrorMax, VerificationReport};
use crate::rng::{substream, symmetric, TrialRng};

/// Membership residual below which a sampled matrix is accepted.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
const SAMPLE_RETRIES: usize = 8;

#[derive(Debug, Clone)]
pub struct GroupElement {
    pub family: GroupFamily,
    pub matrix: CMatrix,
    pub membership_residual: f64,
}

impl GroupElement {
    /// Wrap a matrix after measuring how far it is from the group.
    pub fn new(family: GroupFamily, matrix: CMatrix) -> Result<Self> {
        let s = family.side();
        if matrix.shape() != (s, s) {
            return Err(Error::Dimension(format!(
                "{family} element must be {s}x{s}, got {:?}",
                matrix.shape()
            )));
        }
        let membership_residual = membership_residual(family, &matrix);
        Ok(GroupElement {
            family,
            matrix,
            membership_residual,
        })
    }

    pub fn real_matrix(&self) -> RMatrix {
        self.matrix.map(|z| z.re)
    }
}

/// Distance of `m` from the group, measured by the family's defining
/// equations (max-norm residuals, plus an imaginary-part check for real
/// families). Returns infinity when a precondition such as orthogonality
/// for the G2 test fails badly.
pub fn membership_residual(family: GroupFamily, m: &CMatrix) -> f64 {
    let s = family.side();
    let (re, imag) = split_real(m);
    let id = RMatrix::identity(s, s);
    let det = |x: &CMatrix| x.clone().determinant();
    match family.tag {
        FamilyTag::GL => {
            let d = re.clone().determinant().abs();
            imag.max(if d > 1e-8 { 0.0 } else { 1.0 })
        }
        FamilyTag::SL => imag.max((re.clone().determinant() - 1.0).abs()),
        FamilyTag::U => max_abs_diff(&(m.adjoint() * m), &CMatrix::identity(s, s)),
        FamilyTag::SU => {
            max_abs_diff(&(m.adjoint() * m), &CMatrix::identity(s, s)).max((det(m) - C64::new(1.0, 0.0)).norm())
        }
        FamilyTag::SP => {
            let j = symplectic_form(family.n);
            imag.max(max_abs_diff(&(re.transpose() * &j * &re), &j))
        }
        FamilyTag::SO => imag
            .max(max_abs_diff(&(re.transpose() * &re), &id))
            .max((re.clone().determinant() - 1.0).abs()),
        FamilyTag::G2 => {
            let orth = max_abs_diff(&(re.transpose() * &re), &id);
            let aut = automorphism_residual(&re).unwrap_or(f64::INFINITY);
            imag.max(orth).max(aut)
        }
    }
}

/// `exp(Σ c_a t_a)` with `c_a` uniform on `[-scale, scale]`.
pub fn sample_from_basis(basis: &LieBasis, rng: &mut TrialRng, scale: f64) -> Result<GroupElement> {
    if !(scale >= 0.0 && scale <= 2.0) {
        return Err(Error::Domain(format!("sampling scale must lie in [0, 2], got {scale}")));
    }
    let mut last = f64::NAN;
    for _ in 0..SAMPLE_RETRIES {
        let coeffs: Vec<f64> = basis.generators.iter().map(|_| symmetric(rng, scale)).collect();
        let matrix = match basis.real_generators() {
            Some(real) => {
                let mut x = RMatrix::zeros(basis.side, basis.side);
                for (t, c) in real.iter().zip(&coeffs) {
                    x += t * *c;
                }
                to_complex(&mat_exp(&x)?)
            }
            None => {
                let mut x = CMatrix::zeros(basis.side, basis.side);
                for (t, c) in basis.generators.iter().zip(&coeffs) {
                    x += t * C64::new(*c, 0.0);
                }
                mat_exp(&x)?
            }
        };
        let g = GroupElement::new(basis.family, matrix)?;
        if g.membership_residual < MEMBERSHIP_TOL {
            return Ok(g);
        }
        last = g.membership_residual;
    }
    Err(Error::Numeric(format!(
        "{} sample failed membership after {SAMPLE_RETRIES} attempts (residual {last:.3e})",
        basis.family
    )))
}

/// Sample one element from substream `(seed, 0)`.
pub fn sample_element(family: GroupFamily, seed: u64, scale: f64) -> Result<GroupElement> {
    let basis = build_basis(family)?;
    sample_from_basis(&basis, &mut substream(seed, 0), scale)
}

/// A G2 element as a real matrix.
pub fn sample_g2(basis: &LieBasis, rng: &mut TrialRng, scale: f64) -> Result<RMatrix> {
    debug_assert_eq!(basis.family.tag, FamilyTag::G2);
    Ok(sample_from_basis(basis, rng, scale)?.real_matrix())
}

/// Precomputed data for evaluating both sides of the bracket identity.
#[derive(Debug, Clone)]
pub struct BracketContext {
    pub basis: LieBasis,
    pub gamma: RMatrix,
}

impl BracketContext {
    pub fn new(family: GroupFamily) -> Result<Self> {
        let basis = build_basis(family)?;
        let gamma = casimir_tensor(&basis)?.tensor;
        Ok(BracketContext { basis, gamma })
    }

    pub fn family(&self) -> GroupFamily {
        self.basis.family
    }

    /// `(½ tr₁₂[(A⊗B)Γ], family right-hand side)`.
    pub fn sides(&self, a: &GroupElement, b: &GroupElement) -> Result<(C64, C64)> {
        let fam = self.family();
        if a.family != fam || b.family != fam {
            return Err(Error::Domain(format!(
                "bracket needs elements of {fam}, got {} and {}",
                a.family, b.family
            )));
        }
        self.sides_of(&a.matrix, &b.matrix)
    }

    pub fn sides_of(&self, a: &CMatrix, b: &CMatrix) -> Result<(C64, C64)> {
        let k = kron(a, b)?;
        let g = to_complex(&self.gamma);
        let lhs = trace_of_product(&k, &g) * 0.5;
        let ab = (a * b).trace();
        let n = self.basis.side as f64;
        let rhs = match self.family().tag {
            FamilyTag::GL | FamilyTag::U => ab,
            FamilyTag::SL | FamilyTag::SU => ab - a.trace() * b.trace() / n,
            FamilyTag::SP | FamilyTag::SO => (ab - (a * inverse(b)?).trace()) * 0.5,
            FamilyTag::G2 => {
                let mut oct = C64::new(0.0, 0.0);
                for o in right_mult_matrices() {
                    let oc = to_complex(o);
                    oct += trace_of_product(a, &oc) * trace_of_product(b, &oc);
                }
                (ab - (a * inverse(b)?).trace() + oct / 3.0) * 0.5
            }
        };
        Ok((lhs, rhs))
    }
}

pub fn bracket_sides(a: &GroupElement, b: &GroupElement) -> Result<(C64, C64)> {
    BracketContext::new(a.family)?.sides(a, b)
}

fn deviation(lhs: C64, rhs: C64, tol: &Tolerance) -> ErrorMax {
    let d = (lhs - rhs).norm();
    let rel = d / rhs.norm().max(f64::MIN_POSITIVE);
    ErrorMax::single(d, rel, tol.accepts(d, rhs.norm()))
}

fn run_trials<F>(trials: u64, f: F) -> Result<ErrorMax>
where
    F: Fn(u64) -> Result<ErrorMax> + Sync + Send,
{
    let results: Vec<Result<ErrorMax>> = (0..trials).into_par_iter().map(&f).collect();
    results.into_iter().try_fold(ErrorMax::ok(), |acc, r| Ok(acc.merge(r?)))
}

fn family_report(check: &str, family: GroupFamily, seed: u64, trials: u64) -> VerificationReport {
    VerificationReport::new(check)
        .param("group", family.tag.name())
        .param("n", family.n)
        .seeded(seed, trials)
}

/// Compare both sides on `trials` independent pairs.
pub fn verify_bracket(family: GroupFamily, trials: u64, seed: u64, tol: Tolerance) -> Result<VerificationReport> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let start = Instant::now();
    let ctx = BracketContext::new(family)?;
    let m = run_trials(trials, |k| {
        let mut rng = substream(seed, k);
        let a = sample_from_basis(&ctx.basis, &mut rng, 1.0)?;
        let b = sample_from_basis(&ctx.basis, &mut rng, 1.0)?;
        let (lhs, rhs) = ctx.sides(&a, &b)?;
        Ok(deviation(lhs, rhs, &tol))
    })?;
    Ok(family_report("bracket", ctx.family(), seed, trials)
        .param("intersections", 1)
        .errors(m.abs, m.rel)
        .verdict(m.all_ok)
        .timed(start))
}

/// Check `tr₁₂[(A⊗B)χ] = −tr(AB⁻¹)` on random pairs.
pub fn verify_defect(tag: FamilyTag, n: usize, trials: u64, seed: u64) -> Result<VerificationReport> {
    let start = Instant::now();
    let chi = defect_matrix(tag, n)?;
    let family = GroupFamily::new(tag, n)?;
    let basis = build_basis(family)?;
    let m = run_trials(trials, |k| {
        let mut rng = substream(seed, k);
        let a = sample_from_basis(&basis, &mut rng, 1.0)?.real_matrix();
        let b = sample_from_basis(&basis, &mut rng, 1.0)?.real_matrix();
        let lhs = trace_of_product(&kron(&a, &b)?, &chi);
        let rhs = -(&a * inverse(&b)?).trace();
        let d = (lhs - rhs).abs();
        Ok(ErrorMax::single(d, d / rhs.abs().max(f64::MIN_POSITIVE), d < 1e-10))
    })?;
    Ok(family_report("defect", family, seed, trials)
        .errors(m.abs, m.rel)
        .verdict(m.all_ok)
        .timed(start))
}

/// Largest violation of the entrywise inverse formulas for a symplectic `B`
/// against its dense inverse.
pub fn symplectic_inverse_residual(b: &RMatrix, n: usize) -> Result<f64> {
    let inv = inverse(b)?;
    // 1-based accessors.
    let bi = |i: usize, j: usize| inv[(i - 1, j - 1)];
    let bb = |i: usize, j: usize| b[(i - 1, j - 1)];
    let mut worst = 0.0f64;
    let mut check = |x: f64, y: f64| worst = worst.max((x - y).abs());
    for i in 1..=n {
        for j in i + 1..=n {
            check(bi(i, j), bb(j + n, i + n));
            check(bi(j, i), bb(i + n, j + n));
            check(bi(i, j + n), -bb(j, i + n));
            check(bi(j, i + n), -bb(i, j + n));
            check(bi(n + i, j), -bb(j + n, i));
            check(bi(j + n, i), -bb(n + i, j));
            check(bi(i + n, j + n), bb(j, i));
            check(bi(j + n, i + n), bb(i, j));
        }
    }
    for k in 1..=n {
        check(bi(k, k), bb(k + n, k + n));
        check(bi(k, n + k), -bb(k, n + k));
        check(bi(n + k, k), -bb(n + k, k));
        check(bi(k + n, k + n), bb(k, k));
    }
    Ok(worst)
}

pub fn verify_symplectic_inverse(n: usize, trials: u64, seed: u64) -> Result<VerificationReport> {
    let start = Instant::now();
    let family = GroupFamily::new(FamilyTag::SP, n)?;
    let basis = build_basis(family)?;
    let m = run_trials(trials, |k| {
        let b = sample_from_basis(&basis, &mut substream(seed, k), 1.0)?.real_matrix();
        let r = symplectic_inverse_residual(&b, n)?;
        Ok(ErrorMax::single(r, r, r < 1e-9))
    })?;
    Ok(family_report("symplectic-inverse", family, seed, trials)
        .errors(m.abs, m.rel)
        .verdict(m.all_ok)
        .timed(start))
}

/// The six factors of two split monodromies.
#[derive(Debug, Clone)]
pub struct SplitLoopPair {
    pub t_x1_0: GroupElement,
    pub t_0_x2: GroupElement,
    pub mtilde1: GroupElement,
    pub t_y1_0: GroupElement,
    pub t_0_y2: GroupElement,
    pub mtilde2: GroupElement,
}

impl SplitLoopPair {
    pub fn sample(basis: &LieBasis, seed: u64) -> Result<Self> {
        let draw = |k| sample_from_basis(basis, &mut substream(seed, k), 1.0);
        Ok(SplitLoopPair {
            t_x1_0: draw(0)?,
            t_0_x2: draw(1)?,
            mtilde1: draw(2)?,
            t_y1_0: draw(3)?,
            t_0_y2: draw(4)?,
            mtilde2: draw(5)?,
        })
    }

    /// `T(0,x₂) M̃₁ T(x₁,0)`.
    pub fn a(&self) -> CMatrix {
        &self.t_0_x2.matrix * &self.mtilde1.matrix * &self.t_x1_0.matrix
    }

    pub fn b(&self) -> CMatrix {
        &self.t_0_y2.matrix * &self.mtilde2.matrix * &self.t_y1_0.matrix
    }

    /// Full monodromy `T(x₁,x₂) M̃₁` with `T(x₁,x₂) = T(x₁,0) T(0,x₂)`.
    pub fn monodromy1(&self) -> CMatrix {
        &self.t_x1_0.matrix * &self.t_0_x2.matrix * &self.mtilde1.matrix
    }

    pub fn monodromy2(&self) -> CMatrix {
        &self.t_y1_0.matrix * &self.t_0_y2.matrix * &self.mtilde2.matrix
    }
}

/// Cyclic-trace and bracket checks on a split loop pair.
pub fn split_check(ctx: &BracketContext, pair: &SplitLoopPair, tol: &Tolerance) -> Result<ErrorMax> {
    let (a, b) = (pair.a(), pair.b());
    let mut trace_err = 0.0f64;
    let mut trace_ok = true;
    for (x, m) in [(&a, pair.monodromy1()), (&b, pair.monodromy2())] {
        let (tx, tm) = (x.trace(), m.trace());
        let d = (tx - tm).norm();
        trace_err = trace_err.max(d);
        trace_ok &= d < 1e-11 * tm.norm().max(1.0);
    }
    let (lhs, rhs) = ctx.sides_of(&a, &b)?;
    let dev = deviation(lhs, rhs, tol);
    Ok(ErrorMax::single(
        dev.abs.max(trace_err),
        dev.rel,
        dev.all_ok && trace_ok,
    ))
}

pub fn split_harness(family: GroupFamily, seed: u64, tol: Tolerance) -> Result<VerificationReport> {
    let start = Instant::now();
    let ctx = BracketContext::new(family)?;
    let pair = SplitLoopPair::sample(&ctx.basis, seed)?;
    let m = split_check(&ctx, &pair, &tol)?;
    Ok(family_report("split", ctx.family(), seed, 1)
        .errors(m.abs, m.rel)
        .verdict(m.all_ok)
        .timed(start))
}

/// Both sides evaluated at `(A, B)` and at `(gAg⁻¹, gBg⁻¹)`; reports the
/// largest relative change of either side.
pub fn verify_conjugation_invariance(family: GroupFamily, trials: u64, seed: u64) -> Result<VerificationReport> {
    let start = Instant::now();
    let ctx = BracketContext::new(family)?;
    let m = run_trials(trials, |k| {
        let mut rng = substream(seed, k);
        let a = sample_from_basis(&ctx.basis, &mut rng, 1.0)?.matrix;
        let b = sample_from_basis(&ctx.basis, &mut rng, 1.0)?.matrix;
        let g = sample_from_basis(&ctx.basis, &mut rng, 1.0)?.matrix;
        let gi = inverse(&g)?;
        let (l0, r0) = ctx.sides_of(&a, &b)?;
        let (l1, r1) = ctx.sides_of(&(&g * &a * &gi), &(&g * &b * &gi))?;
        let dl = (l1 - l0).norm();
        let dr = (r1 - r0).norm();
        let rel = (dl / l0.norm().max(1.0)).max(dr / r0.norm().max(1.0));
        Ok(ErrorMax::single(dl.max(dr), rel, rel < 1e-9))
    })?;
    Ok(family_report("conjugation-invariance", ctx.family(), seed, trials)
        .errors(m.abs, m.rel)
        .verdict(m.all_ok)
        .timed(start))
}

/// Largest change of a single term `tr(A O_i)` under `A → gAg⁻¹` for
/// random G2 elements. Individual terms are not invariant, so this should
/// be far from zero.
pub fn g2_single_term_deviation(trials: u64, seed: u64) -> Result<f64> {
    let basis = build_basis(GroupFamily::g2())?;
    let ops = right_mult_matrices();
    let mut worst = 0.0f64;
    for k in 0..trials {
        let mut rng = substream(seed, k);
        let a = sample_g2(&basis, &mut rng, 1.0)?;
        let g = sample_g2(&basis, &mut rng, 1.0)?;
        let conj = &g * &a * g.transpose();
        for o in ops {
            worst = worst.max((trace_of_product(&conj, o) - trace_of_product(&a, o)).abs());
        }
    }
    Ok(worst)
}

/// Largest membership residual over `draws` samples.
pub fn verify_sampler(family: GroupFamily, draws: u64, seed: u64) -> Result<VerificationReport> {
    let start = Instant::now();
    let basis = build_basis(family)?;
    let m = run_trials(draws, |k| {
        let g = sample_from_basis(&basis, &mut substream(seed, k), 1.0)?;
        let r = g.membership_residual;
        Ok(ErrorMax::single(r, r, r < MEMBERSHIP_TOL))
    })?;
    Ok(family_report("sampler-membership", basis.family, seed, draws)
        .errors(m.abs, m.rel)
        .verdict(m.all_ok)
        .timed(start))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(tag: FamilyTag, n: usize) -> GroupFamily {
        GroupFamily::new(tag, n).unwrap()
    }

    #[test]
    fn zero_scale_gives_identity() {
        let g = sample_element(fam(FamilyTag::SU, 3), 5, 0.0).unwrap();
        assert!(max_abs_diff(&g.matrix, &CMatrix::identity(3, 3)) < 1e-15);
        assert!(sample_element(fam(FamilyTag::SU, 3), 5, 3.0).is_err());
    }

    #[test]
    fn sampled_elements_are_members() {
        let sp = sample_element(fam(FamilyTag::SP, 2), 17, 1.0).unwrap().real_matrix();
        let j = symplectic_form(2);
        assert!(max_abs_diff(&(sp.transpose() * &j * &sp), &j) < 1e-9);
        let g2 = sample_element(GroupFamily::g2(), 3, 1.0).unwrap().real_matrix();
        assert!(automorphism_residual(&g2).unwrap() < 1e-9);
        assert!((g2.clone().determinant() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn g2_identity_sides_vanish() {
        let ctx = BracketContext::new(GroupFamily::g2()).unwrap();
        let id = GroupElement::new(GroupFamily::g2(), CMatrix::identity(7, 7)).unwrap();
        let (l, r) = ctx.sides(&id, &id).unwrap();
        assert!(l.norm() < 1e-13 && r.norm() < 1e-13);
    }

    #[test]
    fn gl_bracket_is_trace_of_product() {
        let basis = build_basis(fam(FamilyTag::GL, 3)).unwrap();
        let mut rng = substream(9, 0);
        let a = sample_from_basis(&basis, &mut rng, 1.0).unwrap();
        let b = sample_from_basis(&basis, &mut rng, 1.0).unwrap();
        let (l, _) = bracket_sides(&a, &b).unwrap();
        assert!((l - (&a.matrix * &b.matrix).trace()).norm() < 1e-10);
    }

    #[test]
    fn family_mismatch_is_rejected() {
        let a = sample_element(fam(FamilyTag::SO, 3), 1, 1.0).unwrap();
        let b = sample_element(fam(FamilyTag::SO, 4), 1, 1.0).unwrap();
        assert!(matches!(bracket_sides(&a, &b), Err(Error::Domain(_))));
        let c = sample_element(fam(FamilyTag::SL, 3), 1, 1.0).unwrap();
        assert!(BracketContext::new(fam(FamilyTag::SO, 3))
            .unwrap()
            .sides(&a, &c)
            .is_err());
    }

    #[test]
    fn bracket_examples_pass() {
        let tol = Tolerance::default();
        for (tag, n) in [
            (FamilyTag::SU, 3),
            (FamilyTag::SO, 5),
            (FamilyTag::G2, 7),
            (FamilyTag::SP, 2),
        ] {
            let r = verify_bracket(fam(tag, n), 20, 7, tol).unwrap();
            assert!(r.pass, "{}", r.summary());
        }
    }

    #[test]
    fn defect_identity_at_identity() {
        let chi = defect_matrix(FamilyTag::SP, 1).unwrap();
        let i2 = RMatrix::identity(2, 2);
        let lhs = trace_of_product(&kron(&i2, &i2).unwrap(), &chi);
        assert_eq!(lhs, -2.0);
        assert!(verify_defect(FamilyTag::SO, 4, 10, 1).unwrap().max_abs_err < 1e-11);
        assert!(verify_defect(FamilyTag::SP, 3, 10, 1).unwrap().pass);
    }

    #[test]
    fn symplectic_inverse_formulas() {
        assert_eq!(symplectic_inverse_residual(&RMatrix::identity(4, 4), 2).unwrap(), 0.0);
        let b = sample_element(fam(FamilyTag::SP, 1), 4, 1.0).unwrap().real_matrix();
        let inv = inverse(&b).unwrap();
        assert!((inv[(0, 0)] - b[(1, 1)]).abs() < 1e-12);
        assert!(verify_symplectic_inverse(3, 10, 2).unwrap().pass);
        // A generic invertible matrix violates the formulas.
        let g = sample_element(fam(FamilyTag::GL, 4), 4, 1.0).unwrap().real_matrix();
        assert!(symplectic_inverse_residual(&g, 2).unwrap() > 1e-3);
    }

    #[test]
    fn split_with_identity_transitions_reduces() {
        let ctx = BracketContext::new(fam(FamilyTag::GL, 3)).unwrap();
        let mut pair = SplitLoopPair::sample(&ctx.basis, 3).unwrap();
        let id = GroupElement::new(ctx.family(), CMatrix::identity(3, 3)).unwrap();
        pair.t_x1_0 = id.clone();
        pair.t_0_x2 = id.clone();
        pair.t_y1_0 = id.clone();
        pair.t_0_y2 = id;
        assert_eq!(pair.a(), pair.mtilde1.matrix);
        assert!(split_check(&ctx, &pair, &Tolerance::default()).unwrap().all_ok);
        assert!(
            split_harness(fam(FamilyTag::GL, 3), 8, Tolerance::default())
                .unwrap()
                .pass
        );
        assert!(split_harness(GroupFamily::g2(), 8, Tolerance::default()).unwrap().pass);
    }

    #[test]
    fn conjugation_invariance_and_negative_control() {
        for tag in [FamilyTag::U, FamilyTag::SP, FamilyTag::G2] {
            let r = verify_conjugation_invariance(fam(tag, 2), 5, 3).unwrap();
            assert!(r.pass, "{}", r.summary());
        }
        assert!(g2_single_term_deviation(5, 1).unwrap() > 1e-3);
    }

    #[test]
    fn trials_are_schedule_independent() {
        let tol = Tolerance::default();
        let a = verify_bracket(fam(FamilyTag::SL, 3), 16, 42, tol).unwrap();
        let b = verify_bracket(fam(FamilyTag::SL, 3), 16, 42, tol).unwrap();
        assert_eq!((a.max_abs_err, a.max_rel_err), (b.max_abs_err, b.max_rel_err));
    }
}
