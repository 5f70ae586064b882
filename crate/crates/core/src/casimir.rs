//! Casimir tensors `Γ = Σ f(a) t_a ⊗ t_a`, their closed forms, the defect
//! matrices, and the auxiliary tensor identities.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::lie_bases::{build_basis, gell_mann, FamilyTag, GellMannLabel, GroupFamily, LieBasis};
use crate::matrix::{elementary, kron, max_abs, max_abs_diff, permutation_matrix, split_real, CMatrix, RMatrix, C64};
use crate::octonion::right_mult_matrices;
use crate::report::VerificationReport;
use crate::rng::{substream, symmetric};

#[derive(Debug, Clone)]
pub struct CasimirTensor {
    pub family: GroupFamily,
    /// Side of the tensor space, the square of the matrix side.
    pub side: usize,
    pub tensor: RMatrix,
}

/// Sum `Σ f(a) t_a ⊗ t_a`; refuses bases that fail normalization.
pub fn casimir_tensor(basis: &LieBasis) -> Result<CasimirTensor> {
    let report = crate::lie_bases::check_normalization(basis);
    if !report.pass {
        return Err(Error::Normalization(Box::new(report)));
    }
    let s = basis.side;
    let mut acc = CMatrix::zeros(s * s, s * s);
    for (t, &f) in basis.generators.iter().zip(&basis.signs) {
        acc += kron(t, t)? * C64::new(f, 0.0);
    }
    let (tensor, imag) = split_real(&acc);
    if imag >= 1e-12 {
        return Err(Error::Numeric(format!(
            "Casimir tensor for {} has imaginary part {imag:.3e}",
            basis.family
        )));
    }
    Ok(CasimirTensor {
        family: basis.family,
        side: s * s,
        tensor,
    })
}

fn e(n: usize, i: usize, j: usize) -> RMatrix {
    elementary::<f64>(n, i, j)
}

fn ee(n: usize, (a, b): (usize, usize), (c, d): (usize, usize)) -> RMatrix {
    kron(&e(n, a, b), &e(n, c, d)).expect("square elementary matrices")
}

/// Defect matrix `χ` for `sp(2n)` or `so(n)`, summed term by term.
pub fn defect_matrix(tag: FamilyTag, n: usize) -> Result<RMatrix> {
    let family = GroupFamily::new(tag, n)?;
    match tag {
        FamilyTag::SP => {
            let s = 2 * n;
            let mut chi = RMatrix::zeros(s * s, s * s);
            for i in 1..=n {
                for j in i + 1..=n {
                    chi += ee(s, (i, j + n), (i + n, j));
                    chi += ee(s, (j, i + n), (j + n, i));
                    chi += ee(s, (j + n, i), (j, i + n));
                    chi += ee(s, (i + n, j), (i, j + n));
                    chi -= ee(s, (i, j), (i + n, j + n));
                    chi -= ee(s, (j + n, i + n), (j, i));
                    chi -= ee(s, (j, i), (j + n, i + n));
                    chi -= ee(s, (i + n, j + n), (i, j));
                }
            }
            for k in 1..=n {
                chi += ee(s, (k, n + k), (n + k, k));
                chi += ee(s, (n + k, k), (k, n + k));
                chi -= ee(s, (k, k), (k + n, k + n));
                chi -= ee(s, (k + n, k + n), (k, k));
            }
            Ok(chi)
        }
        FamilyTag::SO => {
            let mut chi = RMatrix::zeros(n * n, n * n);
            for i in 1..=n {
                for j in 1..=n {
                    chi -= ee(n, (i, j), (i, j));
                }
            }
            Ok(chi)
        }
        _ => Err(Error::Domain(format!("no defect matrix for {family}"))),
    }
}

/// `Σ_i O_i ⊗ O_i` over the seven octonion operators.
pub fn octonion_square_sum() -> RMatrix {
    let mut acc = RMatrix::zeros(49, 49);
    for o in right_mult_matrices() {
        acc += kron(o, o).expect("7x7");
    }
    acc
}

/// The closed form each family's Casimir tensor should equal.
pub fn closed_form(family: GroupFamily) -> Result<RMatrix> {
    let family = GroupFamily::new(family.tag, family.n)?;
    let s = family.side();
    let p = permutation_matrix::<f64>(s)?;
    Ok(match family.tag {
        FamilyTag::GL | FamilyTag::U => p * 2.0,
        FamilyTag::SL | FamilyTag::SU => p * 2.0 - RMatrix::identity(s * s, s * s) * (2.0 / s as f64),
        FamilyTag::SP => p + defect_matrix(FamilyTag::SP, family.n)?,
        FamilyTag::SO => p + defect_matrix(FamilyTag::SO, family.n)?,
        FamilyTag::G2 => p + defect_matrix(FamilyTag::SO, 7)? + octonion_square_sum() / 3.0,
    })
}

/// Entrywise comparison of the built tensor with its closed form.
pub fn verify_closed_form(family: GroupFamily) -> Result<VerificationReport> {
    let start = Instant::now();
    let basis = build_basis(family)?;
    let gamma = casimir_tensor(&basis)?;
    let target = closed_form(basis.family)?;
    let err = max_abs_diff(&gamma.tensor, &target);
    Ok(VerificationReport::new("casimir-closed-form")
        .param("group", basis.family.tag.name())
        .param("n", basis.family.n)
        .seeded(0, 1)
        .errors(err, err / max_abs(&target).max(1.0))
        .verdict(err < 1e-12)
        .timed(start))
}

/// Residuals of the three auxiliary identities at side `n`:
/// the diagonal Gell-Mann sum, the off-diagonal sum, and the `(a ± b)` identity
/// on seeded random `a, b`.
pub fn tensor_lemma_residuals(n: usize, seed: u64) -> Result<[f64; 3]> {
    if n < 2 {
        return Err(Error::Domain("tensor lemmas need n >= 2".into()));
    }
    let gm = gell_mann(n)?;
    let ec = |i, j| elementary::<C64>(n, i, j);
    let mut h_sum = CMatrix::zeros(n * n, n * n);
    let mut f_sum = CMatrix::zeros(n * n, n * n);
    for g in &gm {
        let term = kron(&g.matrix, &g.matrix)?;
        match g.label {
            GellMannLabel::H(_) => h_sum += term,
            GellMannLabel::F(_, _) => f_sum += term,
        }
    }
    let mut h_rhs = CMatrix::zeros(n * n, n * n);
    let mut f_rhs = CMatrix::zeros(n * n, n * n);
    for k in 1..=n {
        h_rhs += kron(&ec(k, k), &ec(k, k))? * C64::new(2.0, 0.0);
        for j in 1..=n {
            if j != k {
                f_rhs += kron(&ec(j, k), &ec(k, j))? * C64::new(2.0, 0.0);
            }
        }
    }
    let mut rng = substream(seed, n as u64);
    let a = RMatrix::from_fn(n, n, |_, _| symmetric(&mut rng, 1.0));
    let b = RMatrix::from_fn(n, n, |_, _| symmetric(&mut rng, 1.0));
    let lhs = kron(&(&a + &b), &(&a + &b))? - kron(&(&a - &b), &(&a - &b))?;
    let rhs = (kron(&a, &b)? + kron(&b, &a)?) * 2.0;
    Ok([
        max_abs_diff(&h_sum, &h_rhs),
        max_abs_diff(&f_sum, &f_rhs),
        max_abs_diff(&lhs, &rhs),
    ])
}

pub fn verify_tensor_lemmas(n: usize, seed: u64) -> Result<VerificationReport> {
    let start = Instant::now();
    let r = tensor_lemma_residuals(n, seed)?;
    let worst = r.iter().copied().fold(0.0, f64::max);
    Ok(VerificationReport::new("tensor-lemmas")
        .param("n", n)
        .param("h_lemma", r[0])
        .param("f_lemma", r[1])
        .param("sum_difference", r[2])
        .seeded(seed, 1)
        .errors(worst, worst)
        .verdict(worst < 1e-13)
        .timed(start))
}

/// The seven pair contributions to the `g2` Casimir tensor as displayed
/// pair by pair: each is `−Σ_S e_ab⊗e_ab + Σ_S e_ab⊗e_ba + ⅓ V⊗V` for an
/// index set `S` and a signed vector `V`.
pub fn g2_pair_sums() -> Vec<RMatrix> {
    type Pair = ([(usize, usize); 6], [(f64, usize, usize); 6]);
    let pairs: [Pair; 7] = [
        (
            [(1, 2), (2, 1), (4, 7), (7, 4), (5, 6), (6, 5)],
            [
                (1.0, 1, 2),
                (-1.0, 2, 1),
                (1.0, 4, 7),
                (-1.0, 7, 4),
                (1.0, 6, 5),
                (-1.0, 5, 6),
            ],
        ),
        (
            [(1, 3), (3, 1), (4, 6), (6, 4), (5, 7), (7, 5)],
            [
                (1.0, 3, 1),
                (-1.0, 1, 3),
                (1.0, 4, 6),
                (-1.0, 6, 4),
                (1.0, 5, 7),
                (-1.0, 7, 5),
            ],
        ),
        (
            [(2, 3), (3, 2), (4, 5), (5, 4), (6, 7), (7, 6)],
            [
                (-1.0, 3, 2),
                (1.0, 2, 3),
                (-1.0, 5, 4),
                (1.0, 4, 5),
                (-1.0, 6, 7),
                (1.0, 7, 6),
            ],
        ),
        (
            [(1, 4), (4, 1), (2, 7), (7, 2), (3, 6), (6, 3)],
            [
                (1.0, 1, 4),
                (-1.0, 4, 1),
                (1.0, 3, 6),
                (-1.0, 6, 3),
                (1.0, 7, 2),
                (-1.0, 2, 7),
            ],
        ),
        (
            [(1, 5), (5, 1), (2, 6), (6, 2), (3, 7), (7, 3)],
            [
                (1.0, 5, 1),
                (-1.0, 1, 5),
                (1.0, 6, 2),
                (-1.0, 2, 6),
                (1.0, 7, 3),
                (-1.0, 3, 7),
            ],
        ),
        (
            [(1, 6), (6, 1), (2, 5), (5, 2), (3, 4), (4, 3)],
            [
                (1.0, 6, 1),
                (-1.0, 1, 6),
                (1.0, 2, 5),
                (-1.0, 5, 2),
                (1.0, 3, 4),
                (-1.0, 4, 3),
            ],
        ),
        (
            [(1, 7), (7, 1), (2, 4), (4, 2), (3, 5), (5, 3)],
            [
                (1.0, 1, 7),
                (-1.0, 7, 1),
                (1.0, 2, 4),
                (-1.0, 4, 2),
                (1.0, 5, 3),
                (-1.0, 3, 5),
            ],
        ),
    ];
    pairs
        .iter()
        .map(|(set, vec)| {
            let mut m = RMatrix::zeros(49, 49);
            for &(a, b) in set {
                m -= ee(7, (a, b), (a, b));
                m += ee(7, (a, b), (b, a));
            }
            let v = crate::lie_bases::from_entries(7, vec);
            m + kron(&v, &v).expect("7x7") / 3.0
        })
        .collect()
}
