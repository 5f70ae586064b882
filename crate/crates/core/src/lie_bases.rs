//! Normalized generator sets `t_a` with signs `f(a)` for the classical
//! families and for `g2`, plus normalization and closure checks.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{elementary, to_complex, CMatrix, RMatrix, C64};
use crate::report::VerificationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyTag {
    GL,
    U,
    SL,
    SU,
    SP,
    SO,
    G2,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 7] = [
        FamilyTag::GL,
        FamilyTag::U,
        FamilyTag::SL,
        FamilyTag::SU,
        FamilyTag::SP,
        FamilyTag::SO,
        FamilyTag::G2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::GL => "gl",
            FamilyTag::U => "u",
            FamilyTag::SL => "sl",
            FamilyTag::SU => "su",
            FamilyTag::SP => "sp",
            FamilyTag::SO => "so",
            FamilyTag::G2 => "g2",
        }
    }

    /// Families whose generators are complex (skew-Hermitian).
    pub fn is_complex(self) -> bool {
        matches!(self, FamilyTag::U | FamilyTag::SU)
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FamilyTag::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown group family '{s}' (expected gl|u|sl|su|sp|so|g2)")))
    }
}

/// A family together with its size parameter. For `G2` the parameter is
/// fixed to 7 regardless of input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupFamily {
    pub tag: FamilyTag,
    pub n: usize,
}

impl GroupFamily {
    pub fn new(tag: FamilyTag, n: usize) -> Result<Self> {
        match tag {
            FamilyTag::G2 => Ok(GroupFamily { tag, n: 7 }),
            FamilyTag::SO if n < 2 => Err(Error::Domain(format!("so({n}) needs n >= 2"))),
            _ if n == 0 => Err(Error::Domain(format!("{tag}: n must be at least 1"))),
            _ => Ok(GroupFamily { tag, n }),
        }
    }

    pub fn g2() -> Self {
        GroupFamily {
            tag: FamilyTag::G2,
            n: 7,
        }
    }

    /// Matrix side of the defining representation.
    pub fn side(&self) -> usize {
        match self.tag {
            FamilyTag::SP => 2 * self.n,
            FamilyTag::G2 => 7,
            _ => self.n,
        }
    }

    /// Real dimension of the Lie algebra.
    pub fn dimension(&self) -> usize {
        let n = self.n;
        match self.tag {
            FamilyTag::GL | FamilyTag::U => n * n,
            FamilyTag::SL | FamilyTag::SU => n * n - 1,
            FamilyTag::SP => n * (2 * n + 1),
            FamilyTag::SO => n * (n - 1) / 2,
            FamilyTag::G2 => 14,
        }
    }
}

impl fmt::Display for GroupFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            FamilyTag::G2 => write!(f, "g2"),
            t => write!(f, "{t}({})", self.n),
        }
    }
}

/// Ordered generators with their normalization signs.
#[derive(Debug, Clone)]
pub struct LieBasis {
    pub family: GroupFamily,
    pub side: usize,
    pub generators: Vec<CMatrix>,
    pub signs: Vec<f64>,
}

impl LieBasis {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Real generators for the real families; `None` for `u` and `su`.
    pub fn real_generators(&self) -> Option<Vec<RMatrix>> {
        if self.family.tag.is_complex() {
            return None;
        }
        Some(self.generators.iter().map(|g| g.map(|z| z.re)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GellMannLabel {
    H(usize),
    F(usize, usize),
}

#[derive(Debug, Clone)]
pub struct GellMann {
    pub label: GellMannLabel,
    pub matrix: CMatrix,
}

/// Generalized Gell-Mann matrices of side `n`, ordered `h_1, …, h_n`, then
/// `f_kj` for `k < j`, then `f_kj` for `k > j` (each block lexicographic).
pub fn gell_mann(n: usize) -> Result<Vec<GellMann>> {
    if n == 0 {
        return Err(Error::Domain("Gell-Mann matrices need n >= 1".into()));
    }
    let e = |i, j| elementary::<C64>(n, i, j);
    let re = |x: f64| C64::new(x, 0.0);
    let mut out = Vec::with_capacity(n * n);
    out.push(GellMann {
        label: GellMannLabel::H(1),
        matrix: CMatrix::identity(n, n) * re((2.0 / n as f64).sqrt()),
    });
    for k in 2..=n {
        let kf = k as f64;
        let mut m = CMatrix::zeros(n, n);
        for i in 1..k {
            m += e(i, i);
        }
        m *= re((2.0 / (kf * (kf - 1.0))).sqrt());
        m -= e(k, k) * re((2.0 - 2.0 / kf).sqrt());
        out.push(GellMann {
            label: GellMannLabel::H(k),
            matrix: m,
        });
    }
    for k in 1..=n {
        for j in k + 1..=n {
            out.push(GellMann {
                label: GellMannLabel::F(k, j),
                matrix: e(k, j) + e(j, k),
            });
        }
    }
    for k in 1..=n {
        for j in 1..k {
            out.push(GellMann {
                label: GellMannLabel::F(k, j),
                matrix: (e(j, k) - e(k, j)) * C64::new(0.0, -1.0),
            });
        }
    }
    Ok(out)
}

/// Build a real matrix from `(coefficient, i, j)` triples with 1-based indices.
pub(crate) fn from_entries(side: usize, entries: &[(f64, usize, usize)]) -> RMatrix {
    let mut m = RMatrix::zeros(side, side);
    for &(c, i, j) in entries {
        m[(i - 1, j - 1)] += c;
    }
    m
}

/// The fourteen `g2` generators `C1, …, C14`.
pub fn g2_generators() -> Vec<RMatrix> {
    let a = 1.0 / 2f64.sqrt();
    let b = 1.0 / 6f64.sqrt();
    let table: [&[(f64, usize, usize)]; 14] = [
        &[(-a, 4, 7), (-a, 5, 6), (a, 6, 5), (a, 7, 4)],
        &[(a, 4, 6), (-a, 5, 7), (-a, 6, 4), (a, 7, 5)],
        &[(-a, 4, 5), (a, 5, 4), (-a, 6, 7), (a, 7, 6)],
        &[(a, 2, 7), (a, 3, 6), (-a, 6, 3), (-a, 7, 2)],
        &[(-a, 2, 6), (a, 3, 7), (a, 6, 2), (-a, 7, 3)],
        &[(a, 2, 5), (-a, 3, 4), (a, 4, 3), (-a, 5, 2)],
        &[(-a, 2, 4), (-a, 3, 5), (a, 4, 2), (a, 5, 3)],
        &[
            (-2.0 * b, 2, 3),
            (2.0 * b, 3, 2),
            (b, 4, 5),
            (-b, 5, 4),
            (-b, 6, 7),
            (b, 7, 6),
        ],
        &[
            (-2.0 * b, 1, 2),
            (2.0 * b, 2, 1),
            (b, 4, 7),
            (-b, 5, 6),
            (b, 6, 5),
            (-b, 7, 4),
        ],
        &[
            (-2.0 * b, 1, 3),
            (2.0 * b, 3, 1),
            (-b, 4, 6),
            (-b, 5, 7),
            (b, 6, 4),
            (b, 7, 5),
        ],
        &[
            (-2.0 * b, 1, 4),
            (-b, 2, 7),
            (b, 3, 6),
            (2.0 * b, 4, 1),
            (-b, 6, 3),
            (b, 7, 2),
        ],
        &[
            (-2.0 * b, 1, 5),
            (b, 2, 6),
            (b, 3, 7),
            (2.0 * b, 5, 1),
            (-b, 6, 2),
            (-b, 7, 3),
        ],
        &[
            (-2.0 * b, 1, 6),
            (-b, 2, 5),
            (-b, 3, 4),
            (b, 4, 3),
            (b, 5, 2),
            (2.0 * b, 6, 1),
        ],
        &[
            (-2.0 * b, 1, 7),
            (b, 2, 4),
            (-b, 3, 5),
            (-b, 4, 2),
            (b, 5, 3),
            (2.0 * b, 7, 1),
        ],
    ];
    table.iter().map(|entries| from_entries(7, entries)).collect()
}

/// Generators of `sp(2n)` in table order, with their signs.
fn symplectic_generators(n: usize) -> Vec<(RMatrix, f64)> {
    let s = 2 * n;
    let a = 1.0 / 2f64.sqrt();
    let mut out = Vec::new();
    let pairs: Vec<(usize, usize)> = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
    for &(i, j) in &pairs {
        out.push((
            from_entries(s, &[(a, i, j + n), (a, j, i + n), (a, j + n, i), (a, i + n, j)]),
            1.0,
        ));
    }
    for &(i, j) in &pairs {
        out.push((
            from_entries(s, &[(a, i, j + n), (a, j, i + n), (-a, j + n, i), (-a, i + n, j)]),
            -1.0,
        ));
    }
    for k in 1..=n {
        out.push((from_entries(s, &[(1.0, k, n + k), (1.0, n + k, k)]), 1.0));
    }
    for k in 1..=n {
        out.push((from_entries(s, &[(1.0, k, n + k), (-1.0, n + k, k)]), -1.0));
    }
    for &(i, j) in &pairs {
        out.push((
            from_entries(s, &[(a, i, j), (a, j, i), (-a, i + n, j + n), (-a, j + n, i + n)]),
            1.0,
        ));
    }
    for &(i, j) in &pairs {
        out.push((
            from_entries(s, &[(a, i, j), (-a, j, i), (a, i + n, j + n), (-a, j + n, i + n)]),
            -1.0,
        ));
    }
    for k in 1..=n {
        out.push((from_entries(s, &[(1.0, k, k), (-1.0, k + n, k + n)]), 1.0));
    }
    out
}

/// The symplectic form `J = Σ_k (e_{k,n+k} − e_{n+k,k})`.
pub fn symplectic_form(n: usize) -> RMatrix {
    let entries: Vec<(f64, usize, usize)> = (1..=n).flat_map(|k| [(1.0, k, n + k), (-1.0, n + k, k)]).collect();
    from_entries(2 * n, &entries)
}

/// Generator list and signs for a family, in a fixed documented order.
pub fn build_basis(family: GroupFamily) -> Result<LieBasis> {
    let family = GroupFamily::new(family.tag, family.n)?;
    let n = family.n;
    let i = C64::new(0.0, 1.0);
    let mut generators = Vec::new();
    let mut signs = Vec::new();
    let mut push = |m: CMatrix, f: f64| {
        generators.push(m);
        signs.push(f);
    };
    match family.tag {
        FamilyTag::GL | FamilyTag::SL => {
            for g in gell_mann(n)? {
                match g.label {
                    GellMannLabel::H(1) if family.tag == FamilyTag::SL => {}
                    GellMannLabel::H(_) => push(g.matrix, 1.0),
                    GellMannLabel::F(k, j) if k < j => push(g.matrix, 1.0),
                    GellMannLabel::F(_, _) => push(g.matrix * i, -1.0),
                }
            }
        }
        FamilyTag::U | FamilyTag::SU => {
            for g in gell_mann(n)? {
                if family.tag == FamilyTag::SU && g.label == GellMannLabel::H(1) {
                    continue;
                }
                push(g.matrix * i, -1.0);
            }
        }
        FamilyTag::SP => {
            for (m, f) in symplectic_generators(n) {
                push(to_complex(&m), f);
            }
        }
        FamilyTag::SO => {
            for a in 1..=n {
                for b in a + 1..=n {
                    push(to_complex(&from_entries(n, &[(1.0, a, b), (-1.0, b, a)])), -1.0);
                }
            }
        }
        FamilyTag::G2 => {
            for m in g2_generators() {
                push(to_complex(&m), -1.0);
            }
        }
    }
    Ok(LieBasis {
        side: family.side(),
        family,
        generators,
        signs,
    })
}

/// Largest deviation of `½ tr(t_a t_b)` from `f(a) δ_ab`.
pub fn normalization_residual(basis: &LieBasis) -> f64 {
    let mut worst = 0.0f64;
    for (a, ta) in basis.generators.iter().enumerate() {
        for (b, tb) in basis.generators.iter().enumerate() {
            let half = crate::matrix::trace_of_product(ta, tb) * C64::new(0.5, 0.0);
            let target = if a == b { basis.signs[a] } else { 0.0 };
            worst = worst.max((half - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Normalization report; passes below the default absolute tolerance.
pub fn check_normalization(basis: &LieBasis) -> VerificationReport {
    let start = Instant::now();
    let residual = normalization_residual(basis);
    VerificationReport::new("normalization")
        .param("group", basis.family.tag.name())
        .param("n", basis.family.n)
        .param("generators", basis.len())
        .seeded(0, 1)
        .errors(residual, residual)
        .verdict(residual < crate::matrix::Tolerance::default().abs_tol)
        .timed(start)
}

/// Rank of the real span of the generators and all their commutators.
pub fn closure_rank(basis: &LieBasis) -> usize {
    let flatten = |m: &CMatrix| -> Vec<f64> { m.iter().map(|z| z.re).chain(m.iter().map(|z| z.im)).collect() };
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let mut absorb = |mut v: Vec<f64>| {
        let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale < 1e-12 {
            return;
        }
        // Two Gram-Schmidt passes keep the projection numerically clean.
        for _ in 0..2 {
            for q in &ortho {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qx)| *x -= d * qx);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 * scale.max(1.0) {
            ortho.push(v.into_iter().map(|x| x / norm).collect());
        }
    };
    for t in &basis.generators {
        absorb(flatten(t));
    }
    for (a, ta) in basis.generators.iter().enumerate() {
        for tb in &basis.generators[a + 1..] {
            absorb(flatten(&(ta * tb - tb * ta)));
        }
    }
    ortho.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::max_abs_diff;

    fn fam(tag: FamilyTag, n: usize) -> GroupFamily {
        GroupFamily::new(tag, n).unwrap()
    }

    #[test]
    fn gell_mann_n2() {
        let g = gell_mann(2).unwrap();
        assert_eq!(g.len(), 4);
        assert!(max_abs_diff(&g[0].matrix, &CMatrix::identity(2, 2)) < 1e-15);
        let h2 = to_complex(&from_entries(2, &[(1.0, 1, 1), (-1.0, 2, 2)]));
        assert!(max_abs_diff(&g[1].matrix, &h2) < 1e-15);
        let f12 = to_complex(&from_entries(2, &[(1.0, 1, 2), (1.0, 2, 1)]));
        assert_eq!(g[2].label, GellMannLabel::F(1, 2));
        assert!(max_abs_diff(&g[2].matrix, &f12) < 1e-15);
        assert_eq!(g[3].label, GellMannLabel::F(2, 1));
        assert!(gell_mann(0).is_err());
    }

    #[test]
    fn dimensions_match() {
        let cases = [
            (FamilyTag::GL, 3, 9),
            (FamilyTag::U, 3, 9),
            (FamilyTag::SL, 3, 8),
            (FamilyTag::SU, 4, 15),
            (FamilyTag::SP, 2, 10),
            (FamilyTag::SO, 4, 6),
            (FamilyTag::G2, 0, 14),
        ];
        for (tag, n, dim) in cases {
            let b = build_basis(fam(tag, n.max(1))).unwrap();
            assert_eq!(b.len(), dim, "{tag}");
            assert_eq!(b.family.dimension(), dim);
        }
    }

    #[test]
    fn family_parsing_and_domain() {
        assert_eq!("G2".parse::<FamilyTag>().unwrap(), FamilyTag::G2);
        assert!("e8".parse::<FamilyTag>().is_err());
        assert!(GroupFamily::new(FamilyTag::SO, 1).is_err());
        assert!(GroupFamily::new(FamilyTag::GL, 0).is_err());
        assert_eq!(GroupFamily::new(FamilyTag::G2, 0).unwrap().side(), 7);
        assert_eq!(fam(FamilyTag::SP, 3).side(), 6);
    }

    #[test]
    fn gl_sign_count() {
        let b = build_basis(fam(FamilyTag::GL, 4)).unwrap();
        assert_eq!(b.signs.iter().filter(|&&s| s < 0.0).count(), (16 - 4) / 2);
        assert!(b.real_generators().is_some());
        let u = build_basis(fam(FamilyTag::U, 2)).unwrap();
        assert!(u.real_generators().is_none());
        assert!(u.signs.iter().all(|&s| s == -1.0));
    }

    #[test]
    fn normalization_examples() {
        let gl = build_basis(fam(FamilyTag::GL, 3)).unwrap();
        assert!(normalization_residual(&gl) < 1e-14);
        let c1 = &g2_generators()[0];
        assert!(((c1 * c1).trace() * 0.5 + 1.0).abs() < 1e-15);
        let sp = build_basis(fam(FamilyTag::SP, 1)).unwrap();
        // Row three of the table, e12 + e21, sits at position 0 for n = 1.
        let x = &sp.generators[0];
        assert!(((x * x).trace().re * 0.5 - 1.0).abs() < 1e-15);
        assert_eq!(sp.signs, vec![1.0, -1.0, 1.0]);
    }

    #[test]
    fn so4_generators() {
        let b = build_basis(fam(FamilyTag::SO, 4)).unwrap();
        let first = to_complex(&from_entries(4, &[(1.0, 1, 2), (-1.0, 2, 1)]));
        assert_eq!(b.generators[0], first);
    }

    #[test]
    fn g2_generators_skew_traceless() {
        for c in g2_generators() {
            assert_eq!(c.transpose(), -&c);
            assert_eq!(c.trace(), 0.0);
        }
    }

    #[test]
    fn sp_generators_preserve_form() {
        for n in 1..=4 {
            let j = symplectic_form(n);
            for (x, _) in symplectic_generators(n) {
                let r = x.transpose() * &j + &j * &x;
                assert!(crate::matrix::max_abs(&r) < 1e-15);
            }
        }
    }

    #[test]
    fn closure_ranks() {
        assert_eq!(closure_rank(&build_basis(fam(FamilyTag::SO, 3)).unwrap()), 3);
        assert_eq!(closure_rank(&build_basis(fam(FamilyTag::G2, 7)).unwrap()), 14);
        assert_eq!(closure_rank(&build_basis(fam(FamilyTag::GL, 2)).unwrap()), 4);
        for tag in FamilyTag::ALL {
            let sizes: Vec<usize> = match tag {
                FamilyTag::G2 => vec![7],
                FamilyTag::SP => vec![1, 2, 3],
                FamilyTag::SO => (2..=6).collect(),
                _ => (1..=6).collect(),
            };
            for n in sizes {
                let b = build_basis(fam(tag, n)).unwrap();
                assert_eq!(closure_rank(&b), b.len(), "{tag} n={n}");
            }
        }
    }
}
