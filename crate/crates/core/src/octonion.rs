//! Octonion arithmetic, the seven 7×7 operators `O_i`, and G2 membership
//! checks based on the automorphism property.

use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::lie_bases::from_entries;
use crate::matrix::{max_abs, max_abs_diff, RMatrix};

/// Triples `(i, j, k)` with `e_i e_j = e_k`.
pub const TRIPLES: [[usize; 3]; 7] = [
    [1, 2, 3],
    [1, 4, 5],
    [1, 7, 6],
    [2, 4, 6],
    [2, 5, 7],
    [3, 4, 7],
    [3, 6, 5],
];

/// Totally antisymmetric `ε_ijk` (0-based storage, 1-based accessors).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureConstants {
    eps: [[[i8; 7]; 7]; 7],
}

impl StructureConstants {
    pub fn new() -> Self {
        let mut eps = [[[0i8; 7]; 7]; 7];
        for [i, j, k] in TRIPLES {
            let (i, j, k) = (i - 1, j - 1, k - 1);
            for (a, b, c, s) in [
                (i, j, k, 1),
                (j, k, i, 1),
                (k, i, j, 1),
                (j, i, k, -1),
                (i, k, j, -1),
                (k, j, i, -1),
            ] {
                eps[a][b][c] = s;
            }
        }
        StructureConstants { eps }
    }

    /// `ε_ijk` for 1-based indices.
    pub fn get(&self, i: usize, j: usize, k: usize) -> i8 {
        self.eps[i - 1][j - 1][k - 1]
    }
}

impl Default for StructureConstants {
    fn default() -> Self {
        Self::new()
    }
}

fn eps() -> &'static StructureConstants {
    static EPS: OnceLock<StructureConstants> = OnceLock::new();
    EPS.get_or_init(StructureConstants::new)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Octonion {
    pub re: f64,
    pub im: [f64; 7],
}

impl Octonion {
    pub const ZERO: Octonion = Octonion { re: 0.0, im: [0.0; 7] };
    pub const ONE: Octonion = Octonion { re: 1.0, im: [0.0; 7] };

    /// Unit `e_i` for `i` in 1..=7; `unit(0)` is the real unit.
    pub fn unit(i: usize) -> Self {
        let mut x = Octonion::ZERO;
        if i == 0 {
            x.re = 1.0;
        } else {
            x.im[i - 1] = 1.0;
        }
        x
    }

    pub fn imaginary(im: [f64; 7]) -> Self {
        Octonion { re: 0.0, im }
    }

    pub fn scale(self, s: f64) -> Self {
        Octonion {
            re: self.re * s,
            im: self.im.map(|x| x * s),
        }
    }

    /// Max-norm of the coefficient vector.
    pub fn max_norm(&self) -> f64 {
        self.im.iter().fold(self.re.abs(), |acc, x| acc.max(x.abs()))
    }
}

impl Add for Octonion {
    type Output = Octonion;
    fn add(self, o: Octonion) -> Octonion {
        let mut im = self.im;
        im.iter_mut().zip(o.im).for_each(|(a, b)| *a += b);
        Octonion { re: self.re + o.re, im }
    }
}

impl Sub for Octonion {
    type Output = Octonion;
    fn sub(self, o: Octonion) -> Octonion {
        self + o.scale(-1.0)
    }
}

impl Mul for Octonion {
    type Output = Octonion;
    fn mul(self, o: Octonion) -> Octonion {
        oct_mul(&self, &o)
    }
}

/// Octonion product: bilinear extension of `e_i e_j = −δ_ij + ε_ijk e_k`.
pub fn oct_mul(x: &Octonion, y: &Octonion) -> Octonion {
    let e = eps();
    let mut out = Octonion::ZERO;
    out.re = x.re * y.re;
    for i in 0..7 {
        out.re -= x.im[i] * y.im[i];
        out.im[i] = x.re * y.im[i] + y.re * x.im[i];
    }
    for i in 0..7 {
        if x.im[i] == 0.0 {
            continue;
        }
        for j in 0..7 {
            if i == j || y.im[j] == 0.0 {
                continue;
            }
            let p = x.im[i] * y.im[j];
            for k in 0..7 {
                let s = e.eps[i][j][k];
                if s != 0 {
                    out.im[k] += s as f64 * p;
                }
            }
        }
    }
    out
}

/// The seven operators exactly as tabulated (signed elementary sums).
pub fn right_mult_matrices() -> &'static [RMatrix; 7] {
    static OPS: OnceLock<[RMatrix; 7]> = OnceLock::new();
    OPS.get_or_init(|| {
        let t: [[(f64, usize, usize); 6]; 7] = [
            [
                (1.0, 3, 2),
                (-1.0, 2, 3),
                (1.0, 5, 4),
                (-1.0, 4, 5),
                (-1.0, 7, 6),
                (1.0, 6, 7),
            ],
            [
                (1.0, 1, 3),
                (-1.0, 3, 1),
                (1.0, 6, 4),
                (-1.0, 4, 6),
                (1.0, 7, 5),
                (-1.0, 5, 7),
            ],
            [
                (1.0, 2, 1),
                (-1.0, 1, 2),
                (1.0, 7, 4),
                (-1.0, 4, 7),
                (-1.0, 6, 5),
                (1.0, 5, 6),
            ],
            [
                (1.0, 1, 5),
                (1.0, 2, 6),
                (1.0, 3, 7),
                (-1.0, 5, 1),
                (-1.0, 6, 2),
                (-1.0, 7, 3),
            ],
            [
                (1.0, 4, 1),
                (-1.0, 7, 2),
                (1.0, 6, 3),
                (-1.0, 1, 4),
                (-1.0, 3, 6),
                (1.0, 2, 7),
            ],
            [
                (1.0, 7, 1),
                (1.0, 4, 2),
                (-1.0, 5, 3),
                (-1.0, 2, 4),
                (1.0, 3, 5),
                (-1.0, 1, 7),
            ],
            [
                (1.0, 5, 2),
                (-1.0, 6, 1),
                (1.0, 4, 3),
                (-1.0, 3, 4),
                (-1.0, 2, 5),
                (1.0, 1, 6),
            ],
        ];
        std::array::from_fn(|i| from_entries(7, &t[i]))
    })
}

/// Sparse view of `O_i`: for each column `j`, the single nonzero `(row, sign)`
/// or `None` for the zero column `j = i` (all 0-based).
pub fn sparse_ops() -> &'static [[Option<(usize, f64)>; 7]; 7] {
    static SPARSE: OnceLock<[[Option<(usize, f64)>; 7]; 7]> = OnceLock::new();
    SPARSE.get_or_init(|| {
        let ops = right_mult_matrices();
        std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..7).find(|&k| ops[i][(k, j)] != 0.0).map(|k| (k, ops[i][(k, j)])))
        })
    })
}

/// Rebuild the seven operators from the multiplication table with
/// `(O_i)_kj` equal to the `e_k` component of `e_i e_j`.
pub fn rebuild_from_table() -> [RMatrix; 7] {
    std::array::from_fn(|i| {
        RMatrix::from_fn(7, 7, |k, j| {
            oct_mul(&Octonion::unit(i + 1), &Octonion::unit(j + 1)).im[k]
        })
    })
}

/// Orientation diagnostics comparing the tabulated operators against the
/// two possible multiplication orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrientationCheck {
    /// `O_i e_j = Im(e_i e_j)` for all `i, j`.
    pub matches_left_product: bool,
    /// `O_i e_j = Im(e_j e_i)` for all `i, j`.
    pub matches_right_product: bool,
    /// `O_i e_j = −Im(e_j e_i)` for all `i, j`.
    pub right_product_is_negated: bool,
}

pub fn orientation_check() -> OrientationCheck {
    let ops = right_mult_matrices();
    let (mut left, mut right, mut neg) = (true, true, true);
    for i in 0..7 {
        for j in 0..7 {
            let ei = Octonion::unit(i + 1);
            let ej = Octonion::unit(j + 1);
            let l = oct_mul(&ei, &ej);
            let r = oct_mul(&ej, &ei);
            for k in 0..7 {
                let o = ops[i][(k, j)];
                left &= o == l.im[k];
                right &= o == r.im[k];
                neg &= o == -r.im[k];
            }
        }
    }
    OrientationCheck {
        matches_left_product: left,
        matches_right_product: right,
        right_product_is_negated: neg,
    }
}

/// Largest deviation in `e_i e_j = Σ_k e_k (O_i)_kj − δ_ij`.
pub fn structure_residual() -> f64 {
    let ops = right_mult_matrices();
    let mut worst = 0.0f64;
    for i in 0..7 {
        for j in 0..7 {
            let lhs = oct_mul(&Octonion::unit(i + 1), &Octonion::unit(j + 1));
            let mut rhs = Octonion::ZERO;
            rhs.re = if i == j { -1.0 } else { 0.0 };
            for k in 0..7 {
                rhs.im[k] = ops[i][(k, j)];
            }
            worst = worst.max((lhs - rhs).max_norm());
        }
    }
    worst
}

/// Octonion image of a linear map acting on imaginary units, fixing 1.
fn apply(g: &RMatrix, x: &Octonion) -> Octonion {
    let mut out = Octonion { re: x.re, im: [0.0; 7] };
    for (k, slot) in out.im.iter_mut().enumerate() {
        *slot = (0..7).map(|i| g[(k, i)] * x.im[i]).sum();
    }
    out
}

fn orthogonality_residual(g: &RMatrix) -> f64 {
    max_abs_diff(&(g.transpose() * g), &RMatrix::identity(7, 7))
}

/// Largest violation of `g(e_i) g(e_j) = g(e_i e_j)` over unit pairs.
pub fn automorphism_residual(g: &RMatrix) -> Result<f64> {
    if g.shape() != (7, 7) {
        return Err(Error::Dimension(format!("expected a 7x7 matrix, got {:?}", g.shape())));
    }
    let orth = orthogonality_residual(g);
    if !(orth < 1e-8) {
        return Err(Error::Domain(format!(
            "automorphism check needs an orthogonal matrix (residual {orth:.3e})"
        )));
    }
    let images: Vec<Octonion> = (1..=7).map(|i| apply(g, &Octonion::unit(i))).collect();
    let mut worst = 0.0f64;
    for i in 0..7 {
        for j in 0..7 {
            let lhs = oct_mul(&images[i], &images[j]);
            let rhs = apply(g, &oct_mul(&Octonion::unit(i + 1), &Octonion::unit(j + 1)));
            worst = worst.max((lhs - rhs).max_norm());
        }
    }
    Ok(worst)
}

/// Largest deviation in `g O_i gᵀ = Σ_k O_k g_ki` for a G2 element `g`.
pub fn conjugation_residual(g: &RMatrix) -> Result<f64> {
    let aut = automorphism_residual(g)?;
    if !(aut < 1e-8) {
        return Err(Error::Domain(format!(
            "conjugation identity holds only on G2; automorphism residual {aut:.3e}"
        )));
    }
    let ops = right_mult_matrices();
    let gt = g.transpose();
    let mut worst = 0.0f64;
    for i in 0..7 {
        let lhs = g * &ops[i] * &gt;
        let mut rhs = RMatrix::zeros(7, 7);
        for (k, ok) in ops.iter().enumerate() {
            rhs += ok * g[(k, i)];
        }
        worst = worst.max(max_abs(&(lhs - rhs)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_bases::g2_generators;
    use crate::matrix::mat_exp;

    #[test]
    fn unit_products() {
        let e = Octonion::unit;
        assert_eq!(e(1) * e(2), e(3));
        assert_eq!(e(1) * e(1), Octonion::ONE.scale(-1.0));
        assert_eq!(e(2) * e(1), e(3).scale(-1.0));
        assert_eq!(Octonion::ONE * e(5), e(5));
    }

    #[test]
    fn epsilon_is_antisymmetric_with_expected_support() {
        let s = StructureConstants::new();
        let mut support = 0;
        for i in 1..=7 {
            for j in 1..=7 {
                for k in 1..=7 {
                    let v = s.get(i, j, k);
                    assert_eq!(v, -s.get(j, i, k));
                    assert_eq!(v, -s.get(i, k, j));
                    support += (v != 0) as usize;
                }
            }
        }
        assert_eq!(support, 42);
        for [i, j, k] in TRIPLES {
            assert_eq!(s.get(i, j, k), 1);
        }
    }

    #[test]
    fn operators_are_skew_traceless() {
        let ops = right_mult_matrices();
        assert_eq!(ops[0][(2, 1)], 1.0);
        assert_eq!(ops[0][(1, 2)], -1.0);
        for o in ops {
            assert_eq!(o.transpose(), -o);
            assert_eq!(o.trace(), 0.0);
        }
    }

    #[test]
    fn rebuild_matches_table_exactly() {
        let rebuilt = rebuild_from_table();
        for (a, b) in rebuilt.iter().zip(right_mult_matrices()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn orientation_is_left_product() {
        let o = orientation_check();
        assert!(o.matches_left_product);
        assert!(!o.matches_right_product);
        assert!(o.right_product_is_negated);
    }

    #[test]
    fn structure_identity_is_exact() {
        assert_eq!(structure_residual(), 0.0);
    }

    #[test]
    fn automorphism_examples() {
        let id = RMatrix::identity(7, 7);
        assert_eq!(automorphism_residual(&id).unwrap(), 0.0);
        assert_eq!(conjugation_residual(&id).unwrap(), 0.0);
        let g = mat_exp(&(&g2_generators()[0] * 0.3)).unwrap();
        assert!(automorphism_residual(&g).unwrap() < 1e-10);
        let g9 = mat_exp(&(&g2_generators()[8] * 0.1)).unwrap();
        assert!(conjugation_residual(&g9).unwrap() < 1e-10);
    }

    #[test]
    fn rotation_outside_g2_is_detected() {
        // A rotation in the (1,2) plane alone does not preserve the product.
        let x = from_entries(7, &[(0.7, 1, 2), (-0.7, 2, 1)]);
        let g = mat_exp(&x).unwrap();
        assert!(automorphism_residual(&g).unwrap() > 1e-2);
        assert!(matches!(conjugation_residual(&g), Err(Error::Domain(_))));
        let scaled = RMatrix::identity(7, 7) * 2.0;
        assert!(automorphism_residual(&scaled).is_err());
    }

    #[test]
    fn sparse_view_matches_dense() {
        let ops = right_mult_matrices();
        for i in 0..7 {
            for j in 0..7 {
                match sparse_ops()[i][j] {
                    None => assert!(i == j && ops[i].column(j).iter().all(|&x| x == 0.0)),
                    Some((k, s)) => assert_eq!(ops[i][(k, j)], s),
                }
            }
        }
    }
}
