//! Dense matrix primitives used by every other module.
//!
//! Storage is `nalgebra::DMatrix`; elementary matrices take 1-based indices
//! to match the usual `e_ij` notation.

use nalgebra::{Complex, ComplexField, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type RMatrix = DMatrix<f64>;
pub type CMatrix = DMatrix<C64>;

/// Scalars the generic routines accept: `f64` and `Complex<f64>`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {}
impl Scalar for f64 {}
impl Scalar for C64 {}

/// Absolute and relative acceptance thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_tol: 1e-12,
            rel_tol: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(abs_tol) || !ok(rel_tol) {
            return Err(Error::Domain(format!(
                "tolerances must be finite and non-negative (abs {abs_tol}, rel {rel_tol})"
            )));
        }
        Ok(Tolerance { abs_tol, rel_tol })
    }

    /// True when `err` is small in absolute terms or relative to `reference`.
    pub fn accepts(&self, err: f64, reference: f64) -> bool {
        err <= self.abs_tol || err <= self.rel_tol * reference.abs()
    }
}

/// The elementary matrix `e_ij` of side `n` (1-based indices).
pub fn elementary<T: Scalar>(n: usize, i: usize, j: usize) -> DMatrix<T> {
    assert!(
        i >= 1 && i <= n && j >= 1 && j <= n,
        "e_{i}{j} out of range for side {n}"
    );
    let mut m = DMatrix::zeros(n, n);
    m[(i - 1, j - 1)] = T::one();
    m
}

fn require_square<T: Scalar>(m: &DMatrix<T>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Kronecker product of two square matrices.
pub fn kron<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
    require_square(a, "left kron factor")?;
    require_square(b, "right kron factor")?;
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..n {
            let aij = a[(i, j)];
            if aij == T::zero() {
                continue;
            }
            for k in 0..m {
                for l in 0..m {
                    out[(i * m + k, j * m + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Trace on the tensor space. This is the ordinary trace; the name mirrors
/// its role as `tr_12` on `V ⊗ V`.
pub fn trace12<T: Scalar>(m: &DMatrix<T>) -> T {
    m.diagonal().iter().fold(T::zero(), |acc, &x| acc + x)
}

/// Side of the factor space if `m` is `n² × n²`, for diagnostics.
pub fn tensor_factor_side<T: Scalar>(m: &DMatrix<T>) -> Option<usize> {
    if m.nrows() != m.ncols() {
        return None;
    }
    let n = (m.nrows() as f64).sqrt().round() as usize;
    (n * n == m.nrows()).then_some(n)
}

/// `tr(X Y)` without forming the product.
pub fn trace_of_product<T: Scalar>(x: &DMatrix<T>, y: &DMatrix<T>) -> T {
    let mut acc = T::zero();
    for p in 0..x.nrows() {
        for q in 0..x.ncols() {
            acc += x[(p, q)] * y[(q, p)];
        }
    }
    acc
}

/// The swap operator `P = Σ e_jk ⊗ e_kj` of side `n²`.
pub fn permutation_matrix<T: Scalar>(n: usize) -> Result<DMatrix<T>> {
    if n == 0 {
        return Err(Error::Domain("permutation matrix needs n >= 1".into()));
    }
    let mut p = DMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for k in 0..n {
            // e_jk ⊗ e_kj has its single one at row j*n+k, column k*n+j.
            p[(j * n + k, k * n + j)] = T::one();
        }
    }
    Ok(p)
}

/// Largest entry modulus.
pub fn max_abs<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.modulus()))
}

/// Largest entrywise deviation between two matrices of equal shape.
pub fn max_abs_diff<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((*x - *y).modulus()))
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

/// Real part together with the largest discarded imaginary part.
pub fn split_real(m: &CMatrix) -> (RMatrix, f64) {
    let imag = m.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    (m.map(|z| z.re), imag)
}

fn one_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

const EXP_MAX_TERMS: usize = 40;

/// Matrix exponential by scaling and squaring around a truncated Taylor
/// series. The argument is scaled to one-norm at most 1/2 so the series
/// settles to machine precision after about fifteen terms.
pub fn mat_exp<T: Scalar>(x: &DMatrix<T>) -> Result<DMatrix<T>> {
    require_square(x, "exponent")?;
    if x.iter().any(|v| !v.modulus().is_finite()) {
        return Err(Error::Numeric("mat_exp input has non-finite entries".into()));
    }
    let n = x.nrows();
    let norm = one_norm(x);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let a = x * T::from_real(0.5f64.powi(squarings as i32));

    let mut sum = DMatrix::<T>::identity(n, n);
    let mut term = DMatrix::<T>::identity(n, n);
    let mut converged = false;
    for k in 1..=EXP_MAX_TERMS {
        term = (&term * &a) * T::from_real(1.0 / k as f64);
        sum += &term;
        if max_abs(&term) <= f64::EPSILON * max_abs(&sum).max(1.0) * 1e-2 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ExpNonConvergence {
            terms: EXP_MAX_TERMS,
            norm: one_norm(&a),
        });
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    if sum.iter().any(|v| !v.modulus().is_finite()) {
        return Err(Error::Numeric(format!(
            "mat_exp overflowed (input one-norm {norm:.3e})"
        )));
    }
    Ok(sum)
}

/// Dense inverse through LU.
pub fn inverse<T: Scalar>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    require_square(m, "matrix to invert")?;
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("matrix is singular".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det_mat(n: usize, seed: u64) -> RMatrix {
        // Small deterministic pseudo-random matrix, independent of the crate RNG.
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        RMatrix::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = RMatrix::identity(2, 2);
        assert_eq!(kron(&i2, &i2).unwrap(), RMatrix::identity(4, 4));
    }

    #[test]
    fn kron_of_e11() {
        let e = elementary::<f64>(2, 1, 1);
        let k = kron(&e, &e).unwrap();
        assert_eq!(k[(0, 0)], 1.0);
        assert_eq!(k.iter().filter(|&&x| x != 0.0).count(), 1);
    }

    #[test]
    fn kron_rejects_non_square() {
        let a = RMatrix::zeros(2, 3);
        assert!(matches!(kron(&a, &a), Err(Error::Dimension(_))));
    }

    #[test]
    fn kron_mixed_product() {
        let (a, b, c, d) = (det_mat(3, 1), det_mat(3, 2), det_mat(3, 3), det_mat(3, 4));
        let lhs = kron(&a, &b).unwrap() * kron(&c, &d).unwrap();
        let rhs = kron(&(&a * &c), &(&b * &d)).unwrap();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn trace12_basics() {
        assert_eq!(trace12(&RMatrix::identity(9, 9)), 9.0);
        let (a, b) = (det_mat(3, 5), det_mat(3, 6));
        let t = trace12(&kron(&a, &b).unwrap());
        assert!((t - a.trace() * b.trace()).abs() < 1e-13);
        for n in 1..6 {
            assert_eq!(trace12(&permutation_matrix::<f64>(n).unwrap()), n as f64);
        }
        assert_eq!(tensor_factor_side(&RMatrix::identity(9, 9)), Some(3));
        assert_eq!(tensor_factor_side(&RMatrix::identity(8, 8)), None);
    }

    #[test]
    fn permutation_properties() {
        assert!(permutation_matrix::<f64>(0).is_err());
        assert_eq!(permutation_matrix::<f64>(1).unwrap(), RMatrix::identity(1, 1));
        for n in 1..=8 {
            let p = permutation_matrix::<f64>(n).unwrap();
            assert_eq!(&p * &p, RMatrix::identity(n * n, n * n));
            assert_eq!(p.transpose(), p);
        }
        let p = permutation_matrix::<f64>(3).unwrap();
        let (a, b) = (det_mat(3, 7), det_mat(3, 8));
        let swapped = &p * kron(&a, &b).unwrap() * &p;
        assert!(max_abs_diff(&swapped, &kron(&b, &a).unwrap()) < 1e-14);
        let t = trace12(&(kron(&a, &b).unwrap() * &p));
        assert!((t - (&a * &b).trace()).abs() < 1e-13);
    }

    #[test]
    fn exp_of_zero_and_diagonal() {
        assert_eq!(mat_exp(&RMatrix::zeros(4, 4)).unwrap(), RMatrix::identity(4, 4));
        let d = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, -1.0, 2.0, 3.5]));
        let e = mat_exp(&d).unwrap();
        for (i, v) in [0.5f64, -1.0, 2.0, 3.5].iter().enumerate() {
            assert!((e[(i, i)] - v.exp()).abs() < 1e-12 * v.exp().max(1.0));
        }
        assert!(max_abs(&(e.clone() - RMatrix::from_diagonal(&e.diagonal()))) == 0.0);
    }

    #[test]
    fn exp_rejects_nan() {
        let mut x = RMatrix::zeros(2, 2);
        x[(0, 1)] = f64::NAN;
        assert!(mat_exp(&x).is_err());
    }

    #[test]
    fn complex_exp_of_hermitian_phase_is_unitary() {
        let h = det_mat(3, 9);
        let herm = to_complex(&(&h + h.transpose())) * C64::new(0.0, 0.3);
        let u = mat_exp(&herm).unwrap();
        let check = u.adjoint() * &u;
        assert!(max_abs_diff(&check, &CMatrix::identity(3, 3)) < 1e-13);
    }

    fn skew(vals: &[f64], n: usize) -> RMatrix {
        let mut x = RMatrix::zeros(n, n);
        let mut it = vals.iter();
        for i in 0..n {
            for j in i + 1..n {
                let v = *it.next().unwrap();
                x[(i, j)] = v;
                x[(j, i)] = -v;
            }
        }
        x
    }

    proptest! {
        #[test]
        fn exp_of_skew_is_orthogonal(vals in prop::collection::vec(-0.4f64..0.4, 10)) {
            let x = skew(&vals, 5);
            let g = mat_exp(&x).unwrap();
            let r = max_abs_diff(&(g.transpose() * &g), &RMatrix::identity(5, 5));
            prop_assert!(r < 1e-10);
        }

        #[test]
        fn exp_inverse_pair(vals in prop::collection::vec(-0.25f64..0.25, 16)) {
            let x = RMatrix::from_vec(4, 4, vals);
            let prod = mat_exp(&x).unwrap() * mat_exp(&(-&x)).unwrap();
            prop_assert!(max_abs_diff(&prod, &RMatrix::identity(4, 4)) < 1e-10);
        }

        #[test]
        fn kron_associative(a in prop::collection::vec(-1.0f64..1.0, 4),
                            b in prop::collection::vec(-1.0f64..1.0, 4),
                            c in prop::collection::vec(-1.0f64..1.0, 9)) {
            let (a, b, c) = (RMatrix::from_vec(2, 2, a), RMatrix::from_vec(2, 2, b), RMatrix::from_vec(3, 3, c));
            let left = kron(&kron(&a, &b).unwrap(), &c).unwrap();
            let right = kron(&a, &kron(&b, &c).unwrap()).unwrap();
            prop_assert!(max_abs_diff(&left, &right) < 1e-15);
        }

        #[test]
        fn trace12_cyclic_and_linear(m in prop::collection::vec(-1.0f64..1.0, 16),
                                    n in prop::collection::vec(-1.0f64..1.0, 16),
                                    s in -3.0f64..3.0) {
            let (m, n) = (RMatrix::from_vec(4, 4, m), RMatrix::from_vec(4, 4, n));
            prop_assert!((trace12(&(&m * &n)) - trace12(&(&n * &m))).abs() < 1e-13);
            let lin = trace12(&(&m * s + &n)) - (s * trace12(&m) + trace12(&n));
            prop_assert!(lin.abs() < 1e-13);
        }
    }
}
