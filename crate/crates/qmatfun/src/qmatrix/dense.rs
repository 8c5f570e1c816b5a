//! Dense square complex matrix with construction-time invariants.
//!
//! A thin wrapper over `nalgebra::DMatrix<Complex64>` that enforces
//! squareness, finite entries and the desk-scale dimension cap, and exposes
//! the small operation set the rest of the crate needs (arithmetic, Frobenius
//! norm, LU solves from both sides, commutation tests).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::SummandValue;

/// Hard cap on the matrix dimension; everything here is O(p³) per factor.
pub const MAX_DIM: usize = 64;

/// Relative pivot threshold below which an LU factorization is treated as
/// numerically singular.
const SINGULAR_PIVOT_RTOL: f64 = 1e-13;

/// A `p × p` complex matrix with finite entries, `1 ≤ p ≤ 64`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<Complex64>,
}

impl ComplexMatrix {
    fn validate(inner: DMatrix<Complex64>) -> Result<Self> {
        if inner.nrows() != inner.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be square, got {}x{}",
                inner.nrows(),
                inner.ncols()
            )));
        }
        if inner.nrows() == 0 || inner.nrows() > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "dimension must be in 1..={MAX_DIM}, got {}",
                inner.nrows()
            )));
        }
        if inner.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(Error::InvalidParameter(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(ComplexMatrix { inner })
    }

    /// Builds from a row-major slice of length `p·p`.
    pub fn from_row_slice(p: usize, data: &[Complex64]) -> Result<Self> {
        if data.len() != p * p {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {p}x{p} matrix, got {}",
                p * p,
                data.len()
            )));
        }
        Self::validate(DMatrix::from_row_slice(p, p, data))
    }

    /// Builds entrywise from a closure over `(row, col)`.
    pub fn from_fn(p: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        Self::validate(DMatrix::from_fn(p, p, f))
    }

    /// Wraps an existing nalgebra matrix, checking the invariants.
    pub fn from_dmatrix(m: DMatrix<Complex64>) -> Result<Self> {
        Self::validate(m)
    }

    pub fn zeros(p: usize) -> Self {
        ComplexMatrix {
            inner: DMatrix::zeros(p, p),
        }
    }

    pub fn identity(p: usize) -> Self {
        ComplexMatrix {
            inner: DMatrix::identity(p, p),
        }
    }

    /// `s·I` of dimension `p`.
    pub fn scalar(p: usize, s: Complex64) -> Self {
        ComplexMatrix {
            inner: DMatrix::identity(p, p) * s,
        }
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let p = entries.len();
        ComplexMatrix {
            inner: DMatrix::from_fn(p, p, |i, j| {
                if i == j {
                    entries[i]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }

    /// Real diagonal convenience constructor.
    pub fn diagonal_re(entries: &[f64]) -> Self {
        let v: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diagonal(&v)
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.inner[(i, j)] = v;
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex64> {
        self.inner
    }

    /// Raw wrap without invariant checks, for arithmetic results of already
    /// valid operands.
    pub(crate) fn wrap(inner: DMatrix<Complex64>) -> Self {
        ComplexMatrix { inner }
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|e| e.re.is_finite() && e.im.is_finite())
    }

    /// Frobenius norm, the default norm for every tolerance in this crate.
    pub fn fro_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Plain (non-conjugating) transpose.
    pub fn transpose(&self) -> Self {
        ComplexMatrix {
            inner: self.inner.transpose(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        ComplexMatrix {
            inner: self.inner.adjoint(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix {
            inner: &self.inner * s,
        }
    }

    fn lu_checked(
        &self,
        what: &str,
    ) -> Result<nalgebra::linalg::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>> {
        let lu = self.inner.clone().lu();
        let u = lu.u();
        let mut min_piv = f64::INFINITY;
        let mut max_piv = 0.0f64;
        for i in 0..self.dim() {
            let m = u[(i, i)].norm();
            min_piv = min_piv.min(m);
            max_piv = max_piv.max(m);
        }
        if max_piv == 0.0 || min_piv <= SINGULAR_PIVOT_RTOL * max_piv {
            return Err(Error::SingularMatrix(what.to_string()));
        }
        Ok(lu)
    }

    /// Solves `A X = B` for `X`.
    pub fn solve(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rhs.dim() != self.dim() {
            return Err(Error::DimensionMismatch("solve dimensions differ".into()));
        }
        let lu = self.lu_checked("linear solve")?;
        let x = lu
            .solve(&rhs.inner)
            .ok_or_else(|| Error::SingularMatrix("linear solve".into()))?;
        Ok(ComplexMatrix { inner: x })
    }

    /// Solves `X A = B` for `X` (right division `B A^{-1}`).
    pub fn solve_right(&self, lhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        // X A = B  <=>  A^t X^t = B^t (plain transpose).
        let xt = self.transpose().solve(&lhs.transpose())?;
        Ok(xt.transpose())
    }

    pub fn inverse(&self) -> Result<ComplexMatrix> {
        self.solve(&ComplexMatrix::identity(self.dim()))
    }

    /// Ratio of smallest to largest LU pivot magnitude; 0 for the zero
    /// matrix. Used as a cheap invertibility gauge by the singular-point
    /// classifier.
    pub fn invertibility_ratio(&self) -> f64 {
        let lu = self.inner.clone().lu();
        let u = lu.u();
        let mut min_piv = f64::INFINITY;
        let mut max_piv = 0.0f64;
        for i in 0..self.dim() {
            let m = u[(i, i)].norm();
            min_piv = min_piv.min(m);
            max_piv = max_piv.max(m);
        }
        if max_piv == 0.0 {
            0.0
        } else {
            min_piv / max_piv
        }
    }

    /// True when `‖AB − BA‖_F ≤ rtol · ‖A‖_F ‖B‖_F` (with an absolute floor
    /// for near-zero operands).
    pub fn commutes_with(&self, other: &ComplexMatrix, rtol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let ab = &self.inner * &other.inner;
        let ba = &other.inner * &self.inner;
        let scale = self.fro_norm() * other.fro_norm();
        (ab - ba).norm() <= rtol * scale.max(1e-30)
    }
}

impl std::fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.inner)
    }
}

impl SummandValue for ComplexMatrix {
    fn norm(&self) -> f64 {
        self.fro_norm()
    }
    fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix::scale(self, s)
    }
    fn plus(&self, other: &Self) -> Self {
        ComplexMatrix {
            inner: &self.inner + &other.inner,
        }
    }
}

macro_rules! binop_refs {
    ($trait:ident, $method:ident, $op:tt) => {
        impl std::ops::$trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix {
                    inner: &self.inner $op &rhs.inner,
                }
            }
        }
        impl std::ops::$trait<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$method(&rhs)
            }
        }
        impl std::ops::$trait<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                (&self).$method(rhs)
            }
        }
        impl std::ops::$trait<ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                self.$method(&rhs)
            }
        }
    };
}

binop_refs!(Add, add, +);
binop_refs!(Sub, sub, -);
binop_refs!(Mul, mul, *);

impl std::ops::Mul<Complex64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Complex64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl std::ops::Mul<Complex64> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Complex64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl std::ops::Div<Complex64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn div(self, rhs: Complex64) -> ComplexMatrix {
        self.scale(Complex64::new(1.0, 0.0) / rhs)
    }
}

impl std::ops::Div<Complex64> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn div(self, rhs: Complex64) -> ComplexMatrix {
        self.scale(Complex64::new(1.0, 0.0) / rhs)
    }
}

impl std::ops::Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix {
            inner: -&self.inner,
        }
    }
}

impl std::ops::Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { inner: -self.inner }
    }
}
