//! Internal dense matrix-function kernels: complex Schur form, eigenvalues,
//! matrix exponential and the principal matrix logarithm.
//!
//! The logarithm uses inverse scaling-and-squaring on the (upper triangular)
//! complex Schur factor: repeated principal square roots until the factor is
//! close to the identity, a Mercator series for `log(I + X)`, then scaling
//! back and undoing the unitary similarity.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_MAX_SWEEPS: usize = 100_000;

/// Complex Schur decomposition `M = Q T Q^H` with `T` upper triangular.
pub(crate) fn schur(m: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let s = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_SWEEPS)
        .ok_or(Error::EigenFailure)?;
    let (q, t) = s.unpack();
    Ok((q, t))
}

/// Eigenvalues of a general complex matrix (diagonal of the Schur factor).
pub(crate) fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Matrix exponential (Padé scaling-and-squaring).
pub(crate) fn exp(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.exp()
}

/// Principal square root of an upper triangular matrix with no eigenvalue on
/// the closed negative real axis (Björck–Hammarling recurrence).
fn sqrt_triangular(t: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = t.nrows();
    let mut r = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            let denom = r[(i, i)] + r[(j, j)];
            if denom.norm() < 1e-300 {
                return Err(Error::SingularMatrix(
                    "triangular square root: zero diagonal sum".into(),
                ));
            }
            r[(i, j)] = s / denom;
        }
    }
    Ok(r)
}

/// `log(I + X)` for triangular `X` with `‖X‖_F` small, via the Mercator series.
fn log_near_identity(x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut acc = x.clone();
    let mut pow = x.clone();
    for j in 2..200usize {
        pow = &pow * x;
        let coeff = if j % 2 == 0 { -1.0 } else { 1.0 } / j as f64;
        acc += &pow * Complex64::new(coeff, 0.0);
        if pow.norm() / j as f64 <= 1e-18 {
            break;
        }
    }
    acc
}

/// Principal matrix logarithm.
///
/// Fails with `SingularMatrix` when an eigenvalue is (numerically) zero and
/// with `BranchCutViolation` when an eigenvalue lies on the open negative
/// real axis.
pub(crate) fn log_principal(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = m.nrows();
    let (q, mut t) = schur(m)?;
    let scale = m.norm().max(1.0);
    for i in 0..n {
        let lam = t[(i, i)];
        if lam.norm() <= 1e-14 * scale {
            return Err(Error::SingularMatrix(
                "matrix logarithm of a singular matrix".into(),
            ));
        }
        if lam.re < 0.0 && lam.im.abs() <= 1e-13 * lam.re.abs() {
            return Err(Error::BranchCutViolation(format!(
                "eigenvalue {lam} lies on the negative real axis"
            )));
        }
    }
    let identity = DMatrix::<Complex64>::identity(n, n);
    let mut halvings = 0u32;
    while (&t - &identity).norm() > 0.2 {
        if halvings >= 80 {
            return Err(Error::EigenFailure);
        }
        t = sqrt_triangular(&t)?;
        halvings += 1;
    }
    let x = &t - &identity;
    let logt = log_near_identity(&x) * Complex64::new(2f64.powi(halvings as i32), 0.0);
    Ok(&q * logt * q.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn schur_recomposes() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.2),
                c(0.3, -0.1),
                c(0.0, 0.5),
                c(-0.4, 0.0),
                c(2.0, 0.0),
                c(0.1, 0.1),
                c(0.2, 0.2),
                c(0.0, -0.3),
                c(0.7, 0.0),
            ],
        );
        let (q, t) = schur(&m).unwrap();
        assert!((&q * &t * q.adjoint() - &m).norm() <= 1e-12 * m.norm());
        for i in 0..3 {
            for j in 0..i {
                assert!(t[(i, j)].norm() <= 1e-12, "T not triangular at ({i},{j})");
            }
        }
    }

    #[test]
    fn log_exp_round_trip() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.5, 0.3), c(-0.2, 0.1), c(1.5, 0.0)],
        );
        let l = log_principal(&m).unwrap();
        let back = exp(&l);
        assert!((&back - &m).norm() <= 1e-11 * m.norm());
    }

    #[test]
    fn log_rejects_negative_spectrum() {
        let m = DMatrix::from_row_slice(2, 2, &[c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        assert!(matches!(
            log_principal(&m),
            Err(Error::BranchCutViolation(_))
        ));
        let z = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        assert!(matches!(log_principal(&z), Err(Error::SingularMatrix(_))));
    }
}
