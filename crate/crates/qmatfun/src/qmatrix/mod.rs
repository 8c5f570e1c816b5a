//! Matrix layer of the q-calculus: principal matrix logarithm/exponential,
//! matrix powers `q^P` and `z^M`, the matrix q-number `[P]_q`, matrix
//! q-shifted factorials (finite, inverted and infinite) and spectral
//! predicates.
//!
//! Everything is a function of a single matrix argument computed through a
//! dense matrix exponential / Schur form; the contract is the function value,
//! not the method.

mod dense;
mod funcs;

use num_complex::Complex64;

pub use dense::{ComplexMatrix, MAX_DIM};

use crate::error::{Error, Result};
use crate::qcore::{QParameter, SeriesResult, TruncationPolicy};

/// Default relative gauge for the `ST = TS` commutativity checks.
pub const COMMUTE_RTOL: f64 = 1e-12;

/// Separation tolerance for the `q^{-k} ∉ σ(q^T)` condition.
pub const SIGMA_SEPARATION_TOL: f64 = 1e-10;

/// Eigenvalue summary of a matrix: spectrum, extremal real parts and the
/// positive-stability flag (`β > 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInfo {
    pub eigenvalues: Vec<Complex64>,
    /// Largest real part over the spectrum.
    pub alpha: f64,
    /// Smallest real part over the spectrum.
    pub beta: f64,
    pub positive_stable: bool,
}

/// Computes the spectrum of `m` together with `α`, `β` and positive
/// stability.
pub fn spectral_info(m: &ComplexMatrix) -> Result<SpectralInfo> {
    let eigenvalues = funcs::eigenvalues(m.as_dmatrix())?;
    let alpha = eigenvalues.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    let beta = eigenvalues.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
    Ok(SpectralInfo {
        eigenvalues,
        alpha,
        beta,
        positive_stable: beta > 0.0,
    })
}

/// Matrix exponential.
pub fn mat_exp(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::wrap(funcs::exp(m.as_dmatrix()))
}

/// Principal matrix logarithm: the `L` with `exp(L) = M` whose eigenvalues
/// have imaginary part in `(−π, π)`.
pub fn mat_log_principal(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    funcs::log_principal(m.as_dmatrix()).map(ComplexMatrix::wrap)
}

/// `q^P = exp(P ln q)` on the principal branch of `ln`.
pub fn q_power_matrix(qp: &QParameter, p: &ComplexMatrix) -> ComplexMatrix {
    mat_exp(&p.scale(qp.ln_q()))
}

/// `z^M = exp(M ln z)` on the principal branch; rejects `z = 0` and `z` on
/// the negative real axis.
pub fn z_power_matrix(z: Complex64, m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if z.norm() == 0.0 {
        return Err(Error::DivisionByZero("z^M at z = 0".into()));
    }
    if z.im == 0.0 && z.re < 0.0 {
        return Err(Error::BranchCutViolation(format!(
            "z = {z} lies on the negative real axis"
        )));
    }
    Ok(mat_exp(&m.scale(z.ln())))
}

/// The matrix q-number `[P]_q = (I − q^P)/(1 − q)`.
pub fn q_bracket_matrix(p: &ComplexMatrix, qp: &QParameter) -> ComplexMatrix {
    let identity = ComplexMatrix::identity(p.dim());
    (identity - q_power_matrix(qp, p)) / qp.one_minus_q()
}

/// `[P + nI]_q` computed from a precomputed `A = q^P` as
/// `(I − q^n A)/(1 − q)`; avoids re-exponentiating for every shift.
pub(crate) fn q_bracket_shifted(a_qpow: &ComplexMatrix, n: i64, qp: &QParameter) -> ComplexMatrix {
    let identity = ComplexMatrix::identity(a_qpow.dim());
    (identity - a_qpow.scale(qp.q_pow_i(n))) / qp.one_minus_q()
}

/// Matrix q-shifted factorial
/// `(q^P; q)_n = (I − q^P)(I − q^{P+I}) ⋯ (I − q^{P+(n−1)I})`,
/// evaluated left-to-right; `I` for `n = 0`.
pub fn matrix_q_pochhammer(p: &ComplexMatrix, qp: &QParameter, n: usize) -> ComplexMatrix {
    let a = q_power_matrix(qp, p);
    matrix_q_pochhammer_from_qpow(&a, qp, n)
}

/// Same as [`matrix_q_pochhammer`] but starting from a precomputed `q^P`.
pub(crate) fn matrix_q_pochhammer_from_qpow(
    a_qpow: &ComplexMatrix,
    qp: &QParameter,
    n: usize,
) -> ComplexMatrix {
    let p = a_qpow.dim();
    let identity = ComplexMatrix::identity(p);
    let mut prod = identity.clone();
    let mut qk = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        let factor = &identity - &a_qpow.scale(qk);
        prod = &prod * &factor;
        qk *= qp.q();
    }
    prod
}

/// Inverse of the matrix q-shifted factorial, computed by inverting
/// factor-wise via linear solves. Errors with `SingularFactor(k)` naming the
/// first non-invertible factor `I − q^{P+kI}`.
pub fn matrix_q_pochhammer_inv(
    p: &ComplexMatrix,
    qp: &QParameter,
    n: usize,
) -> Result<ComplexMatrix> {
    let a = q_power_matrix(qp, p);
    matrix_q_pochhammer_inv_from_qpow(&a, qp, n)
}

pub(crate) fn matrix_q_pochhammer_inv_from_qpow(
    a_qpow: &ComplexMatrix,
    qp: &QParameter,
    n: usize,
) -> Result<ComplexMatrix> {
    let p = a_qpow.dim();
    let identity = ComplexMatrix::identity(p);
    let mut inv = identity.clone();
    let mut qk = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let factor = &identity - &a_qpow.scale(qk);
        inv = factor
            .solve(&inv)
            .map_err(|_| Error::SingularFactor { k })?;
        qk *= qp.q();
    }
    Ok(inv)
}

/// Infinite matrix q-shifted factorial with a general matrix argument:
/// `(M; q)_∞ = ∏_{k≥0} (I − M q^k)`, truncated once `‖M‖_F |q|^k < rel_tol`.
pub fn matrix_q_pochhammer_inf(
    m: &ComplexMatrix,
    qp: &QParameter,
    policy: &TruncationPolicy,
) -> Result<SeriesResult<ComplexMatrix>> {
    let p = m.dim();
    let identity = ComplexMatrix::identity(p);
    let norm = m.fro_norm();
    let mut prod = identity.clone();
    let mut qk = Complex64::new(1.0, 0.0);
    for k in 0..policy.max_terms {
        let tail = norm * qk.norm();
        if tail < policy.rel_tol {
            return Ok(SeriesResult {
                value: prod,
                terms_used: k,
                tail_estimate: tail,
            });
        }
        let factor = &identity - &m.scale(qk);
        prod = &prod * &factor;
        qk *= qp.q();
    }
    Err(Error::TruncationNotConverged {
        max_terms: policy.max_terms,
        tail: norm * qk.norm(),
    })
}

/// Checks that `q^{-k}` stays away from the spectrum of `q^T` for
/// `0 ≤ k ≤ k_max`, which makes every factor `I − q^{T+kI}` of a q-shifted
/// factorial of length `k_max + 1` invertible (eigenvalue separation below
/// [`SIGMA_SEPARATION_TOL`] counts as a violation).
pub fn check_q_sigma_condition(t: &ComplexMatrix, qp: &QParameter, k_max: usize) -> Result<bool> {
    let info = spectral_info(&q_power_matrix(qp, t))?;
    let mut q_neg_k = Complex64::new(1.0, 0.0);
    for _ in 0..=k_max {
        for mu in &info.eigenvalues {
            if (q_neg_k - mu).norm() <= SIGMA_SEPARATION_TOL {
                return Ok(false);
            }
        }
        q_neg_k /= qp.q();
    }
    Ok(true)
}

/// Operator 2-norm via the largest eigenvalue of `AᴴA`.
pub fn op_norm_2(m: &ComplexMatrix) -> Result<f64> {
    let gram = &m.adjoint() * m;
    let info = spectral_info(&gram)?;
    Ok(info.alpha.max(0.0).sqrt())
}
