//! Basic hypergeometric matrix series.
//!
//! The generalized series is
//!
//! `ᵣφₛ(q^{P₁},…,q^{P_r}; q^{Q₁},…,q^{Q_s}; q; w)
//!    = Σ_n (q^{P₁};q)_n ⋯ (q^{P_r};q)_n (q^{Q₁};q)_n^{−1} ⋯ (q^{Q_s};q)_n^{−1}
//!          · wⁿ/(q;q)_n`,
//!
//! with the factor order exactly as written: numerator q-shifted factorials
//! left-multiplied in index order, then the denominator inverses in index
//! order. For non-commuting inputs this order is load-bearing and is frozen
//! as the contract.
//!
//! On top of the engine live the q-Kummer function `₁φ₁(q^S; q^T; q; z)`, its
//! coefficient recurrence and fundamental solution pair, and the Gauss
//! `₂φ₁(q^P, q^Q; q^R; q; z)` pair:
//!
//! * `U₁(z) = ₁φ₁(q^S; q^T; q; (1−q)z)`,
//!   `U₂(z) = z^{I−T} ₁φ₁(q^{S+I−T}; q^{2I−T}; q; (1−q)z)` (needs `ST = TS`);
//! * `W₁(z) = ₂φ₁(q^P, q^Q; q^R; q; z)` (needs `QR = RQ`),
//!   `W₂(z) = z^{I−R} ₂φ₁(q^{P+I−R}, q^{Q+I−R}; q^{2I−R}; q; z)`
//!   (needs `PR = RP` and `QR = RQ`).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{QParameter, SeriesResult, SumTracker, TruncationPolicy};
use crate::qmatrix::{
    q_bracket_shifted, q_power_matrix, spectral_info, z_power_matrix, ComplexMatrix,
    COMMUTE_RTOL, SIGMA_SEPARATION_TOL,
};

/// Parameter bundle for the generalized series: numerator exponents
/// `P₁…P_r`, denominator exponents `Q₁…Q_s` and the base. The argument
/// scaling exponent is `1 + s − r`.
#[derive(Debug, Clone)]
pub struct HypergeometricSpec {
    dim: usize,
    numerators: Vec<ComplexMatrix>,
    denominators: Vec<ComplexMatrix>,
    qp: QParameter,
}

impl HypergeometricSpec {
    pub fn new(
        dim: usize,
        numerators: Vec<ComplexMatrix>,
        denominators: Vec<ComplexMatrix>,
        qp: QParameter,
    ) -> Result<Self> {
        for m in numerators.iter().chain(denominators.iter()) {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "all parameter matrices must be {dim}x{dim}"
                )));
            }
        }
        Ok(HypergeometricSpec {
            dim,
            numerators,
            denominators,
            qp,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn numerators(&self) -> &[ComplexMatrix] {
        &self.numerators
    }

    pub fn denominators(&self) -> &[ComplexMatrix] {
        &self.denominators
    }

    pub fn qp(&self) -> &QParameter {
        &self.qp
    }

    /// The power of `(1 − q)` that scales `z` in each term: `1 + s − r`.
    pub fn scaling_exponent(&self) -> i32 {
        1 + self.denominators.len() as i32 - self.numerators.len() as i32
    }
}

/// Series coefficients `U₀, U₁, …, U_N` of a solution ansatz
/// `U(z) = Σ U_n zⁿ` with `U₀ = I`.
#[derive(Debug, Clone)]
pub struct SeriesCoefficients {
    pub coeffs: Vec<ComplexMatrix>,
}

impl SeriesCoefficients {
    /// Evaluates the truncated polynomial `Σ U_n zⁿ`.
    pub fn eval(&self, z: Complex64) -> ComplexMatrix {
        let dim = self.coeffs[0].dim();
        let mut acc = ComplexMatrix::zeros(dim);
        let mut zn = Complex64::new(1.0, 0.0);
        for u in &self.coeffs {
            acc = &acc + &u.scale(zn);
            zn *= z;
        }
        acc
    }
}

/// Second member of a fundamental pair: the series value together with a
/// degeneracy flag (`z^{I−T}` prefactor trivial because `T = I`, in which
/// case the two members coincide and the pair is not fundamental).
#[derive(Debug, Clone)]
pub struct SecondSolution {
    pub result: SeriesResult<ComplexMatrix>,
    pub degenerate: bool,
}

/// Fundamental solution pair; each member carries its own error channel
/// (commutativity or branch-cut failures affect one member, not both).
#[derive(Debug, Clone)]
pub struct FundamentalPair {
    pub first: Result<SeriesResult<ComplexMatrix>>,
    pub second: Result<SecondSolution>,
}

enum TermBudget<'a> {
    Policy(&'a TruncationPolicy),
    Fixed(usize),
}

struct EngineOutput {
    value: ComplexMatrix,
    terms_used: usize,
    tail: f64,
    term_norms: Vec<f64>,
}

/// Core summation loop shared by every series in this module. Maintains one
/// running q-shifted factorial per numerator and one running inverse per
/// denominator; denominator factors are inverted by linear solves, with an
/// eigenvalue-separation check (`q^{-n}` against `σ(q^{Q_j})`) before each
/// solve so near-singular factors are reported as `SingularFactor` at the
/// term where they are actually used.
fn phi_series(
    dim: usize,
    numerators: &[ComplexMatrix],
    denominators: &[ComplexMatrix],
    qp: &QParameter,
    w: Complex64,
    budget: TermBudget,
) -> Result<EngineOutput> {
    let one = Complex64::new(1.0, 0.0);
    let identity = ComplexMatrix::identity(dim);

    if w.norm() == 0.0 {
        return Ok(EngineOutput {
            value: identity,
            terms_used: 1,
            tail: 0.0,
            term_norms: vec![1.0],
        });
    }

    let num_pows: Vec<ComplexMatrix> =
        numerators.iter().map(|p| q_power_matrix(qp, p)).collect();
    let den_pows: Vec<ComplexMatrix> = denominators
        .iter()
        .map(|p| q_power_matrix(qp, p))
        .collect();
    let den_eigs: Vec<Vec<Complex64>> = den_pows
        .iter()
        .map(|b| spectral_info(b).map(|i| i.eigenvalues))
        .collect::<Result<_>>()?;
    let eig_scale: f64 = den_eigs
        .iter()
        .flatten()
        .map(|e| e.norm())
        .fold(1.0, f64::max);

    let mut num_run: Vec<ComplexMatrix> = vec![identity.clone(); numerators.len()];
    let mut den_run: Vec<ComplexMatrix> = vec![identity.clone(); denominators.len()];
    let mut scalar = one; // w^n / (q;q)_n
    let mut acc = ComplexMatrix::zeros(dim);
    let mut tracker = SumTracker::new();
    let mut q_n = one; // q^n
    let mut q_neg_n = one; // q^{-n}

    let (max_terms, fixed) = match budget {
        TermBudget::Policy(p) => (p.max_terms, None),
        TermBudget::Fixed(n) => (n, Some(n)),
    };
    let mut term_norms = Vec::new();

    for n in 0..max_terms {
        let mut prod = identity.clone();
        for m in num_run.iter().chain(den_run.iter()) {
            prod = &prod * m;
        }
        let term = prod.scale(scalar);
        let term_norm = term.fro_norm();
        term_norms.push(term_norm);
        acc = &acc + &term;

        if fixed.is_none() {
            if let TermBudget::Policy(policy) = &budget {
                if tracker.observe(n, term_norm, acc.fro_norm(), policy) {
                    return Ok(EngineOutput {
                        value: acc,
                        terms_used: tracker.terms_used(),
                        tail: tracker.tail_estimate(),
                        term_norms,
                    });
                }
            }
        }

        // Advance the running factorials from n to n + 1.
        for (i, a) in num_pows.iter().enumerate() {
            let factor = &identity - &a.scale(q_n);
            num_run[i] = &num_run[i] * &factor;
        }
        for (j, b) in den_pows.iter().enumerate() {
            if q_neg_n.norm() <= 1e12 * eig_scale {
                for mu in &den_eigs[j] {
                    if (q_neg_n - mu).norm() <= SIGMA_SEPARATION_TOL {
                        return Err(Error::SingularFactor { k: n });
                    }
                }
            }
            let factor = &identity - &b.scale(q_n);
            den_run[j] = factor
                .solve(&den_run[j])
                .map_err(|_| Error::SingularFactor { k: n })?;
        }
        scalar = scalar * w / (one - qp.q_pow_i(n as i64 + 1));
        q_n *= qp.q();
        q_neg_n /= qp.q();
    }

    if fixed.is_some() {
        Ok(EngineOutput {
            value: acc,
            terms_used: max_terms,
            tail: term_norms.last().copied().unwrap_or(0.0),
            term_norms,
        })
    } else {
        Err(Error::TruncationNotConverged {
            max_terms,
            tail: tracker.tail_estimate(),
        })
    }
}

fn into_series_result(out: EngineOutput) -> SeriesResult<ComplexMatrix> {
    SeriesResult {
        value: out.value,
        terms_used: out.terms_used,
        tail_estimate: out.tail,
    }
}

/// Generalized basic hypergeometric matrix function
/// `ᵣφₛ(q^{P₁},…; q^{Q₁},…; q; (1−q)^{1+s−r} z)`, truncated by `policy`.
pub fn rphis_matrix(
    spec: &HypergeometricSpec,
    z: Complex64,
    policy: &TruncationPolicy,
) -> Result<SeriesResult<ComplexMatrix>> {
    let r = spec.numerators.len() as i32;
    let s = spec.denominators.len() as i32;
    let w = spec.qp.one_minus_q().powi(spec.scaling_exponent()) * z;
    if r >= s + 1 && w.norm() >= 1.0 {
        log::warn!(
            "rphis series argument |w| = {:.3} outside the absolute convergence region |w| < 1",
            w.norm()
        );
    }
    phi_series(
        spec.dim,
        &spec.numerators,
        &spec.denominators,
        &spec.qp,
        w,
        TermBudget::Policy(policy),
    )
    .map(into_series_result)
}

/// The q-Kummer matrix function `₁φ₁(q^S; q^T; q; z)`.
///
/// `S` and `T` need not commute. Converges absolutely for `|z| < 1`; a
/// warning is logged outside that region.
pub fn kummer_1phi1(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    z: Complex64,
    policy: &TruncationPolicy,
) -> Result<SeriesResult<ComplexMatrix>> {
    if z.norm() >= 1.0 {
        log::warn!(
            "kummer series argument |z| = {:.3} outside the absolute convergence region |z| < 1",
            z.norm()
        );
    }
    phi_series(
        s.dim(),
        std::slice::from_ref(s),
        std::slice::from_ref(t),
        qp,
        z,
        TermBudget::Policy(policy),
    )
    .map(into_series_result)
}

/// Coefficients of the series solution `U₁(z) = Σ U_n zⁿ`: `U₀ = I` and
/// `U_{n+1} = [S+nI]_q U_n [T+nI]_q^{−1} / [n+1]_q`.
///
/// These equal the closed form `(q^S;q)_n (q^T;q)_n^{−1} (1−q)ⁿ/(q;q)_n`, the
/// coefficients of `₁φ₁(q^S; q^T; q; (1−q)z)` in powers of `z`.
pub fn kummer_coefficients(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    n_max: usize,
) -> Result<SeriesCoefficients> {
    let s_pow = q_power_matrix(qp, s);
    let t_pow = q_power_matrix(qp, t);
    let mut coeffs = Vec::with_capacity(n_max + 1);
    coeffs.push(ComplexMatrix::identity(s.dim()));
    for n in 0..n_max {
        let bracket_s = q_bracket_shifted(&s_pow, n as i64, qp);
        let bracket_t = q_bracket_shifted(&t_pow, n as i64, qp);
        let numer = &bracket_s * &coeffs[n];
        let next = bracket_t
            .solve_right(&numer)
            .map_err(|_| Error::SingularFactor { k: n })?;
        let div = crate::qcore::q_number_int(n as u32 + 1, qp);
        coeffs.push(next / div);
    }
    Ok(SeriesCoefficients { coeffs })
}

/// Coefficients of `ᵣφₛ(…; q; (1−q)^{1+s−r} z)` in powers of `z`:
/// `C_n = (q^{P₁};q)_n ⋯ (q^{Q₁};q)_n^{−1} ⋯ (1−q)^{n(1+s−r)}/(q;q)_n`,
/// built from incrementally updated running factorials. Truncating the
/// series at a fixed polynomial degree makes residual tails measurable.
pub fn rphis_coefficients(
    spec: &HypergeometricSpec,
    n_max: usize,
) -> Result<SeriesCoefficients> {
    let one = Complex64::new(1.0, 0.0);
    let qp = &spec.qp;
    let identity = ComplexMatrix::identity(spec.dim);
    let num_pows: Vec<ComplexMatrix> = spec
        .numerators
        .iter()
        .map(|p| q_power_matrix(qp, p))
        .collect();
    let den_pows: Vec<ComplexMatrix> = spec
        .denominators
        .iter()
        .map(|p| q_power_matrix(qp, p))
        .collect();
    let scale_per_term = qp.one_minus_q().powi(spec.scaling_exponent());

    let mut num_run: Vec<ComplexMatrix> = vec![identity.clone(); num_pows.len()];
    let mut den_run: Vec<ComplexMatrix> = vec![identity.clone(); den_pows.len()];
    let mut scalar = one; // (1-q)^{n(1+s-r)} / (q;q)_n
    let mut q_n = one;
    let mut coeffs = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut prod = identity.clone();
        for m in num_run.iter().chain(den_run.iter()) {
            prod = &prod * m;
        }
        coeffs.push(prod.scale(scalar));
        if n == n_max {
            break;
        }
        for (i, a) in num_pows.iter().enumerate() {
            let factor = &identity - &a.scale(q_n);
            num_run[i] = &num_run[i] * &factor;
        }
        for (j, b) in den_pows.iter().enumerate() {
            let factor = &identity - &b.scale(q_n);
            den_run[j] = factor
                .solve(&den_run[j])
                .map_err(|_| Error::SingularFactor { k: n })?;
        }
        scalar = scalar * scale_per_term / (one - qp.q_pow_i(n as i64 + 1));
        q_n *= qp.q();
    }
    Ok(SeriesCoefficients { coeffs })
}

fn shifted_exponents(
    base_s: &ComplexMatrix,
    base_t: &ComplexMatrix,
) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    // I − T, S + I − T, 2I − T
    let identity = ComplexMatrix::identity(base_t.dim());
    let i_minus_t = &identity - base_t;
    let s_shift = base_s + &i_minus_t;
    let t_shift = &identity + &i_minus_t;
    (i_minus_t, s_shift, t_shift)
}

fn is_degenerate_exponent(exponent: &ComplexMatrix, reference: &ComplexMatrix) -> bool {
    exponent.fro_norm() <= 1e-12 * reference.fro_norm().max(1.0)
}

/// Fundamental solution pair of the bilateral q-Kummer equation:
/// `U₁(z) = ₁φ₁(q^S; q^T; q; (1−q)z)` (no commutativity needed) and
/// `U₂(z) = z^{I−T} ₁φ₁(q^{S+I−T}; q^{2I−T}; q; (1−q)z)` (needs `ST = TS`,
/// `z ≠ 0` off the negative real axis).
pub fn kummer_fundamental_pair(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    z: Complex64,
    policy: &TruncationPolicy,
) -> FundamentalPair {
    let w = qp.one_minus_q() * z;
    let first = kummer_1phi1(s, t, qp, w, policy);
    let second = (|| {
        if !s.commutes_with(t, COMMUTE_RTOL) {
            return Err(Error::NotCommuting(
                "second q-Kummer solution needs ST = TS".into(),
            ));
        }
        let (i_minus_t, s_shift, t_shift) = shifted_exponents(s, t);
        let prefactor = z_power_matrix(z, &i_minus_t)?;
        let series = kummer_1phi1(&s_shift, &t_shift, qp, w, policy)?;
        let scale = prefactor.fro_norm();
        Ok(SecondSolution {
            degenerate: is_degenerate_exponent(&i_minus_t, t),
            result: SeriesResult {
                value: &prefactor * &series.value,
                terms_used: series.terms_used,
                tail_estimate: series.tail_estimate * scale,
            },
        })
    })();
    FundamentalPair { first, second }
}

/// Basic Gauss hypergeometric matrix function `₂φ₁(q^P, q^Q; q^R; q; z)`
/// (argument scaling exponent `1 + 1 − 2 = 0`).
pub fn gauss_2phi1(
    pm: &ComplexMatrix,
    qm: &ComplexMatrix,
    rm: &ComplexMatrix,
    qp: &QParameter,
    z: Complex64,
    policy: &TruncationPolicy,
) -> Result<SeriesResult<ComplexMatrix>> {
    if z.norm() >= 1.0 {
        log::warn!(
            "gauss series argument |z| = {:.3} outside the absolute convergence region |z| < 1",
            z.norm()
        );
    }
    phi_series(
        pm.dim(),
        &[pm.clone(), qm.clone()],
        std::slice::from_ref(rm),
        qp,
        z,
        TermBudget::Policy(policy),
    )
    .map(into_series_result)
}

/// Series solution pair of the bilateral Gauss equation:
/// `W₁(z) = ₂φ₁(q^P, q^Q; q^R; q; z)` requiring `QR = RQ`, and
/// `W₂(z) = z^{I−R} ₂φ₁(q^{P+I−R}, q^{Q+I−R}; q^{2I−R}; q; z)` requiring
/// `PR = RP` and `QR = RQ`.
pub fn gauss_fundamental_pair(
    pm: &ComplexMatrix,
    qm: &ComplexMatrix,
    rm: &ComplexMatrix,
    qp: &QParameter,
    z: Complex64,
    policy: &TruncationPolicy,
) -> FundamentalPair {
    let first = (|| {
        if !qm.commutes_with(rm, COMMUTE_RTOL) {
            return Err(Error::NotCommuting(
                "first Gauss solution needs QR = RQ".into(),
            ));
        }
        gauss_2phi1(pm, qm, rm, qp, z, policy)
    })();
    let second = (|| {
        if !pm.commutes_with(rm, COMMUTE_RTOL) || !qm.commutes_with(rm, COMMUTE_RTOL) {
            return Err(Error::NotCommuting(
                "second Gauss solution needs PR = RP and QR = RQ".into(),
            ));
        }
        let identity = ComplexMatrix::identity(rm.dim());
        let i_minus_r = &identity - rm;
        let prefactor = z_power_matrix(z, &i_minus_r)?;
        let series = gauss_2phi1(
            &(pm + &i_minus_r),
            &(qm + &i_minus_r),
            &(&identity + &i_minus_r),
            qp,
            z,
            policy,
        )?;
        let scale = prefactor.fro_norm();
        Ok(SecondSolution {
            degenerate: is_degenerate_exponent(&i_minus_r, rm),
            result: SeriesResult {
                value: &prefactor * &series.value,
                terms_used: series.terms_used,
                tail_estimate: series.tail_estimate * scale,
            },
        })
    })();
    FundamentalPair { first, second }
}

/// Number of terms the convergence probe computes.
const PROBE_TERMS: usize = 26;
/// Trailing term ratios averaged by the probe.
const PROBE_WINDOW: usize = 10;

/// Empirical limiting term ratio `‖term_{n+1}‖/‖term_n‖` of
/// `₁φ₁(q^S; q^T; q; z)`, averaged over the last [`PROBE_WINDOW`] of
/// [`PROBE_TERMS`] terms. Tends to `|z|`.
pub fn convergence_probe(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    z: Complex64,
) -> Result<f64> {
    if z.norm() == 0.0 {
        return Ok(0.0);
    }
    let out = phi_series(
        s.dim(),
        std::slice::from_ref(s),
        std::slice::from_ref(t),
        qp,
        z,
        TermBudget::Fixed(PROBE_TERMS),
    )?;
    let norms = &out.term_norms;
    if norms.len() < PROBE_WINDOW + 1 || norms.iter().any(|&n| n < 1e-300) {
        return Err(Error::TruncationNotConverged {
            max_terms: norms.len(),
            tail: norms.last().copied().unwrap_or(0.0),
        });
    }
    let mut acc = 0.0;
    for n in norms.len() - 1 - PROBE_WINDOW..norms.len() - 1 {
        acc += norms[n + 1] / norms[n];
    }
    Ok(acc / PROBE_WINDOW as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qp(q: f64) -> QParameter {
        QParameter::real(q).unwrap()
    }

    fn policy() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    fn mat1(x: f64) -> ComplexMatrix {
        ComplexMatrix::diagonal_re(&[x])
    }

    /// Independent scalar oracle: direct 50-term summation with fresh
    /// q-Pochhammer products per term.
    fn scalar_phi(nums: &[f64], dens: &[f64], q: f64, w: f64) -> f64 {
        let poch = |a: f64, n: usize| -> f64 {
            let mut prod = 1.0;
            for k in 0..n {
                prod *= 1.0 - a * q.powi(k as i32);
            }
            prod
        };
        let mut acc = 0.0;
        for n in 0..50 {
            let mut term = w.powi(n as i32) / poch(q, n);
            for &lam in nums {
                term *= poch(q.powf(lam), n);
            }
            for &mu in dens {
                term /= poch(q.powf(mu), n);
            }
            acc += term;
        }
        acc
    }

    #[test]
    fn series_at_zero_is_identity() {
        let p5 = qp(0.5);
        let s = ComplexMatrix::diagonal_re(&[0.5, 1.0]);
        let t = ComplexMatrix::diagonal_re(&[1.5, 2.0]);
        let r = kummer_1phi1(&s, &t, &p5, c(0.0, 0.0), &policy()).unwrap();
        assert!((r.value - ComplexMatrix::identity(2)).fro_norm() <= 1e-15);
        assert_eq!(r.terms_used, 1);
    }

    #[test]
    fn kummer_scalar_oracle() {
        let p5 = qp(0.5);
        let r = kummer_1phi1(&mat1(0.5), &mat1(1.5), &p5, c(0.25, 0.0), &policy()).unwrap();
        let oracle = scalar_phi(&[0.5], &[1.5], 0.5, 0.25);
        assert_abs_diff_eq!(r.value.get(0, 0).re, oracle, epsilon = 1e-13);
        assert!(r.value.get(0, 0).im.abs() <= 1e-15);
    }

    #[test]
    fn kummer_equal_parameters_cancel() {
        // S = T (non-diagonal): the Pochhammer factors cancel and the series
        // collapses to sum z^n/(q;q)_n times the identity.
        let p5 = qp(0.5);
        let s = ComplexMatrix::from_row_slice(
            2,
            &[c(1.2, 0.0), c(0.4, 0.1), c(-0.3, 0.0), c(0.9, 0.0)],
        )
        .unwrap();
        let z = 0.3;
        let r = kummer_1phi1(&s, &s, &p5, c(z, 0.0), &policy()).unwrap();
        let oracle = scalar_phi(&[], &[], 0.5, z); // sum z^n/(q;q)_n
        assert!(
            (r.value - ComplexMatrix::scalar(2, c(oracle, 0.0))).fro_norm() <= 1e-12,
            "cancellation failed"
        );
    }

    #[test]
    fn rphis_empty_lists_matches_scalar_sum() {
        let p5 = qp(0.5);
        let spec = HypergeometricSpec::new(1, vec![], vec![], p5).unwrap();
        let z = 0.4;
        let r = rphis_matrix(&spec, c(z, 0.0), &policy()).unwrap();
        // scaling exponent is 1: argument (1-q) z
        let oracle = scalar_phi(&[], &[], 0.5, 0.5 * z);
        assert_abs_diff_eq!(r.value.get(0, 0).re, oracle, epsilon = 1e-13);
    }

    #[test]
    fn rphis_scalar_oracle_r2_s1() {
        let p5 = qp(0.5);
        let spec = HypergeometricSpec::new(
            1,
            vec![mat1(0.4), mat1(0.9)],
            vec![mat1(1.6)],
            p5,
        )
        .unwrap();
        assert_eq!(spec.scaling_exponent(), 0);
        let z = 0.35;
        let r = rphis_matrix(&spec, c(z, 0.0), &policy()).unwrap();
        let oracle = scalar_phi(&[0.4, 0.9], &[1.6], 0.5, z);
        assert_abs_diff_eq!(r.value.get(0, 0).re, oracle, epsilon = 1e-13);
    }

    #[test]
    fn coefficients_first_two() {
        let p5 = qp(0.5);
        let s = ComplexMatrix::from_row_slice(
            2,
            &[c(0.7, 0.0), c(0.2, 0.0), c(0.1, 0.0), c(1.1, 0.0)],
        )
        .unwrap();
        let t = ComplexMatrix::from_row_slice(
            2,
            &[c(1.4, 0.0), c(-0.3, 0.0), c(0.0, 0.2), c(1.8, 0.0)],
        )
        .unwrap();
        let coeffs = kummer_coefficients(&s, &t, &p5, 1).unwrap();
        assert!((&coeffs.coeffs[0] - &ComplexMatrix::identity(2)).fro_norm() <= 1e-15);
        // U1 [T]_q = [S]_q
        let bracket_s = crate::qmatrix::q_bracket_matrix(&s, &p5);
        let bracket_t = crate::qmatrix::q_bracket_matrix(&t, &p5);
        let lhs = &coeffs.coeffs[1] * &bracket_t;
        assert!((lhs - bracket_s).fro_norm() <= 1e-13);
    }

    #[test]
    fn coefficients_recurrence_equals_closed_form_non_commuting() {
        let p5 = qp(0.5);
        // Deliberately non-commuting pair.
        let s = ComplexMatrix::from_row_slice(
            2,
            &[c(0.6, 0.1), c(0.5, 0.0), c(0.0, 0.0), c(1.2, 0.0)],
        )
        .unwrap();
        let t = ComplexMatrix::from_row_slice(
            2,
            &[c(1.5, 0.0), c(0.0, 0.0), c(0.7, -0.2), c(2.1, 0.0)],
        )
        .unwrap();
        assert!(!s.commutes_with(&t, 1e-12));
        let n_max = 40;
        let rec = kummer_coefficients(&s, &t, &p5, n_max).unwrap();
        let one_minus_q = p5.one_minus_q();
        for n in 0..=n_max {
            let num = crate::qmatrix::matrix_q_pochhammer(&s, &p5, n);
            let den = crate::qmatrix::matrix_q_pochhammer_inv(&t, &p5, n).unwrap();
            let scalar = one_minus_q.powu(n as u32) / crate::qcore::q_pochhammer(p5.q(), &p5, n);
            let closed = (&num * &den).scale(scalar);
            assert!(
                (&closed - &rec.coeffs[n]).fro_norm() <= 1e-12,
                "coefficient mismatch at n = {n}: {}",
                (&closed - &rec.coeffs[n]).fro_norm()
            );
        }
    }

    #[test]
    fn fundamental_pair_degenerate_when_t_is_identity() {
        let p5 = qp(0.5);
        let s = ComplexMatrix::diagonal_re(&[0.4, 0.8]);
        let t = ComplexMatrix::identity(2);
        let pair = kummer_fundamental_pair(&s, &t, &p5, c(0.3, 0.0), &policy());
        let u1 = pair.first.unwrap();
        let u2 = pair.second.unwrap();
        assert!(u2.degenerate);
        assert!((u1.value - u2.result.value).fro_norm() <= 1e-12);
    }

    #[test]
    fn fundamental_pair_rejects_non_commuting_second() {
        let p5 = qp(0.5);
        let s = ComplexMatrix::from_row_slice(
            2,
            &[c(0.5, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let t = ComplexMatrix::from_row_slice(
            2,
            &[c(1.5, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)],
        )
        .unwrap();
        let pair = kummer_fundamental_pair(&s, &t, &p5, c(0.3, 0.0), &policy());
        assert!(pair.first.is_ok());
        assert!(matches!(pair.second, Err(Error::NotCommuting(_))));
    }

    #[test]
    fn fundamental_pair_diagonal_matches_eigenwise_scalars() {
        let p5 = qp(0.5);
        let (s1, s2) = (0.4, 0.9);
        let (t1, t2) = (1.3, 1.7);
        let s = ComplexMatrix::diagonal_re(&[s1, s2]);
        let t = ComplexMatrix::diagonal_re(&[t1, t2]);
        let z = 0.5;
        let pair = kummer_fundamental_pair(&s, &t, &p5, c(z, 0.0), &policy());
        let u1 = pair.first.unwrap().value;
        let u2 = pair.second.unwrap().result.value;
        let w = 0.5 * z; // (1-q) z
        for (i, (si, ti)) in [(s1, t1), (s2, t2)].iter().enumerate() {
            let scalar_u1 = scalar_phi(&[*si], &[*ti], 0.5, w);
            assert_abs_diff_eq!(u1.get(i, i).re, scalar_u1, epsilon = 1e-12);
            let scalar_u2 =
                z.powf(1.0 - ti) * scalar_phi(&[si + 1.0 - ti], &[2.0 - ti], 0.5, w);
            assert_abs_diff_eq!(u2.get(i, i).re, scalar_u2, epsilon = 1e-12);
        }
    }

    #[test]
    fn gauss_scalar_oracle_and_cancellation() {
        let p5 = qp(0.5);
        let r = gauss_2phi1(&mat1(0.6), &mat1(1.1), &mat1(1.9), &p5, c(0.3, 0.0), &policy())
            .unwrap();
        let oracle = scalar_phi(&[0.6, 1.1], &[1.9], 0.5, 0.3);
        assert_abs_diff_eq!(r.value.get(0, 0).re, oracle, epsilon = 1e-13);

        // Q = R cancellation reduces to a 1-phi-0 series.
        let r = gauss_2phi1(&mat1(0.6), &mat1(1.4), &mat1(1.4), &p5, c(0.3, 0.0), &policy())
            .unwrap();
        let oracle = scalar_phi(&[0.6], &[], 0.5, 0.3);
        assert_abs_diff_eq!(r.value.get(0, 0).re, oracle, epsilon = 1e-13);
    }

    #[test]
    fn gauss_pair_gating_and_degeneracy() {
        let p5 = qp(0.5);
        let z = c(0.3, 0.0);
        // W1(0) = I
        let pm = ComplexMatrix::diagonal_re(&[0.5, 0.8]);
        let qm = ComplexMatrix::diagonal_re(&[0.9, 1.2]);
        let rm = ComplexMatrix::diagonal_re(&[1.6, 2.2]);
        let pair = gauss_fundamental_pair(&pm, &qm, &rm, &p5, c(0.0, 0.0), &policy());
        assert!(
            (pair.first.unwrap().value - ComplexMatrix::identity(2)).fro_norm() <= 1e-15
        );

        // R = I flags the second solution as degenerate.
        let pair = gauss_fundamental_pair(&pm, &qm, &ComplexMatrix::identity(2), &p5, z, &policy());
        assert!(pair.second.unwrap().degenerate);

        // Non-commuting R gate.
        let rm_nc = ComplexMatrix::from_row_slice(
            2,
            &[c(1.5, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)],
        )
        .unwrap();
        let qm_nc = ComplexMatrix::from_row_slice(
            2,
            &[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1.4, 0.0)],
        )
        .unwrap();
        let pair = gauss_fundamental_pair(&pm, &qm_nc, &rm_nc, &p5, z, &policy());
        assert!(matches!(pair.first, Err(Error::NotCommuting(_))));
        assert!(matches!(pair.second, Err(Error::NotCommuting(_))));
    }

    #[test]
    fn gauss_pair_diagonal_matches_eigenwise_scalars() {
        let p5 = qp(0.5);
        let (p1, p2) = (0.5, 0.9);
        let (q1, q2) = (0.7, 1.3);
        let (r1, r2) = (1.4, 1.8);
        let z = 0.35;
        let pair = gauss_fundamental_pair(
            &ComplexMatrix::diagonal_re(&[p1, p2]),
            &ComplexMatrix::diagonal_re(&[q1, q2]),
            &ComplexMatrix::diagonal_re(&[r1, r2]),
            &p5,
            c(z, 0.0),
            &policy(),
        );
        let w1 = pair.first.unwrap().value;
        let w2 = pair.second.unwrap().result.value;
        for (i, ((pi, qi), ri)) in [(p1, q1), (p2, q2)].iter().zip([r1, r2]).enumerate() {
            let scalar_w1 = scalar_phi(&[*pi, *qi], &[ri], 0.5, z);
            assert_abs_diff_eq!(w1.get(i, i).re, scalar_w1, epsilon = 1e-12);
            let scalar_w2 = z.powf(1.0 - ri)
                * scalar_phi(&[pi + 1.0 - ri, qi + 1.0 - ri], &[2.0 - ri], 0.5, z);
            assert_abs_diff_eq!(w2.get(i, i).re, scalar_w2, epsilon = 1e-12);
        }
    }

    #[test]
    fn convergence_probe_tends_to_abs_z() {
        let p5 = qp(0.5);
        let s = ComplexMatrix::diagonal_re(&[0.5, 1.0]);
        let t = ComplexMatrix::diagonal_re(&[1.5, 2.0]);
        assert_eq!(convergence_probe(&s, &t, &p5, c(0.0, 0.0)).unwrap(), 0.0);
        let ratio = convergence_probe(&s, &t, &p5, c(0.5, 0.0)).unwrap();
        assert!((ratio - 0.5).abs() <= 0.05, "ratio = {ratio}");
    }

    #[test]
    fn convergence_probe_scalar_matches_oracle_ratio() {
        let p5 = qp(0.5);
        let (s, t, z) = (0.5f64, 1.5f64, 0.4f64);
        let ratio = convergence_probe(&mat1(s), &mat1(t), &p5, c(z, 0.0)).unwrap();
        // Oracle ratio from raw scalar terms.
        let poch = |a: f64, n: usize| -> f64 {
            let mut prod = 1.0;
            for k in 0..n {
                prod *= 1.0 - a * 0.5f64.powi(k as i32);
            }
            prod
        };
        let term = |n: usize| -> f64 {
            poch(0.5f64.powf(s), n) / poch(0.5f64.powf(t), n) * z.powi(n as i32)
                / poch(0.5, n)
        };
        let mut acc = 0.0;
        for n in PROBE_TERMS - 1 - PROBE_WINDOW..PROBE_TERMS - 1 {
            acc += (term(n + 1) / term(n)).abs();
        }
        let oracle = acc / PROBE_WINDOW as f64;
        assert_abs_diff_eq!(ratio, oracle, epsilon = 1e-10);
    }

    #[test]
    fn classical_limit_of_kummer_series() {
        // At q -> 1, the q-series with argument (1-q)z approaches the
        // classical confluent matrix series sum (S)_n [(T)_n]^{-1} z^n / n!.
        let p = qp(0.999);
        let s = ComplexMatrix::diagonal_re(&[0.8, 1.2]);
        let t = ComplexMatrix::diagonal_re(&[1.5, 2.3]);
        for &z in &[0.3, 0.7, 1.0] {
            let w = p.one_minus_q() * c(z, 0.0);
            let qval = kummer_1phi1(&s, &t, &p, w, &policy()).unwrap().value;
            let mut classical = ComplexMatrix::zeros(2);
            let mut rising_s = ComplexMatrix::identity(2);
            let mut rising_t = ComplexMatrix::identity(2);
            let mut factorial = 1.0f64;
            for n in 0..30usize {
                if n > 0 {
                    let shift = ComplexMatrix::scalar(2, c(n as f64 - 1.0, 0.0));
                    rising_s = &rising_s * &(&s + &shift);
                    rising_t = &rising_t * &(&t + &shift);
                    factorial *= n as f64;
                }
                let term = (&rising_s * &rising_t.inverse().unwrap())
                    .scale(c(z.powi(n as i32) / factorial, 0.0));
                classical = &classical + &term;
            }
            let err = (&qval - &classical).fro_norm() / classical.fro_norm();
            assert!(err <= 1e-2, "z = {z}: relative deviation {err}");
        }
    }

    #[test]
    fn truncation_consistency_on_halved_tolerance() {
        let p5 = qp(0.5);
        let s = ComplexMatrix::diagonal_re(&[0.5, 1.0]);
        let t = ComplexMatrix::diagonal_re(&[1.5, 2.0]);
        let loose = TruncationPolicy::new(1e-6, 0.0, 1000).unwrap();
        let tight = TruncationPolicy::new(5e-7, 0.0, 1000).unwrap();
        let a = kummer_1phi1(&s, &t, &p5, c(0.6, 0.0), &loose).unwrap();
        let b = kummer_1phi1(&s, &t, &p5, c(0.6, 0.0), &tight).unwrap();
        assert!((a.value - b.value).fro_norm() <= a.tail_estimate);
    }

    #[test]
    fn singular_denominator_is_reported_at_first_use() {
        // T = 0: (q^T; q)_1 = I - I is singular at k = 0.
        let p5 = qp(0.5);
        let s = mat1(0.5);
        let t = mat1(0.0);
        match kummer_1phi1(&s, &t, &p5, c(0.3, 0.0), &policy()) {
            Err(Error::SingularFactor { k }) => assert_eq!(k, 0),
            other => panic!("expected SingularFactor, got {other:?}"),
        }
    }
}
