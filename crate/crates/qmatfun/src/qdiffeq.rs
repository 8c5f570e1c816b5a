//! Bilateral second-order matrix q-difference equations.
//!
//! The general bilateral form acts on an unknown `U` through coefficients
//! multiplying from both sides:
//!
//! `φ₁ D_q²U + D_q²U φ₂ + φ₃ D_qU + D_qU φ₄ + φ₅ D_qU φ₆ + φ₇ U φ₈ = 0`.
//!
//! This module evaluates such residuals with exact q-difference quotients
//! (sampling `U` at `z`, `qz`, `q²z` — no numerical differentiation), builds
//! the specific coefficient bundles for the q-Kummer and Gauss equations and
//! for the equation transformed to `u = 1/z` (base `s = 1/q`), classifies
//! points as ordinary / regular singular / irregular singular, and evaluates
//! the two Jackson-integral solutions of the q-Kummer equation together with
//! the first-order recurrences their integrands satisfy.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{
    jackson_integral_finite, jackson_integral_infinite, q_exp_big, q_exp_small_neg,
    q_pochhammer_inf, QParameter, SeriesResult, TruncationPolicy,
};
use crate::qmatrix::{
    mat_exp, q_bracket_matrix, q_power_matrix, matrix_q_pochhammer_inf, spectral_info,
    z_power_matrix, ComplexMatrix, COMMUTE_RTOL,
};

/// A coefficient handle `z ↦ φ(z)`; absent handles are identically zero.
pub type CoeffFn = Box<dyn Fn(Complex64) -> ComplexMatrix + Send + Sync>;

/// The eight coefficient functions `φ₁ … φ₈` of a bilateral second-order
/// equation, indexed 1-based as usual.
pub struct BilateralCoefficients {
    dim: usize,
    phi: [Option<CoeffFn>; 8],
}

impl BilateralCoefficients {
    pub fn new(dim: usize) -> Self {
        BilateralCoefficients {
            dim,
            phi: Default::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Installs `φ_idx`, `1 ≤ idx ≤ 8`.
    pub fn set_phi(&mut self, idx: usize, f: CoeffFn) -> &mut Self {
        assert!((1..=8).contains(&idx), "phi index must be 1..=8");
        self.phi[idx - 1] = Some(f);
        self
    }

    /// True when `φ_idx` is the identically-zero handle.
    pub fn is_zero(&self, idx: usize) -> bool {
        self.phi[idx - 1].is_none()
    }

    /// Evaluates `φ_idx(z)` (zero matrix for absent handles).
    pub fn phi(&self, idx: usize, z: Complex64) -> ComplexMatrix {
        match &self.phi[idx - 1] {
            Some(f) => f(z),
            None => ComplexMatrix::zeros(self.dim),
        }
    }
}

impl std::fmt::Debug for BilateralCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let present: Vec<usize> = (1..=8).filter(|&i| !self.is_zero(i)).collect();
        write!(
            f,
            "BilateralCoefficients {{ dim: {}, nonzero phi: {:?} }}",
            self.dim, present
        )
    }
}

/// Verdict of the singular-point classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularKind {
    Ordinary,
    SingularRegular,
    SingularIrregular,
    SingularUndetermined,
}

impl SingularKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SingularKind::Ordinary => "ordinary",
            SingularKind::SingularRegular => "singular-regular",
            SingularKind::SingularIrregular => "singular-irregular",
            SingularKind::SingularUndetermined => "singular-undetermined",
        }
    }

    pub fn is_singular(&self) -> bool {
        !matches!(self, SingularKind::Ordinary)
    }
}

impl std::fmt::Display for SingularKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classification result with a human-readable witness of the deciding
/// check.
#[derive(Debug, Clone, PartialEq)]
pub struct PointClassification {
    pub kind: SingularKind,
    pub witness: String,
}

/// Residual norms of an equation applied to a candidate solution over a set
/// of sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub points: Vec<(Complex64, f64)>,
    pub max_residual: f64,
    pub tolerance_used: f64,
}

impl ResidualReport {
    pub fn from_points(points: Vec<(Complex64, f64)>, tolerance_used: f64) -> Self {
        let max_residual = points.iter().map(|&(_, r)| r).fold(0.0f64, f64::max);
        ResidualReport {
            points,
            max_residual,
            tolerance_used,
        }
    }

    pub fn passes(&self) -> bool {
        self.max_residual <= self.tolerance_used
    }
}

/// Evaluates the bilateral left-hand side at `z` for a candidate solution
/// `U`, with shift base `base` (`q` for the ordinary bundles; the
/// infinity-transformed bundle uses `s = 1/q`, which is a perfectly good
/// finite-difference base even though `|s| > 1`).
pub fn bilateral_residual(
    coeffs: &BilateralCoefficients,
    u: &dyn Fn(Complex64) -> Result<ComplexMatrix>,
    z: Complex64,
    base: Complex64,
) -> Result<ComplexMatrix> {
    if base.norm() == 0.0 || (base - Complex64::new(1.0, 0.0)).norm() == 0.0 {
        return Err(Error::InvalidParameter(
            "shift base must differ from 0 and 1".into(),
        ));
    }
    if z.norm() == 0.0 {
        return Err(Error::DivisionByZero(
            "bilateral residual needs z != 0 (q-derivatives sample z, qz, q^2 z)".into(),
        ));
    }
    let one_minus = Complex64::new(1.0, 0.0) - base;
    let u0 = u(z)?;
    let u1 = u(base * z)?;
    let u2 = u(base * base * z)?;
    let du = (&u0 - &u1) / (one_minus * z);
    let du_shift = (&u1 - &u2) / (one_minus * base * z);
    let d2u = (&du - &du_shift) / (one_minus * z);

    let mut acc = ComplexMatrix::zeros(coeffs.dim());
    if !coeffs.is_zero(1) {
        acc = &acc + &(&coeffs.phi(1, z) * &d2u);
    }
    if !coeffs.is_zero(2) {
        acc = &acc + &(&d2u * &coeffs.phi(2, z));
    }
    if !coeffs.is_zero(3) {
        acc = &acc + &(&coeffs.phi(3, z) * &du);
    }
    if !coeffs.is_zero(4) {
        acc = &acc + &(&du * &coeffs.phi(4, z));
    }
    if !coeffs.is_zero(5) && !coeffs.is_zero(6) {
        acc = &acc + &(&(&coeffs.phi(5, z) * &du) * &coeffs.phi(6, z));
    }
    if !coeffs.is_zero(7) && !coeffs.is_zero(8) {
        acc = &acc + &(&(&coeffs.phi(7, z) * &u0) * &coeffs.phi(8, z));
    }
    Ok(acc)
}

/// Coefficient bundle of the bilateral q-Kummer equation
/// `z D_q²U q^T + D_qU [T]_q − q^S z D_qU − [S]_q U = 0`:
/// `φ₂ = z q^T`, `φ₃ = −z q^S`, `φ₄ = [T]_q`, `φ₇ = −[S]_q`, `φ₈ = I`.
pub fn kummer_coeffs_bilateral(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
) -> BilateralCoefficients {
    let dim = s.dim();
    let t_pow = q_power_matrix(qp, t);
    let s_pow = q_power_matrix(qp, s);
    let bracket_t = q_bracket_matrix(t, qp);
    let bracket_s_neg = -q_bracket_matrix(s, qp);
    let mut coeffs = BilateralCoefficients::new(dim);
    coeffs
        .set_phi(2, Box::new(move |z| t_pow.scale(z)))
        .set_phi(3, Box::new(move |z| s_pow.scale(-z)))
        .set_phi(4, Box::new(move |z| {
            let _ = z;
            bracket_t.clone()
        }))
        .set_phi(7, Box::new(move |z| {
            let _ = z;
            bracket_s_neg.clone()
        }))
        .set_phi(8, Box::new(move |z| {
            let _ = z;
            ComplexMatrix::identity(dim)
        }));
    coeffs
}

/// Left-hand side of the pure-shift form of the q-Kummer equation,
/// `U(q²z) q^{T−I} − [I + q^S (q−1)z] U(qz) − U(qz) q^{T−I}
///   + [1 + (q−1)z] U(z)`,
/// an exact `(1−q)² z` rescaling of the bilateral form (no divisions, so it
/// is defined at `z = 0` as well).
pub fn kummer_shifted_residual(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    z: Complex64,
    u: &dyn Fn(Complex64) -> Result<ComplexMatrix>,
) -> Result<ComplexMatrix> {
    let one = Complex64::new(1.0, 0.0);
    let q = qp.q();
    let dim = s.dim();
    let identity = ComplexMatrix::identity(dim);
    let t_pow_shift = q_power_matrix(qp, t).scale(one / q); // q^{T-I}
    let s_pow = q_power_matrix(qp, s);
    let u0 = u(z)?;
    let u1 = u(q * z)?;
    let u2 = u(q * q * z)?;
    let left_factor = &identity + &s_pow.scale((q - one) * z);
    Ok(&(&(&u2 * &t_pow_shift) - &(&left_factor * &u1)) - &(&u1 * &t_pow_shift)
        + &u0.scale(one + (q - one) * z))
}

/// Coefficient bundle of the q-Kummer equation transformed to the variable
/// `u = 1/z` with base `s = 1/q` (requires `ST = TS`):
/// `φ₁ = u³ I`, `φ₃ = u s^{T−S−3I} − u² [T−2I]_s`, `φ₇ = s^{T−3I} [−S]_s`,
/// `φ₈ = I`. Returns the bundle together with the base `s`.
pub fn infinity_transform(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
) -> Result<(BilateralCoefficients, Complex64)> {
    if !s.commutes_with(t, COMMUTE_RTOL) {
        return Err(Error::NotCommuting(
            "the transform to u = 1/z needs ST = TS".into(),
        ));
    }
    let dim = s.dim();
    let one = Complex64::new(1.0, 0.0);
    let s_base = one / qp.q();
    let ln_s = -qp.ln_q();
    let identity = ComplexMatrix::identity(dim);

    // s^M = exp(M ln s) for the three exponents needed.
    let s_pow = |m: &ComplexMatrix| mat_exp(&m.scale(ln_s));
    let three_i = ComplexMatrix::scalar(dim, Complex64::new(3.0, 0.0));
    let two_i = ComplexMatrix::scalar(dim, Complex64::new(2.0, 0.0));
    let a = s_pow(&(&(t - s) - &three_i)); // s^{T-S-3I}
    let bracket_t2 = (identity.clone() - s_pow(&(t - &two_i))) / (one - s_base); // [T-2I]_s
    let bracket_neg_s = (identity.clone() - s_pow(&(-s))) / (one - s_base); // [-S]_s
    let phi7 = &s_pow(&(t - &three_i)) * &bracket_neg_s;

    let mut coeffs = BilateralCoefficients::new(dim);
    coeffs
        .set_phi(1, Box::new(move |z| ComplexMatrix::scalar(dim, z * z * z)))
        .set_phi(3, Box::new(move |z| {
            &a.scale(z) - &bracket_t2.scale(z * z)
        }))
        .set_phi(7, Box::new(move |z| {
            let _ = z;
            phi7.clone()
        }))
        .set_phi(8, Box::new(move |z| {
            let _ = z;
            ComplexMatrix::identity(dim)
        }));
    Ok((coeffs, s_base))
}

/// Invertibility gauge threshold for the classifier.
const CLASSIFY_INVERTIBLE_TOL: f64 = 1e-10;
/// Probe sequence `z_m = z₀ + r₀ ρ^m`.
const PROBE_R0: f64 = 1e-2;
const PROBE_RHO: f64 = 0.5;
const PROBE_STEPS: usize = 20;
/// Relative Cauchy tolerance deciding that a probed limit exists.
const PROBE_CAUCHY_RTOL: f64 = 1e-6;

fn is_invertible_at(m: &ComplexMatrix) -> bool {
    m.invertibility_ratio() > CLASSIFY_INVERTIBLE_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProbeVerdict {
    Exists,
    Diverges,
    Inconclusive,
}

impl ProbeVerdict {
    fn as_str(&self) -> &'static str {
        match self {
            ProbeVerdict::Exists => "exists",
            ProbeVerdict::Diverges => "diverges",
            ProbeVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Record of one probed coefficient-ratio limit: the pair label, the
/// verdict, and the norm sequence along the approach points.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTrace {
    pub pair: String,
    pub verdict: &'static str,
    pub norms: Vec<f64>,
}

/// Probes `lim (z−z₀)^pow φ_j(z) φ_i(z)^{−1}` along the geometric approach
/// sequence; returns the verdict and the probe-norm trace.
fn probe_limit(
    coeffs: &BilateralCoefficients,
    j: usize,
    i: usize,
    pow: u32,
    z0: Complex64,
) -> (ProbeVerdict, Vec<f64>) {
    let mut norms = Vec::with_capacity(PROBE_STEPS);
    let mut values: Vec<ComplexMatrix> = Vec::with_capacity(PROBE_STEPS);
    for m in 0..PROBE_STEPS {
        let offset = PROBE_R0 * PROBE_RHO.powi(m as i32);
        let z = z0 + Complex64::new(offset, 0.0);
        let denom = coeffs.phi(i, z);
        let inv = match denom.inverse() {
            Ok(inv) => inv,
            Err(_) => return (ProbeVerdict::Inconclusive, norms),
        };
        let weight = Complex64::new(offset, 0.0).powu(pow);
        let l = (&coeffs.phi(j, z) * &inv).scale(weight);
        norms.push(l.fro_norm());
        values.push(l);
    }
    // Existence: the tail of the sequence is Cauchy in the relative sense.
    let n = values.len();
    let cauchy = (n - 3..n).all(|m| {
        let diff = (&values[m] - &values[m - 1]).fro_norm();
        diff <= PROBE_CAUCHY_RTOL * norms[m].max(1.0)
    });
    if cauchy {
        return (ProbeVerdict::Exists, norms);
    }
    // Divergence: sustained geometric growth (1/u along the probe sequence
    // grows by 1/ρ = 2 per step).
    let growing = (n - 8..n).all(|m| norms[m] >= 1.4 * norms[m - 1]);
    if growing && norms[n - 1] >= 50.0 * norms[n - 9].max(1e-12) {
        return (ProbeVerdict::Diverges, norms);
    }
    (ProbeVerdict::Inconclusive, norms)
}

/// Classifies `z₀` for a bilateral coefficient bundle.
///
/// Ordinary iff `φ₁(z₀)` and `φ₂(z₀)` are invertible. Otherwise the lower
/// coefficients are screened (handles that are identically zero or vanish at
/// `z₀` are skipped) and the weighted coefficient-ratio limits are probed
/// numerically along `z_m = z₀ + r₀ ρ^m`; a limit exists when the probe
/// sequence is Cauchy, and a confidently diverging probe makes the point
/// irregular. Inconclusive probes yield `singular-undetermined` — numerics
/// can only evidence a limit, not prove it.
pub fn classify_singular_point(
    coeffs: &BilateralCoefficients,
    z0: Complex64,
) -> Result<PointClassification> {
    classify_singular_point_traced(coeffs, z0).map(|(cls, _)| cls)
}

/// [`classify_singular_point`] returning the probe traces alongside the
/// verdict.
pub fn classify_singular_point_traced(
    coeffs: &BilateralCoefficients,
    z0: Complex64,
) -> Result<(PointClassification, Vec<ProbeTrace>)> {
    let lead_invertible = |idx: usize| -> bool {
        !coeffs.is_zero(idx) && is_invertible_at(&coeffs.phi(idx, z0))
    };
    if lead_invertible(1) && lead_invertible(2) {
        return Ok((
            PointClassification {
                kind: SingularKind::Ordinary,
                witness: "phi1(z0) and phi2(z0) invertible".into(),
            },
            vec![],
        ));
    }

    // Singular gate: each lower coefficient that is nonzero at z0 must be
    // invertible there.
    for j in 3..=8 {
        if coeffs.is_zero(j) {
            continue;
        }
        let m = coeffs.phi(j, z0);
        if m.fro_norm() <= 1e-12 {
            continue; // vanishes at the point
        }
        if !is_invertible_at(&m) {
            return Ok((
                PointClassification {
                    kind: SingularKind::SingularUndetermined,
                    witness: format!("phi{j}(z0) is neither zero nor invertible"),
                },
                vec![],
            ));
        }
    }

    // Probe the regularity limits against every present leading side.
    let denominators: Vec<usize> = (1..=2).filter(|&i| !coeffs.is_zero(i)).collect();
    if denominators.is_empty() {
        return Ok((
            PointClassification {
                kind: SingularKind::SingularUndetermined,
                witness: "no leading coefficient present to probe against".into(),
            },
            vec![],
        ));
    }
    let mut traces = Vec::new();
    let mut diverging: Option<String> = None;
    let mut inconclusive: Option<String> = None;
    for &i in &denominators {
        for j in 3..=8 {
            if coeffs.is_zero(j) {
                continue;
            }
            let pow = if j >= 7 { 2 } else { 1 };
            let (verdict, norms) = probe_limit(coeffs, j, i, pow, z0);
            let label = format!("(z-z0)^{pow} phi{j} phi{i}^-1");
            traces.push(ProbeTrace {
                pair: label.clone(),
                verdict: verdict.as_str(),
                norms,
            });
            match verdict {
                ProbeVerdict::Exists => {}
                ProbeVerdict::Diverges => {
                    diverging.get_or_insert_with(|| format!("probe of {label} diverges"));
                }
                ProbeVerdict::Inconclusive => {
                    inconclusive
                        .get_or_insert_with(|| format!("probe of {label} inconclusive"));
                }
            }
        }
    }
    let classification = if let Some(witness) = diverging {
        PointClassification {
            kind: SingularKind::SingularIrregular,
            witness,
        }
    } else if let Some(witness) = inconclusive {
        PointClassification {
            kind: SingularKind::SingularUndetermined,
            witness,
        }
    } else {
        PointClassification {
            kind: SingularKind::SingularRegular,
            witness: "all probed coefficient-ratio limits are Cauchy".into(),
        }
    };
    Ok((classification, traces))
}

fn ensure_positive_stable(m: &ComplexMatrix, what: &str) -> Result<()> {
    let info = spectral_info(m)?;
    if !info.positive_stable {
        return Err(Error::NotPositiveStable(format!(
            "{what}: beta = {:.6} must be > 0",
            info.beta
        )));
    }
    Ok(())
}

fn ensure_positive_real(z: Complex64, what: &str) -> Result<()> {
    if z.im != 0.0 || z.re <= 0.0 {
        return Err(Error::BranchCutViolation(format!(
            "{what} is restricted to the positive real ray by default, got z = {z}"
        )));
    }
    Ok(())
}

fn integral_theorem_checks(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
) -> Result<()> {
    if !s.commutes_with(t, COMMUTE_RTOL) {
        return Err(Error::NotCommuting("integral solutions need ST = TS".into()));
    }
    ensure_positive_stable(s, "S")?;
    ensure_positive_stable(t, "T")?;
    ensure_positive_stable(&(t - s), "T - S")?;
    Ok(())
}

/// First Jackson-integral solution of the q-Kummer equation,
///
/// `U₁(z) = ∫_0^{1/((1−q)q²z)} E_q^{−qzu} (qu)^{S−I}
///          ([(1−q)qz − q] qu; q)_∞ ([(1−q)qz·I − q^{T−S}] qu; q)_∞^{−1} d_q u`,
///
/// for commuting `S`, `T` with `S`, `T`, `T−S` positive stable and real
/// `z > 0`. The policy governs the outer Jackson sum; the q-exponential and
/// the infinite products run at the default tight tolerance.
///
/// Validity note: when `T − S = I` the two infinite-product factors cancel
/// identically (the integrand reduces to `E_q^{−qzu} (qu)^{S−I}`) and the
/// resulting function satisfies the bilateral q-Kummer equation. For other
/// gaps the product factors depend on `z`, and the function defined by this
/// sliding-profile integral is not annihilated by the equation — only the
/// per-point recurrence [`recurrence_check_2_28`] holds. The residual suites
/// therefore exercise this solution on `T = S + I` inputs.
pub fn integral_solution_u1(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    z: Complex64,
    policy: &TruncationPolicy,
) -> Result<SeriesResult<ComplexMatrix>> {
    ensure_positive_real(z, "integral solution U1")?;
    integral_solution_u1_any_z(s, t, qp, z, policy)
}

/// [`integral_solution_u1`] without the positive-real-ray restriction;
/// branch cuts are still checked node by node.
pub fn integral_solution_u1_any_z(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    z: Complex64,
    policy: &TruncationPolicy,
) -> Result<SeriesResult<ComplexMatrix>> {
    integral_theorem_checks(s, t)?;
    if z.norm() == 0.0 {
        return Err(Error::DivisionByZero("integral solution U1 at z = 0".into()));
    }
    let one = Complex64::new(1.0, 0.0);
    let q = qp.q();
    let dim = s.dim();
    let identity = ComplexMatrix::identity(dim);
    let s_minus_i = s - &identity;
    let ts_pow = q_power_matrix(qp, &(t - s)); // q^{T-S}
    let inner = TruncationPolicy::default();

    let upper = one / (qp.one_minus_q() * q * q * z);
    let scalar_shift = qp.one_minus_q() * q * z; // (1-q) q z
    let a_scalar = scalar_shift - q; // (1-q) q z - q
    let b_matrix = &ComplexMatrix::scalar(dim, scalar_shift) - &ts_pow;

    jackson_integral_finite(
        |u| {
            let qu = q * u;
            let weight = q_exp_big(-q * z * u, qp, &inner)?.value;
            let power = z_power_matrix(qu, &s_minus_i)?;
            let scalar_poch = q_pochhammer_inf(a_scalar * qu, qp, &inner)?.value;
            let matrix_poch =
                matrix_q_pochhammer_inf(&b_matrix.scale(qu), qp, &inner)?.value;
            let matrix_inv = matrix_poch.inverse()?;
            Ok((&power * &matrix_inv).scale(weight * scalar_poch))
        },
        upper,
        qp,
        policy,
    )
}

/// Second Jackson-integral solution of the q-Kummer equation,
///
/// `U₂(z) = q^{S−I} ∫_0^∞ u^{S−I} e_q^{−zu}
///          (−qu; q)_∞ (−q^{T−S} u; q)_∞^{−1} d_q u`,
///
/// evaluated on the bilateral node window `q^j`, `−j_neg ≤ j ≤ j_pos`, for
/// commuting `S`, `T` with `S`, `T`, `T−S` positive stable and real `z > 0`.
pub fn integral_solution_u2(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    z: Complex64,
    j_neg: usize,
    j_pos: usize,
    policy: &TruncationPolicy,
) -> Result<SeriesResult<ComplexMatrix>> {
    ensure_positive_real(z, "integral solution U2")?;
    integral_theorem_checks(s, t)?;
    let q = qp.q();
    let dim = s.dim();
    let identity = ComplexMatrix::identity(dim);
    let s_minus_i = s - &identity;
    let ts_pow = q_power_matrix(qp, &(t - s)); // q^{T-S}
    let prefactor = q_power_matrix(qp, &s_minus_i); // q^{S-I}
    let inner = TruncationPolicy::default();

    let sum = jackson_integral_infinite(
        |u| {
            let power = z_power_matrix(u, &s_minus_i)?;
            let weight = q_exp_small_neg(z * u, qp, &inner)?.value;
            let scalar_poch = q_pochhammer_inf(-q * u, qp, &inner)?.value;
            let matrix_poch =
                matrix_q_pochhammer_inf(&ts_pow.scale(-u), qp, &inner)?.value;
            let matrix_inv = matrix_poch.inverse()?;
            Ok((&power * &matrix_inv).scale(weight * scalar_poch))
        },
        qp,
        j_neg,
        j_pos,
        policy,
    )?;
    let scale = prefactor.fro_norm();
    Ok(SeriesResult {
        value: &prefactor * &sum.value,
        terms_used: sum.terms_used,
        tail_estimate: sum.tail_estimate * scale,
    })
}

/// The integrand profile of `U₁`:
/// `F(u) = u^{S−I} ([(1−q)qz − q] u; q)_∞ ([(1−q)qz·I − q^{T−S}] u; q)_∞^{−1}`.
fn integrand_profile_u1(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    z: Complex64,
    u: Complex64,
) -> Result<ComplexMatrix> {
    let q = qp.q();
    let dim = s.dim();
    let identity = ComplexMatrix::identity(dim);
    let inner = TruncationPolicy::default();
    let scalar_shift = qp.one_minus_q() * q * z;
    let a_scalar = scalar_shift - q;
    let b_matrix = &ComplexMatrix::scalar(dim, scalar_shift) - &q_power_matrix(qp, &(t - s));
    let power = z_power_matrix(u, &(s - &identity))?;
    let scalar_poch = q_pochhammer_inf(a_scalar * u, qp, &inner)?.value;
    let matrix_inv = matrix_q_pochhammer_inf(&b_matrix.scale(u), qp, &inner)?
        .value
        .inverse()?;
    Ok((&power * &matrix_inv).scale(scalar_poch))
}

/// Residual of the recurrence satisfied by the `U₁` integrand,
/// `{1 + [q − (1−q)qz] u} F(qu) − q^{S−I} {1 − (1−q)qzu} F(u)
///   − u F(u) q^{T−I}`,
/// at the profile `F` above. Vanishes identically when `ST = TS`.
pub fn recurrence_check_2_28(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    z: Complex64,
    u: Complex64,
) -> Result<ComplexMatrix> {
    if !s.commutes_with(t, COMMUTE_RTOL) {
        return Err(Error::NotCommuting("recurrence check needs ST = TS".into()));
    }
    recurrence_residual_2_28(s, t, qp, z, u, &|uu| integrand_profile_u1(s, t, qp, z, uu))
}

/// Same recurrence applied to an arbitrary profile (used to show that
/// perturbed integrands fail it).
pub fn recurrence_residual_2_28(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    z: Complex64,
    u: Complex64,
    profile: &dyn Fn(Complex64) -> Result<ComplexMatrix>,
) -> Result<ComplexMatrix> {
    let one = Complex64::new(1.0, 0.0);
    let q = qp.q();
    let scalar_shift = qp.one_minus_q() * q * z;
    let f_qu = profile(q * u)?;
    let f_u = profile(u)?;
    let s_pow_shift = q_power_matrix(qp, s).scale(one / q); // q^{S-I}
    let t_pow_shift = q_power_matrix(qp, t).scale(one / q); // q^{T-I}
    let term1 = f_qu.scale(one + (q - scalar_shift) * u);
    let term2 = (&s_pow_shift * &f_u).scale(one - scalar_shift * u);
    let term3 = (&f_u * &t_pow_shift).scale(u);
    Ok(&(&term1 - &term2) - &term3)
}

/// The integrand profile of `U₂`:
/// `f(u) = u^{S−I} (−u; q)_∞ (−q^{T−S−I} u; q)_∞^{−1}`.
fn integrand_profile_u2(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    u: Complex64,
) -> Result<ComplexMatrix> {
    let one = Complex64::new(1.0, 0.0);
    let dim = s.dim();
    let identity = ComplexMatrix::identity(dim);
    let inner = TruncationPolicy::default();
    let power = z_power_matrix(u, &(s - &identity))?;
    let scalar_poch = q_pochhammer_inf(-u, qp, &inner)?.value;
    let exponent = q_power_matrix(qp, &(t - s)).scale(one / qp.q()); // q^{T-S-I}
    let matrix_inv = matrix_q_pochhammer_inf(&exponent.scale(-u), qp, &inner)?
        .value
        .inverse()?;
    Ok((&power * &matrix_inv).scale(scalar_poch))
}

/// Residual of the recurrence satisfied by the `U₂` integrand,
/// `(1 + u) f(qu) − (q^{S−I} + q^{T−2I} u) f(u)`,
/// at the profile `f` above. Vanishes identically when `ST = TS`.
pub fn recurrence_check_2_38(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    u: Complex64,
) -> Result<ComplexMatrix> {
    if !s.commutes_with(t, COMMUTE_RTOL) {
        return Err(Error::NotCommuting("recurrence check needs ST = TS".into()));
    }
    recurrence_residual_2_38(s, t, qp, u, &|uu| integrand_profile_u2(s, t, qp, uu))
}

/// Same recurrence applied to an arbitrary profile.
pub fn recurrence_residual_2_38(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    qp: &QParameter,
    u: Complex64,
    profile: &dyn Fn(Complex64) -> Result<ComplexMatrix>,
) -> Result<ComplexMatrix> {
    let one = Complex64::new(1.0, 0.0);
    let q = qp.q();
    let f_qu = profile(q * u)?;
    let f_u = profile(u)?;
    let s_pow_shift = q_power_matrix(qp, s).scale(one / q); // q^{S-I}
    let t_pow_shift2 = q_power_matrix(qp, t).scale(one / (q * q)); // q^{T-2I}
    let coeff = &s_pow_shift + &t_pow_shift2.scale(u);
    Ok(&f_qu.scale(one + u) - &(&coeff * &f_u))
}

/// Coefficient bundle of the bilateral Gauss equation (right-multiplied by
/// the invertible factor `q^{−Q}`, the form in which the identification is
/// stated):
/// `φ₁ = −z² q^{P+I}`, `φ₂ = z q^{R−Q}`, `φ₃ = −z [P]_q`,
/// `φ₄ = [R]_q q^{−Q}`, `φ₅ = −z q^P`, `φ₆ = [Q+I]_q q^{−Q}`,
/// `φ₇ = −[P]_q`, `φ₈ = [Q]_q q^{−Q}`.
pub fn gauss_coeffs_bilateral(
    pm: &ComplexMatrix,
    qm: &ComplexMatrix,
    rm: &ComplexMatrix,
    qp: &QParameter,
) -> BilateralCoefficients {
    let dim = pm.dim();
    let q = qp.q();
    let p_pow = q_power_matrix(qp, pm);
    let q_pow_neg = mat_exp(&qm.scale(-qp.ln_q())); // q^{-Q}
    let rq_pow = q_power_matrix(qp, &(rm - qm)); // q^{R-Q}
    let bracket_p = q_bracket_matrix(pm, qp);
    let bracket_r = q_bracket_matrix(rm, qp);
    let bracket_q = q_bracket_matrix(qm, qp);
    let identity = ComplexMatrix::identity(dim);
    let bracket_q_plus =
        (&identity - &q_power_matrix(qp, qm).scale(q)) / qp.one_minus_q(); // [Q+I]_q

    let phi1_mat = p_pow.scale(q); // q^{P+I}
    let phi4_mat = &bracket_r * &q_pow_neg;
    let phi6_mat = &bracket_q_plus * &q_pow_neg;
    let phi7_mat = -bracket_p.clone();
    let phi8_mat = &bracket_q * &q_pow_neg;

    let mut coeffs = BilateralCoefficients::new(dim);
    coeffs
        .set_phi(1, Box::new(move |z| phi1_mat.scale(-z * z)))
        .set_phi(2, Box::new(move |z| rq_pow.scale(z)))
        .set_phi(3, Box::new(move |z| bracket_p.scale(-z)))
        .set_phi(4, Box::new(move |z| {
            let _ = z;
            phi4_mat.clone()
        }))
        .set_phi(5, Box::new(move |z| p_pow.scale(-z)))
        .set_phi(6, Box::new(move |z| {
            let _ = z;
            phi6_mat.clone()
        }))
        .set_phi(7, Box::new(move |z| {
            let _ = z;
            phi7_mat.clone()
        }))
        .set_phi(8, Box::new(move |z| {
            let _ = z;
            phi8_mat.clone()
        }));
    coeffs
}

/// Residual of the general matrix q-difference equation
///
/// `[δ_q (q^{Q₁−I} δ_q + [Q₁−I]_q) ⋯ (q^{Q_s−I} δ_q + [Q_s−I]_q)
///    − z (q^{P₁} δ_q + [P₁]_q) ⋯ (q^{P_r} δ_q + [P_r]_q)] W(z)`,
///
/// where `δ_q W(z) = z D_q W(z) = (W(z) − W(qz))/(1−q)`, applied to a
/// candidate `W`. Factors act by left multiplication in the written order.
pub fn general_1_9_residual(
    ps: &[ComplexMatrix],
    qs: &[ComplexMatrix],
    qp: &QParameter,
    z: Complex64,
    w: &dyn Fn(Complex64) -> Result<ComplexMatrix>,
) -> Result<ComplexMatrix> {
    if z.norm() == 0.0 {
        return Err(Error::DivisionByZero(
            "general q-difference residual needs z != 0".into(),
        ));
    }
    use std::rc::Rc;
    type MatFn<'a> = Rc<dyn Fn(Complex64) -> Result<ComplexMatrix> + 'a>;

    fn delta_q<'a>(f: MatFn<'a>, q: Complex64, one_minus_q: Complex64) -> MatFn<'a> {
        Rc::new(move |zz| Ok((&f(zz)? - &f(q * zz)?) / one_minus_q))
    }
    fn affine_factor<'a>(
        exponent: &ComplexMatrix,
        f: MatFn<'a>,
        qp: &QParameter,
    ) -> MatFn<'a> {
        let q = qp.q();
        let one_minus_q = qp.one_minus_q();
        let a_pow = q_power_matrix(qp, exponent);
        let a_bracket = q_bracket_matrix(exponent, qp);
        Rc::new(move |zz| {
            let df = (&f(zz)? - &f(q * zz)?) / one_minus_q;
            Ok(&(&a_pow * &df) + &(&a_bracket * &f(zz)?))
        })
    }

    let base: MatFn<'_> = Rc::new(move |zz| w(zz));

    // Left operator chain: delta after the shifted denominator factors.
    let dim = if let Some(m) = ps.first().or_else(|| qs.first()) {
        m.dim()
    } else {
        w(z)?.dim()
    };
    let identity = ComplexMatrix::identity(dim);
    let mut left: MatFn<'_> = base.clone();
    for qmat in qs.iter().rev() {
        left = affine_factor(&(qmat - &identity), left, qp);
    }
    left = delta_q(left, qp.q(), qp.one_minus_q());

    // Right operator chain: the numerator factors, then multiply by z.
    let mut right: MatFn<'_> = base;
    for pmat in ps.iter().rev() {
        right = affine_factor(pmat, right, qp);
    }

    Ok(&left(z)? - &right(z)?.scale(z))
}
