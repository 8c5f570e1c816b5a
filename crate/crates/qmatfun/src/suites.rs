//! Named verification suites: each one substitutes claimed solutions into
//! their equations (or checks a functional identity) over randomized inputs
//! and reports the residual norms. These back the command-line `verify`
//! subcommands and the acceptance tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qcore::{
    jackson_integral_finite, q_deriv_of_integral_check, q_derivative, QParameter,
    TruncationPolicy,
};
use crate::qdiffeq::{
    bilateral_residual, gauss_coeffs_bilateral, integral_solution_u1, integral_solution_u2,
    kummer_coeffs_bilateral, recurrence_check_2_28, recurrence_check_2_38,
    recurrence_residual_2_28, recurrence_residual_2_38, ResidualReport,
};
use crate::qmatrix::{spectral_info, z_power_matrix, ComplexMatrix};
use crate::qseries::{
    kummer_coefficients, rphis_coefficients, HypergeometricSpec, SeriesCoefficients,
};
use crate::qspecial::{q_beta_matrix, q_gamma_matrix, verify_eq15, GammaEvalConfig};

/// Knobs shared by all suites. Defaults follow the desk-scale regime:
/// `q = 0.5`, real z-grid inside the unit interval, series truncated at 40
/// terms, 300 Jackson terms for the first integral solution and the
/// bilateral window `[−30, 60]` for the second.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub qp: QParameter,
    pub seed: u64,
    pub samples: usize,
    pub dims: Vec<usize>,
    pub grid: Vec<Complex64>,
    pub series_terms: usize,
    pub integral_max_terms: usize,
    pub window: (usize, usize),
    /// Residual gate; `None` picks the suite's own default.
    pub tolerance: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            qp: QParameter::real(0.5).expect("valid default base"),
            seed: 0,
            samples: 20,
            dims: vec![2, 3],
            grid: default_grid(),
            series_terms: 40,
            integral_max_terms: 300,
            window: (30, 60),
            tolerance: None,
        }
    }
}

/// Eight real points 0.1, 0.2, …, 0.8.
pub fn default_grid() -> Vec<Complex64> {
    (1..=8).map(|k| Complex64::new(0.1 * k as f64, 0.0)).collect()
}

/// Result of one suite run: the residual report plus any auxiliary named
/// pass/fail checks (e.g. "perturbed integrand is rejected").
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub report: ResidualReport,
    pub checks: Vec<(String, bool)>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.report.passes() && self.checks.iter().all(|(_, ok)| *ok)
    }
}

/// All suite names accepted by [`run_suite`].
pub const SUITE_NAMES: [&str; 7] = [
    "kummer-series",
    "kummer-second",
    "kummer-integrals",
    "gauss-series",
    "gamma-beta",
    "recurrences",
    "rules",
];

/// Default residual gate of each suite.
pub fn default_tolerance(name: &str) -> Option<f64> {
    match name {
        "kummer-series" | "kummer-second" | "gauss-series" => Some(1e-9),
        "kummer-integrals" => Some(1e-6),
        "gamma-beta" => Some(1e-8),
        "recurrences" | "rules" => Some(1e-10),
        _ => None,
    }
}

/// Dispatches a suite by its command-line name.
pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    match name {
        "kummer-series" => kummer_series_suite(cfg),
        "kummer-second" => kummer_second_suite(cfg),
        "kummer-integrals" => kummer_integrals_suite(cfg),
        "gauss-series" => gauss_series_suite(cfg),
        "gamma-beta" => gamma_beta_suite(cfg),
        "recurrences" => recurrences_suite(cfg),
        "rules" => rules_suite(cfg),
        other => Err(Error::InvalidParameter(format!(
            "unknown suite '{other}'; expected one of {SUITE_NAMES:?}"
        ))),
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

/// Random dense complex matrix with entries in the centered box of the given
/// half-width.
pub fn random_matrix(rng: &mut ChaCha8Rng, dim: usize, half_width: f64) -> ComplexMatrix {
    let entries: Vec<Complex64> = (0..dim * dim)
        .map(|_| {
            c(
                uniform(rng, -half_width, half_width),
                uniform(rng, -half_width, half_width),
            )
        })
        .collect();
    ComplexMatrix::from_row_slice(dim, &entries).expect("random entries are finite")
}

/// Random pair that is (with overwhelming probability) non-commuting.
pub fn random_noncommuting_pair(
    rng: &mut ChaCha8Rng,
    dim: usize,
) -> (ComplexMatrix, ComplexMatrix) {
    loop {
        let s = random_matrix(rng, dim, 0.8);
        let t = random_matrix(rng, dim, 0.8);
        if !s.commutes_with(&t, 1e-8) {
            return (s, t);
        }
    }
}

/// Random commuting pair built as polynomials in one random matrix, shifted
/// to be positive stable with margin.
pub fn random_commuting_positive_stable_pair(
    rng: &mut ChaCha8Rng,
    dim: usize,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let a = random_matrix(rng, dim, 0.5);
    let p = &a.scale(c(uniform(rng, 0.3, 1.0), 0.0))
        + &ComplexMatrix::scalar(dim, c(uniform(rng, 0.2, 0.8), 0.0));
    let q = &(&a * &a).scale(c(uniform(rng, 0.1, 0.4), 0.0))
        + &a.scale(c(uniform(rng, 0.2, 0.8), 0.0));
    let shift = |m: &ComplexMatrix| -> Result<ComplexMatrix> {
        let beta = spectral_info(m)?.beta;
        let lift = (0.3 - beta).max(0.0);
        Ok(m + &ComplexMatrix::scalar(m.dim(), c(lift, 0.0)))
    };
    Ok((shift(&p)?, shift(&q)?))
}

/// Random diagonal entries in a range, kept away from the integers so the
/// shifted denominators `2I − T` stay well conditioned.
fn random_offgrid_diagonal(
    rng: &mut ChaCha8Rng,
    dim: usize,
    lo: f64,
    hi: f64,
) -> ComplexMatrix {
    let entries: Vec<f64> = (0..dim)
        .map(|_| {
            loop {
                let x = uniform(rng, lo, hi);
                if (x - x.round()).abs() > 0.05 {
                    return x;
                }
            }
        })
        .collect();
    ComplexMatrix::diagonal_re(&entries)
}

fn gate(cfg: &SuiteConfig, default: f64) -> f64 {
    cfg.tolerance.unwrap_or(default)
}

/// Residual points of the bilateral q-Kummer equation on the truncated
/// series solution (coefficient recurrence, `cfg.series_terms` terms) for a
/// specific pair. No commutativity is required.
pub fn kummer_series_points(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    cfg: &SuiteConfig,
) -> Result<Vec<(Complex64, f64)>> {
    let qp = cfg.qp;
    let coeffs = kummer_coeffs_bilateral(s, t, &qp);
    let series = kummer_coefficients(s, t, &qp, cfg.series_terms)?;
    let u = |z: Complex64| -> Result<ComplexMatrix> { Ok(series.eval(z)) };
    cfg.grid
        .iter()
        .map(|&z| Ok((z, bilateral_residual(&coeffs, &u, z, qp.q())?.fro_norm())))
        .collect()
}

/// Residual of the bilateral q-Kummer equation on the truncated series
/// solution built from the coefficient recurrence, for random non-commuting
/// pairs.
pub fn kummer_series_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::new();
    for i in 0..cfg.samples {
        let dim = cfg.dims[i % cfg.dims.len()];
        let (s, t) = random_noncommuting_pair(&mut rng, dim);
        points.extend(kummer_series_points(&s, &t, cfg)?);
    }
    Ok(SuiteOutcome {
        name: "kummer-series",
        report: ResidualReport::from_points(points, gate(cfg, 1e-9)),
        checks: vec![],
    })
}

/// Evaluates `z^{E} · (truncated series)(z)` as a solution handle.
fn prefactored_poly(
    exponent: &ComplexMatrix,
    poly: &SeriesCoefficients,
    z: Complex64,
) -> Result<ComplexMatrix> {
    let prefactor = z_power_matrix(z, exponent)?;
    Ok(&prefactor * &poly.eval(z))
}

/// Residual points of the q-Kummer equation on the second (prefactored)
/// series solution for a specific commuting pair.
pub fn kummer_second_points(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    cfg: &SuiteConfig,
) -> Result<Vec<(Complex64, f64)>> {
    if !s.commutes_with(t, crate::qmatrix::COMMUTE_RTOL) {
        return Err(Error::NotCommuting(
            "second q-Kummer solution needs ST = TS".into(),
        ));
    }
    let qp = cfg.qp;
    let dim = s.dim();
    let coeffs = kummer_coeffs_bilateral(s, t, &qp);
    let identity = ComplexMatrix::identity(dim);
    let i_minus_t = &identity - t;
    // 1-phi-1 with exponents S+I-T, 2I-T carries scaling exponent 1, so its
    // coefficients already absorb the (1-q)^n argument scaling.
    let spec = HypergeometricSpec::new(
        dim,
        vec![s + &i_minus_t],
        vec![&identity + &i_minus_t],
        qp,
    )?;
    let poly = rphis_coefficients(&spec, cfg.series_terms)?;
    let u = |z: Complex64| prefactored_poly(&i_minus_t, &poly, z);
    cfg.grid
        .iter()
        .map(|&z| Ok((z, bilateral_residual(&coeffs, &u, z, qp.q())?.fro_norm())))
        .collect()
}

/// Residual of the q-Kummer equation on the second (prefactored) series
/// solution, for commuting diagonal pairs.
pub fn kummer_second_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut points = Vec::new();
    for i in 0..cfg.samples {
        let dim = cfg.dims[i % cfg.dims.len()];
        let s = random_offgrid_diagonal(&mut rng, dim, 0.3, 1.2);
        let t = random_offgrid_diagonal(&mut rng, dim, 1.1, 1.9);
        points.extend(kummer_second_points(&s, &t, cfg)?);
    }
    Ok(SuiteOutcome {
        name: "kummer-second",
        report: ResidualReport::from_points(points, gate(cfg, 1e-9)),
        checks: vec![],
    })
}

/// Residual points of the q-Kummer equation on both Jackson-integral
/// solutions for a specific commuting pair: the first solution at
/// `z ∈ {0.4, 0.7}`, the second at `z = 1.5` on the configured window.
pub fn kummer_integral_points(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    cfg: &SuiteConfig,
) -> Result<Vec<(Complex64, f64)>> {
    let qp = cfg.qp;
    let outer_u1 = TruncationPolicy::new(1e-14, 1e-300, cfg.integral_max_terms)?;
    let outer_u2 = TruncationPolicy::new(1e-7, 1e-300, 10_000)?;
    let coeffs = kummer_coeffs_bilateral(s, t, &qp);
    let mut points = Vec::new();
    let u1 = |z: Complex64| integral_solution_u1(s, t, &qp, z, &outer_u1).map(|r| r.value);
    for &z in &[c(0.4, 0.0), c(0.7, 0.0)] {
        let r = bilateral_residual(&coeffs, &u1, z, qp.q())?;
        points.push((z, r.fro_norm()));
    }
    let (j_neg, j_pos) = cfg.window;
    let u2 = |z: Complex64| {
        integral_solution_u2(s, t, &qp, z, j_neg, j_pos, &outer_u2).map(|r| r.value)
    };
    let z = c(1.5, 0.0);
    let r = bilateral_residual(&coeffs, &u2, z, qp.q())?;
    points.push((z, r.fro_norm()));
    Ok(points)
}

/// Residual of the q-Kummer equation on both Jackson-integral solutions for
/// commuting diagonal positive-stable inputs with `T − S` positive stable.
pub fn kummer_integrals_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let qp = cfg.qp;
    let mut points = Vec::new();
    let outer_u2 = TruncationPolicy::new(1e-7, 1e-300, 10_000)?;
    let samples = cfg.samples.max(1).min(5);
    for i in 0..samples {
        let dim = cfg.dims[i % cfg.dims.len()];

        // First solution: the sliding-profile integral solves the equation
        // for T = S + I (see its validity note), so that is where the full
        // integral-pair helper is exercised.
        let s = random_offgrid_diagonal(&mut rng, dim, 0.4, 1.0);
        let t = &s + &ComplexMatrix::identity(dim);
        points.extend(kummer_integral_points(&s, &t, cfg)?);

        // Second solution alone: valid for any positive-stable gap.
        let gap = random_offgrid_diagonal(&mut rng, dim, 0.5, 1.1);
        let t2 = &s + &gap;
        let coeffs2 = kummer_coeffs_bilateral(&s, &t2, &qp);
        let (j_neg, j_pos) = cfg.window;
        let u2 = |z: Complex64| {
            integral_solution_u2(&s, &t2, &qp, z, j_neg, j_pos, &outer_u2).map(|r| r.value)
        };
        let z = c(1.5, 0.0);
        let r = bilateral_residual(&coeffs2, &u2, z, qp.q())?;
        points.push((z, r.fro_norm()));
    }
    Ok(SuiteOutcome {
        name: "kummer-integrals",
        report: ResidualReport::from_points(points, gate(cfg, 1e-6)),
        checks: vec![],
    })
}

/// Residual points of the bilateral Gauss equation on both series solutions
/// for a specific commuting triple, over the part of the grid with
/// `|z| ≤ 0.5`.
pub fn gauss_series_points(
    pm: &ComplexMatrix,
    qm: &ComplexMatrix,
    rm: &ComplexMatrix,
    cfg: &SuiteConfig,
) -> Result<Vec<(Complex64, f64)>> {
    if !qm.commutes_with(rm, crate::qmatrix::COMMUTE_RTOL)
        || !pm.commutes_with(rm, crate::qmatrix::COMMUTE_RTOL)
    {
        return Err(Error::NotCommuting(
            "Gauss series solutions need PR = RP and QR = RQ".into(),
        ));
    }
    let qp = cfg.qp;
    let dim = pm.dim();
    let grid: Vec<Complex64> = cfg.grid.iter().copied().filter(|z| z.norm() <= 0.5).collect();
    let grid = if grid.is_empty() { vec![c(0.25, 0.0)] } else { grid };
    let coeffs = gauss_coeffs_bilateral(pm, qm, rm, &qp);
    let identity = ComplexMatrix::identity(dim);

    let spec_w1 = HypergeometricSpec::new(dim, vec![pm.clone(), qm.clone()], vec![rm.clone()], qp)?;
    let poly_w1 = rphis_coefficients(&spec_w1, cfg.series_terms)?;
    let w1 = |z: Complex64| -> Result<ComplexMatrix> { Ok(poly_w1.eval(z)) };

    let i_minus_r = &identity - rm;
    let spec_w2 = HypergeometricSpec::new(
        dim,
        vec![pm + &i_minus_r, qm + &i_minus_r],
        vec![&identity + &i_minus_r],
        qp,
    )?;
    let poly_w2 = rphis_coefficients(&spec_w2, cfg.series_terms)?;
    let w2 = |z: Complex64| prefactored_poly(&i_minus_r, &poly_w2, z);

    let mut points = Vec::new();
    for &z in &grid {
        let r1 = bilateral_residual(&coeffs, &w1, z, qp.q())?;
        points.push((z, r1.fro_norm()));
        let r2 = bilateral_residual(&coeffs, &w2, z, qp.q())?;
        points.push((z, r2.fro_norm()));
    }
    Ok(points)
}

/// Residual of the bilateral Gauss equation on both series solutions for
/// commuting diagonal triples, on the part of the grid with `|z| ≤ 0.5`.
pub fn gauss_series_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(3));
    let mut points = Vec::new();
    for i in 0..cfg.samples {
        let dim = cfg.dims[i % cfg.dims.len()];
        let pm = random_offgrid_diagonal(&mut rng, dim, 0.3, 1.0);
        let qm = random_offgrid_diagonal(&mut rng, dim, 0.5, 1.4);
        let rm = random_offgrid_diagonal(&mut rng, dim, 1.2, 1.9);
        points.extend(gauss_series_points(&pm, &qm, &rm, cfg)?);
    }
    Ok(SuiteOutcome {
        name: "gauss-series",
        report: ResidualReport::from_points(points, gate(cfg, 1e-9)),
        checks: vec![],
    })
}

/// q-Gamma functional equation for `p`, plus (when `q` is given) q-Beta
/// symmetry, the agreement of the two q-Beta routes, and the
/// shifted-factorial identity for `n ≤ 4`. Returns residual points and the
/// auxiliary named checks; `tag` labels the points.
pub fn gamma_beta_points(
    p: &ComplexMatrix,
    q: Option<&ComplexMatrix>,
    cfg: &SuiteConfig,
    tag: Complex64,
) -> Result<(Vec<(Complex64, f64)>, Vec<(String, bool)>)> {
    let qp = cfg.qp;
    let gcfg = GammaEvalConfig::default();
    let mut points = Vec::new();
    let mut checks = Vec::new();

    // Gamma functional equation.
    let gamma_p = q_gamma_matrix(p, &qp, &gcfg)?.value;
    let shifted = p + &ComplexMatrix::identity(p.dim());
    let lhs = q_gamma_matrix(&shifted, &qp, &gcfg)?.value;
    let rhs = &crate::qmatrix::q_bracket_matrix(p, &qp) * &gamma_p;
    points.push((tag, (&lhs - &rhs).fro_norm()));

    if let Some(q) = q {
        // Beta symmetry (gamma route) and route agreement.
        let bpq = q_beta_matrix(p, q, &qp, &gcfg)?;
        let bqp = q_beta_matrix(q, p, &qp, &gcfg)?;
        points.push((tag, (&bpq.value - &bqp.value).fro_norm()));
        let route_gap = (&bpq.value - &bpq.integral.value).fro_norm();
        checks.push((
            format!("beta integral route agrees with gamma route (tag {})", tag.re),
            route_gap <= 1e-6,
        ));
    }

    // Shifted-factorial identity for n = 1..4.
    for n in 1..=4 {
        let report = verify_eq15(p, &qp, n, &gcfg)?;
        checks.push((
            format!("shifted-factorial identity n = {n} (tag {})", tag.re),
            report.max_residual <= 1e-7,
        ));
    }
    Ok((points, checks))
}

/// q-Gamma functional equation, q-Beta symmetry, the agreement of the two
/// q-Beta routes, and the shifted-factorial identity for `n ≤ 4`.
pub fn gamma_beta_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(4));
    let mut points = Vec::new();
    let mut checks = Vec::new();
    for i in 0..cfg.samples {
        let dim = cfg.dims[i % cfg.dims.len()];
        let (p, q) = random_commuting_positive_stable_pair(&mut rng, dim)?;
        let (pts, chks) = gamma_beta_points(&p, Some(&q), cfg, c(i as f64, 0.0))?;
        points.extend(pts);
        checks.extend(chks);
    }
    Ok(SuiteOutcome {
        name: "gamma-beta",
        report: ResidualReport::from_points(points, gate(cfg, 1e-8)),
        checks,
    })
}

/// Both integrand recurrences for a specific commuting pair: residuals at
/// sampled ray points (must vanish) plus sensitivity checks with a perturbed
/// profile (must not vanish).
pub fn recurrences_points(
    s: &ComplexMatrix,
    t: &ComplexMatrix,
    cfg: &SuiteConfig,
    ray_points: &[f64],
) -> Result<(Vec<(Complex64, f64)>, Vec<(String, bool)>)> {
    let qp = cfg.qp;
    let dim = s.dim();
    let z = c(0.4, 0.0);
    let mut points = Vec::new();
    let mut checks = Vec::new();

    for &u in ray_points {
        let r = recurrence_check_2_28(s, t, &qp, z, c(u, 0.0))?;
        points.push((c(u, 0.0), r.fro_norm()));
    }
    for &u in &[0.125, 0.25, 0.5, 1.0] {
        let r = recurrence_check_2_38(s, t, &qp, c(u, 0.0))?;
        points.push((c(u, 0.0), r.fro_norm()));
    }

    // Sensitivity: a perturbed integrand must fail both recurrences.
    let u = c(0.6, 0.0);
    let perturbed = |uu: Complex64| -> Result<ComplexMatrix> {
        let identity = ComplexMatrix::identity(dim);
        let base = z_power_matrix(uu, &(s - &identity))?;
        Ok(base.scale(c(1.0, 0.0) + uu))
    };
    let perturbed_28 = recurrence_residual_2_28(s, t, &qp, z, u, &perturbed)?;
    checks.push((
        "perturbed profile rejected by first recurrence".to_string(),
        perturbed_28.fro_norm() > 1e-3,
    ));
    let perturbed_38 = recurrence_residual_2_38(s, t, &qp, u, &perturbed)?;
    checks.push((
        "perturbed profile rejected by second recurrence".to_string(),
        perturbed_38.fro_norm() > 1e-3,
    ));
    Ok((points, checks))
}

/// The two integrand recurrences at the claimed profiles (must vanish) and
/// at perturbed profiles (must not).
pub fn recurrences_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(5));
    let mut points = Vec::new();
    let mut checks = Vec::new();
    let samples = cfg.samples.max(1).min(10);
    for i in 0..samples {
        let dim = cfg.dims[i % cfg.dims.len()];
        let s = random_offgrid_diagonal(&mut rng, dim, 0.4, 1.0);
        let gap = random_offgrid_diagonal(&mut rng, dim, 0.5, 1.1);
        let t = &s + &gap;
        let ray: Vec<f64> = (0..5).map(|_| uniform(&mut rng, 0.05, 0.95)).collect();
        let (pts, chks) = recurrences_points(&s, &t, cfg, &ray)?;
        points.extend(pts);
        checks.extend(
            chks.into_iter()
                .map(|(name, ok)| (format!("{name} (sample {i})"), ok)),
        );
    }
    Ok(SuiteOutcome {
        name: "recurrences",
        report: ResidualReport::from_points(points, gate(cfg, 1e-10)),
        checks,
    })
}

/// q-derivative product/quotient rules, q-integration by parts and the
/// derivative-of-a-q-integral identity on randomized polynomial/rational
/// test functions.
pub fn rules_suite(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(6));
    let qp = cfg.qp;
    let policy = TruncationPolicy::default();
    let one = c(1.0, 0.0);
    let mut points = Vec::new();

    for i in 0..cfg.samples {
        let draw_poly = |rng: &mut ChaCha8Rng, scale: f64| -> Vec<Complex64> {
            (0..4)
                .map(|_| c(uniform(rng, -scale, scale), uniform(rng, -scale, scale)))
                .collect()
        };
        let eval = |coeffs: &[Complex64], z: Complex64| -> Complex64 {
            let mut acc = c(0.0, 0.0);
            let mut pw = one;
            for &a in coeffs {
                acc += a * pw;
                pw *= z;
            }
            acc
        };
        let f_coeffs = draw_poly(&mut rng, 1.0);
        // Denominator bounded away from zero on |z| <= 1.2.
        let mut g_coeffs = draw_poly(&mut rng, 0.1);
        g_coeffs[0] = c(1.5, 0.0);
        let z = c(uniform(&mut rng, 0.2, 1.1), 0.0);
        let tag = c(i as f64, 0.0);

        let f = |w: Complex64| eval(&f_coeffs, w);
        let g = |w: Complex64| eval(&g_coeffs, w);
        let dqf = q_derivative(f, z, &qp)?;
        let dqg = q_derivative(g, z, &qp)?;

        // Product rule, both forms.
        let lhs = q_derivative(|w| f(w) * g(w), z, &qp)?;
        points.push((tag, (lhs - (f(qp.q() * z) * dqg + g(z) * dqf)).norm()));
        points.push((tag, (lhs - (f(z) * dqg + g(qp.q() * z) * dqf)).norm()));

        // Quotient rule, both forms, against the direct q-derivative.
        let direct = q_derivative(|w| f(w) / g(w), z, &qp)?;
        let denom = g(z) * g(qp.q() * z);
        points.push((tag, (direct - (g(z) * dqf - f(z) * dqg) / denom).norm()));
        points.push((
            tag,
            (direct - (g(qp.q() * z) * dqf - f(qp.q() * z) * dqg) / denom).norm(),
        ));

        // Integration by parts on [0, z].
        let by_parts_lhs = jackson_integral_finite(
            |u| Ok(g(qp.q() * u) * q_derivative(f, u, &qp)?),
            z,
            &qp,
            &policy,
        )?
        .value;
        let by_parts_rhs = g(z) * f(z)
            - g(c(0.0, 0.0)) * f(c(0.0, 0.0))
            - jackson_integral_finite(
                |u| Ok(f(u) * q_derivative(g, u, &qp)?),
                z,
                &qp,
                &policy,
            )?
            .value;
        points.push((tag, (by_parts_lhs - by_parts_rhs).norm()));

        // Derivative of a q-integral with a moving upper limit.
        let c00 = c(uniform(&mut rng, -1.0, 1.0), 0.0);
        let c10 = c(uniform(&mut rng, -1.0, 1.0), 0.0);
        let c01 = c(uniform(&mut rng, -1.0, 1.0), 0.0);
        let c11 = c(uniform(&mut rng, -1.0, 1.0), 0.0);
        let g2 = move |zz: Complex64, uu: Complex64| c00 + c10 * zz + c01 * uu + c11 * zz * uu;
        let a = c(if i % 2 == 0 { 1.0 } else { 2.0 }, 0.0);
        let k = 1 + (i % 2) as u32;
        let (lhs, rhs) = q_deriv_of_integral_check(g2, a, k, z, &qp, &policy)?;
        points.push((tag, (lhs - rhs).norm()));
    }
    Ok(SuiteOutcome {
        name: "rules",
        report: ResidualReport::from_points(points, gate(cfg, 1e-10)),
        checks: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SuiteConfig {
        SuiteConfig {
            samples: 4,
            seed: 7,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn all_suites_pass_with_small_samples() {
        for name in SUITE_NAMES {
            let outcome = run_suite(name, &small_cfg()).unwrap();
            assert!(
                outcome.passed(),
                "suite {name} failed: max residual {} vs gate {}; failing checks: {:?}",
                outcome.report.max_residual,
                outcome.report.tolerance_used,
                outcome
                    .checks
                    .iter()
                    .filter(|(_, ok)| !ok)
                    .collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("nope", &small_cfg()).is_err());
    }

    #[test]
    fn suites_are_deterministic_for_a_seed() {
        let a = kummer_series_suite(&small_cfg()).unwrap();
        let b = kummer_series_suite(&small_cfg()).unwrap();
        assert_eq!(a.report.points, b.report.points);
    }
}
