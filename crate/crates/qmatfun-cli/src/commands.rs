//! Implementations of the four subcommands: `eval`, `verify`, `classify`,
//! `scan`. Each builds a deterministic JSON (or, for scans, CSV) report.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use qmatfun::qdiffeq::{
    classify_singular_point_traced, gauss_coeffs_bilateral, infinity_transform,
    integral_solution_u1, integral_solution_u2, kummer_coeffs_bilateral, bilateral_residual,
    BilateralCoefficients, ResidualReport,
};
use qmatfun::qmatrix::ComplexMatrix;
use qmatfun::qseries::{
    convergence_probe, gauss_2phi1, gauss_fundamental_pair, kummer_1phi1, kummer_coefficients,
    kummer_fundamental_pair, rphis_matrix, HypergeometricSpec,
};
use qmatfun::qspecial::{q_beta_matrix, q_gamma_matrix, GammaEvalConfig};
use qmatfun::suites::{self, SuiteConfig, SuiteOutcome};
use qmatfun::{QParameter, SeriesResult, TruncationPolicy};

use crate::matdoc::{self, MatrixDocument};
use crate::report::{fmt_f64, to_json_bytes, write_output};
use crate::Opts;

/// A command failure carrying its exit code; a structured report is written
/// when one exists (domain errors), otherwise only the message is printed.
pub struct Failure {
    pub exit_code: u8,
    pub message: String,
    pub report: Option<Value>,
    pub out: Option<PathBuf>,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Failure {
            exit_code: 1,
            message: message.into(),
            report: None,
            out: None,
        }
    }
}

fn domain_failure(meta: &Value, err: &qmatfun::Error, out: Option<PathBuf>) -> Failure {
    Failure {
        exit_code: 2,
        message: err.to_string(),
        report: Some(json!({
            "meta": meta,
            "error": { "kind": err.kind(), "message": err.to_string() },
        })),
        out,
    }
}

pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = |what: &str| format!("cannot parse '{s}' as {what}");
    match parts.len() {
        1 => {
            let re: f64 = parts[0].trim().parse().map_err(|_| bad("a number"))?;
            Ok(Complex64::new(re, 0.0))
        }
        2 => {
            let re: f64 = parts[0].trim().parse().map_err(|_| bad("a complex 're,im'"))?;
            let im: f64 = parts[1].trim().parse().map_err(|_| bad("a complex 're,im'"))?;
            Ok(Complex64::new(re, im))
        }
        _ => Err(bad("a number or 're,im' pair")),
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Parses a point-or-grid spec: `v` or `re,im` (single point),
/// `start:stop:count` (real line), `re0:re1:n:im0:im1:m` (rectangle,
/// real part varying fastest).
pub fn parse_z_spec(s: &str) -> Result<Vec<Complex64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| -> Result<f64, String> {
        x.trim().parse().map_err(|_| format!("bad number '{x}' in grid '{s}'"))
    };
    let count = |x: &str| -> Result<usize, String> {
        let n: usize = x
            .trim()
            .parse()
            .map_err(|_| format!("bad count '{x}' in grid '{s}'"))?;
        if n == 0 {
            return Err(format!("grid count must be >= 1 in '{s}'"));
        }
        Ok(n)
    };
    match parts.len() {
        1 => Ok(vec![parse_complex(parts[0])?]),
        3 => {
            let (a, b, n) = (num(parts[0])?, num(parts[1])?, count(parts[2])?);
            Ok(linspace(a, b, n)
                .into_iter()
                .map(|re| Complex64::new(re, 0.0))
                .collect())
        }
        6 => {
            let (a, b, n) = (num(parts[0])?, num(parts[1])?, count(parts[2])?);
            let (c, d, m) = (num(parts[3])?, num(parts[4])?, count(parts[5])?);
            let mut grid = Vec::with_capacity(n * m);
            for im in linspace(c, d, m) {
                for re in linspace(a, b, n) {
                    grid.push(Complex64::new(re, im));
                }
            }
            Ok(grid)
        }
        _ => Err(format!(
            "grid '{s}' must be 'v', 're,im', 'start:stop:count' or 're0:re1:n:im0:im1:m'"
        )),
    }
}

const DEFAULT_Z_SPEC: &str = "0.1:0.8:8";

/// Everything parsed once from the common options.
pub struct Context {
    pub qp: QParameter,
    pub policy: TruncationPolicy,
    pub grid: Vec<Complex64>,
    pub out: Option<PathBuf>,
    pub format: String,
    pub seed: u64,
    pub window: (usize, usize),
    pub series_terms: usize,
    pub meta: Value,
}

pub fn build_context(command: &str, opts: &Opts) -> Result<Context, Failure> {
    let q = parse_complex(&opts.q).map_err(Failure::parse)?;
    let z_spec = opts.z.clone().unwrap_or_else(|| DEFAULT_Z_SPEC.to_string());
    let grid = parse_z_spec(&z_spec).map_err(Failure::parse)?;

    let max_terms = match opts.max_terms {
        Some(n) => n,
        None => match std::env::var("QMATFUN_MAX_TERMS") {
            Ok(v) => v.trim().parse().map_err(|_| {
                Failure::parse(format!("QMATFUN_MAX_TERMS='{v}' is not an integer"))
            })?,
            Err(_) => 10_000,
        },
    };
    let rel_tol = opts.rel_tol.unwrap_or(1e-14);
    let abs_tol = opts.abs_tol.unwrap_or(1e-300);
    let window = (opts.j_neg.unwrap_or(30), opts.j_pos.unwrap_or(60));
    let series_terms = opts.series_terms.unwrap_or(40);

    let mut files = BTreeMap::new();
    for (role, path) in [
        ("S", &opts.s_file),
        ("T", &opts.t_file),
        ("P", &opts.p_file),
        ("Q", &opts.q_file),
        ("R", &opts.r_file),
    ] {
        if let Some(p) = path {
            files.insert(role.to_string(), p.display().to_string());
        }
    }
    for (i, p) in opts.num_files.iter().enumerate() {
        files.insert(format!("num{i}"), p.display().to_string());
    }
    for (i, p) in opts.den_files.iter().enumerate() {
        files.insert(format!("den{i}"), p.display().to_string());
    }

    let meta = json!({
        "command": command,
        "config": {
            "q": [q.re, q.im],
            "z": z_spec,
            "rel_tol": rel_tol,
            "abs_tol": abs_tol,
            "max_terms": max_terms,
            "series_terms": series_terms,
            "j_neg": window.0,
            "j_pos": window.1,
            "samples": opts.samples,
            "dims": opts.dims,
            "tolerance": opts.tolerance,
            "files": files,
            "format": opts.format,
        },
        "seed": opts.seed,
        "version": env!("CARGO_PKG_VERSION"),
    });

    // Domain-level validation happens after meta exists so failures can be
    // reported structurally.
    let qp = QParameter::new(q)
        .map_err(|e| domain_failure(&meta, &e, opts.out.clone()))?;
    let policy = TruncationPolicy::new(rel_tol, abs_tol, max_terms)
        .map_err(|e| domain_failure(&meta, &e, opts.out.clone()))?;

    Ok(Context {
        qp,
        policy,
        grid,
        out: opts.out.clone(),
        format: opts.format.clone(),
        seed: opts.seed,
        window,
        series_terms,
        meta,
    })
}

fn require_matrix(path: &Option<PathBuf>, role: &str) -> Result<ComplexMatrix, Failure> {
    let path = path
        .as_ref()
        .ok_or_else(|| Failure::parse(format!("missing required --{role} <matrix.json>")))?;
    matdoc::read_matrix(path).map_err(Failure::parse)
}

fn value_entry(z: Option<Complex64>, r: &SeriesResult<ComplexMatrix>) -> Value {
    let mut obj = json!({
        "value": serde_json::to_value(MatrixDocument::from_matrix(&r.value)).unwrap(),
        "terms_used": r.terms_used,
        "tail_estimate": r.tail_estimate,
        "status": "ok",
    });
    if let Some(z) = z {
        obj["z"] = json!([z.re, z.im]);
    }
    obj
}

fn emit(ctx: &Context, report: Value) -> Result<(), Failure> {
    write_output(ctx.out.as_ref(), &to_json_bytes(&report)).map_err(Failure::parse)
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

pub const EVAL_KINDS: [&str; 9] = [
    "kummer",
    "kummer2",
    "gauss",
    "gauss2",
    "rphis",
    "qgamma",
    "qbeta",
    "integralU1",
    "integralU2",
];

pub fn cmd_eval(kind: &str, opts: &Opts) -> Result<u8, Failure> {
    let ctx = build_context(&format!("eval {kind}"), opts)?;
    if ctx.format != "json" {
        return Err(Failure::parse(
            "eval reports are JSON only (CSV is available for scan)",
        ));
    }
    let fail = |e: &qmatfun::Error| domain_failure(&ctx.meta, e, ctx.out.clone());
    let mut results = Vec::new();

    match kind {
        "kummer" | "kummer2" | "integralU1" | "integralU2" => {
            let s = require_matrix(&opts.s_file, "S")?;
            let t = require_matrix(&opts.t_file, "T")?;
            for &z in &ctx.grid {
                let entry = match kind {
                    "kummer" => {
                        let r = kummer_1phi1(&s, &t, &ctx.qp, z, &ctx.policy)
                            .map_err(|e| fail(&e))?;
                        value_entry(Some(z), &r)
                    }
                    "kummer2" => {
                        let pair = kummer_fundamental_pair(&s, &t, &ctx.qp, z, &ctx.policy);
                        let sol = pair.second.map_err(|e| fail(&e))?;
                        let mut entry = value_entry(Some(z), &sol.result);
                        entry["degenerate"] = json!(sol.degenerate);
                        entry
                    }
                    "integralU1" => {
                        let r = integral_solution_u1(&s, &t, &ctx.qp, z, &ctx.policy)
                            .map_err(|e| fail(&e))?;
                        value_entry(Some(z), &r)
                    }
                    _ => {
                        let r = integral_solution_u2(
                            &s,
                            &t,
                            &ctx.qp,
                            z,
                            ctx.window.0,
                            ctx.window.1,
                            &ctx.policy,
                        )
                        .map_err(|e| fail(&e))?;
                        value_entry(Some(z), &r)
                    }
                };
                results.push(entry);
            }
        }
        "gauss" | "gauss2" => {
            let pm = require_matrix(&opts.p_file, "P")?;
            let qm = require_matrix(&opts.q_file, "Q")?;
            let rm = require_matrix(&opts.r_file, "R")?;
            for &z in &ctx.grid {
                let entry = if kind == "gauss" {
                    let r = gauss_2phi1(&pm, &qm, &rm, &ctx.qp, z, &ctx.policy)
                        .map_err(|e| fail(&e))?;
                    value_entry(Some(z), &r)
                } else {
                    let pair = gauss_fundamental_pair(&pm, &qm, &rm, &ctx.qp, z, &ctx.policy);
                    let sol = pair.second.map_err(|e| fail(&e))?;
                    let mut entry = value_entry(Some(z), &sol.result);
                    entry["degenerate"] = json!(sol.degenerate);
                    entry
                };
                results.push(entry);
            }
        }
        "rphis" => {
            let numerators: Vec<ComplexMatrix> = opts
                .num_files
                .iter()
                .map(|p| matdoc::read_matrix(p).map_err(Failure::parse))
                .collect::<Result<_, _>>()?;
            let denominators: Vec<ComplexMatrix> = opts
                .den_files
                .iter()
                .map(|p| matdoc::read_matrix(p).map_err(Failure::parse))
                .collect::<Result<_, _>>()?;
            let dim = numerators
                .first()
                .or_else(|| denominators.first())
                .map(|m| m.dim())
                .or(opts.dim)
                .unwrap_or(1);
            let spec = HypergeometricSpec::new(dim, numerators, denominators, ctx.qp)
                .map_err(|e| fail(&e))?;
            for &z in &ctx.grid {
                let r = rphis_matrix(&spec, z, &ctx.policy).map_err(|e| fail(&e))?;
                results.push(value_entry(Some(z), &r));
            }
        }
        "qgamma" => {
            let p = require_matrix(&opts.p_file, "P")?;
            let cfg = GammaEvalConfig {
                policy: ctx.policy,
                ..GammaEvalConfig::default()
            };
            let r = q_gamma_matrix(&p, &ctx.qp, &cfg).map_err(|e| fail(&e))?;
            results.push(value_entry(None, &r));
        }
        "qbeta" => {
            let p = require_matrix(&opts.p_file, "P")?;
            let q = require_matrix(&opts.q_file, "Q")?;
            let cfg = GammaEvalConfig {
                policy: ctx.policy,
                ..GammaEvalConfig::default()
            };
            let r = q_beta_matrix(&p, &q, &ctx.qp, &cfg).map_err(|e| fail(&e))?;
            let route_gap = (&r.value - &r.integral.value).fro_norm();
            results.push(json!({
                "value": serde_json::to_value(MatrixDocument::from_matrix(&r.value)).unwrap(),
                "integral_route": serde_json::to_value(MatrixDocument::from_matrix(&r.integral.value)).unwrap(),
                "route_gap": route_gap,
                "terms_used": r.integral.terms_used,
                "tail_estimate": r.integral.tail_estimate,
                "status": "ok",
            }));
        }
        other => {
            return Err(Failure::parse(format!(
                "unknown eval kind '{other}'; expected one of {EVAL_KINDS:?}"
            )))
        }
    }

    emit(&ctx, json!({ "meta": ctx.meta, "results": results }))?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn suite_config(ctx: &Context, opts: &Opts) -> Result<SuiteConfig, Failure> {
    let dims = match &opts.dims {
        None => vec![2, 3],
        Some(s) => s
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<usize>()
                    .map_err(|_| Failure::parse(format!("bad dimension list '{s}'")))
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    Ok(SuiteConfig {
        qp: ctx.qp,
        seed: ctx.seed,
        samples: opts.samples.unwrap_or(20),
        dims,
        grid: ctx.grid.clone(),
        series_terms: ctx.series_terms,
        integral_max_terms: opts.max_terms.unwrap_or(300),
        window: ctx.window,
        tolerance: opts.tolerance,
    })
}

/// Runs a suite on explicitly supplied matrices when the relevant files are
/// present, otherwise on the suite's own seeded random draws.
fn run_verify(suite: &str, opts: &Opts, cfg: &SuiteConfig) -> qmatfun::Result<SuiteOutcome> {
    let gate = cfg
        .tolerance
        .or_else(|| suites::default_tolerance(suite))
        .unwrap_or(1e-9);
    let explicit_pair = || -> qmatfun::Result<Option<(ComplexMatrix, ComplexMatrix)>> {
        match (&opts.s_file, &opts.t_file) {
            (Some(sp), Some(tp)) => {
                let s = matdoc::read_matrix(sp)
                    .map_err(qmatfun::Error::InvalidParameter)?;
                let t = matdoc::read_matrix(tp)
                    .map_err(qmatfun::Error::InvalidParameter)?;
                Ok(Some((s, t)))
            }
            _ => Ok(None),
        }
    };
    match suite {
        "kummer-series" => {
            if let Some((s, t)) = explicit_pair()? {
                let points = suites::kummer_series_points(&s, &t, cfg)?;
                return Ok(SuiteOutcome {
                    name: "kummer-series",
                    report: ResidualReport::from_points(points, gate),
                    checks: vec![],
                });
            }
            suites::run_suite(suite, cfg)
        }
        "kummer-second" => {
            if let Some((s, t)) = explicit_pair()? {
                let points = suites::kummer_second_points(&s, &t, cfg)?;
                return Ok(SuiteOutcome {
                    name: "kummer-second",
                    report: ResidualReport::from_points(points, gate),
                    checks: vec![],
                });
            }
            suites::run_suite(suite, cfg)
        }
        "kummer-integrals" => {
            if let Some((s, t)) = explicit_pair()? {
                let points = suites::kummer_integral_points(&s, &t, cfg)?;
                return Ok(SuiteOutcome {
                    name: "kummer-integrals",
                    report: ResidualReport::from_points(points, gate),
                    checks: vec![],
                });
            }
            suites::run_suite(suite, cfg)
        }
        "recurrences" => {
            if let Some((s, t)) = explicit_pair()? {
                let (points, checks) =
                    suites::recurrences_points(&s, &t, cfg, &[0.1, 0.3, 0.5, 0.7, 0.9])?;
                return Ok(SuiteOutcome {
                    name: "recurrences",
                    report: ResidualReport::from_points(points, gate),
                    checks,
                });
            }
            suites::run_suite(suite, cfg)
        }
        "gauss-series" => {
            if let (Some(pp), Some(qq), Some(rr)) = (&opts.p_file, &opts.q_file, &opts.r_file) {
                let pm = matdoc::read_matrix(pp).map_err(qmatfun::Error::InvalidParameter)?;
                let qm = matdoc::read_matrix(qq).map_err(qmatfun::Error::InvalidParameter)?;
                let rm = matdoc::read_matrix(rr).map_err(qmatfun::Error::InvalidParameter)?;
                let points = suites::gauss_series_points(&pm, &qm, &rm, cfg)?;
                return Ok(SuiteOutcome {
                    name: "gauss-series",
                    report: ResidualReport::from_points(points, gate),
                    checks: vec![],
                });
            }
            suites::run_suite(suite, cfg)
        }
        "gamma-beta" => {
            if let Some(pp) = &opts.p_file {
                let p = matdoc::read_matrix(pp).map_err(qmatfun::Error::InvalidParameter)?;
                let q = match &opts.q_file {
                    Some(qq) => {
                        Some(matdoc::read_matrix(qq).map_err(qmatfun::Error::InvalidParameter)?)
                    }
                    None => None,
                };
                let (points, checks) =
                    suites::gamma_beta_points(&p, q.as_ref(), cfg, Complex64::new(0.0, 0.0))?;
                return Ok(SuiteOutcome {
                    name: "gamma-beta",
                    report: ResidualReport::from_points(points, gate),
                    checks,
                });
            }
            suites::run_suite(suite, cfg)
        }
        _ => suites::run_suite(suite, cfg),
    }
    .map(|mut outcome| {
        // A caller-supplied gate overrides the suite default uniformly.
        if let Some(tol) = cfg.tolerance {
            outcome.report.tolerance_used = tol;
            outcome
        } else {
            outcome
        }
    })
}

pub fn cmd_verify(suite: &str, opts: &Opts) -> Result<u8, Failure> {
    let ctx = build_context(&format!("verify {suite}"), opts)?;
    if ctx.format != "json" {
        return Err(Failure::parse(
            "verify reports are JSON only (CSV is available for scan)",
        ));
    }
    let cfg = suite_config(&ctx, opts)?;
    let outcome =
        run_verify(suite, opts, &cfg).map_err(|e| domain_failure(&ctx.meta, &e, ctx.out.clone()))?;

    let results: Vec<Value> = outcome
        .report
        .points
        .iter()
        .map(|&(z, r)| json!({ "z": [z.re, z.im], "residual": r }))
        .collect();
    let checks: Vec<Value> = outcome
        .checks
        .iter()
        .map(|(name, ok)| json!({ "name": name, "ok": ok }))
        .collect();
    let passed = outcome.passed();
    emit(
        &ctx,
        json!({
            "meta": ctx.meta,
            "results": results,
            "checks": checks,
            "max_residual": outcome.report.max_residual,
            "tolerance": outcome.report.tolerance_used,
            "passed": passed,
        }),
    )?;
    Ok(if passed { 0 } else { 3 })
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

pub fn cmd_classify(equation: &str, opts: &Opts) -> Result<u8, Failure> {
    let ctx = build_context(&format!("classify {equation}"), opts)?;
    if ctx.format != "json" {
        return Err(Failure::parse(
            "classify reports are JSON only (CSV is available for scan)",
        ));
    }
    let fail = |e: &qmatfun::Error| domain_failure(&ctx.meta, e, ctx.out.clone());

    let (coeffs, point_label): (BilateralCoefficients, &str) = match equation {
        "kummer" => {
            let s = require_matrix(&opts.s_file, "S")?;
            let t = require_matrix(&opts.t_file, "T")?;
            (kummer_coeffs_bilateral(&s, &t, &ctx.qp), "z = 0")
        }
        "kummer-infinity" => {
            let s = require_matrix(&opts.s_file, "S")?;
            let t = require_matrix(&opts.t_file, "T")?;
            let (coeffs, _) = infinity_transform(&s, &t, &ctx.qp).map_err(|e| fail(&e))?;
            (coeffs, "u = 0 (z = infinity)")
        }
        "gauss" => {
            let pm = require_matrix(&opts.p_file, "P")?;
            let qm = require_matrix(&opts.q_file, "Q")?;
            let rm = require_matrix(&opts.r_file, "R")?;
            (gauss_coeffs_bilateral(&pm, &qm, &rm, &ctx.qp), "z = 0")
        }
        "constant" => {
            // Constant invertible leading coefficients: ordinary everywhere.
            let dim = opts.dim.unwrap_or(2);
            let mut coeffs = BilateralCoefficients::new(dim);
            coeffs
                .set_phi(1, Box::new(move |_| ComplexMatrix::identity(dim)))
                .set_phi(2, Box::new(move |_| ComplexMatrix::identity(dim)));
            (coeffs, "z = 0")
        }
        other => {
            return Err(Failure::parse(format!(
                "unknown equation '{other}'; expected kummer | kummer-infinity | gauss | constant"
            )))
        }
    };

    let (classification, traces) =
        classify_singular_point_traced(&coeffs, Complex64::new(0.0, 0.0))
            .map_err(|e| fail(&e))?;
    let probe_values: Vec<Value> = traces
        .iter()
        .map(|t| {
            json!({
                "pair": t.pair,
                "verdict": t.verdict,
                "norms": t.norms,
            })
        })
        .collect();
    emit(
        &ctx,
        json!({
            "meta": ctx.meta,
            "results": [{
                "point": point_label,
                "kind": classification.kind.as_str(),
                "witness": classification.witness,
                "probes": probe_values,
            }],
        }),
    )?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

pub const SCAN_KINDS: [&str; 6] = [
    "kummer",
    "kummer2",
    "gauss",
    "gauss2",
    "integralU1",
    "integralU2",
];

struct ScanRow {
    index: usize,
    z: Complex64,
    status: String,
    value_norm: Option<f64>,
    terms_used: Option<usize>,
    tail: Option<f64>,
    residual: Option<f64>,
    ratio: Option<f64>,
}

fn scan_row(
    index: usize,
    z: Complex64,
    value: qmatfun::Result<SeriesResult<ComplexMatrix>>,
    residual: Option<qmatfun::Result<f64>>,
    ratio: Option<qmatfun::Result<f64>>,
) -> ScanRow {
    match value {
        Ok(v) => ScanRow {
            index,
            z,
            status: "ok".into(),
            value_norm: Some(v.value.fro_norm()),
            terms_used: Some(v.terms_used),
            tail: Some(v.tail_estimate),
            residual: residual.and_then(|r| r.ok()),
            ratio: ratio.and_then(|r| r.ok()),
        },
        Err(e) => ScanRow {
            index,
            z,
            status: e.kind().to_string(),
            value_norm: None,
            terms_used: None,
            tail: None,
            residual: None,
            ratio: None,
        },
    }
}

pub fn cmd_scan(kind: &str, opts: &Opts) -> Result<u8, Failure> {
    let ctx = build_context(&format!("scan {kind}"), opts)?;
    if !SCAN_KINDS.contains(&kind) {
        return Err(Failure::parse(format!(
            "unknown scan kind '{kind}'; expected one of {SCAN_KINDS:?}"
        )));
    }
    let fail = |e: &qmatfun::Error| domain_failure(&ctx.meta, e, ctx.out.clone());

    enum Inputs {
        Kummer(ComplexMatrix, ComplexMatrix),
        Gauss(ComplexMatrix, ComplexMatrix, ComplexMatrix),
    }
    let inputs = match kind {
        "gauss" | "gauss2" => Inputs::Gauss(
            require_matrix(&opts.p_file, "P")?,
            require_matrix(&opts.q_file, "Q")?,
            require_matrix(&opts.r_file, "R")?,
        ),
        _ => Inputs::Kummer(
            require_matrix(&opts.s_file, "S")?,
            require_matrix(&opts.t_file, "T")?,
        ),
    };

    // The residual column substitutes the truncated series solution into the
    // corresponding bilateral bundle (for the series kinds) or the integral
    // solution itself (for the integral kinds).
    let series_poly = match (&inputs, kind) {
        (Inputs::Kummer(s, t), "kummer") => {
            Some(kummer_coefficients(s, t, &ctx.qp, ctx.series_terms).map_err(|e| fail(&e))?)
        }
        _ => None,
    };

    let qp = ctx.qp;
    let policy = ctx.policy;
    let window = ctx.window;
    let rows: Vec<ScanRow> = ctx
        .grid
        .par_iter()
        .enumerate()
        .map(|(index, &z)| match &inputs {
            Inputs::Kummer(s, t) => match kind {
                "kummer" => {
                    let value = kummer_1phi1(s, t, &qp, z, &policy);
                    let coeffs = kummer_coeffs_bilateral(s, t, &qp);
                    let residual = series_poly.as_ref().map(|poly| {
                        bilateral_residual(&coeffs, &|zz| Ok(poly.eval(zz)), z, qp.q())
                            .map(|m| m.fro_norm())
                    });
                    let ratio = Some(convergence_probe(s, t, &qp, z));
                    scan_row(index, z, value, residual, ratio)
                }
                "kummer2" => {
                    let value = kummer_fundamental_pair(s, t, &qp, z, &policy)
                        .second
                        .map(|sol| sol.result);
                    let coeffs = kummer_coeffs_bilateral(s, t, &qp);
                    let handle = |zz: Complex64| {
                        kummer_fundamental_pair(s, t, &qp, zz, &policy)
                            .second
                            .map(|sol| sol.result.value)
                    };
                    let residual =
                        Some(bilateral_residual(&coeffs, &handle, z, qp.q()).map(|m| m.fro_norm()));
                    scan_row(index, z, value, residual, None)
                }
                "integralU1" => {
                    let value = integral_solution_u1(s, t, &qp, z, &policy);
                    let coeffs = kummer_coeffs_bilateral(s, t, &qp);
                    let handle =
                        |zz: Complex64| integral_solution_u1(s, t, &qp, zz, &policy).map(|r| r.value);
                    let residual =
                        Some(bilateral_residual(&coeffs, &handle, z, qp.q()).map(|m| m.fro_norm()));
                    scan_row(index, z, value, residual, None)
                }
                _ => {
                    let value = integral_solution_u2(s, t, &qp, z, window.0, window.1, &policy);
                    let coeffs = kummer_coeffs_bilateral(s, t, &qp);
                    let handle = |zz: Complex64| {
                        integral_solution_u2(s, t, &qp, zz, window.0, window.1, &policy)
                            .map(|r| r.value)
                    };
                    let residual =
                        Some(bilateral_residual(&coeffs, &handle, z, qp.q()).map(|m| m.fro_norm()));
                    scan_row(index, z, value, residual, None)
                }
            },
            Inputs::Gauss(pm, qm, rm) => {
                let coeffs = gauss_coeffs_bilateral(pm, qm, rm, &qp);
                if kind == "gauss" {
                    let value = gauss_2phi1(pm, qm, rm, &qp, z, &policy);
                    let handle =
                        |zz: Complex64| gauss_2phi1(pm, qm, rm, &qp, zz, &policy).map(|r| r.value);
                    let residual =
                        Some(bilateral_residual(&coeffs, &handle, z, qp.q()).map(|m| m.fro_norm()));
                    scan_row(index, z, value, residual, None)
                } else {
                    let value = gauss_fundamental_pair(pm, qm, rm, &qp, z, &policy)
                        .second
                        .map(|sol| sol.result);
                    let handle = |zz: Complex64| {
                        gauss_fundamental_pair(pm, qm, rm, &qp, zz, &policy)
                            .second
                            .map(|sol| sol.result.value)
                    };
                    let residual =
                        Some(bilateral_residual(&coeffs, &handle, z, qp.q()).map(|m| m.fro_norm()));
                    scan_row(index, z, value, residual, None)
                }
            }
        })
        .collect();

    let any_ok = rows.iter().any(|r| r.status == "ok");
    if ctx.format == "csv" {
        let mut csv = String::from(
            "index,z_re,z_im,status,value_norm,terms_used,tail_estimate,residual,ratio\n",
        );
        let opt_f = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.index,
                fmt_f64(r.z.re),
                fmt_f64(r.z.im),
                r.status,
                opt_f(r.value_norm),
                r.terms_used.map(|n| n.to_string()).unwrap_or_default(),
                opt_f(r.tail),
                opt_f(r.residual),
                opt_f(r.ratio),
            ));
        }
        write_output(ctx.out.as_ref(), csv.as_bytes()).map_err(Failure::parse)?;
    } else {
        let results: Vec<Value> = rows
            .iter()
            .map(|r| {
                json!({
                    "index": r.index,
                    "z": [r.z.re, r.z.im],
                    "status": r.status,
                    "value_norm": r.value_norm,
                    "terms_used": r.terms_used,
                    "tail_estimate": r.tail,
                    "residual": r.residual,
                    "ratio": r.ratio,
                })
            })
            .collect();
        emit(&ctx, json!({ "meta": ctx.meta, "results": results }))?;
    }
    Ok(if any_ok { 0 } else { 1 })
}
