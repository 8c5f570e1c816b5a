//! Independent scalar oracles for the acceptance suite.
//!
//! Everything here is written in plain `f64`/`Complex64` arithmetic with its
//! own loops — fresh q-Pochhammer products per term, long fixed-length
//! Jackson sums — and never calls into the library paths it checks.

#![allow(dead_code)]

use num_complex::Complex64;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(a; q)_n` by direct multiplication.
pub fn poch(a: f64, q: f64, n: usize) -> f64 {
    let mut prod = 1.0;
    for k in 0..n {
        prod *= 1.0 - a * q.powi(k as i32);
    }
    prod
}

/// `(a; q)_∞` truncated at a fixed 400 factors.
pub fn poch_inf(a: f64, q: f64) -> f64 {
    let mut prod = 1.0;
    let mut aq = a;
    for _ in 0..400 {
        prod *= 1.0 - aq;
        aq *= q;
    }
    prod
}

/// `e_q^{-w} = 1/(-(1-q)w; q)_inf` by reciprocal factors.
pub fn e_small_neg(w: f64, q: f64) -> f64 {
    let mut prod = 1.0;
    let mut aq = -(1.0 - q) * w;
    for _ in 0..400 {
        prod /= 1.0 - aq;
        aq *= q;
    }
    prod
}

/// Scalar basic hypergeometric sum
/// `Σ_n Π_i (q^{num_i};q)_n / (Π_j (q^{den_j};q)_n · (q;q)_n) · w^n`,
/// summed to `terms` terms.
pub fn scalar_phi(nums: &[f64], dens: &[f64], q: f64, w: f64, terms: usize) -> f64 {
    let mut acc = 0.0;
    for n in 0..terms {
        let mut term = w.powi(n as i32) / poch(q, q, n);
        for &lam in nums {
            term *= poch(q.powf(lam), q, n);
        }
        for &mu in dens {
            term /= poch(q.powf(mu), q, n);
        }
        acc += term;
    }
    acc
}

/// Scalar q-gamma via a 500-term Jackson sum of the defining integral.
pub fn scalar_q_gamma(x: f64, q: f64) -> f64 {
    let e_q = |z: f64| poch_inf(-(1.0 - q) * z, q);
    let c0 = 1.0 / (1.0 - q);
    let mut acc = 0.0;
    for j in 0..500 {
        let u = c0 * q.powi(j);
        acc += (1.0 - q) * u * u.powf(x - 1.0) * e_q(-q * u);
    }
    acc
}

/// Scalar q-beta via a 500-term Jackson sum of the defining integral.
pub fn scalar_q_beta(x: f64, y: f64, q: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..500 {
        let u = q.powi(j);
        acc += (1.0 - q) * u * poch_inf(u * q, q) / poch_inf(u * q.powf(y), q)
            * u.powf(x - 1.0);
    }
    acc
}

/// Scalar first integral solution: 300-node Jackson sum of
/// `E_q^{-qzu} (qu)^{s-1} ([(1-q)qz-q]qu;q)_∞ / ([(1-q)qz-q^{t-s}]qu;q)_∞`.
pub fn scalar_integral_u1(sigma: f64, tau: f64, q: f64, z: f64) -> f64 {
    let upper = 1.0 / ((1.0 - q) * q * q * z);
    let a = (1.0 - q) * q * z - q;
    let b = (1.0 - q) * q * z - q.powf(tau - sigma);
    let mut acc = 0.0;
    for j in 0..300 {
        let u = upper * q.powi(j);
        let e_factor = poch_inf((1.0 - q) * q * z * u, q);
        acc += (1.0 - q)
            * u
            * e_factor
            * (q * u).powf(sigma - 1.0)
            * poch_inf(a * q * u, q)
            / poch_inf(b * q * u, q);
    }
    acc
}

/// Scalar second integral solution on the window `q^j`, `-j_neg <= j <= j_pos`.
pub fn scalar_integral_u2(
    sigma: f64,
    tau: f64,
    q: f64,
    z: f64,
    j_neg: i32,
    j_pos: i32,
) -> f64 {
    let mut acc = 0.0;
    for j in -j_neg..=j_pos {
        let u = q.powi(j);
        acc += (1.0 - q)
            * u
            * u.powf(sigma - 1.0)
            * e_small_neg(z * u, q)
            * poch_inf(-q * u, q)
            / poch_inf(-q.powf(tau - sigma) * u, q);
    }
    q.powf(sigma - 1.0) * acc
}
