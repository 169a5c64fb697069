//! Replica-symmetric performance prediction for l1 recovery on the sphere.
//!
//! Order parameters: overlap `m = N⁻¹x⁰·x̂`, susceptibility `χ`, and the
//! conjugates `q̂`, `m̂`, `Q̂`. The saddle-point system is solved by damped
//! fixed-point iteration; averages over the signal prior (Bernoulli-Gauss with
//! a standard Gaussian nonzero part) and the cavity field reduce to
//! Gaussian-tail and density terms, so no quadrature is needed.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::TheoryError;
use crate::special::{gauss_tail, overlap_angle, INV_SQRT_2PI};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

const INITIAL_DAMPING: f64 = 0.5;
const MIN_DAMPING: f64 = 0.01;
const M_CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RSParams {
    pub alpha: f64,
    pub rho: f64,
}

impl RSParams {
    pub fn new(alpha: f64, rho: f64) -> Result<Self, TheoryError> {
        let p = Self { alpha, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TheoryError> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(TheoryError::InvalidParams(format!("alpha = {}", self.alpha)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(TheoryError::InvalidParams(format!("rho = {} outside (0, 1)", self.rho)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RSFixedPoint {
    pub m: f64,
    pub chi: f64,
    pub q_hat: f64,
    pub m_hat: f64,
    pub q_big_hat: f64,
    /// Max absolute change of the undamped sweep over the five variables.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl RSFixedPoint {
    /// Unsolved starting point `(m, χ, q̂, m̂, Q̂) = (m, 1, 1, 1, 1)`.
    pub fn start(m: f64) -> Self {
        Self {
            m,
            chi: 1.0,
            q_hat: 1.0,
            m_hat: 1.0,
            q_big_hat: 1.0,
            residual: f64::INFINITY,
            iterations: 0,
            converged: false,
        }
    }

    fn as_array(&self) -> [f64; 5] {
        [self.m, self.chi, self.q_hat, self.m_hat, self.q_big_hat]
    }

    fn with_array(&self, v: [f64; 5]) -> Self {
        Self { m: v[0], chi: v[1], q_hat: v[2], m_hat: v[3], q_big_hat: v[4], ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RSPrediction {
    pub mse: f64,
    pub direction_cosine: f64,
    pub fp: f64,
    pub fn_: f64,
    pub stable_rs: bool,
    pub at_lhs: f64,
}

/// `E[g(w)]` for `w ~ N(0, v)`: `(v + 1) H(1/√v) - √(v/2π) e^{-1/(2v)}`.
fn gauss_g_mean(v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let s = v.sqrt();
    (v + 1.0) * gauss_tail(1.0 / s) - s * INV_SQRT_2PI * (-0.5 / v).exp()
}

/// `P(|w| > 1) = 2 H(1/√v)` for `w ~ N(0, v)`.
fn active_prob(v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        2.0 * gauss_tail(1.0 / v.sqrt())
    }
}

/// `arctan(√(ρ-m²)/m) - (m/ρ)√(ρ-m²)`
fn sign_term(m: f64, rho: f64) -> f64 {
    overlap_angle(m, rho) - m / rho * (rho - m * m).max(0.0).sqrt()
}

fn clamp_m(m: f64, rho: f64) -> f64 {
    m.clamp(M_CLAMP, rho.sqrt() - M_CLAMP)
}

/// One undamped sweep in order q̂, m̂, Q̂, χ, m, each using the freshest values.
fn sweep(v: [f64; 5], p: &RSParams) -> Result<[f64; 5], TheoryError> {
    let [m, chi, _, _, _] = v;
    let (alpha, rho) = (p.alpha, p.rho);
    let m = clamp_m(m, rho);
    let s = (rho - m * m).max(0.0).sqrt();
    let q_hat = alpha / (PI * chi * chi) * sign_term(m, rho);
    let m_hat = alpha / (PI * chi * rho) * s;
    let v0 = q_hat;
    let v1 = q_hat + m_hat * m_hat;
    let q_big_hat = (2.0 * ((1.0 - rho) * gauss_g_mean(v0) + rho * gauss_g_mean(v1))).sqrt();
    let chi = ((1.0 - rho) * active_prob(v0) + rho * active_prob(v1)) / q_big_hat;
    let m = rho * m_hat * active_prob(v1) / q_big_hat;
    let out = [m, chi, q_hat, m_hat, q_big_hat];
    if out.iter().any(|x| !x.is_finite()) {
        return Err(TheoryError::NonFinite("rs sweep"));
    }
    Ok(out)
}

/// One damped sweep: every variable becomes `θ·new + (1-θ)·old`.
/// `residual` on the result holds the undamped change.
pub fn rs_update(point: &RSFixedPoint, params: &RSParams, damping: f64) -> Result<RSFixedPoint, TheoryError> {
    params.validate()?;
    if !(point.chi > 0.0 && point.q_hat >= 0.0) {
        return Err(TheoryError::InvalidParams("chi must be positive and q_hat non-negative".into()));
    }
    let old = point.as_array();
    let new = sweep(old, params)?;
    let residual = old.iter().zip(&new).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut mixed = [0.0; 5];
    for i in 0..5 {
        mixed[i] = damping * new[i] + (1.0 - damping) * old[i];
    }
    mixed[0] = clamp_m(mixed[0], params.rho);
    Ok(RSFixedPoint { residual, iterations: point.iterations + 1, ..point.with_array(mixed) })
}

/// Iterate from `start` with adaptive damping until the undamped residual
/// drops below `tol`.
pub fn rs_solve_from(
    params: &RSParams,
    start: RSFixedPoint,
    tol: f64,
    max_iters: usize,
) -> Result<RSFixedPoint, TheoryError> {
    params.validate()?;
    let mut point = RSFixedPoint { iterations: 0, converged: false, ..start };
    let mut damping = INITIAL_DAMPING;
    let mut last_residual = f64::INFINITY;
    let mut best = point;
    for _ in 0..max_iters {
        let next = rs_update(&point, params, damping)?;
        if next.residual < tol {
            // the fixed point is the point the residual was measured at
            return Ok(RSFixedPoint { residual: next.residual, iterations: next.iterations, converged: true, ..point });
        }
        if next.residual > last_residual {
            damping = (damping * 0.5).max(MIN_DAMPING);
        }
        last_residual = next.residual;
        if next.residual < best.residual {
            best = RSFixedPoint { residual: next.residual, iterations: next.iterations, ..point };
        }
        point = next;
    }
    Ok(RSFixedPoint { converged: false, iterations: point.iterations, ..best })
}

/// Starting overlaps tried in order, as fractions of `√ρ`.
const START_FRACTIONS: [f64; 3] = [0.5, 0.9, 0.1];

/// Solve with the default start, falling back to alternates (and to
/// `continuation`, typically the solution at a neighbouring `α`).
pub fn rs_solve_with(
    params: &RSParams,
    continuation: Option<&RSFixedPoint>,
    tol: f64,
    max_iters: usize,
) -> Result<RSFixedPoint, TheoryError> {
    params.validate()?;
    let sq = params.rho.sqrt();
    let mut starts: Vec<RSFixedPoint> = START_FRACTIONS.iter().map(|f| RSFixedPoint::start(f * sq)).collect();
    if let Some(c) = continuation {
        starts.push(*c);
    }
    let mut best: Option<RSFixedPoint> = None;
    for s in starts {
        let p = rs_solve_from(params, s, tol, max_iters)?;
        if p.converged {
            return Ok(p);
        }
        if best.is_none_or(|b| p.residual < b.residual) {
            best = Some(p);
        }
    }
    Ok(best.expect("at least one start"))
}

pub fn rs_solve(params: &RSParams, tol: f64, max_iters: usize) -> Result<RSFixedPoint, TheoryError> {
    rs_solve_with(params, None, tol, max_iters)
}

/// Every start (the three defaults plus an optional continuation point),
/// solved independently. Used to check that they agree.
pub fn rs_solve_all_starts(
    params: &RSParams,
    continuation: Option<&RSFixedPoint>,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<RSFixedPoint>, TheoryError> {
    let sq = params.rho.sqrt();
    let mut starts: Vec<RSFixedPoint> = START_FRACTIONS.iter().map(|f| RSFixedPoint::start(f * sq)).collect();
    if let Some(c) = continuation {
        starts.push(*c);
    }
    starts.into_iter().map(|s| rs_solve_from(params, s, tol, max_iters)).collect()
}

/// Average of the single-site minimum `φ(√q̂ z + m̂ x⁰; Q̂) = -g(w)/Q̂` over
/// `z ~ N(0, 1)` and `x⁰` drawn from the sparse Gaussian prior.
pub fn phi_average(q_hat: f64, m_hat: f64, q_big_hat: f64, rho: f64) -> f64 {
    -((1.0 - rho) * gauss_g_mean(q_hat) + rho * gauss_g_mean(q_hat + m_hat * m_hat)) / q_big_hat
}

/// RS free energy before extremization, with the prior/field average of the
/// single-site minimum in closed form.
pub fn rs_free_energy(
    chi: f64,
    m: f64,
    q_hat: f64,
    m_hat: f64,
    q_big_hat: f64,
    params: &RSParams,
) -> Result<f64, TheoryError> {
    params.validate()?;
    if !(chi > 0.0 && q_hat > 0.0 && q_big_hat > 0.0) || !(m >= 0.0 && m * m <= params.rho) {
        return Err(TheoryError::NonFinite("rs_free_energy domain"));
    }
    let phi_avg = phi_average(q_hat, m_hat, q_big_hat, params.rho);
    let value = phi_avg - 0.5 * q_big_hat
        + 0.5 * q_hat * chi
        + m_hat * m
        + params.alpha / (2.0 * PI * chi) * sign_term(m, params.rho);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(TheoryError::NonFinite("rs_free_energy"))
    }
}

/// Left side of the AT condition; RS is locally stable iff it is negative.
pub fn rs_stability(point: &RSFixedPoint, params: &RSParams) -> (f64, bool) {
    let active = (1.0 - params.rho) * active_prob(point.q_hat)
        + params.rho * active_prob(point.q_hat + point.m_hat * point.m_hat);
    let qc = point.q_big_hat * point.chi;
    let lhs = params.alpha / (PI * qc * qc) * overlap_angle(point.m, params.rho) * active - 1.0;
    (lhs, lhs < 0.0)
}

/// Predicted FP: probability that a zero site leaves the dead zone.
pub fn rs_fp(point: &RSFixedPoint) -> f64 {
    active_prob(point.q_hat)
}

/// Predicted FN: probability that a nonzero site stays in the dead zone.
pub fn rs_fn(point: &RSFixedPoint) -> f64 {
    1.0 - active_prob(point.q_hat + point.m_hat * point.m_hat)
}

impl RSPrediction {
    pub fn from_point(point: &RSFixedPoint, params: &RSParams) -> Self {
        let cosine = point.m / params.rho.sqrt();
        let (at_lhs, stable_rs) = rs_stability(point, params);
        Self {
            mse: 2.0 * (1.0 - cosine),
            direction_cosine: cosine,
            fp: rs_fp(point),
            fn_: rs_fn(point),
            stable_rs,
            at_lhs,
        }
    }
}

pub fn rs_predict(params: &RSParams) -> Result<RSPrediction, TheoryError> {
    let point = rs_solve(params, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
    if !point.converged {
        return Err(TheoryError::NoConvergence { residual: point.residual });
    }
    Ok(RSPrediction::from_point(&point, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_overlap_kills_conjugates() {
        let p = RSParams::new(3.0, 0.125).unwrap();
        let s = p.rho.sqrt();
        let m = s;
        // evaluated directly: the clamp would move m off the boundary
        assert_eq!(sign_term(m, p.rho), 0.0);
        assert_eq!(p.alpha / (PI * p.rho) * (p.rho - m * m).max(0.0).sqrt(), 0.0);
    }

    #[test]
    fn prediction_endpoints() {
        let p = RSParams::new(2.0, 0.25).unwrap();
        let perfect = RSFixedPoint { m: 0.5, ..RSFixedPoint::start(0.5) };
        let pred = RSPrediction::from_point(&perfect, &p);
        assert!(pred.mse.abs() < 1e-15);
        assert!((pred.direction_cosine - 1.0).abs() < 1e-15);
        let orth = RSFixedPoint::start(0.0);
        assert!((RSPrediction::from_point(&orth, &p).mse - 2.0).abs() < 1e-15);
    }

    #[test]
    fn solves_reference_point() {
        let p = RSParams::new(3.0, 0.125).unwrap();
        let fp = rs_solve(&p, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        assert!(fp.converged);
        assert!(fp.residual < DEFAULT_TOL);
        assert!(fp.m > 0.0 && fp.m <= p.rho.sqrt());
        let pred = RSPrediction::from_point(&fp, &p);
        assert!(pred.mse > 0.0 && pred.mse < 2.0);
        assert!(!pred.stable_rs);
    }

    #[test]
    fn invalid_params() {
        assert!(RSParams::new(0.0, 0.1).is_err());
        assert!(RSParams::new(1.0, 1.0).is_err());
        assert!(RSParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn free_energy_domain() {
        let p = RSParams::new(1.0, 0.25).unwrap();
        assert!(rs_free_energy(-1.0, 0.2, 1.0, 1.0, 1.0, &p).is_err());
        assert!(rs_free_energy(1.0, 0.6, 1.0, 1.0, 1.0, &p).is_err());
        assert!(rs_free_energy(1.0, 0.2, 1.0, 1.0, 1.0, &p).is_ok());
    }

    #[test]
    fn dead_zone_limit() {
        // m̂ = 0, q̂ -> 0+: the single-site minimum vanishes almost surely
        assert!(gauss_g_mean(1e-4) < 1e-300);
        assert!(gauss_g_mean(1e-2) < 1e-20);
    }
}
