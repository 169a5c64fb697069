//! Cavity-inspired signal recovery.
//!
//! The field `H` accumulates `-B⁻¹Φᶠᵀf'(Φᶠx̂)` across inner steps, the
//! Onsager term `Γx̂` cancels self-feedback, and the estimate is the unit soft
//! threshold of the corrected field on the sphere. `B` shrinks geometrically
//! in the outer loop.

use std::time::Instant;

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::biht::biht_folded;
use super::{
    constraint_gradient, hard_threshold_k, mean_abs_diff, normalize_to_sphere, RecoveryResult, BIHT_DEFAULT_ITERS,
};
use crate::error::RecoveryError;
use crate::model::ProblemInstance;
use crate::special::{f_second, g_prime};

/// Restarts allowed per outer stage before moving on to the next `B`.
const MAX_RESTARTS_PER_STAGE: usize = 50;
/// Fraction of the runner-up crossing used when placing `B`.
const SURVIVOR_MARGIN: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct CisrConfig {
    pub b_shrink: f64,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    /// `false` drops the Onsager term (the NORT ablation).
    pub onsager_enabled: bool,
    pub biht_iters: usize,
}

impl Default for CisrConfig {
    fn default() -> Self {
        Self {
            b_shrink: 0.9,
            inner_tol: 1e-8,
            outer_tol: 1e-8,
            max_inner: 10_000,
            max_outer: 200,
            onsager_enabled: true,
            biht_iters: BIHT_DEFAULT_ITERS,
        }
    }
}

impl CisrConfig {
    pub fn nort() -> Self {
        Self { onsager_enabled: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), RecoveryError> {
        if !(self.b_shrink > 0.0 && self.b_shrink < 1.0) {
            return Err(RecoveryError::InvalidConfig("b_shrink must lie in (0, 1)".into()));
        }
        if !(self.inner_tol > 0.0 && self.outer_tol > 0.0) {
            return Err(RecoveryError::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return Err(RecoveryError::InvalidConfig("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CisrState {
    pub x_hat: Array1<f64>,
    /// Accumulated field `H` (without the Onsager correction).
    pub h: Array1<f64>,
    pub b: f64,
    pub gamma: f64,
}

/// Field increment direction and Onsager rate at the current estimate:
/// `(-Φᶠᵀf'(Φᶠx̂), N⁻¹Σ_μ f''((Φᶠx̂)_μ))`. Both scale with `B⁻¹`.
fn field_drive(x_hat: ArrayView1<f64>, phi: ArrayView2<f64>) -> (Array1<f64>, f64) {
    let u = phi.dot(&x_hat);
    let mut drive = constraint_gradient(phi, u.view());
    drive.mapv_inplace(|v| -v);
    let violated: f64 = u.iter().map(|&v| f_second(v)).sum();
    (drive, violated / x_hat.len() as f64)
}

/// One inner step. The stored field is `H_k`; the Onsager-corrected field
/// only feeds the shrinkage.
pub fn cisr_inner_step(
    state: &CisrState,
    phi_folded: ArrayView2<f64>,
    onsager: bool,
) -> Result<CisrState, RecoveryError> {
    if !(state.b > 0.0) {
        return Err(RecoveryError::DegenerateParameters(format!("B = {}", state.b)));
    }
    super::check_len(phi_folded.ncols(), state.x_hat.len())?;
    let (drive, rate) = field_drive(state.x_hat.view(), phi_folded);
    apply_step(state, &drive, rate, state.b, onsager)
}

fn apply_step(
    state: &CisrState,
    drive: &Array1<f64>,
    rate: f64,
    b: f64,
    onsager: bool,
) -> Result<CisrState, RecoveryError> {
    let inv_b = 1.0 / b;
    let h = &state.h + &(drive * inv_b);
    let gamma = rate * inv_b;
    let mut u = if onsager {
        Array1::from_shape_fn(h.len(), |i| g_prime(h[i] + gamma * state.x_hat[i]))
    } else {
        h.mapv(g_prime)
    };
    if !normalize_to_sphere(&mut u) {
        return Err(RecoveryError::AllZeroShrinkage);
    }
    Ok(CisrState { x_hat: u, h, b, gamma })
}

/// Smallest `t = 1/B` (above `t_floor`) at which one entry of
/// `|base + t·dir|` leaves the unit dead zone, positioned so that the
/// runner-up stays inside. Entries already outside are ignored.
pub(crate) fn single_survivor_rate(base: ArrayView1<f64>, dir: ArrayView1<f64>, t_floor: f64) -> Option<f64> {
    let mut first = f64::INFINITY;
    let mut second = f64::INFINITY;
    for (&a, &v) in base.iter().zip(dir.iter()) {
        if v == 0.0 {
            continue;
        }
        let t = (1.0f64.copysign(v) - a) / v;
        if !(t >= t_floor) {
            continue;
        }
        if t < first {
            second = first;
            first = t;
        } else if t < second {
            second = t;
        }
    }
    if !first.is_finite() {
        return None;
    }
    if !second.is_finite() {
        return Some(2.0 * first.max(f64::MIN_POSITIVE));
    }
    let t = SURVIVOR_MARGIN * second;
    Some(if t > first { t } else { 0.5 * (first + second) })
}

/// Seed state: the largest entry of the `k_prior`-sparse BIHT estimate
/// (a 1-sparse `x̂` on the sphere), zero field, and `B` placed so that the
/// first shrinkage keeps a single entry.
///
/// If the BIHT estimate already satisfies every sign constraint the field
/// has no drive; the field is then seeded along the correlation `Φᶠᵀ1`.
pub fn initial_cisr_state(phi_folded: ArrayView2<f64>, k_prior: usize, onsager: bool, biht_iters: usize) -> CisrState {
    let n = phi_folded.ncols();
    // the k_prior-sparse BIHT estimate is reduced to its leading entry
    let mut x_hat = hard_threshold_k(biht_folded(phi_folded, k_prior, biht_iters).view(), 1);
    normalize_to_sphere(&mut x_hat);
    let zero = Array1::<f64>::zeros(n);
    let (drive, rate) = field_drive(x_hat.view(), phi_folded);
    let effective = if onsager { &drive + &(&x_hat * rate) } else { drive };
    if let Some(t) = single_survivor_rate(zero.view(), effective.view(), 0.0) {
        return CisrState { x_hat, h: zero, b: 1.0 / t, gamma: 0.0 };
    }
    let correlation = phi_folded.t().dot(&Array1::<f64>::ones(phi_folded.nrows()));
    let t = single_survivor_rate(zero.view(), correlation.view(), 0.0).unwrap_or(1.0);
    CisrState { x_hat, h: &correlation * t, b: 1.0 / t, gamma: 0.0 }
}

pub fn cisr_recover(
    instance: &ProblemInstance,
    cfg: &CisrConfig,
    k_prior: usize,
) -> Result<RecoveryResult, RecoveryError> {
    cfg.validate()?;
    if k_prior == 0 {
        return Err(RecoveryError::InvalidConfig("k_prior must be at least 1".into()));
    }
    let start = Instant::now();
    let folded = instance.folded();
    let phi = folded.phi_folded.view();
    let onsager = cfg.onsager_enabled;

    let mut state = initial_cisr_state(phi, k_prior, onsager, cfg.biht_iters);
    let mut inner_total = 0;
    let mut restarts = 0;
    let mut converged = false;
    let mut outer_done = 0;
    let mut prev_outer: Option<Array1<f64>> = None;

    'outer: for outer in 0..cfg.max_outer {
        outer_done = outer + 1;
        let mut stage_restarts = 0;
        let mut inner_converged = false;
        let mut inner = 0;
        while inner < cfg.max_inner {
            let (drive, rate) = field_drive(state.x_hat.view(), phi);
            let next = match apply_step(&state, &drive, rate, state.b, onsager) {
                Ok(next) => next,
                Err(RecoveryError::AllZeroShrinkage) => {
                    if stage_restarts == MAX_RESTARTS_PER_STAGE {
                        break;
                    }
                    let effective = if onsager { &drive + &(&state.x_hat * rate) } else { drive };
                    match single_survivor_rate(state.h.view(), effective.view(), 1.0 / state.b) {
                        Some(t) => {
                            state.b = 1.0 / t;
                            stage_restarts += 1;
                            restarts += 1;
                            continue;
                        }
                        None => break 'outer,
                    }
                }
                Err(e) => return Err(e),
            };
            inner += 1;
            let residual = mean_abs_diff(next.x_hat.view(), state.x_hat.view());
            state = next;
            if residual < cfg.inner_tol {
                inner_converged = true;
                break;
            }
        }
        inner_total += inner;
        if let Some(prev) = &prev_outer {
            if inner_converged && mean_abs_diff(state.x_hat.view(), prev.view()) < cfg.outer_tol {
                converged = true;
                break;
            }
        }
        prev_outer = Some(state.x_hat.clone());
        state.b *= cfg.b_shrink;
    }

    Ok(RecoveryResult {
        x_hat: state.x_hat,
        inner_iterations_total: inner_total,
        outer_iterations: outer_done,
        converged,
        wall_time: start.elapsed(),
        restarts,
    })
}
