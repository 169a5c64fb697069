//! Naive iteration of the cavity self-consistent equations.
//!
//! Experimental: the sweep rarely settles, which is the behaviour this
//! iterator exists to expose. Failures are reported, never hidden.

use std::time::Instant;

use ndarray::{Array1, ArrayView2};

use super::biht::biht_folded;
use super::cisr::single_survivor_rate;
use super::{constraint_gradient, mean_abs_diff, RecoveryResult, BIHT_DEFAULT_ITERS};
use crate::error::RecoveryError;
use crate::model::ProblemInstance;
use crate::special::{f_prime, f_second, g_prime, g_second};

#[derive(Debug, Clone, PartialEq)]
pub struct CavityState {
    pub x_hat: Array1<f64>,
    /// Lagrange multipliers `â_μ`.
    pub a_hat: Array1<f64>,
    pub k_field: Array1<f64>,
    pub h_field: Array1<f64>,
    pub a_param: f64,
    pub b_param: f64,
    /// Onsager coefficient `Γ` applied in the next sweep.
    pub gamma: f64,
    /// Norm multiplier `Λ = A - Γ`.
    pub lambda_mult: f64,
}

impl CavityState {
    pub fn initial(x_hat: Array1<f64>, m: usize) -> Self {
        let n = x_hat.len();
        Self {
            x_hat,
            a_hat: Array1::zeros(m),
            k_field: Array1::zeros(m),
            h_field: Array1::zeros(n),
            a_param: 1.0,
            b_param: 1.0,
            gamma: 0.0,
            lambda_mult: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveCavityOutcome {
    pub result: RecoveryResult,
    /// Per-sweep l1 change of `x̂` per entry.
    pub residual_trace: Vec<f64>,
    /// Set when `A` or `B` collapsed and the sweep had to stop.
    pub halted: Option<RecoveryError>,
}

/// One sweep: `K`, `â`, `H`, `x̂` in order, then `A` (norm), `B` and `Γ`.
pub fn naive_cavity_sweep(state: &CavityState, phi: ArrayView2<f64>) -> Result<CavityState, RecoveryError> {
    let n = phi.ncols() as f64;
    let b = state.b_param;
    let k_field = phi.dot(&state.x_hat) - &(&state.a_hat * b);
    let a_hat = k_field.mapv(|k| -f_prime(k) / b);
    let h_field = phi.t().dot(&a_hat) + &(&state.x_hat * state.gamma);
    let raw = h_field.mapv(g_prime);
    let a_param = (raw.dot(&raw) / n).sqrt();
    if !(a_param > 0.0) || !a_param.is_finite() {
        return Err(RecoveryError::DegenerateParameters(format!("A = {a_param}")));
    }
    let x_hat = raw / a_param;
    let active: f64 = h_field.iter().map(|&h| g_second(h)).sum();
    let b_param = active / (n * a_param);
    if !(b_param > 0.0) || !b_param.is_finite() {
        return Err(RecoveryError::DegenerateParameters(format!("B = {b_param}")));
    }
    let violated: f64 = k_field.iter().map(|&k| f_second(k)).sum();
    let gamma = violated / (n * b_param);
    Ok(CavityState { x_hat, a_hat, k_field, h_field, a_param, b_param, gamma, lambda_mult: a_param - gamma })
}

/// Iterate sweeps from a BIHT start with `k_prior` nonzeros, `â = 0`, `A = 1`
/// and `B` placed so that exactly one entry of the first field leaves the
/// unit dead zone (`B = 1` if the start already satisfies every sign).
pub fn naive_cavity_recover(
    instance: &ProblemInstance,
    k_prior: usize,
    max_iters: usize,
    tol: f64,
) -> NaiveCavityOutcome {
    let start = Instant::now();
    let folded = instance.folded();
    let phi = folded.phi_folded.view();
    let mut state = CavityState::initial(biht_folded(phi, k_prior, BIHT_DEFAULT_ITERS), instance.m());
    // with B = 1 the first field usually stays inside the dead zone and A
    // is undefined; start from the B at which a single entry leaves it
    let drive = -constraint_gradient(phi, phi.dot(&state.x_hat).view());
    if let Some(t) = single_survivor_rate(Array1::zeros(drive.len()).view(), drive.view(), 0.0) {
        state.b_param = 1.0 / t;
    }
    let mut trace = Vec::new();
    let mut converged = false;
    let mut halted = None;
    for _ in 0..max_iters {
        match naive_cavity_sweep(&state, phi) {
            Ok(next) => {
                let r = mean_abs_diff(next.x_hat.view(), state.x_hat.view());
                trace.push(r);
                state = next;
                if r < tol {
                    converged = true;
                    break;
                }
            }
            Err(e) => {
                halted = Some(e);
                break;
            }
        }
    }
    NaiveCavityOutcome {
        result: RecoveryResult {
            x_hat: state.x_hat,
            inner_iterations_total: trace.len(),
            outer_iterations: 1,
            converged,
            wall_time: start.elapsed(),
            restarts: 0,
        },
        residual_trace: trace,
        halted,
    }
}
