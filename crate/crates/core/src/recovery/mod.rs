//! Signal recovery from folded sign measurements.
//!
//! All recoverers work on the folded matrix `Φᶠ` (row `μ` multiplied by
//! `y_μ`), so consistency with the measurements reads `Φᶠx > 0`, and keep
//! the estimate on the sphere `‖x‖₂ = √N`.

mod biht;
mod cavity;
mod cisr;
mod rfpi;

use std::time::Duration;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::special::f_prime;

pub use biht::{biht_init, hard_threshold_k, BIHT_DEFAULT_ITERS};
pub use cavity::{naive_cavity_recover, naive_cavity_sweep, CavityState, NaiveCavityOutcome};
pub use cisr::{cisr_inner_step, cisr_recover, initial_cisr_state, CisrConfig, CisrState};
pub use rfpi::{
    random_sphere_point, rfpi_inner_step, rfpi_objective, rfpi_recover, rfpi_recover_traced, RfpiConfig, TracePoint,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub x_hat: Array1<f64>,
    pub inner_iterations_total: usize,
    pub outer_iterations: usize,
    pub converged: bool,
    pub wall_time: Duration,
    /// CISR all-zero restarts (RFPI: threshold rescues).
    pub restarts: usize,
}

/// Rescale `u` in place to norm `√N`. Returns `false` (and leaves `u`
/// untouched) when `u` is identically zero.
pub(crate) fn normalize_to_sphere(u: &mut Array1<f64>) -> bool {
    let norm = u.dot(u).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    let scale = (u.len() as f64).sqrt() / norm;
    u.mapv_inplace(|v| v * scale);
    true
}

/// Per-entry l1 distance `N⁻¹ Σ |a_i - b_i|`.
pub(crate) fn mean_abs_diff(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// `Φᶠᵀ f'(u)` where `u = Φᶠx`; only violated rows contribute.
pub(crate) fn constraint_gradient(phi_folded: ArrayView2<f64>, u: ArrayView1<f64>) -> Array1<f64> {
    let mut grad = Array1::zeros(phi_folded.ncols());
    for (row, &um) in phi_folded.rows().into_iter().zip(u.iter()) {
        let w = f_prime(um);
        if w != 0.0 {
            grad.scaled_add(w, &row);
        }
    }
    grad
}

/// `Φᶠ` in both layouts for the two matrix-vector products of a gradient
/// step, each written as a sum of rows scaled by the nonzero entries of the
/// input so that sparse iterates and mostly satisfied constraints are cheap.
pub(crate) struct FoldedOps {
    rows: Array2<f64>,
    cols: Array2<f64>,
}

impl FoldedOps {
    pub(crate) fn new(phi_folded: ArrayView2<f64>) -> Self {
        Self {
            rows: phi_folded.as_standard_layout().into_owned(),
            cols: phi_folded.t().as_standard_layout().into_owned(),
        }
    }

    pub(crate) fn nrows(&self) -> usize {
        self.rows.nrows()
    }

    pub(crate) fn ncols(&self) -> usize {
        self.rows.ncols()
    }

    /// `out = Φᶠx`.
    pub(crate) fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (&xi, col) in x.iter().zip(self.cols.rows()) {
            if xi != 0.0 {
                axpy(xi, col.as_slice().expect("standard layout"), out);
            }
        }
    }

    /// `out = Φᶠᵀ f'(u)`.
    pub(crate) fn constraint_gradient(&self, u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (&um, row) in u.iter().zip(self.rows.rows()) {
            let w = f_prime(um);
            if w != 0.0 {
                axpy(w, row.as_slice().expect("standard layout"), out);
            }
        }
    }
}

/// `y += a·x`. Same arithmetic on every path (no fused multiply-add), only
/// the vector width changes.
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the feature was detected at runtime.
        unsafe { axpy_avx2(a, x, y) };
        return;
    }
    axpy_plain(a, x, y);
}

#[inline(always)]
fn axpy_plain(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn axpy_avx2(a: f64, x: &[f64], y: &mut [f64]) {
    axpy_plain(a, x, y);
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<(), crate::error::RecoveryError> {
    if expected == got {
        Ok(())
    } else {
        Err(crate::error::RecoveryError::DimensionMismatch { expected, got })
    }
}
