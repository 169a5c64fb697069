//! Renormalized fixed point iteration.
//!
//! Inner loop: projected gradient of the one-sided quadratic penalty on the
//! sphere, l1 shrinkage with threshold `δ/λ`, renormalization. Outer loop:
//! `λ ← c·λ`, warm-started from the previous convergent.

use std::time::Instant;

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_len, mean_abs_diff, normalize_to_sphere, FoldedOps, RecoveryResult};
use crate::error::RecoveryError;
use crate::model::{derive_seed, rng_from_seed, stream, ProblemInstance};
use crate::special::{f_pot, soft_threshold};

#[derive(Debug, Clone, PartialEq)]
pub struct RfpiConfig {
    pub delta: f64,
    pub lambda0: f64,
    pub lambda_growth: f64,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
}

impl Default for RfpiConfig {
    fn default() -> Self {
        Self {
            delta: 0.01,
            lambda0: 0.005,
            lambda_growth: 2.0,
            inner_tol: 1e-8,
            outer_tol: 1e-8,
            max_inner: 10_000,
            max_outer: 60,
        }
    }
}

impl RfpiConfig {
    pub fn validate(&self) -> Result<(), RecoveryError> {
        let positive = [self.delta, self.lambda0, self.inner_tol, self.outer_tol];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(RecoveryError::InvalidConfig("delta, lambda0 and tolerances must be positive".into()));
        }
        if !(self.lambda_growth > 1.0) {
            return Err(RecoveryError::InvalidConfig("lambda_growth must exceed 1".into()));
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return Err(RecoveryError::InvalidConfig("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// One inner-loop step record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub outer: usize,
    pub inner: usize,
    /// Per-entry l1 change of the iterate.
    pub residual: f64,
    /// `Σ_μ f((Φᶠx)_μ) + ‖x‖₁/λ` at the new iterate.
    pub objective: f64,
}

/// The cost the inner loop descends: the one-sided quadratic penalty plus
/// the l1 term with the weight implied by the shrinkage threshold `δ/λ`.
pub fn rfpi_objective(x: ArrayView1<f64>, phi_folded: ArrayView2<f64>, lambda: f64) -> f64 {
    let penalty: f64 = phi_folded.dot(&x).iter().map(|&u| f_pot(u)).sum();
    penalty + x.iter().map(|v| v.abs()).sum::<f64>() / lambda
}

/// Uniform random direction scaled to `√N`.
pub fn random_sphere_point(n: usize, seed: u64) -> Array1<f64> {
    let mut rng = rng_from_seed(seed);
    loop {
        let mut x = Array1::from_shape_simple_fn(n, || rng.sample::<f64, _>(StandardNormal));
        if normalize_to_sphere(&mut x) {
            return x;
        }
    }
}

/// One inner step, returning the new iterate.
pub fn rfpi_inner_step(
    x_prev: ArrayView1<f64>,
    phi_folded: ArrayView2<f64>,
    delta: f64,
    lambda: f64,
) -> Result<Array1<f64>, RecoveryError> {
    check_len(phi_folded.ncols(), x_prev.len())?;
    let mut work = StepBuffers::new(FoldedOps::new(phi_folded));
    let x = x_prev.to_owned();
    let mut next = Array1::zeros(x.len());
    work.step(&x, delta, lambda, &mut next)?;
    Ok(next)
}

struct StepBuffers {
    ops: FoldedOps,
    u: Vec<f64>,
    f_bar: Vec<f64>,
}

impl StepBuffers {
    fn new(ops: FoldedOps) -> Self {
        let (m, n) = (ops.nrows(), ops.ncols());
        Self { ops, u: vec![0.0; m], f_bar: vec![0.0; n] }
    }

    fn step(&mut self, x: &Array1<f64>, delta: f64, lambda: f64, next: &mut Array1<f64>) -> Result<(), RecoveryError> {
        let xs = x.as_slice().expect("contiguous iterate");
        self.ops.apply(xs, &mut self.u);
        self.ops.constraint_gradient(&self.u, &mut self.f_bar);
        // tangent-space projection
        let radial = self.f_bar.iter().zip(xs).map(|(f, x)| f * x).sum::<f64>() / xs.len() as f64;
        let threshold = delta / lambda;
        for ((out, &xi), &fi) in next.iter_mut().zip(xs).zip(&self.f_bar) {
            *out = soft_threshold(xi - delta * (fi - radial * xi), threshold);
        }
        if !normalize_to_sphere(next) {
            return Err(RecoveryError::AllZeroShrinkage);
        }
        Ok(())
    }
}

/// Default initialization: a random sphere point drawn from the instance seed.
///
/// The outer loop stops once two successive convergents differ by less than
/// `outer_tol` per entry, but only after the shrinkage threshold `δ/λ` has
/// itself dropped below `outer_tol`: while the threshold is larger, an
/// unchanged convergent just means the shrinkage swallows the gradient step
/// (for instance a 1-sparse iterate right after the first outer loop).
pub fn rfpi_recover(
    instance: &ProblemInstance,
    cfg: &RfpiConfig,
    x_init: Option<ArrayView1<f64>>,
) -> Result<RecoveryResult, RecoveryError> {
    rfpi_run(instance, cfg, x_init, None)
}

/// Same as [`rfpi_recover`] with a callback on every inner step.
pub fn rfpi_recover_traced(
    instance: &ProblemInstance,
    cfg: &RfpiConfig,
    x_init: Option<ArrayView1<f64>>,
    mut observe: impl FnMut(&TracePoint),
) -> Result<RecoveryResult, RecoveryError> {
    rfpi_run(instance, cfg, x_init, Some(&mut observe))
}

fn rfpi_run(
    instance: &ProblemInstance,
    cfg: &RfpiConfig,
    x_init: Option<ArrayView1<f64>>,
    mut observe: Option<&mut dyn FnMut(&TracePoint)>,
) -> Result<RecoveryResult, RecoveryError> {
    cfg.validate()?;
    let start = Instant::now();
    let n = instance.n();
    let mut x = match x_init {
        Some(x) => {
            check_len(n, x.len())?;
            let mut x = x.to_owned();
            if !normalize_to_sphere(&mut x) {
                return Err(RecoveryError::InvalidConfig("initial point is zero".into()));
            }
            x
        }
        None => random_sphere_point(n, derive_seed(instance.seed, &[stream::RFPI_INIT])),
    };
    let folded = instance.folded();
    let phi = folded.phi_folded.view();
    let mut work = StepBuffers::new(FoldedOps::new(phi));
    let mut next = Array1::zeros(n);

    let mut lambda = cfg.lambda0;
    let mut inner_total = 0;
    let mut rescues = 0;
    let mut converged = false;
    let mut outer_done = 0;
    let mut prev_outer: Option<Array1<f64>> = None;

    for outer in 0..cfg.max_outer {
        outer_done = outer + 1;
        let mut inner_converged = false;
        let mut inner = 0;
        while inner < cfg.max_inner {
            match work.step(&x, cfg.delta, lambda, &mut next) {
                Ok(()) => {}
                Err(RecoveryError::AllZeroShrinkage) => {
                    // threshold too coarse for the current iterate: tighten it
                    lambda *= cfg.lambda_growth;
                    rescues += 1;
                    continue;
                }
                Err(e) => return Err(e),
            }
            inner += 1;
            let residual = mean_abs_diff(next.view(), x.view());
            std::mem::swap(&mut x, &mut next);
            if let Some(obs) = observe.as_mut() {
                obs(&TracePoint { outer, inner, residual, objective: rfpi_objective(x.view(), phi, lambda) });
            }
            if residual < cfg.inner_tol {
                inner_converged = true;
                break;
            }
        }
        inner_total += inner;
        let threshold_resolved = cfg.delta / lambda < cfg.outer_tol;
        if let Some(prev) = &prev_outer {
            if inner_converged && threshold_resolved && mean_abs_diff(x.view(), prev.view()) < cfg.outer_tol {
                converged = true;
                break;
            }
        }
        prev_outer = Some(x.clone());
        lambda *= cfg.lambda_growth;
    }

    Ok(RecoveryResult {
        x_hat: x,
        inner_iterations_total: inner_total,
        outer_iterations: outer_done,
        converged,
        wall_time: start.elapsed(),
        restarts: rescues,
    })
}
