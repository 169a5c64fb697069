//! Binary iterative hard thresholding, used to seed CISR and the naive
//! cavity iteration.

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::{constraint_gradient, normalize_to_sphere};
use crate::model::ProblemInstance;

pub const BIHT_DEFAULT_ITERS: usize = 50;

/// Keep the `k` largest-magnitude entries; ties go to the lower index.
pub fn hard_threshold_k(x: ArrayView1<f64>, k: usize) -> Array1<f64> {
    let n = x.len();
    if k >= n {
        return x.to_owned();
    }
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps ascending index among equal magnitudes
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()));
    let mut out = Array1::zeros(n);
    for &i in &order[..k] {
        out[i] = x[i];
    }
    out
}

/// `k`-sparse starting point of norm `√N`.
///
/// Starts from the thresholded correlation `Φᶠᵀ1` and repeats
/// `x ← H_k(x - Φᶠᵀ f'(Φᶠx))`. The update is positively homogeneous, so the
/// iterate is rescaled to `√N` every step without changing its direction.
pub fn biht_init(instance: &ProblemInstance, k: usize, iters: usize) -> Array1<f64> {
    let folded = instance.folded();
    biht_folded(folded.phi_folded.view(), k, iters)
}

pub(crate) fn biht_folded(phi: ArrayView2<f64>, k: usize, iters: usize) -> Array1<f64> {
    let n = phi.ncols();
    let k = k.clamp(1, n);
    let correlation = phi.t().dot(&Array1::<f64>::ones(phi.nrows()));
    let mut x = hard_threshold_k(correlation.view(), k);
    if !normalize_to_sphere(&mut x) {
        return single_column_fallback(correlation.view());
    }
    for _ in 0..iters {
        let u = phi.dot(&x);
        let grad = constraint_gradient(phi, u.view());
        let mut next = hard_threshold_k((&x - &grad).view(), k);
        if !normalize_to_sphere(&mut next) {
            return single_column_fallback(correlation.view());
        }
        x = next;
    }
    x
}

fn single_column_fallback(correlation: ArrayView1<f64>) -> Array1<f64> {
    let n = correlation.len();
    let mut x = Array1::zeros(n);
    let j = (0..n).fold(0, |best, i| if correlation[i].abs() > correlation[best].abs() { i } else { best });
    x[j] = if correlation[j] < 0.0 { -(n as f64).sqrt() } else { (n as f64).sqrt() };
    x
}
