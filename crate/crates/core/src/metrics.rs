//! Empirical recovery measures.
//!
//! The support tolerance used for FP/FN matters only for algorithms that do
//! not produce exact zeros; both shrinkage-based recoverers here do.

use ndarray::ArrayView1;
use serde::Serialize;

use crate::error::MetricsError;

/// Default support tolerance `1e-9·√N`.
pub fn default_zero_tol(n: usize) -> f64 {
    1e-9 * (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialMetrics {
    pub mse: f64,
    pub direction_cosine: f64,
    /// `N⁻¹ x⁰·x̂`
    pub overlap_m: f64,
    /// `None` when `x⁰` has no zero entries.
    pub fp: Option<f64>,
    /// `None` when `x⁰` has no nonzero entries.
    pub fn_: Option<f64>,
    pub support_size_est: usize,
}

pub fn compute_metrics(
    x0: ArrayView1<f64>,
    x_hat: ArrayView1<f64>,
    zero_tol: f64,
) -> Result<TrialMetrics, MetricsError> {
    if x0.len() != x_hat.len() {
        return Err(MetricsError::LengthMismatch(x0.len(), x_hat.len()));
    }
    let n0 = x0.dot(&x0).sqrt();
    let nh = x_hat.dot(&x_hat).sqrt();
    if n0 == 0.0 || nh == 0.0 {
        return Err(MetricsError::ZeroVector);
    }
    let mut mse = 0.0;
    let (mut zeros, mut false_pos, mut nonzeros, mut false_neg, mut support) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for (&a, &b) in x0.iter().zip(x_hat.iter()) {
        let d = b / nh - a / n0;
        mse += d * d;
        let est_nonzero = b.abs() > zero_tol;
        support += est_nonzero as usize;
        if a == 0.0 {
            zeros += 1;
            false_pos += est_nonzero as usize;
        } else {
            nonzeros += 1;
            false_neg += (!est_nonzero) as usize;
        }
    }
    let dot = x0.dot(&x_hat);
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    Ok(TrialMetrics {
        mse,
        direction_cosine: dot / (n0 * nh),
        overlap_m: dot / x0.len() as f64,
        fp: ratio(false_pos, zeros),
        fn_: ratio(false_neg, nonzeros),
        support_size_est: support,
    })
}

/// Mean, sample standard deviation (`n - 1`) and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSummary {
    pub mean: f64,
    pub std: f64,
    pub sem: f64,
    pub count: usize,
}

impl FieldSummary {
    /// `std` and `sem` are 0 for a single value. Returns `None` on empty input.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let count = values.len();
        if count == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, sem: std / (count as f64).sqrt(), count })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub trials: usize,
    pub mse: FieldSummary,
    pub direction_cosine: FieldSummary,
    pub overlap_m: FieldSummary,
    /// Over trials where FP was defined.
    pub fp: Option<FieldSummary>,
    pub fn_: Option<FieldSummary>,
}

pub fn aggregate(records: &[TrialMetrics]) -> Result<MetricsSummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let col = |f: fn(&TrialMetrics) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let opt = |f: fn(&TrialMetrics) -> Option<f64>| {
        FieldSummary::from_values(&records.iter().filter_map(f).collect::<Vec<_>>())
    };
    Ok(MetricsSummary {
        trials: records.len(),
        mse: FieldSummary::from_values(&col(|r| r.mse)).expect("nonempty"),
        direction_cosine: FieldSummary::from_values(&col(|r| r.direction_cosine)).expect("nonempty"),
        overlap_m: FieldSummary::from_values(&col(|r| r.overlap_m)).expect("nonempty"),
        fp: opt(|r| r.fp),
        fn_: opt(|r| r.fn_),
    })
}
