//! 1-bit compressed sensing toolkit.
//!
//! * [`model`]: sparse Gaussian signals, Gaussian measurement matrices and
//!   sign measurements, all seeded.
//! * [`recovery`]: RFPI (l1 minimization on the sphere by gradient
//!   projection and shrinkage), CISR (cavity-inspired recovery with an
//!   Onsager correction), BIHT seeding and the naive cavity iteration.
//! * [`theory`]: replica-symmetric saddle point, predicted MSE/FP/FN and the
//!   de Almeida–Thouless stability test.
//! * [`metrics`] and [`harness`]: per-trial measures and seeded Monte-Carlo
//!   sweeps written to CSV.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod recovery;
pub mod special;
pub mod theory;

pub use error::{HarnessError, MetricsError, ModelError, RecoveryError, TheoryError};
pub use metrics::{aggregate, compute_metrics, TrialMetrics};
pub use model::{ProblemInstance, SignalParams};
pub use recovery::{cisr_recover, rfpi_recover, CisrConfig, RecoveryResult, RfpiConfig};
pub use theory::{rs_predict, rs_solve, RSFixedPoint, RSParams, RSPrediction};
