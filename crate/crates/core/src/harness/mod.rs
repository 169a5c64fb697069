//! Seeded Monte-Carlo sweeps over `(ρ, α)` grids, the runtime benchmark and
//! the theory curves, all written as CSV.
//!
//! Every algorithm in a `(ρ, α, trial)` cell runs on the same instance.
//! Trials run on a bounded rayon pool; results are collected in task order,
//! so the output does not depend on the thread count.

pub mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;

use crate::error::{HarnessError, RecoveryError};
use crate::metrics::{compute_metrics, default_zero_tol, FieldSummary, TrialMetrics};
use crate::model::{derive_seed, ProblemInstance, SignalParams};
use crate::recovery::{cisr_recover, naive_cavity_recover, rfpi_recover, CisrConfig, RecoveryResult, RfpiConfig};
use crate::theory::{rs_solve_with, RSFixedPoint, RSParams, RSPrediction, DEFAULT_MAX_ITERS, DEFAULT_TOL};

pub const TRIAL_HEADER: [&str; 15] = [
    "rho",
    "alpha",
    "trial",
    "algorithm",
    "seed",
    "mse",
    "cosine",
    "overlap_m",
    "fp",
    "fn",
    "converged",
    "outer_iters",
    "inner_iters",
    "restarts",
    "wall_time_s",
];

pub const SUMMARY_HEADER: [&str; 16] = [
    "rho",
    "alpha",
    "algorithm",
    "trials",
    "failures",
    "converged_frac",
    "mse_mean",
    "mse_std",
    "mse_sem",
    "cosine_mean",
    "fp_mean",
    "fn_mean",
    "wall_time_mean_s",
    "wall_time_std_s",
    "theory_mse",
    "mse_gap",
];

pub const THEORY_HEADER: [&str; 13] =
    ["rho", "alpha", "m", "chi", "q_hat", "m_hat", "q_big_hat", "mse", "fp", "fn", "at_lhs", "stable", "converged"];

pub const TIMING_HEADER: [&str; 8] =
    ["k", "algorithm", "trials", "failures", "wall_time_mean_s", "wall_time_std_s", "mse_mean", "inner_iters_mean"];

pub const NAIVE_TRACE_HEADER: [&str; 5] = ["rho", "alpha", "trial", "sweep", "residual"];

pub const NAIVE_STATUS_HEADER: [&str; 6] = ["rho", "alpha", "trial", "sweeps", "converged", "halted"];

/// First seed-path element of the runtime benchmark, outside the range of
/// grid indices.
const TIMING_PATH: u64 = 1 << 40;

/// Per-worker memory budget for one instance (`M·N` doubles, stored twice).
const INSTANCE_BYTES_BUDGET: f64 = 256.0 * 1024.0 * 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Rfpi,
    Cisr,
    /// CISR without the Onsager term.
    Nort,
    NaiveCavity,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Rfpi, Algorithm::Cisr, Algorithm::Nort, Algorithm::NaiveCavity];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Rfpi => "rfpi",
            Algorithm::Cisr => "cisr",
            Algorithm::Nort => "nort",
            Algorithm::NaiveCavity => "naive_cavity",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "rfpi" => Ok(Algorithm::Rfpi),
            "cisr" => Ok(Algorithm::Cisr),
            "nort" => Ok(Algorithm::Nort),
            "naive_cavity" | "naive" => Ok(Algorithm::NaiveCavity),
            other => Err(format!("unknown algorithm {other:?} (expected rfpi, cisr, nort, naive_cavity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub n: usize,
    pub alphas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub rfpi_cfg: RfpiConfig,
    pub cisr_cfg: CisrConfig,
    pub output_dir: PathBuf,
    pub theory_only: bool,
    pub parallelism: usize,
    /// i.i.d. Bernoulli support instead of exactly `round(ρN)` nonzeros.
    pub bernoulli_support: bool,
    pub naive_max_iters: usize,
    pub naive_tol: f64,
    /// Support sizes of the runtime benchmark.
    pub timing_ks: Vec<usize>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            n: 128,
            alphas: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            rhos: vec![1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0],
            trials: 200,
            master_seed: 20_130_101,
            algorithms: vec![Algorithm::Rfpi, Algorithm::Cisr],
            rfpi_cfg: RfpiConfig::default(),
            cisr_cfg: CisrConfig::default(),
            output_dir: PathBuf::from("results"),
            theory_only: false,
            parallelism: std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1),
            bernoulli_support: false,
            naive_max_iters: 500,
            naive_tol: 1e-8,
            timing_ks: vec![4, 8, 16, 32],
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.alphas.is_empty() || self.rhos.is_empty() {
            return bad("alphas and rhos must be nonempty".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return bad(format!("alpha = {a} must be positive"));
        }
        if let Some(r) = self.rhos.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return bad(format!("rho = {r} outside (0, 1)"));
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms selected".into());
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if self.naive_max_iters == 0 || !(self.naive_tol > 0.0) {
            return bad("naive cavity limits must be positive".into());
        }
        if let Some(k) = self.timing_ks.iter().find(|k| **k == 0 || **k > self.n) {
            return bad(format!("timing support size {k} outside 1..={}", self.n));
        }
        let max_alpha = self.alphas.iter().cloned().fold(0.0, f64::max).max(3.0);
        let bytes = 2.0 * 8.0 * max_alpha * (self.n as f64).powi(2);
        if bytes > INSTANCE_BYTES_BUDGET {
            return bad(format!("n = {} with alpha = {max_alpha} exceeds the per-instance memory budget", self.n));
        }
        self.rfpi_cfg.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.cisr_cfg.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    fn signal_params(&self, rho: f64) -> SignalParams {
        if self.bernoulli_support {
            SignalParams::bernoulli(self.n, rho)
        } else {
            SignalParams::exact(self.n, rho)
        }
    }
}

/// Seed of trial `t` in grid cell `(rho_index, alpha_index)`.
pub fn trial_seed(master_seed: u64, rho_index: usize, alpha_index: usize, trial: usize) -> u64 {
    derive_seed(master_seed, &[rho_index as u64, alpha_index as u64, trial as u64])
}

/// Seed of trial `t` for support size index `k_index` of the runtime benchmark.
pub fn timing_seed(master_seed: u64, k_index: usize, trial: usize) -> u64 {
    derive_seed(master_seed, &[TIMING_PATH, k_index as u64, trial as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub rho: f64,
    pub alpha: f64,
    pub trial_index: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// `None` when the recoverer failed.
    pub metrics: Option<TrialMetrics>,
    pub wall_time: Duration,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    pub failure: Option<String>,
}

impl TrialRecord {
    fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let m = self.metrics.as_ref();
        vec![
            self.rho.to_string(),
            self.alpha.to_string(),
            self.trial_index.to_string(),
            self.algorithm.to_string(),
            self.seed.to_string(),
            opt(m.map(|m| m.mse)),
            opt(m.map(|m| m.direction_cosine)),
            opt(m.map(|m| m.overlap_m)),
            opt(m.and_then(|m| m.fp)),
            opt(m.and_then(|m| m.fn_)),
            self.converged.to_string(),
            self.outer_iterations.to_string(),
            self.inner_iterations.to_string(),
            self.restarts.to_string(),
            self.wall_time.as_secs_f64().to_string(),
        ]
    }
}

/// Residual trace of one naive cavity run.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveTrace {
    pub rho: f64,
    pub alpha: f64,
    pub trial_index: usize,
    pub residuals: Vec<f64>,
    /// Why the iteration stopped early, if it did.
    pub halted: Option<String>,
}

/// Run one algorithm on one instance; `k_prior` is the instance's support size.
pub fn run_algorithm(
    algorithm: Algorithm,
    instance: &ProblemInstance,
    plan: &ExperimentPlan,
) -> (Result<RecoveryResult, RecoveryError>, Option<NaiveCavityTrace>) {
    let k_prior = instance.support_size().max(1);
    match algorithm {
        Algorithm::Rfpi => (rfpi_recover(instance, &plan.rfpi_cfg, None), None),
        Algorithm::Cisr => {
            (cisr_recover(instance, &CisrConfig { onsager_enabled: true, ..plan.cisr_cfg.clone() }, k_prior), None)
        }
        Algorithm::Nort => {
            (cisr_recover(instance, &CisrConfig { onsager_enabled: false, ..plan.cisr_cfg.clone() }, k_prior), None)
        }
        Algorithm::NaiveCavity => {
            let out = naive_cavity_recover(instance, k_prior, plan.naive_max_iters, plan.naive_tol);
            let trace = NaiveCavityTrace { residuals: out.residual_trace, halted: out.halted.map(|e| e.to_string()) };
            (Ok(out.result), Some(trace))
        }
    }
}

/// Residuals and halt reason of a naive cavity run, before cell labels are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveCavityTrace {
    pub residuals: Vec<f64>,
    pub halted: Option<String>,
}

fn record_for(
    algorithm: Algorithm,
    instance: &ProblemInstance,
    rho: f64,
    alpha: f64,
    trial_index: usize,
    outcome: Result<RecoveryResult, RecoveryError>,
) -> TrialRecord {
    let base = TrialRecord {
        rho,
        alpha,
        trial_index,
        algorithm,
        seed: instance.seed,
        metrics: None,
        wall_time: Duration::ZERO,
        inner_iterations: 0,
        outer_iterations: 0,
        converged: false,
        restarts: 0,
        failure: None,
    };
    match outcome {
        Ok(r) => match compute_metrics(instance.x0.view(), r.x_hat.view(), default_zero_tol(instance.n())) {
            Ok(metrics) => TrialRecord {
                metrics: Some(metrics),
                wall_time: r.wall_time,
                inner_iterations: r.inner_iterations_total,
                outer_iterations: r.outer_iterations,
                converged: r.converged,
                restarts: r.restarts,
                ..base
            },
            Err(e) => TrialRecord { wall_time: r.wall_time, failure: Some(e.to_string()), ..base },
        },
        Err(e) => TrialRecord { failure: Some(e.to_string()), ..base },
    }
}

struct CellOutput {
    records: Vec<TrialRecord>,
    traces: Vec<NaiveTrace>,
    generation_failure: Option<String>,
}

fn run_cell(plan: &ExperimentPlan, rho_index: usize, alpha_index: usize, trial: usize) -> CellOutput {
    let rho = plan.rhos[rho_index];
    let alpha = plan.alphas[alpha_index];
    let seed = trial_seed(plan.master_seed, rho_index, alpha_index, trial);
    let instance = match ProblemInstance::generate(&plan.signal_params(rho), alpha, seed) {
        Ok(inst) => inst,
        Err(e) => {
            return CellOutput {
                records: Vec::new(),
                traces: Vec::new(),
                generation_failure: Some(format!("rho={rho} alpha={alpha} trial={trial}: {e}")),
            }
        }
    };
    let mut records = Vec::with_capacity(plan.algorithms.len());
    let mut traces = Vec::new();
    for &algorithm in &plan.algorithms {
        let (outcome, trace) = run_algorithm(algorithm, &instance, plan);
        if let Some(t) = trace {
            traces.push(NaiveTrace { rho, alpha, trial_index: trial, residuals: t.residuals, halted: t.halted });
        }
        records.push(record_for(algorithm, &instance, rho, alpha, trial, outcome));
    }
    CellOutput { records, traces, generation_failure: None }
}

/// Aggregates of one `(ρ, α, algorithm)` condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary {
    pub rho: f64,
    pub alpha: f64,
    pub algorithm: Algorithm,
    /// Trials with metrics.
    pub trials: usize,
    pub failures: usize,
    pub converged_frac: f64,
    pub mse: Option<FieldSummary>,
    pub cosine: Option<FieldSummary>,
    pub fp: Option<FieldSummary>,
    pub fn_: Option<FieldSummary>,
    pub wall_time: Option<FieldSummary>,
    pub theory_mse: Option<f64>,
}

impl ConditionSummary {
    fn from_records(
        rho: f64,
        alpha: f64,
        algorithm: Algorithm,
        records: &[&TrialRecord],
        theory_mse: Option<f64>,
    ) -> Self {
        let ok: Vec<&TrialMetrics> = records.iter().filter_map(|r| r.metrics.as_ref()).collect();
        let col = |f: &dyn Fn(&TrialMetrics) -> Option<f64>| {
            FieldSummary::from_values(&ok.iter().filter_map(|m| f(m)).collect::<Vec<_>>())
        };
        let converged = records.iter().filter(|r| r.converged).count();
        Self {
            rho,
            alpha,
            algorithm,
            trials: ok.len(),
            failures: records.len() - ok.len(),
            converged_frac: if records.is_empty() { 0.0 } else { converged as f64 / records.len() as f64 },
            mse: col(&|m| Some(m.mse)),
            cosine: col(&|m| Some(m.direction_cosine)),
            fp: col(&|m| m.fp),
            fn_: col(&|m| m.fn_),
            wall_time: FieldSummary::from_values(
                &records.iter().filter(|r| r.metrics.is_some()).map(|r| r.wall_time.as_secs_f64()).collect::<Vec<_>>(),
            ),
            theory_mse,
        }
    }

    fn csv_row(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mean = |s: &Option<FieldSummary>| num(s.map(|s| s.mean));
        vec![
            self.rho.to_string(),
            self.alpha.to_string(),
            self.algorithm.to_string(),
            self.trials.to_string(),
            self.failures.to_string(),
            self.converged_frac.to_string(),
            mean(&self.mse),
            num(self.mse.map(|s| s.std)),
            num(self.mse.map(|s| s.sem)),
            mean(&self.cosine),
            mean(&self.fp),
            mean(&self.fn_),
            mean(&self.wall_time),
            num(self.wall_time.map(|s| s.std)),
            num(self.theory_mse),
            num(self.mse.zip(self.theory_mse).map(|(s, t)| s.mean - t)),
        ]
    }
}

/// One row of the theory table.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRow {
    pub rho: f64,
    pub alpha: f64,
    /// Best point found, converged or not; `None` if the solver failed outright.
    pub point: Option<RSFixedPoint>,
    pub prediction: Option<RSPrediction>,
}

impl TheoryRow {
    pub fn converged(&self) -> bool {
        self.point.is_some_and(|p| p.converged)
    }

    fn csv_row(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NaN".into());
        let p = self.point.as_ref();
        let q = self.prediction.as_ref();
        vec![
            self.rho.to_string(),
            self.alpha.to_string(),
            num(p.map(|p| p.m)),
            num(p.map(|p| p.chi)),
            num(p.map(|p| p.q_hat)),
            num(p.map(|p| p.m_hat)),
            num(p.map(|p| p.q_big_hat)),
            num(q.map(|q| q.mse)),
            num(q.map(|q| q.fp)),
            num(q.map(|q| q.fn_)),
            num(q.map(|q| q.at_lhs)),
            q.map(|q| q.stable_rs).unwrap_or(false).to_string(),
            self.converged().to_string(),
        ]
    }
}

/// Solve the RS saddle point on the grid, continuing each `ρ` along `alphas`
/// in the given order. Points that fail to converge are kept and flagged.
pub fn theory_curves(rhos: &[f64], alphas: &[f64]) -> Vec<TheoryRow> {
    let mut rows = Vec::with_capacity(rhos.len() * alphas.len());
    for &rho in rhos {
        let mut previous: Option<RSFixedPoint> = None;
        for &alpha in alphas {
            let row = match RSParams::new(alpha, rho).and_then(|params| {
                rs_solve_with(&params, previous.filter(|p| p.converged).as_ref(), DEFAULT_TOL, DEFAULT_MAX_ITERS)
                    .map(|p| (p, params))
            }) {
                Ok((point, params)) => {
                    previous = Some(point);
                    TheoryRow {
                        rho,
                        alpha,
                        point: Some(point),
                        prediction: Some(RSPrediction::from_point(&point, &params)),
                    }
                }
                Err(_) => TheoryRow { rho, alpha, point: None, prediction: None },
            };
            rows.push(row);
        }
    }
    rows
}

/// [`theory_curves`] written to `out` with the theory header.
pub fn emit_theory_curves(rhos: &[f64], alphas: &[f64], out: &Path) -> Result<Vec<TheoryRow>, HarnessError> {
    let rows = theory_curves(rhos, alphas);
    write_csv(out, &THEORY_HEADER, rows.iter().map(TheoryRow::csv_row))?;
    Ok(rows)
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))
}

/// Everything a sweep produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<ConditionSummary>,
    pub theory: Vec<TheoryRow>,
    pub naive_traces: Vec<NaiveTrace>,
    /// One message per instance that could not be generated (its rows are absent).
    pub generation_failures: Vec<String>,
    /// Conditions in which every trial failed.
    pub failed_conditions: usize,
}

impl PlanReport {
    pub fn summary(&self, rho: f64, alpha: f64, algorithm: Algorithm) -> Option<&ConditionSummary> {
        self.summaries.iter().find(|s| s.rho == rho && s.alpha == alpha && s.algorithm == algorithm)
    }

    /// Records of one condition, in trial order.
    pub fn records_for(&self, rho: f64, alpha: f64, algorithm: Algorithm) -> Vec<&TrialRecord> {
        self.records.iter().filter(|r| r.rho == rho && r.alpha == alpha && r.algorithm == algorithm).collect()
    }

    /// Whether the sweep succeeded everywhere (exit status 0).
    pub fn fully_successful(&self) -> bool {
        self.failed_conditions == 0 && self.generation_failures.is_empty()
    }
}

/// Run every `(ρ, α, trial)` cell and write `trials.csv`, `summary.csv`,
/// `theory.csv` (and `naive_cavity_traces.csv` when that algorithm is
/// selected) under the plan's output directory. With `theory_only`, only the
/// theory table is produced. Naive cavity runs also get
/// `naive_cavity_status.csv` (sweeps used, convergence, halt reason).
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanReport, HarnessError> {
    plan.validate()?;
    fs::create_dir_all(&plan.output_dir)?;
    let theory = emit_theory_curves(&plan.rhos, &plan.alphas, &plan.output_dir.join("theory.csv"))?;
    if plan.theory_only {
        return Ok(PlanReport {
            records: Vec::new(),
            summaries: Vec::new(),
            theory,
            naive_traces: Vec::new(),
            generation_failures: Vec::new(),
            failed_conditions: 0,
        });
    }

    let tasks: Vec<(usize, usize, usize)> = (0..plan.rhos.len())
        .flat_map(|ri| (0..plan.alphas.len()).flat_map(move |ai| (0..plan.trials).map(move |t| (ri, ai, t))))
        .collect();
    let pool = thread_pool(plan.parallelism)?;
    let cells: Vec<CellOutput> =
        pool.install(|| tasks.par_iter().map(|&(ri, ai, t)| run_cell(plan, ri, ai, t)).collect());

    let mut records = Vec::new();
    let mut naive_traces = Vec::new();
    let mut generation_failures = Vec::new();
    for cell in cells {
        records.extend(cell.records);
        naive_traces.extend(cell.traces);
        if let Some(msg) = cell.generation_failure {
            eprintln!("instance generation failed: {msg}");
            generation_failures.push(msg);
        }
    }

    let mut summaries = Vec::new();
    for (ri, &rho) in plan.rhos.iter().enumerate() {
        for (ai, &alpha) in plan.alphas.iter().enumerate() {
            let row = &theory[ri * plan.alphas.len() + ai];
            let theory_mse = row.prediction.filter(|_| row.converged()).map(|p| p.mse);
            for &algorithm in &plan.algorithms {
                let rows: Vec<&TrialRecord> =
                    records.iter().filter(|r| r.rho == rho && r.alpha == alpha && r.algorithm == algorithm).collect();
                summaries.push(ConditionSummary::from_records(rho, alpha, algorithm, &rows, theory_mse));
            }
        }
    }
    let failed_conditions = summaries.iter().filter(|s| s.trials == 0).count();

    write_csv(&plan.output_dir.join("trials.csv"), &TRIAL_HEADER, records.iter().map(TrialRecord::csv_row))?;
    write_csv(&plan.output_dir.join("summary.csv"), &SUMMARY_HEADER, summaries.iter().map(ConditionSummary::csv_row))?;
    if plan.algorithms.contains(&Algorithm::NaiveCavity) {
        let rows = naive_traces.iter().flat_map(|t| {
            t.residuals.iter().enumerate().map(move |(i, r)| {
                vec![
                    t.rho.to_string(),
                    t.alpha.to_string(),
                    t.trial_index.to_string(),
                    (i + 1).to_string(),
                    r.to_string(),
                ]
            })
        });
        write_csv(&plan.output_dir.join("naive_cavity_traces.csv"), &NAIVE_TRACE_HEADER, rows)?;
        let status =
            naive_traces.iter().zip(records.iter().filter(|r| r.algorithm == Algorithm::NaiveCavity)).map(|(t, r)| {
                vec![
                    t.rho.to_string(),
                    t.alpha.to_string(),
                    t.trial_index.to_string(),
                    t.residuals.len().to_string(),
                    r.converged.to_string(),
                    t.halted.clone().unwrap_or_default(),
                ]
            });
        write_csv(&plan.output_dir.join("naive_cavity_status.csv"), &NAIVE_STATUS_HEADER, status)?;
    }

    Ok(PlanReport { records, summaries, theory, naive_traces, generation_failures, failed_conditions })
}

/// Runtime of one algorithm at one support size.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub k: usize,
    pub algorithm: Algorithm,
    pub records: Vec<TrialRecord>,
}

impl TimingRow {
    pub fn wall_time(&self) -> Option<FieldSummary> {
        FieldSummary::from_values(
            &self.records.iter().filter(|r| r.metrics.is_some()).map(|r| r.wall_time.as_secs_f64()).collect::<Vec<_>>(),
        )
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.metrics.is_none()).count()
    }

    fn csv_row(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let ok: Vec<&TrialRecord> = self.records.iter().filter(|r| r.metrics.is_some()).collect();
        let mse = FieldSummary::from_values(&ok.iter().filter_map(|r| r.metrics.map(|m| m.mse)).collect::<Vec<_>>());
        let iters = FieldSummary::from_values(&ok.iter().map(|r| r.inner_iterations as f64).collect::<Vec<_>>());
        let wt = self.wall_time();
        vec![
            self.k.to_string(),
            self.algorithm.to_string(),
            self.records.len().to_string(),
            self.failures().to_string(),
            num(wt.map(|s| s.mean)),
            num(wt.map(|s| s.std)),
            num(mse.map(|s| s.mean)),
            num(iters.map(|s| s.mean)),
        ]
    }
}

/// Runtime comparison at `M = 3N` with exactly `K` nonzeros for each `K` in
/// `plan.timing_ks`, every algorithm on the same instances, one thread.
/// Writes `timing.csv` (one row per `(K, algorithm)`).
pub fn run_timing_benchmark(plan: &ExperimentPlan) -> Result<Vec<TimingRow>, HarnessError> {
    plan.validate()?;
    let timed =
        plan.algorithms.iter().filter(|a| matches!(a, Algorithm::Rfpi | Algorithm::Cisr | Algorithm::Nort)).count();
    if timed < 2 {
        return Err(HarnessError::Config("timing needs at least two of rfpi, cisr, nort".into()));
    }
    if plan.timing_ks.is_empty() {
        return Err(HarnessError::Config("no support sizes for timing".into()));
    }
    const ALPHA: f64 = 3.0;
    let mut rows: Vec<TimingRow> = Vec::new();
    for (ki, &k) in plan.timing_ks.iter().enumerate() {
        let params = SignalParams { n: plan.n, rho: k as f64 / plan.n as f64, k_exact: Some(k) };
        let mut per_alg: Vec<Vec<TrialRecord>> = vec![Vec::with_capacity(plan.trials); plan.algorithms.len()];
        for t in 0..plan.trials {
            let instance = match ProblemInstance::generate(&params, ALPHA, timing_seed(plan.master_seed, ki, t)) {
                Ok(inst) => inst,
                Err(e) => {
                    eprintln!("instance generation failed: k={k} trial={t}: {e}");
                    continue;
                }
            };
            for (slot, &algorithm) in per_alg.iter_mut().zip(&plan.algorithms) {
                let (outcome, _) = run_algorithm(algorithm, &instance, plan);
                slot.push(record_for(algorithm, &instance, params.rho, ALPHA, t, outcome));
            }
        }
        rows.extend(plan.algorithms.iter().zip(per_alg).map(|(&algorithm, records)| TimingRow {
            k,
            algorithm,
            records,
        }));
    }
    fs::create_dir_all(&plan.output_dir)?;
    write_csv(&plan.output_dir.join("timing.csv"), &TIMING_HEADER, rows.iter().map(TimingRow::csv_row))?;
    Ok(rows)
}
