use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use onebit_cs::harness::config::Settings;
use onebit_cs::harness::{run_plan, run_timing_benchmark, ExperimentPlan};

/// Monte-Carlo sweeps, runtime benchmark and replica-symmetric theory curves
/// for 1-bit compressed sensing. Results are CSV files in the output directory.
#[derive(Debug, Parser)]
#[command(name = "onebit-cs", version)]
struct Cli {
    /// Plan file of `key = value` lines (keys are the long flag names); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run the runtime benchmark (M = 3N, K from --timing-ks) instead of the sweep.
    #[arg(long)]
    timing: bool,
    /// 1000 trials per condition unless --trials is given.
    #[arg(long)]
    full: bool,

    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated, fractions allowed (e.g. `1,2,3`).
    #[arg(long)]
    alphas: Option<String>,
    /// Comma-separated, fractions allowed (e.g. `1/32,1/8`).
    #[arg(long)]
    rhos: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of rfpi, cisr, nort, naive_cavity.
    #[arg(long)]
    algos: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only write the theory table.
    #[arg(long)]
    theory_only: bool,
    /// Worker threads (falls back to ONEBIT_CS_THREADS, then the core count).
    #[arg(long)]
    parallelism: Option<usize>,
    /// RFPI step size.
    #[arg(long)]
    delta: Option<f64>,
    /// RFPI initial λ.
    #[arg(long)]
    lambda0: Option<f64>,
    /// RFPI λ growth factor per outer loop.
    #[arg(long)]
    lambda_growth: Option<f64>,
    /// CISR B shrink factor per outer loop.
    #[arg(long)]
    b_shrink: Option<f64>,
    /// Inner and outer convergence tolerance of both recoverers.
    #[arg(long)]
    tol: Option<f64>,
    /// Bernoulli support instead of exactly round(ρN) nonzeros.
    #[arg(long)]
    bernoulli: bool,
    /// Sweep cap for the naive cavity iteration.
    #[arg(long)]
    naive_max_iters: Option<usize>,
    /// Support sizes for --timing (comma-separated).
    #[arg(long)]
    timing_ks: Option<String>,
}

impl Cli {
    fn settings(&self) -> Result<Settings, String> {
        let mut settings = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                Settings::parse(&text).map_err(|e| e.to_string())?
            }
            None => Settings::default(),
        };
        let mut cli = Settings::default();
        let mut put = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                cli.set(key, v);
            }
        };
        put("n", self.n.map(|v| v.to_string()));
        put("alphas", self.alphas.clone());
        put("rhos", self.rhos.clone());
        put("trials", self.trials.map(|v| v.to_string()).or_else(|| self.full.then(|| "1000".into())));
        put("seed", self.seed.map(|v| v.to_string()));
        put("algos", self.algos.clone());
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("theory-only", self.theory_only.then(|| "true".into()));
        put("parallelism", self.parallelism.map(|v| v.to_string()));
        put("delta", self.delta.map(|v| v.to_string()));
        put("lambda0", self.lambda0.map(|v| v.to_string()));
        put("lambda-growth", self.lambda_growth.map(|v| v.to_string()));
        put("b-shrink", self.b_shrink.map(|v| v.to_string()));
        put("tol", self.tol.map(|v| v.to_string()));
        put("bernoulli", self.bernoulli.then(|| "true".into()));
        put("naive-max-iters", self.naive_max_iters.map(|v| v.to_string()));
        put("timing-ks", self.timing_ks.clone());
        settings.overlay(&cli);
        Ok(settings)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let plan: ExperimentPlan = match cli.settings().and_then(|s| s.to_plan().map_err(|e| e.to_string())) {
        Ok(plan) => plan,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    if cli.timing {
        let plan = ExperimentPlan { parallelism: 1, ..plan };
        return match run_timing_benchmark(&plan) {
            Ok(rows) => {
                let mut out = std::io::stdout().lock();
                for row in &rows {
                    let wt = row.wall_time();
                    let _ = writeln!(
                        out,
                        "K={:<3} {:<6} mean {:.6} s  sd {:.6} s  failures {}",
                        row.k,
                        row.algorithm.as_str(),
                        wt.map_or(f64::NAN, |s| s.mean),
                        wt.map_or(f64::NAN, |s| s.std),
                        row.failures()
                    );
                }
                if rows.iter().any(|r| r.failures() == r.records.len()) {
                    ExitCode::from(2)
                } else {
                    ExitCode::SUCCESS
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        };
    }

    match run_plan(&plan) {
        Ok(report) => {
            // a closed pipe (e.g. `| head`) must not abort the run
            let mut out = std::io::stdout().lock();
            for s in &report.summaries {
                let _ = writeln!(
                    out,
                    "rho={:<8} alpha={:<4} {:<12} mse {:.4} (theory {})  converged {:.2}  failures {}",
                    s.rho,
                    s.alpha,
                    s.algorithm.as_str(),
                    s.mse.map_or(f64::NAN, |m| m.mean),
                    s.theory_mse.map_or("n/a".to_string(), |t| format!("{t:.4}")),
                    s.converged_frac,
                    s.failures
                );
            }
            let _ = writeln!(out, "wrote results to {}", plan.output_dir.display());
            if report.fully_successful() {
                ExitCode::SUCCESS
            } else {
                eprintln!(
                    "{} condition(s) failed entirely, {} instance(s) could not be generated",
                    report.failed_conditions,
                    report.generation_failures.len()
                );
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                onebit_cs::HarnessError::Config(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
