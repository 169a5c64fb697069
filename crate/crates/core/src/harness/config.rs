//! Flat `key = value` plan files. Keys are the CLI flag names without the
//! leading dashes; later sources override earlier ones.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use super::{Algorithm, ExperimentPlan};
use crate::error::HarnessError;

pub const THREADS_ENV: &str = "ONEBIT_CS_THREADS";

const KNOWN_KEYS: &[&str] = &[
    "n",
    "alphas",
    "rhos",
    "trials",
    "seed",
    "algos",
    "out",
    "theory-only",
    "parallelism",
    "delta",
    "lambda0",
    "lambda-growth",
    "b-shrink",
    "tol",
    "bernoulli",
    "naive-max-iters",
    "timing-ks",
];

/// Ordered key-value settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    /// Parse `key = value` lines; `#` starts a comment. `key` alone means `true`.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = match line.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => (line, "true"),
            };
            let key = key.trim_start_matches("--").replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(HarnessError::Config(format!("line {}: unknown key {key:?}", lineno + 1)));
            }
            map.insert(key, value.to_string());
        }
        Ok(Self(map))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn overlay(&mut self, other: &Settings) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, HarnessError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => {
                v.parse::<T>().map(Some).map_err(|_| HarnessError::Config(format!("cannot parse {key} = {v:?}")))
            }
        }
    }

    fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, HarnessError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse_number::<T>(s).ok_or_else(|| HarnessError::Config(format!("bad entry {s:?} in {key}"))))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    /// Build a plan on top of [`ExperimentPlan::default`].
    pub fn to_plan(&self) -> Result<ExperimentPlan, HarnessError> {
        let mut plan = ExperimentPlan::default();
        if let Some(v) = self.get("n")? {
            plan.n = v;
        }
        if let Some(v) = self.get_list::<f64>("alphas")? {
            plan.alphas = v;
        }
        if let Some(v) = self.get_list::<f64>("rhos")? {
            plan.rhos = v;
        }
        if let Some(v) = self.get("trials")? {
            plan.trials = v;
        }
        if let Some(v) = self.get("seed")? {
            plan.master_seed = v;
        }
        if let Some(v) = self.0.get("algos") {
            plan.algorithms = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<Algorithm>().map_err(HarnessError::Config))
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = self.0.get("out") {
            plan.output_dir = PathBuf::from(v);
        }
        if let Some(v) = self.get("theory-only")? {
            plan.theory_only = v;
        }
        if let Some(v) = self.get("bernoulli")? {
            plan.bernoulli_support = v;
        }
        plan.parallelism = match self.get("parallelism")? {
            Some(p) => p,
            None => std::env::var(THREADS_ENV).ok().and_then(|s| s.parse().ok()).unwrap_or(plan.parallelism),
        };
        if let Some(v) = self.get("delta")? {
            plan.rfpi_cfg.delta = v;
        }
        if let Some(v) = self.get("lambda0")? {
            plan.rfpi_cfg.lambda0 = v;
        }
        if let Some(v) = self.get("lambda-growth")? {
            plan.rfpi_cfg.lambda_growth = v;
        }
        if let Some(v) = self.get("b-shrink")? {
            plan.cisr_cfg.b_shrink = v;
        }
        if let Some(tol) = self.get::<f64>("tol")? {
            plan.rfpi_cfg.inner_tol = tol;
            plan.rfpi_cfg.outer_tol = tol;
            plan.cisr_cfg.inner_tol = tol;
            plan.cisr_cfg.outer_tol = tol;
        }
        if let Some(v) = self.get("naive-max-iters")? {
            plan.naive_max_iters = v;
        }
        if let Some(v) = self.get_list::<usize>("timing-ks")? {
            plan.timing_ks = v;
        }
        plan.validate()?;
        Ok(plan)
    }
}

/// Accepts plain numbers and simple fractions like `1/8`.
fn parse_number<T: FromStr>(s: &str) -> Option<T> {
    if let Ok(v) = s.parse::<T>() {
        return Some(v);
    }
    let (a, b) = s.split_once('/')?;
    let q = a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?;
    q.to_string().parse::<T>().ok()
}
