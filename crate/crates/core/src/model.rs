//! Problem instances: sparse Gaussian signals, Gaussian measurement
//! matrices and 1-bit sign measurements.
//!
//! Every random draw is a pure function of a 64-bit seed. Sub-streams
//! (signal, matrix, recovery init, ...) are derived with [`derive_seed`] so a
//! trial can be regenerated from `(master_seed, indices...)` alone.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::ModelError;

/// Seed labels for the independent streams of one trial.
pub mod stream {
    pub const SIGNAL: u64 = 1;
    pub const MATRIX: u64 = 2;
    pub const RFPI_INIT: u64 = 3;
}

const MAX_REGENERATIONS: usize = 64;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a path of indices.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(parent), |acc, &p| mix64(acc ^ mix64(p)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalParams {
    pub n: usize,
    pub rho: f64,
    /// When set, exactly this many uniformly chosen entries are nonzero.
    pub k_exact: Option<usize>,
}

impl SignalParams {
    pub fn bernoulli(n: usize, rho: f64) -> Self {
        Self { n, rho, k_exact: None }
    }

    /// Fixed support size `round(ρN)`, at least one.
    pub fn exact(n: usize, rho: f64) -> Self {
        let k = ((rho * n as f64).round() as usize).clamp(1, n.max(1));
        Self { n, rho, k_exact: Some(k) }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n == 0 {
            return Err(ModelError::InvalidParams("n must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(ModelError::InvalidParams(format!("rho = {} outside (0, 1]", self.rho)));
        }
        if let Some(k) = self.k_exact {
            if k == 0 || k > self.n {
                return Err(ModelError::InvalidParams(format!("k_exact = {k} outside [1, {}]", self.n)));
            }
        }
        Ok(())
    }
}

/// One trial's ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub x0: Array1<f64>,
    /// `M × N`, rows indexed by measurement.
    pub phi: Array2<f64>,
    pub y: Vec<i8>,
    pub seed: u64,
    pub alpha: f64,
}

/// Measurement matrix with each row multiplied by its sign bit.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedInstance {
    pub phi_folded: Array2<f64>,
}

/// Draw a sparse signal. Bernoulli(ρ) support unless `k_exact` is set;
/// nonzero entries are standard Gaussian. All-zero draws are resampled.
pub fn gen_signal(params: &SignalParams, rng_seed: u64) -> Result<Array1<f64>, ModelError> {
    params.validate()?;
    let mut rng = rng_from_seed(rng_seed);
    let n = params.n;
    loop {
        let mut x = Array1::<f64>::zeros(n);
        match params.k_exact {
            Some(k) => {
                let mut support = index::sample(&mut rng, n, k).into_vec();
                support.sort_unstable();
                for i in support {
                    x[i] = nonzero_gaussian(&mut rng);
                }
            }
            None => {
                for xi in x.iter_mut() {
                    if rng.gen::<f64>() < params.rho {
                        *xi = nonzero_gaussian(&mut rng);
                    }
                }
            }
        }
        if x.iter().any(|&v| v != 0.0) {
            return Ok(x);
        }
    }
}

fn nonzero_gaussian(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.sample(StandardNormal);
        if v != 0.0 {
            return v;
        }
    }
}

/// `m × n` matrix with i.i.d. `N(0, 1/n)` entries.
pub fn gen_matrix(m: usize, n: usize, rng_seed: u64) -> Array2<f64> {
    let mut rng = rng_from_seed(rng_seed);
    let scale = 1.0 / (n as f64).sqrt();
    Array2::from_shape_simple_fn((m, n), || scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn measure(phi: ArrayView2<f64>, x0: ArrayView1<f64>) -> Result<Vec<i8>, ModelError> {
    if phi.ncols() != x0.len() {
        return Err(ModelError::DimensionMismatch { expected: phi.ncols(), got: x0.len() });
    }
    phi.dot(&x0)
        .iter()
        .enumerate()
        .map(|(mu, &v)| {
            if v > 0.0 {
                Ok(1)
            } else if v < 0.0 {
                Ok(-1)
            } else {
                Err(ModelError::ZeroMeasurement(mu))
            }
        })
        .collect()
}

pub fn fold_signs(phi: ArrayView2<f64>, y: &[i8]) -> Result<FoldedInstance, ModelError> {
    if phi.nrows() != y.len() {
        return Err(ModelError::DimensionMismatch { expected: phi.nrows(), got: y.len() });
    }
    let mut phi_folded = phi.to_owned();
    for (mut row, &s) in phi_folded.rows_mut().into_iter().zip(y) {
        if s < 0 {
            row.mapv_inplace(|v| -v);
        }
    }
    Ok(FoldedInstance { phi_folded })
}

impl ProblemInstance {
    /// Build an instance with `m = round(alpha · n)` measurements.
    ///
    /// An exact-zero measurement triggers regeneration from a perturbed seed;
    /// `seed` on the result records the seed that was actually used.
    pub fn generate(params: &SignalParams, alpha: f64, seed: u64) -> Result<Self, ModelError> {
        params.validate()?;
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(ModelError::InvalidParams(format!("alpha = {alpha} must be positive")));
        }
        let n = params.n;
        let m = ((alpha * n as f64).round() as usize).max(1);
        for attempt in 0..MAX_REGENERATIONS {
            let s = if attempt == 0 { seed } else { derive_seed(seed, &[u64::MAX, attempt as u64]) };
            let x0 = gen_signal(params, derive_seed(s, &[stream::SIGNAL]))?;
            let phi = gen_matrix(m, n, derive_seed(s, &[stream::MATRIX]));
            match measure(phi.view(), x0.view()) {
                Ok(y) => return Ok(Self { x0, phi, y, seed: s, alpha: m as f64 / n as f64 }),
                Err(ModelError::ZeroMeasurement(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(ModelError::RegenerationExhausted(MAX_REGENERATIONS))
    }

    /// Assemble an instance from explicit parts, checking the sign invariant.
    pub fn from_parts(x0: Array1<f64>, phi: Array2<f64>, seed: u64) -> Result<Self, ModelError> {
        if x0.iter().all(|&v| v == 0.0) {
            return Err(ModelError::InvalidParams("x0 must have a nonzero entry".into()));
        }
        let y = measure(phi.view(), x0.view())?;
        let alpha = phi.nrows() as f64 / phi.ncols() as f64;
        Ok(Self { x0, phi, y, seed, alpha })
    }

    pub fn n(&self) -> usize {
        self.phi.ncols()
    }

    pub fn m(&self) -> usize {
        self.phi.nrows()
    }

    pub fn support_size(&self) -> usize {
        self.x0.iter().filter(|&&v| v != 0.0).count()
    }

    pub fn folded(&self) -> FoldedInstance {
        fold_signs(self.phi.view(), &self.y).expect("instance dimensions are consistent")
    }

    /// Plain-text dump: `N M seed` header, `M` rows of `Φ`, then `x⁰`, then `y`.
    /// Floats use the shortest round-tripping representation.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.n(), self.m(), self.seed);
        for row in self.phi.rows() {
            out.push_str(&join(row.iter()));
            out.push('\n');
        }
        out.push_str(&join(self.x0.iter()));
        out.push('\n');
        out.push_str(&join(self.y.iter()));
        out.push('\n');
        out
    }

    pub fn load(text: &str) -> Result<Self, ModelError> {
        let bad = |s: &str| ModelError::Parse(s.to_string());
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
        if header.len() != 3 {
            return Err(bad("header needs N M seed"));
        }
        let n: usize = header[0].parse().map_err(|_| bad("N"))?;
        let m: usize = header[1].parse().map_err(|_| bad("M"))?;
        let seed: u64 = header[2].parse().map_err(|_| bad("seed"))?;
        let mut data = Vec::with_capacity(m * n);
        for mu in 0..m {
            let row = parse_floats(lines.next().ok_or_else(|| bad("missing row"))?)?;
            if row.len() != n {
                return Err(ModelError::Parse(format!("row {mu} has {} entries", row.len())));
            }
            data.extend(row);
        }
        let phi = Array2::from_shape_vec((m, n), data).map_err(|e| ModelError::Parse(e.to_string()))?;
        let x0 = Array1::from(parse_floats(lines.next().ok_or_else(|| bad("missing x0"))?)?);
        if x0.len() != n {
            return Err(bad("x0 length"));
        }
        let y: Vec<i8> = lines
            .next()
            .ok_or_else(|| bad("missing y"))?
            .split_whitespace()
            .map(|t| t.parse::<i8>().map_err(|_| bad("y entry")))
            .collect::<Result<_, _>>()?;
        let inst = Self::from_parts(x0, phi, seed)?;
        if inst.y != y {
            return Err(bad("stored signs disagree with sign(Φx⁰)"));
        }
        Ok(inst)
    }
}

fn join<T: std::fmt::Display>(it: impl Iterator<Item = T>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_floats(line: &str) -> Result<Vec<f64>, ModelError> {
    line.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| ModelError::Parse(format!("bad float {t:?}"))))
        .collect()
}
