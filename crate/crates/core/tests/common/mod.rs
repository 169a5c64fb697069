//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code)]

use onebit_cs::theory::{rs_free_energy, RSFixedPoint, RSParams};

/// Composite Simpson rule with `intervals` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Upper Gaussian tail by quadrature (independent of the library's erfc path).
pub fn tail_by_quadrature(x: f64) -> f64 {
    if x >= 0.0 {
        simpson(std_normal_pdf, x, x + 40.0, 200_000)
    } else {
        1.0 - tail_by_quadrature(-x)
    }
}

/// Free-energy variables in the argument order of `rs_free_energy`:
/// `[χ, m, q̂, m̂, Q̂]`.
pub type FreeVars = [f64; 5];

pub fn to_free_vars(p: &RSFixedPoint) -> FreeVars {
    [p.chi, p.m, p.q_hat, p.m_hat, p.q_big_hat]
}

pub fn free_energy(v: &FreeVars, params: &RSParams) -> Option<f64> {
    rs_free_energy(v[0], v[1], v[2], v[3], v[4], params).ok()
}

fn fd_step(x: f64) -> f64 {
    1e-5 * x.abs().max(1e-2)
}

/// Centered finite-difference gradient of the free energy.
pub fn free_energy_gradient(v: &FreeVars, params: &RSParams) -> Option<FreeVars> {
    let mut g = [0.0; 5];
    for i in 0..5 {
        let mut h = fd_step(v[i]);
        if i == 1 {
            // the free energy has a square-root edge at m = √ρ
            h = h.min(1e-3 * (params.rho.sqrt() - v[1]));
        }
        let mut up = *v;
        let mut down = *v;
        up[i] += h;
        down[i] -= h;
        g[i] = (free_energy(&up, params)? - free_energy(&down, params)?) / (2.0 * h);
    }
    Some(g)
}

fn solve5(mut a: [[f64; 5]; 5], mut b: [f64; 5]) -> Option<[f64; 5]> {
    for col in 0..5 {
        let piv = (col..5).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..5 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (entry, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *entry -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 5];
    for row in (0..5).rev() {
        let s: f64 = (row + 1..5).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn norm(v: &FreeVars) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct extremization of the free energy: Newton's method on its
/// finite-difference gradient with a finite-difference Hessian and
/// backtracking on the gradient norm. Uses nothing but `rs_free_energy`.
pub fn extremize_free_energy(start: FreeVars, params: &RSParams, max_steps: usize) -> Option<FreeVars> {
    let mut v = start;
    let mut g = free_energy_gradient(&v, params)?;
    for _ in 0..max_steps {
        if norm(&g) < 1e-11 {
            break;
        }
        let mut hess = [[0.0; 5]; 5];
        for j in 0..5 {
            let h = 1e2 * fd_step(v[j]);
            let mut up = v;
            let mut down = v;
            up[j] += h;
            down[j] -= h;
            let gu = free_energy_gradient(&up, params)?;
            let gd = free_energy_gradient(&down, params)?;
            for i in 0..5 {
                hess[i][j] = (gu[i] - gd[i]) / (2.0 * h);
            }
        }
        let step = solve5(hess, g.map(|x| -x))?;
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-6 {
            let mut trial = v;
            for i in 0..5 {
                trial[i] += t * step[i];
            }
            if let Some(gt) = free_energy_gradient(&trial, params) {
                if norm(&gt) < norm(&g) {
                    v = trial;
                    g = gt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Some(v)
}

/// Brute-force single-site minimum: coarse scan, then golden section.
pub fn brute_phi(w: f64, q: f64) -> f64 {
    let cost = |x: f64| 0.5 * q * x * x - w * x + x.abs();
    let span = (w.abs() + 1.0) / q + 1.0;
    let steps = 20_000;
    let mut best = -span;
    for i in 0..=steps {
        let x = -span + 2.0 * span * i as f64 / steps as f64;
        if cost(x) < cost(best) {
            best = x;
        }
    }
    let h = 2.0 * span / steps as f64;
    let (mut a, mut b) = (best - h, best + h);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if cost(c) < cost(d) {
            b = d;
        } else {
            a = c;
        }
    }
    cost(0.5 * (a + b)).min(cost(0.0))
}
