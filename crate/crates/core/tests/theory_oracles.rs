mod common;

use common::{extremize_free_energy, free_energy_gradient, simpson, std_normal_pdf, to_free_vars};
use onebit_cs::special::{gauss_tail, phi_minimizer};
use onebit_cs::theory::{
    phi_average, rs_predict, rs_solve, rs_solve_all_starts, rs_stability, RSParams, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const RHOS: [f64; 4] = [1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0];

fn alpha_grid() -> Vec<f64> {
    (1..=12).map(|i| 0.5 * i as f64).collect()
}

#[test]
fn fixed_points_are_stationary_points_of_the_free_energy() {
    for rho in RHOS {
        for alpha in alpha_grid() {
            let params = RSParams::new(alpha, rho).unwrap();
            let p = rs_solve(&params, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
            assert!(p.converged, "alpha={alpha} rho={rho} residual={}", p.residual);
            assert!(p.m > 0.0 && p.m <= rho.sqrt() && p.chi > 0.0 && p.q_hat > 0.0);
            let g = free_energy_gradient(&to_free_vars(&p), &params).unwrap();
            assert!(g.iter().all(|d| d.abs() < 1e-5), "alpha={alpha} rho={rho} grad={g:?}");
        }
    }
}

#[test]
fn direct_extremization_recovers_the_fixed_point() {
    for (alpha, rho) in [(3.0, 0.125), (2.0, 0.125), (3.0, 0.25), (5.0, 1.0 / 16.0)] {
        let params = RSParams::new(alpha, rho).unwrap();
        let p = rs_solve(&params, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        let target = to_free_vars(&p);
        let start = [target[0] * 1.08, target[1] * 0.93, target[2] * 1.1, target[3] * 0.9, target[4] * 1.05];
        let found = extremize_free_energy(start, &params, 100).unwrap();
        assert!((found[1] - p.m).abs() < 1e-4, "alpha={alpha} rho={rho}: {} vs {}", found[1], p.m);
    }
}

#[test]
fn overlap_grows_with_measurements() {
    let mut last = 0.0;
    for alpha in alpha_grid() {
        let p = rs_solve(&RSParams::new(alpha, 0.125).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        assert!(p.m >= last, "alpha={alpha}");
        last = p.m;
    }
}

#[test]
fn every_start_reaches_the_same_point() {
    for rho in RHOS {
        let mut previous = None;
        for alpha in alpha_grid() {
            let params = RSParams::new(alpha, rho).unwrap();
            let all = rs_solve_all_starts(&params, previous.as_ref(), DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
            let converged: Vec<_> = all.iter().filter(|p| p.converged).collect();
            assert!(!converged.is_empty());
            for p in &converged {
                let a = to_free_vars(p);
                let b = to_free_vars(converged[0]);
                assert!(a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() < 1e-8), "alpha={alpha} rho={rho}");
            }
            previous = Some(*converged[0]);
        }
    }
}

#[test]
fn phi_average_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (q_hat, m_hat, q_big_hat, rho): (f64, f64, f64, f64) = (0.4, 2.5, 1.3, 0.125);
    let samples = 10_000_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let z: f64 = rng.sample(StandardNormal);
        let x0: f64 = if rng.gen::<f64>() < rho { rng.sample(StandardNormal) } else { 0.0 };
        let w = q_hat.sqrt() * z + m_hat * x0;
        // single-site minimum by its minimizer
        let x = phi_minimizer(w, q_big_hat).unwrap();
        let v = 0.5 * q_big_hat * x * x - w * x + x.abs();
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / samples as f64;
    let se = ((sum_sq / samples as f64 - mean * mean) / samples as f64).sqrt();
    let exact = phi_average(q_hat, m_hat, q_big_hat, rho);
    assert!((mean - exact).abs() < 3.0 * se, "mc {mean} +- {se} vs {exact}");
}

#[test]
fn phi_average_vanishes_inside_dead_zone() {
    assert!(phi_average(1e-6, 0.0, 1.0, 0.1).abs() < 1e-300);
}

#[test]
fn support_error_rates_match_monte_carlo() {
    let params = RSParams::new(3.0, 0.125).unwrap();
    let p = rs_solve(&params, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
    let pred = rs_predict(&params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples = 1_000_000;
    let (mut zeros, mut fp, mut nonzeros, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for _ in 0..samples {
        let z: f64 = rng.sample(StandardNormal);
        let nonzero = rng.gen::<f64>() < params.rho;
        let x0: f64 = if nonzero { rng.sample(StandardNormal) } else { 0.0 };
        let x = phi_minimizer(p.q_hat.sqrt() * z + p.m_hat * x0, p.q_big_hat).unwrap();
        if nonzero {
            nonzeros += 1;
            fn_ += (x == 0.0) as usize;
        } else {
            zeros += 1;
            fp += (x != 0.0) as usize;
        }
    }
    let check = |hits: usize, total: usize, expect: f64| {
        let f = hits as f64 / total as f64;
        let se = (expect * (1.0 - expect) / total as f64).sqrt();
        assert!((f - expect).abs() < 3.0 * se, "{f} vs {expect} (se {se})");
    };
    check(fp, zeros, pred.fp);
    check(fn_, nonzeros, pred.fn_);
}

#[test]
fn stability_matches_perturbation_product() {
    for rho in RHOS {
        for alpha in [0.5, 2.0, 4.0, 6.0] {
            let params = RSParams::new(alpha, rho).unwrap();
            let p = rs_solve(&params, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
            let s = (rho - p.m * p.m).sqrt();
            // measurement side: ∫_0^∞ Dz H(m z / s), by quadrature
            let overlap = simpson(|z| std_normal_pdf(z) * gauss_tail(p.m * z / s), 0.0, 40.0, 400_000);
            // site side: probability of leaving the dead zone, by quadrature over x⁰
            let v0 = p.q_hat;
            let active_zero = 2.0 * simpson(std_normal_pdf, 1.0 / v0.sqrt(), 60.0, 400_000);
            let active_nonzero = simpson(
                |x| {
                    std_normal_pdf(x)
                        * (gauss_tail((1.0 - p.m_hat * x) / v0.sqrt()) + gauss_tail((1.0 + p.m_hat * x) / v0.sqrt()))
                },
                -40.0,
                40.0,
                400_000,
            );
            let active = (1.0 - rho) * active_zero + rho * active_nonzero;
            let product = active / (p.q_big_hat * p.q_big_hat) * (2.0 * alpha / (p.chi * p.chi)) * overlap;
            let (lhs, stable) = rs_stability(&p, &params);
            assert!((product - 1.0 - lhs).abs() < 1e-8, "alpha={alpha} rho={rho}: {product} vs {}", lhs + 1.0);
            assert_eq!(stable, product < 1.0);
        }
    }
}

#[test]
fn stability_is_continuous_along_the_branch() {
    let mut previous: Option<f64> = None;
    for i in 0..=550 {
        let alpha = 0.5 + 0.01 * i as f64;
        let params = RSParams::new(alpha, 0.125).unwrap();
        let p = rs_solve(&params, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        let (lhs, _) = rs_stability(&p, &params);
        if let Some(prev) = previous {
            assert!((lhs - prev).abs() < 0.05 * prev.abs().max(1.0), "jump at alpha={alpha}");
            assert!(lhs.signum() == prev.signum() || lhs.abs() < 0.05, "sign flip at alpha={alpha}");
        }
        previous = Some(lhs);
    }
}

#[test]
fn false_positives_persist_at_large_alpha() {
    for rho in RHOS {
        let pred = rs_predict(&RSParams::new(6.0, rho).unwrap()).unwrap();
        assert!(pred.fp > 0.01, "rho={rho} fp={}", pred.fp);
        assert!((pred.mse - 2.0 * (1.0 - pred.direction_cosine)).abs() < 1e-15);
        assert!((0.0..=1.0).contains(&pred.fn_));
    }
}
