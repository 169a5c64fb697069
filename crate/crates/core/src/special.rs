//! Scalar special functions and single-site potentials.
//!
//! Everything here is a pure function of its arguments. The measure-zero
//! kinks of the piecewise potentials are resolved as follows:
//! `f'(0) = 0`, `f''(0) = 0` and `g''(±1) = 0`. This keeps the operators
//! consistent with the `max(·, 0)` form of the shrinkage step.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `1/sqrt(2π)`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Above this argument the upper tail is evaluated as density times Mills ratio.
const TAIL_SWITCH: f64 = 8.0;

/// Standard normal density.
#[inline]
pub fn gauss_density(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Upper tail of the standard normal, `H(x) = ∫_x^∞ Dz`.
///
/// Uses `erfc` on the bulk and a Lentz continued fraction for the Mills
/// ratio when `x > 8`, where `erfc` starts losing relative accuracy.
pub fn gauss_tail(x: f64) -> f64 {
    debug_assert!(!x.is_nan(), "gauss_tail(NaN)");
    if x > TAIL_SWITCH {
        gauss_density(x) * mills_ratio(x)
    } else if x < -TAIL_SWITCH {
        1.0 - gauss_density(x) * mills_ratio(-x)
    } else {
        0.5 * libm::erfc(x * FRAC_1_SQRT_2)
    }
}

/// Mills ratio `R(x) = H(x) / φ(x)` for large positive `x`, via the
/// continued fraction `1/(x + 1/(x + 2/(x + 3/(x + ...))))`.
fn mills_ratio(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    // modified Lentz on b0 = x, a_k = k, b_k = x
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..200 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// One-sided quadratic `f(u) = (u²/2) Θ(-u)`.
#[inline]
pub fn f_pot(u: f64) -> f64 {
    if u < 0.0 {
        0.5 * u * u
    } else {
        0.0
    }
}

#[inline]
pub fn f_prime(u: f64) -> f64 {
    if u < 0.0 {
        u
    } else {
        0.0
    }
}

#[inline]
pub fn f_second(u: f64) -> f64 {
    if u < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Shrinkage potential `g(u) = ((|u| - 1)²/2) Θ(|u| - 1)`.
#[inline]
pub fn g_pot(u: f64) -> f64 {
    let excess = u.abs() - 1.0;
    if excess > 0.0 {
        0.5 * excess * excess
    } else {
        0.0
    }
}

/// `g'(u)`: soft threshold with unit threshold.
#[inline]
pub fn g_prime(u: f64) -> f64 {
    soft_threshold(u, 1.0)
}

#[inline]
pub fn g_second(u: f64) -> f64 {
    if u.abs() > 1.0 {
        1.0
    } else {
        0.0
    }
}

/// `sign(h) · max(|h| - t, 0)`, the proximal map of `t·|x|`.
#[inline]
pub fn soft_threshold(h: f64, t: f64) -> f64 {
    debug_assert!(t > 0.0, "soft_threshold needs a positive threshold, got {t}");
    let excess = h.abs() - t;
    if excess > 0.0 {
        excess.copysign(h)
    } else {
        0.0
    }
}

/// Closed-form value of `min_x { (Q̂/2) x² - w x + |x| }`.
///
/// Returns `None` when `q_big_hat` is not strictly positive.
pub fn phi_min(w: f64, q_big_hat: f64) -> Option<f64> {
    if q_big_hat <= 0.0 || q_big_hat.is_nan() {
        return None;
    }
    Some(-g_pot(w) / q_big_hat)
}

/// Minimizer `x*(w, Q̂) = g'(w)/Q̂` of the same single-site cost.
pub fn phi_minimizer(w: f64, q_big_hat: f64) -> Option<f64> {
    if q_big_hat <= 0.0 || q_big_hat.is_nan() {
        return None;
    }
    Some(g_prime(w) / q_big_hat)
}

/// `arctan(sqrt(ρ - m²)/m)` on the positive-overlap branch, `π/2` at `m = 0`.
pub(crate) fn overlap_angle(m: f64, rho: f64) -> f64 {
    let s = (rho - m * m).max(0.0).sqrt();
    if m <= 0.0 {
        PI / 2.0
    } else {
        (s / m).atan()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on [a, b] with n (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn tail_at_zero_is_half() {
        assert_eq!(gauss_tail(0.0), 0.5);
    }

    #[test]
    fn tail_at_one_matches_quadrature() {
        let q = simpson(gauss_density, 1.0, 40.0, 400_000);
        assert!((q - 0.158_655_253_931_457).abs() < 1e-12);
        assert!((gauss_tail(1.0) - q).abs() < 1e-12);
    }

    #[test]
    fn tail_matches_quadrature_on_grid() {
        for i in -30..=30 {
            let x = i as f64 * 0.25;
            let q = if x >= 0.0 {
                simpson(gauss_density, x, 40.0, 400_000)
            } else {
                1.0 - simpson(gauss_density, -x, 40.0, 400_000)
            };
            assert!((gauss_tail(x) - q).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn tail_branches_join_smoothly() {
        let below = 0.5 * libm::erfc(TAIL_SWITCH * FRAC_1_SQRT_2);
        let above = gauss_density(TAIL_SWITCH) * mills_ratio(TAIL_SWITCH);
        assert!(((below - above) / below).abs() < 1e-12);
        // deep tail stays positive and finite
        assert!(gauss_tail(30.0) > 0.0);
        assert!(gauss_tail(30.0) < 1e-190);
    }

    #[test]
    fn potential_branches() {
        assert_eq!(f_prime(-2.0), -2.0);
        assert_eq!(f_prime(3.0), 0.0);
        assert_eq!(f_prime(0.0), 0.0);
        assert_eq!(f_second(-0.5), 1.0);
        assert_eq!(f_second(0.0), 0.0);
        assert_eq!(g_prime(2.5), 1.5);
        assert_eq!(g_prime(-0.3), 0.0);
        assert!((g_prime(-1.7) + 0.7).abs() < 1e-15);
        assert_eq!(g_second(1.0), 0.0);
        assert_eq!(g_second(-1.0), 0.0);
        assert_eq!(g_second(1.5), 1.0);
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(2.0, 0.5), 1.5);
        assert_eq!(soft_threshold(0.4, 0.5), 0.0);
        assert_eq!(soft_threshold(-2.0, 1.0), -1.0);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_min(0.5, 1.0), Some(0.0));
        assert_eq!(phi_min(2.0, 1.0), Some(-0.5));
        assert_eq!(phi_min(2.0, 0.0), None);
        assert_eq!(phi_min(2.0, -1.0), None);
        assert_eq!(phi_minimizer(3.0, 2.0), Some(1.0));
    }

    #[test]
    fn phi_matches_brute_force_grid() {
        for &qh in &[0.5, 1.0, 2.0] {
            for i in 0..=32 {
                let w = -4.0 + 0.25 * i as f64;
                let cost = |x: f64| 0.5 * qh * x * x - w * x + x.abs();
                let mut best = f64::INFINITY;
                let steps = 400_000;
                for k in 0..=steps {
                    let x = -20.0 + 40.0 * k as f64 / steps as f64;
                    best = best.min(cost(x));
                }
                let closed = phi_min(w, qh).unwrap();
                assert!((closed - best).abs() < 1e-6, "w={w} qh={qh}: {closed} vs {best}");
            }
        }
    }

    #[test]
    fn angle_branch() {
        assert!((overlap_angle(0.0, 0.25) - PI / 2.0).abs() < 1e-15);
        assert_eq!(overlap_angle(0.5, 0.25), 0.0);
    }
}
