//! Quadrature for integrands with inverse-square-root endpoint singularities.
//!
//! The substitution `z = mid + half cos u` turns
//! `integral_lo^hi f(z) / sqrt((z - lo)(hi - z)) dz` into `integral_0^pi f(z(u)) du`,
//! which is smooth whenever `f` is. That integral is then evaluated by
//! composite Simpson with Richardson extrapolation, doubling the panel count
//! until two successive extrapolants agree.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub abs_error: f64,
    pub evaluations: usize,
}

const MIN_LEVEL: usize = 4;
const MAX_LEVEL: usize = 22;

/// Composite Simpson on `[a, b]` with Richardson extrapolation.
///
/// Stops once successive extrapolants differ by at most `tol`, or after
/// `2^22` panels. The returned `abs_error` is that last difference.
pub fn simpson_richardson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        };
    }
    let width = b - a;
    let mut evaluations = 2;
    // trapezoid sums T_n with n = 2^level panels
    let mut trap = 0.5 * width * (f(a) + f(b));
    let mut simpson_prev: Option<f64> = None;
    let mut richardson_prev: Option<f64> = None;
    let mut best = trap;
    let mut err = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        let panels = 1usize << level;
        let h = width / panels as f64;
        let mut mid_sum = 0.0;
        for i in (1..panels).step_by(2) {
            mid_sum += f(a + i as f64 * h);
        }
        evaluations += panels / 2;
        let trap_next = 0.5 * trap + h * mid_sum;
        let simpson = (4.0 * trap_next - trap) / 3.0;
        trap = trap_next;
        if let Some(sp) = simpson_prev {
            let richardson = (16.0 * simpson - sp) / 15.0;
            if let Some(rp) = richardson_prev {
                err = (richardson - rp).abs();
                best = richardson;
                if level >= MIN_LEVEL && err <= tol {
                    break;
                }
            } else {
                best = richardson;
            }
            richardson_prev = Some(richardson);
        } else {
            best = simpson;
        }
        simpson_prev = Some(simpson);
    }
    QuadResult {
        value: best,
        abs_error: err,
        evaluations,
    }
}

/// `integral_lo^hi f(z) / sqrt((z - lo)(hi - z)) dz` for smooth `f`.
///
/// Equals `pi * f(lo)` in the limit `lo == hi`.
pub fn arcsine_weighted<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> QuadResult {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    simpson_richardson(|u| f(mid + half * u.cos()), 0.0, std::f64::consts::PI, tol)
}

/// `integral_a^b g(u) du` split at `knots`, each piece mapped by
/// `u = lo + (hi - lo)(1 - cos v)/2` so that square-root corners at the
/// knots become smooth.
pub fn simpson_piecewise<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, knots: &[f64], tol: f64) -> QuadResult {
    let mut cuts: Vec<f64> = knots.iter().copied().filter(|&k| k > a && k < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.insert(0, a);
    cuts.push(b);
    let pieces = cuts.len() - 1;
    let mut total = QuadResult {
        value: 0.0,
        abs_error: 0.0,
        evaluations: 0,
    };
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        let q = simpson_richardson(
            |v: f64| g(lo + half * (1.0 - v.cos())) * half * v.sin(),
            0.0,
            std::f64::consts::PI,
            tol / pieces as f64,
        );
        total.value += q.value;
        total.abs_error += q.abs_error;
        total.evaluations += q.evaluations;
    }
    total
}

/// Open Gauss-Chebyshev rule with `n` nodes: `(pi/n) * sum g(u_k)`,
/// `u_k = (k + 1/2) pi / n`.
///
/// For `integral_0^pi g(u) du` where `g` may be infinite at `u = 0, pi`.
pub fn gauss_chebyshev<G: Fn(f64) -> f64>(g: G, n: usize) -> f64 {
    let step = std::f64::consts::PI / n as f64;
    (0..n).map(|k| g((k as f64 + 0.5) * step)).sum::<f64>() * step
}

/// [`gauss_chebyshev`] with node tripling (nested nodes) until two levels agree.
pub fn gauss_chebyshev_adaptive<G: Fn(f64) -> f64>(g: G, tol: f64) -> QuadResult {
    let mut n = 9;
    let mut prev = gauss_chebyshev(&g, n);
    let mut evaluations = n;
    loop {
        n *= 3;
        let next = gauss_chebyshev(&g, n);
        evaluations += n;
        let err = (next - prev).abs();
        if err <= tol || n > 3_000_000 {
            return QuadResult {
                value: next,
                abs_error: err,
                evaluations,
            };
        }
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let r = simpson_richardson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 1e-14);
        // antiderivative x^4/4 - x^2 + x
        let exact = (4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn smooth_integral_converges() {
        let r = simpson_richardson(|x: f64| x.exp() * x.sin(), 0.0, 2.0, 1e-12);
        let exact = 0.5 * (2.0f64.exp() * (2.0f64.sin() - 2.0f64.cos()) + 1.0);
        assert!((r.value - exact).abs() < 1e-11, "{} vs {exact}", r.value);
        assert!(r.abs_error <= 1e-12);
    }

    #[test]
    fn arcsine_weight_normalizes() {
        let r = arcsine_weighted(|_| 1.0, 2.0, 5.0, 1e-14);
        assert!((r.value - PI).abs() < 1e-13);
        // mean of the arcsine law is the midpoint
        let m = arcsine_weighted(|z| z, 2.0, 5.0, 1e-14);
        assert!((m.value / PI - 3.5).abs() < 1e-13);
        // second moment: mid^2 + half^2 / 2
        let s = arcsine_weighted(|z| z * z, 2.0, 5.0, 1e-14);
        assert!((s.value / PI - (3.5 * 3.5 + 1.5 * 1.5 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_open_rule_handles_infinite_endpoints() {
        // integral_0^1 dx / sqrt(x(1-x)) = pi, written in u with the weight left in place
        let g = |u: f64| {
            let x = 0.5 + 0.5 * u.cos();
            0.5 * u.sin() / (x * (1.0 - x)).sqrt()
        };
        let r = gauss_chebyshev_adaptive(g, 1e-13);
        assert!((r.value - PI).abs() < 1e-12);
    }

    #[test]
    fn piecewise_handles_sqrt_corners() {
        // integral_0^2 sqrt(|u - 1|) du = 4/3
        let r = simpson_piecewise(|u: f64| (u - 1.0).abs().sqrt(), 0.0, 2.0, &[1.0], 1e-12);
        assert!((r.value - 4.0 / 3.0).abs() < 1e-11, "{}", r.value);
        let plain = simpson_piecewise(|u: f64| u * u, 0.0, 3.0, &[], 1e-13);
        assert!((plain.value - 9.0).abs() < 1e-12);
    }

    #[test]
    fn empty_interval() {
        let r = simpson_richardson(|x| x, 1.0, 1.0, 1e-10);
        assert_eq!(r.value, 0.0);
    }
}
