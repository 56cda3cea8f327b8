//! Adaptive Gauss-Legendre panel quadrature.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Points per panel rule.
pub const RULE_POINTS: usize = 16;

const MAX_DEPTH: u32 = 40;
const MAX_PANELS: usize = 1 << 20;

/// An `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n`, weights from `P_n'`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared default rule.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(RULE_POINTS))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of per-panel error estimates.
    pub error: f64,
    /// Accepted panels.
    pub panels: usize,
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval starts as `initial_panels` equal panels; each panel is
/// compared against its two halves and bisected until the difference fits
/// the panel's share of `tol`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    tol: f64,
) -> Result<Integral> {
    let rule = GaussLegendre::standard();
    let total = b - a;
    let n0 = initial_panels.max(1);
    let mut stack: Vec<(f64, f64, f64, u32)> = (0..n0)
        .rev()
        .map(|i| {
            let lo = a + total * i as f64 / n0 as f64;
            let hi = a + total * (i + 1) as f64 / n0 as f64;
            (lo, hi, rule.integrate(&f, lo, hi), 0)
        })
        .collect();
    let (mut value, mut error, mut panels) = (0.0, 0.0, 0usize);
    let mut exhausted = false;
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(&f, lo, mid);
        let right = rule.integrate(&f, mid, hi);
        let refined = left + right;
        let diff = (refined - whole).abs();
        if !refined.is_finite() {
            return Err(Error::domain("integrand is not finite on the interval"));
        }
        let share = tol * (hi - lo) / total;
        if diff <= share || depth >= MAX_DEPTH || panels + stack.len() >= MAX_PANELS {
            if diff > share {
                exhausted = true;
            }
            value += refined;
            error += diff;
            panels += 1;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    if exhausted && error > tol {
        return Err(Error::NonConvergent {
            estimate: value,
            achieved: error,
            requested: tol,
        });
    }
    Ok(Integral {
        value,
        error,
        panels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        // exact through degree 15
        let got = rule.integrate(|x| x.powi(14) + 3.0 * x.powi(7), -1.0, 1.0);
        assert!((got - 2.0 / 15.0).abs() < 1e-14);
        let w: f64 = rule.weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
        let odd = GaussLegendre::new(5);
        assert_eq!(odd.nodes()[2], 0.0);
    }

    #[test]
    fn adaptive_smooth_and_oscillatory() {
        let g = integrate_adaptive(|x| x.exp(), 0.0, 1.0, 1, 1e-13).unwrap();
        assert!((g.value - (1f64.exp() - 1.0)).abs() < 1e-13);

        // int_0^pi cos^2(200 x) dx = pi / 2
        let osc = integrate_adaptive(|x| (200.0 * x).cos().powi(2), 0.0, PI, 64, 1e-10).unwrap();
        assert!((osc.value - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn kink_needs_refinement() {
        let g = integrate_adaptive(|x: f64| x.abs().sqrt(), -1.0, 1.0, 3, 1e-10).unwrap();
        assert!((g.value - 4.0 / 3.0).abs() < 1e-9);
        assert!(g.panels > 3);
    }

    #[test]
    fn reports_failure_with_estimate() {
        let err = integrate_adaptive(|x: f64| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, 2, 1e-15);
        match err {
            Err(Error::NonConvergent { estimate, .. }) => assert!(estimate > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
