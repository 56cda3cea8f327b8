//! Exact Hadamard-walk escape probabilities.
//!
//! For `rho = 1/2`,
//! `P_E = xi1 cos^2(alpha/2) + xi2 sin^2(alpha/2) + xi3 cos(alpha/2) sin(alpha/2) cos(beta)`
//! with rational-plus-`1/pi` constants for `M = 1..=5` and `M -> infinity`.

use std::f64::consts::PI;

use serde::Serialize;

use super::Boundary;
use crate::bloch::BlochState;
use crate::error::{Error, Result};

/// Slack within which a closed-form value is clamped into `[0, 1]`.
pub const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeCoefficients {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    pub m: Boundary,
}

impl EscapeCoefficients {
    /// Unclamped escape probability.
    pub fn escape_prob_raw(&self, state: &BlochState) -> f64 {
        self.escape_prob_at(state.alpha(), state.beta())
    }

    /// The closed form at raw angles, without canonicalization or clamping.
    /// The expression is analytic in both angles, so points slightly outside
    /// `[0, pi]` are fine (finite-difference stencils rely on this).
    pub fn escape_prob_at(&self, alpha: f64, beta: f64) -> f64 {
        if self.m == Boundary::Finite(1) {
            // xi1 = xi2 = xi3 / 2 collapses the general form
            return (1.0 - 2.0 / PI) * (1.0 + alpha.sin() * beta.cos());
        }
        let (s, c) = (alpha / 2.0).sin_cos();
        self.xi1 * c * c + self.xi2 * s * s + self.xi3 * c * s * beta.cos()
    }

    pub fn escape_prob(&self, state: &BlochState) -> f64 {
        clamp_unit(self.escape_prob_raw(state))
    }

    /// `f = 2 P_E = xi2 + xi1 - (xi2 - xi1) cos(alpha) + xi3 sin(alpha) cos(beta)`.
    pub fn f(&self, state: &BlochState) -> f64 {
        2.0 * self.escape_prob_raw(state)
    }

    /// `(dP/dalpha, dP/dbeta)`.
    pub fn gradient(&self, state: &BlochState) -> (f64, f64) {
        let (sa, ca) = state.alpha().sin_cos();
        let (sb, cb) = state.beta().sin_cos();
        (
            0.5 * ((self.xi2 - self.xi1) * sa + self.xi3 * ca * cb),
            -0.5 * self.xi3 * sa * sb,
        )
    }
}

fn clamp_unit(p: f64) -> f64 {
    if (-RANGE_SLACK..0.0).contains(&p) {
        0.0
    } else if p > 1.0 && p <= 1.0 + RANGE_SLACK {
        1.0
    } else {
        p
    }
}

/// Tabulated `(xi1, xi2, xi3)` for `M in {1, ..., 5, inf}`.
pub fn xi_table(m: Boundary) -> Result<EscapeCoefficients> {
    let ip = 1.0 / PI;
    let (xi1, xi2, xi3) = match m {
        Boundary::Finite(1) => (1.0 - 2.0 * ip, 1.0 - 2.0 * ip, 2.0 - 4.0 * ip),
        Boundary::Finite(2) => (2.0 - 4.0 * ip, 3.0 - 8.0 * ip, 3.0 - 8.0 * ip),
        Boundary::Finite(3) => (
            4.0 - 10.0 * ip,
            13.0 - 118.0 / 3.0 * ip,
            11.0 - 100.0 / 3.0 * ip,
        ),
        Boundary::Finite(4) => (
            14.0 - 124.0 / 3.0 * ip,
            65.0 - 608.0 / 3.0 * ip,
            53.0 - 496.0 / 3.0 * ip,
        ),
        Boundary::Finite(5) => (
            66.0 - 614.0 / 3.0 * ip,
            341.0 - 16046.0 / 15.0 * ip,
            277.0 - 13036.0 / 15.0 * ip,
        ),
        Boundary::Infinite => (1.5 - 2.0 * ip, 0.5, 1.0 - 2.0 * ip),
        Boundary::Finite(other) => {
            return Err(Error::domain(format!(
                "no closed form tabulated for M={other}; use the quadrature route"
            )))
        }
    };
    Ok(EscapeCoefficients { xi1, xi2, xi3, m })
}

/// Boundaries with tabulated closed forms.
pub fn supported_boundaries() -> [Boundary; 6] {
    [
        Boundary::Finite(1),
        Boundary::Finite(2),
        Boundary::Finite(3),
        Boundary::Finite(4),
        Boundary::Finite(5),
        Boundary::Infinite,
    ]
}

/// Closed-form escape probability for the unbiased coin.
pub fn escape_prob_closed(state: &BlochState, m: Boundary) -> Result<f64> {
    Ok(xi_table(m)?.escape_prob(state))
}
