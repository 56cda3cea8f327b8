//! Classical Fisher information of the absorbed/escaped readout, Fisher
//! matrices over `(alpha, beta)`, the single-copy quantum Fisher information
//! and the resulting efficiencies.

use serde::Serialize;

use crate::bloch::BlochState;
use crate::error::{Error, Result};
use crate::spectral::{xi_table, Boundary, EscapeCoefficients};

/// Threshold on `f(2-f)` (equivalently `4 P_E (1 - P_E)`) below which the
/// Bernoulli variance is treated as zero.
pub const SINGULAR_EPS: f64 = 1e-12;

/// Offset used to resolve `0/0` points by a directional limit.
pub const LIMIT_PROBE: f64 = 1e-5;

/// Below this `H_beta` is treated as zero.
const QFI_ZERO: f64 = 1e-20;

/// A per-trial information value or the reason it has none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "tag", content = "value", rename_all = "snake_case")]
pub enum FisherScalar {
    Value(f64),
    /// `0/0` point resolved by a directional probe along `+alpha`.
    Limit(f64),
    /// Vanishing Bernoulli variance with a nonzero gradient.
    Singular,
    /// Efficiency where the quantum Fisher information vanishes.
    Undefined,
}

impl FisherScalar {
    pub fn value(&self) -> Option<f64> {
        match *self {
            FisherScalar::Value(v) | FisherScalar::Limit(v) => Some(v),
            FisherScalar::Singular | FisherScalar::Undefined => None,
        }
    }

    pub fn is_regular(&self) -> bool {
        matches!(self, FisherScalar::Value(_))
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Self {
        match self {
            FisherScalar::Value(v) => FisherScalar::Value(f(v)),
            FisherScalar::Limit(v) => FisherScalar::Limit(f(v)),
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Parameter {
    Alpha,
    Beta,
}

fn numerator(c: &EscapeCoefficients, alpha: f64, beta: f64, which: Parameter) -> f64 {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    match which {
        Parameter::Alpha => ((c.xi2 - c.xi1) * sa + c.xi3 * ca * cb).powi(2),
        Parameter::Beta => (c.xi3 * sa * sb).powi(2),
    }
}

fn bernoulli_factor(c: &EscapeCoefficients, alpha: f64, beta: f64) -> f64 {
    let f = 2.0 * c.escape_prob_at(alpha, beta);
    f * (2.0 - f)
}

fn scalar(state: &BlochState, m: Boundary, which: Parameter) -> Result<FisherScalar> {
    let c = xi_table(m)?;
    let (alpha, beta) = (state.alpha(), state.beta());
    let num = numerator(&c, alpha, beta, which);
    let den = bernoulli_factor(&c, alpha, beta);
    if den >= SINGULAR_EPS {
        return Ok(FisherScalar::Value(num / den));
    }
    if num >= SINGULAR_EPS {
        return Ok(FisherScalar::Singular);
    }
    let probe = if alpha + LIMIT_PROBE <= std::f64::consts::PI {
        alpha + LIMIT_PROBE
    } else {
        alpha - LIMIT_PROBE
    };
    let den = bernoulli_factor(&c, probe, beta);
    if den < SINGULAR_EPS {
        return Ok(FisherScalar::Singular);
    }
    Ok(FisherScalar::Limit(numerator(&c, probe, beta, which) / den))
}

/// `F_alpha = [(xi2 - xi1) sin a + xi3 cos a cos b]^2 / (f (2 - f))`.
pub fn fisher_alpha(state: &BlochState, m: Boundary) -> Result<FisherScalar> {
    scalar(state, m, Parameter::Alpha)
}

/// `F_beta = [xi3 sin a sin b]^2 / (f (2 - f))`.
pub fn fisher_beta(state: &BlochState, m: Boundary) -> Result<FisherScalar> {
    scalar(state, m, Parameter::Beta)
}

/// Symmetric 2x2 per-trial information over `(alpha, beta)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherMatrix {
    pub f_aa: f64,
    pub f_ab: f64,
    pub f_bb: f64,
    pub placements: Vec<Boundary>,
}

impl FisherMatrix {
    pub fn zero() -> Self {
        Self {
            f_aa: 0.0,
            f_ab: 0.0,
            f_bb: 0.0,
            placements: Vec::new(),
        }
    }

    /// `g g^T / (P (1 - P))`.
    pub fn from_gradient(grad: (f64, f64), p: f64, m: Boundary) -> Self {
        let var = p * (1.0 - p);
        Self {
            f_aa: grad.0 * grad.0 / var,
            f_ab: grad.0 * grad.1 / var,
            f_bb: grad.1 * grad.1 / var,
            placements: vec![m],
        }
    }

    pub fn as_array(&self) -> [[f64; 2]; 2] {
        [[self.f_aa, self.f_ab], [self.f_ab, self.f_bb]]
    }

    pub fn det(&self) -> f64 {
        self.f_aa * self.f_bb - self.f_ab * self.f_ab
    }

    pub fn trace(&self) -> f64 {
        self.f_aa + self.f_bb
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.f_aa.powi(2) + 2.0 * self.f_ab.powi(2) + self.f_bb.powi(2)).sqrt()
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &FisherMatrix) -> f64 {
        (self.f_aa - other.f_aa)
            .abs()
            .max((self.f_ab - other.f_ab).abs())
            .max((self.f_bb - other.f_bb).abs())
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * self.trace();
        let disc = (0.25 * (self.f_aa - self.f_bb).powi(2) + self.f_ab.powi(2)).sqrt();
        (half_tr - disc, half_tr + disc)
    }

    /// Ratio of eigenvalue magnitudes, `inf` when rank deficient.
    pub fn condition_number(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// `det <= 1e-12 ||F||^2`.
    pub fn is_rank_deficient(&self) -> bool {
        self.det() <= 1e-12 * self.norm().powi(2)
    }

    /// Matrix inverse, `None` when rank deficient.
    pub fn inverse(&self) -> Option<[[f64; 2]; 2]> {
        if self.is_rank_deficient() {
            return None;
        }
        let d = self.det();
        Some([
            [self.f_bb / d, -self.f_ab / d],
            [-self.f_ab / d, self.f_aa / d],
        ])
    }

    /// Entrywise sum; placements are concatenated.
    pub fn add(&self, other: &FisherMatrix) -> FisherMatrix {
        let mut placements = self.placements.clone();
        placements.extend_from_slice(&other.placements);
        FisherMatrix {
            f_aa: self.f_aa + other.f_aa,
            f_ab: self.f_ab + other.f_ab,
            f_bb: self.f_bb + other.f_bb,
            placements,
        }
    }

    pub fn scaled(&self, factor: f64) -> FisherMatrix {
        FisherMatrix {
            f_aa: self.f_aa * factor,
            f_ab: self.f_ab * factor,
            f_bb: self.f_bb * factor,
            placements: self.placements.clone(),
        }
    }
}

/// Analytic single-placement Fisher matrix, `None` where `P_E(1 - P_E)`
/// vanishes.
pub fn fisher_matrix(state: &BlochState, m: Boundary) -> Result<Option<FisherMatrix>> {
    let c = xi_table(m)?;
    let p = c.escape_prob(state);
    if 4.0 * p * (1.0 - p) < SINGULAR_EPS {
        return Ok(None);
    }
    Ok(Some(FisherMatrix::from_gradient(c.gradient(state), p, m)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPlacement {
    pub m: Boundary,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherTotal {
    pub matrix: FisherMatrix,
    pub skipped: Vec<SkippedPlacement>,
}

/// Sum of per-placement matrices. Singular placements are skipped and listed.
pub fn fisher_total(state: &BlochState, placements: &[Boundary]) -> Result<FisherTotal> {
    if placements.is_empty() {
        return Err(Error::domain("at least one boundary placement is required"));
    }
    let mut matrix = FisherMatrix::zero();
    let mut skipped = Vec::new();
    for &m in placements {
        match fisher_matrix(state, m)? {
            Some(f) => matrix = matrix.add(&f),
            None => skipped.push(SkippedPlacement {
                m,
                reason: "P_E(1-P_E) vanishes at this state".into(),
            }),
        }
    }
    Ok(FisherTotal { matrix, skipped })
}

/// Finite-difference Fisher matrix from the closed-form escape probability.
///
/// Uses the fourth-order central stencil with step `h` in both angles.
/// Returns `None` when `P_E(1 - P_E) <= 1e-10`.
pub fn fisher_numeric(state: &BlochState, m: Boundary, h: f64) -> Result<Option<FisherMatrix>> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::domain(format!("difference step h={h} outside [1e-6, 1e-3]")));
    }
    let c = xi_table(m)?;
    let (a, b) = (state.alpha(), state.beta());
    let p = c.escape_prob_at(a, b);
    if p * (1.0 - p) <= 1e-10 {
        return Ok(None);
    }
    let diff = |g: &dyn Fn(f64) -> f64| {
        (-g(2.0 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2.0 * h)) / (12.0 * h)
    };
    let da = diff(&|d| c.escape_prob_at(a + d, b));
    let db = diff(&|d| c.escape_prob_at(a, b + d));
    Ok(Some(FisherMatrix::from_gradient((da, db), p, m)))
}

/// Single-copy quantum Fisher information of the coin state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Qfi {
    pub h_alpha: f64,
    pub h_beta: f64,
}

/// `H_alpha = 1`, `H_beta = sin^2 alpha`.
pub fn qfi(state: &BlochState) -> Qfi {
    Qfi {
        h_alpha: 1.0,
        h_beta: state.alpha().sin().powi(2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Efficiency {
    pub eta_alpha: FisherScalar,
    pub eta_beta: FisherScalar,
}

/// `eta_theta = F_theta / H_theta`; `eta_beta` is undefined where `H_beta = 0`.
pub fn efficiency(state: &BlochState, m: Boundary) -> Result<Efficiency> {
    let h = qfi(state);
    let eta_alpha = fisher_alpha(state, m)?.map(|v| v / h.h_alpha);
    let eta_beta = if h.h_beta <= QFI_ZERO {
        FisherScalar::Undefined
    } else {
        fisher_beta(state, m)?.map(|v| v / h.h_beta)
    };
    Ok(Efficiency {
        eta_alpha,
        eta_beta,
    })
}
