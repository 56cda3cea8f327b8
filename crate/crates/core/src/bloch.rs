//! Coin states, the biased Hadamard coin and the walker's initial spinor.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the polar angle before it is rejected.
pub const ALPHA_SLACK: f64 = 1e-9;

/// A pure coin qubit `cos(alpha/2)|L> + e^{i beta} sin(alpha/2)|R>`.
///
/// `alpha` lies in `[0, pi]` and `beta` in `[0, 2pi)`. Construct through
/// [`BlochState::new`] or [`canonicalize`] so the invariants hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    alpha: f64,
    beta: f64,
}

impl BlochState {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        canonicalize(alpha, beta)
    }

    /// `|L>`, the north pole.
    pub const fn left() -> Self {
        Self { alpha: 0.0, beta: 0.0 }
    }

    /// `|R>`, the south pole.
    pub const fn right() -> Self {
        Self { alpha: PI, beta: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The `beta -> 2pi - beta` partner. Escape probabilities depend on
    /// `beta` only through `cos beta`, so the two are indistinguishable by
    /// absorption data.
    pub fn mirror(&self) -> Self {
        let beta = if self.beta == 0.0 { 0.0 } else { TAU - self.beta };
        Self { alpha: self.alpha, beta }
    }

    /// Same state with `beta` folded onto `[0, pi]`.
    pub fn folded(&self) -> Self {
        if self.beta > PI {
            self.mirror()
        } else {
            *self
        }
    }

    pub fn amplitudes(&self) -> ComplexAmplitudePair {
        initial_amplitudes(self)
    }
}

/// Reduces `beta` modulo `2pi` and validates `alpha`.
///
/// Values of `alpha` within [`ALPHA_SLACK`] of `[0, pi]` are clamped; anything
/// further out is a domain error.
pub fn canonicalize(alpha_raw: f64, beta_raw: f64) -> Result<BlochState> {
    if !alpha_raw.is_finite() || !beta_raw.is_finite() {
        return Err(Error::domain(format!(
            "Bloch angles must be finite (alpha={alpha_raw}, beta={beta_raw})"
        )));
    }
    if !(-ALPHA_SLACK..=PI + ALPHA_SLACK).contains(&alpha_raw) {
        return Err(Error::domain(format!("alpha={alpha_raw} outside [0, pi]")));
    }
    let alpha = alpha_raw.clamp(0.0, PI);
    let mut beta = beta_raw.rem_euclid(TAU);
    // rem_euclid of a tiny negative number rounds up to exactly 2pi
    if beta >= TAU {
        beta = 0.0;
    }
    Ok(BlochState { alpha, beta })
}

/// Complex `(L, R)` spinor components at one site.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexAmplitudePair {
    pub l: Complex64,
    pub r: Complex64,
}

impl ComplexAmplitudePair {
    pub fn new(l: Complex64, r: Complex64) -> Self {
        Self { l, r }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.l.norm_sqr() + self.r.norm_sqr()
    }
}

/// `L(0,0) = cos(alpha/2)`, `R(0,0) = e^{i beta} sin(alpha/2)`.
///
/// The global phase is fixed so that `L` is real and non-negative.
pub fn initial_amplitudes(state: &BlochState) -> ComplexAmplitudePair {
    let (s, c) = (state.alpha / 2.0).sin_cos();
    ComplexAmplitudePair {
        l: Complex64::new(c, 0.0),
        r: Complex64::from_polar(s, state.beta),
    }
}

/// A 2x2 coin acting on `(L, R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinMatrix {
    entries: [[Complex64; 2]; 2],
    rho: f64,
}

impl CoinMatrix {
    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.entries
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `sqrt(rho)`, the diagonal magnitude.
    pub fn diag(&self) -> f64 {
        self.entries[0][0].re
    }

    /// `sqrt(1 - rho)`, the off-diagonal magnitude.
    pub fn off_diag(&self) -> f64 {
        self.entries[0][1].re
    }

    pub fn apply(&self, v: ComplexAmplitudePair) -> ComplexAmplitudePair {
        let m = &self.entries;
        ComplexAmplitudePair {
            l: m[0][0] * v.l + m[0][1] * v.r,
            r: m[1][0] * v.l + m[1][1] * v.r,
        }
    }

    /// `max |(C^dagger C - I)_{ij}|`.
    pub fn unitarity_defect(&self) -> f64 {
        let m = &self.entries;
        let mut worst = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    acc += m[k][i].conj() * m[k][j];
                }
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }
}

/// The biased Hadamard coin `[[sqrt(rho), sqrt(1-rho)], [sqrt(1-rho), -sqrt(rho)]]`.
pub fn coin_matrix(rho: f64) -> Result<CoinMatrix> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!("coin bias rho={rho} outside [0, 1]")));
    }
    let a = rho.sqrt();
    let b = (1.0 - rho).sqrt();
    let c = |x: f64| Complex64::new(x, 0.0);
    Ok(CoinMatrix {
        entries: [[c(a), c(b)], [c(b), c(-a)]],
        rho,
    })
}

/// An angle in radians parsed from decimal (`1.5707`) or pi-literal
/// (`pi`, `-pi/2`, `3pi/4`, `2*pi/3`, `0.5pi`, `π/2`) notation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_angle(s).map(Angle)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn parse_angle(raw: &str) -> Result<f64> {
    let s: String = raw.trim().replace('π', "pi").to_ascii_lowercase();
    let bad = || Error::Parse(format!("cannot parse angle {raw:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    let Some(pos) = s.find("pi") else {
        return s.parse::<f64>().map_err(|_| bad());
    };
    let (head, tail) = (&s[..pos], &s[pos + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let coef = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let denom = match tail {
        "" => 1.0,
        t => {
            let d = t.strip_prefix('/').ok_or_else(bad)?;
            d.parse::<f64>().map_err(|_| bad())?
        }
    };
    if denom == 0.0 {
        return Err(bad());
    }
    let value = coef * PI / denom;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}
