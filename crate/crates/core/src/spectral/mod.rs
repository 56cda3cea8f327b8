//! The eigenfunction route to escape probabilities.
//!
//! The step operator is diagonal in quasi-momentum `k`; the absorbing site is
//! imposed with a mirror walker, and the surviving (left-moving) weight is
//! integrated over `k in (-pi/2, pi/2)`. For the unbiased coin the integrals
//! have exact values, tabulated in [`closed`].

pub mod closed;
pub mod eigen;
pub mod quadrature;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::bloch::{initial_amplitudes, BlochState};
use crate::error::{Error, Result};

pub use closed::{escape_prob_closed, supported_boundaries, xi_table, EscapeCoefficients};
pub use eigen::{eigensystem, f_plus, f_plus_images, images_coefficient_c, Branch, EigenSystem};
pub use quadrature::{integrate_adaptive, GaussLegendre, Integral};

/// Position of the absorbing site, `M >= 1` or the far-boundary limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Boundary {
    Finite(u32),
    Infinite,
}

impl Boundary {
    pub fn finite(m: u32) -> Result<Self> {
        if m == 0 {
            Err(Error::domain("absorbing site must satisfy M >= 1"))
        } else {
            Ok(Boundary::Finite(m))
        }
    }

    pub fn as_finite(&self) -> Option<u32> {
        match *self {
            Boundary::Finite(m) => Some(m),
            Boundary::Infinite => None,
        }
    }

    /// Short label used in file names and JSON.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Finite(m) => write!(f, "{m}"),
            Boundary::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "inf" | "infinity" | "∞" => return Ok(Boundary::Infinite),
            _ => {}
        }
        let m: i64 = t
            .parse()
            .map_err(|_| Error::Parse(format!("cannot parse boundary position {s:?}")))?;
        if m < 1 {
            return Err(Error::domain(format!("absorbing site M={m} must satisfy M >= 1")));
        }
        u32::try_from(m)
            .map(Boundary::Finite)
            .map_err(|_| Error::domain(format!("absorbing site M={m} too large")))
    }
}

impl Serialize for Boundary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Boundary::Finite(m) => s.serialize_u32(*m),
            Boundary::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Parses a comma-separated placement list such as `1,2,inf`.
pub fn parse_placements(s: &str) -> Result<Vec<Boundary>> {
    let out: Vec<Boundary> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::domain("at least one boundary placement is required"));
    }
    Ok(out)
}

/// Default absolute tolerance for [`escape_prob_quadrature`].
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Result of a quadrature evaluation of the escape probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureEstimate {
    pub value: f64,
    /// Estimated absolute error of `value`.
    pub achieved_tol: f64,
    pub panels: usize,
    /// Set for `rho != 1/2`, which has no tabulated closed form to validate against.
    pub experimental: bool,
}

/// Surviving-weight density `2|F_{k+}|^2` before the measure constant.
fn density(k: f64, amp: (Complex64, Complex64), m: Boundary, rho: f64) -> Result<f64> {
    let (l0, r0) = amp;
    let es = eigensystem(k, rho)?;
    let (ap, am) = (es.a_plus, es.a_minus);
    let e_ik = Complex64::from_polar(1.0, k);
    // F = direct + e^{i(pi-2k)(M-1)} image
    let direct = l0 * ap + r0 * am * e_ik;
    let image = -l0 * (am * am / ap) + r0 * am * e_ik.conj();
    let value = match m {
        Boundary::Infinite => direct.norm_sqr() + image.norm_sqr(),
        Boundary::Finite(m) => {
            let phase = Complex64::from_polar(1.0, (PI - 2.0 * k) * f64::from(m - 1));
            (direct + phase * image).norm_sqr()
        }
    };
    Ok(2.0 * value)
}

fn raw_integral(
    amp: (Complex64, Complex64),
    m: Boundary,
    rho: f64,
    tol: f64,
) -> Result<Integral> {
    let periods = m.as_finite().map_or(0, |m| m - 1) as usize;
    let panels = (2 * periods).clamp(4, 1 << 14);
    // eigensystem only fails for rho outside (0, 1], checked by the caller
    integrate_adaptive(
        |k| density(k, amp, m, rho).unwrap_or(f64::NAN),
        -FRAC_PI_2,
        FRAC_PI_2,
        panels,
        tol,
    )
}

/// The sum-to-integral measure constant, fixed so that `|L>` with the
/// boundary at infinity reproduces `xi_1 = 3/2 - 2/pi`. Evaluates to
/// `1/(2 pi)`.
pub fn measure_constant() -> f64 {
    static CONSTANT: OnceLock<f64> = OnceLock::new();
    *CONSTANT.get_or_init(|| {
        let unit = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let raw = raw_integral(unit, Boundary::Infinite, 0.5, 1e-14)
            .expect("calibration integral is smooth");
        let anchor = xi_table(Boundary::Infinite)
            .expect("tabulated boundary")
            .xi1;
        anchor / raw.value
    })
}

/// Escape probability by quadrature over quasi-momentum.
///
/// `M = 1` is reduced to a distance-two problem by one explicit step: the
/// component that is not absorbed sits at `j = -1` in `|L>`.
pub fn escape_prob_quadrature(
    state: &BlochState,
    m: Boundary,
    rho: f64,
    tol: f64,
) -> Result<QuadratureEstimate> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::domain(format!("quadrature requires 0 < rho <= 1, got {rho}")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("quadrature tolerance must be positive"));
    }
    let c = measure_constant();
    let amp = initial_amplitudes(state);
    let (weight, amp, m) = match m {
        Boundary::Finite(1) => {
            let survivor = amp.l * rho.sqrt() + amp.r * (1.0 - rho).sqrt();
            let unit = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
            (survivor.norm_sqr(), unit, Boundary::Finite(2))
        }
        other => (1.0, (amp.l, amp.r), other),
    };
    let scaled = c * weight;
    let to_raw = if scaled > 0.0 { tol / scaled } else { f64::INFINITY };
    if weight == 0.0 {
        return Ok(QuadratureEstimate {
            value: 0.0,
            achieved_tol: 0.0,
            panels: 0,
            experimental: rho != 0.5,
        });
    }
    let integral = match raw_integral(amp, m, rho, to_raw) {
        Ok(i) => i,
        Err(Error::NonConvergent {
            estimate, achieved, ..
        }) => {
            return Err(Error::NonConvergent {
                estimate: estimate * scaled,
                achieved: achieved * scaled,
                requested: tol,
            })
        }
        Err(e) => return Err(e),
    };
    Ok(QuadratureEstimate {
        value: integral.value * scaled,
        achieved_tol: integral.error * scaled,
        panels: integral.panels,
        experimental: rho != 0.5,
    })
}
