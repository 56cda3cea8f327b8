//! Quasi-momentum eigensystem of the biased Hadamard step and the
//! method-of-images amplitudes built from it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bloch::{initial_amplitudes, BlochState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Eigenvalues and unit-normalized eigen-spinors `(A, B)` of `U_k`.
///
/// `A` is real and non-negative; `B` carries the `e^{-ik}` phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    pub k: f64,
    pub rho: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub b_plus: Complex64,
    pub b_minus: Complex64,
}

impl EigenSystem {
    pub fn a(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.a_plus,
            Branch::Minus => self.a_minus,
        }
    }

    pub fn b(&self, branch: Branch) -> Complex64 {
        match branch {
            Branch::Plus => self.b_plus,
            Branch::Minus => self.b_minus,
        }
    }

    pub fn omega(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.omega_plus,
            Branch::Minus => self.omega_minus,
        }
    }

    /// `lambda = sqrt(rho) (i sin k +- sqrt(cos^2 k - 1 + 1/rho))`, evaluated
    /// directly rather than from `omega`.
    pub fn lambda(&self, branch: Branch) -> Complex64 {
        let (s, c) = self.k.sin_cos();
        let root = (c * c - 1.0 + 1.0 / self.rho).max(0.0).sqrt();
        let sign = match branch {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        };
        Complex64::new(sign * root, s) * self.rho.sqrt()
    }

    /// `U_k` applied to a spinor.
    pub fn apply_step(&self, v: (Complex64, Complex64)) -> (Complex64, Complex64) {
        let (a, b) = (self.rho.sqrt(), (1.0 - self.rho).sqrt());
        let e = Complex64::from_polar(1.0, self.k);
        (e * (v.0 * a + v.1 * b), e.conj() * (v.0 * b - v.1 * a))
    }
}

/// Diagonalizes `U_k` for bias `rho`. Any finite `k` is accepted; the
/// physical branch uses `k in (-pi/2, pi/2)` and the mirror term evaluates
/// at `pi - k`.
pub fn eigensystem(k: f64, rho: f64) -> Result<EigenSystem> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::domain(format!(
            "eigensystem needs 0 < rho <= 1 (rho = 0 is the degenerate swap coin), got {rho}"
        )));
    }
    if !k.is_finite() {
        return Err(Error::domain("quasi-momentum must be finite"));
    }
    let (s, c) = k.sin_cos();
    let ratio = c / (1.0 / rho - s * s).sqrt();
    let a_plus = ((1.0 + ratio) / 2.0).max(0.0).sqrt();
    let a_minus = ((1.0 - ratio) / 2.0).max(0.0).sqrt();
    let phase = Complex64::from_polar(1.0, -k);
    let omega_plus = -(rho.sqrt() * s).asin();
    Ok(EigenSystem {
        k,
        rho,
        omega_plus,
        omega_minus: PI - omega_plus,
        a_plus,
        a_minus,
        b_plus: phase * a_minus,
        b_minus: -phase * a_plus,
    })
}

/// Expansion coefficient `C_{k,branch} = A L(0,0) + B^* R(0,0)` of the local
/// initial condition.
pub fn images_coefficient_c(k: f64, state: &BlochState, rho: f64, branch: Branch) -> Result<Complex64> {
    let es = eigensystem(k, rho)?;
    let amp = initial_amplitudes(state);
    Ok(amp.l * es.a(branch) + es.b(branch).conj() * amp.r)
}

fn image_phase(k: f64, m: u32) -> Complex64 {
    Complex64::from_polar(1.0, (PI - 2.0 * k) * f64::from(m - 1))
}

fn require_m2(m: u32) -> Result<()> {
    if m < 2 {
        Err(Error::domain(
            "F_{k+} requires M >= 2; M = 1 is handled by a one-step reduction",
        ))
    } else {
        Ok(())
    }
}

/// Left-moving amplitude `F_{k+}(M)` in its simplified closed form.
pub fn f_plus(k: f64, state: &BlochState, m: u32, rho: f64) -> Result<Complex64> {
    require_m2(m)?;
    let es = eigensystem(k, rho)?;
    let amp = initial_amplitudes(state);
    let phase = image_phase(k, m);
    let (ap, am) = (es.a_plus, es.a_minus);
    let e_ik = Complex64::from_polar(1.0, k);
    Ok(amp.l / ap * (Complex64::new(ap * ap, 0.0) - phase * (am * am))
        + amp.r * am * (e_ik + phase * e_ik.conj()))
}

/// `F_{k+}(M)` assembled from the real and mirror expansion coefficients,
/// `C_{k+} - C_{(pi-k)+} A_{(pi-k)+} / A_{k+} e^{i(pi-2k)(M-1)}`.
pub fn f_plus_images(k: f64, state: &BlochState, m: u32, rho: f64) -> Result<Complex64> {
    require_m2(m)?;
    let mirror_k = PI - k;
    let direct = images_coefficient_c(k, state, rho, Branch::Plus)?;
    let mirror = images_coefficient_c(mirror_k, state, rho, Branch::Plus)?;
    let ratio = eigensystem(mirror_k, rho)?.a_plus / eigensystem(k, rho)?.a_plus;
    Ok(direct - mirror * ratio * image_phase(k, m))
}
