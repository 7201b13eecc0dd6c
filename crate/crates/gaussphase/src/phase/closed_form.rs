//! Single-mode closed forms for `V = [[a, c], [c, b]]`, `τ = ab − c²`, `β = a + b`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::{arg, cz_indices_rotation};
use crate::error::{Error, Result};
use crate::gaussian::BONA_FIDE_TOL;
use crate::linalg::wrap_angle;

fn check_block(a: f64, b: f64, c: f64) -> Result<f64> {
    let tau = a * b - c * c;
    if !(a > 0.0 && b > 0.0) || tau < 0.25 - BONA_FIDE_TOL {
        return Err(Error::InvalidState(format!(
            "single-mode block (a={a}, b={b}, c={c}) violates a, b > 0, ab − c² ≥ 1/4"
        )));
    }
    Ok(tau)
}

/// `φ_R = (π/2)ν⁺ − (1/2) arg[1/4 − τ tan²(θ/2) + (i/2) β tan(θ/2)]`.
pub fn phi_rotation(a: f64, b: f64, c: f64, theta: f64) -> Result<f64> {
    let tau = check_block(a, b, c)?;
    let nu = cz_indices_rotation(theta)?.nu_plus.ok_or_else(|| {
        Error::NotApplicable(format!(
            "θ = {theta} is a half turn; evaluate with the Weyl branch of trace_rho_m"
        ))
    })?;
    let t = (theta / 2.0).tan();
    let z = Complex64::new(0.25 - tau * t * t, 0.5 * (a + b) * t);
    Ok(wrap_angle(FRAC_PI_2 * nu as f64 - 0.5 * arg(z)?))
}

/// `φ_Z = −(1/2) arg[1/4 + τ tanh²(ζ/2) + i((a−b)/2 cos φ + c sin φ) tanh(ζ/2)]`.
pub fn phi_squeeze(a: f64, b: f64, c: f64, zeta: f64, phi: f64) -> Result<f64> {
    let tau = check_block(a, b, c)?;
    let t = (zeta / 2.0).tanh();
    let z = Complex64::new(0.25 + tau * t * t, (0.5 * (a - b) * phi.cos() + c * phi.sin()) * t);
    Ok(-0.5 * arg(z)?)
}

/// `φ_F = −(1/2) arg(1 + i b s)`.
pub fn phi_shear_position(b: f64, s: f64) -> Result<f64> {
    shear(b, s)
}

/// `φ_M = −(1/2) arg(1 + i a s)`.
pub fn phi_shear_momentum(a: f64, s: f64) -> Result<f64> {
    shear(a, s)
}

fn shear(x: f64, s: f64) -> Result<f64> {
    if s < 0.0 || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("shear parameter must be nonnegative, got {s}")));
    }
    if x <= 0.0 {
        return Err(Error::InvalidState(format!("diagonal covariance entry must be positive, got {x}")));
    }
    Ok(-0.5 * (x * s).atan().clamp(-PI, PI))
}
