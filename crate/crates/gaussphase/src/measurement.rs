//! Qubit-ancilla readout of `Tr(ρU)`.
//!
//! The ancilla starts in `|1,+⟩`, the evolution `U` is applied conditionally on
//! the ancilla state, and a π/2 pulse about the equatorial axis at angle `ϑ`
//! precedes the population readout. The population imbalance is
//! `P₋ − P₊ = Im[e^{iϑ} Tr(ρU)]`, so `ϑ = 0` gives the imaginary part of the
//! trace and `ϑ = π/2` its real part.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::phase::{arg, trace_detailed, MetaplecticEvolution};

/// Below this estimated `|Tr(ρU)|` the sampled phase is rejected.
pub const MAGNITUDE_FLOOR: f64 = 0.05;

/// One readout configuration. `shots = 0` means exact probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSetting {
    pub evolution: MetaplecticEvolution,
    pub vartheta: f64,
    pub shots: u64,
}

impl ProtocolSetting {
    pub fn new(evolution: MetaplecticEvolution, vartheta: f64, shots: u64) -> Result<Self> {
        if !vartheta.is_finite() {
            return Err(Error::InvalidArgument("qubit axis angle must be finite".into()));
        }
        Ok(ProtocolSetting { evolution, vartheta: vartheta.rem_euclid(std::f64::consts::TAU), shots })
    }
}

/// Estimate of `P₋ − P₊` for a single axis angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureEstimate {
    pub vartheta: f64,
    pub value_hat: f64,
    pub sigma: f64,
    pub shots: u64,
}

/// Estimate of `Tr(ρU)` and its phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub re_hat: f64,
    pub im_hat: f64,
    pub phi_hat: f64,
    pub sigma_phi: f64,
    pub magnitude_hat: f64,
    pub shots: u64,
}

/// `Im[e^{iϑ} Tr(ρU)]` from the analytic trace.
pub fn exact_population_difference(state: &GaussianState, setting: &ProtocolSetting) -> Result<f64> {
    let t = trace_detailed(state, &setting.evolution)?.value;
    Ok((Complex64::from_polar(1.0, setting.vartheta) * t).im)
}

/// Populations `(P₋, P₊)` for the setting.
pub fn populations(state: &GaussianState, setting: &ProtocolSetting) -> Result<(f64, f64)> {
    let d = exact_population_difference(state, setting)?;
    Ok(((1.0 + d) / 2.0, (1.0 - d) / 2.0))
}

fn draw(d: f64, shots: u64, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
    let p_minus = ((1.0 + d) / 2.0).clamp(0.0, 1.0);
    let minus = Binomial::new(shots, p_minus)
        .map_err(|e| Error::Numerical(format!("binomial draw: {e}")))?
        .sample(rng);
    let d_hat = (2.0 * minus as f64 - shots as f64) / shots as f64;
    let sigma = ((1.0 - d_hat * d_hat).max(0.0) / shots as f64).sqrt();
    Ok((d_hat, sigma))
}

/// Simulates `shots` readouts of one setting; zero shots returns the exact value.
pub fn sample(state: &GaussianState, setting: &ProtocolSetting, seed: u64) -> Result<QuadratureEstimate> {
    let d = exact_population_difference(state, setting)?;
    if setting.shots == 0 {
        return Ok(QuadratureEstimate { vartheta: setting.vartheta, value_hat: d, sigma: 0.0, shots: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (value_hat, sigma) = draw(d, setting.shots, &mut rng)?;
    Ok(QuadratureEstimate { vartheta: setting.vartheta, value_hat, sigma, shots: setting.shots })
}

/// Combines the `ϑ = 0` and `ϑ = π/2` readouts into a phase estimate, splitting
/// `shots` evenly between them.
pub fn estimate_phase(
    state: &GaussianState,
    evolution: &MetaplecticEvolution,
    shots: u64,
    seed: u64,
) -> Result<PhaseEstimate> {
    estimate_phase_with_floor(state, evolution, shots, seed, MAGNITUDE_FLOOR)
}

pub fn estimate_phase_with_floor(
    state: &GaussianState,
    evolution: &MetaplecticEvolution,
    shots: u64,
    seed: u64,
    magnitude_floor: f64,
) -> Result<PhaseEstimate> {
    let t = trace_detailed(state, evolution)?.value;
    if shots == 0 {
        return Ok(PhaseEstimate {
            re_hat: t.re,
            im_hat: t.im,
            phi_hat: arg(t)?,
            sigma_phi: 0.0,
            magnitude_hat: t.norm(),
            shots: 0,
        });
    }
    if shots < 2 {
        return Err(Error::InvalidArgument("sampled estimates need at least two shots".into()));
    }
    let per_axis = shots / 2;
    // Independent streams per axis setting from the same seed.
    let mut rng_im = ChaCha8Rng::seed_from_u64(seed);
    rng_im.set_stream(0);
    let mut rng_re = ChaCha8Rng::seed_from_u64(seed);
    rng_re.set_stream(1);
    let (im_hat, s_im) = draw(t.im, per_axis, &mut rng_im)?;
    let (re_hat, s_re) = draw((Complex64::from_polar(1.0, FRAC_PI_2) * t).im, per_axis, &mut rng_re)?;
    let m2 = re_hat * re_hat + im_hat * im_hat;
    let magnitude_hat = m2.sqrt();
    let sigma_phi = if m2 > 0.0 {
        ((re_hat * s_im).powi(2) + (im_hat * s_re).powi(2)).sqrt() / m2
    } else {
        f64::INFINITY
    };
    let phi_hat = if m2 > 0.0 { arg(Complex64::new(re_hat, im_hat))? } else { 0.0 };
    let est = PhaseEstimate { re_hat, im_hat, phi_hat, sigma_phi, magnitude_hat, shots: 2 * per_axis };
    if magnitude_hat < magnitude_floor {
        return Err(Error::UnreliablePhase(Box::new(est)));
    }
    Ok(est)
}
