//! Simulated qubit-ancilla readout of `Tr(ρU)` and the shot-noise scaling of
//! the phase estimate.
//!
//! ```text
//! cargo run --example ancilla_readout
//! ```

use std::f64::consts::FRAC_PI_2;

use gaussphase::gaussian::GaussianState;
use gaussphase::measurement::{estimate_phase, populations, ProtocolSetting};
use gaussphase::phase::{total_phase, MetaplecticEvolution};
use gaussphase::symplectic::GeneratorSpec;

fn main() -> gaussphase::Result<()> {
    let state = GaussianState::thermal(1, 0.9)?;
    let evo = MetaplecticEvolution::single(1, GeneratorSpec::Squeeze { mode: 0, zeta: 0.6, phi: FRAC_PI_2 })?;
    let exact = total_phase(&state, &evo)?;

    for vartheta in [0.0, FRAC_PI_2] {
        let (pm, pp) = populations(&state, &ProtocolSetting::new(evo.clone(), vartheta, 0)?)?;
        println!("ϑ = {vartheta:.4}: P₋ = {pm:.6}, P₊ = {pp:.6}, P₋ − P₊ = {:+.6}", pm - pp);
    }
    println!("exact phase {:.6}, |Tr| = {:.6}\n", exact.phi, exact.magnitude);

    println!("{:>10} {:>12} {:>12} {:>12}", "shots", "φ̂", "σ_φ", "|φ̂ − φ|");
    for shots in [1_000u64, 10_000, 100_000, 1_000_000] {
        let est = estimate_phase(&state, &evo, shots, 42)?;
        println!("{shots:>10} {:>12.6} {:>12.2e} {:>12.2e}", est.phi_hat, est.sigma_phi, (est.phi_hat - exact.phi).abs());
    }
    Ok(())
}
