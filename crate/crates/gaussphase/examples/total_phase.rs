//! The total phase `arg Tr(ρ M_S)`: branch selection, continuity through the
//! half turn and agreement with the single-mode closed forms.
//!
//! ```text
//! cargo run --example total_phase
//! ```

use std::f64::consts::PI;

use gaussphase::gaussian::GaussianState;
use gaussphase::phase::{phi_rotation, phi_shear_position, phi_squeeze};
use gaussphase::phase::{total_phase, MetaplecticEvolution};
use gaussphase::symplectic::GeneratorSpec;

fn single(g: GeneratorSpec) -> MetaplecticEvolution {
    MetaplecticEvolution::single(1, g).expect("valid generator")
}

fn main() -> gaussphase::Result<()> {
    let vac = GaussianState::vacuum(1);
    println!("vacuum under R(θ): the phase is −θ/2 (mod 2π)");
    println!("{:>8} {:>12} {:>12}  branch", "θ", "φ", "−θ/2");
    for theta in [0.5, PI - 1e-3, PI, PI + 1e-3, 1.5 * PI, 2.0 * PI - 0.1, 3.0 * PI] {
        let p = total_phase(&vac, &single(GeneratorSpec::Rotation { mode: 0, theta }))?;
        let expected = (-theta / 2.0 + PI).rem_euclid(2.0 * PI) - PI;
        println!("{theta:>8.4} {:>12.8} {expected:>12.8}  {:?}", p.phi, p.branch);
    }

    // A tilted squeezed thermal block.
    let (a, b, c) = (1.1, 0.6, 0.3);
    let v = gaussphase::linalg::RMat::from_row_slice(2, 2, &[a, c, c, b]);
    let st = GaussianState::zero_mean(gaussphase::gaussian::CovarianceMatrix::new(v)?);
    println!("\nblock a = {a}, b = {b}, c = {c}");
    let cases = [
        ("rotation θ = 2π/3", GeneratorSpec::Rotation { mode: 0, theta: 2.0 * PI / 3.0 }, phi_rotation(a, b, c, 2.0 * PI / 3.0)?),
        ("squeeze ζ = 0.9, φ = π/2", GeneratorSpec::Squeeze { mode: 0, zeta: 0.9, phi: PI / 2.0 }, phi_squeeze(a, b, c, 0.9, PI / 2.0)?),
        ("position shear s = 1.2", GeneratorSpec::ShearPosition { mode: 0, s: 1.2 }, phi_shear_position(b, 1.2)?),
    ];
    for (label, g, closed) in cases {
        let general = total_phase(&st, &single(g))?;
        println!("{label:<26} general {:+.12}  closed form {closed:+.12}", general.phi);
    }

    // Two modes, composite evolution.
    let evo = MetaplecticEvolution::new(
        2,
        vec![
            GeneratorSpec::Squeeze { mode: 0, zeta: 0.4, phi: 0.3 },
            GeneratorSpec::TwoModeRotation { j: 0, k: 1, theta: 1.1 },
            GeneratorSpec::Rotation { mode: 1, theta: 2.5 },
        ],
    )?;
    let p = total_phase(&GaussianState::two_mode_squeezed(0.6), &evo)?;
    println!("\ntwo-mode squeezed state, three-leg evolution: φ = {:.10}, |Tr| = {:.6} ({:?})", p.phi, p.magnitude, p.branch);
    println!("CZ indices {:?}", evo.cz_indices()?);
    Ok(())
}
