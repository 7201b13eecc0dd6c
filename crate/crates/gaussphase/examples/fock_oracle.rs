//! Cross-checking the Gaussian trace against a truncated Fock-space computation.
//!
//! ```text
//! cargo run --release --example fock_oracle
//! ```

use std::f64::consts::PI;

use gaussphase::fock::{oracle_trace, DEFAULT_CUTOFF_ONE_MODE, DEFAULT_CUTOFF_TWO_MODES};
use gaussphase::gaussian::{GaussianState, StateKind};
use gaussphase::phase::{trace_detailed, MetaplecticEvolution};
use gaussphase::symplectic::{GeneratorRanges, GeneratorSpec};
use gaussphase::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gaussphase::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mild = GeneratorRanges { zeta_max: 0.5, shear_max: 0.8, theta_max: 2.0 * PI };
    let state = gaussphase::gaussian::random_state_with(1, StateKind::Mixed { nu_max: 1.2 }, &mild, &mut rng);
    let evo = MetaplecticEvolution::new(
        1,
        vec![
            GeneratorSpec::Squeeze { mode: 0, zeta: 0.5, phi: 1.0 },
            GeneratorSpec::Rotation { mode: 0, theta: 4.0 },
            GeneratorSpec::ShearMomentum { mode: 0, s: 0.7 },
        ],
    )?;
    let gaussian = trace_detailed(&state, &evo)?.value;
    let fock = oracle_trace(&state, &evo, DEFAULT_CUTOFF_ONE_MODE)?;
    println!("one mode:  Gaussian {gaussian:.10}");
    println!("           Fock     {:.10}  (cutoff defect {:.1e})", fock.value, fock.defect);

    let tms = GaussianState::two_mode_squeezed(0.3);
    let evo2 = MetaplecticEvolution::new(
        2,
        vec![GeneratorSpec::TwoModeRotation { j: 0, k: 1, theta: 0.8 }, GeneratorSpec::Rotation { mode: 0, theta: PI }],
    )?;
    let g2 = trace_detailed(&tms, &evo2)?;
    let f2 = oracle_trace(&tms, &evo2, DEFAULT_CUTOFF_TWO_MODES)?;
    println!("two modes: Gaussian {:.10} via {:?}", g2.value, g2.branch);
    println!("           Fock     {:.10}  (cutoff defect {:.1e})", f2.value, f2.defect);

    // Strong squeezing does not fit in a small truncation.
    let heavy = MetaplecticEvolution::single(1, GeneratorSpec::Squeeze { mode: 0, zeta: 1.5, phi: 0.0 })?;
    match oracle_trace(&GaussianState::vacuum(1), &heavy, 10) {
        Err(e @ Error::InsufficientCutoff { .. }) => println!("\ncutoff 10 with ζ = 1.5: {e}"),
        other => println!("\nunexpected: {other:?}"),
    }
    Ok(())
}
