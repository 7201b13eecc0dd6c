//! Building Gaussian states, evolving them and reading off single-mode figures.
//!
//! ```text
//! cargo run --example gaussian_states
//! ```

use gaussphase::gaussian::{random_state, GaussianState, StateKind};
use gaussphase::phase::MetaplecticEvolution;
use gaussphase::symplectic::GeneratorSpec;

fn main() -> gaussphase::Result<()> {
    let tms = GaussianState::two_mode_squeezed(0.5);
    println!("two-mode squeezed r = 0.5\n{}", tms.cov().matrix());
    for mode in 0..2 {
        println!(
            "mode {mode}: purity {:.6}  Rényi-2 entropy {:.6}",
            tms.purity(mode)?,
            tms.renyi2_entanglement(mode)?
        );
    }
    println!("expected Rényi-2 = ln cosh(2r) = {:.6}", 1.0_f64.cosh().ln());

    let thermal = GaussianState::thermal(1, 1.3)?;
    println!("\nthermal ν = 1.3: symplectic eigenvalues {:?}", thermal.williamson()?.nu);

    // Squeezing then a quarter turn on a vacuum.
    let evo = MetaplecticEvolution::single(1, GeneratorSpec::Squeeze { mode: 0, zeta: 0.8, phi: 0.0 })?
        .then(GeneratorSpec::Rotation { mode: 0, theta: std::f64::consts::FRAC_PI_2 })?;
    let squeezed = GaussianState::vacuum(1).evolve(&evo.matrix())?;
    println!("\nrotated squeezed vacuum\n{}", squeezed.cov().matrix());
    println!("bona fide slack {:.3e}", squeezed.cov().bona_fide_slack());

    let mixed = random_state(3, StateKind::Mixed { nu_max: 2.0 }, 11);
    let marginal = mixed.reduce(&[0, 2])?;
    println!("\nrandom mixed three-mode state, marginal on modes 0 and 2:\n{}", marginal.cov().matrix());
    println!("symplectic eigenvalues of the marginal {:?}", marginal.williamson()?.nu);
    Ok(())
}
