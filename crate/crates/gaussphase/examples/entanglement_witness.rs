//! Purity and Rényi-2 entanglement of one mode of a pure two-mode state from
//! two rotation phases alone.
//!
//! ```text
//! cargo run --example entanglement_witness
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use gaussphase::gaussian::{purity_from_tau, GaussianState};
use gaussphase::reconstruction::{entanglement_from_two_rotations, PhaseSource};
use gaussphase::symplectic::GeneratorSpec;

fn main() -> gaussphase::Result<()> {
    let (t1, t2) = (FRAC_PI_2, 2.0 * PI / 3.0);
    for r in [0.25, 0.5, 1.0] {
        let state = GaussianState::two_mode_squeezed(r);
        let expected = (2.0 * r).cosh().ln();
        for shots in [0u64, 1_000_000] {
            let mut src = PhaseSource::sampled(&state, shots, 99);
            let p1 = src.measure(&[], GeneratorSpec::Rotation { mode: 0, theta: t1 }, "rotation θ1")?;
            let p2 = src.measure(&[], GeneratorSpec::Rotation { mode: 0, theta: t2 }, "rotation θ2")?;
            let fig = entanglement_from_two_rotations(p1, t1, p2, t2)?;
            println!(
                "r = {r:<5} shots = {shots:<8} E = {:.6} ± {:.1e}  (ln cosh 2r = {expected:.6})  purity {:.6}",
                fig.entropy,
                fig.sigma,
                purity_from_tau(fig.tau)
            );
        }
    }
    Ok(())
}
