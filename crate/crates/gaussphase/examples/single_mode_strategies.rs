//! The three single-mode inversion strategies fed with exact phases.
//!
//! ```text
//! cargo run --example single_mode_strategies
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use gaussphase::phase::{phi_rotation, phi_shear_momentum, phi_shear_position, phi_squeeze};
use gaussphase::reconstruction::{
    strategy1, strategy2, strategy3, Measured, ShearPhases, SingleModeEstimate, Strategy1Phases, Strategy2Phases,
    Strategy3Phases,
};

fn show(name: &str, e: &SingleModeEstimate, truth: (f64, f64, f64)) {
    println!(
        "{name}: a = {:.12}  b = {:.12}  c = {:+.12}  max error {:.1e}",
        e.a,
        e.b,
        e.c,
        (e.a - truth.0).abs().max((e.b - truth.1).abs()).max((e.c - truth.2).abs())
    );
    for w in &e.warnings {
        println!("    warning: {w}");
    }
}

fn main() -> gaussphase::Result<()> {
    let (a, b, c) = (1.3, 0.45, -0.2);
    println!("true block a = {a}, b = {b}, c = {c}, τ = ab − c² = {:.4}\n", a * b - c * c);
    let m = |x: f64| Measured::exact(x);
    let (t1, t2) = (FRAC_PI_2, 2.0 * PI / 3.0);

    let s1 = strategy1(&Strategy1Phases {
        rotation1: m(phi_rotation(a, b, c, t1)?),
        theta1: t1,
        rotation2: m(phi_rotation(a, b, c, t2)?),
        theta2: t2,
        squeeze_half_pi: m(phi_squeeze(a, b, c, 1.0, FRAC_PI_2)?),
        squeeze_zero: m(phi_squeeze(a, b, c, 1.0, 0.0)?),
        zeta: 1.0,
    })?;
    show("strategy 1", &s1, (a, b, c));

    // The third rotation acts on the state after the squeeze Z₀(ζ).
    let zeta = 1.0;
    let squeezed = squeezed_block(a, b, c, zeta);
    let t3 = 2.0 * PI / 3.0;
    let s2 = strategy2(&Strategy2Phases {
        rotation1: m(phi_rotation(a, b, c, t1)?),
        theta1: t1,
        rotation2: m(phi_rotation(a, b, c, t2)?),
        theta2: t2,
        rotation3: m(phi_rotation(squeezed.0, squeezed.1, squeezed.2, t3)?),
        theta3: t3,
        zeta,
        momentum_shear: Some((m(phi_shear_momentum(a, 1.0)?), 1.0)),
    })?;
    show("strategy 2", &s2, (a, b, c));

    let s3 = strategy3(&Strategy3Phases {
        squeeze1: m(phi_squeeze(a, b, c, 0.5, FRAC_PI_2)?),
        zeta1: 0.5,
        squeeze2: m(phi_squeeze(a, b, c, 1.0, FRAC_PI_2)?),
        zeta2: 1.0,
        shear: ShearPhases::Position { phi: m(phi_shear_position(b, 1.0)?) },
        s: 1.0,
    })?;
    show("strategy 3", &s3, (a, b, c));
    Ok(())
}

/// Block of `Z₀(ζ) V Z₀(ζ)ᵀ` for the squeeze with phase 0.
fn squeezed_block(a: f64, b: f64, c: f64, zeta: f64) -> (f64, f64, f64) {
    use gaussphase::symplectic::GeneratorSpec;
    let z = GeneratorSpec::Squeeze { mode: 0, zeta, phi: 0.0 }.local_matrix();
    let v = gaussphase::linalg::RMat::from_row_slice(2, 2, &[a, c, c, b]);
    let w = &z * v * z.transpose();
    (w[(0, 0)], w[(1, 1)], w[(0, 1)])
}
