//! Elementary symplectic generators, their Cayley matrices and the split of a
//! doubly degenerate matrix into two well-behaved factors.
//!
//! ```text
//! cargo run --example symplectic_generators
//! ```

use std::f64::consts::PI;

use gaussphase::phase::MetaplecticEvolution;
use gaussphase::symplectic::{cayley, factorize, generator_matrix, is_symplectic, GeneratorSpec};

fn main() -> gaussphase::Result<()> {
    let gens = [
        GeneratorSpec::Rotation { mode: 0, theta: PI / 3.0 },
        GeneratorSpec::Squeeze { mode: 1, zeta: 0.7, phi: PI / 2.0 },
        GeneratorSpec::ShearPosition { mode: 0, s: 1.5 },
        GeneratorSpec::ShearMomentum { mode: 1, s: 0.4 },
        GeneratorSpec::TwoModeRotation { j: 0, k: 1, theta: PI / 2.0 },
    ];
    for g in &gens {
        let s = generator_matrix(g, 2)?;
        let c = cayley(&s)?;
        println!(
            "{:<60} symplectic={} det(S+I)={:+.4} C symmetric={}",
            format!("{g:?}"),
            is_symplectic(s.matrix(), 1e-12)?,
            s.det_plus_identity(),
            (&c.c - c.c.transpose()).amax() < 1e-12,
        );
    }

    // A half turn on mode 0 together with the identity on mode 1 has both
    // eigenvalues +1 and -1, so neither single-matrix formula applies.
    let degenerate = MetaplecticEvolution::single(2, GeneratorSpec::Rotation { mode: 0, theta: PI })?;
    let f = factorize(&degenerate.matrix())?;
    println!("\nhalf turn on one of two modes:");
    println!("  det(S+I) = {:.2e}, det(S-I) = {:.2e}", degenerate.matrix().det_plus_identity(), degenerate.matrix().det_minus_identity());
    println!("  global rotation angle θ₀ = {:.4}", f.theta0);
    println!(
        "  factors: det(S'+I) = {:.4}, det(S''+I) = {:.4}",
        f.s_prime.det_plus_identity(),
        f.s_double.det_plus_identity()
    );
    let recomposed = f.s_prime.compose(&f.s_double)?;
    println!("  ‖S'S'' − S‖ = {:.2e}", (recomposed.matrix() - degenerate.matrix().matrix()).amax());
    Ok(())
}
