use gaussphase::fock::{evolution_to_fock, oracle_protocol, oracle_trace, reduced_purity, gaussian_to_fock};
use gaussphase::gaussian::{random_state_with, GaussianState, StateKind};
use gaussphase::phase::{trace_rho_m, trace_with_branch, Branch, MetaplecticEvolution};
use gaussphase::symplectic::{random_generator, GeneratorRanges, GeneratorSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn mild() -> GeneratorRanges {
    GeneratorRanges { zeta_max: 0.6, shear_max: 1.0, theta_max: 2.0 * PI }
}

#[test]
fn single_mode_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..25 {
        let st = random_state_with(1, StateKind::Mixed { nu_max: 1.2 }, &mild(), &mut rng);
        let evo = MetaplecticEvolution::single(1, random_generator(1, &mild(), &mut rng)).unwrap();
        let exact = trace_rho_m(&st, &evo).unwrap();
        let oracle = match oracle_trace(&st, &evo, 60) { Ok(o) => o.value, Err(e) => panic!("case {case}: {e} {:?} {:?}", evo.steps, st.cov().matrix()) };
        assert!((exact - oracle).norm() < 1e-6, "case {case}: {exact} vs {oracle} for {:?}", evo.steps);
    }
}

#[test]
fn two_mode_multi_leg_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let r = GeneratorRanges { zeta_max: 0.4, shear_max: 0.8, theta_max: 2.0 * PI };
    for case in 0..6 {
        let st = random_state_with(2, StateKind::Mixed { nu_max: 0.8 }, &r, &mut rng);
        let steps = (0..3).map(|_| random_generator(2, &r, &mut rng)).collect();
        let evo = MetaplecticEvolution::new(2, steps).unwrap();
        let exact = trace_rho_m(&st, &evo).unwrap();
        let oracle = oracle_trace(&st, &evo, 30).unwrap().value;
        assert!((exact - oracle).norm() < 1e-6, "case {case}: {exact} vs {oracle} for {:?}", evo.steps);
    }
}

#[test]
fn factorized_path_on_doubly_degenerate_evolution() {
    // Half turn on mode 0 (eigenvalue −1) and nothing on mode 1 (eigenvalue +1).
    let evo = MetaplecticEvolution::single(2, GeneratorSpec::Rotation { mode: 0, theta: PI }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let st = random_state_with(2, StateKind::Mixed { nu_max: 0.8 }, &mild(), &mut rng);
    let exact = trace_with_branch(&st, &evo, Branch::Factorized).unwrap();
    let oracle = oracle_trace(&st, &evo, 30).unwrap().value;
    assert!((exact.value - oracle).norm() < 1e-6, "{} vs {oracle}", exact.value);
    assert_eq!(trace_rho_m(&st, &evo).unwrap(), exact.value);
}

#[test]
fn thermal_quarter_turn() {
    let st = GaussianState::thermal(1, 1.0).unwrap();
    let evo = MetaplecticEvolution::single(1, GeneratorSpec::Rotation { mode: 0, theta: PI / 2.0 }).unwrap();
    // Σ p_m e^{−iθ(m+1/2)} with p_m = (1/3)(1/3)^m... n̄ = 1/2.
    let x = 1.0 / 3.0;
    let z = Complex64::from_polar(1.0, -PI / 4.0) * (1.0 - x) / (Complex64::new(1.0, 0.0) - Complex64::from_polar(x, -PI / 2.0));
    assert!((trace_rho_m(&st, &evo).unwrap() - z).norm() < 1e-12);
    assert!((oracle_trace(&st, &evo, 60).unwrap().value - z).norm() < 1e-9);
}

#[test]
fn oracle_is_cutoff_stable() {
    let st = random_state_with(1, StateKind::Pure, &mild(), &mut ChaCha8Rng::seed_from_u64(5));
    let evo = MetaplecticEvolution::single(1, GeneratorSpec::Squeeze { mode: 0, zeta: 0.7, phi: 1.0 }).unwrap();
    let a = oracle_trace(&st, &evo, 60).unwrap().value;
    let b = oracle_trace(&st, &evo, 120).unwrap().value;
    assert!((a - b).norm() < 1e-8);
}

#[test]
fn oracle_unitary_on_low_levels() {
    let evo = MetaplecticEvolution::new(
        1,
        vec![
            GeneratorSpec::Squeeze { mode: 0, zeta: 0.3, phi: 0.4 },
            GeneratorSpec::ShearPosition { mode: 0, s: 0.5 },
        ],
    )
    .unwrap();
    let u = evolution_to_fock(&evo, 60).map_err(|e| e.to_string()).unwrap();
    let g = u.adjoint() * &u;
    let low = g.view((0, 0), (30, 30)).into_owned();
    let defect = (low - DMatrix::<Complex64>::identity(30, 30)).norm();
    assert!(defect < 1e-8, "{defect}");
}

#[test]
fn protocol_identity_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..5 {
        let st = random_state_with(1, StateKind::Mixed { nu_max: 1.0 }, &mild(), &mut rng);
        let evo = MetaplecticEvolution::single(1, random_generator(1, &mild(), &mut rng)).unwrap();
        let z = oracle_trace(&st, &evo, 60).unwrap().value;
        for &vt in &[0.0, PI / 2.0, 1.3] {
            let (pm, pp) = oracle_protocol(&st, &evo, 60, vt).unwrap();
            assert!((pm - pp - (Complex64::from_polar(1.0, vt) * z).im).abs() < 1e-10);
        }
    }
}

#[test]
fn reduced_purity_matches_block_determinant() {
    let st = GaussianState::two_mode_squeezed(0.4);
    let rho = gaussian_to_fock(&st, 40).unwrap();
    let p = reduced_purity(&rho, 1).unwrap();
    assert!((p - 1.0 / (0.8_f64).cosh()).abs() < 1e-6, "{p}");
}
