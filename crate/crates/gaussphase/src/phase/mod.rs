//! Total phase `arg Tr(ρ M_S)` of a Gaussian state under a metaplectic evolution.
//!
//! Three closed forms are available and the one used is recorded with the result:
//!
//! * [`Branch::Wigner`] needs `det(S+I) ≠ 0` and uses the Cayley matrix `C`,
//!   `Tr = iᵛ⁺ / (√|det(S+I)| · Π_k √(1/2 + iλ_k))`, `λ = eig(V^½ C V^½)`;
//! * [`Branch::Weyl`] needs `det(S−I) ≠ 0` and uses `C⁻¹`,
//!   `Tr = iᵛ⁻ / (√|det(S−I)| · √det V · Π_k √(1 − iκ_k/2))`, `κ = eig(V^{-½} C⁻¹ V^{-½})`;
//! * [`Branch::Factorized`] splits `S = S′S″` when both are singular.
//!
//! Taking one principal root per eigenvalue (each with positive real part) keeps
//! every factor continuous in `V`, so the indices `ν±` are those of the vacuum
//! and are fixed by following the evolution path from the identity.

mod closed_form;
mod tracking;

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use closed_form::{phi_rotation, phi_shear_momentum, phi_shear_position, phi_squeeze};

use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::linalg::{complex_det, product_of_eigen_roots, root_on_branch, sym_apply, to_complex, RMat};
use crate::symplectic::{
    cayley, cayley_inverse, embed, form_matrix, split_by_global_rotation, GeneratorSpec,
    SymplecticMatrix, EPS_SING,
};

/// Eigenvalues of `S` closer than this to `±1` count as singular.
pub const NEAR_SINGULAR: f64 = 1e-6;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Principal argument in `(−π, π]`.
pub fn arg(z: Complex64) -> Result<f64> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::UndefinedArgument);
    }
    if z.im == 0.0 && z.re < 0.0 {
        return Ok(PI);
    }
    Ok(z.im.atan2(z.re))
}

/// Ordered legs of a metaplectic evolution on `n` modes; the first leg acts first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaplecticEvolution {
    pub n: usize,
    pub steps: Vec<GeneratorSpec>,
}

impl MetaplecticEvolution {
    pub fn new(n: usize, steps: Vec<GeneratorSpec>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("mode count must be at least 1".into()));
        }
        for g in &steps {
            g.validate(n)?;
        }
        Ok(MetaplecticEvolution { n, steps })
    }

    pub fn identity(n: usize) -> Self {
        MetaplecticEvolution { n, steps: Vec::new() }
    }

    pub fn single(n: usize, g: GeneratorSpec) -> Result<Self> {
        Self::new(n, vec![g])
    }

    /// Appends `g`, acting after the existing legs.
    pub fn then(mut self, g: GeneratorSpec) -> Result<Self> {
        g.validate(self.n)?;
        self.steps.push(g);
        Ok(self)
    }

    /// `S = S_m ⋯ S_1`.
    pub fn matrix(&self) -> SymplecticMatrix {
        let n = self.n;
        let s = self.steps.iter().fold(RMat::identity(2 * n, 2 * n), |acc, g| {
            embed(&g.local_matrix(), &g.modes(), n) * acc
        });
        SymplecticMatrix::from_trusted(s)
    }

    /// Indices `ν±` of the composed operator, fixed by continuity along the legs.
    pub fn cz_indices(&self) -> Result<CZIndices> {
        let (amp, s) = tracking::vacuum_amplitude(self.n, &self.steps);
        let s = SymplecticMatrix::from_trusted(s);
        let vac = GaussianState::vacuum(self.n);
        let nu_plus = match wigner_core(&vac, &s) {
            Ok(base) => Some(quarter_turns(amp * base)?),
            Err(_) => None,
        };
        let nu_minus = match weyl_core(&vac, &s) {
            Ok(base) => Some(quarter_turns(amp * base)?),
            Err(_) => None,
        };
        Ok(CZIndices { nu_minus, nu_plus })
    }
}

/// Recovers `k` from `i^k` (the ratio must be a unit quarter turn).
fn quarter_turns(ratio: Complex64) -> Result<u8> {
    let k = ratio.arg() / FRAC_PI_2;
    if (ratio.norm() - 1.0).abs() > 1e-6 || (k - k.round()).abs() > 1e-4 {
        return Err(Error::Numerical(format!("index ratio {ratio} is not a power of i")));
    }
    Ok((k.round() as i64).rem_euclid(4) as u8)
}

/// Conley–Zehnder indices; `None` where the representation is singular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CZIndices {
    pub nu_minus: Option<u8>,
    pub nu_plus: Option<u8>,
}

impl CZIndices {
    pub fn valid_minus(&self) -> bool {
        self.nu_minus.is_some()
    }

    pub fn valid_plus(&self) -> bool {
        self.nu_plus.is_some()
    }
}

/// Index table of the single-mode rotation `R(θ)`, `θ ∈ [0, 4π]`.
pub fn cz_indices_rotation(theta: f64) -> Result<CZIndices> {
    if !(0.0..=4.0 * PI).contains(&theta) {
        return Err(Error::InvalidArgument(format!("θ = {theta} outside [0, 4π]")));
    }
    let at = |x: f64| (theta - x).abs() < 1e-12;
    let nu_plus = if at(PI) || at(3.0 * PI) {
        None
    } else if !(PI..=3.0 * PI).contains(&theta) {
        Some(0)
    } else {
        Some(2)
    };
    let nu_minus = if at(0.0) || at(2.0 * PI) || at(4.0 * PI) {
        None
    } else if theta < 2.0 * PI {
        Some(3)
    } else {
        Some(1)
    };
    Ok(CZIndices { nu_minus, nu_plus })
}

/// Which closed form produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Weyl-symbol form, valid when `S` has no eigenvalue `+1`.
    Weyl,
    /// Wigner-symbol form, valid when `S` has no eigenvalue `−1`.
    Wigner,
    /// Factorized form `S = S′S″` for the doubly degenerate case.
    Factorized,
}

/// `arg Tr(ρ M_S)` with its magnitude and provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalPhase {
    pub phi: f64,
    pub magnitude: f64,
    pub branch: Branch,
    /// Set when a square root met an eigenvalue on the branch cut.
    pub flagged: bool,
}

/// `Tr(ρ M_S)` and the branch that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceValue {
    pub value: Complex64,
    pub branch: Branch,
    pub flagged: bool,
}

fn check_state(state: &GaussianState, evo: &MetaplecticEvolution) -> Result<()> {
    if state.n() != evo.n {
        return Err(Error::DimensionMismatch { expected: 2 * state.n(), got: 2 * evo.n });
    }
    if !state.is_zero_mean(1e-12) {
        return Err(Error::InvalidState("state has nonzero mean; translate it to zero first".into()));
    }
    Ok(())
}

/// Picks the branch for `S` following the singularity rules.
pub fn select_branch(s: &SymplecticMatrix) -> Branch {
    let wigner_ok = s.det_plus_identity().abs() > EPS_SING && s.spectral_distance(-1.0) >= NEAR_SINGULAR;
    let weyl_ok = s.det_minus_identity().abs() > EPS_SING && s.spectral_distance(1.0) >= NEAR_SINGULAR;
    if wigner_ok {
        Branch::Wigner
    } else if weyl_ok {
        Branch::Weyl
    } else {
        Branch::Factorized
    }
}

pub fn trace_rho_m(state: &GaussianState, evo: &MetaplecticEvolution) -> Result<Complex64> {
    Ok(trace_detailed(state, evo)?.value)
}

pub fn trace_detailed(state: &GaussianState, evo: &MetaplecticEvolution) -> Result<TraceValue> {
    check_state(state, evo)?;
    let branch = select_branch(&evo.matrix());
    trace_with_branch(state, evo, branch)
}

/// Evaluates one specific closed form; errors if it is singular for this `S`.
pub fn trace_with_branch(
    state: &GaussianState,
    evo: &MetaplecticEvolution,
    branch: Branch,
) -> Result<TraceValue> {
    check_state(state, evo)?;
    if evo.steps.is_empty() {
        return Ok(TraceValue { value: Complex64::new(1.0, 0.0), branch, flagged: false });
    }
    let (amp, s) = tracking::vacuum_amplitude(evo.n, &evo.steps);
    let s = SymplecticMatrix::from_trusted(s);
    let vac = GaussianState::vacuum(evo.n);
    let (value, flagged) = match branch {
        Branch::Wigner => {
            let (core, flag) = wigner_core_flagged(state, &s)?;
            let nu = quarter_turns(amp * wigner_core(&vac, &s)?)?;
            (I.powu(nu as u32) / core, flag)
        }
        Branch::Weyl => {
            let (core, flag) = weyl_core_flagged(state, &s)?;
            let nu = quarter_turns(amp * weyl_core(&vac, &s)?)?;
            (I.powu(nu as u32) / core, flag)
        }
        Branch::Factorized => factorized_trace(state, evo, &s)?,
    };
    Ok(TraceValue { value, branch, flagged })
}

pub fn total_phase(state: &GaussianState, evo: &MetaplecticEvolution) -> Result<TotalPhase> {
    let t = trace_detailed(state, evo)?;
    Ok(TotalPhase { phi: arg(t.value)?, magnitude: t.value.norm(), branch: t.branch, flagged: t.flagged })
}

fn root_flag(x: Complex64) -> (Complex64, bool) {
    let r = x.sqrt();
    if r.re.abs() <= 1e-12 {
        (Complex64::new(0.0, r.im.abs()), true)
    } else {
        (r, false)
    }
}

fn wigner_core(state: &GaussianState, s: &SymplecticMatrix) -> Result<Complex64> {
    wigner_core_flagged(state, s).map(|(c, _)| c)
}

/// `√|det(S+I)| · Π √(1/2 + iλ_k)`, the denominator of the Wigner form.
fn wigner_core_flagged(state: &GaussianState, s: &SymplecticMatrix) -> Result<(Complex64, bool)> {
    let c = cayley(s)?.c;
    let vh = sym_apply(state.cov().matrix(), |x| x.max(0.0).sqrt());
    let lam = (&vh * &c * &vh).symmetric_eigen().eigenvalues;
    let mut flagged = false;
    let mut prod = Complex64::new(1.0, 0.0);
    for l in lam.iter() {
        let (r, f) = root_flag(Complex64::new(0.5, *l));
        flagged |= f;
        prod *= r;
    }
    // det(I/2 + i√V C √V) = det(I/2 + iCV)
    let dim = 2 * s.n();
    let m = to_complex(&(RMat::identity(dim, dim) * 0.5)) + to_complex(&(&c * state.cov().matrix())) * I;
    let prod = root_on_branch(complex_det(&m), prod);
    Ok((prod * s.det_plus_identity().abs().sqrt(), flagged))
}

fn weyl_core(state: &GaussianState, s: &SymplecticMatrix) -> Result<Complex64> {
    weyl_core_flagged(state, s).map(|(c, _)| c)
}

/// `√|det(S−I)| · √det V · Π √(1 − iκ_k/2)`, the denominator of the Weyl form.
fn weyl_core_flagged(state: &GaussianState, s: &SymplecticMatrix) -> Result<(Complex64, bool)> {
    let k = cayley_inverse(s)?;
    let v = state.cov().matrix();
    let vih = sym_apply(v, |x| 1.0 / x.sqrt());
    let kap = (&vih * &k * &vih).symmetric_eigen().eigenvalues;
    let det_v: f64 = v.clone().symmetric_eigen().eigenvalues.iter().product();
    let mut flagged = false;
    let mut prod = Complex64::new(det_v.sqrt(), 0.0);
    for x in kap.iter() {
        let (r, f) = root_flag(Complex64::new(1.0, -0.5 * x));
        flagged |= f;
        prod *= r;
    }
    // det V · det(I − (i/2)V^{-1/2} K V^{-1/2}) = det(V − (i/2)K)
    let m = to_complex(v) - to_complex(&k) * (I * 0.5);
    let prod = root_on_branch(complex_det(&m), prod);
    Ok((prod * s.det_minus_identity().abs().sqrt(), flagged))
}

/// Doubly degenerate case: `S = S′S″` with `S″ = R(θ₀)^{⊕n}`.
///
/// With `G = JᵀVJ`, `C′`, `C″` the Cayley matrices of the factors and
/// `Q = [[G + iC′/2, −G − iJ/2], [−G + iJ/2, G + iC″/2]]`,
/// `Tr = i^{ν′⁺+ν″⁺} / (√|det(S′+I) det(S″+I)| · Π √eig Q)`.
fn factorized_trace(
    state: &GaussianState,
    evo: &MetaplecticEvolution,
    s: &SymplecticMatrix,
) -> Result<(Complex64, bool)> {
    let n = evo.n;
    let f = split_by_global_rotation(s)?;
    let (theta0, s_prime, s_double) = (f.theta0, f.s_prime, f.s_double);

    // Path of S′: undo the global rotation first, then run the evolution.
    let mut legs: Vec<GeneratorSpec> =
        (0..n).map(|mode| GeneratorSpec::Rotation { mode, theta: -theta0 }).collect();
    legs.extend(evo.steps.iter().copied());
    let (amp, _) = tracking::vacuum_amplitude(n, &legs);
    let nu_prime = quarter_turns(amp * wigner_core(&GaussianState::vacuum(n), &s_prime)?)?;
    let nu_double = cz_indices_rotation(theta0)?
        .nu_plus
        .ok_or_else(|| Error::Numerical("global rotation landed on a singular angle".into()))?
        as u32
        * n as u32;

    let j = form_matrix(n);
    let g = j.transpose() * state.cov().matrix() * &j;
    let c1 = cayley(&s_prime)?.c;
    let c2 = cayley(&s_double)?.c;
    let half_i = Complex64::new(0.0, 0.5);
    let gc = to_complex(&g);
    let jc = to_complex(&j);
    let mut q = DMatrix::<Complex64>::zeros(4 * n, 4 * n);
    let d = 2 * n;
    q.view_mut((0, 0), (d, d)).copy_from(&(&gc + to_complex(&c1) * half_i));
    q.view_mut((0, d), (d, d)).copy_from(&(-&gc - &jc * half_i));
    q.view_mut((d, 0), (d, d)).copy_from(&(-&gc + &jc * half_i));
    q.view_mut((d, d), (d, d)).copy_from(&(&gc + to_complex(&c2) * half_i));
    let roots = root_on_branch(complex_det(&q), product_of_eigen_roots(&q)?);
    let flagged = crate::linalg::complex_eigenvalues(&q)?
        .iter()
        .any(|l| l.sqrt().re.abs() <= 1e-12);
    let scale = (s_prime.det_plus_identity() * s_double.det_plus_identity()).abs().sqrt();
    Ok((I.powu((nu_prime as u32 + nu_double) % 4) / (roots * scale), flagged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{random_state, StateKind};

    fn rot(theta: f64) -> MetaplecticEvolution {
        MetaplecticEvolution::single(1, GeneratorSpec::Rotation { mode: 0, theta }).unwrap()
    }

    #[test]
    fn arg_table() {
        assert_eq!(arg(Complex64::new(1.0, 0.0)).unwrap(), 0.0);
        assert_eq!(arg(Complex64::new(-1.0, 0.0)).unwrap(), PI);
        assert_eq!(arg(Complex64::new(-1.0, -0.0)).unwrap(), PI);
        assert_eq!(arg(Complex64::new(0.0, -1.0)).unwrap(), -FRAC_PI_2);
        assert!(matches!(arg(Complex64::new(0.0, 0.0)), Err(Error::UndefinedArgument)));
    }

    #[test]
    fn rotation_index_table() {
        assert_eq!(cz_indices_rotation(PI / 2.0).unwrap().nu_plus, Some(0));
        let at_2pi = cz_indices_rotation(2.0 * PI).unwrap();
        assert_eq!((at_2pi.nu_plus, at_2pi.nu_minus), (Some(2), None));
        let late = cz_indices_rotation(3.5 * PI).unwrap();
        assert_eq!((late.nu_plus, late.nu_minus), (Some(0), Some(1)));
        assert_eq!(cz_indices_rotation(PI).unwrap().nu_plus, None);
        assert!(cz_indices_rotation(-0.1).is_err());
    }

    #[test]
    fn tracked_indices_match_rotation_table() {
        for k in 1..80 {
            let theta = k as f64 * 4.0 * PI / 80.0 + 0.013;
            if theta > 4.0 * PI {
                continue;
            }
            let tracked = rot(theta).cz_indices().unwrap();
            let table = cz_indices_rotation(theta).unwrap();
            assert_eq!(tracked, table, "θ = {theta}");
        }
    }

    #[test]
    fn vacuum_rotation_trace() {
        let vac = GaussianState::vacuum(1);
        for &theta in &[0.4, PI / 2.0, PI, 1.5 * PI, 2.0 * PI, 3.0 * PI, 3.7 * PI] {
            let t = trace_rho_m(&vac, &rot(theta)).unwrap();
            assert!((t - Complex64::from_polar(1.0, -theta / 2.0)).norm() < 1e-12, "θ={theta}");
        }
    }

    #[test]
    fn empty_evolution_has_unit_trace() {
        let st = random_state(2, StateKind::Mixed { nu_max: 2.0 }, 4);
        let t = trace_rho_m(&st, &MetaplecticEvolution::identity(2)).unwrap();
        assert_eq!(t, Complex64::new(1.0, 0.0));
        assert_eq!(total_phase(&st, &MetaplecticEvolution::identity(2)).unwrap().phi, 0.0);
    }

    #[test]
    fn shear_phase_of_vacuum() {
        let evo = MetaplecticEvolution::single(1, GeneratorSpec::ShearPosition { mode: 0, s: 2.0 }).unwrap();
        let p = total_phase(&GaussianState::vacuum(1), &evo).unwrap();
        assert!((p.phi + PI / 8.0).abs() < 1e-13);
        assert_eq!(p.branch, Branch::Wigner);
    }

    #[test]
    fn half_turn_uses_weyl_branch() {
        let p = total_phase(&GaussianState::vacuum(1), &rot(PI)).unwrap();
        assert_eq!(p.branch, Branch::Weyl);
        assert!((p.phi + FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let st = GaussianState::new(
            nalgebra::DVector::from_vec(vec![0.1, 0.0]),
            crate::gaussian::CovarianceMatrix::vacuum(1),
            1.0,
        )
        .unwrap();
        assert!(matches!(trace_rho_m(&st, &rot(1.0)), Err(Error::InvalidState(_))));
        assert!(trace_rho_m(&st.translate_to_zero(), &rot(1.0)).is_ok());
    }

    #[test]
    fn branches_agree_on_generic_case() {
        let st = random_state(2, StateKind::Mixed { nu_max: 1.5 }, 21);
        let evo = MetaplecticEvolution::new(
            2,
            vec![
                GeneratorSpec::Squeeze { mode: 0, zeta: 0.7, phi: 0.3 },
                GeneratorSpec::TwoModeRotation { j: 0, k: 1, theta: 2.2 },
                GeneratorSpec::Rotation { mode: 1, theta: 4.0 },
            ],
        )
        .unwrap();
        let a = trace_with_branch(&st, &evo, Branch::Wigner).unwrap().value;
        let b = trace_with_branch(&st, &evo, Branch::Weyl).unwrap().value;
        let c = trace_with_branch(&st, &evo, Branch::Factorized).unwrap().value;
        assert!((a - b).norm() < 1e-10, "{a} {b}");
        assert!((a - c).norm() < 1e-10, "{a} {c}");
    }
}
