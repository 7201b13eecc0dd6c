//! Symplectic matrices, their generators and Cayley parametrizations.
//!
//! Quadratures are ordered `(q_1, p_1, q_2, p_2, …)` and the form is
//! `J = J_2 ⊕ … ⊕ J_2` with `J_2 = [[0, 1], [−1, 0]]`. A quadratic Hamiltonian
//! `Ĥ = (ω/2) x̂ᵀ H x̂` evolved for time `t` acts on quadratures as
//! `S = exp(J H ωt)`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, real_matrix_eigenvalues, RMat};

/// Default tolerance on `‖SᵀJS − J‖∞`.
pub const EPS_SYMP: f64 = 1e-10;
/// Band on `|det(S ± I)|` below which a representation is treated as singular.
pub const EPS_SING: f64 = 1e-8;

/// The block-diagonal symplectic form on `n` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n: usize,
    j: RMat,
}

impl SymplecticForm {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &RMat {
        &self.j
    }
}

pub fn build_form(n: usize) -> Result<SymplecticForm> {
    if n == 0 {
        return Err(Error::InvalidArgument("mode count must be at least 1".into()));
    }
    Ok(SymplecticForm { n, j: form_matrix(n) })
}

/// `J` for `n` modes; `n = 0` yields the empty matrix.
pub fn form_matrix(n: usize) -> RMat {
    let mut j = RMat::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = -1.0;
    }
    j
}

pub fn is_symplectic(s: &RMat, tol: f64) -> Result<bool> {
    if s.nrows() != s.ncols() || !s.nrows().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "expected a square matrix of even dimension, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let j = form_matrix(s.nrows() / 2);
    Ok(max_abs(&(s.transpose() * &j * s - &j)) <= tol)
}

/// One elementary metaplectic generator together with its full flow parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    /// `Ĥ = ω(a†a + 1/2)` on `mode`; parameter `θ = ωt`.
    Rotation { mode: usize, theta: f64 },
    /// `Ĥ = (ω/2)(a†² e^{iφ} + e^{−iφ} a²)`; parameter `ζ = ωt`.
    Squeeze { mode: usize, zeta: f64, phi: f64 },
    /// `Ĥ = (ω/2) p̂²`, so `q → q + s p`.
    ShearPosition { mode: usize, s: f64 },
    /// `Ĥ = (ω/2) q̂²`, so `p → p − s q`.
    ShearMomentum { mode: usize, s: f64 },
    /// `Ĥ = (ω/2)(a_k† a_j + a_k a_j†)`; parameter `θ = ωt`.
    TwoModeRotation { j: usize, k: usize, theta: f64 },
}

impl GeneratorSpec {
    pub fn modes(&self) -> Vec<usize> {
        match *self {
            GeneratorSpec::Rotation { mode, .. }
            | GeneratorSpec::Squeeze { mode, .. }
            | GeneratorSpec::ShearPosition { mode, .. }
            | GeneratorSpec::ShearMomentum { mode, .. } => vec![mode],
            GeneratorSpec::TwoModeRotation { j, k, .. } => vec![j, k],
        }
    }

    /// The flow parameter `ωt` of this leg.
    pub fn parameter(&self) -> f64 {
        match *self {
            GeneratorSpec::Rotation { theta, .. } => theta,
            GeneratorSpec::Squeeze { zeta, .. } => zeta,
            GeneratorSpec::ShearPosition { s, .. } | GeneratorSpec::ShearMomentum { s, .. } => s,
            GeneratorSpec::TwoModeRotation { theta, .. } => theta,
        }
    }

    /// Same generator with a different flow parameter.
    pub fn with_parameter(&self, p: f64) -> GeneratorSpec {
        let mut g = *self;
        match &mut g {
            GeneratorSpec::Rotation { theta, .. } => *theta = p,
            GeneratorSpec::Squeeze { zeta, .. } => *zeta = p,
            GeneratorSpec::ShearPosition { s, .. } | GeneratorSpec::ShearMomentum { s, .. } => {
                *s = p
            }
            GeneratorSpec::TwoModeRotation { theta, .. } => *theta = p,
        }
        g
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let modes = self.modes();
        if let Some(&m) = modes.iter().find(|&&m| m >= n) {
            return Err(Error::InvalidArgument(format!("mode index {m} out of range for n={n}")));
        }
        if modes.len() == 2 && modes[0] == modes[1] {
            return Err(Error::InvalidArgument("two-mode rotation needs distinct modes".into()));
        }
        if !self.parameter().is_finite() {
            return Err(Error::InvalidArgument("non-finite generator parameter".into()));
        }
        match *self {
            GeneratorSpec::ShearPosition { s, .. } | GeneratorSpec::ShearMomentum { s, .. }
                if s < 0.0 =>
            {
                Err(Error::InvalidArgument(format!("shear parameter must be nonnegative, got {s}")))
            }
            GeneratorSpec::Squeeze { phi, .. } if !(0.0..2.0 * PI).contains(&phi) => Err(
                Error::InvalidArgument(format!("squeeze phase must lie in [0, 2π), got {phi}")),
            ),
            _ => Ok(()),
        }
    }

    /// Hessian `H` of the Hamiltonian per unit `ωt`, embedded into `2n × 2n`.
    pub fn hessian(&self, n: usize) -> RMat {
        let mut h = RMat::zeros(2 * n, 2 * n);
        match *self {
            GeneratorSpec::Rotation { mode, .. } => {
                h[(2 * mode, 2 * mode)] = 1.0;
                h[(2 * mode + 1, 2 * mode + 1)] = 1.0;
            }
            GeneratorSpec::Squeeze { mode, phi, .. } => {
                let (q, p) = (2 * mode, 2 * mode + 1);
                h[(q, q)] = phi.cos();
                h[(p, p)] = -phi.cos();
                h[(q, p)] = phi.sin();
                h[(p, q)] = phi.sin();
            }
            GeneratorSpec::ShearPosition { mode, .. } => h[(2 * mode + 1, 2 * mode + 1)] = 1.0,
            GeneratorSpec::ShearMomentum { mode, .. } => h[(2 * mode, 2 * mode)] = 1.0,
            GeneratorSpec::TwoModeRotation { j, k, .. } => {
                for d in 0..2 {
                    h[(2 * j + d, 2 * k + d)] = 0.5;
                    h[(2 * k + d, 2 * j + d)] = 0.5;
                }
            }
        }
        h
    }

    /// Closed-form local matrix acting on `self.modes()` (2×2 or 4×4).
    pub fn local_matrix(&self) -> RMat {
        match *self {
            GeneratorSpec::Rotation { theta, .. } => rotation2(theta),
            GeneratorSpec::Squeeze { zeta, phi, .. } => {
                let (ch, sh) = (zeta.cosh(), zeta.sinh());
                let (c, s) = (phi.cos(), phi.sin());
                // cosh ζ·I + sinh ζ·J H_φ
                RMat::from_row_slice(2, 2, &[ch + sh * s, -sh * c, -sh * c, ch - sh * s])
            }
            GeneratorSpec::ShearPosition { s, .. } => RMat::from_row_slice(2, 2, &[1.0, s, 0.0, 1.0]),
            GeneratorSpec::ShearMomentum { s, .. } => {
                RMat::from_row_slice(2, 2, &[1.0, 0.0, -s, 1.0])
            }
            GeneratorSpec::TwoModeRotation { theta, .. } => {
                let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
                RMat::from_row_slice(
                    4,
                    4,
                    &[
                        c, 0.0, 0.0, s, //
                        0.0, c, -s, 0.0, //
                        0.0, s, c, 0.0, //
                        -s, 0.0, 0.0, c,
                    ],
                )
            }
        }
    }
}

fn rotation2(theta: f64) -> RMat {
    let (c, s) = (theta.cos(), theta.sin());
    RMat::from_row_slice(2, 2, &[c, s, -s, c])
}

/// Records the one-parameter flow a matrix came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowOrigin {
    pub hessian: RMat,
    pub omega_t: f64,
}

/// A validated element of `Sp(2n, ℝ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    n: usize,
    s: RMat,
    origin: Option<FlowOrigin>,
}

impl SymplecticMatrix {
    pub fn new(s: RMat) -> Result<Self> {
        Self::with_tolerance(s, EPS_SYMP)
    }

    pub fn with_tolerance(s: RMat, tol: f64) -> Result<Self> {
        if !is_symplectic(&s, tol)? {
            return Err(Error::InvalidArgument(format!(
                "matrix is not symplectic: ‖SᵀJS − J‖∞ = {:e}",
                max_abs(&(s.transpose() * form_matrix(s.nrows() / 2) * &s - form_matrix(s.nrows() / 2)))
            )));
        }
        Ok(SymplecticMatrix { n: s.nrows() / 2, s, origin: None })
    }

    /// `exp(J H ωt)` for a symmetric Hessian `H`.
    pub fn from_flow(hessian: RMat, omega_t: f64) -> Result<Self> {
        if hessian.nrows() != hessian.ncols() || !hessian.nrows().is_multiple_of(2) {
            return Err(Error::InvalidArgument("Hessian must be square of even size".into()));
        }
        let n = hessian.nrows() / 2;
        let s = (form_matrix(n) * &hessian * omega_t).exp();
        let mut m = Self::new(s)?;
        m.origin = Some(FlowOrigin { hessian, omega_t });
        Ok(m)
    }

    pub(crate) fn from_trusted(s: RMat) -> Self {
        SymplecticMatrix { n: s.nrows() / 2, s, origin: None }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_trusted(RMat::identity(2 * n, 2 * n))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &RMat {
        &self.s
    }

    pub fn origin(&self) -> Option<&FlowOrigin> {
        self.origin.as_ref()
    }

    /// `self · other`: `other` acts first.
    pub fn compose(&self, other: &SymplecticMatrix) -> Result<SymplecticMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, got: 2 * other.n });
        }
        Ok(Self::from_trusted(&self.s * &other.s))
    }

    /// `S⁻¹ = −J Sᵀ J`.
    pub fn inverse(&self) -> SymplecticMatrix {
        let j = form_matrix(self.n);
        Self::from_trusted(-(&j * self.s.transpose() * &j))
    }

    pub fn det_plus_identity(&self) -> f64 {
        (&self.s + RMat::identity(2 * self.n, 2 * self.n)).determinant()
    }

    pub fn det_minus_identity(&self) -> f64 {
        (&self.s - RMat::identity(2 * self.n, 2 * self.n)).determinant()
    }

    /// Distance from the spectrum of `S` to `target` (usually ±1).
    pub fn spectral_distance(&self, target: f64) -> f64 {
        match real_matrix_eigenvalues(&self.s) {
            Ok(eig) => eig.iter().map(|l| (l - target).norm()).fold(f64::INFINITY, f64::min),
            Err(_) => 0.0,
        }
    }
}

/// Cayley parametrization `C = −J(S−I)(S+I)⁻¹` and, when `S` has no
/// eigenvalue `+1`, its inverse `C⁻¹ = (S+I)(S−I)⁻¹J`.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyMatrix {
    pub c: RMat,
    pub c_inv: Option<RMat>,
}

impl CayleyMatrix {
    pub fn inverse_defined(&self) -> bool {
        self.c_inv.is_some()
    }
}

pub fn cayley(s: &SymplecticMatrix) -> Result<CayleyMatrix> {
    let dim = 2 * s.n();
    let id = RMat::identity(dim, dim);
    let j = form_matrix(s.n());
    let plus = s.matrix() + &id;
    let det = plus.determinant();
    if det.abs() <= EPS_SING {
        return Err(Error::SingularCayley { det: det.abs() });
    }
    let plus_inv = plus.clone().try_inverse().ok_or(Error::SingularCayley { det: det.abs() })?;
    let minus = s.matrix() - &id;
    let c = -(&j * &minus * plus_inv);
    let c_inv = if s.det_minus_identity().abs() > EPS_SING {
        minus.try_inverse().map(|mi| symmetric_part(&(&plus * mi * &j)))
    } else {
        None
    };
    Ok(CayleyMatrix { c: symmetric_part(&c), c_inv })
}

/// `C⁻¹ = (S+I)(S−I)⁻¹J`, defined whenever `S` has no eigenvalue `+1`.
pub fn cayley_inverse(s: &SymplecticMatrix) -> Result<RMat> {
    let dim = 2 * s.n();
    let id = RMat::identity(dim, dim);
    let det = s.det_minus_identity();
    if det.abs() <= EPS_SING {
        return Err(Error::NotApplicable(format!(
            "S has eigenvalue +1 (|det(S−I)| = {:e})",
            det.abs()
        )));
    }
    let mi = (s.matrix() - &id)
        .try_inverse()
        .ok_or_else(|| Error::Numerical("S − I not invertible".into()))?;
    Ok(symmetric_part(&((s.matrix() + &id) * mi * form_matrix(s.n()))))
}

fn symmetric_part(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

pub fn generator_matrix(g: &GeneratorSpec, n: usize) -> Result<SymplecticMatrix> {
    g.validate(n)?;
    let mut m = SymplecticMatrix::from_trusted(embed(&g.local_matrix(), &g.modes(), n));
    m.origin = Some(FlowOrigin { hessian: g.hessian(n), omega_t: g.parameter() });
    Ok(m)
}

/// Embeds a local `2k × 2k` block acting on `modes` into `2n × 2n`.
pub(crate) fn embed(local: &RMat, modes: &[usize], n: usize) -> RMat {
    let mut s = RMat::identity(2 * n, 2 * n);
    for (a, &ma) in modes.iter().enumerate() {
        for (b, &mb) in modes.iter().enumerate() {
            for r in 0..2 {
                for c in 0..2 {
                    s[(2 * ma + r, 2 * mb + c)] = local[(2 * a + r, 2 * b + c)];
                }
            }
        }
    }
    s
}

pub fn embed_single_mode(s2: &RMat, j: usize, n: usize) -> Result<SymplecticMatrix> {
    if j >= n {
        return Err(Error::InvalidArgument(format!("mode {j} out of range for n={n}")));
    }
    if s2.shape() != (2, 2) {
        return Err(Error::InvalidArgument("expected a 2×2 block".into()));
    }
    if !is_symplectic(s2, EPS_SYMP)? {
        return Err(Error::InvalidArgument("block is not symplectic".into()));
    }
    Ok(SymplecticMatrix::from_trusted(embed(s2, &[j], n)))
}

/// `S = S′ S″` with `S″ = R(θ₀)` on every mode.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub s_prime: SymplecticMatrix,
    pub s_double: SymplecticMatrix,
    /// Rotation angle of the global factor; zero when no split was needed.
    pub theta0: f64,
}

/// Rotation `R(θ)` applied to every mode.
pub fn global_rotation(theta: f64, n: usize) -> SymplecticMatrix {
    let mut s = RMat::zeros(2 * n, 2 * n);
    let r = rotation2(theta);
    for k in 0..n {
        s.view_mut((2 * k, 2 * k), (2, 2)).copy_from(&r);
    }
    SymplecticMatrix::from_trusted(s)
}

fn factor_angles() -> impl Iterator<Item = f64> {
    let golden = PI * (3.0 - 5f64.sqrt());
    [PI / 2.0, PI / 3.0, PI / 5.0]
        .into_iter()
        .chain((1..64).map(move |k| (k as f64 * golden).rem_euclid(PI)))
        .filter(|t| *t > 1e-3 && *t < PI - 1e-3)
}

pub fn factorize(s: &SymplecticMatrix) -> Result<Factorization> {
    let n = s.n();
    if s.det_plus_identity().abs() > EPS_SING && s.spectral_distance(-1.0) >= 1e-6 {
        return Ok(Factorization {
            s_prime: s.clone(),
            s_double: SymplecticMatrix::identity(n),
            theta0: 0.0,
        });
    }
    split_by_global_rotation(s)
}

/// Always splits off a nontrivial global rotation, scanning `θ₀` until both
/// factors keep away from eigenvalue `−1`.
pub fn split_by_global_rotation(s: &SymplecticMatrix) -> Result<Factorization> {
    let n = s.n();
    for theta0 in factor_angles() {
        let s_double = global_rotation(theta0, n);
        let s_prime = SymplecticMatrix::from_trusted(s.matrix() * global_rotation(-theta0, n).matrix());
        if s_prime.det_plus_identity().abs() > EPS_SING
            && s_double.det_plus_identity().abs() > EPS_SING
            && s_prime.spectral_distance(-1.0) >= 1e-3
        {
            return Ok(Factorization { s_prime, s_double, theta0 });
        }
    }
    Err(Error::FactorizationFailed)
}

/// Parameter ranges used when drawing random generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorRanges {
    pub zeta_max: f64,
    pub shear_max: f64,
    pub theta_max: f64,
}

impl Default for GeneratorRanges {
    fn default() -> Self {
        GeneratorRanges { zeta_max: 1.5, shear_max: 2.0, theta_max: 2.0 * PI }
    }
}

/// One random elementary generator on `n` modes.
pub fn random_generator<R: Rng + ?Sized>(n: usize, ranges: &GeneratorRanges, rng: &mut R) -> GeneratorSpec {
    let kinds = if n >= 2 { 5 } else { 4 };
    let mode = rng.gen_range(0..n);
    match rng.gen_range(0..kinds) {
        0 => GeneratorSpec::Rotation { mode, theta: rng.gen_range(0.0..ranges.theta_max) },
        1 => GeneratorSpec::Squeeze {
            mode,
            zeta: rng.gen_range(0.0..=ranges.zeta_max),
            phi: rng.gen_range(0.0..2.0 * PI),
        },
        2 => GeneratorSpec::ShearPosition { mode, s: rng.gen_range(0.0..=ranges.shear_max) },
        3 => GeneratorSpec::ShearMomentum { mode, s: rng.gen_range(0.0..=ranges.shear_max) },
        _ => {
            let j = rng.gen_range(0..n);
            let k = (j + rng.gen_range(1..n)) % n;
            GeneratorSpec::TwoModeRotation { j, k, theta: rng.gen_range(0.0..ranges.theta_max) }
        }
    }
}

/// Product of `2n` random generators, returned with the generating legs.
pub fn random_symplectic<R: Rng + ?Sized>(
    n: usize,
    ranges: &GeneratorRanges,
    rng: &mut R,
) -> (SymplecticMatrix, Vec<GeneratorSpec>) {
    let steps: Vec<GeneratorSpec> = (0..2 * n).map(|_| random_generator(n, ranges, rng)).collect();
    let s = steps.iter().fold(RMat::identity(2 * n, 2 * n), |acc, g| {
        embed(&g.local_matrix(), &g.modes(), n) * acc
    });
    (SymplecticMatrix::from_trusted(s), steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &RMat, b: &RMat, tol: f64) -> bool {
        max_abs(&(a - b)) <= tol
    }

    #[test]
    fn form_for_one_and_two_modes() {
        let j1 = build_form(1).unwrap();
        assert_eq!(j1.matrix(), &RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let j2 = build_form(2).unwrap();
        assert_eq!(j2.matrix().view((2, 2), (2, 2)), j1.matrix().view((0, 0), (2, 2)));
        assert_eq!(j2.matrix()[(0, 2)], 0.0);
        assert!(matches!(build_form(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn form_is_antisymmetric_and_squares_to_minus_identity() {
        let j = build_form(3).unwrap().matrix().clone();
        assert_eq!(j.transpose(), -&j);
        assert_eq!(&j * &j, -RMat::identity(6, 6));
        assert!(is_symplectic(&j, 1e-15).unwrap());
    }

    #[test]
    fn symplectic_membership() {
        assert!(is_symplectic(&RMat::identity(4, 4), 1e-12).unwrap());
        assert!(!is_symplectic(&RMat::from_diagonal_element(2, 2, 2.0), 1e-12).unwrap());
        assert!(is_symplectic(&RMat::identity(3, 3), 1e-12).is_err());
    }

    #[test]
    fn cayley_of_quarter_rotation_is_identity() {
        let r = generator_matrix(&GeneratorSpec::Rotation { mode: 0, theta: PI / 2.0 }, 1).unwrap();
        assert!(close(&cayley(&r).unwrap().c, &RMat::identity(2, 2), 1e-14));
        assert!(close(&cayley(&SymplecticMatrix::identity(2)).unwrap().c, &RMat::zeros(4, 4), 0.0));
    }

    #[test]
    fn cayley_of_squeeze() {
        let z = 0.8;
        let s = generator_matrix(&GeneratorSpec::Squeeze { mode: 0, zeta: z, phi: 0.0 }, 1).unwrap();
        let t = (z / 2.0).tanh();
        assert!(close(&cayley(&s).unwrap().c, &RMat::from_row_slice(2, 2, &[t, 0.0, 0.0, -t]), 1e-14));
    }

    #[test]
    fn cayley_rejects_half_turn() {
        let s = generator_matrix(&GeneratorSpec::Rotation { mode: 0, theta: PI }, 1).unwrap();
        assert!(matches!(cayley(&s), Err(Error::SingularCayley { .. })));
    }

    #[test]
    fn closed_forms_from_appendix() {
        let th = 0.7;
        let r = generator_matrix(&GeneratorSpec::Rotation { mode: 0, theta: th }, 1).unwrap();
        assert!(close(
            r.matrix(),
            &RMat::from_row_slice(2, 2, &[th.cos(), th.sin(), -th.sin(), th.cos()]),
            1e-15
        ));
        let f = generator_matrix(&GeneratorSpec::ShearPosition { mode: 0, s: 1.3 }, 1).unwrap();
        assert_eq!(f.matrix(), &RMat::from_row_slice(2, 2, &[1.0, 1.3, 0.0, 1.0]));
        let bs = generator_matrix(&GeneratorSpec::TwoModeRotation { j: 0, k: 1, theta: PI / 2.0 }, 2)
            .unwrap();
        let j2 = form_matrix(1);
        let mut expect = RMat::identity(4, 4);
        expect.view_mut((0, 2), (2, 2)).copy_from(&j2);
        expect.view_mut((2, 0), (2, 2)).copy_from(&j2);
        assert!(close(bs.matrix(), &(expect / 2f64.sqrt()), 1e-15));
    }

    #[test]
    fn embedding_places_block_on_its_mode() {
        let r = rotation2(0.4);
        let e = embed_single_mode(&r, 1, 2).unwrap();
        assert!(close(&e.matrix().view((2, 2), (2, 2)).into_owned(), &r, 0.0));
        assert!(close(&e.matrix().view((0, 0), (2, 2)).into_owned(), &RMat::identity(2, 2), 0.0));
        assert_eq!(embed_single_mode(&RMat::identity(2, 2), 0, 3).unwrap().matrix(), &RMat::identity(6, 6));
        assert!(embed_single_mode(&r, 2, 2).is_err());
    }

    #[test]
    fn factorize_half_turn() {
        let s = generator_matrix(&GeneratorSpec::Rotation { mode: 0, theta: PI }, 1).unwrap();
        let f = factorize(&s).unwrap();
        assert!(f.theta0 > 0.0);
        assert!(f.s_prime.det_plus_identity().abs() > EPS_SING);
        assert!(f.s_double.det_plus_identity().abs() > EPS_SING);
        assert!(close(&(f.s_prime.matrix() * f.s_double.matrix()), s.matrix(), 1e-12));
    }

    #[test]
    fn factorize_is_trivial_away_from_minus_one() {
        let s = generator_matrix(&GeneratorSpec::Squeeze { mode: 0, zeta: 0.3, phi: 1.0 }, 1).unwrap();
        let f = factorize(&s).unwrap();
        assert_eq!(f.theta0, 0.0);
        assert_eq!(f.s_double.matrix(), &RMat::identity(2, 2));
    }

    #[test]
    fn validation_rejects_bad_specs() {
        assert!(GeneratorSpec::ShearPosition { mode: 0, s: -1.0 }.validate(1).is_err());
        assert!(GeneratorSpec::Squeeze { mode: 0, zeta: 1.0, phi: 7.0 }.validate(1).is_err());
        assert!(GeneratorSpec::TwoModeRotation { j: 1, k: 1, theta: 1.0 }.validate(2).is_err());
        assert!(GeneratorSpec::Rotation { mode: 2, theta: 1.0 }.validate(2).is_err());
    }

    #[test]
    fn generator_json_shape() {
        let g = GeneratorSpec::Squeeze { mode: 1, zeta: 0.5, phi: 0.0 };
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"kind":"squeeze","mode":1,"zeta":0.5,"phi":0.0}"#);
        assert_eq!(serde_json::from_str::<GeneratorSpec>(&s).unwrap(), g);
    }
}
