//! Gaussian states described by first moments and a covariance matrix.
//!
//! The covariance matrix is dimensionless, `V_ij = Tr[ρ(x̂_i x̂_j + x̂_j x̂_i)]/(2ħ)`,
//! so the vacuum has `V = I/2` whatever `ħ` is.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, min_hermitian_eigenvalue, sym_apply, sym_sqrt, to_complex, RMat};
use crate::symplectic::{form_matrix, random_symplectic, GeneratorRanges, SymplecticMatrix};

/// Slack allowed on the bona-fide test and the single-mode determinant bound.
pub const BONA_FIDE_TOL: f64 = 1e-9;

/// A real symmetric `2n × 2n` covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n: usize,
    v: RMat,
}

impl CovarianceMatrix {
    /// Validates symmetry and the bona-fide condition `V + (i/2)J ⪰ 0`.
    pub fn new(v: RMat) -> Result<Self> {
        let cm = Self::from_symmetric(v)?;
        let slack = cm.bona_fide_slack();
        if slack < -BONA_FIDE_TOL {
            return Err(Error::InvalidState(format!(
                "bona-fide condition violated: min eig(V + iJ/2) = {slack:e}"
            )));
        }
        for k in 0..cm.n {
            let d = cm.block(k).determinant();
            if d < 0.25 - BONA_FIDE_TOL {
                return Err(Error::InvalidState(format!("mode {k} has det V = {d} < 1/4")));
            }
        }
        Ok(cm)
    }

    /// Checks shape and symmetry only; used for estimates that may violate
    /// the uncertainty principle and must be reported rather than rejected.
    pub fn from_symmetric(v: RMat) -> Result<Self> {
        if v.nrows() != v.ncols() || !v.nrows().is_multiple_of(2) || v.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "covariance matrix must be 2n×2n, got {}×{}",
                v.nrows(),
                v.ncols()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidState("non-finite covariance entry".into()));
        }
        let asym = max_abs(&(&v - v.transpose()));
        if asym > 1e-10 * max_abs(&v).max(1.0) {
            return Err(Error::InvalidState(format!("covariance matrix not symmetric ({asym:e})")));
        }
        let v = (&v + v.transpose()) * 0.5;
        Ok(CovarianceMatrix { n: v.nrows() / 2, v })
    }

    pub fn vacuum(n: usize) -> Self {
        CovarianceMatrix { n, v: RMat::identity(2 * n, 2 * n) * 0.5 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &RMat {
        &self.v
    }

    /// Minimum eigenvalue of the Hermitian matrix `V + (i/2)J`.
    pub fn bona_fide_slack(&self) -> f64 {
        let j = to_complex(&form_matrix(self.n)) * Complex64::new(0.0, 0.5);
        min_hermitian_eigenvalue(&(to_complex(&self.v) + j))
    }

    /// Single-mode block `V^(k)`.
    pub fn block(&self, k: usize) -> RMat {
        self.v.view((2 * k, 2 * k), (2, 2)).into_owned()
    }

    /// Intermodal block `E^(j,k)` (rows of mode `j`, columns of mode `k`).
    pub fn cross_block(&self, j: usize, k: usize) -> RMat {
        self.v.view((2 * j, 2 * k), (2, 2)).into_owned()
    }

    pub fn mode_pair(&self, j: usize, k: usize) -> Result<ModeBlockView> {
        if j >= self.n || k >= self.n || j == k {
            return Err(Error::InvalidArgument(format!("invalid mode pair ({j}, {k})")));
        }
        Ok(ModeBlockView { j, k, v_j: self.block(j), v_k: self.block(k), e_jk: self.cross_block(j, k) })
    }
}

/// The reduced two-mode blocks of a covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBlockView {
    pub j: usize,
    pub k: usize,
    pub v_j: RMat,
    pub v_k: RMat,
    pub e_jk: RMat,
}

impl ModeBlockView {
    /// Entries `(v, w, y, z)` of `E = [[v, w], [y, z]]`.
    pub fn vwyz(&self) -> (f64, f64, f64, f64) {
        (self.e_jk[(0, 0)], self.e_jk[(0, 1)], self.e_jk[(1, 0)], self.e_jk[(1, 1)])
    }

    /// The 4×4 reduced covariance matrix of modes `(j, k)`.
    pub fn assembled(&self) -> RMat {
        let mut m = RMat::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(&self.v_j);
        m.view_mut((2, 2), (2, 2)).copy_from(&self.v_k);
        m.view_mut((0, 2), (2, 2)).copy_from(&self.e_jk);
        m.view_mut((2, 0), (2, 2)).copy_from(&self.e_jk.transpose());
        m
    }
}

/// Symplectic eigenvalues and the diagonalizing symplectic matrix,
/// `V = S_w D S_wᵀ` with `D = diag(ν₁, ν₁, ν₂, ν₂, …)`.
#[derive(Debug, Clone)]
pub struct Williamson {
    pub nu: Vec<f64>,
    pub s_w: RMat,
}

/// A Gaussian state with mean, covariance matrix and the unit `ħ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: CovarianceMatrix,
    hbar: f64,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: CovarianceMatrix, hbar: f64) -> Result<Self> {
        if mean.len() != 2 * cov.n() {
            return Err(Error::DimensionMismatch { expected: 2 * cov.n(), got: mean.len() });
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        Ok(GaussianState { mean, cov, hbar })
    }

    pub fn zero_mean(cov: CovarianceMatrix) -> Self {
        GaussianState { mean: DVector::zeros(2 * cov.n()), cov, hbar: 1.0 }
    }

    pub fn vacuum(n: usize) -> Self {
        Self::zero_mean(CovarianceMatrix::vacuum(n))
    }

    /// Product thermal state `V = ν I`.
    pub fn thermal(n: usize, nu: f64) -> Result<Self> {
        Ok(Self::zero_mean(CovarianceMatrix::new(RMat::identity(2 * n, 2 * n) * nu)?))
    }

    /// Two-mode squeezed vacuum with squeezing `r`.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let s = two_mode_squeezer(r);
        let v = &s * RMat::identity(4, 4) * 0.5 * s.transpose();
        Self::zero_mean(CovarianceMatrix { n: 2, v })
    }

    pub fn n(&self) -> usize {
        self.cov.n()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        self.hbar = hbar;
        Ok(self)
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &CovarianceMatrix {
        &self.cov
    }

    pub fn is_zero_mean(&self, tol: f64) -> bool {
        self.mean.iter().all(|x| x.abs() <= tol)
    }

    /// The state displaced so that its first moments vanish.
    pub fn translate_to_zero(&self) -> Self {
        GaussianState { mean: DVector::zeros(self.mean.len()), ..self.clone() }
    }

    /// `mean′ = S·mean`, `V′ = S V Sᵀ`.
    pub fn evolve(&self, s: &SymplecticMatrix) -> Result<Self> {
        if s.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: 2 * self.n(), got: 2 * s.n() });
        }
        let sm = s.matrix();
        let v = sm * self.cov.matrix() * sm.transpose();
        Ok(GaussianState {
            mean: sm * &self.mean,
            cov: CovarianceMatrix { n: self.n(), v: (&v + v.transpose()) * 0.5 },
            hbar: self.hbar,
        })
    }

    /// Partial trace onto `modes` (kept in the given order).
    pub fn reduce(&self, modes: &[usize]) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidArgument("empty mode set".into()));
        }
        if let Some(&m) = modes.iter().find(|&&m| m >= self.n()) {
            return Err(Error::InvalidArgument(format!("mode {m} out of range")));
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let v = RMat::from_fn(idx.len(), idx.len(), |r, c| self.cov.matrix()[(idx[r], idx[c])]);
        let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i]));
        Ok(GaussianState { mean, cov: CovarianceMatrix { n: modes.len(), v }, hbar: self.hbar })
    }

    pub fn wigner(&self, x: &DVector<f64>) -> Result<f64> {
        let n = self.n();
        if x.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: x.len() });
        }
        let det = self.cov.matrix().determinant();
        let inv = self.cov.matrix().clone().try_inverse();
        match inv {
            Some(inv) if det > 0.0 => {
                let d = x - &self.mean;
                let quad = d.dot(&(inv * &d));
                Ok((-quad / (2.0 * self.hbar)).exp()
                    / ((2.0 * PI * self.hbar).powi(n as i32) * det.sqrt()))
            }
            _ => Err(Error::InvalidState(format!("singular covariance matrix (det = {det:e})"))),
        }
    }

    /// `χ(ξ) = (2πħ)^{−n} exp[(i/ħ) ξᵀJ x̄] exp[−ξᵀJᵀVJξ/(2ħ)]`.
    pub fn char_fn(&self, xi: &DVector<f64>) -> Result<Complex64> {
        let n = self.n();
        if xi.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: xi.len() });
        }
        let j = form_matrix(n);
        let jxi = &j * xi;
        let quad = jxi.dot(&(self.cov.matrix() * &jxi));
        let phase = xi.dot(&(&j * &self.mean)) / self.hbar;
        let norm = (2.0 * PI * self.hbar).powi(n as i32);
        Ok(Complex64::from_polar((-quad / (2.0 * self.hbar)).exp() / norm, phase))
    }

    /// Purity `Tr ρ_k² = 1/(2√τ)` of the reduced state of `mode`, `τ = det V^(k)`.
    pub fn purity(&self, mode: usize) -> Result<f64> {
        if mode >= self.n() {
            return Err(Error::InvalidArgument(format!("mode {mode} out of range")));
        }
        Ok(purity_from_tau(self.cov.block(mode).determinant()))
    }

    /// Rényi-2 entropy of entanglement between `mode` and the rest.
    pub fn renyi2_entanglement(&self, mode: usize) -> Result<f64> {
        if mode >= self.n() {
            return Err(Error::InvalidArgument(format!("mode {mode} out of range")));
        }
        let w = self.williamson()?;
        if let Some(nu) = w.nu.iter().find(|nu| (*nu - 0.5).abs() > 1e-7) {
            return Err(Error::NotApplicable(format!(
                "global state is mixed (symplectic eigenvalue {nu}); Rényi-2 entanglement needs a pure state"
            )));
        }
        Ok(renyi2_from_tau(self.cov.block(mode).determinant()))
    }

    pub fn williamson(&self) -> Result<Williamson> {
        williamson(self.cov.matrix())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GaussianStateJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<GaussianStateJson>(s)?.try_into()
    }
}

/// `1/(2√τ)` for a single-mode block with determinant `τ`.
pub fn purity_from_tau(tau: f64) -> f64 {
    0.5 / tau.sqrt()
}

/// `(1/2) ln τ + ln 2`, the Rényi-2 entropy of a single-mode reduction.
pub fn renyi2_from_tau(tau: f64) -> f64 {
    0.5 * tau.ln() + 2f64.ln()
}

/// Symplectic matrix of the two-mode squeezer, `cosh r·I₄ + sinh r·(Z ⊗ σ_x)`.
pub fn two_mode_squeezer(r: f64) -> RMat {
    let (c, s) = (r.cosh(), r.sinh());
    RMat::from_row_slice(
        4,
        4,
        &[
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        ],
    )
}

/// Williamson normal form of a positive-definite covariance matrix.
pub fn williamson(v: &RMat) -> Result<Williamson> {
    let n = v.nrows() / 2;
    let eig = v.clone().symmetric_eigen();
    if eig.eigenvalues.min() <= 0.0 {
        return Err(Error::InvalidState("covariance matrix is not positive definite".into()));
    }
    let root = sym_sqrt(v);
    let a = &root * form_matrix(n) * &root;
    let neg_sq = -(&a * &a);
    let se = ((&neg_sq + neg_sq.transpose()) * 0.5).symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&x, &y| se.eigenvalues[x].total_cmp(&se.eigenvalues[y]));
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(2 * n);
    let mut nus = Vec::with_capacity(n);
    for &i in &order {
        if basis.len() == 2 * n {
            break;
        }
        let mut u = se.eigenvectors.column(i).into_owned();
        for b in &basis {
            u -= b * b.dot(&u);
        }
        if u.norm() < 0.5 {
            continue;
        }
        u.normalize_mut();
        let nu = se.eigenvalues[i].max(0.0).sqrt();
        let mut w = -(&a * &u) / nu;
        for b in &basis {
            w -= b * b.dot(&w);
        }
        w.normalize_mut();
        basis.push(u);
        basis.push(w);
        nus.push(nu);
    }
    if basis.len() != 2 * n {
        return Err(Error::Numerical("Williamson pairing failed".into()));
    }
    let o = RMat::from_columns(&basis);
    let d_inv_sqrt = RMat::from_diagonal(&DVector::from_iterator(
        2 * n,
        nus.iter().flat_map(|nu| [1.0 / nu.sqrt(), 1.0 / nu.sqrt()]),
    ));
    Ok(Williamson { nu: nus, s_w: root * o * d_inv_sqrt })
}

/// How to draw a random state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateKind {
    Pure,
    /// Symplectic eigenvalues drawn uniformly from `[1/2, nu_max]`.
    Mixed { nu_max: f64 },
}

pub fn random_state(n: usize, kind: StateKind, seed: u64) -> GaussianState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_state_with(n, kind, &GeneratorRanges::default(), &mut rng)
}

/// Random zero-mean state `V = S D Sᵀ` with `S` a product of `2n` random generators.
pub fn random_state_with<R: Rng + ?Sized>(
    n: usize,
    kind: StateKind,
    ranges: &GeneratorRanges,
    rng: &mut R,
) -> GaussianState {
    let (s, _) = random_symplectic(n, ranges, rng);
    let d = DVector::from_iterator(
        2 * n,
        (0..n).flat_map(|_| {
            let nu = match kind {
                StateKind::Pure => 0.5,
                StateKind::Mixed { nu_max } => rng.gen_range(0.5..=nu_max.max(0.5)),
            };
            [nu, nu]
        }),
    );
    let v = s.matrix() * DMatrix::from_diagonal(&d) * s.matrix().transpose();
    GaussianState::zero_mean(CovarianceMatrix { n, v: (&v + v.transpose()) * 0.5 })
}

/// Polar split `S_w = P·O` into a positive symplectic and an orthogonal symplectic factor.
pub fn polar_split(s: &RMat) -> (RMat, RMat) {
    let p = sym_apply(&(s * s.transpose()), |x| x.sqrt());
    let p_inv = sym_apply(&(s * s.transpose()), |x| 1.0 / x.sqrt());
    let o = p_inv * s;
    (p, o)
}

#[derive(Serialize, Deserialize)]
struct GaussianStateJson {
    n: usize,
    hbar: f64,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl From<&GaussianState> for GaussianStateJson {
    fn from(s: &GaussianState) -> Self {
        let v = s.cov.matrix();
        GaussianStateJson {
            n: s.n(),
            hbar: s.hbar,
            mean: s.mean.iter().copied().collect(),
            cov: (0..v.nrows()).map(|r| v.row(r).iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<GaussianStateJson> for GaussianState {
    type Error = Error;

    fn try_from(j: GaussianStateJson) -> Result<Self> {
        let dim = 2 * j.n;
        if j.cov.len() != dim || j.cov.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidState(format!("cov must be {dim}×{dim}")));
        }
        let v = RMat::from_fn(dim, dim, |r, c| j.cov[r][c]);
        GaussianState::new(DVector::from_vec(j.mean), CovarianceMatrix::new(v)?, j.hbar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{generator_matrix, GeneratorSpec};

    #[test]
    fn vacuum_is_invariant_under_rotation_and_beam_splitter() {
        let vac = GaussianState::vacuum(2);
        for g in [
            GeneratorSpec::Rotation { mode: 1, theta: 1.1 },
            GeneratorSpec::TwoModeRotation { j: 0, k: 1, theta: 0.9 },
        ] {
            let out = vac.evolve(&generator_matrix(&g, 2).unwrap()).unwrap();
            assert!(max_abs(&(out.cov().matrix() - vac.cov().matrix())) < 1e-15);
        }
    }

    #[test]
    fn squeezed_vacuum_matches_direct_product() {
        let g = GeneratorSpec::Squeeze { mode: 0, zeta: 0.7, phi: 0.0 };
        let z = generator_matrix(&g, 1).unwrap();
        let out = GaussianState::vacuum(1).evolve(&z).unwrap();
        let expect = z.matrix() * z.matrix().transpose() * 0.5;
        assert!(max_abs(&(out.cov().matrix() - expect)) < 1e-15);
        assert!((out.cov().matrix()[(0, 0)] - 0.5 * (1.4f64).cosh()).abs() < 1e-14);
    }

    #[test]
    fn tms_reduction_is_thermal() {
        let r = 0.8;
        let red = GaussianState::two_mode_squeezed(r).reduce(&[0]).unwrap();
        let expect = RMat::identity(2, 2) * ((2.0 * r).cosh() / 2.0);
        assert!(max_abs(&(red.cov().matrix() - expect)) < 1e-14);
        let tms = GaussianState::two_mode_squeezed(r);
        assert_eq!(tms.reduce(&[0, 1]).unwrap(), tms);
        assert!(tms.reduce(&[]).is_err());
        assert!(tms.reduce(&[2]).is_err());
    }

    #[test]
    fn wigner_and_char_fn_of_vacuum() {
        let vac = GaussianState::vacuum(1);
        assert!((vac.wigner(&DVector::zeros(2)).unwrap() - 1.0 / PI).abs() < 1e-15);
        let chi = vac.char_fn(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!((chi - Complex64::new((-0.25f64).exp() / (2.0 * PI), 0.0)).norm() < 1e-15);
        let chi0 = vac.char_fn(&DVector::zeros(2)).unwrap();
        assert!((chi0.re - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn wigner_integrates_to_one() {
        let st = random_state(1, StateKind::Mixed { nu_max: 1.5 }, 3).with_hbar(0.7).unwrap();
        let v = st.cov().matrix() * st.hbar();
        let ext = 8.0 * v[(0, 0)].max(v[(1, 1)]).sqrt();
        let m = 400;
        let h = 2.0 * ext / m as f64;
        let mut total = 0.0;
        for i in 0..m {
            for k in 0..m {
                let x = DVector::from_vec(vec![-ext + (i as f64 + 0.5) * h, -ext + (k as f64 + 0.5) * h]);
                total += st.wigner(&x).unwrap() * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-3, "integral {total}");
    }

    #[test]
    fn char_fn_is_hermitian_for_zero_mean() {
        let st = random_state(2, StateKind::Pure, 9);
        let xi = DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1]);
        let a = st.char_fn(&xi).unwrap();
        let b = st.char_fn(&(-&xi)).unwrap();
        assert!((a - b.conj()).norm() < 1e-15);
    }

    #[test]
    fn purity_examples() {
        assert!((GaussianState::vacuum(1).purity(0).unwrap() - 1.0).abs() < 1e-15);
        let r = 0.6;
        let p = GaussianState::two_mode_squeezed(r).purity(1).unwrap();
        assert!((p - 1.0 / (2.0 * r).cosh()).abs() < 1e-14);
        let th = GaussianState::thermal(1, 1.7).unwrap();
        assert!((th.purity(0).unwrap() - 1.0 / 3.4).abs() < 1e-15);
    }

    #[test]
    fn renyi_examples() {
        assert!(GaussianState::vacuum(2).renyi2_entanglement(0).unwrap().abs() < 1e-12);
        let r = 1.0;
        let e = GaussianState::two_mode_squeezed(r).renyi2_entanglement(0).unwrap();
        assert!((e - (2.0 * r).cosh().ln()).abs() < 1e-12);
        let mixed = GaussianState::thermal(2, 1.0).unwrap();
        assert!(matches!(mixed.renyi2_entanglement(0), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn williamson_reconstructs() {
        let st = random_state(2, StateKind::Mixed { nu_max: 2.0 }, 11);
        let w = st.williamson().unwrap();
        let d = DVector::from_iterator(4, w.nu.iter().flat_map(|x| [*x, *x]));
        let back = &w.s_w * RMat::from_diagonal(&d) * w.s_w.transpose();
        assert!(max_abs(&(back - st.cov().matrix())) < 1e-10);
        assert!(crate::symplectic::is_symplectic(&w.s_w, 1e-9).unwrap());
    }

    #[test]
    fn pure_random_state_has_half_symplectic_eigenvalues() {
        let st = random_state(3, StateKind::Pure, 5);
        for nu in st.williamson().unwrap().nu {
            assert!((nu - 0.5).abs() < 1e-8);
        }
        let m = random_state(2, StateKind::Mixed { nu_max: 0.5 }, 5);
        for nu in m.williamson().unwrap().nu {
            assert!((nu - 0.5).abs() < 1e-8);
        }
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let st = random_state(2, StateKind::Mixed { nu_max: 1.2 }, 1);
        let back = GaussianState::from_json(&st.to_json().unwrap()).unwrap();
        assert!(max_abs(&(back.cov().matrix() - st.cov().matrix())) == 0.0);
        let bad = r#"{"n":1,"hbar":1.0,"mean":[0,0],"cov":[[0.1,0],[0,0.1]]}"#;
        assert!(matches!(GaussianState::from_json(bad), Err(Error::InvalidState(_))));
    }

    #[test]
    fn polar_split_factors_are_symplectic() {
        let st = random_state(2, StateKind::Pure, 2);
        let w = st.williamson().unwrap();
        let (p, o) = polar_split(&w.s_w);
        assert!(max_abs(&(&p * &o - &w.s_w)) < 1e-10);
        assert!(max_abs(&(&o * o.transpose() - RMat::identity(4, 4))) < 1e-10);
        assert!(crate::symplectic::is_symplectic(&o, 1e-9).unwrap());
    }
}
