//! Brute-force truncated Fock-space oracle for one or two modes.
//!
//! States are stored as weighted ensembles of pure vectors
//! `ρ = Σ_m p_m |ψ_m⟩⟨ψ_m|`, with `|ψ_m⟩ = U_w|m⟩` and thermal weights `p_m`.
//! Quadratic Hamiltonians `Ĥ = (1/2) x̂ᵀ H x̂` are built from truncated ladder
//! operators with same-mode products normal-ordered exactly, which keeps the
//! truncated `Ĥ` Hermitian, and are exponentiated on vectors by a Chebyshev
//! expansion. Nothing here uses the closed-form trace formulas.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{polar_split, GaussianState};
use crate::linalg::{CMat, RMat};
use crate::phase::MetaplecticEvolution;
use crate::symplectic::form_matrix;

pub type CVec = DVector<Complex64>;

pub const DEFAULT_CUTOFF_ONE_MODE: usize = 60;
pub const DEFAULT_CUTOFF_TWO_MODES: usize = 40;
/// Largest tolerated change of a result when the cutoff is raised by a quarter.
pub const DEFECT_LIMIT: f64 = 1e-6;
/// Thermal components lighter than this are dropped from the ensemble.
const WEIGHT_FLOOR: f64 = 1e-13;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Truncated Fock basis on `n ≤ 2` modes with `cutoff` levels per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    n: usize,
    cutoff: usize,
}

impl FockSpace {
    pub fn new(n: usize, cutoff: usize) -> Result<Self> {
        if n == 0 || n > 2 {
            return Err(Error::Unsupported(format!("the Fock oracle handles 1 or 2 modes, not {n}")));
        }
        if cutoff < 2 {
            return Err(Error::InvalidArgument(format!("cutoff must be at least 2, got {cutoff}")));
        }
        Ok(FockSpace { n, cutoff })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.n as u32)
    }

    /// Occupations of basis index `i` (mode 0 is the slow index).
    pub fn occupations(&self, i: usize) -> [usize; 2] {
        if self.n == 1 {
            [i, 0]
        } else {
            [i / self.cutoff, i % self.cutoff]
        }
    }

    pub fn index(&self, occ: [usize; 2]) -> usize {
        if self.n == 1 {
            occ[0]
        } else {
            occ[0] * self.cutoff + occ[1]
        }
    }

    pub fn basis_vector(&self, occ: [usize; 2]) -> CVec {
        let mut v = CVec::zeros(self.dim());
        v[self.index(occ)] = Complex64::new(1.0, 0.0);
        v
    }

    /// `Ĥ = (1/2) x̂ᵀ H x̂` in this basis.
    pub fn quadratic_hamiltonian(&self, h: &RMat) -> Result<SparseOp> {
        if h.shape() != (2 * self.n, 2 * self.n) {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, got: h.nrows() });
        }
        let mut terms: Vec<(Complex64, [Ladder; 2])> = Vec::new();
        for j in 0..self.n {
            let (qq, pp, qp) = (h[(2 * j, 2 * j)], h[(2 * j + 1, 2 * j + 1)], h[(2 * j, 2 * j + 1)]);
            let mut ops = [Ladder::Id, Ladder::Id];
            let mut push = |c: Complex64, op: Ladder| {
                if c != ZERO {
                    ops[j] = op;
                    terms.push((c, ops));
                }
            };
            push(Complex64::new(0.25 * (qq - pp), -0.5 * qp), Ladder::Lower2);
            push(Complex64::new(0.25 * (qq - pp), 0.5 * qp), Ladder::Raise2);
            push(Complex64::new(0.5 * (qq + pp), 0.0), Ladder::Number);
            push(Complex64::new(0.25 * (qq + pp), 0.0), Ladder::Id);
        }
        if self.n == 2 {
            // x_q = (a + a†)/√2, x_p = (−i a + i a†)/√2.
            let weights = |d: usize| -> [(Ladder, Complex64); 2] {
                if d == 0 {
                    [(Ladder::Lower, Complex64::new(1.0, 0.0)), (Ladder::Raise, Complex64::new(1.0, 0.0))]
                } else {
                    [(Ladder::Lower, -I), (Ladder::Raise, I)]
                }
            };
            for dj in 0..2 {
                for dk in 0..2 {
                    let hv = h[(dj, 2 + dk)];
                    if hv == 0.0 {
                        continue;
                    }
                    for (oj, wj) in weights(dj) {
                        for (ok, wk) in weights(dk) {
                            terms.push((wj * wk * (0.5 * hv), [oj, ok]));
                        }
                    }
                }
            }
        }
        Ok(SparseOp::from_terms(self, &terms))
    }

    /// `q̂` (`p = false`) or `p̂` (`p = true`) of `mode`, `ħ = 1`.
    pub fn quadrature(&self, mode: usize, p: bool) -> SparseOp {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (cl, cr) = if p {
            (Complex64::new(0.0, -s), Complex64::new(0.0, s))
        } else {
            (Complex64::new(s, 0.0), Complex64::new(s, 0.0))
        };
        let mut lo = [Ladder::Id, Ladder::Id];
        let mut hi = [Ladder::Id, Ladder::Id];
        lo[mode] = Ladder::Lower;
        hi[mode] = Ladder::Raise;
        SparseOp::from_terms(self, &[(cl, lo), (cr, hi)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ladder {
    Id,
    Lower,
    Raise,
    Lower2,
    Raise2,
    Number,
}

impl Ladder {
    fn act(self, k: usize, cutoff: usize) -> Option<(usize, f64)> {
        let kf = k as f64;
        let (to, amp) = match self {
            Ladder::Id => (k as i64, 1.0),
            Ladder::Lower => (k as i64 - 1, kf.sqrt()),
            Ladder::Raise => (k as i64 + 1, (kf + 1.0).sqrt()),
            Ladder::Lower2 => (k as i64 - 2, (kf * (kf - 1.0)).max(0.0).sqrt()),
            Ladder::Raise2 => (k as i64 + 2, ((kf + 1.0) * (kf + 2.0)).sqrt()),
            Ladder::Number => (k as i64, kf),
        };
        (to >= 0 && (to as usize) < cutoff && amp != 0.0).then_some((to as usize, amp))
    }
}

/// Compressed sparse rows over the Fock basis.
#[derive(Debug, Clone)]
pub struct SparseOp {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOp {
    fn from_terms(space: &FockSpace, terms: &[(Complex64, [Ladder; 2])]) -> Self {
        let dim = space.dim();
        let mut trip: Vec<(usize, usize, Complex64)> = Vec::new();
        for col in 0..dim {
            let occ = space.occupations(col);
            for (c, ops) in terms {
                let Some((t0, a0)) = ops[0].act(occ[0], space.cutoff) else { continue };
                let (t1, a1) = if space.n == 2 {
                    match ops[1].act(occ[1], space.cutoff) {
                        Some(x) => x,
                        None => continue,
                    }
                } else {
                    (0, 1.0)
                };
                trip.push((space.index([t0, t1]), col, c * (a0 * a1)));
            }
        }
        trip.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOp { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim);
        for r in 0..self.dim {
            let mut acc = ZERO;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * v[self.cols[idx]];
            }
            out[r] = acc;
        }
        out
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[idx])] += self.vals[idx];
            }
        }
        m
    }

    /// Drops entries below `rel` times the largest magnitude.
    fn pruned(mut self, rel: f64) -> Self {
        let cut = rel * self.vals.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        let mut row_ptr = vec![0usize; self.dim + 1];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for r in 0..self.dim {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[idx].norm() > cut {
                    cols.push(self.cols[idx]);
                    vals.push(self.vals[idx]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
        self
    }

    fn diagonal_only(&self) -> Option<Vec<Complex64>> {
        let mut d = vec![ZERO; self.dim];
        for (r, dr) in d.iter_mut().enumerate() {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[idx] != r {
                    if self.vals[idx].norm() > 0.0 {
                        return None;
                    }
                } else {
                    *dr += self.vals[idx];
                }
            }
        }
        Some(d)
    }

    /// Dense `exp(−iĤ)` on each fixed-total-occupation block, if `Ĥ` conserves
    /// the total occupation.
    fn number_block_exponentials(&self, space: &FockSpace) -> Option<Vec<(Vec<usize>, CMat)>> {
        let total = |i: usize| space.occupations(i).iter().take(space.n).sum::<usize>();
        for r in 0..self.dim {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                if total(self.cols[idx]) != total(r) && self.vals[idx].norm() > 0.0 {
                    return None;
                }
            }
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); space.n * (space.cutoff - 1) + 1];
        for i in 0..self.dim {
            members[total(i)].push(i);
        }
        let mut position = vec![0usize; self.dim];
        for m in &members {
            for (k, &i) in m.iter().enumerate() {
                position[i] = k;
            }
        }
        let blocks = members
            .into_iter()
            .map(|m| {
                let mut h = CMat::zeros(m.len(), m.len());
                for &r in &m {
                    for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                        if self.vals[idx].norm() > 0.0 {
                            h[(position[r], position[self.cols[idx]])] += self.vals[idx];
                        }
                    }
                }
                let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
                let eig = h.symmetric_eigen();
                let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l));
                let u = &eig.eigenvectors * CMat::from_diagonal(&phases) * eig.eigenvectors.adjoint();
                (m, u)
            })
            .collect();
        Some(blocks)
    }

    /// Gershgorin interval containing the (real) spectrum of a Hermitian operator.
    fn spectral_bounds(&self) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in 0..self.dim {
            let (mut centre, mut radius) = (0.0, 0.0);
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[idx] == r {
                    centre += self.vals[idx].re;
                } else {
                    radius += self.vals[idx].norm();
                }
            }
            lo = lo.min(centre - radius);
            hi = hi.max(centre + radius);
        }
        (lo, hi)
    }

    /// `exp(−iĤ) v` for Hermitian `Ĥ`.
    pub fn expm_minus_i(&self, v: &CVec) -> CVec {
        if let Some(d) = self.diagonal_only() {
            return CVec::from_iterator(self.dim, v.iter().zip(d).map(|(x, h)| x * (-I * h).exp()));
        }
        let (lo, hi) = self.spectral_bounds();
        let centre = 0.5 * (hi + lo);
        let half = 0.5 * (hi - lo) * (1.0 + 1e-12) + 1e-300;
        let kmax = (half + 12.0 * half.cbrt() + 25.0).ceil() as usize;
        let bessel = bessel_j_sequence(half, kmax);
        let scaled = |x: &CVec| (self.apply(x) - x * Complex64::new(centre, 0.0)) / Complex64::new(half, 0.0);
        let mut prev = v.clone();
        let mut acc = v * Complex64::new(bessel[0], 0.0);
        if kmax >= 1 {
            let mut cur = scaled(v);
            let mut coeff = -I;
            acc += &cur * (coeff * 2.0 * bessel[1]);
            for (k, jk) in bessel.iter().enumerate().skip(2) {
                if k as f64 > half && jk.abs() < 1e-18 {
                    break;
                }
                let next = scaled(&cur) * Complex64::new(2.0, 0.0) - &prev;
                coeff *= -I;
                acc += &next * (coeff * 2.0 * *jk);
                prev = cur;
                cur = next;
            }
        }
        acc * (-I * centre).exp()
    }
}

/// `J_0(x) … J_kmax(x)` by Miller's backward recurrence.
fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x < 1e-12 {
        out[0] = 1.0;
        if kmax >= 1 {
            out[1] = 0.5 * x;
        }
        return out;
    }
    let mut m = kmax.max(x.ceil() as usize) + 60;
    if m % 2 == 1 {
        m += 1;
    }
    let mut j = vec![0.0_f64; m + 2];
    j[m] = 1e-300;
    for k in (1..=m).rev() {
        j[k - 1] = (2.0 * k as f64 / x) * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for (k, o) in out.iter_mut().enumerate() {
        *o = j[k] / norm;
    }
    out
}

/// `exp(−iĤ)` prepared for repeated application.
enum Propagator {
    Diagonal(Vec<Complex64>),
    /// Number-conserving `Ĥ`: blocks of fixed total occupation.
    Blocks(Vec<(Vec<usize>, CMat)>),
    /// `Ĥ` acting on one mode only; `u` is its dense single-mode exponential.
    Local { n: usize, mode: usize, u: CMat },
    Chebyshev(SparseOp),
}

impl Propagator {
    fn new(space: &FockSpace, h: SparseOp) -> Self {
        let h = h.pruned(1e-14);
        if let Some(d) = h.diagonal_only() {
            return Propagator::Diagonal(d.into_iter().map(|x| (-I * x).exp()).collect());
        }
        match h.number_block_exponentials(space) {
            Some(b) => Propagator::Blocks(b),
            None => Propagator::Chebyshev(h),
        }
    }

    /// `exp(−iĤ)` for `Ĥ = (1/2) x̂ᵀ H x̂` with the 2×2 `H` on `mode`.
    fn local(space: &FockSpace, mode: usize, h: &RMat) -> Result<Self> {
        let dense = FockSpace::new(1, space.cutoff)?.quadratic_hamiltonian(h)?.to_dense();
        let herm = (&dense + dense.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l));
        let u = &eig.eigenvectors * CMat::from_diagonal(&phases) * eig.eigenvectors.adjoint();
        Ok(Propagator::Local { n: space.n, mode, u })
    }

    /// Picks the local form when the Hessian touches a single mode.
    fn for_hessian(space: &FockSpace, h: &RMat) -> Result<Self> {
        let touched: Vec<usize> = (0..space.n)
            .filter(|&m| (0..2 * space.n).any(|c| h[(2 * m, c)] != 0.0 || h[(2 * m + 1, c)] != 0.0))
            .collect();
        if let [mode] = touched[..] {
            return Self::local(space, mode, &h.view((2 * mode, 2 * mode), (2, 2)).into_owned());
        }
        Ok(Self::new(space, space.quadratic_hamiltonian(h)?))
    }

    fn apply(&self, v: &CVec) -> CVec {
        match self {
            Propagator::Diagonal(d) => CVec::from_iterator(v.len(), v.iter().zip(d).map(|(x, e)| x * e)),
            Propagator::Blocks(blocks) => {
                let mut out = CVec::zeros(v.len());
                for (idx, u) in blocks {
                    let part = CVec::from_iterator(idx.len(), idx.iter().map(|&i| v[i]));
                    for (k, x) in (u * part).iter().enumerate() {
                        out[idx[k]] = *x;
                    }
                }
                out
            }
            Propagator::Local { n: 1, u, .. } => u * v,
            Propagator::Local { mode, u, .. } => {
                // Column-major view: rows index mode 1, columns mode 0.
                let c = u.nrows();
                let psi = CMat::from_column_slice(c, c, v.as_slice());
                let out = if *mode == 0 { psi * u.transpose() } else { u * psi };
                CVec::from_column_slice(out.as_slice())
            }
            Propagator::Chebyshev(h) => h.expm_minus_i(v),
        }
    }
}

/// A truncated density operator stored as a weighted ensemble of vectors.
#[derive(Debug, Clone)]
pub struct FockDensityMatrix {
    pub space: FockSpace,
    pub weights: Vec<f64>,
    pub vectors: Vec<CVec>,
    /// Thermal weight dropped by the ensemble cut.
    pub dropped_weight: f64,
}

impl FockDensityMatrix {
    pub fn trace(&self) -> f64 {
        self.weights.iter().zip(&self.vectors).map(|(p, v)| p * v.norm_squared()).sum()
    }

    pub fn matrix(&self) -> CMat {
        let d = self.space.dim();
        let mut m = CMat::zeros(d, d);
        for (p, v) in self.weights.iter().zip(&self.vectors) {
            m += v * v.adjoint() * Complex64::new(*p, 0.0);
        }
        m
    }

    /// Reduced density matrix of `mode` (identity operation for one mode).
    pub fn reduced(&self, mode: usize) -> Result<CMat> {
        if mode >= self.space.n {
            return Err(Error::InvalidArgument(format!("mode {mode} out of range")));
        }
        if self.space.n == 1 {
            return Ok(self.matrix());
        }
        let nc = self.space.cutoff;
        let mut rho = CMat::zeros(nc, nc);
        for (p, v) in self.weights.iter().zip(&self.vectors) {
            // Rows index mode 0, columns mode 1.
            let psi = CMat::from_fn(nc, nc, |r, c| v[r * nc + c]);
            let part = if mode == 0 { &psi * psi.adjoint() } else { psi.transpose() * psi.conjugate() };
            rho += part * Complex64::new(*p, 0.0);
        }
        Ok(rho)
    }

    /// Symmetrized second moments `Tr[ρ(x̂_a x̂_b + x̂_b x̂_a)]/2` with `ħ = 1`.
    pub fn covariance(&self) -> RMat {
        let n = self.space.n;
        let quads: Vec<SparseOp> =
            (0..2 * n).map(|a| self.space.quadrature(a / 2, a % 2 == 1)).collect();
        let mut v = RMat::zeros(2 * n, 2 * n);
        for (p, psi) in self.weights.iter().zip(&self.vectors) {
            let xs: Vec<CVec> = quads.iter().map(|q| q.apply(psi)).collect();
            for a in 0..2 * n {
                for b in 0..2 * n {
                    v[(a, b)] += p * xs[a].dotc(&xs[b]).re;
                }
            }
        }
        v
    }
}

fn purity_of(rho: &CMat) -> f64 {
    rho.iter().map(|x| x.norm_sqr()).sum()
}

/// `Tr ρ_k²` of the reduced density matrix of `mode`.
pub fn reduced_purity(rho: &FockDensityMatrix, mode: usize) -> Result<f64> {
    Ok(purity_of(&rho.reduced(mode)?))
}

/// Unitary realization of a symplectic matrix as a product of legs applied
/// right to left: for `S = P·O` and `P = B·D·Bᵀ`, the passive `B`, single-mode
/// squeezers `D` and the passive `BᵀO`.
struct GaussianUnitary {
    legs: Vec<Propagator>,
}

impl GaussianUnitary {
    fn apply(&self, v: &CVec) -> CVec {
        self.legs.iter().rev().fold(v.clone(), |acc, leg| leg.apply(&acc))
    }
}

/// Generator `K` with `exp(K) = O` of an orthogonal symplectic `O`.
///
/// Taken through the unitary `X + iY` that `O` represents, whose logarithm
/// always exists; the real principal logarithm of `O` does not when `O` has
/// eigenvalue −1.
fn passive_generator(o: &RMat) -> RMat {
    let n = o.nrows() / 2;
    let u = CMat::from_fn(n, n, |j, k| Complex64::new(o[(2 * j, 2 * k)], o[(2 * j + 1, 2 * k)]));
    let (q, t) = u.schur().unpack();
    let log_d = CMat::from_diagonal(&t.diagonal().map(|l| Complex64::new(0.0, l.arg())));
    let l = &q * log_d * q.adjoint();
    RMat::from_fn(2 * n, 2 * n, |r, c| {
        let z = l[(r / 2, c / 2)];
        match (r % 2, c % 2) {
            (0, 1) => -z.im,
            (1, 0) => z.im,
            _ => z.re,
        }
    })
}

/// `P = B·diag(μ₀, 1/μ₀, μ₁, 1/μ₁, …)·Bᵀ` with `B` orthogonal symplectic and
/// `μ_k ≥ 1`, for symmetric positive-definite symplectic `P`.
fn symplectic_eigenbasis(p: &RMat) -> Result<(RMat, Vec<f64>)> {
    let n = p.nrows() / 2;
    let j = form_matrix(n);
    let eig = crate::linalg::symmetrize(p).symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut basis = RMat::zeros(2 * n, 2 * n);
    let mut mu = Vec::with_capacity(n);
    let mut filled = 0;
    for &i in &order {
        if filled == 2 * n {
            break;
        }
        let mut x = eig.eigenvectors.column(i).into_owned();
        for c in 0..filled {
            let b = basis.column(c).into_owned();
            x -= &b * b.dot(&x);
        }
        let norm = x.norm();
        if norm < 0.5 {
            continue;
        }
        x /= norm;
        let y = j.transpose() * &x;
        mu.push(x.dot(&(p * &x)));
        basis.set_column(filled, &x);
        basis.set_column(filled + 1, &y);
        filled += 2;
    }
    let d = RMat::from_diagonal(&nalgebra::DVector::from_iterator(
        2 * n,
        mu.iter().flat_map(|&m| [m, 1.0 / m]),
    ));
    let residual = crate::linalg::max_abs(&(&basis * d * basis.transpose() - p));
    if filled < 2 * n || residual > 1e-9 * (1.0 + crate::linalg::max_abs(p)) {
        return Err(Error::Numerical(format!("symplectic eigenbasis failed (residual {residual:.2e})")));
    }
    Ok((basis, mu))
}

fn gaussian_unitary(space: &FockSpace, s: &RMat) -> Result<GaussianUnitary> {
    let j = form_matrix(space.n);
    let (p, o) = polar_split(s);
    let (basis, mu) = symplectic_eigenbasis(&p)?;
    let passive = |m: &RMat| {
        let k = passive_generator(m);
        let h = -(&j * k);
        space.quadratic_hamiltonian(&((&h + h.transpose()) * 0.5)).map(|h| Propagator::new(space, h))
    };
    let mut legs = vec![passive(&basis)?];
    for (mode, m) in mu.iter().enumerate() {
        // −J·log diag(μ, 1/μ)
        let h = RMat::from_row_slice(2, 2, &[0.0, m.ln(), m.ln(), 0.0]);
        legs.push(Propagator::local(space, mode, &h)?);
    }
    legs.push(passive(&(basis.transpose() * o))?);
    Ok(GaussianUnitary { legs })
}

fn check_oracle_state(state: &GaussianState) -> Result<()> {
    if state.n() > 2 {
        return Err(Error::Unsupported(format!("the Fock oracle handles 1 or 2 modes, not {}", state.n())));
    }
    if !state.is_zero_mean(1e-12) {
        return Err(Error::InvalidState("oracle states must have zero mean".into()));
    }
    Ok(())
}

/// `ρ = U_w ρ_th U_w†` with `V = S_w D S_wᵀ`.
pub fn gaussian_to_fock(state: &GaussianState, cutoff: usize) -> Result<FockDensityMatrix> {
    check_oracle_state(state)?;
    let space = FockSpace::new(state.n(), cutoff)?;
    let w = state.williamson()?;
    Ok(thermal_ensemble(&space, &w.nu, &gaussian_unitary(&space, &w.s_w)?))
}

fn thermal_ensemble(space: &FockSpace, nu: &[f64], u: &GaussianUnitary) -> FockDensityMatrix {
    let ratio: Vec<f64> = nu
        .iter()
        .map(|v| {
            let nbar = (v - 0.5).max(0.0);
            nbar / (nbar + 1.0)
        })
        .collect();
    let level_weight = |mode: usize, k: usize| (1.0 - ratio[mode]) * ratio[mode].powi(k as i32);
    let second = if space.n == 2 { space.cutoff } else { 1 };
    let mut weights = Vec::new();
    let mut vectors = Vec::new();
    let mut kept = 0.0;
    for k0 in 0..space.cutoff {
        for k1 in 0..second {
            let p = level_weight(0, k0) * if space.n == 2 { level_weight(1, k1) } else { 1.0 };
            if p < WEIGHT_FLOOR {
                continue;
            }
            kept += p;
            weights.push(p);
            vectors.push(u.apply(&space.basis_vector([k0, k1])));
        }
    }
    FockDensityMatrix { space: *space, weights, vectors, dropped_weight: (1.0 - kept).max(0.0) }
}

fn leg_propagators(space: &FockSpace, evo: &MetaplecticEvolution) -> Result<Vec<Propagator>> {
    if evo.n != space.n {
        return Err(Error::DimensionMismatch { expected: 2 * space.n, got: 2 * evo.n });
    }
    evo.steps
        .iter()
        .map(|g| Propagator::for_hessian(space, &(g.hessian(space.n) * g.parameter())))
        .collect()
}

fn apply_legs(legs: &[Propagator], v: &CVec) -> CVec {
    legs.iter().fold(v.clone(), |acc, leg| leg.apply(&acc))
}

fn refined_cutoff(cutoff: usize) -> usize {
    (5 * cutoff).div_ceil(4)
}

fn dense_evolution(space: &FockSpace, evo: &MetaplecticEvolution) -> Result<CMat> {
    let legs = leg_propagators(space, evo)?;
    let d = space.dim();
    let mut u = CMat::zeros(d, d);
    for c in 0..d {
        let col = apply_legs(&legs, &space.basis_vector(space.occupations(c)));
        u.set_column(c, &col);
    }
    Ok(u)
}

/// The product of leg unitaries `exp(−iĤ_leg)` as a dense matrix.
///
/// The truncation defect is the largest change of a matrix element between
/// basis states below a quarter of the cutoff when the cutoff is raised by a
/// quarter. The truncated unitary is exactly unitary; what the check catches is
/// leakage of low-lying states past the cutoff.
pub fn evolution_to_fock(evo: &MetaplecticEvolution, cutoff: usize) -> Result<CMat> {
    let space = FockSpace::new(evo.n, cutoff)?;
    let u = dense_evolution(&space, evo)?;
    let fine_space = FockSpace::new(evo.n, refined_cutoff(cutoff))?;
    let fine = dense_evolution(&fine_space, evo)?;
    let low = cutoff.div_ceil(4);
    let mut defect = 0.0_f64;
    for r in 0..space.dim() {
        let ro = space.occupations(r);
        if ro.iter().take(evo.n).any(|&k| k >= low) {
            continue;
        }
        for c in 0..space.dim() {
            let co = space.occupations(c);
            if co.iter().take(evo.n).any(|&k| k >= low) {
                continue;
            }
            let fr = fine_space.index(ro);
            let fc = fine_space.index(co);
            defect = defect.max((u[(r, c)] - fine[(fr, fc)]).norm());
        }
    }
    if defect > DEFECT_LIMIT {
        return Err(Error::InsufficientCutoff { defect, limit: DEFECT_LIMIT });
    }
    Ok(u)
}

/// Oracle value with its truncation estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleTrace {
    pub value: Complex64,
    /// `|value(cutoff) − value(5·cutoff/4)|`.
    pub defect: f64,
}

fn trace_at(state: &GaussianState, evo: &MetaplecticEvolution, cutoff: usize) -> Result<Complex64> {
    let rho = gaussian_to_fock(state, cutoff)?;
    let legs = leg_propagators(&rho.space, evo)?;
    Ok(rho
        .weights
        .iter()
        .zip(&rho.vectors)
        .map(|(p, v)| v.dotc(&apply_legs(&legs, v)) * *p)
        .sum())
}

/// `Tr(ρ_fock U_fock)`; fails with insufficient-cutoff when the result moves by
/// more than [`DEFECT_LIMIT`] when the cutoff is raised by a quarter.
pub fn oracle_trace(state: &GaussianState, evo: &MetaplecticEvolution, cutoff: usize) -> Result<OracleTrace> {
    check_oracle_state(state)?;
    let value = trace_at(state, evo, cutoff)?;
    let fine = trace_at(state, evo, refined_cutoff(cutoff))?;
    let defect = (value - fine).norm();
    if defect > DEFECT_LIMIT {
        return Err(Error::InsufficientCutoff { defect, limit: DEFECT_LIMIT });
    }
    Ok(OracleTrace { value, defect })
}

/// Qubit populations `(P₋, P₊)` after the conditional evolution and a π/2 pulse
/// about the equatorial axis at angle `vartheta`.
///
/// The ancilla starts in `|1,+⟩`; the evolution acts only on the `|3,+⟩` branch.
pub fn oracle_protocol(
    state: &GaussianState,
    evo: &MetaplecticEvolution,
    cutoff: usize,
    vartheta: f64,
) -> Result<(f64, f64)> {
    check_oracle_state(state)?;
    let rho = gaussian_to_fock(state, cutoff)?;
    let legs = leg_propagators(&rho.space, evo)?;
    let e_minus = Complex64::from_polar(1.0, -vartheta);
    let e_plus = Complex64::from_polar(1.0, vartheta);
    let (mut p_minus, mut p_plus) = (0.0, 0.0);
    for (p, psi) in rho.weights.iter().zip(&rho.vectors) {
        let evolved = apply_legs(&legs, psi);
        let up = (&evolved - psi * (I * e_minus)) * Complex64::new(0.5, 0.0);
        let down = (psi - &evolved * (I * e_plus)) * Complex64::new(0.5, 0.0);
        p_plus += p * up.norm_squared();
        p_minus += p * down.norm_squared();
    }
    Ok((p_minus, p_plus))
}

/// Heisenberg check: the quadrature action of the dense unitary, restricted to
/// low-lying states, compared with a symplectic matrix.
pub fn quadrature_action_defect(u: &CMat, space: &FockSpace, s: &RMat, probe: &CVec) -> f64 {
    let n = space.n;
    let quads: Vec<CMat> = (0..2 * n).map(|a| space.quadrature(a / 2, a % 2 == 1).to_dense()).collect();
    let evolved = u * probe;
    let mut worst = 0.0_f64;
    for a in 0..2 * n {
        // ⟨ψ|U† x_a U|ψ⟩ = Σ_b S_ab ⟨ψ|x_b|ψ⟩ for the first moments of a probe.
        let lhs = evolved.dotc(&(&quads[a] * &evolved)).re;
        let rhs: f64 = (0..2 * n).map(|b| s[(a, b)] * probe.dotc(&(&quads[b] * probe)).re).sum();
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::GeneratorSpec;
    use std::f64::consts::PI;

    #[test]
    fn bessel_values() {
        let j = bessel_j_sequence(1.0, 3);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let big = bessel_j_sequence(50.0, 80);
        assert!((big[0] - 0.055_812_327_669_251_86).abs() < 1e-13);
    }

    #[test]
    fn chebyshev_matches_dense_exponential() {
        let space = FockSpace::new(1, 12).unwrap();
        let h = RMat::from_row_slice(2, 2, &[0.7, 0.3, 0.3, -0.2]) * 3.0;
        let op = space.quadratic_hamiltonian(&h).unwrap();
        let dense = (op.to_dense() * Complex64::new(0.0, -1.0)).exp();
        let v = CVec::from_fn(12, |i, _| Complex64::new(1.0 / (1.0 + i as f64), 0.1 * i as f64));
        let diff = (dense * &v - op.expm_minus_i(&v)).norm();
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let space = FockSpace::new(2, 6).unwrap();
        let h = RMat::from_fn(4, 4, |r, c| ((r + 2 * c) as f64).sin() + ((c + 2 * r) as f64).sin());
        let m = space.quadratic_hamiltonian(&h).unwrap().to_dense();
        assert!((&m - m.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn vacuum_maps_to_ground_state() {
        let rho = gaussian_to_fock(&GaussianState::vacuum(1), 20).unwrap();
        let m = rho.matrix();
        assert!((m[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!((m.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_state_has_boltzmann_weights() {
        let rho = gaussian_to_fock(&GaussianState::thermal(1, 1.0).unwrap(), 60).unwrap();
        let m = rho.matrix();
        let nbar: f64 = 0.5;
        for k in 0..6 {
            let expect = nbar.powi(k) / (nbar + 1.0).powi(k + 1);
            assert!((m[(k as usize, k as usize)].re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn squeezed_vacuum_amplitudes() {
        let zeta: f64 = 0.6;
        let evo = MetaplecticEvolution::single(1, GeneratorSpec::Squeeze { mode: 0, zeta, phi: 0.0 }).unwrap();
        let st = GaussianState::vacuum(1).evolve(&evo.matrix()).unwrap();
        let rho = gaussian_to_fock(&st, 60).unwrap();
        let psi = &rho.vectors[0];
        // Independent two-term recursion: c_{2m+2} = −e^{iφ'} tanh ζ √((2m+1)/(2m+2)) c_{2m}.
        let t = zeta.tanh();
        let mut c = vec![Complex64::new(1.0 / zeta.cosh().sqrt(), 0.0)];
        for m in 0..10 {
            let f = ((2 * m + 1) as f64 / (2 * m + 2) as f64).sqrt();
            let prev = c[m];
            c.push(prev * Complex64::new(0.0, -t * f));
        }
        let phase = psi[0] / psi[0].norm();
        for m in 0..10 {
            assert!((psi[2 * m] / phase - c[m]).norm() < 1e-10, "m={m}");
            assert!(psi[2 * m + 1].norm() < 1e-12);
        }
    }

    #[test]
    fn fock_state_reproduces_covariance() {
        let st = crate::gaussian::random_state_with(
            2,
            crate::gaussian::StateKind::Mixed { nu_max: 0.9 },
            &crate::symplectic::GeneratorRanges { zeta_max: 0.5, shear_max: 1.0, theta_max: 2.0 * PI },
            &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(8),
        );
        let rho = gaussian_to_fock(&st, 34).unwrap();
        let v = rho.covariance();
        let err = (v - st.cov().matrix()).abs().max();
        assert!(err < 1e-6, "{err}");
    }

    fn symplectic_of(steps: Vec<GeneratorSpec>) -> RMat {
        MetaplecticEvolution::new(2, steps).unwrap().matrix().matrix().clone()
    }

    #[test]
    fn passive_generator_exists_at_eigenvalue_minus_one() {
        let o = symplectic_of(vec![
            GeneratorSpec::Rotation { mode: 0, theta: PI },
            GeneratorSpec::TwoModeRotation { j: 0, k: 1, theta: 0.7 },
            GeneratorSpec::Rotation { mode: 1, theta: PI },
        ]);
        let k = passive_generator(&o);
        let back = k.exp();
        assert!(crate::linalg::max_abs(&(back - &o)) < 1e-12);
    }

    #[test]
    fn symplectic_eigenbasis_handles_degenerate_spectra() {
        let j = form_matrix(2);
        let cases = [
            RMat::identity(4, 4),
            symplectic_of(vec![GeneratorSpec::Squeeze { mode: 1, zeta: 0.4, phi: 0.3 }]),
            {
                let s = symplectic_of(vec![
                    GeneratorSpec::Squeeze { mode: 0, zeta: 0.5, phi: 0.0 },
                    GeneratorSpec::Squeeze { mode: 1, zeta: 0.5, phi: 1.0 },
                    GeneratorSpec::TwoModeRotation { j: 0, k: 1, theta: 0.9 },
                ]);
                crate::gaussian::polar_split(&s).0
            },
        ];
        for p in cases {
            let (b, mu) = symplectic_eigenbasis(&p).unwrap();
            assert!(crate::linalg::max_abs(&(b.transpose() * &j * &b - &j)) < 1e-12);
            assert!(crate::linalg::max_abs(&(b.transpose() * &b - RMat::identity(4, 4))) < 1e-12);
            assert!(mu.iter().all(|&m| m >= 1.0 - 1e-12));
        }
    }

    #[test]
    fn prepared_unitary_moves_vacuum_moments() {
        let s = symplectic_of(vec![
            GeneratorSpec::Squeeze { mode: 0, zeta: 0.3, phi: 0.2 },
            GeneratorSpec::Rotation { mode: 1, theta: PI },
            GeneratorSpec::TwoModeRotation { j: 0, k: 1, theta: 1.1 },
            GeneratorSpec::Rotation { mode: 0, theta: PI },
        ]);
        let space = FockSpace::new(2, 30).unwrap();
        let u = gaussian_unitary(&space, &s).unwrap();
        let rho = thermal_ensemble(&space, &[0.5, 0.5], &u);
        let expected = &s * s.transpose() * 0.5;
        assert!(crate::linalg::max_abs(&(rho.covariance() - expected)) < 1e-9);
    }

    #[test]
    fn rotation_on_vacuum() {
        for &theta in &[0.5, PI, 3.3] {
            let evo = MetaplecticEvolution::single(1, GeneratorSpec::Rotation { mode: 0, theta }).unwrap();
            let t = oracle_trace(&GaussianState::vacuum(1), &evo, 20).unwrap().value;
            assert!((t - Complex64::from_polar(1.0, -theta / 2.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn identity_evolution_matrix() {
        let u = evolution_to_fock(&MetaplecticEvolution::identity(2), 6).unwrap();
        assert!((u - CMat::identity(36, 36)).norm() < 1e-15);
    }

    #[test]
    fn beam_splitter_quadrature_action() {
        let g = GeneratorSpec::TwoModeRotation { j: 0, k: 1, theta: PI / 2.0 };
        let evo = MetaplecticEvolution::single(2, g).unwrap();
        let u = evolution_to_fock(&evo, 14).unwrap();
        let space = FockSpace::new(2, 14).unwrap();
        // A coherent-like probe with nonzero first moments in both modes.
        let mut probe = CVec::zeros(space.dim());
        for (occ, amp) in [([0, 0], 0.8), ([1, 0], 0.4), ([0, 1], -0.3), ([1, 1], 0.2)] {
            probe[space.index(occ)] = Complex64::new(amp, 0.1 * amp);
        }
        probe /= Complex64::new(probe.norm(), 0.0);
        let defect = quadrature_action_defect(&u, &space, evo.matrix().matrix(), &probe);
        assert!(defect < 1e-12, "{defect}");
    }

    #[test]
    fn low_cutoff_is_rejected() {
        let evo = MetaplecticEvolution::single(1, GeneratorSpec::Squeeze { mode: 0, zeta: 1.5, phi: 0.0 }).unwrap();
        let st = GaussianState::vacuum(1).evolve(&evo.matrix()).unwrap();
        assert!(matches!(oracle_trace(&st, &evo, 10), Err(Error::InsufficientCutoff { .. })));
        assert!(matches!(evolution_to_fock(&evo, 10), Err(Error::InsufficientCutoff { .. })));
    }

    #[test]
    fn protocol_identity_for_vacuum_rotation() {
        let theta = 1.1;
        let evo = MetaplecticEvolution::single(1, GeneratorSpec::Rotation { mode: 0, theta }).unwrap();
        let (pm, pp) = oracle_protocol(&GaussianState::vacuum(1), &evo, 10, 0.0).unwrap();
        assert!((pm - pp + (theta / 2.0).sin()).abs() < 1e-14);
        let (pm, pp) = oracle_protocol(&GaussianState::vacuum(1), &MetaplecticEvolution::identity(1), 10, 0.0).unwrap();
        assert!((pm - pp).abs() < 1e-15);
    }

    #[test]
    fn three_modes_unsupported() {
        assert!(matches!(FockSpace::new(3, 10), Err(Error::Unsupported(_))));
    }
}
