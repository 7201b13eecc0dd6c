//! Continuation of the vacuum amplitude along an evolution path.
//!
//! `⟨0|M(t)|0⟩² = 1/D(t)` with `D(S) = det[(S+I)/2 − (i/2)J(S−I)]`, a polynomial in
//! `S` that never vanishes. Following `arg D` continuously from `S = I` fixes the
//! sign of the metaplectic operator, and hence the Conley–Zehnder indices.

use num_complex::Complex64;

use crate::linalg::{complex_det, to_complex, RMat};
use crate::symplectic::{embed, form_matrix, GeneratorSpec};

const MAX_PHASE_STEP: f64 = 0.25;
const MIN_STEP: f64 = 1e-9;

fn vacuum_det(s: &RMat) -> Complex64 {
    let dim = s.nrows();
    let id = RMat::identity(dim, dim);
    let j = form_matrix(dim / 2);
    let re = (s + &id) * 0.5;
    let im = &j * (s - &id) * (-0.5);
    let m = to_complex(&re) + to_complex(&im) * Complex64::new(0.0, 1.0);
    complex_det(&m)
}

/// Continuous `log D` along the legs, returned with the final matrix.
pub(crate) fn track_log_vacuum_det(n: usize, legs: &[GeneratorSpec]) -> (Complex64, RMat) {
    let mut s_prev = RMat::identity(2 * n, 2 * n);
    let mut d = vacuum_det(&s_prev);
    let mut phase = 0.0_f64;
    for leg in legs {
        let modes = leg.modes();
        let p = leg.parameter();
        let at = |t: f64| embed(&leg.with_parameter(p * t).local_matrix(), &modes, n) * &s_prev;
        let mut t = 0.0_f64;
        let mut h = (1.0 / (4.0 * p.abs() * n as f64).max(1.0)).min(1.0);
        while t < 1.0 {
            let t_next = (t + h).min(1.0);
            let d_next = vacuum_det(&at(t_next));
            let step = (d_next / d).arg();
            if step.abs() > MAX_PHASE_STEP && h > MIN_STEP {
                h *= 0.5;
                continue;
            }
            phase += step;
            d = d_next;
            t = t_next;
            if step.abs() < 0.25 * MAX_PHASE_STEP {
                h *= 1.5;
            }
        }
        s_prev = at(1.0);
    }
    (Complex64::new(d.norm().ln(), phase), s_prev)
}

/// `⟨0|M_S|0⟩` with the sign fixed by continuity along `legs`.
pub(crate) fn vacuum_amplitude(n: usize, legs: &[GeneratorSpec]) -> (Complex64, RMat) {
    let (log_d, s) = track_log_vacuum_det(n, legs);
    ((-0.5 * log_d).exp(), s)
}
