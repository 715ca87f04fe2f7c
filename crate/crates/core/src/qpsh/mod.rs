//! q-plurisubharmonicity checkers.
//!
//! * [`smooth_qpsh_index`]: the largest number of negative complex-Hessian
//!   eigenvalues over the grid, for smooth functions.
//! * [`classical_qpsh_oracle`]: the maximum property of `u + Re ℘` on
//!   discretized balls in `(q+1)`-dimensional complex slices.
//! * [`viscosity_falsifier`]: quadratic test functions touching `u` from
//!   above at strict local maxima of `u - φ`.
//!
//! The two grid checkers are semi-decisions: `Pass` means no violation was
//! found in the finite family that was tried.

mod classical;
mod magic;
mod poly;
mod smooth;
mod strict;
mod viscosity;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;

pub use crate::fields::SliceSpec;
pub use classical::{
    classical_qpsh_oracle, classical_qpsh_oracle_with, default_slices, replay_classical, BallOptions,
    ClassicalOptions, ClassicalWitness,
};
pub use magic::{magic_property_harness, MagicReport, QuadraticForm};
pub use poly::{canonical_pool, linear_pool, quadratic_pool, random_pool, Monomial, PluriharmonicPoly};
pub use smooth::{smooth_qpsh_index, smooth_qpsh_index_sampled, SmoothReport, SMOOTH_TOL};
pub use strict::{strict_qpsh_check, StrictOptions, StrictReport};
pub use viscosity::{
    probe_hessian, replay_probe, strict_positive_inertia_check, viscosity_falsifier, viscosity_scan, PositiveInertiaReport,
    Probe, ProbeFamily, ProbeScan, ProbeWitness, Touch,
};

use crate::error::Result;
use crate::fields::ScalarField;
use crate::hermitian::HermitianMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    Classical(ClassicalWitness),
    Viscosity(ProbeWitness),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Classical(w) => w.fmt(f),
            Witness::Viscosity(w) => w.fmt(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpshVerdict {
    pub status: Status,
    pub witness: Option<Witness>,
    /// Number of (ball, polynomial) or (probe, centre) tests evaluated.
    pub tests_run: usize,
    /// Tests skipped (ball outside the domain mask, too few boundary nodes,
    /// all values `-inf`).
    pub skipped: usize,
    pub note: Option<String>,
}

impl QpshVerdict {
    pub fn pass_with_note(note: impl Into<String>) -> Self {
        QpshVerdict { status: Status::Pass, witness: None, tests_run: 0, skipped: 0, note: Some(note.into()) }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Verdict short-circuits shared by all checkers: `q >= n` and `u ≡ -inf`.
pub(crate) fn trivial_verdict(u: &ScalarField, q: usize) -> Option<QpshVerdict> {
    if q >= u.grid().dim_complex() {
        return Some(QpshVerdict::pass_with_note("q >= n: every u.s.c. function qualifies"));
    }
    if u.is_all_neg_inf() {
        return Some(QpshVerdict::pass_with_note("u is identically -inf"));
    }
    None
}

/// `Re sum_{k,l} w_k A_{kl} conj(w_l)`, whose complex Hessian is `A`.
pub fn hermitian_form(a: &HermitianMatrix, w: &[Complex64]) -> f64 {
    let n = a.n();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        for l in 0..n {
            acc += w[k] * a.get(k, l) * w[l].conj();
        }
    }
    acc.re
}

fn basis(n: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// `(e_j + c e_k) / sqrt 2` and `(e_j - c e_k) / sqrt 2`.
fn rotated_pair(n: usize, j: usize, k: usize, c: Complex64) -> [Vec<Complex64>; 2] {
    let mut plus = vec![Complex64::new(0.0, 0.0); n];
    let mut minus = plus.clone();
    plus[j] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    minus[j] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    plus[k] = c * FRAC_1_SQRT_2;
    minus[k] = -c * FRAC_1_SQRT_2;
    [plus, minus]
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Orthonormal `m`-frames in `C^n` whose slice lattices align with the
/// coordinate grid: coordinate subsets, and for each pair `(j, k)` the
/// frames with `e_j, e_k` replaced by `(e_j ± e_k)/√2` or `(e_j ± i e_k)/√2`.
pub fn slice_frames(n: usize, m: usize) -> Vec<Vec<Vec<Complex64>>> {
    let mut out = Vec::new();
    for subset in subsets(n, m) {
        out.push(subset.iter().map(|&k| basis(n, k)).collect());
    }
    let units = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
    for j in 0..n {
        for k in j + 1..n {
            for c in units {
                let [plus, minus] = rotated_pair(n, j, k, c);
                if m == 1 {
                    out.push(vec![plus.clone()]);
                    out.push(vec![minus]);
                    continue;
                }
                let rest: Vec<usize> = (0..n).filter(|&r| r != j && r != k).collect();
                for extra in subsets(rest.len(), m - 2) {
                    let mut frame = vec![plus.clone(), minus.clone()];
                    frame.extend(extra.iter().map(|&r| basis(n, rest[r])));
                    out.push(frame);
                }
            }
        }
    }
    out
}

fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    if m > n {
        return vec![];
    }
    let mut out = Vec::new();
    for mut s in subsets(n - 1, m - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out.extend(subsets(n - 1, m));
    out.sort();
    out
}

/// Unitary frames used by probes: coordinate permutations, and for each
/// pair `(j, k)` the 45° rotations `(e_j ± e_k)/√2`, `(e_j ± i e_k)/√2` in
/// both orders.
pub fn unitary_frames(n: usize) -> Vec<Vec<Vec<Complex64>>> {
    let mut out: Vec<Vec<Vec<Complex64>>> = permutations(n)
        .into_iter()
        .map(|p| p.into_iter().map(|k| basis(n, k)).collect())
        .collect();
    let units = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
    for j in 0..n {
        for k in j + 1..n {
            for c in units {
                let [plus, minus] = rotated_pair(n, j, k, c);
                let others = (0..n).filter(|&r| r != j && r != k).map(|r| basis(n, r));
                let mut a = vec![plus.clone(), minus.clone()];
                a.extend(others.clone());
                let mut b = vec![minus, plus];
                b.extend(others);
                out.push(a);
                out.push(b);
            }
        }
    }
    out
}

/// Verdicts of all applicable checkers on one field and level.
#[derive(Clone, Debug)]
pub struct AgreementReport {
    pub q: usize,
    /// `None` when the smooth checker does not apply (kinks or `-inf`).
    pub smooth: Option<Status>,
    pub classical: QpshVerdict,
    pub viscosity: QpshVerdict,
}

impl AgreementReport {
    pub fn statuses(&self) -> Vec<Status> {
        let mut s = vec![self.classical.status, self.viscosity.status];
        s.extend(self.smooth);
        s
    }

    pub fn agree(&self) -> bool {
        let s = self.statuses();
        s.windows(2).all(|w| w[0] == w[1])
    }
}

/// Runs the grid checkers on `u` at level `q`, plus the smooth checker when
/// `smooth` supplies the underlying function.
pub fn checker_agreement(
    u: &ScalarField,
    smooth: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>,
    q: usize,
    balls: &BallOptions,
    probes: &ProbeFamily,
) -> Result<AgreementReport> {
    let n = u.grid().dim_complex();
    let polys = canonical_pool(n);
    let slices = default_slices(u.grid(), q, balls);
    let classical = classical_qpsh_oracle_with(u, q, &slices, &polys, &ClassicalOptions::new(balls.balls_per_slice))?;
    let viscosity = viscosity_falsifier(u, q, probes);
    let smooth = smooth.and_then(|f| {
        if q >= n {
            return Some(Status::Pass);
        }
        smooth_qpsh_index(f, u.grid(), None, SMOOTH_TOL)
            .ok()
            .map(|r| if r.q_star <= q { Status::Pass } else { Status::Fail })
    });
    Ok(AgreementReport { q, smooth, classical, viscosity })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormal(frame: &[Vec<Complex64>]) -> bool {
        frame.iter().enumerate().all(|(a, u)| {
            frame.iter().enumerate().all(|(b, v)| {
                let d: Complex64 = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
                (d - if a == b { 1.0 } else { 0.0 }).norm() < 1e-12
            })
        })
    }

    #[test]
    fn frame_sets() {
        assert_eq!(unitary_frames(2).len(), 6);
        assert_eq!(unitary_frames(1).len(), 1);
        for n in 1..=3 {
            for f in unitary_frames(n) {
                assert_eq!(f.len(), n);
                assert!(orthonormal(&f));
            }
            for m in 1..=n {
                for f in slice_frames(n, m) {
                    assert_eq!(f.len(), m);
                    assert!(orthonormal(&f));
                }
            }
        }
        assert_eq!(slice_frames(2, 1).len(), 2 + 4);
        assert_eq!(slice_frames(2, 2).len(), 1 + 2);
    }

    #[test]
    fn hermitian_form_has_that_hessian() {
        let a = HermitianMatrix::from_rows(&[
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, -2.0)],
            vec![Complex64::new(0.5, 2.0), Complex64::new(-3.0, 0.0)],
        ])
        .unwrap();
        let f = |x: &[f64]| hermitian_form(&a, &crate::fields::complex_point(x));
        let hc = crate::hessian::complex_hessian(f, &[Complex64::new(0.2, 0.1), Complex64::new(-0.4, 0.3)], None).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                assert!((hc.get(k, l) - a.get(k, l)).norm() < 1e-6);
            }
        }
    }
}
