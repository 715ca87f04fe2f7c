//! Small dense Hermitian matrices: Jacobi eigenvalues, inertia and the
//! Löwner order.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute tolerance for the Hermitian check at construction.
const HERMITIAN_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// `n x n` complex Hermitian matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Builds a matrix from row-major entries, symmetrizing as `(A + A*) / 2`.
    ///
    /// Fails if some `|a_kl - conj(a_lk)|` exceeds `1e-12`.
    pub fn new(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        Self::with_tolerance(n, entries, HERMITIAN_TOL)
    }

    /// As [`new`](Self::new) with a caller-chosen deviation tolerance.
    pub fn with_tolerance(n: usize, mut entries: Vec<Complex64>, tol: f64) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: entries.len() });
        }
        let mut deviation: f64 = 0.0;
        for k in 0..n {
            for l in k..n {
                let a = entries[k * n + l];
                let b = entries[l * n + k].conj();
                deviation = deviation.max((a - b).norm());
                let m = (a + b) * 0.5;
                entries[k * n + l] = m;
                entries[l * n + k] = m.conj();
            }
            entries[k * n + k].im = 0.0;
        }
        if deviation > tol || !deviation.is_finite() {
            return Err(Error::NotHermitian { deviation, tol });
        }
        Ok(HermitianMatrix { n, entries })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        Self::new(n, rows.concat())
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix { n, entries: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (k, &v) in d.iter().enumerate() {
            m.entries[k * m.n + k] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Rank-one matrix `v v*`.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut entries = Vec::with_capacity(n * n);
        for a in v {
            for b in v {
                entries.push(a * b.conj());
            }
        }
        Self::exact(n, entries)
    }

    /// `C A C*` for a square `C` given row-major.
    pub fn congruence(&self, c: &[Complex64]) -> Result<Self> {
        let n = self.n;
        if c.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: c.len() });
        }
        let mut ca = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                ca[i * n + j] = (0..n).map(|k| c[i * n + k] * self.entries[k * n + j]).sum();
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| ca[i * n + k] * c[j * n + k].conj()).sum();
            }
        }
        Ok(Self::exact(n, out))
    }

    /// Symmetrizes without a deviation check, for results that are
    /// Hermitian up to rounding by construction.
    fn exact(n: usize, entries: Vec<Complex64>) -> Self {
        Self::with_tolerance(n, entries, f64::INFINITY).expect("finite entries")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.entries[k * self.n + l]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `xi* A xi`, which is real for Hermitian `A`.
    pub fn quadratic_form(&self, xi: &[Complex64]) -> f64 {
        let n = self.n;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let row: Complex64 = (0..n).map(|l| self.entries[k * n + l] * xi[l]).sum();
            acc += xi[k].conj() * row;
        }
        acc.re
    }

    /// Zero threshold used when the caller does not pick one:
    /// `1e-10 * max(1, ||A||_F)`.
    pub fn default_tol(&self) -> f64 {
        1e-10 * self.frobenius_norm().max(1.0)
    }

    /// Eigenvalues in descending order, by cyclic complex Jacobi rotations.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = self.entries.clone();
        let norm = self.frobenius_norm();
        let target = (1e-15 * norm).powi(2);
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
                .map(|(p, q)| a[p * n + q].norm_sqr())
                .sum();
            if off <= target {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, n, p, q);
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|k| a[k * n + k].re).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    pub fn inertia(&self, tol: f64) -> InertiaSignature {
        InertiaSignature::from_eigenvalues(&self.eigenvalues(), tol)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }
}

/// Zeroes `a[p][q]` with one complex Jacobi rotation `A <- J* A J`.
fn rotate(a: &mut [Complex64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    let phase = apq / b;
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let tau = (aqq - app) / (2.0 * b);
    let t = if tau >= 0.0 { 1.0 } else { -1.0 } / (tau.abs() + (1.0 + tau * tau).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // J restricted to (p, q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;
    for r in 0..n {
        let arp = a[r * n + p];
        let arq = a[r * n + q];
        a[r * n + p] = arp * jpp + arq * jqp;
        a[r * n + q] = arp * jpq + arq * jqq;
    }
    for r in 0..n {
        let apr = a[p * n + r];
        let aqr = a[q * n + r];
        a[p * n + r] = jpp.conj() * apr + jqp.conj() * aqr;
        a[q * n + r] = jpq.conj() * apr + jqq.conj() * aqr;
    }
    a[p * n + q] = Complex64::new(0.0, 0.0);
    a[q * n + p] = Complex64::new(0.0, 0.0);
    a[p * n + p].im = 0.0;
    a[q * n + q].im = 0.0;
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let entries = self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect();
        HermitianMatrix { n: self.n, entries }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let entries = self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect();
        HermitianMatrix { n: self.n, entries }
    }
}

impl Mul<&HermitianMatrix> for f64 {
    type Output = HermitianMatrix;

    fn mul(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        let entries = rhs.entries.iter().map(|a| a * self).collect();
        HermitianMatrix { n: rhs.n, entries }
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn neg(self) -> HermitianMatrix {
        -1.0 * self
    }
}

/// Eigenvalue sign counts under an absolute zero threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertiaSignature {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
    pub tol: f64,
}

impl InertiaSignature {
    /// `lambda < -tol` counts negative, `lambda > tol` positive, the rest zero.
    pub fn from_eigenvalues(ev: &[f64], tol: f64) -> Self {
        let negative = ev.iter().filter(|&&l| l < -tol).count();
        let positive = ev.iter().filter(|&&l| l > tol).count();
        InertiaSignature { negative, zero: ev.len() - negative - positive, positive, tol }
    }
}

impl std::fmt::Display for InertiaSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(neg={}, zero={}, pos={}; tol={:e})", self.negative, self.zero, self.positive, self.tol)
    }
}

/// `A ⪰ B`: the smallest eigenvalue of `A - B` is at least `-tol`.
pub fn loewner_geq(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> Result<bool> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: b.n() });
    }
    Ok((a - b).min_eigenvalue() >= -tol)
}

/// Outcome of the degenerate-ellipticity comparison of `A ⪰ B`.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticReport {
    pub inertia_a: InertiaSignature,
    pub inertia_b: InertiaSignature,
    /// `⊖(A) <= ⊖(B)`.
    pub negative_ok: bool,
    /// `⊕(A) >= ⊕(B)`.
    pub positive_ok: bool,
    /// `lambda_k(A) >= lambda_k(B) - tol` for all `k`.
    pub eigen_ok: bool,
    /// Largest `lambda_k(B) - lambda_k(A)` over `k`.
    pub max_eigen_deficit: f64,
}

impl EllipticReport {
    pub fn passed(&self) -> bool {
        self.negative_ok && self.positive_ok && self.eigen_ok
    }
}

/// Checks `⊖(A) <= ⊖(B)`, `⊕(A) >= ⊕(B)` and eigenvalue-wise dominance.
///
/// Errors when `A ⪰ B` does not hold under `tol`; that is a caller mistake,
/// not a property failure.
pub fn check_elliptic_degenerate(
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    tol: f64,
) -> Result<EllipticReport> {
    if !loewner_geq(a, b, tol)? {
        return Err(Error::Precondition("A ⪰ B does not hold".into()));
    }
    let ea = a.eigenvalues();
    let eb = b.eigenvalues();
    let inertia_a = InertiaSignature::from_eigenvalues(&ea, tol);
    let inertia_b = InertiaSignature::from_eigenvalues(&eb, tol);
    let max_eigen_deficit = ea.iter().zip(&eb).map(|(x, y)| y - x).fold(f64::NEG_INFINITY, f64::max);
    Ok(EllipticReport {
        inertia_a,
        inertia_b,
        negative_ok: inertia_a.negative <= inertia_b.negative,
        positive_ok: inertia_a.positive >= inertia_b.positive,
        eigen_ok: max_eigen_deficit <= tol,
        max_eigen_deficit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(rows: &[&[f64]]) -> HermitianMatrix {
        let rows: Vec<Vec<Complex64>> = rows.iter().map(|r| r.iter().map(|&x| c(x, 0.0)).collect()).collect();
        HermitianMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(HermitianMatrix::identity(3).eigenvalues(), vec![1.0, 1.0, 1.0]);
        let ev = real(&[&[0.0, 1.0], &[1.0, 0.0]]).eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] + 1.0).abs() < 1e-15);
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1
        let m = HermitianMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]]).unwrap();
        let ev = m.eigenvalues();
        assert!((ev[0] - 3.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let bad = vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        assert!(matches!(HermitianMatrix::new(2, bad), Err(Error::NotHermitian { .. })));
        let near = vec![c(1.0, 1e-14), c(1.0, 0.0), c(1.0 + 1e-13, 0.0), c(1.0, 0.0)];
        let m = HermitianMatrix::new(2, near).unwrap();
        assert_eq!(m.get(0, 0).im, 0.0);
        assert_eq!(m.get(0, 1), m.get(1, 0).conj());
    }

    #[test]
    fn inertia_examples() {
        let i = HermitianMatrix::diag(&[-2.0, 0.0, 5.0]).inertia(1e-10);
        assert_eq!((i.negative, i.zero, i.positive), (1, 1, 1));
        let i = HermitianMatrix::identity(2).inertia(1e-10);
        assert_eq!((i.negative, i.zero, i.positive), (0, 0, 2));
        let i = HermitianMatrix::diag(&[1e-14, 1.0]).inertia(1e-10);
        assert_eq!((i.negative, i.zero, i.positive), (0, 1, 1));
    }

    #[test]
    fn loewner_examples() {
        let tol = 1e-12;
        let z = HermitianMatrix::zeros(2);
        assert!(loewner_geq(&HermitianMatrix::diag(&[2.0, 2.0]), &HermitianMatrix::identity(2), tol).unwrap());
        let d = HermitianMatrix::diag(&[1.0, -1.0]);
        assert!(!loewner_geq(&d, &z, tol).unwrap());
        assert!(!loewner_geq(&z, &d, tol).unwrap());
        assert!(loewner_geq(&real(&[&[1.0, 1.0], &[1.0, 1.0]]), &z, tol).unwrap());
        assert!(loewner_geq(&z, &HermitianMatrix::zeros(3), tol).is_err());
    }

    #[test]
    fn elliptic_examples() {
        let b = real(&[&[1.0, 2.0], &[2.0, -3.0]]);
        let r = check_elliptic_degenerate(&b, &b, 1e-12).unwrap();
        assert!(r.passed());
        assert_eq!(r.inertia_a, r.inertia_b);

        let a = HermitianMatrix::diag(&[1.0, -1.0]);
        let b = HermitianMatrix::diag(&[0.0, -2.0]);
        let r = check_elliptic_degenerate(&a, &b, 1e-12).unwrap();
        assert!(r.passed());
        assert_eq!((r.inertia_a.negative, r.inertia_b.negative), (1, 1));
        assert_eq!((r.inertia_a.positive, r.inertia_b.positive), (1, 0));

        assert!(matches!(check_elliptic_degenerate(&b, &a, 1e-12), Err(Error::Precondition(_))));
    }

    #[test]
    fn congruence_and_outer() {
        let v = vec![c(1.0, 2.0), c(-0.5, 0.25)];
        let p = HermitianMatrix::outer(&v);
        let ev = p.eigenvalues();
        let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((ev[0] - nv).abs() < 1e-13 && ev[1].abs() < 1e-13);
        let cm = vec![c(2.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(3.0, -1.0)];
        let d = HermitianMatrix::diag(&[1.0, -1.0]);
        let i = d.congruence(&cm).unwrap().inertia(1e-10);
        assert_eq!((i.negative, i.positive), (1, 1));
    }
}
