//! Central finite-difference Hessians and the real-to-complex conversion.
//!
//! Real coordinates follow the crate-wide order `(x_1..x_n, y_1..y_n)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{real_point, BoxGrid};
use crate::hermitian::HermitianMatrix;

/// Per-axis steps of a second-order central scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    step: Vec<f64>,
    bounds: Option<(Vec<f64>, Vec<f64>)>,
}

impl Stencil {
    pub fn new(step: Vec<f64>) -> Result<Self> {
        if let Some(h) = step.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(Error::Precondition(format!("stencil step {h} must be positive")));
        }
        Ok(Stencil { step, bounds: None })
    }

    pub fn uniform(dim: usize, h: f64) -> Result<Self> {
        Self::new(vec![h; dim])
    }

    /// `h = 1e-4 * (1 + ||x||_inf)` on every axis.
    pub fn default_at(x: &[f64]) -> Self {
        let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Stencil { step: vec![1e-4 * (1.0 + norm); x.len()], bounds: None }
    }

    /// Restricts evaluation points to the box of `grid`.
    pub fn within(mut self, grid: &BoxGrid) -> Self {
        self.bounds = Some((grid.lo().to_vec(), grid.hi().to_vec()));
        self
    }

    pub fn step(&self) -> &[f64] {
        &self.step
    }

    fn halved(&self) -> Stencil {
        Stencil { step: self.step.iter().map(|h| h / 2.0).collect(), bounds: self.bounds.clone() }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.step.len() {
            return Err(Error::DimensionMismatch { expected: self.step.len(), got: x.len() });
        }
        if let Some((lo, hi)) = &self.bounds {
            for (i, &xi) in x.iter().enumerate() {
                if xi - self.step[i] < lo[i] || xi + self.step[i] > hi[i] {
                    return Err(Error::OutOfRange(format!(
                        "stencil at {x:?} leaves the domain along axis {i}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Dense symmetric real matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealSymmetric {
    dim: usize,
    entries: Vec<f64>,
}

impl RealSymmetric {
    /// Builds from row-major entries and symmetrizes.
    pub fn new(dim: usize, mut entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: entries.len() });
        }
        for i in 0..dim {
            for j in i + 1..dim {
                let m = 0.5 * (entries[i * dim + j] + entries[j * dim + i]);
                entries[i * dim + j] = m;
                entries[j * dim + i] = m;
            }
        }
        Ok(RealSymmetric { dim, entries })
    }

    pub fn diag(d: &[f64]) -> Self {
        let dim = d.len();
        let mut entries = vec![0.0; dim * dim];
        for (i, &v) in d.iter().enumerate() {
            entries[i * dim + i] = v;
        }
        RealSymmetric { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &RealSymmetric, beta: f64) -> RealSymmetric {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| alpha * a + beta * b).collect();
        RealSymmetric { dim: self.dim, entries }
    }

    /// `v* H v` for a complex vector, with `H` acting on real and imaginary
    /// parts alike.
    pub fn complex_form(&self, v: &[Complex64]) -> Complex64 {
        let d = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let row: Complex64 = (0..d).map(|j| v[j] * self.entries[i * d + j]).sum();
            acc += v[i].conj() * row;
        }
        acc
    }
}

fn eval(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonSmooth {
            point: x.to_vec(),
            reason: format!("value {v} on the stencil"),
        })
    }
}

/// Central-difference Hessian of `f` at `x`.
///
/// Fails with [`Error::NonSmooth`] when the stencil meets `-inf` (or any
/// non-finite value).
pub fn real_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], stencil: &Stencil) -> Result<RealSymmetric> {
    stencil.check_point(x)?;
    let d = x.len();
    let h = stencil.step();
    let f0 = eval(&f, x)?;
    let mut p = x.to_vec();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        p[i] = x[i] + h[i];
        let fp = eval(&f, &p)?;
        p[i] = x[i] - h[i];
        let fm = eval(&f, &p)?;
        p[i] = x[i];
        out[i * d + i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * h[i];
                p[j] = x[j] + sj * h[j];
                let v = eval(&f, &p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * h[i] * h[j]);
            out[i * d + j] = v;
            out[j * d + i] = v;
        }
    }
    RealSymmetric::new(d, out)
}

/// [`real_hessian`] with a step-halving consistency test.
///
/// Both results must agree within `rel_tol * (1 + max|H|)`; a kink inside
/// the stencil makes second differences scale like `1/h` and trips this.
pub fn real_hessian_checked(
    f: impl Fn(&[f64]) -> f64,
    x: &[f64],
    stencil: &Stencil,
    rel_tol: f64,
) -> Result<RealSymmetric> {
    let coarse = real_hessian(&f, x, stencil)?;
    let fine = real_hessian(&f, x, &stencil.halved())?;
    let gap = coarse.combine(1.0, &fine, -1.0).max_abs();
    let scale = 1.0 + fine.max_abs();
    if gap > rel_tol * scale {
        return Err(Error::NonSmooth {
            point: x.to_vec(),
            reason: format!("second differences disagree under step halving by {gap:e}"),
        });
    }
    Ok(fine)
}

/// `H^C_{kl} = 1/4 [(H_{x_k x_l} + H_{y_k y_l}) + i (H_{x_k y_l} - H_{y_k x_l})]`.
pub fn real_to_complex_hessian(h: &RealSymmetric) -> Result<HermitianMatrix> {
    let d = h.dim();
    if !d.is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: d + 1, got: d });
    }
    let n = d / 2;
    let mut entries = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            let re = h.get(k, l) + h.get(n + k, n + l);
            let im = h.get(k, n + l) - h.get(n + k, l);
            entries.push(Complex64::new(0.25 * re, 0.25 * im));
        }
    }
    HermitianMatrix::new(n, entries)
}

/// Complex Hessian `[d^2 f / dz_k dz̄_l]` at `z`; `stencil` defaults to
/// [`Stencil::default_at`].
pub fn complex_hessian(
    f: impl Fn(&[f64]) -> f64,
    z: &[Complex64],
    stencil: Option<&Stencil>,
) -> Result<HermitianMatrix> {
    let x = real_point(z);
    let default;
    let stencil = match stencil {
        Some(s) => s,
        None => {
            default = Stencil::default_at(&x);
            &default
        }
    };
    real_to_complex_hessian(&real_hessian(f, &x, stencil)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(h: &RealSymmetric, expect: &[f64], tol: f64) {
        for (a, b) in h.entries().iter().zip(expect) {
            assert!((a - b).abs() < tol, "{:?} vs {expect:?}", h.entries());
        }
    }

    #[test]
    fn real_examples() {
        let s = Stencil::uniform(2, 1e-3).unwrap();
        close(&real_hessian(|x| x[0] * x[0] + x[1] * x[1], &[0.3, -2.0], &s).unwrap(), &[2.0, 0.0, 0.0, 2.0], 1e-6);
        close(&real_hessian(|x| x[0] * x[1], &[0.0, 0.0], &s).unwrap(), &[0.0, 1.0, 1.0, 0.0], 1e-9);
        let f = |x: &[f64]| x[0] * x[0] * x[1] * x[1];
        for h in [1e-3, 1e-4] {
            let s = Stencil::uniform(2, h).unwrap();
            close(&real_hessian(f, &[1.0, 1.0], &s).unwrap(), &[2.0, 4.0, 4.0, 2.0], 1e-5);
        }
    }

    #[test]
    fn neg_inf_is_nonsmooth() {
        let s = Stencil::uniform(2, 1e-3).unwrap();
        let r = real_hessian(|x| if x[0] > 0.0 { f64::NEG_INFINITY } else { 0.0 }, &[0.0, 0.0], &s);
        assert!(matches!(r, Err(Error::NonSmooth { .. })));
    }

    #[test]
    fn kink_detected_by_halving() {
        let s = Stencil::uniform(2, 1e-4).unwrap();
        let r = real_hessian_checked(|x| x[1].abs(), &[0.5, 0.0], &s, 1e-4);
        assert!(matches!(r, Err(Error::NonSmooth { .. })));
        assert!(real_hessian_checked(|x| x[1].abs(), &[0.5, 0.1], &s, 1e-4).is_ok());
    }

    #[test]
    fn conversion_examples() {
        let hc = real_to_complex_hessian(&RealSymmetric::diag(&[2.0, 2.0])).unwrap();
        assert_eq!(hc.get(0, 0), Complex64::new(1.0, 0.0));
        let hc = real_to_complex_hessian(&RealSymmetric::diag(&[2.0, -2.0])).unwrap();
        assert_eq!(hc.get(0, 0), Complex64::new(0.0, 0.0));
        let t: f64 = 0.7;
        let hc = real_to_complex_hessian(&RealSymmetric::diag(&[0.0, 12.0 * t * t])).unwrap();
        assert!((hc.get(0, 0).re - 3.0 * t * t).abs() < 1e-15);
        assert!(real_to_complex_hessian(&RealSymmetric::diag(&[1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn complex_examples() {
        let z = [Complex64::new(0.3, -0.2), Complex64::new(-0.5, 0.9)];
        let hc = complex_hessian(|x| x[0] * x[0] + x[2] * x[2] - x[1] * x[1] - x[3] * x[3], &z, None).unwrap();
        let ev = hc.eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-6 && (ev[1] + 1.0).abs() < 1e-6);

        // Re(z^3) = x^3 - 3 x y^2
        let z = [Complex64::new(0.4, 0.3)];
        let hc = complex_hessian(|x| x[0].powi(3) - 3.0 * x[0] * x[1] * x[1], &z, None).unwrap();
        assert!(hc.get(0, 0).norm() < 1e-6);

        let im4_abs = |x: &[f64]| x[1].powi(4) + x[1].abs();
        let hc = complex_hessian(im4_abs, &[Complex64::new(0.0, 1.0)], None).unwrap();
        assert!((hc.get(0, 0).re - 3.0).abs() < 1e-6);
    }

    #[test]
    fn stencil_bounds() {
        let g = BoxGrid::cube(1, -1.0, 1.0, 3).unwrap();
        let s = Stencil::uniform(2, 0.1).unwrap().within(&g);
        assert!(matches!(real_hessian(|_| 0.0, &[0.95, 0.0], &s), Err(Error::OutOfRange(_))));
        assert!(Stencil::new(vec![0.0]).is_err());
    }
}
