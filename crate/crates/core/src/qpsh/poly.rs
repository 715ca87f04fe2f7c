//! Pluriharmonic test polynomials `± Re ℘` for holomorphic `℘`.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Highest total degree allowed in a test polynomial.
pub const MAX_DEGREE: usize = 3;
/// Coefficients of random pools are drawn from `[-2, 2] + i [-2, 2]`.
pub const COEFF_BOX: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: Complex64,
    /// Power of each `z_k`; `z̄` never appears.
    pub exponents: Vec<u8>,
}

impl Monomial {
    pub fn degree(&self) -> usize {
        self.exponents.iter().map(|&e| e as usize).sum()
    }

    fn eval(&self, z: &[Complex64]) -> Complex64 {
        let mut acc = self.coeff;
        for (zk, &e) in z.iter().zip(&self.exponents) {
            for _ in 0..e {
                acc *= zk;
            }
        }
        acc
    }
}

/// `sign * Re ℘(z)` with `℘` a holomorphic polynomial of degree at most
/// [`MAX_DEGREE`].
#[derive(Clone, Debug, PartialEq)]
pub struct PluriharmonicPoly {
    n: usize,
    sign: f64,
    monomials: Vec<Monomial>,
}

impl PluriharmonicPoly {
    pub fn new(n: usize, sign: f64, monomials: Vec<Monomial>) -> Result<Self> {
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::Precondition(format!("sign must be +1 or -1, got {sign}")));
        }
        for m in &monomials {
            if m.exponents.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.exponents.len() });
            }
            if m.degree() > MAX_DEGREE {
                return Err(Error::Precondition(format!("monomial degree {} exceeds {MAX_DEGREE}", m.degree())));
            }
        }
        Ok(PluriharmonicPoly { n, sign, monomials })
    }

    pub fn zero(n: usize) -> Self {
        PluriharmonicPoly { n, sign: 1.0, monomials: Vec::new() }
    }

    /// `Re(sum_k a_k z_k)`.
    pub fn linear(a: &[Complex64]) -> Self {
        let n = a.len();
        let monomials = a
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(k, &coeff)| {
                let mut exponents = vec![0; n];
                exponents[k] = 1;
                Monomial { coeff, exponents }
            })
            .collect();
        PluriharmonicPoly { n, sign: 1.0, monomials }
    }

    fn single(n: usize, sign: f64, coeff: Complex64, exponents: Vec<u8>) -> Self {
        PluriharmonicPoly { n, sign, monomials: vec![Monomial { coeff, exponents }] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn degree(&self) -> usize {
        self.monomials.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.iter().all(|m| m.coeff.norm() == 0.0)
    }

    /// Value at `z` (usually a displacement from a ball or probe centre).
    pub fn eval(&self, z: &[Complex64]) -> f64 {
        let s: Complex64 = self.monomials.iter().map(|m| m.eval(z)).sum();
        self.sign * s.re
    }

    /// Sum of two polynomials, with signs folded into the coefficients.
    pub fn plus(&self, other: &PluriharmonicPoly) -> PluriharmonicPoly {
        fn fold(p: &PluriharmonicPoly) -> impl Iterator<Item = Monomial> + '_ {
            p.monomials.iter().map(move |m| Monomial { coeff: m.coeff * p.sign, exponents: m.exponents.clone() })
        }
        let monomials = fold(self).chain(fold(other)).collect();
        PluriharmonicPoly { n: self.n, sign: 1.0, monomials }
    }
}

impl fmt::Display for PluriharmonicPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        f.write_str(if self.sign < 0.0 { "-Re[" } else { "Re[" })?;
        for (i, m) in self.monomials.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({}{:+}i)", m.coeff.re, m.coeff.im)?;
            for (k, &e) in m.exponents.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*z{}", k + 1)?,
                    _ => write!(f, "*z{}^{e}", k + 1)?,
                }
            }
        }
        f.write_str("]")
    }
}

fn unit(n: usize, k: usize, power: u8) -> Vec<u8> {
    let mut e = vec![0; n];
    e[k] = power;
    e
}

/// Fixed pool: `0`, `±Re(z_k)`, `±Re(i z_k)`, `±Re(z_k²)`, `±Re(i z_k²)`,
/// `±Re(z_j z_k)`, `±Re(i z_j z_k)`.
pub fn canonical_pool(n: usize) -> Vec<PluriharmonicPoly> {
    let mut out = vec![PluriharmonicPoly::zero(n)];
    out.extend(linear_pool(n));
    out.extend(quadratic_pool(n));
    out
}

/// The degree-one part of [`canonical_pool`].
pub fn linear_pool(n: usize) -> Vec<PluriharmonicPoly> {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut out = Vec::new();
    for k in 0..n {
        for c in [one, i] {
            for sign in [1.0, -1.0] {
                out.push(PluriharmonicPoly::single(n, sign, c, unit(n, k, 1)));
            }
        }
    }
    out
}

/// The degree-two part of [`canonical_pool`].
pub fn quadratic_pool(n: usize) -> Vec<PluriharmonicPoly> {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut out = Vec::new();
    for k in 0..n {
        for c in [one, i] {
            for sign in [1.0, -1.0] {
                out.push(PluriharmonicPoly::single(n, sign, c, unit(n, k, 2)));
            }
        }
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut e = vec![0; n];
            e[j] = 1;
            e[k] = 1;
            for c in [one, i] {
                for sign in [1.0, -1.0] {
                    out.push(PluriharmonicPoly::single(n, sign, c, e.clone()));
                }
            }
        }
    }
    out
}

/// Seeded random polynomials with up to three monomials of degree
/// `1..=max_degree`.
pub fn random_pool(n: usize, count: usize, max_degree: usize, seed: u64) -> Vec<PluriharmonicPoly> {
    let max_degree = max_degree.clamp(1, MAX_DEGREE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let terms = rng.gen_range(1..=3);
            let monomials = (0..terms)
                .map(|_| {
                    let degree = rng.gen_range(1..=max_degree);
                    let mut exponents = vec![0u8; n];
                    for _ in 0..degree {
                        exponents[rng.gen_range(0..n)] += 1;
                    }
                    let coeff = Complex64::new(
                        rng.gen_range(-COEFF_BOX..=COEFF_BOX),
                        rng.gen_range(-COEFF_BOX..=COEFF_BOX),
                    );
                    Monomial { coeff, exponents }
                })
                .collect();
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            PluriharmonicPoly { n, sign, monomials }
        })
        .collect()
}
