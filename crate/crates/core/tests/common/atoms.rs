//! Random quadratic atoms with a known level, and the closure operations
//! that combine them.

use std::sync::Arc;

use mqpsh::fields::complex_point;
use mqpsh::hermitian::HermitianMatrix;
use mqpsh::qpsh::{hermitian_form, random_pool, unitary_frames, PluriharmonicPoly};
use num_complex::Complex64;
use rand::Rng;

pub type Func = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `hermitian_form(F diag(μ) F*, z - c) + Re p(z)` with exactly `level`
/// negative entries in `μ`.
#[derive(Clone, Debug)]
pub struct Atom {
    pub hessian: HermitianMatrix,
    pub center: Vec<Complex64>,
    pub poly: PluriharmonicPoly,
    pub level: usize,
}

impl Atom {
    pub fn random<R: Rng>(rng: &mut R, n: usize, level: usize) -> Self {
        let frames = unitary_frames(n);
        let frame = &frames[rng.gen_range(0..frames.len())];
        let mut hessian = HermitianMatrix::zeros(n);
        for (j, f) in frame.iter().enumerate() {
            let mu = if j < level { -rng.gen_range(0.2..1.5) } else { rng.gen_range(0.2..1.5) };
            hessian = &hessian + &(mu * &HermitianMatrix::outer(f));
        }
        let center = (0..n).map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))).collect();
        let poly = random_pool(n, 1, 2, rng.gen()).remove(0);
        Atom { hessian, center, poly, level }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let z = complex_point(x);
        let w: Vec<Complex64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        hermitian_form(&self.hessian, &w) + 0.2 * self.poly.eval(&z)
    }

    pub fn func(&self) -> Func {
        let a = self.clone();
        Arc::new(move |x| a.eval(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Max,
    Sum,
    Min,
    Scale(f64),
}

/// `op(u, v)` and the level it is certified at, for inputs at levels `q`
/// and `r`. `Scale` ignores `v`.
pub fn combine(op: Op, u: Func, q: usize, v: Func, r: usize) -> (Func, usize) {
    match op {
        Op::Max => (Arc::new(move |x| u(x).max(v(x))), q.max(r)),
        Op::Sum => (Arc::new(move |x| u(x) + v(x)), q + r),
        Op::Min => (Arc::new(move |x| u(x).min(v(x))), q + r + 1),
        Op::Scale(c) => (Arc::new(move |x| c * u(x)), q),
    }
}
