//! Random real polynomials of degree at most 4 with analytic derivatives.

use rand::Rng;

#[derive(Clone, Debug)]
pub struct Quartic {
    pub dim: usize,
    pub terms: Vec<(f64, Vec<u32>)>,
}

fn all_exponents(dim: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|e: Vec<u32>| {
                let used: u32 = e.iter().sum();
                (0..=max_degree - used).map(move |k| {
                    let mut e = e.clone();
                    e.push(k);
                    e
                })
            })
            .collect();
    }
    out
}

impl Quartic {
    /// Every monomial of degree <= 4 with a uniform coefficient in `[-1, 1]`.
    pub fn random<R: Rng>(rng: &mut R, dim: usize) -> Self {
        let terms = all_exponents(dim, 4).into_iter().map(|e| (rng.gen_range(-1.0..1.0), e)).collect();
        Quartic { dim, terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// `d^2 f / dx_i dx_j`, row-major.
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut h = vec![0.0; d * d];
        for (c, e) in &self.terms {
            for i in 0..d {
                for j in 0..d {
                    let mut k = e.clone();
                    let mut coef = *c;
                    coef *= k[i] as f64;
                    k[i] = k[i].saturating_sub(1);
                    coef *= k[j] as f64;
                    k[j] = k[j].saturating_sub(1);
                    if coef != 0.0 {
                        h[i * d + j] += coef * k.iter().zip(x).map(|(&p, &v)| v.powi(p as i32)).product::<f64>();
                    }
                }
            }
        }
        h
    }
}
