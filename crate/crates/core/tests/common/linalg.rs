//! Eigenvalue and inertia oracles that share no code with the library
//! solver.

use mqpsh::hermitian::HermitianMatrix;
use num_complex::Complex64;
use rand::Rng;

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn random_complex<R: Rng>(rng: &mut R, scale: f64) -> C {
    C::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize, scale: f64) -> HermitianMatrix {
    let mut e = vec![c(0.0); n * n];
    for k in 0..n {
        e[k * n + k] = c(rng.gen_range(-scale..scale));
        for l in k + 1..n {
            let z = random_complex(rng, scale);
            e[k * n + l] = z;
            e[l * n + k] = z.conj();
        }
    }
    HermitianMatrix::new(n, e).unwrap()
}

/// `C C*` for a random `n x m` matrix `C`.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, m: usize, scale: f64) -> HermitianMatrix {
    let cm: Vec<C> = (0..n * m).map(|_| random_complex(rng, scale)).collect();
    let mut e = vec![c(0.0); n * n];
    for k in 0..n {
        for l in 0..n {
            e[k * n + l] = (0..m).map(|j| cm[k * m + j] * cm[l * m + j].conj()).sum();
        }
    }
    HermitianMatrix::new(n, e).unwrap()
}

fn matmul(a: &[C], b: &[C], n: usize) -> Vec<C> {
    let mut out = vec![c(0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// Coefficients of `det(λI - A) = λ^n + c_1 λ^{n-1} + .. + c_n`, leading 1
/// first, by the Faddeev-LeVerrier recursion.
pub fn char_poly(a: &HermitianMatrix) -> Vec<f64> {
    let n = a.n();
    let a = a.entries();
    let mut coeffs = vec![1.0];
    let mut m = vec![c(0.0); n * n];
    for k in 1..=n {
        for i in 0..n {
            m[i * n + i] += c(*coeffs.last().unwrap());
        }
        m = matmul(a, &m, n);
        let trace: f64 = (0..n).map(|i| m[i * n + i].re).sum();
        coeffs.push(-trace / k as f64);
    }
    coeffs
}

fn horner(p: &[f64], z: C) -> (C, C) {
    let mut v = c(0.0);
    let mut d = c(0.0);
    for &a in p {
        d = d * z + v;
        v = v * z + c(a);
    }
    (v, d)
}

/// All roots of a monic real polynomial by Aberth iteration, then Newton
/// polishing on the real axis. Returns real parts in descending order.
pub fn real_roots(p: &[f64]) -> Vec<f64> {
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let bound = 1.0 + p[1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut z: Vec<C> = (0..n)
        .map(|k| C::from_polar(bound * 0.7, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for k in 0..n {
            let (v, d) = horner(p, z[k]);
            if v == c(0.0) {
                continue;
            }
            let ratio = v / d;
            let repulse: C = (0..n).filter(|&j| j != k).map(|j| c(1.0) / (z[k] - z[j])).sum();
            let step = ratio / (c(1.0) - ratio * repulse);
            z[k] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 * bound {
            break;
        }
    }
    let mut roots: Vec<f64> = z
        .iter()
        .map(|r| {
            let mut x = r.re;
            for _ in 0..3 {
                let (v, d) = horner(p, c(x));
                if d.re == 0.0 {
                    break;
                }
                let nx = x - v.re / d.re;
                if !nx.is_finite() || (nx - x).abs() > 1e-6 * bound {
                    break;
                }
                x = nx;
            }
            x
        })
        .collect();
    roots.sort_by(|a, b| b.total_cmp(a));
    roots
}

pub fn charpoly_eigenvalues(a: &HermitianMatrix) -> Vec<f64> {
    real_roots(&char_poly(a))
}

/// `(negative, zero, positive)` pivot counts of a Bunch-Parlett `L D L*`
/// factorization with complete pivoting. Pivots with `|d| <= tol` count as
/// zero.
pub fn ldl_inertia(a: &HermitianMatrix, tol: f64) -> (usize, usize, usize) {
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let mut n = a.n();
    let mut m: Vec<C> = a.entries().to_vec();
    let (mut neg, mut zero, mut pos) = (0, 0, 0);
    let mut count = |d: f64| {
        if d < -tol {
            neg += 1
        } else if d > tol {
            pos += 1
        } else {
            zero += 1
        }
    };
    while n > 0 {
        let at = |m: &[C], i: usize, j: usize| m[i * n + j];
        let (mut di, mut dmax) = (0, 0.0f64);
        for i in 0..n {
            if at(&m, i, i).re.abs() > dmax {
                dmax = at(&m, i, i).re.abs();
                di = i;
            }
        }
        let (mut oi, mut oj, mut omax) = (0, 0, 0.0f64);
        for i in 0..n {
            for j in i + 1..n {
                if at(&m, i, j).norm() > omax {
                    omax = at(&m, i, j).norm();
                    oi = i;
                    oj = j;
                }
            }
        }
        if dmax == 0.0 && omax == 0.0 {
            for _ in 0..n {
                count(0.0);
            }
            break;
        }
        let pivots: Vec<usize> = if dmax >= alpha * omax { vec![di] } else { vec![oi, oj] };
        let rest: Vec<usize> = (0..n).filter(|i| !pivots.contains(i)).collect();
        let next: Vec<C> = if pivots.len() == 1 {
            let p = pivots[0];
            let d = at(&m, p, p).re;
            count(d);
            rest.iter().flat_map(|&i| rest.iter().map(move |&j| (i, j))).map(|(i, j)| at(&m, i, j) - at(&m, i, p) * at(&m, p, j) / d).collect()
        } else {
            let (p, q) = (pivots[0], pivots[1]);
            let (a11, a12, a22) = (at(&m, p, p), at(&m, p, q), at(&m, q, q));
            let det = a11 * a22 - a12 * a12.conj();
            // ac - |b|^2 < 0 under the pivot rule: one sign of each
            count(-1.0);
            count(1.0);
            let inv = [a22 / det, -a12 / det, -a12.conj() / det, a11 / det];
            rest.iter()
                .flat_map(|&i| rest.iter().map(move |&j| (i, j)))
                .map(|(i, j)| {
                    let (ip, iq) = (at(&m, i, p), at(&m, i, q));
                    let (pj, qj) = (at(&m, p, j), at(&m, q, j));
                    let s = ip * (inv[0] * pj + inv[1] * qj) + iq * (inv[2] * pj + inv[3] * qj);
                    at(&m, i, j) - s
                })
                .collect()
        };
        m = next;
        n = rest.len();
    }
    (neg, zero, pos)
}
