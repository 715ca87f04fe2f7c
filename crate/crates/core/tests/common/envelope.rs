//! Quadratic-envelope and distance oracles by exhaustive pair scans.

use mqpsh::fields::{sample, BoxGrid, ExtReal, ScalarField};
use rand::Rng;
use rayon::prelude::*;

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `max_x u(x) - θ‖y - x‖²` over every pair of nodes.
pub fn quadratic_envelope(u: &ScalarField, theta: f64) -> Vec<ExtReal> {
    let g = u.grid();
    let coords: Vec<Vec<f64>> = (0..g.len()).map(|i| g.coord(i)).collect();
    (0..g.len())
        .into_par_iter()
        .map(|y| {
            let mut best = ExtReal::NegInf;
            for (x, cx) in coords.iter().enumerate() {
                if let Some(v) = u.get(x).finite() {
                    best = best.max(ExtReal::Finite(v - theta * sq(&coords[y], cx)));
                }
            }
            best
        })
        .collect()
}

/// Euclidean distance from every node to the nearest member.
pub fn distance(grid: &BoxGrid, mask: &[bool]) -> Vec<f64> {
    let members: Vec<Vec<f64>> = (0..grid.len()).filter(|&i| mask[i]).map(|i| grid.coord(i)).collect();
    (0..grid.len())
        .into_par_iter()
        .map(|y| {
            let c = grid.coord(y);
            members.iter().map(|m| sq(&c, m)).fold(f64::INFINITY, f64::min).sqrt()
        })
        .collect()
}

/// A square `n = 1` grid on `[-1, 1]^2` with `count` nodes per axis.
pub fn square(count: usize) -> BoxGrid {
    BoxGrid::cube(1, -1.0, 1.0, count).unwrap()
}

/// Uniform noise in `[-amp, amp]`, with upper bound `amp`.
pub fn noise<R: Rng>(rng: &mut R, grid: &BoxGrid, amp: f64) -> ScalarField {
    let values = (0..grid.len()).map(|_| ExtReal::Finite(rng.gen_range(-amp..amp))).collect();
    ScalarField::new(grid.clone(), values).unwrap().with_upper_bound(amp).unwrap()
}

/// Noise with a fraction `holes` of the nodes set to `-inf`.
pub fn holed_noise<R: Rng>(rng: &mut R, grid: &BoxGrid, amp: f64, holes: f64) -> ScalarField {
    let values = (0..grid.len())
        .map(|_| if rng.gen_bool(holes) { ExtReal::NegInf } else { ExtReal::Finite(rng.gen_range(-amp..amp)) })
        .collect();
    ScalarField::new(grid.clone(), values).unwrap().with_upper_bound(amp).unwrap()
}

/// A smooth random trigonometric field, bounded by `1`.
pub fn wave<R: Rng>(rng: &mut R, grid: &BoxGrid) -> ScalarField {
    let (a, b, c) = (rng.gen_range(1.5..4.0), rng.gen_range(1.5..4.0), rng.gen_range(0.0..6.0));
    sample(move |x| 0.5 * (a * x[0] + c).sin() * (b * x[1]).cos(), grid).unwrap().with_upper_bound(1.0).unwrap()
}

/// A random nonempty mask with density `p`.
pub fn random_mask<R: Rng>(rng: &mut R, grid: &BoxGrid, p: f64) -> Vec<bool> {
    let mut m: Vec<bool> = (0..grid.len()).map(|_| rng.gen_bool(p)).collect();
    if !m.iter().any(|&b| b) {
        let k = rng.gen_range(0..m.len());
        m[k] = true;
    }
    m
}
