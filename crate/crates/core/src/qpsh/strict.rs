//! Strict q-plurisubharmonicity: `u - ε‖· - y‖²` passes the maximum-property
//! oracle on a ball around `y`.

use rayon::prelude::*;

use super::classical::classical_on_values;
use super::poly::{canonical_pool, PluriharmonicPoly};
use super::{slice_frames, ClassicalOptions, Witness};
use crate::error::{Error, Result};
use crate::fields::{BoxGrid, ExtReal, ScalarField, SliceSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct StrictOptions {
    /// Nodes to check; every node whose ball fits in the grid when `None`.
    pub nodes: Option<Vec<usize>>,
    /// Smallest sub-ball radius, in grid spacings.
    pub min_radius_nodes: usize,
    /// Test polynomials; the canonical pool when `None`.
    pub polys: Option<Vec<PluriharmonicPoly>>,
}

impl Default for StrictOptions {
    fn default() -> Self {
        StrictOptions { nodes: None, min_radius_nodes: 4, polys: None }
    }
}

#[derive(Clone, Debug)]
pub struct StrictReport {
    /// The ladder, largest first.
    pub epsilons: Vec<f64>,
    pub nodes: Vec<usize>,
    /// Largest passing ε for each node of `nodes`.
    pub largest_passing: Vec<Option<f64>>,
    /// Witness found at the smallest ε, for nodes that never pass.
    pub witnesses: Vec<Option<Witness>>,
    /// Requested nodes whose ball does not fit in the grid.
    pub skipped_nodes: Vec<usize>,
}

impl StrictReport {
    pub fn passed_nodes(&self) -> Vec<usize> {
        self.nodes.iter().zip(&self.largest_passing).filter(|(_, e)| e.is_some()).map(|(n, _)| *n).collect()
    }

    pub fn failed_nodes(&self) -> Vec<usize> {
        self.nodes.iter().zip(&self.largest_passing).filter(|(_, e)| e.is_none()).map(|(n, _)| *n).collect()
    }

    pub fn all_passed(&self) -> bool {
        self.largest_passing.iter().all(Option::is_some)
    }

    pub fn all_failed(&self) -> bool {
        self.largest_passing.iter().all(Option::is_none)
    }

    pub fn largest_passing_at(&self, node: usize) -> Option<Option<f64>> {
        self.nodes.iter().position(|&n| n == node).map(|i| self.largest_passing[i])
    }
}

fn ball_fits(grid: &BoxGrid, node: usize, radius: f64) -> bool {
    let x = grid.coord(node);
    (0..grid.real_dim()).all(|a| x[a] - radius >= grid.lo()[a] - 1e-12 && x[a] + radius <= grid.hi()[a] + 1e-12)
}

/// Sub-balls of `B(y, R)` in every aligned `(q+1)`-frame: radii `R / 2^k`
/// down to `min_radius_nodes` spacings, centres on a lattice of spacing
/// about half the radius, each sub-ball inside `B(y, R)`.
fn sub_ball_slices(grid: &BoxGrid, y: usize, q: usize, radius: f64, min_radius_nodes: usize) -> Vec<SliceSpec> {
    let n = grid.dim_complex();
    let h = grid.max_spacing();
    let frames = slice_frames(n, q + 1);
    let ym = grid.multi_index(y);
    let yx = grid.coord(y);
    let mut out = Vec::new();
    let mut r = radius;
    while r >= min_radius_nodes as f64 * h * (1.0 - 1e-9) {
        let stride = ((r / h / 2.0).floor() as usize).max(1);
        let reach = ((radius - r) / grid.min_spacing() + 1e-9).floor() as usize;
        let lo: Vec<usize> = ym.iter().map(|&m| m.saturating_sub(reach)).collect();
        let hi: Vec<usize> = ym.iter().zip(grid.counts()).map(|(&m, &c)| (m + reach).min(c - 1)).collect();
        for c in grid.index_box(&lo, &hi) {
            let cm = grid.multi_index(c);
            if cm.iter().zip(&ym).any(|(a, b)| a.abs_diff(*b) % stride != 0) {
                continue;
            }
            let cx = grid.coord(c);
            let d = cx.iter().zip(&yx).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if d + r > radius * (1.0 + 1e-9) {
                continue;
            }
            for frame in &frames {
                out.push(SliceSpec { base: grid.complex_coord(c), frame: frame.clone(), ball_radius: r, boundary_samples: 1 });
            }
        }
        r /= 2.0;
    }
    out
}

/// For each node `y`, the largest `ε` in `epsilons` for which
/// `u - ε‖· - y‖²` passes the classical oracle at level `q` on sub-balls of
/// `B(y, ball_radius)`.
pub fn strict_qpsh_check(
    u: &ScalarField,
    q: usize,
    epsilons: &[f64],
    ball_radius: f64,
    opts: &StrictOptions,
) -> Result<StrictReport> {
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Precondition("epsilons must be a nonempty list of positive numbers".into()));
    }
    if !(ball_radius > 0.0) {
        return Err(Error::Precondition("ball radius must be positive".into()));
    }
    let grid = u.grid();
    let n = grid.dim_complex();
    if q + 1 > n {
        return Err(Error::Precondition(format!("strictness at level q = {q} needs n > q, got n = {n}")));
    }
    let mut ladder = epsilons.to_vec();
    ladder.sort_by(|a, b| b.total_cmp(a));
    ladder.dedup();
    let requested: Vec<usize> = opts.nodes.clone().unwrap_or_else(|| (0..grid.len()).collect());
    let (nodes, skipped_nodes): (Vec<usize>, Vec<usize>) =
        requested.into_iter().partition(|&y| ball_fits(grid, y, ball_radius));
    let polys = opts.polys.clone().unwrap_or_else(|| canonical_pool(n));
    let copts = ClassicalOptions::new(1);
    let results: Vec<Result<(Option<f64>, Option<Witness>)>> = nodes
        .par_iter()
        .map(|&y| {
            let slices = sub_ball_slices(grid, y, q, ball_radius, opts.min_radius_nodes);
            let yx = grid.coord(y);
            let mut last = None;
            for &eps in &ladder {
                let values = |i: usize| -> ExtReal {
                    let d2: f64 = grid.coord(i).iter().zip(&yx).map(|(a, b)| (a - b) * (a - b)).sum();
                    u.get(i) + (-eps * d2)
                };
                let v = classical_on_values(&values, grid, q, &slices, &polys, &copts)?;
                if v.passed() {
                    return Ok((Some(eps), None));
                }
                last = v.witness;
            }
            Ok((None, last))
        })
        .collect();
    let mut largest_passing = Vec::with_capacity(nodes.len());
    let mut witnesses = Vec::with_capacity(nodes.len());
    for r in results {
        let (e, w) = r?;
        largest_passing.push(e);
        witnesses.push(w);
    }
    Ok(StrictReport { epsilons: ladder, nodes, largest_passing, witnesses, skipped_nodes })
}
