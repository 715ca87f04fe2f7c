//! Inertia index of smooth functions via finite-difference Hessians.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{BoxGrid, ScalarField};
use crate::hessian::{real_hessian_checked, real_to_complex_hessian, RealSymmetric, Stencil};

/// Eigenvalue zero threshold of the smooth checker.
pub const SMOOTH_TOL: f64 = 1e-6;
/// Relative disagreement under step halving that marks a kink.
const KINK_TOL: f64 = 1e-4;
/// Same for grid differences at spacings `h` and `2h`, which also differ by
/// truncation error.
const SAMPLED_KINK_TOL: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothReport {
    /// Largest number of negative eigenvalues of `H^C f` over interior nodes.
    pub q_star: usize,
    /// Interior nodes where `q_star` is reached.
    pub worst_nodes: Vec<usize>,
    pub nodes_checked: usize,
}

/// `max` over interior nodes of `⊖(H^C f(node))`, with eigenvalues in
/// `[-tol, tol]` counted as zero.
///
/// `stencil` defaults to [`Stencil::default_at`] per node. Kinks and `-inf`
/// on a stencil surface as [`Error::NonSmooth`](crate::Error::NonSmooth) at
/// the first offending node in node order.
pub fn smooth_qpsh_index(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    grid: &BoxGrid,
    stencil: Option<&Stencil>,
    tol: f64,
) -> Result<SmoothReport> {
    let nodes: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_interior(i)).collect();
    let counts: Vec<Result<usize>> = nodes
        .par_iter()
        .map(|&i| {
            let x = grid.coord(i);
            let default;
            let st = match stencil {
                Some(s) => s,
                None => {
                    default = Stencil::default_at(&x);
                    &default
                }
            };
            let h = real_hessian_checked(f, &x, st, KINK_TOL)?;
            Ok(real_to_complex_hessian(&h)?.inertia(tol).negative)
        })
        .collect();
    let counts = counts.into_iter().collect::<Result<Vec<_>>>()?;
    let q_star = counts.iter().copied().max().unwrap_or(0);
    let worst_nodes = nodes.iter().zip(&counts).filter(|(_, &c)| c == q_star).map(|(&i, _)| i).collect();
    Ok(SmoothReport { q_star, worst_nodes, nodes_checked: nodes.len() })
}

fn grid_hessian(u: &ScalarField, node: usize, k: usize) -> Result<RealSymmetric> {
    let grid = u.grid();
    let d = grid.real_dim();
    let at = |offs: &[(usize, i64)]| -> Result<f64> {
        let mut i = node as i64;
        for &(a, o) in offs {
            i += o * k as i64 * grid.stride(a) as i64;
        }
        u.get(i as usize).finite().ok_or_else(|| Error::NonSmooth {
            point: grid.coord(node),
            reason: "-inf on the grid stencil".into(),
        })
    };
    let c = at(&[])?;
    let mut out = vec![0.0; d * d];
    for a in 0..d {
        let h = grid.spacing()[a] * k as f64;
        out[a * d + a] = (at(&[(a, 1)])? - 2.0 * c + at(&[(a, -1)])?) / (h * h);
        for b in a + 1..d {
            let hb = grid.spacing()[b] * k as f64;
            let v = (at(&[(a, 1), (b, 1)])? - at(&[(a, 1), (b, -1)])? - at(&[(a, -1), (b, 1)])?
                + at(&[(a, -1), (b, -1)])?)
                / (4.0 * h * hb);
            out[a * d + b] = v;
            out[b * d + a] = v;
        }
    }
    RealSymmetric::new(d, out)
}

/// [`smooth_qpsh_index`] for a field known only at the nodes: grid second
/// differences at nodes two steps from the edge, with spacings `h` and `2h`
/// compared to detect kinks.
pub fn smooth_qpsh_index_sampled(u: &ScalarField, tol: f64) -> Result<SmoothReport> {
    let grid = u.grid();
    let nodes: Vec<usize> = (0..grid.len()).filter(|&i| grid.has_margin(&grid.multi_index(i), 2)).collect();
    let counts = nodes
        .par_iter()
        .map(|&i| {
            let fine = grid_hessian(u, i, 1)?;
            let coarse = grid_hessian(u, i, 2)?;
            let gap = coarse.combine(1.0, &fine, -1.0).max_abs();
            if gap > SAMPLED_KINK_TOL * (1.0 + fine.max_abs()) {
                return Err(Error::NonSmooth {
                    point: grid.coord(i),
                    reason: format!("grid second differences at h and 2h disagree by {gap:e}"),
                });
            }
            Ok(real_to_complex_hessian(&fine)?.inertia(tol).negative)
        })
        .collect::<Vec<Result<usize>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let q_star = counts.iter().copied().max().unwrap_or(0);
    let worst_nodes = nodes.iter().zip(&counts).filter(|(_, &c)| c == q_star).map(|(&i, _)| i).collect();
    Ok(SmoothReport { q_star, worst_nodes, nodes_checked: nodes.len() })
}
