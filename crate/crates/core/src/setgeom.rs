//! Closed sets on grids: characteristic functions, exact Euclidean distance,
//! and the agreement suite linking `χ_X`, `f∘dist_X` and `-ln dist_X`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{BoxGrid, ExtReal, ScalarField};
use crate::qpsh::{canonical_pool, classical_qpsh_oracle_with, default_slices, BallOptions, ClassicalOptions, QpshVerdict};
use crate::supconv::{check_nonincreasing, dist, moreau_envelope_fast, sup_convolve_bruteforce, Kernel};

/// Nonincreasing profile `f: [0, ∞) -> [-∞, 0]`.
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A set of grid nodes. Every mask on a finite grid is closed.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSet {
    grid: BoxGrid,
    mask: Vec<bool>,
}

impl GridSet {
    pub fn new(grid: BoxGrid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: mask.len() });
        }
        Ok(GridSet { grid, mask })
    }

    pub fn from_fn(grid: BoxGrid, member: impl Fn(&[f64]) -> bool) -> Self {
        let mask = (0..grid.len()).map(|i| member(&grid.coord(i))).collect();
        GridSet { grid, mask }
    }

    pub fn full(grid: BoxGrid) -> Self {
        let mask = vec![true; grid.len()];
        GridSet { grid, mask }
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, node: usize) -> bool {
        self.mask[node]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }
}

/// `0` on `X`, `-inf` elsewhere, with upper bound `0`.
pub fn char_function(x: &GridSet) -> ScalarField {
    let values = x.mask.iter().map(|&m| if m { ExtReal::ZERO } else { ExtReal::NegInf }).collect();
    ScalarField::new(x.grid.clone(), values)
        .and_then(|f| f.with_upper_bound(0.0))
        .expect("mask length matches the grid")
}

/// Euclidean distance to the nearest node of `X`.
///
/// The nearest node comes from the separable quadratic envelope of `χ_X`;
/// the distance is then recomputed from its coordinates.
pub fn distance_transform(x: &GridSet) -> Result<ScalarField> {
    if x.is_empty() {
        return Err(Error::Empty("distance to an empty set".into()));
    }
    let env = moreau_envelope_fast(&char_function(x), 1.0)?;
    let grid = &x.grid;
    let values: Vec<ExtReal> = (0..grid.len())
        .into_par_iter()
        .map(|y| {
            let src = env.argmax_index[y].expect("nonempty set reaches every node");
            ExtReal::Finite(dist(&grid.coord(y), &grid.coord(src)))
        })
        .collect();
    ScalarField::new(grid.clone(), values)
}

fn check_profile(f: &dyn Fn(f64) -> f64) -> Result<()> {
    if f(0.0) != 0.0 {
        return Err(Error::Precondition(format!("profile must vanish at 0, got {}", f(0.0))));
    }
    check_nonincreasing(f).map_err(|e| Error::Precondition(e.to_string()))?;
    for t in [1e-9, 1e-6, 1e-3, 1.0, 1e3] {
        if !(f(t) < 0.0) {
            return Err(Error::Precondition(format!("profile must be negative for t > 0, f({t}) = {}", f(t))));
        }
    }
    Ok(())
}

/// `f∘dist` pointwise, after checking `f(0) = 0`, `f < 0` on `(0, ∞)` and
/// monotone decrease on a sample ladder.
pub fn compose_decreasing(f: &dyn Fn(f64) -> f64, distance: &ScalarField) -> Result<ScalarField> {
    check_profile(f)?;
    let values = distance
        .values()
        .iter()
        .enumerate()
        .map(|(node, d)| match d.finite() {
            Some(t) if t >= 0.0 => Ok(ExtReal::from_f64(f(t)).unwrap_or(ExtReal::NegInf)),
            _ => Err(Error::RejectedValue { node, value: d.to_f64() }),
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(distance.grid().clone(), values)
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub max_abs_diff: f64,
    /// Nodes where exactly one side is `-inf` or the difference exceeds the
    /// tolerance.
    pub mismatches: Vec<usize>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub const IDENTITY_TOL: f64 = 1e-12;

/// Compares the brute-force sup-convolution of `χ_X` with kernel `f(‖·‖)`
/// against `f∘dist_X`, node by node.
pub fn char_supconv_identity(x: &GridSet, name: &str, f: Profile) -> Result<IdentityReport> {
    check_profile(f.as_ref())?;
    let kernel = Kernel::radial(name, f.clone())?;
    let lhs = sup_convolve_bruteforce(&char_function(x), &kernel, &x.grid)?.values;
    let rhs = compose_decreasing(f.as_ref(), &distance_transform(x)?)?;
    let mut report = IdentityReport { max_abs_diff: 0.0, mismatches: Vec::new() };
    for i in 0..lhs.len() {
        match (lhs.get(i).finite(), rhs.get(i).finite()) {
            (Some(a), Some(b)) => {
                let d = (a - b).abs();
                report.max_abs_diff = report.max_abs_diff.max(d);
                if d > IDENTITY_TOL {
                    report.mismatches.push(i);
                }
            }
            (None, None) => {}
            _ => report.mismatches.push(i),
        }
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub q: usize,
    pub char_verdict: QpshVerdict,
    pub composed_verdict: QpshVerdict,
    /// `-ln dist_X` at level `q - 1`; `None` when `q = 0`.
    pub log_verdict: Option<QpshVerdict>,
    /// `(k, verdict of k·(f∘dist))`, run when `f∘dist` passes.
    pub scaling: Vec<(f64, QpshVerdict)>,
    pub notes: Vec<String>,
}

impl EquivalenceReport {
    pub fn agree(&self) -> bool {
        let s = self.char_verdict.status;
        self.composed_verdict.status == s && self.log_verdict.as_ref().is_none_or(|v| v.status == s)
    }

    pub fn scaling_ok(&self) -> bool {
        self.scaling.iter().all(|(_, v)| v.passed())
    }

    pub fn passed(&self) -> bool {
        self.agree() && self.scaling_ok()
    }
}

pub const SCALES: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

/// Runs the classical oracle on `χ_X` and `f∘dist_X` at level `q`, and on
/// `-ln dist_X` at level `q - 1` over complement nodes farther than one
/// spacing from `X`.
pub fn pseudoconvex_equivalence_suite(
    x: &GridSet,
    f: &dyn Fn(f64) -> f64,
    q: usize,
    balls: &BallOptions,
) -> Result<EquivalenceReport> {
    let grid = &x.grid;
    let n = grid.dim_complex();
    let polys = canonical_pool(n);
    let run = |u: &ScalarField, level: usize, opts: &ClassicalOptions| {
        classical_qpsh_oracle_with(u, level, &default_slices(grid, level, balls), &polys, opts)
    };
    let plain = ClassicalOptions::new(balls.balls_per_slice);
    let chi = char_function(x);
    let char_verdict = run(&chi, q, &plain)?;
    let mut notes = Vec::new();
    if x.is_empty() {
        notes.push("X is empty: every field is -inf".into());
        let v = QpshVerdict::pass_with_note("u is identically -inf");
        return Ok(EquivalenceReport {
            q,
            char_verdict,
            composed_verdict: v.clone(),
            log_verdict: (q > 0).then_some(v),
            scaling: Vec::new(),
            notes,
        });
    }
    let distance = distance_transform(x)?;
    let composed = compose_decreasing(f, &distance)?;
    let composed_verdict = run(&composed, q, &plain)?;
    let log_verdict = if q == 0 {
        notes.push("q = 0: the -ln dist clause is skipped".into());
        None
    } else {
        let h = grid.max_spacing();
        let far: Vec<bool> = distance.values().iter().map(|d| d.to_f64() > h * (1.0 + 1e-9)).collect();
        if !far.iter().any(|&b| b) {
            notes.push("complement has no node beyond one spacing: the -ln dist clause is vacuous".into());
        }
        let values = distance
            .values()
            .iter()
            .zip(&far)
            .map(|(d, &keep)| if keep { ExtReal::Finite(-d.to_f64().ln()) } else { ExtReal::NegInf })
            .collect();
        let log_field = ScalarField::new(grid.clone(), values)?;
        let opts = ClassicalOptions::new(balls.balls_per_slice).with_domain(far);
        Some(run(&log_field, q - 1, &opts)?)
    };
    let mut scaling = Vec::new();
    if composed_verdict.passed() {
        for k in SCALES {
            let scaled = composed.map(|_, v| v.scale(k));
            scaling.push((k, run(&scaled, q, &plain)?));
        }
    }
    Ok(EquivalenceReport { q, char_verdict, composed_verdict, log_verdict, scaling, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> BoxGrid {
        BoxGrid::cube(1, -1.0, 1.0, 9).unwrap()
    }

    #[test]
    fn char_function_examples() {
        let g = grid();
        let full = char_function(&GridSet::full(g.clone()));
        assert!(full.values().iter().all(|v| *v == ExtReal::ZERO));
        assert_eq!(full.upper_bound(), Some(0.0));
        let empty = char_function(&GridSet::new(g.clone(), vec![false; g.len()]).unwrap());
        assert!(empty.is_all_neg_inf());
    }

    #[test]
    fn distance_to_origin_is_norm() {
        let g = grid();
        let x = GridSet::from_fn(g.clone(), |p| p.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(x.count(), 1);
        let d = distance_transform(&x).unwrap();
        for i in 0..g.len() {
            let c = g.coord(i);
            assert!((d.get(i).to_f64() - (c[0] * c[0] + c[1] * c[1]).sqrt()).abs() < 1e-15);
        }
        assert!(distance_transform(&GridSet::new(g.clone(), vec![false; g.len()]).unwrap()).is_err());
    }

    #[test]
    fn compose_checks_profile() {
        let g = grid();
        let d = distance_transform(&GridSet::full(g)).unwrap();
        assert!(compose_decreasing(&|t| t, &d).is_err());
        assert!(compose_decreasing(&|t| 1.0 - t, &d).is_err());
        let step = compose_decreasing(&|t| if t > 0.0 { -1.0 } else { 0.0 }, &d).unwrap();
        assert!(step.values().iter().all(|v| *v == ExtReal::ZERO));
    }

    #[test]
    fn two_point_identity() {
        let g = grid();
        let x = GridSet::from_fn(g, |p| (p[0].abs() - 0.5).abs() < 1e-12 && p[1] == 0.0);
        assert_eq!(x.count(), 2);
        let r = char_supconv_identity(&x, "neg_sq", Arc::new(|t| -t * t)).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
