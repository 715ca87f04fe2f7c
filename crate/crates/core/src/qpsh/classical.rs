//! Maximum-property oracle on discretized balls in complex slices.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use super::poly::PluriharmonicPoly;
use super::{slice_frames, trivial_verdict, QpshVerdict, Status, Witness};
use crate::error::{Error, Result};
use crate::fields::{real_point, slice_spacing, BoxGrid, ExtReal, ScalarField, SliceSpec};

/// Absolute slack when comparing interior and boundary maxima.
pub const MAX_TOL: f64 = 1e-9;
/// Smaller balls miss the level sets of rotated slices.
const MIN_RADIUS_STEPS: f64 = 2.0;

/// How [`default_slices`] lays out balls.
#[derive(Clone, Debug, PartialEq)]
pub struct BallOptions {
    /// Ball radius in slice-lattice steps.
    pub radius_nodes: usize,
    /// Spacing of ball centres, in grid nodes.
    pub center_stride: usize,
    /// Concentric balls per slice, radii `R, R (k-1)/k, ...`.
    pub balls_per_slice: usize,
}

impl BallOptions {
    /// Defaults that keep the oracle fast on the grids used in the tests:
    /// radius 4 and stride 1 for `n = 1`, radius 2 and stride 2 otherwise.
    pub fn for_dim(n: usize) -> Self {
        if n == 1 {
            BallOptions { radius_nodes: 4, center_stride: 1, balls_per_slice: 4 }
        } else {
            BallOptions { radius_nodes: 2, center_stride: 2, balls_per_slice: 2 }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalOptions {
    pub tol: f64,
    pub balls_per_slice: usize,
    /// Also test each polynomial plus the linear function cancelling the
    /// discrete gradient of `u` at the ball centre.
    pub gradient_tilt: bool,
    /// Only balls whose nodes all lie in the mask are tested.
    pub domain: Option<Vec<bool>>,
}

impl ClassicalOptions {
    pub fn new(balls_per_slice: usize) -> Self {
        ClassicalOptions { tol: MAX_TOL, balls_per_slice: balls_per_slice.max(1), gradient_tilt: true, domain: None }
    }

    pub fn with_domain(mut self, mask: Vec<bool>) -> Self {
        self.domain = Some(mask);
        self
    }
}

/// A ball on which `u + h` peaks strictly inside.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalWitness {
    pub slice_index: usize,
    pub slice: SliceSpec,
    pub radius: f64,
    /// Test function, evaluated at displacements from the ball centre.
    pub poly: PluriharmonicPoly,
    /// Parent node where the interior maximum sits.
    pub argmax_node: usize,
    pub interior_max: ExtReal,
    pub boundary_max: ExtReal,
    /// Some ball node was looked up by nearest node.
    pub approximate: bool,
}

impl fmt::Display for ClassicalWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "checker = \"classical\"")?;
        writeln!(f, "slice_index = {}", self.slice_index)?;
        writeln!(f, "base = {:?}", real_point(&self.slice.base))?;
        let frame: Vec<Vec<f64>> = self.slice.frame.iter().map(|v| real_point(v)).collect();
        writeln!(f, "frame = {frame:?}")?;
        writeln!(f, "radius = {}", self.radius)?;
        writeln!(f, "poly = \"{}\"", self.poly)?;
        writeln!(f, "argmax_node = {}", self.argmax_node)?;
        writeln!(f, "interior_max = \"{}\"", self.interior_max)?;
        writeln!(f, "boundary_max = \"{}\"", self.boundary_max)?;
        write!(f, "approximate = {}", self.approximate)
    }
}

/// Slices through a lattice of centres for every aligned `(q+1)`-frame,
/// with balls kept inside the grid.
pub fn default_slices(grid: &BoxGrid, q: usize, opts: &BallOptions) -> Vec<SliceSpec> {
    let n = grid.dim_complex();
    let m = q + 1;
    if m > n {
        return Vec::new();
    }
    let d = grid.real_dim();
    let mut out = Vec::new();
    for frame in slice_frames(n, m) {
        let probe = SliceSpec::new(vec![Complex64::new(0.0, 0.0); n], frame.clone(), 1.0);
        let (s, _) = slice_spacing(grid, &probe);
        let radius = opts.radius_nodes as f64 * s;
        let probe = SliceSpec { ball_radius: radius, ..probe };
        // index reach of the ball along each axis
        let mut reach = vec![0usize; d];
        for (w, _) in ball_lattice(m, opts.radius_nodes, s) {
            let x = real_point(&probe.displacement(&w));
            for a in 0..d {
                reach[a] = reach[a].max((x[a] / grid.spacing()[a]).abs().round() as usize);
            }
        }
        if (0..d).any(|a| 2 * reach[a] >= grid.counts()[a]) {
            continue;
        }
        let lo: Vec<usize> = reach.clone();
        let hi: Vec<usize> = (0..d).map(|a| grid.counts()[a] - 1 - reach[a]).collect();
        for node in grid.index_box(&lo, &hi) {
            let multi = grid.multi_index(node);
            if multi.iter().zip(&lo).any(|(i, l)| (i - l) % opts.center_stride.max(1) != 0) {
                continue;
            }
            out.push(SliceSpec {
                base: grid.complex_coord(node),
                frame: frame.clone(),
                ball_radius: radius,
                boundary_samples: 1,
            });
        }
    }
    out
}

/// Slice-lattice points of the closed ball of radius `k` steps: real slice
/// coordinates and integer squared radius.
fn ball_lattice(m: usize, k: usize, s: f64) -> Vec<(Vec<f64>, usize)> {
    let dim = 2 * m;
    let k = k as i64;
    let mut out = Vec::new();
    let mut a = vec![-k; dim];
    loop {
        let r2: i64 = a.iter().map(|v| v * v).sum();
        if r2 <= k * k {
            out.push((a.iter().map(|&v| v as f64 * s).collect(), r2 as usize));
        }
        let mut t = dim;
        loop {
            if t == 0 {
                return out;
            }
            t -= 1;
            if a[t] < k {
                a[t] += 1;
                break;
            }
            a[t] = -k;
        }
    }
}

struct BallSample {
    parents: Vec<usize>,
    /// Squared radius in lattice steps.
    r2: Vec<usize>,
    disp: Vec<Vec<Complex64>>,
    lattice: Vec<Vec<f64>>,
    spacing: f64,
    steps: usize,
    approximate: bool,
}

fn sample_ball(grid: &BoxGrid, slice: &SliceSpec) -> Result<BallSample> {
    let (s, aligned) = slice_spacing(grid, slice);
    let steps = (slice.ball_radius / s + 1e-9).floor() as usize;
    if steps == 0 {
        return Err(Error::OutOfRange(format!("ball radius {} is below the slice spacing {s}", slice.ball_radius)));
    }
    let mut out = BallSample {
        parents: Vec::new(),
        r2: Vec::new(),
        disp: Vec::new(),
        lattice: Vec::new(),
        spacing: s,
        steps,
        approximate: !aligned,
    };
    for (w, r2) in ball_lattice(slice.dim(), steps, s) {
        let disp = slice.displacement(&w);
        let z: Vec<Complex64> = slice.base.iter().zip(&disp).map(|(b, d)| b + d).collect();
        let (node, exact) = grid
            .nearest_node(&real_point(&z))
            .ok_or_else(|| Error::OutOfRange(format!("ball node {:?} lies outside the grid", real_point(&z))))?;
        out.approximate |= !exact;
        out.parents.push(node);
        out.r2.push(r2);
        out.disp.push(disp);
        out.lattice.push(w);
    }
    Ok(out)
}

/// Linear polynomial cancelling the discrete slice gradient of the values at
/// the ball centre, if all axis neighbours are finite.
fn gradient_tilt(ball: &BallSample, vals: &[ExtReal], slice: &SliceSpec) -> Option<PluriharmonicPoly> {
    let m = slice.dim();
    let n = slice.base.len();
    let s = ball.spacing;
    let find = |target: &[f64]| {
        ball.lattice
            .iter()
            .position(|w| w.iter().zip(target).all(|(a, b)| (a - b).abs() < 1e-9 * s))
    };
    let mut grad = vec![0.0; 2 * m];
    for (t, g) in grad.iter_mut().enumerate() {
        let mut plus = vec![0.0; 2 * m];
        plus[t] = s;
        let minus: Vec<f64> = plus.iter().map(|v| -v).collect();
        let vp = vals[find(&plus)?].finite()?;
        let vm = vals[find(&minus)?].finite()?;
        *g = (vp - vm) / (2.0 * s);
    }
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..m {
        // Re(b w) = Re(b) Re(w) - Im(b) Im(w)
        let b = Complex64::new(-grad[j], grad[m + j]);
        for (ak, f) in a.iter_mut().zip(&slice.frame[j]) {
            *ak += b * f.conj();
        }
    }
    Some(PluriharmonicPoly::linear(&a))
}

struct BallCheck {
    interior: ExtReal,
    argmax: usize,
    boundary: ExtReal,
    band_count: usize,
}

fn check_radius(ball: &BallSample, total: &[ExtReal], radius_steps: f64) -> BallCheck {
    let r2_max = radius_steps * radius_steps * (1.0 + 1e-12);
    let inner = (radius_steps - 1.0).max(0.0);
    let inner2 = inner * inner * (1.0 + 1e-12);
    let mut out = BallCheck { interior: ExtReal::NegInf, argmax: 0, boundary: ExtReal::NegInf, band_count: 0 };
    for (i, &r2) in ball.r2.iter().enumerate() {
        let r2 = r2 as f64;
        if r2 > r2_max {
            continue;
        }
        let v = total[i];
        if v > out.interior {
            out.interior = v;
            out.argmax = i;
        }
        // the boundary band: nodes within one lattice step of the sphere
        if r2 > inner2 {
            out.band_count += 1;
            out.boundary = out.boundary.max(v);
        }
    }
    out
}

fn violates(interior: ExtReal, boundary: ExtReal, tol: f64) -> bool {
    match (interior.finite(), boundary.finite()) {
        (Some(_), None) => true,
        (Some(a), Some(b)) => a - b > tol + 1e-12 * a.abs(),
        _ => false,
    }
}

#[derive(Default)]
struct SliceOutcome {
    witness: Option<ClassicalWitness>,
    tests: usize,
    skipped: usize,
}

fn check_slice(
    values: &(dyn Fn(usize) -> ExtReal + Sync),
    grid: &BoxGrid,
    index: usize,
    slice: &SliceSpec,
    polys: &[PluriharmonicPoly],
    opts: &ClassicalOptions,
) -> Result<SliceOutcome> {
    slice.validate(grid.dim_complex())?;
    let ball = sample_ball(grid, slice)?;
    let mut outcome = SliceOutcome::default();
    let balls = opts.balls_per_slice;
    if let Some(mask) = &opts.domain {
        if ball.parents.iter().any(|&p| !mask[p]) {
            outcome.skipped = polys.len() * balls;
            return Ok(outcome);
        }
    }
    let vals: Vec<ExtReal> = ball.parents.iter().map(|&p| values(p)).collect();
    if vals.iter().all(|v| v.is_neg_inf()) {
        outcome.skipped = polys.len() * balls;
        return Ok(outcome);
    }
    let mut tests: Vec<PluriharmonicPoly> = polys.to_vec();
    if opts.gradient_tilt {
        if let Some(tilt) = gradient_tilt(&ball, &vals, slice) {
            tests.extend(polys.iter().map(|p| p.plus(&tilt)));
        }
    }
    let steps = ball.steps as f64;
    let radii: Vec<f64> = (0..balls)
        .map(|i| steps * (balls - i) as f64 / balls as f64)
        .filter(|&r| r >= MIN_RADIUS_STEPS.min(steps))
        .collect();
    let mut total = vec![ExtReal::NegInf; vals.len()];
    for poly in &tests {
        for (t, (v, d)) in total.iter_mut().zip(vals.iter().zip(&ball.disp)) {
            *t = *v + poly.eval(d);
        }
        for &r in &radii {
            let check = check_radius(&ball, &total, r);
            if check.band_count < slice.boundary_samples || check.interior.is_neg_inf() {
                outcome.skipped += 1;
                continue;
            }
            outcome.tests += 1;
            if violates(check.interior, check.boundary, opts.tol) {
                outcome.witness = Some(ClassicalWitness {
                    slice_index: index,
                    slice: slice.clone(),
                    radius: r * ball.spacing,
                    poly: poly.clone(),
                    argmax_node: ball.parents[check.argmax],
                    interior_max: check.interior,
                    boundary_max: check.boundary,
                    approximate: ball.approximate,
                });
                return Ok(outcome);
            }
        }
    }
    Ok(outcome)
}

pub(crate) fn classical_on_values(
    values: &(dyn Fn(usize) -> ExtReal + Sync),
    grid: &BoxGrid,
    q: usize,
    slices: &[SliceSpec],
    polys: &[PluriharmonicPoly],
    opts: &ClassicalOptions,
) -> Result<QpshVerdict> {
    if let Some(s) = slices.iter().find(|s| s.dim() != q + 1) {
        return Err(Error::Precondition(format!("slice of dimension {} used at level q = {q}", s.dim())));
    }
    let outcomes: Vec<Result<SliceOutcome>> = slices
        .par_iter()
        .enumerate()
        .map(|(i, s)| check_slice(values, grid, i, s, polys, opts))
        .collect();
    let mut verdict = QpshVerdict { status: Status::Pass, witness: None, tests_run: 0, skipped: 0, note: None };
    for o in outcomes {
        let o = o?;
        verdict.tests_run += o.tests;
        verdict.skipped += o.skipped;
        if verdict.witness.is_none() {
            if let Some(w) = o.witness {
                verdict.status = Status::Fail;
                verdict.witness = Some(Witness::Classical(w));
            }
        }
    }
    Ok(verdict)
}

/// Maximum property of `u + P` on balls of the given `(q+1)`-slices for
/// every `P` in `polys`, with `balls_per_slice` concentric balls each.
pub fn classical_qpsh_oracle(
    u: &ScalarField,
    q: usize,
    slices: &[SliceSpec],
    polys: &[PluriharmonicPoly],
    balls_per_slice: usize,
) -> Result<QpshVerdict> {
    classical_qpsh_oracle_with(u, q, slices, polys, &ClassicalOptions::new(balls_per_slice))
}

pub fn classical_qpsh_oracle_with(
    u: &ScalarField,
    q: usize,
    slices: &[SliceSpec],
    polys: &[PluriharmonicPoly],
    opts: &ClassicalOptions,
) -> Result<QpshVerdict> {
    if let Some(v) = trivial_verdict(u, q) {
        return Ok(v);
    }
    classical_on_values(&|i| u.get(i), u.grid(), q, slices, polys, opts)
}

/// Re-evaluates a witness; true when the interior maximum still exceeds the
/// boundary maximum.
pub fn replay_classical(u: &ScalarField, w: &ClassicalWitness) -> Result<bool> {
    let ball = sample_ball(u.grid(), &w.slice)?;
    let total: Vec<ExtReal> = ball
        .parents
        .iter()
        .zip(&ball.disp)
        .map(|(&p, d)| u.get(p) + w.poly.eval(d))
        .collect();
    let check = check_radius(&ball, &total, w.radius / ball.spacing);
    Ok(violates(check.interior, check.boundary, MAX_TOL)
        && check.interior == w.interior_max
        && ball.parents[check.argmax] == w.argmax_node)
}

#[cfg(test)]
mod tests {
    use super::super::canonical_pool;
    use super::*;
    use crate::fields::sample;

    fn grid(n: usize, count: usize) -> BoxGrid {
        BoxGrid::cube(n, -1.0, 1.0, count).unwrap()
    }

    fn run(u: &ScalarField, q: usize) -> QpshVerdict {
        let n = u.grid().dim_complex();
        let opts = BallOptions::for_dim(n);
        let slices = default_slices(u.grid(), q, &opts);
        classical_qpsh_oracle(u, q, &slices, &canonical_pool(n), opts.balls_per_slice).unwrap()
    }

    #[test]
    fn pluriharmonic_passes() {
        let g = grid(2, 9);
        let u = sample(|x| x[0], &g).unwrap();
        assert!(run(&u, 0).passed());
    }

    #[test]
    fn concave_fails_at_zero_passes_at_one() {
        let g = grid(2, 9);
        let u = sample(|x| -(x[0] * x[0] + x[2] * x[2]), &g).unwrap();
        let v = run(&u, 0);
        assert_eq!(v.status, Status::Fail);
        let Some(Witness::Classical(w)) = &v.witness else { panic!() };
        assert!(replay_classical(&u, w).unwrap());
        assert!(run(&u, 1).passed());
    }

    #[test]
    fn min_of_pluriharmonic_is_one_psh() {
        let g = grid(2, 9);
        let u = sample(|x| -x[0].abs(), &g).unwrap();
        assert!(run(&u, 1).passed());
        assert_eq!(run(&u, 0).status, Status::Fail);
    }

    #[test]
    fn short_circuits() {
        let g = grid(1, 9);
        let u = sample(|x| -x[0] * x[0], &g).unwrap();
        assert!(run(&u, 1).passed());
        let ninf = ScalarField::constant(g, ExtReal::NegInf);
        assert!(run(&ninf, 0).passed());
    }

    #[test]
    fn ball_outside_grid_errors() {
        let g = grid(1, 9);
        let u = sample(|_| 0.0, &g).unwrap();
        let s = SliceSpec::new(vec![Complex64::new(0.9, 0.0)], vec![vec![Complex64::new(1.0, 0.0)]], 0.5);
        assert!(matches!(classical_qpsh_oracle(&u, 0, &[s], &canonical_pool(1), 1), Err(Error::OutOfRange(_))));
    }
}
