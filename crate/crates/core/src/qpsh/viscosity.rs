//! Probe-based falsifier for the viscosity inequality `⊖(H^C φ) <= q`.
//!
//! A probe is `φ(z) = P(z - c) + sum_j μ_j |f_j^T (z - c)|²` with `P`
//! pluriharmonic, `F = [f_1..f_n]` unitary and `c` a grid node, so that
//! `H^C φ = F diag(μ) F*` exactly. Each probe is slid over a lattice of
//! centres; inside a cubic window around the centre, a strict interior
//! maximum of `u - φ` is a touching point.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use super::poly::{quadratic_pool, PluriharmonicPoly};
use super::{hermitian_form, trivial_verdict, unitary_frames, QpshVerdict, Status, Witness};
use crate::error::{Error, Result};
use crate::fields::{complex_point, real_point, BoxGrid, ExtReal, ScalarField};
use crate::hermitian::{HermitianMatrix, InertiaSignature};

/// A window maximum must beat the window boundary by this much.
pub const STRICT_TOL: f64 = 1e-9;

/// Test-function dictionary and the lattice it is slid over.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeFamily {
    /// Curvatures of the concave directions (`μ = -β`).
    pub betas: Vec<f64>,
    /// Curvatures of the convex directions (`μ = +δ`).
    pub deltas: Vec<f64>,
    pub poly_pool: Vec<PluriharmonicPoly>,
    /// Unitary frames; the first `c` columns are the concave directions.
    pub frames: Vec<Vec<Vec<Complex64>>>,
    /// Numbers of concave directions to try; all of `0..=n` when `None`.
    pub concave_counts: Option<Vec<usize>>,
    /// Half-width of the search window, in nodes.
    pub window_radius: usize,
    /// Spacing of probe centres, in nodes.
    pub center_stride: usize,
    /// Only windows lying inside the mask are used.
    pub domain: Option<Vec<bool>>,
}

impl ProbeFamily {
    /// β ∈ {0.01, 0.1, 0.5}, δ ∈ {2, 10}, pluriharmonic parts `0` and the
    /// quadratic canonical pool, the frames of [`unitary_frames`]. Window
    /// radius 3 and stride 1 for `n = 1`, radius 2 and stride 2 otherwise.
    pub fn default_for(n: usize) -> Self {
        let mut poly_pool = vec![PluriharmonicPoly::zero(n)];
        poly_pool.extend(quadratic_pool(n));
        let (window_radius, center_stride) = if n == 1 { (3, 1) } else { (2, 2) };
        ProbeFamily {
            betas: vec![0.01, 0.1, 0.5],
            deltas: vec![2.0, 10.0],
            poly_pool,
            frames: unitary_frames(n),
            concave_counts: None,
            window_radius,
            center_stride,
            domain: None,
        }
    }

    pub fn with_domain(mut self, mask: Vec<bool>) -> Self {
        self.domain = Some(mask);
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.betas.iter().chain(&self.deltas).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Precondition("probe curvatures must be positive".into()));
        }
        if self.window_radius == 0 || self.center_stride == 0 {
            return Err(Error::Precondition("window radius and centre stride must be positive".into()));
        }
        for f in &self.frames {
            if f.len() != n || f.iter().any(|v| v.len() != n) {
                return Err(Error::DimensionMismatch { expected: n, got: f.len() });
            }
        }
        if let Some(p) = self.poly_pool.iter().find(|p| p.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: p.n() });
        }
        Ok(())
    }

    /// All probes, with duplicate quadratic parts removed.
    pub fn probes(&self, n: usize) -> Vec<Probe> {
        let counts: Vec<usize> = self.concave_counts.clone().unwrap_or_else(|| (0..=n).collect());
        let mut shapes: Vec<(Vec<Vec<Complex64>>, Vec<f64>, usize, f64, f64)> = Vec::new();
        let mut seen: Vec<HermitianMatrix> = Vec::new();
        for &c in counts.iter().filter(|&&c| c <= n) {
            for frame in &self.frames {
                for &beta in &self.betas {
                    for &delta in &self.deltas {
                        let mu: Vec<f64> = (0..n).map(|j| if j < c { -beta } else { delta }).collect();
                        let h = frame_hessian(frame, &mu);
                        if seen.iter().any(|s| (s - &h).frobenius_norm() < 1e-12) {
                            continue;
                        }
                        seen.push(h);
                        shapes.push((frame.clone(), mu, c, beta, delta));
                    }
                }
            }
        }
        let mut out = Vec::new();
        for (frame, mu, concave, beta, delta) in shapes {
            for poly in &self.poly_pool {
                out.push(Probe { frame: frame.clone(), mu: mu.clone(), concave, beta, delta, poly: poly.clone() });
            }
        }
        out
    }
}

fn frame_hessian(frame: &[Vec<Complex64>], mu: &[f64]) -> HermitianMatrix {
    let n = mu.len();
    let mut h = HermitianMatrix::zeros(n);
    for (f, &m) in frame.iter().zip(mu) {
        h = &h + &(m * &HermitianMatrix::outer(f));
    }
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub frame: Vec<Vec<Complex64>>,
    pub mu: Vec<f64>,
    pub concave: usize,
    pub beta: f64,
    pub delta: f64,
    pub poly: PluriharmonicPoly,
}

impl Probe {
    /// `φ` at displacement `w = z - c`.
    pub fn eval(&self, w: &[Complex64]) -> f64 {
        self.poly.eval(w) + hermitian_form(&self.hessian(), w)
    }

    /// `H^C φ = F diag(μ) F*`.
    pub fn hessian(&self) -> HermitianMatrix {
        frame_hessian(&self.frame, &self.mu)
    }

    pub fn inertia(&self) -> InertiaSignature {
        let h = self.hessian();
        h.inertia(h.default_tol())
    }
}

/// Closed-form complex Hessian of a probe.
pub fn probe_hessian(p: &Probe) -> HermitianMatrix {
    p.hessian()
}

/// A strict window maximum of `u - φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Touch {
    pub probe_index: usize,
    pub center: usize,
    pub node: usize,
    /// Margin by which the maximum beats the window boundary.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeWitness {
    pub probe: Probe,
    pub center: usize,
    pub center_coord: Vec<f64>,
    pub argmax_node: usize,
    pub argmax_coord: Vec<f64>,
    pub window_radius: usize,
    pub value: f64,
    pub boundary_max: ExtReal,
    pub inertia: InertiaSignature,
}

impl fmt::Display for ProbeWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "checker = \"viscosity\"")?;
        writeln!(f, "center = {:?}", self.center_coord)?;
        writeln!(f, "argmax = {:?}", self.argmax_coord)?;
        writeln!(f, "argmax_node = {}", self.argmax_node)?;
        writeln!(f, "window_radius = {}", self.window_radius)?;
        let frame: Vec<Vec<f64>> = self.probe.frame.iter().map(|v| real_point(v)).collect();
        writeln!(f, "frame = {frame:?}")?;
        writeln!(f, "mu = {:?}", self.probe.mu)?;
        writeln!(f, "poly = \"{}\"", self.probe.poly)?;
        writeln!(f, "value = {}", self.value)?;
        writeln!(f, "boundary_max = \"{}\"", self.boundary_max)?;
        write!(
            f,
            "inertia = {{ negative = {}, zero = {}, positive = {} }}",
            self.inertia.negative, self.inertia.zero, self.inertia.positive
        )
    }
}

/// Offsets of the window `[-r, r]^d` in node order.
struct Window {
    offsets: Vec<Vec<i64>>,
    linear: Vec<i64>,
    on_boundary: Vec<bool>,
}

fn window(grid: &BoxGrid, r: usize) -> Window {
    let d = grid.real_dim();
    let r = r as i64;
    let mut w = Window { offsets: Vec::new(), linear: Vec::new(), on_boundary: Vec::new() };
    let mut a = vec![-r; d];
    loop {
        w.linear.push(a.iter().enumerate().map(|(ax, &o)| o * grid.stride(ax) as i64).sum());
        w.on_boundary.push(a.iter().any(|o| o.abs() == r));
        w.offsets.push(a.clone());
        let mut t = d;
        loop {
            if t == 0 {
                return w;
            }
            t -= 1;
            if a[t] < r {
                a[t] += 1;
                break;
            }
            a[t] = -r;
        }
    }
}

fn centers(grid: &BoxGrid, r: usize, stride: usize) -> Vec<usize> {
    let d = grid.real_dim();
    if (0..d).any(|a| grid.counts()[a] <= 2 * r) {
        return Vec::new();
    }
    let lo = vec![r; d];
    let hi: Vec<usize> = grid.counts().iter().map(|c| c - 1 - r).collect();
    grid.index_box(&lo, &hi)
        .into_iter()
        .filter(|&i| grid.multi_index(i).iter().all(|&m| (m - r).is_multiple_of(stride)))
        .collect()
}

struct WindowMax {
    offset: usize,
    value: f64,
    boundary: ExtReal,
}

/// Strict interior maximum of `u - φ` over the window at `center`.
fn window_max(u: &ScalarField, w: &Window, phi: &[f64], center: usize) -> Option<WindowMax> {
    let mut best = ExtReal::NegInf;
    let mut best_at = 0;
    let mut boundary = ExtReal::NegInf;
    for k in 0..w.linear.len() {
        let node = (center as i64 + w.linear[k]) as usize;
        let v = u.get(node) + (-phi[k]);
        if w.on_boundary[k] {
            boundary = boundary.max(v);
        }
        if v > best {
            best = v;
            best_at = k;
        }
    }
    let value = best.finite()?;
    if w.on_boundary[best_at] {
        return None;
    }
    let strict = match boundary.finite() {
        Some(b) => value - b > STRICT_TOL + 1e-12 * value.abs(),
        None => true,
    };
    strict.then_some(WindowMax { offset: best_at, value, boundary })
}

/// Result of sliding every probe over every centre.
#[derive(Clone, Debug)]
pub struct ProbeScan {
    pub verdict: QpshVerdict,
    pub probes: Vec<Probe>,
    pub touches: Vec<Touch>,
}

struct Prepared {
    probes: Vec<Probe>,
    window: Window,
    centers: Vec<usize>,
    phis: Vec<Vec<f64>>,
    negatives: Vec<usize>,
}

fn prepare(u: &ScalarField, probes: &ProbeFamily) -> Prepared {
    let grid = u.grid();
    let n = grid.dim_complex();
    let list = probes.probes(n);
    let window = window(grid, probes.window_radius);
    let mut centers = centers(grid, probes.window_radius, probes.center_stride);
    if let Some(mask) = &probes.domain {
        centers.retain(|&c| window.linear.iter().all(|&o| mask[(c as i64 + o) as usize]));
    }
    let disps: Vec<Vec<Complex64>> = window
        .offsets
        .iter()
        .map(|o| {
            let x: Vec<f64> = o.iter().enumerate().map(|(a, &k)| k as f64 * grid.spacing()[a]).collect();
            complex_point(&x)
        })
        .collect();
    let phis = list.iter().map(|p| disps.iter().map(|w| p.eval(w)).collect()).collect();
    let negatives = list.iter().map(|p| p.inertia().negative).collect();
    Prepared { probes: list, window, centers, phis, negatives }
}

fn witness(u: &ScalarField, prep: &Prepared, pi: usize, center: usize, m: &WindowMax, r: usize) -> ProbeWitness {
    let node = (center as i64 + prep.window.linear[m.offset]) as usize;
    ProbeWitness {
        probe: prep.probes[pi].clone(),
        center,
        center_coord: u.grid().coord(center),
        argmax_node: node,
        argmax_coord: u.grid().coord(node),
        window_radius: r,
        value: m.value,
        boundary_max: m.boundary,
        inertia: prep.probes[pi].inertia(),
    }
}

/// Slides every probe of the family over the centre lattice; fails on the
/// first touch (in probe, then centre order) with `⊖(H^C φ) > q`.
pub fn viscosity_falsifier(u: &ScalarField, q: usize, probes: &ProbeFamily) -> QpshVerdict {
    if let Some(v) = trivial_verdict(u, q) {
        return v;
    }
    let n = u.grid().dim_complex();
    if let Err(e) = probes.validate(n) {
        return QpshVerdict::pass_with_note(format!("probe family rejected: {e}"));
    }
    let prep = prepare(u, probes);
    let candidates: Vec<usize> = (0..prep.probes.len()).filter(|&i| prep.negatives[i] > q).collect();
    let found = candidates.par_iter().find_map_first(|&pi| {
        prep.centers.iter().find_map(|&c| {
            window_max(u, &prep.window, &prep.phis[pi], c).map(|m| witness(u, &prep, pi, c, &m, probes.window_radius))
        })
    });
    let tests_run = candidates.len() * prep.centers.len();
    match found {
        Some(w) => QpshVerdict {
            status: Status::Fail,
            witness: Some(Witness::Viscosity(w)),
            tests_run,
            skipped: 0,
            note: None,
        },
        None => QpshVerdict { status: Status::Pass, witness: None, tests_run, skipped: 0, note: None },
    }
}

/// Like [`viscosity_falsifier`] but visits every probe and centre and
/// records all touches, including those allowed at level `q`.
pub fn viscosity_scan(u: &ScalarField, q: usize, probes: &ProbeFamily) -> Result<ProbeScan> {
    let n = u.grid().dim_complex();
    probes.validate(n)?;
    let prep = prepare(u, probes);
    if u.is_all_neg_inf() {
        return Ok(ProbeScan {
            verdict: QpshVerdict::pass_with_note("u is identically -inf"),
            probes: prep.probes,
            touches: Vec::new(),
        });
    }
    let per_probe: Vec<Vec<(Touch, WindowMax)>> = (0..prep.probes.len())
        .into_par_iter()
        .map(|pi| {
            prep.centers
                .iter()
                .filter_map(|&c| {
                    window_max(u, &prep.window, &prep.phis[pi], c).map(|m| {
                        let node = (c as i64 + prep.window.linear[m.offset]) as usize;
                        let margin = m.boundary.finite().map_or(f64::INFINITY, |b| m.value - b);
                        (Touch { probe_index: pi, center: c, node, margin }, m)
                    })
                })
                .collect()
        })
        .collect();
    let mut verdict = QpshVerdict {
        status: Status::Pass,
        witness: None,
        tests_run: prep.probes.len() * prep.centers.len(),
        skipped: 0,
        note: None,
    };
    if q >= n {
        verdict.note = Some("q >= n: every u.s.c. function qualifies".into());
    }
    let mut touches = Vec::new();
    for (t, m) in per_probe.into_iter().flatten() {
        if q < n && verdict.witness.is_none() && prep.negatives[t.probe_index] > q {
            verdict.status = Status::Fail;
            verdict.witness =
                Some(Witness::Viscosity(witness(u, &prep, t.probe_index, t.center, &m, probes.window_radius)));
        }
        touches.push(t);
    }
    Ok(ProbeScan { verdict, probes: prep.probes, touches })
}

/// Re-evaluates a witness: the window maximum must reappear at the same
/// node with `⊖(H^C φ) > q`.
pub fn replay_probe(u: &ScalarField, w: &ProbeWitness, q: usize) -> bool {
    let grid = u.grid();
    let win = window(grid, w.window_radius);
    let phi: Vec<f64> = win
        .offsets
        .iter()
        .map(|o| {
            let x: Vec<f64> = o.iter().enumerate().map(|(a, &k)| k as f64 * grid.spacing()[a]).collect();
            w.probe.eval(&complex_point(&x))
        })
        .collect();
    match window_max(u, &win, &phi, w.center) {
        Some(m) => {
            let node = (w.center as i64 + win.linear[m.offset]) as usize;
            node == w.argmax_node && w.probe.inertia().negative > q
        }
        None => false,
    }
}

#[derive(Clone, Debug)]
pub struct PositiveInertiaReport {
    pub touches: usize,
    /// Touches whose probe has fewer than `n - q` positive eigenvalues.
    pub violations: Vec<Touch>,
}

impl PositiveInertiaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For a strictly q-psh `u`, every touching probe must have
/// `⊕(H^C φ) >= n - q`.
pub fn strict_positive_inertia_check(u: &ScalarField, q: usize, probes: &ProbeFamily) -> Result<PositiveInertiaReport> {
    let n = u.grid().dim_complex();
    let scan = viscosity_scan(u, q, probes)?;
    let need = n.saturating_sub(q);
    let violations = scan
        .touches
        .iter()
        .filter(|t| scan.probes[t.probe_index].inertia().positive < need)
        .cloned()
        .collect();
    Ok(PositiveInertiaReport { touches: scan.touches.len(), violations })
}
