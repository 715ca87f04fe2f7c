//! Grid geometry and extended-real scalar fields.
//!
//! A [`BoxGrid`] discretizes a bounded box in `R^{2n} ~ C^n`. Real axes are
//! ordered `(x_1..x_n, y_1..y_n)` with `z_k = x_k + i y_k`, and nodes are
//! numbered row-major (the last axis varies fastest).
//!
//! Field values are [`ExtReal`]: a finite real or the sentinel `NegInf`.
//! `+inf` and NaN are unrepresentable.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative tolerance used to decide that a coordinate sits on a grid node.
const NODE_SNAP: f64 = 1e-9;

/// A real number or `-inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Converts a float, mapping `f64::NEG_INFINITY` to `NegInf`.
    ///
    /// Returns `None` for NaN and `+inf`.
    pub fn from_f64(x: f64) -> Option<ExtReal> {
        if x.is_finite() {
            Some(ExtReal::Finite(x))
        } else if x == f64::NEG_INFINITY {
            Some(ExtReal::NegInf)
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_neg_inf(self) -> bool {
        matches!(self, ExtReal::NegInf)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::NegInf => None,
        }
    }

    /// The value as a float, `-inf` for the sentinel.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::NegInf => f64::NEG_INFINITY,
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Scales by a non-negative constant. `0 * -inf` is `-inf`, following the
    /// convention that scaling keeps the `-inf` set of a function.
    pub fn scale(self, c: f64) -> ExtReal {
        debug_assert!(c >= 0.0);
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(c * x),
            ExtReal::NegInf => ExtReal::NegInf,
        }
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtReal::NegInf, ExtReal::NegInf) => Ordering::Equal,
            (ExtReal::NegInf, _) => Ordering::Less,
            (_, ExtReal::NegInf) => Ordering::Greater,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.total_cmp(b),
        }
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: f64) -> ExtReal {
        debug_assert!(rhs.is_finite());
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(x + rhs),
            ExtReal::NegInf => ExtReal::NegInf,
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::NegInf,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::NegInf => f.write_str("-inf"),
        }
    }
}

/// Splits real coordinates `(x_1..x_n, y_1..y_n)` into complex coordinates.
pub fn complex_point(x: &[f64]) -> Vec<Complex64> {
    let n = x.len() / 2;
    (0..n).map(|k| Complex64::new(x[k], x[n + k])).collect()
}

/// Inverse of [`complex_point`].
pub fn real_point(z: &[Complex64]) -> Vec<f64> {
    let mut x: Vec<f64> = z.iter().map(|c| c.re).collect();
    x.extend(z.iter().map(|c| c.im));
    x
}

/// A regular grid on a box in `R^{2n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxGrid {
    dim_complex: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    counts: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

impl BoxGrid {
    pub fn new(dim_complex: usize, lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let real_dim = 2 * dim_complex;
        if dim_complex == 0 {
            return Err(Error::InvalidGrid("complex dimension must be positive".into()));
        }
        for (name, len) in [("lo", lo.len()), ("hi", hi.len()), ("counts", counts.len())] {
            if len != real_dim {
                return Err(Error::InvalidGrid(format!(
                    "`{name}` has length {len}, expected {real_dim}"
                )));
            }
        }
        let mut spacing = Vec::with_capacity(real_dim);
        for i in 0..real_dim {
            if !(lo[i].is_finite() && hi[i].is_finite() && lo[i] < hi[i]) {
                return Err(Error::InvalidGrid(format!("axis {i}: need lo < hi")));
            }
            if counts[i] < 2 {
                return Err(Error::InvalidGrid(format!("axis {i}: need at least 2 samples")));
            }
            spacing.push((hi[i] - lo[i]) / (counts[i] - 1) as f64);
        }
        let mut strides = vec![1; real_dim];
        for i in (0..real_dim.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * counts[i + 1];
        }
        Ok(BoxGrid { dim_complex, lo, hi, counts, spacing, strides })
    }

    /// Cube `[lo, hi]^{2n}` with `count` samples per axis.
    pub fn cube(dim_complex: usize, lo: f64, hi: f64, count: usize) -> Result<Self> {
        let d = 2 * dim_complex;
        Self::new(dim_complex, vec![lo; d], vec![hi; d], vec![count; d])
    }

    pub fn dim_complex(&self) -> usize {
        self.dim_complex
    }

    pub fn real_dim(&self) -> usize {
        2 * self.dim_complex
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.real_dim());
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, linear: usize) -> Vec<usize> {
        let mut out = vec![0; self.real_dim()];
        self.multi_index_into(linear, &mut out);
        out
    }

    pub fn multi_index_into(&self, mut linear: usize, out: &mut [usize]) {
        for (axis, stride) in self.strides.iter().enumerate() {
            out[axis] = linear / stride;
            linear %= stride;
        }
    }

    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.counts[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.spacing[axis]
        }
    }

    pub fn coord(&self, linear: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.real_dim()];
        self.coord_into(linear, &mut out);
        out
    }

    pub fn coord_into(&self, mut linear: usize, out: &mut [f64]) {
        for (axis, stride) in self.strides.iter().enumerate() {
            out[axis] = self.axis_coord(axis, linear / stride);
            linear %= stride;
        }
    }

    pub fn complex_coord(&self, linear: usize) -> Vec<Complex64> {
        complex_point(&self.coord(linear))
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// True when the node has full axis stencils (not on the box boundary).
    pub fn is_interior(&self, linear: usize) -> bool {
        let mut rem = linear;
        for (axis, stride) in self.strides.iter().enumerate() {
            let i = rem / stride;
            rem %= stride;
            if i == 0 || i + 1 == self.counts[axis] {
                return false;
            }
        }
        true
    }

    /// True when every index is at least `margin` away from both box faces.
    pub fn has_margin(&self, multi: &[usize], margin: usize) -> bool {
        multi
            .iter()
            .zip(&self.counts)
            .all(|(&i, &c)| i >= margin && i + margin < c)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.iter().enumerate().all(|(axis, &x)| {
            let tol = NODE_SNAP * self.spacing[axis];
            x >= self.lo[axis] - tol && x <= self.hi[axis] + tol
        })
    }

    /// Nearest node and whether the point coincides with it.
    pub fn nearest_node(&self, point: &[f64]) -> Option<(usize, bool)> {
        if !self.contains(point) {
            return None;
        }
        let mut linear = 0;
        let mut exact = true;
        for (axis, &x) in point.iter().enumerate() {
            let t = (x - self.lo[axis]) / self.spacing[axis];
            let i = t.round().clamp(0.0, (self.counts[axis] - 1) as f64);
            if (t - i).abs() > NODE_SNAP {
                exact = false;
            }
            linear += i as usize * self.strides[axis];
        }
        Some((linear, exact))
    }

    /// Axis neighbours of a node (up to `2 * real_dim`).
    pub fn axis_neighbors(&self, linear: usize) -> Vec<usize> {
        let multi = self.multi_index(linear);
        let mut out = Vec::with_capacity(2 * self.real_dim());
        for (axis, &i) in multi.iter().enumerate() {
            if i > 0 {
                out.push(linear - self.strides[axis]);
            }
            if i + 1 < self.counts[axis] {
                out.push(linear + self.strides[axis]);
            }
        }
        out
    }

    /// Node indices whose multi-index lies in the inclusive box `[lo, hi]`,
    /// in node order.
    pub fn index_box(&self, lo: &[usize], hi: &[usize]) -> Vec<usize> {
        let d = self.real_dim();
        let mut out = Vec::new();
        let mut cur = lo.to_vec();
        loop {
            out.push(self.linear_index(&cur));
            let mut axis = d;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if cur[axis] < hi[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = lo[axis];
            }
        }
    }
}

/// Grid-sampled function `U -> R ∪ {-inf}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: BoxGrid,
    values: Vec<ExtReal>,
    upper_bound: Option<f64>,
}

impl ScalarField {
    pub fn new(grid: BoxGrid, values: Vec<ExtReal>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(ScalarField { grid, values, upper_bound: None })
    }

    pub fn constant(grid: BoxGrid, value: ExtReal) -> Self {
        let values = vec![value; grid.len()];
        ScalarField { grid, values, upper_bound: None }
    }

    /// Declares an upper bound `M`; fails if some finite value exceeds it.
    pub fn with_upper_bound(mut self, bound: f64) -> Result<Self> {
        if let Some(v) = self.values.iter().filter_map(|v| v.finite()).find(|&v| v > bound) {
            return Err(Error::Precondition(format!("value {v} exceeds upper bound {bound}")));
        }
        self.upper_bound = Some(bound);
        Ok(self)
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn get(&self, linear: usize) -> ExtReal {
        self.values[linear]
    }

    pub fn upper_bound(&self) -> Option<f64> {
        self.upper_bound
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> ExtReal {
        self.values.iter().copied().max().unwrap_or(ExtReal::NegInf)
    }

    pub fn is_all_neg_inf(&self) -> bool {
        self.values.iter().all(|v| v.is_neg_inf())
    }

    /// Pointwise map; the result has no declared upper bound.
    pub fn map(&self, f: impl Fn(usize, ExtReal) -> ExtReal) -> ScalarField {
        let values = self.values.iter().enumerate().map(|(i, &v)| f(i, v)).collect();
        ScalarField { grid: self.grid.clone(), values, upper_bound: None }
    }

    /// Adds a finite function of the node coordinates.
    pub fn add_fn(&self, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let mut x = vec![0.0; self.grid.real_dim()];
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                self.grid.coord_into(i, &mut x);
                v + f(&x)
            })
            .collect();
        ScalarField { grid: self.grid.clone(), values, upper_bound: None }
    }

    pub fn into_values(self) -> Vec<ExtReal> {
        self.values
    }
}

/// Samples `f` at every node in node order.
///
/// `f` returns plain floats; `f64::NEG_INFINITY` becomes `NegInf`, and NaN or
/// `+inf` are rejected.
pub fn sample<F>(f: F, grid: &BoxGrid) -> Result<ScalarField>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| f(&grid.coord(i)))
        .collect();
    let values = values
        .into_iter()
        .enumerate()
        .map(|(node, value)| ExtReal::from_f64(value).ok_or(Error::RejectedValue { node, value }))
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(grid.clone(), values)
}

/// A complex affine slice `base + span_C(frame)` with a reference ball.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSpec {
    pub base: Vec<Complex64>,
    pub frame: Vec<Vec<Complex64>>,
    pub ball_radius: f64,
    /// Minimum number of nodes the discretized sphere must contain.
    pub boundary_samples: usize,
}

impl SliceSpec {
    pub fn new(base: Vec<Complex64>, frame: Vec<Vec<Complex64>>, ball_radius: f64) -> Self {
        SliceSpec { base, frame, ball_radius, boundary_samples: 4 }
    }

    /// Complex dimension of the slice.
    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.base.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.base.len() });
        }
        if self.frame.is_empty() || self.frame.len() > n {
            return Err(Error::Precondition(format!(
                "slice frame must have between 1 and {n} vectors"
            )));
        }
        if !(self.ball_radius > 0.0) {
            return Err(Error::Precondition("ball radius must be positive".into()));
        }
        for (j, a) in self.frame.iter().enumerate() {
            if a.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: a.len() });
            }
            for (k, b) in self.frame.iter().enumerate() {
                let dot: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let target = if j == k { 1.0 } else { 0.0 };
                if (dot - target).norm() > 1e-12 {
                    return Err(Error::Precondition(format!(
                        "slice frame is not orthonormal (<f{j}, f{k}> = {dot})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parent-space displacement `sum_j w_j f_j` for slice coordinates in
    /// real layout `(Re w_1..Re w_m, Im w_1..Im w_m)`.
    pub fn displacement(&self, w_real: &[f64]) -> Vec<Complex64> {
        let m = self.dim();
        let n = self.base.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..m {
            let w = Complex64::new(w_real[j], w_real[m + j]);
            for (o, f) in out.iter_mut().zip(&self.frame[j]) {
                *o += w * f;
            }
        }
        out
    }
}

/// A field sampled on a slice, in slice coordinates centred at the base.
#[derive(Clone, Debug)]
pub struct SliceField {
    pub field: ScalarField,
    /// Parent node used for each slice node.
    pub parent_nodes: Vec<usize>,
    /// Set when some slice node did not coincide with a parent node.
    pub approximate: bool,
}

/// Picks a slice lattice spacing whose unit steps land on parent nodes, if
/// one exists among a few candidates.
pub(crate) fn slice_spacing(grid: &BoxGrid, slice: &SliceSpec) -> (f64, bool) {
    let h = grid.min_spacing();
    let n = grid.dim_complex();
    for s in [h, h * std::f64::consts::SQRT_2, 2.0 * h] {
        let aligned = slice.frame.iter().all(|f| {
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)].iter().all(|unit| {
                (0..n).all(|k| {
                    let d = f[k] * unit * s;
                    let rx = d.re / grid.spacing()[k];
                    let ry = d.im / grid.spacing()[n + k];
                    (rx - rx.round()).abs() < NODE_SNAP && (ry - ry.round()).abs() < NODE_SNAP
                })
            })
        });
        if aligned {
            return (s, true);
        }
    }
    (h, false)
}

/// Samples `field` on a cube of half-width `slice.ball_radius` in the slice
/// coordinates, centred at `slice.base`.
///
/// Nodes are looked up exactly when the slice lattice aligns with the parent
/// grid, otherwise by nearest node and the result is flagged approximate.
pub fn restrict_to_slice(field: &ScalarField, slice: &SliceSpec) -> Result<SliceField> {
    let grid = field.grid();
    slice.validate(grid.dim_complex())?;
    let (s, aligned) = slice_spacing(grid, slice);
    let half = (slice.ball_radius / s + NODE_SNAP).floor() as usize;
    if half == 0 {
        return Err(Error::OutOfRange(format!(
            "slice radius {} is below the lattice spacing {s}",
            slice.ball_radius
        )));
    }
    let m = slice.dim();
    let extent = half as f64 * s;
    let sub = BoxGrid::new(m, vec![-extent; 2 * m], vec![extent; 2 * m], vec![2 * half + 1; 2 * m])?;
    let mut approximate = !aligned;
    let mut values = Vec::with_capacity(sub.len());
    let mut parent_nodes = Vec::with_capacity(sub.len());
    let mut w = vec![0.0; 2 * m];
    for i in 0..sub.len() {
        sub.coord_into(i, &mut w);
        let disp = slice.displacement(&w);
        let z: Vec<Complex64> = slice.base.iter().zip(&disp).map(|(b, d)| b + d).collect();
        let (node, exact) = grid.nearest_node(&real_point(&z)).ok_or_else(|| {
            Error::OutOfRange(format!("slice point {z:?} lies outside the parent box"))
        })?;
        approximate |= !exact;
        values.push(field.get(node));
        parent_nodes.push(node);
    }
    Ok(SliceField { field: ScalarField::new(sub, values)?, parent_nodes, approximate })
}

/// Pointwise supremum followed by the one-ring upper regularization
/// (max over each node and its axis neighbours).
pub fn usc_sup_star(fields: &[ScalarField]) -> Result<ScalarField> {
    let first = fields.first().ok_or_else(|| Error::Empty("no fields to take the sup of".into()))?;
    let grid = first.grid().clone();
    for f in &fields[1..] {
        if f.grid() != &grid {
            return Err(Error::Precondition("fields live on different grids".into()));
        }
    }
    let sup: Vec<ExtReal> = (0..grid.len())
        .map(|i| fields.iter().map(|f| f.get(i)).max().unwrap_or(ExtReal::NegInf))
        .collect();
    let values: Vec<ExtReal> = (0..grid.len())
        .map(|i| {
            grid.axis_neighbors(i)
                .into_iter()
                .map(|j| sup[j])
                .fold(sup[i], ExtReal::max)
        })
        .collect();
    let bound = values.iter().filter_map(|v| v.finite()).fold(None, |acc: Option<f64>, v| {
        Some(acc.map_or(v, |a| a.max(v)))
    });
    let out = ScalarField::new(grid, values)?;
    match bound {
        Some(m) => out.with_upper_bound(m),
        None => Ok(out),
    }
}
