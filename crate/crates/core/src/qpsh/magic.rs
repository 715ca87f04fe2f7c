//! Checks that `[u + g]^Φ - h` stays q-psh on the proper interior of the
//! envelope when `H^C g ⪰ A ⪰ H^C h`.

use super::classical::{classical_qpsh_oracle_with, default_slices, BallOptions, ClassicalOptions};
use super::poly::canonical_pool;
use super::viscosity::{viscosity_falsifier, ProbeFamily};
use super::{hermitian_form, QpshVerdict};
use crate::error::{Error, Result};
use crate::fields::{complex_point, ScalarField};
use crate::hermitian::{loewner_geq, HermitianMatrix};
use crate::supconv::{moreau_envelope_fast, sup_convolve_bruteforce, Kernel, KernelKind};

/// `y ↦ Re sum_{k,l} y_k G_kl conj(y_l)`, with complex Hessian `G`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub matrix: HermitianMatrix,
}

impl QuadraticForm {
    pub fn new(matrix: HermitianMatrix) -> Self {
        QuadraticForm { matrix }
    }

    pub fn zero(n: usize) -> Self {
        QuadraticForm { matrix: HermitianMatrix::zeros(n) }
    }

    /// Value at a point in real layout.
    pub fn value(&self, x: &[f64]) -> f64 {
        hermitian_form(&self.matrix, &complex_point(x))
    }
}

#[derive(Clone, Debug)]
pub struct MagicReport {
    pub q: usize,
    /// Number of nodes in the proper interior `W`.
    pub w_size: usize,
    /// `F = [u + g]^Φ - h` on the whole grid.
    pub field: ScalarField,
    pub w_mask: Vec<bool>,
    pub classical: Option<QpshVerdict>,
    pub viscosity: Option<QpshVerdict>,
    /// For `g = h`: `F` is finite on all of `W`.
    pub finite_on_w: Option<bool>,
    pub note: Option<String>,
}

impl MagicReport {
    pub fn passed(&self) -> bool {
        self.classical.as_ref().is_none_or(QpshVerdict::passed)
            && self.viscosity.as_ref().is_none_or(QpshVerdict::passed)
            && self.finite_on_w != Some(false)
    }
}

/// Computes `F` on `W` and runs the classical oracle and the falsifier on it
/// at level `q`. An empty `W` is reported in `note` and does not fail.
#[allow(clippy::too_many_arguments)]
pub fn magic_property_harness(
    u: &ScalarField,
    q: usize,
    a: &HermitianMatrix,
    g: &QuadraticForm,
    h: &QuadraticForm,
    kernel: &Kernel,
    balls: &BallOptions,
    probes: &ProbeFamily,
) -> Result<MagicReport> {
    let n = u.grid().dim_complex();
    for m in [a, &g.matrix, &h.matrix] {
        if m.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.n() });
        }
    }
    if !loewner_geq(&g.matrix, a, a.default_tol())? || !loewner_geq(a, &h.matrix, a.default_tol())? {
        return Err(Error::Precondition("need H^C g ⪰ A ⪰ H^C h".into()));
    }
    if kernel.semiconvex_delta().is_none() {
        return Err(Error::Precondition("kernel has no known semiconvexity constant".into()));
    }
    let shifted = u.add_fn(|x| g.value(x));
    let env = match kernel.kind() {
        KernelKind::Quadratic { theta } => moreau_envelope_fast(&shifted, *theta)?,
        _ => sup_convolve_bruteforce(&shifted, kernel, u.grid())?,
    };
    let field = env.values.add_fn(|x| -h.value(x));
    let w_mask = env.proper_interior_mask.clone();
    let w_size = env.proper_count();
    let same = g == h;
    let mut report =
        MagicReport { q, w_size, field, w_mask, classical: None, viscosity: None, finite_on_w: None, note: None };
    if u.is_all_neg_inf() {
        report.note = Some("u is identically -inf, so F is too".into());
        return Ok(report);
    }
    if w_size == 0 {
        report.note = Some("proper interior is empty".into());
        return Ok(report);
    }
    if same {
        let finite = (0..report.field.len()).all(|i| !report.w_mask[i] || report.field.get(i).is_finite());
        report.finite_on_w = Some(finite);
    }
    let slices = default_slices(u.grid(), q, balls);
    let copts = ClassicalOptions::new(balls.balls_per_slice).with_domain(report.w_mask.clone());
    report.classical = Some(classical_qpsh_oracle_with(&report.field, q, &slices, &canonical_pool(n), &copts)?);
    let fam = probes.clone().with_domain(report.w_mask.clone());
    report.viscosity = Some(viscosity_falsifier(&report.field, q, &fam));
    Ok(report)
}
