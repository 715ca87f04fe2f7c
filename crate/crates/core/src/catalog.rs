//! Built-in test functions on `C^n`, evaluated in real layout
//! `(x_1..x_n, y_1..y_n)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::complex_point;
use crate::hermitian::HermitianMatrix;
use crate::qpsh::PluriharmonicPoly;

pub type Function = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Closed sets whose characteristic function is in the catalog.
#[derive(Clone, Debug, PartialEq)]
pub enum SetShape {
    /// The single point `center`.
    Point,
    /// The closed ball `‖z - center‖ <= radius`.
    Ball { radius: f64 },
    /// The complex line `{z_n = center_n}`.
    ComplexLine,
}

impl SetShape {
    pub fn parse(name: &str, radius: Option<f64>) -> Result<Self> {
        match name {
            "point" => Ok(SetShape::Point),
            "ball" => Ok(SetShape::Ball { radius: radius.unwrap_or(0.5) }),
            "complex_line" => Ok(SetShape::ComplexLine),
            _ => Err(Error::Config { key: "set".into(), message: format!("unknown set `{name}`") }),
        }
    }
}

/// Parameters a catalog function may take.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    /// Complex dimension.
    pub n: usize,
    /// Holomorphic part for `pluriharmonic`.
    pub poly: Option<PluriharmonicPoly>,
    /// Set for `char`.
    pub set: Option<SetShape>,
    /// Centre of the set for `char`; the origin when `None`.
    pub center: Option<Vec<Complex64>>,
    /// Membership slack for `char`, in absolute distance.
    pub width: f64,
}

impl Params {
    pub fn dim(n: usize) -> Self {
        Params { n, poly: None, set: None, center: None, width: 1e-9 }
    }
}

pub struct Entry {
    pub id: &'static str,
    pub params: &'static str,
    pub formula: &'static str,
    /// At least `C^2` everywhere it is finite.
    pub smooth: bool,
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<14} {:<34} {}", self.id, self.params, self.formula)
    }
}

const ENTRIES: &[Entry] = &[
    Entry {
        id: "char",
        params: "n, set = point|ball|complex_line, radius, center",
        formula: "0 on the set, -inf elsewhere",
        smooth: false,
    },
    Entry { id: "im4", params: "n", formula: "Im(z_1)^4", smooth: true },
    Entry { id: "im4_abs", params: "n", formula: "Im(z_1)^4 + |Im(z_1)|", smooth: false },
    Entry { id: "max_atom", params: "n", formula: "max(Re z_1, Re(z_1^2))", smooth: false },
    Entry { id: "neg_abs_re", params: "n", formula: "-|Re z_1|", smooth: false },
    Entry { id: "neg_normsq", params: "n", formula: "-|z|^2", smooth: true },
    Entry { id: "normsq", params: "n", formula: "|z|^2", smooth: true },
    Entry { id: "pluriharmonic", params: "n, poly", formula: "Re p(z), p holomorphic of degree <= 3", smooth: true },
    Entry { id: "saddle_q1", params: "n >= 2", formula: "|z_1|^2 - |z_2|^2", smooth: true },
];

/// All entries, sorted by id.
pub fn entries() -> &'static [Entry] {
    ENTRIES
}

pub fn entry(id: &str) -> Result<&'static Entry> {
    ENTRIES
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::Config { key: "function".into(), message: format!("unknown catalog id `{id}`") })
}

/// One line per entry: id, parameters, closed form.
pub fn catalog_list() -> String {
    let mut s = String::new();
    for e in ENTRIES {
        s.push_str(&e.to_string());
        s.push('\n');
    }
    s
}

fn normsq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// The function `id` with parameters `p`.
pub fn build(id: &str, p: &Params) -> Result<Function> {
    entry(id)?;
    let n = p.n;
    if n == 0 {
        return Err(Error::Config { key: "n".into(), message: "dimension must be at least 1".into() });
    }
    let f: Function = match id {
        "char" => {
            let set = p.set.clone().ok_or_else(|| Error::Config { key: "set".into(), message: "missing".into() })?;
            let center = p.center.clone().unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); n]);
            if center.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: center.len() });
            }
            let width = p.width;
            Arc::new(move |x: &[f64]| {
                let z = complex_point(x);
                let inside = match set {
                    SetShape::Point => z.iter().zip(&center).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() <= width,
                    SetShape::Ball { radius } => {
                        z.iter().zip(&center).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() <= radius + width
                    }
                    SetShape::ComplexLine => (z[n - 1] - center[n - 1]).norm() <= width,
                };
                if inside {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            })
        }
        "im4" => Arc::new(move |x: &[f64]| x[n].powi(4)),
        "im4_abs" => Arc::new(move |x: &[f64]| x[n].powi(4) + x[n].abs()),
        "max_atom" => Arc::new(move |x: &[f64]| x[0].max(x[0] * x[0] - x[n] * x[n])),
        "neg_abs_re" => Arc::new(|x: &[f64]| -x[0].abs()),
        "neg_normsq" => Arc::new(|x: &[f64]| -normsq(x)),
        "normsq" => Arc::new(|x: &[f64]| normsq(x)),
        "pluriharmonic" => {
            let poly = p.poly.clone().ok_or_else(|| Error::Config { key: "poly".into(), message: "missing".into() })?;
            if poly.n() != n {
                return Err(Error::DimensionMismatch { expected: n, got: poly.n() });
            }
            Arc::new(move |x: &[f64]| poly.eval(&complex_point(x)))
        }
        "saddle_q1" => {
            if n < 2 {
                return Err(Error::Config { key: "n".into(), message: "saddle_q1 needs n >= 2".into() });
            }
            Arc::new(move |x: &[f64]| x[0] * x[0] + x[n] * x[n] - x[1] * x[1] - x[n + 1] * x[n + 1])
        }
        _ => unreachable!(),
    };
    Ok(f)
}

/// Closed-form complex Hessian of the smooth entries at `z`.
pub fn exact_complex_hessian(id: &str, n: usize, z: &[Complex64]) -> Option<HermitianMatrix> {
    let mut d = vec![0.0; n];
    match id {
        "normsq" => d.fill(1.0),
        "neg_normsq" => d.fill(-1.0),
        "saddle_q1" if n >= 2 => {
            d[0] = 1.0;
            d[1] = -1.0;
        }
        // ¼ Δ y⁴ = 3 y²
        "im4" => d[0] = 3.0 * z[0].im * z[0].im,
        "pluriharmonic" => {}
        _ => return None,
    }
    Some(HermitianMatrix::diag(&d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_unique() {
        let ids: Vec<&str> = ENTRIES.iter().map(|e| e.id).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(ids, sorted);
        assert!(catalog_list().contains("im4_abs"));
    }

    #[test]
    fn spot_values() {
        let one = Params::dim(1);
        let f = build("im4_abs", &one).unwrap();
        assert_eq!(f(&[0.0, 1.0]), 2.0);
        assert_eq!(build("im4", &one).unwrap()(&[3.0, -2.0]), 16.0);
        let two = Params::dim(2);
        assert_eq!(build("saddle_q1", &two).unwrap()(&[1.0, 2.0, 0.0, 1.0]), 1.0 - 5.0);
        let mut line = Params::dim(2);
        line.set = Some(SetShape::ComplexLine);
        let c = build("char", &line).unwrap();
        assert_eq!(c(&[0.3, 0.0, 0.5, 0.0]), 0.0);
        assert_eq!(c(&[0.3, 0.1, 0.5, 0.0]), f64::NEG_INFINITY);
        assert!(build("saddle_q1", &one).is_err());
        assert!(build("nope", &one).is_err());
    }
}
