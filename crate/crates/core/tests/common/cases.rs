//! The curated function suite with the minimal q computed by hand.

use mqpsh::catalog::{self, Params, SetShape};
use mqpsh::fields::{sample, BoxGrid, ScalarField};
use mqpsh::qpsh::{Monomial, PluriharmonicPoly};
use num_complex::Complex64;

pub struct Case {
    pub name: &'static str,
    pub n: usize,
    pub min_q: usize,
    pub smooth: bool,
    pub f: catalog::Function,
}

impl Case {
    pub fn grid(&self) -> BoxGrid {
        if self.n == 1 {
            BoxGrid::cube(1, -1.0, 1.0, 41).unwrap()
        } else {
            BoxGrid::cube(2, -1.0, 1.0, 17).unwrap()
        }
    }

    pub fn field(&self) -> ScalarField {
        sample(|x| (self.f)(x), &self.grid()).unwrap()
    }
}

fn poly(n: usize, exponents: Vec<u8>) -> PluriharmonicPoly {
    PluriharmonicPoly::new(n, 1.0, vec![Monomial { coeff: Complex64::new(1.0, 0.0), exponents }]).unwrap()
}

fn case(name: &'static str, id: &str, p: Params, min_q: usize) -> Case {
    let n = p.n;
    Case { name, n, min_q, smooth: catalog::entry(id).unwrap().smooth, f: catalog::build(id, &p).unwrap() }
}

pub fn curated() -> Vec<Case> {
    let d = Params::dim;
    let mut cube = d(1);
    cube.poly = Some(poly(1, vec![3]));
    let mut prod = d(2);
    prod.poly = Some(poly(2, vec![1, 1]));
    let mut line = d(2);
    line.set = Some(SetShape::ComplexLine);
    vec![
        case("normsq_1", "normsq", d(1), 0),
        case("neg_normsq_1", "neg_normsq", d(1), 1),
        case("normsq_2", "normsq", d(2), 0),
        case("neg_normsq_2", "neg_normsq", d(2), 2),
        case("saddle_q1", "saddle_q1", d(2), 1),
        case("re_z_cubed", "pluriharmonic", cube, 0),
        case("re_z1_z2", "pluriharmonic", prod, 0),
        case("im4", "im4", d(1), 0),
        case("im4_abs", "im4_abs", d(1), 0),
        case("neg_abs_re", "neg_abs_re", d(2), 1),
        case("max_atom", "max_atom", d(2), 0),
        case("char_line", "char", line, 1),
    ]
}
