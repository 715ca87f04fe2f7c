//! Sup-convolutions, complex-Hessian inertia and q-plurisubharmonicity
//! checks for functions sampled on boxes in `C^n`.

pub mod catalog;
pub mod error;
pub mod fields;
pub mod hermitian;
pub mod hessian;
pub mod io;
pub mod qpsh;
pub mod scenario;
pub mod setgeom;
pub mod supconv;

pub use error::{Error, Result};
pub use fields::{BoxGrid, ExtReal, ScalarField, SliceSpec};
pub use hermitian::{HermitianMatrix, InertiaSignature};
