//! Linear discrete-velocity kinetic models on star networks.
//!
//! The crate covers Gauss–Hermite velocity discretisations, the moment
//! systems they induce, junction coupling conditions, a stiff relaxation
//! solver, the boundary-layer asymptotic expansions for small Knudsen
//! number, and the error studies comparing the two.

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod asymptotic;
pub mod coupling;
pub mod error;
pub mod field;
pub mod hermite;
pub mod linalg;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use field::Field;
pub use hermite::QuadratureSet;
pub use nalgebra::{DMatrix, DVector};
pub use spectral::{Collision, MomentSystem};
