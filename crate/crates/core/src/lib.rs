//! P1 finite elements for the variable-exponent p(x)-Laplacian, with
//! quasi-norm error studies and empirical probes for the Orlicz-space
//! estimates behind them.

// comparisons are written `!(x > 0)` on purpose so NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod errors;
pub mod exponent;
pub mod fem;
pub mod geometry;
pub mod interp;
pub mod lpx;
pub mod mesh;
pub mod nfunction;
pub mod numeric;
pub mod probe;
pub mod quadrature;
pub mod scalar;

pub use errors::{Error, Result};
pub use exponent::{ExponentField, ExponentKind, ExponentSpec};
pub use geometry::{Domain, Triangle};
pub use nfunction::{PhiFamily, PowerNFunction, Tensor, Variant};
pub use scalar::{Point, Real};

pub type Exponent = ExponentField<f64>;
pub type Exponent32 = ExponentField<f32>;
pub type Phi = PhiFamily<f64>;
pub type Phi32 = PhiFamily<f32>;
pub type Mesh = mesh::Triangulation<f64>;
pub type Mesh32 = mesh::Triangulation<f32>;
pub type Space = fem::FeSpace<f64>;
pub type Space32 = fem::FeSpace<f32>;
pub type Solution = fem::Solution<f64>;
pub type Solution32 = fem::Solution<f32>;
pub type Report = convergence::ConvergenceReport;
