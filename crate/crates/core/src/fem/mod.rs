//! Conforming P1 discretization of `−div A(x,∇v) = f` with homogeneous
//! Dirichlet data, exact or frozen exponent, solved by damped Newton.

mod assembly;
mod field;
mod freeze;
mod newton;
mod space;
pub mod sparse;

pub use assembly::{inverse_estimate_check, Assembler};
pub use field::{AffineField, FieldFunction, FnField, SineProduct};
pub use freeze::{freeze, FrozenExponent};
pub use newton::{Load, Problem, Solution, SolveStats, SolverOptions};
pub use space::{CellGeometry, FeFunction, FeSpace};
