use crate::errors::Result;
use crate::exponent::ExponentField;
use crate::mesh::Triangulation;
use crate::scalar::{Point, Real};

/// The cellwise constant exponent `p_T = Σ_K p(x_K) χ_K` with
/// `x_K = argmin_K p`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenExponent<T: Real> {
    values: Vec<T>,
    argmin: Vec<Point<T>>,
}

impl<T: Real> FrozenExponent<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> T {
        self.values[cell]
    }

    pub fn argmin(&self, cell: usize) -> Point<T> {
        self.argmin[cell]
    }

    pub fn p_minus(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn p_plus(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }
}

pub fn freeze<T: Real>(
    mesh: &Triangulation<T>,
    p: &ExponentField<T>,
    lattice_order: usize,
) -> Result<FrozenExponent<T>> {
    let mut values = Vec::with_capacity(mesh.num_cells());
    let mut argmin = Vec::with_capacity(mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let r = p.range_on_cell(&mesh.triangle(k), lattice_order)?;
        values.push(r.p_min);
        argmin.push(r.argmin);
    }
    Ok(FrozenExponent { values, argmin })
}
