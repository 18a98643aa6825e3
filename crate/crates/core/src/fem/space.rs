use std::sync::Arc;

use crate::errors::{Error, Result};
use crate::mesh::Triangulation;
use crate::nfunction::Tensor;
use crate::scalar::{Point, Real};

use super::sparse::CsrMatrix;

/// Area and barycentric gradients of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry<T: Real> {
    pub area: T,
    pub grads: [[T; 2]; 3],
}

const NONE: usize = usize::MAX;

/// Continuous P1 Lagrange space with `N` components on a triangulation.
///
/// Global dof `v·N + c` is component `c` at vertex `v`. Free dofs are
/// those at interior vertices, numbered in vertex order.
#[derive(Debug)]
pub struct FeSpace<T: Real> {
    mesh: Arc<Triangulation<T>>,
    components: usize,
    geometry: Vec<CellGeometry<T>>,
    free_vertex: Vec<usize>,
    free_vertices: Vec<usize>,
    pattern: Vec<Vec<usize>>,
}

impl<T: Real> FeSpace<T> {
    pub fn new(mesh: Arc<Triangulation<T>>, components: usize) -> Result<Arc<Self>> {
        if components == 0 {
            return Err(Error::Argument("need at least one component".into()));
        }
        let two = T::lit(2.0);
        let geometry = mesh
            .cells()
            .iter()
            .enumerate()
            .map(|(k, &[a, b, c])| {
                let [pa, pb, pc] = [mesh.vertices()[a], mesh.vertices()[b], mesh.vertices()[c]];
                let area = mesh.triangle(k).area();
                let s = two * area;
                CellGeometry {
                    area,
                    grads: [
                        [(pb[1] - pc[1]) / s, (pc[0] - pb[0]) / s],
                        [(pc[1] - pa[1]) / s, (pa[0] - pc[0]) / s],
                        [(pa[1] - pb[1]) / s, (pb[0] - pa[0]) / s],
                    ],
                }
            })
            .collect();
        let mut free_vertex = vec![NONE; mesh.num_vertices()];
        let mut free_vertices = Vec::new();
        for (v, slot) in free_vertex.iter_mut().enumerate() {
            if !mesh.is_boundary(v) {
                *slot = free_vertices.len();
                free_vertices.push(v);
            }
        }
        let mut pattern = Vec::with_capacity(free_vertices.len() * components);
        for &v in &free_vertices {
            let mut nbrs: Vec<usize> = mesh
                .vertex_cells(v)
                .iter()
                .flat_map(|&k| mesh.cells()[k])
                .filter_map(|w| (free_vertex[w] != NONE).then_some(free_vertex[w]))
                .collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            let cols: Vec<usize> =
                nbrs.iter().flat_map(|&fw| (0..components).map(move |d| fw * components + d)).collect();
            for _ in 0..components {
                pattern.push(cols.clone());
            }
        }
        Ok(Arc::new(Self { mesh, components, geometry, free_vertex, free_vertices, pattern }))
    }

    /// Scalar space.
    pub fn scalar(mesh: Arc<Triangulation<T>>) -> Result<Arc<Self>> {
        Self::new(mesh, 1)
    }

    pub fn mesh(&self) -> &Arc<Triangulation<T>> {
        &self.mesh
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn num_dofs(&self) -> usize {
        self.components * self.mesh.num_vertices()
    }

    pub fn num_free(&self) -> usize {
        self.components * self.free_vertices.len()
    }

    pub fn geometry(&self, k: usize) -> &CellGeometry<T> {
        &self.geometry[k]
    }

    /// Free index of global dof `(v, c)`, if not Dirichlet.
    pub fn free_index(&self, v: usize, c: usize) -> Option<usize> {
        let f = self.free_vertex[v];
        (f != NONE).then(|| f * self.components + c)
    }

    /// Global dofs on the boundary.
    pub fn dirichlet_dofs(&self) -> Vec<usize> {
        (0..self.mesh.num_vertices())
            .filter(|&v| self.mesh.is_boundary(v))
            .flat_map(|v| (0..self.components).map(move |c| v * self.components + c))
            .collect()
    }

    /// Zero matrix over the free dofs with the P1 coupling pattern.
    pub fn matrix(&self) -> CsrMatrix<T> {
        CsrMatrix::from_pattern(&self.pattern)
    }
}

/// Nodal coefficient vector of a function in `V_h^N`.
#[derive(Debug, Clone)]
pub struct FeFunction<T: Real> {
    space: Arc<FeSpace<T>>,
    coeffs: Vec<T>,
}

impl<T: Real> PartialEq for FeFunction<T> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.space, &other.space) && self.coeffs == other.coeffs
    }
}

impl<T: Real> FeFunction<T> {
    pub fn zeros(space: &Arc<FeSpace<T>>) -> Self {
        Self { space: space.clone(), coeffs: vec![T::zero(); space.num_dofs()] }
    }

    pub fn from_coeffs(space: &Arc<FeSpace<T>>, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != space.num_dofs() {
            return Err(Error::Argument(format!("expected {} coefficients, got {}", space.num_dofs(), coeffs.len())));
        }
        Ok(Self { space: space.clone(), coeffs })
    }

    /// Zero-trace function from its free-dof values.
    pub fn from_free(space: &Arc<FeSpace<T>>, free: &[T]) -> Result<Self> {
        if free.len() != space.num_free() {
            return Err(Error::Argument(format!("expected {} free values, got {}", space.num_free(), free.len())));
        }
        let mut u = Self::zeros(space);
        let n = space.components;
        for (fv, &v) in space.free_vertices.iter().enumerate() {
            u.coeffs[v * n..(v + 1) * n].copy_from_slice(&free[fv * n..(fv + 1) * n]);
        }
        Ok(u)
    }

    /// Nodal interpolant of `f`.
    pub fn nodal(space: &Arc<FeSpace<T>>, f: impl Fn(&Point<T>) -> Vec<T>) -> Self {
        let coeffs = space.mesh.vertices().iter().flat_map(f).collect();
        Self { space: space.clone(), coeffs }
    }

    pub fn space(&self) -> &Arc<FeSpace<T>> {
        &self.space
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn free_values(&self) -> Vec<T> {
        let n = self.space.components;
        self.space.free_vertices.iter().flat_map(|&v| self.coeffs[v * n..(v + 1) * n].iter().copied()).collect()
    }

    /// Value at vertex `v`.
    pub fn at_vertex(&self, v: usize) -> &[T] {
        let n = self.space.components;
        &self.coeffs[v * n..(v + 1) * n]
    }

    pub fn is_zero_trace(&self) -> bool {
        self.space.dirichlet_dofs().iter().all(|&d| self.coeffs[d] == T::zero())
    }

    /// The constant gradient on cell `k` as an `N × 2` tensor.
    pub fn gradient(&self, k: usize) -> Tensor<T> {
        let n = self.space.components;
        let g = &self.space.geometry[k].grads;
        let cell = self.space.mesh.cells()[k];
        let mut rows = vec![[T::zero(); 2]; n];
        for (i, &v) in cell.iter().enumerate() {
            for (c, row) in rows.iter_mut().enumerate() {
                let u = self.coeffs[v * n + c];
                row[0] = row[0] + u * g[i][0];
                row[1] = row[1] + u * g[i][1];
            }
        }
        Tensor::from_rows(&rows)
    }

    /// Value at barycentric coordinates `bary` of cell `k`.
    pub fn eval(&self, k: usize, bary: [T; 3]) -> Vec<T> {
        let n = self.space.components;
        let cell = self.space.mesh.cells()[k];
        (0..n).map(|c| (0..3).map(|i| bary[i] * self.coeffs[cell[i] * n + c]).sum()).collect()
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: T, other: &Self, beta: T) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| alpha * a + beta * b).collect();
        Self { space: self.space.clone(), coeffs }
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use approx::assert_relative_eq;

    fn space(n: usize, comps: usize) -> Arc<FeSpace<f64>> {
        FeSpace::new(Arc::new(Triangulation::generate(Domain::UnitSquare, n).unwrap()), comps).unwrap()
    }

    #[test]
    fn dof_counts() {
        let s = space(4, 2);
        assert_eq!(s.num_dofs(), 2 * 25);
        assert_eq!(s.num_free(), 2 * 9);
        assert_eq!(s.dirichlet_dofs().len(), 2 * 16);
    }

    #[test]
    fn gradients_of_affine_functions_are_exact() {
        let s = space(3, 1);
        let u = FeFunction::nodal(&s, |x| vec![1.0 + 2.0 * x[0] - 3.0 * x[1]]);
        for k in 0..s.mesh().num_cells() {
            let g = u.gradient(k);
            assert_relative_eq!(g.as_slice()[0], 2.0, epsilon = 1e-13);
            assert_relative_eq!(g.as_slice()[1], -3.0, epsilon = 1e-13);
        }
        let third = 1.0 / 3.0;
        let c = s.mesh().triangle(4).centroid();
        assert_relative_eq!(u.eval(4, [third; 3])[0], 1.0 + 2.0 * c[0] - 3.0 * c[1], epsilon = 1e-14);
    }

    #[test]
    fn free_round_trip() {
        let s = space(4, 2);
        let free: Vec<f64> = (0..s.num_free()).map(|i| i as f64).collect();
        let u = FeFunction::from_free(&s, &free).unwrap();
        assert!(u.is_zero_trace());
        assert_eq!(u.free_values(), free);
        assert!(FeFunction::from_free(&s, &free[1..]).is_err());
    }

    #[test]
    fn pattern_is_symmetric() {
        let s = space(5, 2);
        let m = s.matrix();
        for i in 0..m.dim() {
            for (j, _) in m.row(i) {
                assert!(m.row(j).any(|(c, _)| c == i));
            }
        }
    }
}
