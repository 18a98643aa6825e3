//! Conforming triangulations of the unit square and the L-shape.

mod io;

pub use io::{parse_mesh, read_mesh, render_mesh, write_mesh};

use std::collections::HashMap;

use crate::errors::{Error, Result};
use crate::geometry::{Domain, Triangle};
use crate::scalar::{Point, Real};

/// A 2D conforming simplicial mesh with counter-clockwise cells.
///
/// Boundary vertices are derived from the topology: a vertex is on the
/// boundary iff it lies on an edge with exactly one adjacent cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation<T: Real> {
    vertices: Vec<Point<T>>,
    cells: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    vertex_cells: Vec<Vec<usize>>,
    level: usize,
    domain: Option<Domain>,
}

type EdgeMap = HashMap<(usize, usize), usize>;

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl<T: Real> Triangulation<T> {
    /// Builds and validates a mesh.
    pub fn new(vertices: Vec<Point<T>>, cells: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        let mut vertex_cells = vec![Vec::new(); nv];
        for (k, c) in cells.iter().enumerate() {
            if c.iter().any(|&i| i >= nv) {
                return Err(Error::Validation(format!("cell {k} references a missing vertex")));
            }
            if c[0] == c[1] || c[1] == c[2] || c[0] == c[2] {
                return Err(Error::Validation(format!("cell {k} repeats a vertex")));
            }
            let tri = Triangle::new(vertices[c[0]], vertices[c[1]], vertices[c[2]]);
            let area = tri.signed_area();
            if area < T::zero() {
                return Err(Error::Validation(format!("cell {k} has negative area")));
            }
            if area == T::zero() {
                return Err(Error::Geometry(format!("cell {k} is degenerate")));
            }
            for &i in c {
                vertex_cells[i].push(k);
            }
        }
        if let Some(v) = vertex_cells.iter().position(Vec::is_empty) {
            return Err(Error::Validation(format!("vertex {v} belongs to no cell")));
        }

        let counts = Self::edge_counts(&cells);
        let mut boundary = vec![false; nv];
        let mut boundary_edges = Vec::new();
        for (&(a, b), &n) in &counts {
            if n > 2 {
                return Err(Error::Validation(format!("edge ({a}, {b}) is shared by {n} cells")));
            }
            if n == 1 {
                boundary[a] = true;
                boundary[b] = true;
                boundary_edges.push((a, b));
            }
        }
        // a hanging node sits in the interior of an edge seen by only one cell
        boundary_edges.sort_unstable();
        for &(a, b) in &boundary_edges {
            let (pa, pb) = (vertices[a], vertices[b]);
            let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
            let tol = T::lit(1e-10) * len;
            for (v, q) in vertices.iter().enumerate() {
                if v == a || v == b {
                    continue;
                }
                let cross = (pb[0] - pa[0]) * (q[1] - pa[1]) - (pb[1] - pa[1]) * (q[0] - pa[0]);
                if cross.abs() > tol * len {
                    continue;
                }
                let s = ((q[0] - pa[0]) * (pb[0] - pa[0]) + (q[1] - pa[1]) * (pb[1] - pa[1])) / (len * len);
                if s > T::lit(1e-10) && s < T::one() - T::lit(1e-10) {
                    return Err(Error::Validation(format!("vertex {v} hangs on edge ({a}, {b})")));
                }
            }
        }
        Ok(Self { vertices, cells, boundary, vertex_cells, level: 0, domain: None })
    }

    fn edge_counts(cells: &[[usize; 3]]) -> EdgeMap {
        let mut counts = EdgeMap::new();
        for c in cells {
            for i in 0..3 {
                *counts.entry(edge_key(c[i], c[(i + 1) % 3])).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Structured mesh with `n` squares per unit length, each split along
    /// its lower-left to upper-right diagonal. The L-shape needs even `n`
    /// so the re-entrant corner is a vertex.
    pub fn generate(domain: Domain, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("n must be at least 1".into()));
        }
        if domain == Domain::LShape && n % 2 == 1 {
            return Err(Error::Argument(format!("l-shape meshes need even n (got {n})")));
        }
        let keep = |i: usize, j: usize| domain == Domain::UnitSquare || !(2 * i >= n && 2 * j >= n);
        let mut index = vec![usize::MAX; (n + 1) * (n + 1)];
        let mut vertices = Vec::new();
        let mut id = |i: usize, j: usize, vertices: &mut Vec<Point<T>>| {
            let slot = &mut index[j * (n + 1) + i];
            if *slot == usize::MAX {
                *slot = vertices.len();
                let nf = T::from_usize_lossy(n);
                vertices.push([T::from_usize_lossy(i) / nf, T::from_usize_lossy(j) / nf]);
            }
            *slot
        };
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                if !keep(i, j) {
                    continue;
                }
                let v00 = id(i, j, &mut vertices);
                let v10 = id(i + 1, j, &mut vertices);
                let v11 = id(i + 1, j + 1, &mut vertices);
                let v01 = id(i, j + 1, &mut vertices);
                cells.push([v00, v10, v11]);
                cells.push([v00, v11, v01]);
            }
        }
        let mut mesh = Self::new(vertices, cells)?;
        mesh.domain = Some(domain);
        Ok(mesh)
    }

    /// Red refinement: every cell splits into four similar children.
    pub fn refine_uniform(&self) -> Result<Self> {
        let mut vertices = self.vertices.clone();
        let mut mids = EdgeMap::new();
        let half = T::lit(0.5);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point<T>>| {
            *mids.entry(edge_key(a, b)).or_insert_with(|| {
                let (pa, pb) = (vertices[a], vertices[b]);
                vertices.push([half * (pa[0] + pb[0]), half * (pa[1] + pb[1])]);
                vertices.len() - 1
            })
        };
        let mut cells = Vec::with_capacity(4 * self.cells.len());
        for &[a, b, c] in &self.cells {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            cells.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut mesh = Self::new(vertices, cells)?;
        mesh.level = self.level + 1;
        mesh.domain = self.domain;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn domain(&self) -> Option<Domain> {
        self.domain
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&v| self.boundary[v]).collect()
    }

    pub fn triangle(&self, k: usize) -> Triangle<T> {
        let [a, b, c] = self.cells[k];
        Triangle::new(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Cells containing vertex `v`.
    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    /// Global mesh size `h = max h_K`.
    pub fn h(&self) -> T {
        (0..self.num_cells()).map(|k| self.triangle(k).diameter()).fold(T::zero(), T::max)
    }

    /// `(h, γ₀)` with `γ₀ = max_K h_K/ρ_K`.
    pub fn shape_metrics(&self) -> Result<(T, T)> {
        let mut h = T::zero();
        let mut gamma = T::zero();
        for k in 0..self.num_cells() {
            let t = self.triangle(k);
            h = h.max(t.diameter());
            gamma = gamma.max(t.shape_ratio()?);
        }
        Ok((h, gamma))
    }

    /// Neighbours `N_K`: cells sharing at least a vertex with `K`,
    /// including `K`, sorted.
    pub fn patch(&self, k: usize) -> Result<Vec<usize>> {
        let c = self
            .cells
            .get(k)
            .ok_or_else(|| Error::Argument(format!("cell {k} out of range ({} cells)", self.num_cells())))?;
        let mut out: Vec<usize> = c.iter().flat_map(|&v| self.vertex_cells[v].iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// `|S_K|`.
    pub fn patch_area(&self, k: usize) -> Result<T> {
        Ok(self.patch(k)?.iter().map(|&j| self.triangle(j).area()).sum())
    }

    /// `max_K #N_K`.
    pub fn max_patch_size(&self) -> usize {
        (0..self.num_cells()).map(|k| self.patch(k).map_or(0, |p| p.len())).max().unwrap_or(0)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = Self::edge_counts(&self.cells).into_keys().collect();
        e.sort_unstable();
        e
    }

    /// `V − E + F`; one for simply connected domains.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.edges().len() as i64 + self.num_cells() as i64
    }

    pub fn area(&self) -> T {
        (0..self.num_cells()).map(|k| self.triangle(k).area()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn square(n: usize) -> Triangulation<f64> {
        Triangulation::generate(Domain::UnitSquare, n).unwrap()
    }

    #[test]
    fn generate_counts() {
        let m = square(1);
        assert_eq!((m.num_cells(), m.num_vertices()), (2, 4));
        assert_relative_eq!(m.h(), 2f64.sqrt(), epsilon = 1e-15);
        let m = square(2);
        assert_eq!((m.num_cells(), m.num_vertices()), (8, 9));
        let l = Triangulation::<f64>::generate(Domain::LShape, 2).unwrap();
        assert_eq!((l.num_cells(), l.num_vertices()), (6, 8));
        assert_relative_eq!(l.area(), 0.75, epsilon = 1e-15);
        assert!(Triangulation::<f64>::generate(Domain::LShape, 3).is_err());
        assert!(Triangulation::<f64>::generate(Domain::UnitSquare, 0).is_err());
    }

    #[test]
    fn mesh_size_matches_diagonal() {
        for n in [1, 3, 8] {
            assert_relative_eq!(square(n).h(), 2f64.sqrt() / n as f64, max_relative = 1e-14);
        }
    }

    #[test]
    fn refinement_quadruples_and_preserves_shape() {
        let m = square(1);
        let r = m.refine_uniform().unwrap();
        assert_eq!(r.num_cells(), 8);
        assert_relative_eq!(r.h(), 2f64.sqrt() / 2.0, epsilon = 1e-15);
        let (_, g0) = m.shape_metrics().unwrap();
        let (_, g1) = r.shape_metrics().unwrap();
        assert!((g0 - g1).abs() <= 1e-12);
        assert_eq!(r.level(), 1);

        let mut m = square(2);
        for _ in 0..5 {
            m = m.refine_uniform().unwrap();
        }
        assert_eq!(m.num_cells(), 8 * 4usize.pow(5));
        assert_relative_eq!(m.area(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn boundary_is_topological() {
        // the n = 1 diagonal joins two boundary vertices but is interior
        let m = square(1).refine_uniform().unwrap();
        let centre = m.vertices().iter().position(|v| *v == [0.5, 0.5]).unwrap();
        assert!(!m.is_boundary(centre));
        assert_eq!(m.boundary_vertices().len(), 8);
        let l = Triangulation::<f64>::generate(Domain::LShape, 4).unwrap();
        let corner = l.vertices().iter().position(|v| *v == [0.5, 0.5]).unwrap();
        assert!(l.is_boundary(corner));
    }

    #[test]
    fn patches() {
        let m = square(1);
        assert_eq!(m.patch(0).unwrap(), vec![0, 1]);
        assert_eq!(m.patch(1).unwrap(), vec![0, 1]);
        assert!(m.patch(2).is_err());

        let m = square(8);
        assert_eq!(m.max_patch_size(), 13);
        for k in 0..m.num_cells() {
            let p = m.patch(k).unwrap();
            assert!(p.contains(&k));
            for &j in &p {
                assert!(m.patch(j).unwrap().contains(&k));
            }
            assert!(m.patch_area(k).unwrap() / m.triangle(k).area() <= 13.0);
        }
        // cell 0 touches the corner (0,0)
        assert!(m.patch(0).unwrap().len() < 13);
    }

    #[test]
    fn euler_relation() {
        let mut m = square(2);
        let mut l = Triangulation::<f64>::generate(Domain::LShape, 2).unwrap();
        for _ in 0..3 {
            assert_eq!(m.euler_characteristic(), 1);
            assert_eq!(l.euler_characteristic(), 1);
            m = m.refine_uniform().unwrap();
            l = l.refine_uniform().unwrap();
        }
    }

    #[test]
    fn validation_rejects_bad_meshes() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let err = Triangulation::new(v.clone(), vec![[0, 2, 1]]).unwrap_err();
        assert!(err.to_string().contains("negative area"), "{err}");
        assert!(Triangulation::new(v.clone(), vec![[0, 1, 7]]).is_err());
        // (0.5, 0.5) hangs on the diagonal of the lower cell
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let err = Triangulation::new(v, vec![[0, 1, 2], [0, 4, 3], [4, 2, 3]]).unwrap_err();
        assert!(err.to_string().contains("hangs"), "{err}");
    }

    #[test]
    fn single_cell_shape_metrics() {
        let t = Triangulation::new(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]], vec![[0, 1, 2]]).unwrap();
        let (h, g) = t.shape_metrics().unwrap();
        assert_relative_eq!(h, 1.0, epsilon = 1e-15);
        assert_relative_eq!(g, 3f64.sqrt(), max_relative = 1e-14);
    }
}
