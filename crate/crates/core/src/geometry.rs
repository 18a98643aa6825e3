//! Planar domains and triangle geometry.

use serde::{Deserialize, Serialize};

use crate::errors::{Error, Result};
use crate::scalar::{dist, Point, Real};

/// Polygonal domains supported by the mesh generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// `(0,1)²`.
    UnitSquare,
    /// `(0,1)²` with the upper-right quadrant `[½,1]²` removed; the
    /// re-entrant corner sits at `(½,½)`.
    LShape,
}

impl Domain {
    /// Whether `x` lies in the closure of the domain, up to `tol`.
    pub fn contains<T: Real>(&self, x: &Point<T>, tol: T) -> bool {
        let lo = -tol;
        let hi = T::one() + tol;
        let in_square = x[0] >= lo && x[0] <= hi && x[1] >= lo && x[1] <= hi;
        match self {
            Domain::UnitSquare => in_square,
            Domain::LShape => {
                let half = T::lit(0.5);
                in_square && !(x[0] > half + tol && x[1] > half + tol)
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Domain::UnitSquare => 1.0,
            Domain::LShape => 0.75,
        }
    }

    /// Exact membership, used when rejection-sampling from the unit square.
    pub(crate) fn accepts<T: Real>(&self, x: &Point<T>) -> bool {
        self.contains(x, T::zero())
    }
}

/// A triangle given by its three corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle<T: Real> {
    pub corners: [Point<T>; 3],
}

impl<T: Real> Triangle<T> {
    pub fn new(a: Point<T>, b: Point<T>, c: Point<T>) -> Self {
        Self { corners: [a, b, c] }
    }

    /// Signed area; positive for counter-clockwise orientation.
    pub fn signed_area(&self) -> T {
        let [a, b, c] = self.corners;
        T::lit(0.5) * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self) -> T {
        self.signed_area().abs()
    }

    pub fn edge_lengths(&self) -> [T; 3] {
        let [a, b, c] = self.corners;
        [dist(&b, &c), dist(&c, &a), dist(&a, &b)]
    }

    /// Diameter `h_K` (longest edge).
    pub fn diameter(&self) -> T {
        let [l0, l1, l2] = self.edge_lengths();
        l0.max(l1).max(l2)
    }

    /// Diameter of the inscribed circle, `ρ_K = 2·area/semiperimeter`.
    pub fn inscribed_diameter(&self) -> T {
        let [l0, l1, l2] = self.edge_lengths();
        let semi = T::lit(0.5) * (l0 + l1 + l2);
        T::lit(2.0) * self.area() / semi
    }

    /// Shape ratio `h_K / ρ_K`.
    pub fn shape_ratio(&self) -> Result<T> {
        let rho = self.inscribed_diameter();
        if !(rho > T::zero()) {
            return Err(Error::Geometry("degenerate cell with zero inradius".into()));
        }
        Ok(self.diameter() / rho)
    }

    pub fn centroid(&self) -> Point<T> {
        let third = T::one() / T::lit(3.0);
        let [a, b, c] = self.corners;
        [(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third]
    }

    /// Maps barycentric coordinates to the physical point.
    pub fn at(&self, bary: [T; 3]) -> Point<T> {
        let [a, b, c] = self.corners;
        [bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0], bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1]]
    }

    /// Closest point of the closed triangle to `q`.
    pub fn closest_point(&self, q: &Point<T>) -> Point<T> {
        if self.contains(q) {
            return *q;
        }
        let mut best = self.corners[0];
        let mut best_d = T::infinity();
        for i in 0..3 {
            let a = self.corners[i];
            let b = self.corners[(i + 1) % 3];
            let e = [b[0] - a[0], b[1] - a[1]];
            let len2 = e[0] * e[0] + e[1] * e[1];
            let s = if len2 > T::zero() {
                (((q[0] - a[0]) * e[0] + (q[1] - a[1]) * e[1]) / len2).max(T::zero()).min(T::one())
            } else {
                T::zero()
            };
            let cand = [a[0] + s * e[0], a[1] + s * e[1]];
            let d = dist(&cand, q);
            if d < best_d {
                best_d = d;
                best = cand;
            }
        }
        best
    }

    pub fn contains(&self, q: &Point<T>) -> bool {
        let [a, b, c] = self.corners;
        let orient = |p: Point<T>, r: Point<T>| (r[0] - p[0]) * (q[1] - p[1]) - (q[0] - p[0]) * (r[1] - p[1]);
        let d0 = orient(a, b);
        let d1 = orient(b, c);
        let d2 = orient(c, a);
        let z = T::zero();
        (d0 >= z && d1 >= z && d2 >= z) || (d0 <= z && d1 <= z && d2 <= z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equilateral_shape_ratio() {
        let t = Triangle::new([0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]);
        assert_relative_eq!(t.diameter(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(t.inscribed_diameter(), 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(t.shape_ratio().unwrap(), 1.732_050_8, epsilon = 1e-7);
    }

    #[test]
    fn right_isosceles_shape_ratio() {
        let t = Triangle::new([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        // r = (2 - √2)/2, h = √2
        let expected = 2f64.sqrt() / (2.0 - 2f64.sqrt());
        assert_relative_eq!(t.shape_ratio().unwrap(), expected, max_relative = 1e-14);
        assert_relative_eq!(expected, 2.414_213_6, epsilon = 1e-7);
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let t = Triangle::new([0.0, 0.0], [1.0, 0.0], [2.0, 0.0]);
        assert!(t.shape_ratio().is_err());
    }

    #[test]
    fn closest_point_projects_onto_edge() {
        let t = Triangle::new([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        let p = t.closest_point(&[1.0, 1.0]);
        assert_relative_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.5, epsilon = 1e-15);
        assert_eq!(t.closest_point(&[0.2, 0.2]), [0.2, 0.2]);
    }

    #[test]
    fn l_shape_excludes_upper_quadrant() {
        assert!(Domain::LShape.contains(&[0.25, 0.75], 0.0));
        assert!(Domain::LShape.contains(&[0.5, 0.9], 0.0));
        assert!(!Domain::LShape.contains(&[0.75, 0.75], 0.0));
        assert!(!Domain::UnitSquare.contains(&[1.1, 0.5], 1e-12));
    }
}
