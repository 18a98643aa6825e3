//! Clément-type quasi-interpolation onto continuous P1 functions.
//!
//! Each vertex value is the value at that vertex of the `L²` projection of
//! `v` onto affine functions over the vertex patch. The construction is
//! linear, reproduces affine functions and is `L¹`-stable, but it is not a
//! projection onto `V_h`: a hat function is mapped to its patch average
//! at the centre of a symmetric patch.

use std::sync::Arc;

use rayon::prelude::*;

use crate::errors::{Error, Result};
use crate::fem::{FeFunction, FeSpace, FieldFunction};
use crate::nfunction::{PhiFamily, PowerNFunction, Tensor};
use crate::quadrature::TriangleRule;
use crate::scalar::{Point, Real};

/// Admissibility constant `c₂ = c₃` used by the probes.
pub const ADMISSIBILITY_CONSTANT: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct Interpolator<T: Real> {
    space: Arc<FeSpace<T>>,
    preserve_boundary: bool,
    rule: TriangleRule<T>,
}

// Solves a 3×3 SPD system by Cholesky.
fn solve3<T: Real>(m: [[T; 3]; 3], b: [T; 3]) -> Option<[T; 3]> {
    let mut l = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s = m[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<T>();
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = [T::zero(); 3];
    for i in 0..3 {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<T>()) / l[i][i];
    }
    let mut x = [T::zero(); 3];
    for i in (0..3).rev() {
        x[i] = (y[i] - (i + 1..3).map(|k| l[k][i] * x[k]).sum::<T>()) / l[i][i];
    }
    Some(x)
}

/// Samples of a function and its gradient at the quadrature points of one cell.
struct CellSamples<T: Real> {
    points: Vec<Point<T>>,
    weights: Vec<T>,
    values: Vec<Vec<T>>,
    grads: Vec<Tensor<T>>,
}

impl<T: Real> Interpolator<T> {
    pub fn new(space: &Arc<FeSpace<T>>, preserve_boundary: bool) -> Self {
        Self { space: space.clone(), preserve_boundary, rule: TriangleRule::of_degree(4) }
    }

    /// Quadrature degree used for patch projections and probe integrals.
    pub fn with_degree(mut self, degree: usize) -> Result<Self> {
        if degree > 7 {
            return Err(Error::Argument(format!("no built-in triangle rule of degree {degree}")));
        }
        self.rule = TriangleRule::of_degree(degree);
        Ok(self)
    }

    pub fn space(&self) -> &Arc<FeSpace<T>> {
        &self.space
    }

    pub fn preserves_boundary(&self) -> bool {
        self.preserve_boundary
    }

    fn project(&self, sample: impl Fn(usize, [T; 3], &Point<T>) -> Vec<T> + Sync) -> Result<FeFunction<T>> {
        let mesh = self.space.mesh();
        let n = self.space.components();
        let values: Vec<Result<Vec<T>>> = (0..mesh.num_vertices())
            .into_par_iter()
            .map(|v| {
                if self.preserve_boundary && mesh.is_boundary(v) {
                    return Ok(vec![T::zero(); n]);
                }
                let z = mesh.vertices()[v];
                let cells = mesh.vertex_cells(v);
                // scale the linear basis by the patch size for conditioning
                let h = cells.iter().map(|&k| mesh.triangle(k).diameter()).fold(T::zero(), T::max);
                let mut gram = [[T::zero(); 3]; 3];
                let mut rhs = vec![[T::zero(); 3]; n];
                for &k in cells {
                    let tri = mesh.triangle(k);
                    let area = tri.area();
                    for (b, &w) in self.rule.bary.iter().zip(&self.rule.weights) {
                        let x = tri.at(*b);
                        let phi = [T::one(), (x[0] - z[0]) / h, (x[1] - z[1]) / h];
                        let fx = sample(k, *b, &x);
                        let wa = w * area;
                        for i in 0..3 {
                            for j in 0..3 {
                                gram[i][j] = gram[i][j] + wa * phi[i] * phi[j];
                            }
                            for c in 0..n {
                                rhs[c][i] = rhs[c][i] + wa * fx[c] * phi[i];
                            }
                        }
                    }
                }
                rhs.iter()
                    .map(|r| {
                        solve3(gram, *r)
                            .map(|a| a[0])
                            .ok_or_else(|| Error::Geometry(format!("degenerate patch at vertex {v}")))
                    })
                    .collect()
            })
            .collect();
        let mut coeffs = Vec::with_capacity(self.space.num_dofs());
        for v in values {
            coeffs.extend(v?);
        }
        FeFunction::from_coeffs(&self.space, coeffs)
    }

    /// `Π_h v`.
    pub fn interpolate(&self, v: &dyn FieldFunction<T>) -> Result<FeFunction<T>> {
        self.check_components(v.components())?;
        self.project(|_, _, x| v.value(x))
    }

    /// `Π_h v_h` for a discrete function on the same mesh.
    pub fn interpolate_discrete(&self, vh: &FeFunction<T>) -> Result<FeFunction<T>> {
        if !Arc::ptr_eq(vh.space().mesh(), self.space.mesh()) {
            return Err(Error::Argument("function lives on a different mesh".into()));
        }
        self.check_components(vh.space().components())?;
        self.project(|k, b, _| vh.eval(k, b))
    }

    fn check_components(&self, n: usize) -> Result<()> {
        if n != self.space.components() {
            return Err(Error::Argument(format!("field has {n} components, space has {}", self.space.components())));
        }
        Ok(())
    }

    fn samples(&self, k: usize, f: impl Fn(&Point<T>, [T; 3]) -> (Vec<T>, Tensor<T>)) -> CellSamples<T> {
        let tri = self.space.mesh().triangle(k);
        let area = tri.area();
        let mut s = CellSamples { points: vec![], weights: vec![], values: vec![], grads: vec![] };
        for (b, &w) in self.rule.bary.iter().zip(&self.rule.weights) {
            let x = tri.at(*b);
            let (val, grad) = f(&x, *b);
            s.points.push(x);
            s.weights.push(w * area);
            s.values.push(val);
            s.grads.push(grad);
        }
        s
    }

    fn field_samples(&self, k: usize, v: &dyn FieldFunction<T>) -> CellSamples<T> {
        self.samples(k, |x, _| (v.value(x), v.gradient(x)))
    }

    /// `max_K ⨍_K |Π_h v| / Σ_{k≤1} h_K^k ⨍_{S_K} |∇^k v|`.
    pub fn l1_stability_constant(&self, v: &dyn FieldFunction<T>) -> Result<T> {
        let pv = self.interpolate(v)?;
        let mesh = self.space.mesh();
        let ratios: Vec<Result<T>> = (0..mesh.num_cells())
            .into_par_iter()
            .map(|k| {
                let h = mesh.triangle(k).diameter();
                let s = self.samples(k, |_, b| (pv.eval(k, b), pv.gradient(k)));
                let lhs = mean(&s, |val, _, _| norm(val));
                let mut area = T::zero();
                let mut rhs = T::zero();
                for j in mesh.patch(k)? {
                    let sj = self.field_samples(j, v);
                    for q in 0..sj.weights.len() {
                        rhs = rhs + sj.weights[q] * (norm(&sj.values[q]) + h * sj.grads[q].norm());
                        area = area + sj.weights[q];
                    }
                }
                let rhs = rhs / area;
                Ok(if lhs == T::zero() { T::zero() } else { lhs / rhs })
            })
            .collect();
        max_of(ratios)
    }

    /// `max_{K, j≤1} ⨍_K φ_a(·,|h_K^j ∇^j Π_h v|) / (Σ_{k≤1} ⨍_{S_K} φ_a(·,|h_K^k ∇^k v|) + h_K^m)`.
    pub fn stability_probe(&self, phi: &PhiFamily<T>, v: &dyn FieldFunction<T>, a: T, m: T) -> Result<T> {
        let pv = self.interpolate(v)?;
        self.check_admissible(v, m, true)?;
        let mesh = self.space.mesh();
        let ratios: Vec<Result<T>> = (0..mesh.num_cells())
            .into_par_iter()
            .map(|k| {
                let h = mesh.triangle(k).diameter();
                let s = self.samples(k, |_, b| (pv.eval(k, b), pv.gradient(k)));
                let rhs = self.patch_modular(phi, v, k, a, h, true)? + h.powf(m);
                let mut worst = T::zero();
                for j in 0..2 {
                    let lhs = mean(&s, |val, g, x| {
                        let t = if j == 0 { norm(val) } else { h * g.norm() };
                        shifted(phi, x, a).value(t)
                    });
                    worst = worst.max(lhs / rhs);
                }
                Ok(worst)
            })
            .collect();
        max_of(ratios)
    }

    /// `max_{K, j≤1} ⨍_K φ_a(·, h_K^j|∇^j(v − Π_h v)|) / (⨍_{S_K} φ_a(·, h_K|∇v|) + h_K^m)`.
    pub fn approximability_probe(&self, phi: &PhiFamily<T>, v: &dyn FieldFunction<T>, a: T, m: T) -> Result<T> {
        let pv = self.interpolate(v)?;
        self.check_admissible(v, m, false)?;
        let mesh = self.space.mesh();
        let ratios: Vec<Result<T>> = (0..mesh.num_cells())
            .into_par_iter()
            .map(|k| {
                let h = mesh.triangle(k).diameter();
                let s = self.samples(k, |x, b| {
                    let d: Vec<T> = v.value(x).iter().zip(pv.eval(k, b)).map(|(&a, b)| a - b).collect();
                    (d, v.gradient(x).sub(&pv.gradient(k)))
                });
                let rhs = self.patch_modular(phi, v, k, a, h, false)? + h.powf(m);
                let mut worst = T::zero();
                for j in 0..2 {
                    let lhs = mean(&s, |val, g, x| {
                        let t = if j == 0 { norm(val) } else { h * g.norm() };
                        shifted(phi, x, a).value(t)
                    });
                    worst = worst.max(lhs / rhs);
                }
                Ok(worst)
            })
            .collect();
        max_of(ratios)
    }

    /// `max_K ⨍_K φ_a(·, h_K|∇Π_h v|) / (⨍_{S_K} φ_a(·, h_K|∇v|) + h_K^m)`.
    pub fn continuity_probe(&self, phi: &PhiFamily<T>, v: &dyn FieldFunction<T>, a: T, m: T) -> Result<T> {
        let pv = self.interpolate(v)?;
        self.check_admissible(v, m, false)?;
        let mesh = self.space.mesh();
        let ratios: Vec<Result<T>> = (0..mesh.num_cells())
            .into_par_iter()
            .map(|k| {
                let h = mesh.triangle(k).diameter();
                let g = pv.gradient(k);
                let s = self.samples(k, |_, b| (pv.eval(k, b), g.clone()));
                let lhs = mean(&s, |_, g, x| shifted(phi, x, a).value(h * g.norm()));
                let rhs = self.patch_modular(phi, v, k, a, h, false)? + h.powf(m);
                Ok(lhs / rhs)
            })
            .collect();
        max_of(ratios)
    }

    // ⨍_{S_K} φ_a(·, h|∇v|), plus ⨍_{S_K} φ_a(·,|v|) when `with_values`
    fn patch_modular(
        &self,
        phi: &PhiFamily<T>,
        v: &dyn FieldFunction<T>,
        k: usize,
        a: T,
        h: T,
        with_values: bool,
    ) -> Result<T> {
        let mut total = T::zero();
        let mut area = T::zero();
        for j in self.space.mesh().patch(k)? {
            let s = self.field_samples(j, v);
            for q in 0..s.weights.len() {
                let rho = shifted(phi, &s.points[q], a);
                let mut e = rho.value(h * s.grads[q].norm());
                if with_values {
                    e = e + rho.value(norm(&s.values[q]));
                }
                total = total + s.weights[q] * e;
                area = area + s.weights[q];
            }
        }
        Ok(total / area)
    }

    // max_{k} ⨍_{S_K} h_K^k |∇^k v| ≤ c max{1, |K|^{−m}}; only k = 1 when `values` is false
    fn check_admissible(&self, v: &dyn FieldFunction<T>, m: T, values: bool) -> Result<()> {
        let mesh = self.space.mesh();
        let c = T::lit(ADMISSIBILITY_CONSTANT);
        let bad: Vec<usize> = (0..mesh.num_cells())
            .into_par_iter()
            .filter_map(|k| {
                let tri = mesh.triangle(k);
                let h = tri.diameter();
                let bound = c * T::one().max(tri.area().powf(-m));
                let patch = mesh.patch(k).ok()?;
                let (mut m0, mut m1, mut area) = (T::zero(), T::zero(), T::zero());
                for j in patch {
                    let s = self.field_samples(j, v);
                    for q in 0..s.weights.len() {
                        m0 = m0 + s.weights[q] * norm(&s.values[q]);
                        m1 = m1 + s.weights[q] * h * s.grads[q].norm();
                        area = area + s.weights[q];
                    }
                }
                let worst = if values { (m0 / area).max(m1 / area) } else { m1 / area };
                (worst > bound).then_some(k)
            })
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            let shown: Vec<String> = bad.iter().take(10).map(|k| k.to_string()).collect();
            Err(Error::Precondition(format!(
                "admissibility fails on {} cells: {}{}",
                bad.len(),
                shown.join(", "),
                if bad.len() > 10 { ", ..." } else { "" }
            )))
        }
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn shifted<T: Real>(phi: &PhiFamily<T>, x: &Point<T>, a: T) -> PowerNFunction<T> {
    phi.for_exponent(phi.exponent().eval_unchecked(x)).shifted(a)
}

fn mean<T: Real>(s: &CellSamples<T>, f: impl Fn(&[T], &Tensor<T>, &Point<T>) -> T) -> T {
    let area: T = s.weights.iter().copied().sum();
    let total: T = (0..s.weights.len()).map(|q| s.weights[q] * f(&s.values[q], &s.grads[q], &s.points[q])).sum();
    total / area
}

fn max_of<T: Real>(ratios: Vec<Result<T>>) -> Result<T> {
    let mut out = T::zero();
    for r in ratios {
        out = out.max(r?);
    }
    Ok(out)
}
