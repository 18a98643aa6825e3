use std::sync::Arc;

use rayon::prelude::*;

use crate::errors::{Error, Result};
use crate::nfunction::{flux_a, flux_a_jacobian, flux_f, PhiFamily, PowerNFunction, Tensor, Variant};
use crate::numeric::gauss_legendre8_span;
use crate::quadrature::TriangleRule;
use crate::scalar::{Point, Real};

use super::field::FieldFunction;
use super::freeze::FrozenExponent;
use super::space::{FeFunction, FeSpace};
use super::sparse::CsrMatrix;

/// Quadrature points of every cell with the exponent evaluated there.
///
/// In frozen mode every point of cell `K` carries `p(x_K)`.
#[derive(Debug, Clone)]
pub struct Assembler<T: Real> {
    space: Arc<FeSpace<T>>,
    rule: TriangleRule<T>,
    points: Vec<Point<T>>,
    weights: Vec<T>,
    exps: Vec<T>,
    kappa: T,
    // plain power `t^p` is `p·∫₀ᵗ s^{p−1}` in integral form
    scale_by_p: bool,
}

impl<T: Real> Assembler<T> {
    pub fn new(
        space: &Arc<FeSpace<T>>,
        phi: &PhiFamily<T>,
        frozen: Option<&FrozenExponent<T>>,
        degree: usize,
    ) -> Result<Self> {
        if degree > 7 {
            return Err(Error::Argument(format!("no built-in triangle rule of degree {degree}")));
        }
        let exponent = phi.exponent();
        let rule = TriangleRule::of_degree(degree);
        let mesh = space.mesh();
        let nq = rule.len();
        let mut points = Vec::with_capacity(mesh.num_cells() * nq);
        let mut weights = Vec::with_capacity(mesh.num_cells() * nq);
        let mut exps = Vec::with_capacity(mesh.num_cells() * nq);
        for k in 0..mesh.num_cells() {
            let tri = mesh.triangle(k);
            let area = space.geometry(k).area;
            for (b, &w) in rule.bary.iter().zip(&rule.weights) {
                let x = tri.at(*b);
                points.push(x);
                weights.push(w * area);
                exps.push(match frozen {
                    Some(f) => f.value(k),
                    None => exponent.eval_unchecked(&x),
                });
            }
        }
        Ok(Self {
            space: space.clone(),
            rule,
            points,
            weights,
            exps,
            kappa: phi.kappa(),
            scale_by_p: phi.variant() == Variant::PlainPower,
        })
    }

    /// Same quadrature data with a different `κ`.
    pub fn with_kappa(&self, kappa: T) -> Self {
        Self { kappa, ..self.clone() }
    }

    pub fn space(&self) -> &Arc<FeSpace<T>> {
        &self.space
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn degree(&self) -> usize {
        self.rule.degree
    }

    fn nq(&self) -> usize {
        self.rule.len()
    }

    fn qp(&self, k: usize) -> std::ops::Range<usize> {
        k * self.nq()..(k + 1) * self.nq()
    }

    fn rho(&self, q: usize) -> PowerNFunction<T> {
        let p = self.exps[q];
        PowerNFunction::new(if self.scale_by_p { p } else { T::one() }, self.kappa, p)
    }

    /// Exponent at every quadrature point, cell by cell.
    pub fn exponents(&self) -> &[T] {
        &self.exps
    }

    /// `∫ g(x, p(x)) dx` over the quadrature points of cell `k`.
    pub fn cell_integral(&self, k: usize, g: impl Fn(&Point<T>, T) -> T) -> T {
        self.qp(k).map(|q| self.weights[q] * g(&self.points[q], self.exps[q])).sum()
    }

    fn num_cells(&self) -> usize {
        self.space.mesh().num_cells()
    }

    /// Scatters per-cell vectors `local[i·N + c]` into a free-dof vector in
    /// cell order.
    fn scatter_vector(&self, locals: Vec<Vec<T>>) -> Vec<T> {
        let n = self.space.components();
        let mut out = vec![T::zero(); self.space.num_free()];
        for (k, local) in locals.into_iter().enumerate() {
            let cell = self.space.mesh().cells()[k];
            for (i, &v) in cell.iter().enumerate() {
                for c in 0..n {
                    if let Some(f) = self.space.free_index(v, c) {
                        out[f] = out[f] + local[i * n + c];
                    }
                }
            }
        }
        out
    }

    /// `(∫ A(·,∇u)·∇ψᵢ)ᵢ` over free dofs.
    pub fn operator(&self, u: &FeFunction<T>) -> Vec<T> {
        let n = self.space.components();
        let locals: Vec<Vec<T>> = (0..self.num_cells())
            .into_par_iter()
            .map(|k| {
                let xi = u.gradient(k);
                let norm = xi.norm();
                // A(x,ξ) = ρ'(|ξ|)/|ξ| · ξ and ξ is constant on the cell
                let s: T = self.qp(k).map(|q| self.weights[q] * self.rho(q).deriv_over_t(norm)).sum();
                let s = if norm == T::zero() { T::zero() } else { s };
                let g = &self.space.geometry(k).grads;
                let rows = xi.as_slice();
                let mut local = vec![T::zero(); 3 * n];
                for i in 0..3 {
                    for c in 0..n {
                        local[i * n + c] = s * (rows[2 * c] * g[i][0] + rows[2 * c + 1] * g[i][1]);
                    }
                }
                local
            })
            .collect();
        self.scatter_vector(locals)
    }

    /// `R(u) = a(u)(ψᵢ) − bᵢ` over free dofs.
    pub fn residual(&self, u: &FeFunction<T>, load: &[T]) -> Vec<T> {
        let mut r = self.operator(u);
        for (ri, &bi) in r.iter_mut().zip(load) {
            *ri = *ri - bi;
        }
        r
    }

    /// `Jᵢⱼ = ∫ DA(·,∇u)∇ψⱼ : ∇ψᵢ` over free dofs.
    pub fn jacobian(&self, u: &FeFunction<T>) -> Result<CsrMatrix<T>> {
        let n = self.space.components();
        let locals: Vec<Result<(T, T, Tensor<T>)>> = (0..self.num_cells())
            .into_par_iter()
            .map(|k| {
                let xi = u.gradient(k);
                let mut c0 = T::zero();
                let mut c1 = T::zero();
                for q in self.qp(k) {
                    let j = flux_a_jacobian(&self.rho(q), &xi)?;
                    c0 = c0 + self.weights[q] * j.identity_coeff;
                    c1 = c1 + self.weights[q] * j.rank_one_coeff;
                }
                Ok((c0, c1, xi))
            })
            .collect();
        let mut m = self.space.matrix();
        for (k, local) in locals.into_iter().enumerate() {
            let (c0, c1, xi) = local?;
            let cell = self.space.mesh().cells()[k];
            let g = &self.space.geometry(k).grads;
            let rows = xi.as_slice();
            // ξ_c · ∇λ_i
            let proj = |i: usize, c: usize| rows[2 * c] * g[i][0] + rows[2 * c + 1] * g[i][1];
            for (i, &vi) in cell.iter().enumerate() {
                for ci in 0..n {
                    let Some(fi) = self.space.free_index(vi, ci) else { continue };
                    for (j, &vj) in cell.iter().enumerate() {
                        let gg = g[i][0] * g[j][0] + g[i][1] * g[j][1];
                        for cj in 0..n {
                            let Some(fj) = self.space.free_index(vj, cj) else { continue };
                            let id = if ci == cj { c0 * gg } else { T::zero() };
                            m.add(fi, fj, id + c1 * proj(i, ci) * proj(j, cj));
                        }
                    }
                }
            }
        }
        Ok(m)
    }

    /// Classical stiffness matrix `∫ ∇ψⱼ·∇ψᵢ`.
    pub fn stiffness(&self) -> CsrMatrix<T> {
        let n = self.space.components();
        let mut m = self.space.matrix();
        for k in 0..self.num_cells() {
            let cell = self.space.mesh().cells()[k];
            let geo = self.space.geometry(k);
            for (i, &vi) in cell.iter().enumerate() {
                for (j, &vj) in cell.iter().enumerate() {
                    let gg = geo.area * (geo.grads[i][0] * geo.grads[j][0] + geo.grads[i][1] * geo.grads[j][1]);
                    for c in 0..n {
                        if let (Some(fi), Some(fj)) = (self.space.free_index(vi, c), self.space.free_index(vj, c)) {
                            m.add(fi, fj, gg);
                        }
                    }
                }
            }
        }
        m
    }

    /// `∫ φ(·,|∇u|)`.
    pub fn internal_energy(&self, u: &FeFunction<T>) -> T {
        let per_cell: Vec<T> = (0..self.num_cells())
            .into_par_iter()
            .map(|k| {
                let t = u.gradient(k).norm();
                self.qp(k).map(|q| self.weights[q] * self.rho(q).value(t)).sum()
            })
            .collect();
        per_cell.into_iter().sum()
    }

    /// `J(u) = ∫ φ(·,|∇u|) − b·u`.
    pub fn energy(&self, u: &FeFunction<T>, load: &[T]) -> T {
        let lin: T = u.free_values().iter().zip(load).map(|(&a, &b)| a * b).sum();
        self.internal_energy(u) - lin
    }

    /// `J(u₁) − J(u₀)` without the cancellation of subtracting two energies.
    pub fn energy_difference(&self, u0: &FeFunction<T>, u1: &FeFunction<T>, load: &[T]) -> T {
        let tenth = T::lit(0.1);
        // coefficient differences of nearby iterates are exact
        let du = u1.combine(T::one(), u0, -T::one());
        let per_cell: Vec<T> = (0..self.num_cells())
            .into_par_iter()
            .map(|k| {
                let (x0, x1) = (u0.gradient(k), u1.gradient(k));
                let (t0, t1) = (x0.norm(), x1.norm());
                if t0 + t1 == T::zero() {
                    return T::zero();
                }
                // |ξ₁| − |ξ₀| = (ξ₁ − ξ₀)·(ξ₁ + ξ₀) / (|ξ₁| + |ξ₀|)
                let sum: Vec<T> = x0.as_slice().iter().zip(x1.as_slice()).map(|(&a, &b)| a + b).collect();
                let dt: T = du.gradient(k).as_slice().iter().zip(&sum).map(|(&a, &b)| a * b).sum::<T>() / (t0 + t1);
                if dt == T::zero() {
                    return T::zero();
                }
                self.qp(k)
                    .map(|q| {
                        let rho = self.rho(q);
                        let d = if dt.abs() > tenth * t0 {
                            rho.value(t1) - rho.value(t0)
                        } else {
                            gauss_legendre8_span(|s| rho.deriv(s), t0, dt)
                        };
                        self.weights[q] * d
                    })
                    .sum()
            })
            .collect();
        let internal: T = per_cell.into_iter().sum();
        let lin: T = u1.free_values().iter().zip(u0.free_values()).zip(load).map(|((&a, b), &l)| (a - b) * l).sum();
        internal - lin
    }

    /// Load `ψ ↦ ∫ A(·,∇v)·∇ψ` making `v` the exact weak solution.
    pub fn manufactured_load(&self, v: &dyn FieldFunction<T>) -> Vec<T> {
        let n = self.space.components();
        let locals: Vec<Vec<T>> = (0..self.num_cells())
            .into_par_iter()
            .map(|k| {
                let g = &self.space.geometry(k).grads;
                let mut local = vec![T::zero(); 3 * n];
                for q in self.qp(k) {
                    let a = flux_a(&self.rho(q), &v.gradient(&self.points[q]));
                    let rows = a.as_slice();
                    for i in 0..3 {
                        for c in 0..n {
                            local[i * n + c] = local[i * n + c]
                                + self.weights[q] * (rows[2 * c] * g[i][0] + rows[2 * c + 1] * g[i][1]);
                        }
                    }
                }
                local
            })
            .collect();
        self.scatter_vector(locals)
    }

    /// Load `ψ ↦ ∫ f·ψ`.
    pub fn source_load(&self, f: &(dyn Fn(&Point<T>) -> Vec<T> + Sync)) -> Vec<T> {
        let n = self.space.components();
        let locals: Vec<Vec<T>> = (0..self.num_cells())
            .into_par_iter()
            .map(|k| {
                let mut local = vec![T::zero(); 3 * n];
                for (qi, q) in self.qp(k).enumerate() {
                    let fx = f(&self.points[q]);
                    let bary = self.rule.bary[qi];
                    for i in 0..3 {
                        for c in 0..n {
                            local[i * n + c] = local[i * n + c] + self.weights[q] * fx[c] * bary[i];
                        }
                    }
                }
                local
            })
            .collect();
        self.scatter_vector(locals)
    }

    /// `‖F(·,∇v) − F(·,∇u)‖₂` with this assembler's exponent and `κ`.
    pub fn quasi_norm_distance(&self, v: &dyn FieldFunction<T>, u: &FeFunction<T>) -> T {
        let per_cell: Vec<T> = (0..self.num_cells())
            .into_par_iter()
            .map(|k| {
                let fu_xi = u.gradient(k);
                self.qp(k)
                    .map(|q| {
                        let rho = self.rho(q);
                        let d = flux_f(&rho, &v.gradient(&self.points[q])).sub(&flux_f(&rho, &fu_xi)).norm();
                        self.weights[q] * d * d
                    })
                    .sum()
            })
            .collect();
        per_cell.into_iter().sum::<T>().sqrt()
    }

    /// `‖F(·,∇u) − F(·,∇w)‖₂` for two discrete functions.
    pub fn quasi_norm_between(&self, u: &FeFunction<T>, w: &FeFunction<T>) -> T {
        let per_cell: Vec<T> = (0..self.num_cells())
            .into_par_iter()
            .map(|k| {
                let (gu, gw) = (u.gradient(k), w.gradient(k));
                self.qp(k)
                    .map(|q| {
                        let rho = self.rho(q);
                        let d = flux_f(&rho, &gu).sub(&flux_f(&rho, &gw)).norm();
                        self.weights[q] * d * d
                    })
                    .sum()
            })
            .collect();
        per_cell.into_iter().sum::<T>().sqrt()
    }
}

/// `max_K ‖∇u‖_{L∞(K)} / ⨍_K |∇u|`, with cells where `∇u = 0` counting as 1.
///
/// P1 gradients are cellwise constant, so this is 1 up to rounding.
pub fn inverse_estimate_check<T: Real>(u: &FeFunction<T>) -> T {
    let space = u.space();
    let rule = TriangleRule::<T>::of_degree(2);
    let mut worst = T::one();
    for k in 0..space.mesh().num_cells() {
        // a richer space would make the gradient vary over the rule points
        let g = u.gradient(k).norm();
        let samples = vec![g; rule.len()];
        let mean: T = samples.iter().zip(&rule.weights).map(|(&s, &w)| s * w).sum();
        let sup = samples.iter().copied().fold(T::zero(), T::max);
        if mean > T::zero() {
            worst = worst.max(sup / mean);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{ExponentField, ExponentKind};
    use crate::fem::{AffineField, SineProduct};
    use crate::geometry::Domain;
    use crate::mesh::Triangulation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(n: usize) -> Arc<FeSpace<f64>> {
        FeSpace::scalar(Arc::new(Triangulation::generate(Domain::UnitSquare, n).unwrap())).unwrap()
    }

    fn phi(p: f64, kappa: f64) -> PhiFamily<f64> {
        PhiFamily::integral(ExponentField::constant(p, Domain::UnitSquare).unwrap(), kappa).unwrap()
    }

    fn sine_phi(kappa: f64) -> PhiFamily<f64> {
        let p = ExponentField::new(
            ExponentKind::Sinusoidal { base: 2.0, amplitude: 0.5, frequency: 1.0 },
            Domain::UnitSquare,
        )
        .unwrap();
        PhiFamily::integral(p, kappa).unwrap()
    }

    fn random_free(s: &Arc<FeSpace<f64>>, seed: u64) -> FeFunction<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..s.num_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FeFunction::from_free(s, &v).unwrap()
    }

    // textbook P1 stiffness from edge vectors, over all vertices
    fn dense_stiffness(m: &Triangulation<f64>) -> Vec<Vec<f64>> {
        let n = m.num_vertices();
        let mut k = vec![vec![0.0; n]; n];
        for cell in m.cells() {
            let x: Vec<[f64; 2]> = cell.iter().map(|&v| m.vertices()[v]).collect();
            let area = 0.5 * ((x[1][0] - x[0][0]) * (x[2][1] - x[0][1]) - (x[2][0] - x[0][0]) * (x[1][1] - x[0][1]));
            let e: Vec<[f64; 2]> = (0..3)
                .map(|i| {
                    let (a, b) = (x[(i + 1) % 3], x[(i + 2) % 3]);
                    [b[0] - a[0], b[1] - a[1]]
                })
                .collect();
            for i in 0..3 {
                for j in 0..3 {
                    k[cell[i]][cell[j]] += (e[i][0] * e[j][0] + e[i][1] * e[j][1]) / (4.0 * area);
                }
            }
        }
        k
    }

    #[test]
    fn quadratic_operator_is_stiffness() {
        let s = space(5);
        let asm = Assembler::new(&s, &phi(2.0, 0.0), None, 4).unwrap();
        let k = dense_stiffness(s.mesh());
        let u = random_free(&s, 1);
        let au = asm.operator(&u);
        let stiff = asm.stiffness();
        let jac = asm.jacobian(&u).unwrap();
        let interior: Vec<usize> = (0..s.mesh().num_vertices()).filter(|&v| !s.mesh().is_boundary(v)).collect();
        for (fi, &vi) in interior.iter().enumerate() {
            let oracle: f64 = (0..s.mesh().num_vertices()).map(|vj| k[vi][vj] * u.coeffs()[vj]).sum();
            assert!((au[fi] - oracle).abs() < 1e-12, "{} vs {}", au[fi], oracle);
            for (fj, &vj) in interior.iter().enumerate() {
                assert!((stiff.get(fi, fj) - k[vi][vj]).abs() < 1e-12);
                assert!((jac.get(fi, fj) - k[vi][vj]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let s = space(4);
        for (ph, seed) in [(phi(3.0, 0.1), 2), (phi(1.5, 0.01), 3), (sine_phi(0.05), 4)] {
            let asm = Assembler::new(&s, &ph, None, 4).unwrap();
            let u = random_free(&s, seed);
            let jac = asm.jacobian(&u).unwrap();
            assert!(jac.asymmetry() < 1e-12);
            let h = 1e-6;
            for j in 0..s.num_free() {
                let mut e = vec![0.0; s.num_free()];
                e[j] = 1.0;
                let d = FeFunction::from_free(&s, &e).unwrap();
                let plus = asm.operator(&u.combine(1.0, &d, h));
                let minus = asm.operator(&u.combine(1.0, &d, -h));
                for i in 0..s.num_free() {
                    let fd = (plus[i] - minus[i]) / (2.0 * h);
                    assert!(
                        (jac.get(i, j) - fd).abs() < 1e-5 * (1.0 + fd.abs()),
                        "({i},{j}): {} vs {fd}",
                        jac.get(i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn operator_is_gradient_of_energy() {
        let s = space(4);
        let asm = Assembler::new(&s, &sine_phi(0.1), None, 4).unwrap();
        let u = random_free(&s, 5);
        let load = vec![0.3; s.num_free()];
        let r = asm.residual(&u, &load);
        let h = 1e-6;
        for j in 0..s.num_free() {
            let mut e = vec![0.0; s.num_free()];
            e[j] = 1.0;
            let d = FeFunction::from_free(&s, &e).unwrap();
            let fd =
                (asm.energy(&u.combine(1.0, &d, h), &load) - asm.energy(&u.combine(1.0, &d, -h), &load)) / (2.0 * h);
            assert!((r[j] - fd).abs() < 1e-6, "{} vs {fd}", r[j]);
        }
    }

    #[test]
    fn energy_difference_agrees_with_energies() {
        let s = space(4);
        let asm = Assembler::new(&s, &phi(2.5, 0.1), None, 4).unwrap();
        let load = vec![0.1; s.num_free()];
        let u0 = random_free(&s, 6);
        for scale in [1e-3, 0.05, 1.0] {
            let u1 = u0.combine(1.0, &random_free(&s, 7), scale);
            let d = asm.energy_difference(&u0, &u1, &load);
            let oracle = asm.energy(&u1, &load) - asm.energy(&u0, &load);
            assert!((d - oracle).abs() < 1e-10 * (1.0 + oracle.abs()), "{d} vs {oracle}");
        }
        assert_eq!(asm.energy_difference(&u0, &u0, &load), 0.0);
    }

    #[test]
    fn energy_difference_resolves_tiny_steps() {
        let s = space(4);
        let asm = Assembler::new(&s, &sine_phi(0.01), None, 4).unwrap();
        let load = vec![0.2; s.num_free()];
        let u0 = random_free(&s, 8);
        let d = random_free(&s, 9);
        let r = asm.residual(&u0, &load);
        let jd = asm.jacobian(&u0).unwrap().matvec(&d.free_values());
        for eps in [1e-6, 1e-9, 1e-12] {
            let u1 = u0.combine(1.0, &d, eps);
            let du: Vec<f64> = u1.free_values().iter().zip(u0.free_values()).map(|(a, b)| a - b).collect();
            // second-order Taylor model
            let lin: f64 = r.iter().zip(&du).map(|(a, b)| a * b).sum();
            let quad: f64 = jd.iter().zip(d.free_values()).map(|(a, b)| a * b).sum::<f64>() * 0.5 * eps * eps;
            let model = lin + quad;
            let got = asm.energy_difference(&u0, &u1, &load);
            assert!((got - model).abs() < 1e-4 * model.abs(), "eps={eps}: {got} vs {model}");
        }
    }

    #[test]
    fn operator_is_monotone() {
        let s = space(4);
        let asm = Assembler::new(&s, &sine_phi(0.0), None, 4).unwrap();
        for seed in 0..10 {
            let u = random_free(&s, 10 + seed);
            let w = random_free(&s, 30 + seed);
            let (au, aw) = (asm.operator(&u), asm.operator(&w));
            let d: f64 = au
                .iter()
                .zip(&aw)
                .zip(u.free_values().iter().zip(w.free_values()))
                .map(|((a, b), (x, y))| (a - b) * (x - y))
                .sum();
            assert!(d >= 0.0);
        }
    }

    #[test]
    fn affine_field_has_zero_load_for_constant_exponent() {
        let s = space(6);
        let v = AffineField { offset: vec![0.2], gradient: vec![[1.5, -0.7]] };
        for p in [1.5, 2.0, 3.0] {
            let asm = Assembler::new(&s, &phi(p, 1e-3), None, 4).unwrap();
            assert!(asm.manufactured_load(&v).iter().all(|b| b.abs() < 1e-13));
        }
    }

    #[test]
    fn quadratic_manufactured_load_is_weak_laplacian() {
        // for p = 2 the load of v is ∫∇v·∇ψ; compare with the −Δv source
        let s = space(8);
        let asm = Assembler::new(&s, &phi(2.0, 0.0), None, 7).unwrap();
        let v = SineProduct { frequency: 1.0 };
        let b = asm.manufactured_load(&v);
        let pi2 = std::f64::consts::PI.powi(2);
        let f = move |x: &Point<f64>| vec![2.0 * pi2 * v.value(x)[0]];
        let c = asm.source_load(&f);
        for (bi, ci) in b.iter().zip(&c) {
            assert!((bi - ci).abs() < 1e-6, "{bi} vs {ci}");
        }
    }

    #[test]
    fn unit_source_gives_patch_area_over_three() {
        let s = space(5);
        let asm = Assembler::new(&s, &phi(2.0, 0.0), None, 2).unwrap();
        let b = asm.source_load(&|_: &Point<f64>| vec![1.0]);
        let h2 = 1.0 / 25.0;
        // interior patches of the criss-cross-free grid hold six half squares
        for bi in &b {
            assert!((bi - h2).abs() < 1e-14);
        }
        let two = asm.source_load(&|_: &Point<f64>| vec![2.0]);
        assert!(b.iter().zip(&two).all(|(a, b)| (2.0 * a - b).abs() < 1e-15));
    }

    #[test]
    fn plain_power_scales_the_flux() {
        let s = space(3);
        let p = ExponentField::constant(3.0, Domain::UnitSquare).unwrap();
        let u = random_free(&s, 8);
        let plain = Assembler::new(&s, &PhiFamily::plain_power(p.clone()), None, 4).unwrap();
        let integral = Assembler::new(&s, &PhiFamily::integral(p, 0.0).unwrap(), None, 4).unwrap();
        let (a, b) = (plain.operator(&u), integral.operator(&u));
        assert!(a.iter().zip(&b).all(|(x, y)| (x - 3.0 * y).abs() < 1e-12));
        assert!((plain.internal_energy(&u) - 3.0 * integral.internal_energy(&u)).abs() < 1e-12);
    }

    #[test]
    fn frozen_assembler_uses_cell_values() {
        let s = space(4);
        let ph = sine_phi(0.0);
        let f = crate::fem::freeze(s.mesh(), ph.exponent(), 4).unwrap();
        let asm = Assembler::new(&s, &ph, Some(&f), 4).unwrap();
        let nq = asm.nq();
        for k in 0..s.mesh().num_cells() {
            assert!(asm.exponents()[k * nq..(k + 1) * nq].iter().all(|&p| p == f.value(k)));
        }
    }

    #[test]
    fn quasi_norm_of_interpolant_shrinks() {
        let v = SineProduct { frequency: 1.0 };
        let mut last = f64::INFINITY;
        for n in [4, 8, 16] {
            let s = space(n);
            let asm = Assembler::new(&s, &phi(3.0, 0.0), None, 4).unwrap();
            let u = FeFunction::nodal(&s, |x| v.value(x));
            let e = asm.quasi_norm_distance(&v, &u);
            assert!(e < last);
            assert_eq!(asm.quasi_norm_between(&u, &u), 0.0);
            last = e;
        }
    }

    #[test]
    fn inverse_estimate_is_trivial_for_p1() {
        let s = space(4);
        let u = random_free(&s, 9);
        assert!((inverse_estimate_check(&u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unknown_degree() {
        let s = space(2);
        assert!(Assembler::new(&s, &phi(2.0, 0.0), None, 9).is_err());
    }
}
