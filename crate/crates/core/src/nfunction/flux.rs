use crate::errors::{Error, Result};
use crate::scalar::{dot, frobenius, Real};

use super::PowerNFunction;

/// Gradient-shaped quantity: an `N × 2` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T: Real> {
    rows: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(rows: usize) -> Self {
        Self { rows, data: vec![T::zero(); 2 * rows] }
    }

    /// A single-component gradient.
    pub fn vector(v: [T; 2]) -> Self {
        Self { rows: 1, data: v.to_vec() }
    }

    pub fn from_rows(rows: &[[T; 2]]) -> Self {
        Self { rows: rows.len(), data: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    pub fn from_flat(rows: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != 2 * rows {
            return Err(Error::Argument(format!("expected {} entries, got {}", 2 * rows, data.len())));
        }
        Ok(Self { rows, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn norm(&self) -> T {
        frobenius(&self.data)
    }

    pub fn dot(&self, other: &Self) -> T {
        dot(&self.data, &other.data)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { rows: self.rows, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect() }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { rows: self.rows, data: self.data.iter().map(|&a| a * s).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `ρ'(|ξ|)/|ξ| · ξ`, zero at `ξ = 0`.
pub fn flux_a<T: Real>(rho: &PowerNFunction<T>, xi: &Tensor<T>) -> Tensor<T> {
    let n = xi.norm();
    if n == T::zero() {
        return Tensor::zeros(xi.rows);
    }
    xi.scaled(rho.deriv_over_t(n))
}

/// `(ρ'(|ξ|)/|ξ|)^{1/2} · ξ`, zero at `ξ = 0`.
pub fn flux_f<T: Real>(rho: &PowerNFunction<T>, xi: &Tensor<T>) -> Tensor<T> {
    let n = xi.norm();
    if n == T::zero() {
        return Tensor::zeros(xi.rows);
    }
    xi.scaled(rho.deriv_over_t(n).sqrt())
}

/// `DA(ξ) = c₀·Id + c₁·ξ⊗ξ` as a linear map on gradient-shaped tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMap<T: Real> {
    pub identity_coeff: T,
    pub rank_one_coeff: T,
    pub xi: Vec<T>,
}

impl<T: Real> JacobianMap<T> {
    pub fn apply(&self, w: &[T]) -> Vec<T> {
        let proj = self.rank_one_coeff * dot(&self.xi, w);
        w.iter().zip(&self.xi).map(|(&wi, &x)| self.identity_coeff * wi + proj * x).collect()
    }

    /// Dense `2N × 2N` matrix.
    pub fn to_matrix(&self) -> Vec<Vec<T>> {
        let d = self.xi.len();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let id = if i == j { self.identity_coeff } else { T::zero() };
                        id + self.rank_one_coeff * self.xi[i] * self.xi[j]
                    })
                    .collect()
            })
            .collect()
    }

    /// Eigenvalues are `c₀` (multiplicity `2N−1`) and `c₀ + c₁|ξ|²`.
    pub fn min_eigenvalue(&self) -> T {
        let along = self.identity_coeff + self.rank_one_coeff * dot(&self.xi, &self.xi);
        if self.xi.len() > 1 {
            along.min(self.identity_coeff)
        } else {
            along
        }
    }
}

/// Derivative of [`flux_a`]:
/// `DA(ξ) = ρ'(|ξ|)/|ξ|·Id + (ρ''(|ξ|) − ρ'(|ξ|)/|ξ|)·ξ⊗ξ/|ξ|²`,
/// which for `ρ' = (κ+t)^{p−2}t` is
/// `(κ+|ξ|)^{p−2} Id + (p−2)(κ+|ξ|)^{p−3} ξ⊗ξ/|ξ|`.
pub fn flux_a_jacobian<T: Real>(rho: &PowerNFunction<T>, xi: &Tensor<T>) -> Result<JacobianMap<T>> {
    let n = xi.norm();
    let base = rho.kappa + n;
    if base == T::zero() && rho.p < T::lit(2.0) {
        return Err(Error::Singular("DA is unbounded at ξ = 0 with κ = 0 and p < 2".into()));
    }
    let c0 = rho.deriv_over_t(n);
    let c1 =
        if n == T::zero() { T::zero() } else { rho.scale * (rho.p - T::lit(2.0)) * base.powf(rho.p - T::lit(3.0)) / n };
    Ok(JacobianMap { identity_coeff: c0, rank_one_coeff: c1, xi: xi.as_slice().to_vec() })
}

/// The three equivalence ratios of the monotonicity lemma:
/// `(A(P)−A(Q))·(P−Q)` divided by `|F(P)−F(Q)|²`, by `ρ_{|P|}(|P−Q|)`
/// and by `ρ''(|P|+|Q|)|P−Q|²`.
pub fn hammer_ratios<T: Real>(rho: &PowerNFunction<T>, p: &Tensor<T>, q: &Tensor<T>) -> Result<[T; 3]> {
    let diff = p.sub(q);
    let d = diff.norm();
    if d == T::zero() {
        return Err(Error::Argument("hammer ratios need P ≠ Q".into()));
    }
    let num = flux_a(rho, p).sub(&flux_a(rho, q)).dot(&diff);
    let f_diff = flux_f(rho, p).sub(&flux_f(rho, q)).norm();
    let shifted = rho.shifted(p.norm()).value(d);
    let second = rho.second_deriv(p.norm() + q.norm()) * d * d;
    Ok([num / (f_diff * f_diff), num / shifted, num / second])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rho(p: f64, kappa: f64) -> PowerNFunction<f64> {
        PowerNFunction::new(1.0, kappa, p)
    }

    #[test]
    fn flux_at_p_two_is_identity() {
        let xi = Tensor::vector([3.0, 4.0]);
        assert_eq!(flux_a(&rho(2.0, 0.3), &xi), xi);
        assert_eq!(flux_f(&rho(2.0, 0.0), &xi), xi);
    }

    #[test]
    fn flux_vanishes_at_zero() {
        let z = Tensor::vector([0.0, 0.0]);
        assert_eq!(flux_a(&rho(1.5, 0.0), &z), z);
        assert_eq!(flux_f(&rho(1.5, 0.0), &z), z);
    }

    #[test]
    fn quartic_flux_values() {
        let xi = Tensor::vector([0.0, 2.0]);
        assert_eq!(flux_a(&rho(4.0, 0.0), &xi).as_slice(), &[0.0, 8.0]);
        assert_eq!(flux_f(&rho(4.0, 0.0), &xi).as_slice(), &[0.0, 4.0]);
        // |F|² = A·ξ
        let a = flux_a(&rho(4.0, 0.0), &xi);
        let f = flux_f(&rho(4.0, 0.0), &xi);
        assert_relative_eq!(f.dot(&f), a.dot(&xi), max_relative = 1e-15);
    }

    #[test]
    fn flux_is_gradient_of_energy_density() {
        // A(ξ) = ∇_ξ ρ(|ξ|), checked by central differences
        for &(p, kappa) in &[(4.0, 0.0), (1.5, 1e-3), (2.7, 0.5)] {
            let r = rho(p, kappa);
            let xi = [0.7, -1.3];
            let a = flux_a(&r, &Tensor::vector(xi));
            let h = 1e-6;
            for k in 0..2 {
                let mut up = xi;
                let mut dn = xi;
                up[k] += h;
                dn[k] -= h;
                let fd = (r.value(up[0].hypot(up[1])) - r.value(dn[0].hypot(dn[1]))) / (2.0 * h);
                assert_relative_eq!(a.as_slice()[k], fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn jacobian_quartic_is_diag_three_one() {
        let j = flux_a_jacobian(&rho(4.0, 0.0), &Tensor::vector([1.0, 0.0])).unwrap();
        let m = j.to_matrix();
        assert_relative_eq!(m[0][0], 3.0, epsilon = 1e-15);
        assert_relative_eq!(m[1][1], 1.0, epsilon = 1e-15);
        assert_eq!(m[0][1], 0.0);
    }

    #[test]
    fn jacobian_is_identity_at_p_two() {
        for xi in [[0.0, 0.0], [1.0, -2.0]] {
            let j = flux_a_jacobian(&rho(2.0, 0.0), &Tensor::vector(xi)).unwrap();
            assert_eq!(j.to_matrix(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        }
    }

    #[test]
    fn jacobian_singular_point() {
        let err = flux_a_jacobian(&rho(1.5, 0.0), &Tensor::vector([0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::Singular(_)));
        assert!(flux_a_jacobian(&rho(1.5, 1e-7), &Tensor::vector([0.0, 0.0])).is_ok());
    }

    #[test]
    fn hammer_ratios_at_p_two() {
        let r = hammer_ratios(&rho(2.0, 0.0), &Tensor::vector([1.0, 2.0]), &Tensor::vector([-0.5, 0.3])).unwrap();
        assert_relative_eq!(r[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(r[1], 2.0, epsilon = 1e-15);
        assert_relative_eq!(r[2], 1.0, epsilon = 1e-15);
        assert!(hammer_ratios(&rho(2.0, 0.0), &Tensor::vector([1.0, 2.0]), &Tensor::vector([1.0, 2.0])).is_err());
    }

    #[test]
    fn hammer_ratios_cubic_unit_step() {
        let r = hammer_ratios(&rho(3.0, 0.0), &Tensor::vector([1.0, 0.0]), &Tensor::vector([0.0, 0.0])).unwrap();
        for v in r {
            assert!((1e-2..=1e2).contains(&v), "{r:?}");
        }
    }
}
