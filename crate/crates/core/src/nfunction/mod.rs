//! The x-dependent N-function `φ(x,t) = ∫₀ᵗ (κ+s)^{p(x)−2} s ds`, its
//! shifts and conjugates, the flux tensors `A` and `F`, and empirical
//! checks of the standard shifted-N-function equivalences.

mod flux;
pub mod probes;

pub use flux::{flux_a, flux_a_jacobian, flux_f, hammer_ratios, JacobianMap, Tensor};

use crate::errors::{Error, Result};
use crate::exponent::ExponentField;
use crate::numeric::{golden_section_max, integrate, invert_increasing};
use crate::scalar::{Point, Real};

/// `ρ(t) = scale·∫₀ᵗ (κ+s)^{p−2} s ds` for a single exponent `p`.
///
/// The family is closed under shifts: `ρ_a` is the same function with
/// `κ` replaced by `κ + a`. The plain power `t^p` is `scale = p, κ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerNFunction<T: Real> {
    pub scale: T,
    pub kappa: T,
    pub p: T,
}

impl<T: Real> PowerNFunction<T> {
    pub fn new(scale: T, kappa: T, p: T) -> Self {
        Self { scale, kappa, p }
    }

    /// `t ↦ t^p`.
    pub fn plain_power(p: T) -> Self {
        Self { scale: p, kappa: T::zero(), p }
    }

    /// The shifted function `ρ_a`.
    pub fn shifted(&self, a: T) -> Self {
        Self { kappa: self.kappa + a, ..*self }
    }

    pub fn value(&self, t: T) -> T {
        self.scale * power_integral(self.kappa, self.p, t)
    }

    pub fn deriv(&self, t: T) -> T {
        if t == T::zero() {
            return T::zero();
        }
        self.scale * (self.kappa + t).powf(self.p - T::lit(2.0)) * t
    }

    /// `ρ'(t)/t`, extended continuously to `t = 0` where finite.
    pub fn deriv_over_t(&self, t: T) -> T {
        let base = self.kappa + t;
        if base == T::zero() {
            return self.limit_at_origin();
        }
        self.scale * base.powf(self.p - T::lit(2.0))
    }

    pub fn second_deriv(&self, t: T) -> T {
        let base = self.kappa + t;
        if base == T::zero() {
            return self.limit_at_origin();
        }
        self.scale * base.powf(self.p - T::lit(3.0)) * (self.kappa + (self.p - T::one()) * t)
    }

    fn limit_at_origin(&self) -> T {
        let two = T::lit(2.0);
        if self.p < two {
            T::infinity()
        } else if self.p == two {
            self.scale
        } else {
            T::zero()
        }
    }

    /// Lower and upper index: `min(2,p) ≤ tρ'(t)/ρ(t) ≤ max(2,p)`.
    pub fn indices(&self) -> (T, T) {
        let two = T::lit(2.0);
        (self.p.min(two), self.p.max(two))
    }

    /// Convex conjugate `ρ*(t) = sup_{s≥0} (st − ρ(s))`.
    pub fn conjugate(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        if self.kappa == T::zero() {
            // ρ(s) = scale·s^p/p, maximiser s = (t/scale)^{1/(p−1)}
            let s = (t / self.scale).powf(T::one() / (self.p - T::one()));
            return s * t * (T::one() - T::one() / self.p);
        }
        let mut hi = T::one();
        let mut guard = 0;
        while self.deriv(hi) < t && guard < 2000 {
            hi = hi * T::lit(2.0);
            guard += 1;
        }
        let (_, v) = golden_section_max(|s| s * t - self.value(s), T::zero(), hi, T::lit(1e-10));
        v.max(T::zero())
    }

    /// `(ρ*)'(u) = (ρ')^{-1}(u)`.
    pub fn conjugate_deriv(&self, u: T) -> T {
        invert_increasing(|s| self.deriv(s), u)
    }
}

/// `∫₀ᵗ (c+s)^{p−2} s ds` in closed form, with a binomial series where the
/// closed form cancels.
pub fn power_integral<T: Real>(c: T, p: T, t: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    let one = T::one();
    if c == T::zero() {
        return t.powf(p) / p;
    }
    let r = t / c;
    if r < T::lit(0.25) {
        // c^p Σ_k C(p−2,k) r^{k+2}/(k+2)
        let q = p - T::lit(2.0);
        let mut binom = one;
        let mut rk = r * r;
        let mut sum = T::zero();
        for k in 0..400 {
            let kk = T::from_usize_lossy(k);
            let term = binom * rk / (kk + T::lit(2.0));
            sum = sum + term;
            if term.abs() <= T::epsilon() * sum.abs() * T::lit(0.25) {
                break;
            }
            binom = binom * (q - kk) / (kk + one);
            rk = rk * r;
        }
        return c.powf(p) * sum;
    }
    let ct = c + t;
    (ct.powf(p) - c.powf(p)) / p - c * (ct.powf(p - one) - c.powf(p - one)) / (p - one)
}

/// `∫₀ᵗ ρ'(a+τ)/(a+τ)·τ dτ` for an arbitrary derivative, by adaptive
/// quadrature. Used for shifts of functions outside the closed family.
pub fn shift_by_quadrature<T: Real, D: Fn(T) -> T>(deriv: D, a: T, t: T, rel_tol: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    integrate(
        |tau| {
            let s = a + tau;
            if s == T::zero() {
                T::zero()
            } else {
                deriv(s) / s * tau
            }
        },
        T::zero(),
        t,
        rel_tol,
    )
}

/// Which x-dependent N-function a family describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `φ(x,t) = ∫₀ᵗ (κ+s)^{p(x)−2} s ds`.
    Integral,
    /// `ψ(x,t) = t^{p(x)}`; `κ` is ignored.
    PlainPower,
}

/// An exponent field together with `κ` and the choice of N-function.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiFamily<T: Real> {
    exponent: ExponentField<T>,
    kappa: T,
    variant: Variant,
}

impl<T: Real> PhiFamily<T> {
    pub fn new(exponent: ExponentField<T>, kappa: T, variant: Variant) -> Result<Self> {
        if !(kappa >= T::zero() && kappa <= T::one()) {
            return Err(Error::Argument(format!("kappa must lie in [0,1] (got {kappa})")));
        }
        Ok(Self { exponent, kappa, variant })
    }

    pub fn integral(exponent: ExponentField<T>, kappa: T) -> Result<Self> {
        Self::new(exponent, kappa, Variant::Integral)
    }

    pub fn plain_power(exponent: ExponentField<T>) -> Self {
        Self { exponent, kappa: T::zero(), variant: Variant::PlainPower }
    }

    pub fn exponent(&self) -> &ExponentField<T> {
        &self.exponent
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Same exponent and variant with a different `κ`; used for solver-level
    /// regularisation.
    pub fn with_kappa(&self, kappa: T) -> Self {
        Self { kappa, ..self.clone() }
    }

    /// The one-dimensional N-function for a given exponent value.
    pub fn for_exponent(&self, p: T) -> PowerNFunction<T> {
        match self.variant {
            Variant::Integral => PowerNFunction::new(T::one(), self.kappa, p),
            Variant::PlainPower => PowerNFunction::plain_power(p),
        }
    }

    /// The one-dimensional N-function `φ(x,·)`.
    pub fn at(&self, x: &Point<T>) -> Result<PowerNFunction<T>> {
        Ok(self.for_exponent(self.exponent.eval(x)?))
    }

    /// `φ(x,t)`.
    pub fn phi(&self, x: &Point<T>, t: T) -> Result<T> {
        check_nonneg("t", t)?;
        Ok(self.at(x)?.value(t))
    }

    /// `φ_a(x,t)`.
    pub fn phi_shifted(&self, x: &Point<T>, a: T, t: T) -> Result<T> {
        check_nonneg("a", a)?;
        check_nonneg("t", t)?;
        Ok(self.at(x)?.shifted(a).value(t))
    }

    /// `(φ_a)*(x,t)`.
    pub fn phi_conjugate(&self, x: &Point<T>, a: T, t: T) -> Result<T> {
        check_nonneg("a", a)?;
        check_nonneg("t", t)?;
        Ok(self.at(x)?.shifted(a).conjugate(t))
    }

    /// `A(x,ξ) = φ'(x,|ξ|)/|ξ|·ξ`; for the integral variant this is
    /// `(κ+|ξ|)^{p(x)−2} ξ`.
    pub fn flux_a(&self, x: &Point<T>, xi: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(flux_a(&self.at(x)?, xi))
    }

    /// `F(x,ξ) = (φ'(x,|ξ|)/|ξ|)^{1/2} ξ`.
    pub fn flux_f(&self, x: &Point<T>, xi: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(flux_f(&self.at(x)?, xi))
    }

    pub fn flux_a_jacobian(&self, x: &Point<T>, xi: &Tensor<T>) -> Result<JacobianMap<T>> {
        flux_a_jacobian(&self.at(x)?, xi)
    }

    pub fn hammer_ratios(&self, x: &Point<T>, p: &Tensor<T>, q: &Tensor<T>) -> Result<[T; 3]> {
        hammer_ratios(&self.at(x)?, p, q)
    }

    /// `δ·φ_a(s) + c_δ·(φ_a)*(t) − st` with `c_δ` from [`young_constant`].
    pub fn young_gap(&self, x: &Point<T>, a: T, s: T, t: T, delta: T) -> Result<T> {
        check_nonneg("a", a)?;
        check_nonneg("s", s)?;
        check_nonneg("t", t)?;
        if !(delta > T::zero()) {
            return Err(Error::Argument("delta must be positive".into()));
        }
        let rho = self.at(x)?.shifted(a);
        Ok(young_gap(&rho, s, t, delta))
    }
}

fn check_nonneg<T: Real>(name: &str, v: T) -> Result<()> {
    if v >= T::zero() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} must be non-negative (got {v})")))
    }
}

/// Constant in `st ≤ δρ(s) + c_δ ρ*(t)`.
///
/// With `2^k ≥ 1/δ`: `st = (δs)(t/δ) ≤ ρ(δs) + ρ*(2^k t) ≤ δρ(s) + Δ₂(ρ*)^k ρ*(t)`,
/// and `Δ₂(ρ*) ≤ 2^{max(2,p')}` from the index bounds.
pub fn young_constant<T: Real>(rho: &PowerNFunction<T>, delta: T) -> T {
    if delta >= T::one() {
        return T::one();
    }
    let two = T::lit(2.0);
    let p_conj = rho.p / (rho.p - T::one());
    let delta2 = two.powf(p_conj.max(two));
    let k = (T::one() / delta).log2().ceil();
    delta2.powf(k)
}

pub fn young_gap<T: Real>(rho: &PowerNFunction<T>, s: T, t: T, delta: T) -> T {
    let c = young_constant(rho, delta);
    delta * rho.value(s) + c * rho.conjugate(t) - s * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use approx::assert_relative_eq;

    fn fam(p: f64, kappa: f64) -> PhiFamily<f64> {
        PhiFamily::integral(ExponentField::constant(p, Domain::UnitSquare).unwrap(), kappa).unwrap()
    }

    const X: [f64; 2] = [0.3, 0.4];

    #[test]
    fn phi_closed_forms() {
        assert_relative_eq!(fam(2.0, 0.7).phi(&X, 3.0).unwrap(), 4.5, max_relative = 1e-14);
        assert_relative_eq!(fam(3.0, 0.0).phi(&X, 2.0).unwrap(), 8.0 / 3.0, max_relative = 1e-14);
        assert_eq!(fam(1.7, 0.2).phi(&X, 0.0).unwrap(), 0.0);
        assert!(fam(2.0, 0.0).phi(&X, -1.0).is_err());
    }

    #[test]
    fn phi_matches_quadrature_across_regimes() {
        for &p in &[1.2, 1.5, 2.0, 2.7, 4.0] {
            for &kappa in &[0.0, 1e-7, 1e-3, 0.5, 1.0] {
                for &t in &[1e-9, 1e-4, 0.01, 0.2, 1.0, 7.5] {
                    let exact = power_integral(kappa, p, t);
                    let quad = integrate(|s: f64| (kappa + s).powf(p - 2.0) * s, 0.0, t, 1e-13);
                    assert_relative_eq!(exact, quad, max_relative = 1e-11);
                }
            }
        }
    }

    #[test]
    fn shifted_values() {
        assert_relative_eq!(fam(2.0, 0.0).phi_shifted(&X, 7.0, 3.0).unwrap(), 4.5, max_relative = 1e-14);
        assert_relative_eq!(fam(3.0, 0.0).phi_shifted(&X, 1.0, 1.0).unwrap(), 5.0 / 6.0, max_relative = 1e-14);
        let f = fam(2.4, 0.1);
        for &t in &[0.0, 0.3, 2.0] {
            assert_eq!(f.phi_shifted(&X, 0.0, t).unwrap(), f.phi(&X, t).unwrap());
        }
        assert!(f.phi_shifted(&X, -0.1, 1.0).is_err());
    }

    #[test]
    fn closed_shift_matches_defining_integral() {
        for &p in &[1.5, 2.0, 3.0] {
            for &kappa in &[0.0, 1e-3] {
                let rho = PowerNFunction::new(1.0, kappa, p);
                for &a in &[0.0, 0.1, 2.0] {
                    for &t in &[0.05, 1.0, 3.0] {
                        let quad = shift_by_quadrature(|s| rho.deriv(s), a, t, 1e-13);
                        assert_relative_eq!(rho.shifted(a).value(t), quad, max_relative = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn conjugate_values() {
        assert_relative_eq!(fam(2.0, 0.0).phi_conjugate(&X, 0.0, 4.0).unwrap(), 8.0, max_relative = 1e-14);
        assert_eq!(fam(2.5, 0.3).phi_conjugate(&X, 0.2, 0.0).unwrap(), 0.0);
        assert_relative_eq!(fam(3.0, 0.0).phi_conjugate(&X, 0.0, 1.0).unwrap(), 2.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn numeric_conjugate_matches_brute_force() {
        let rho = PowerNFunction::new(1.0, 0.2, 1.7);
        for &t in &[0.05, 0.5, 3.0] {
            let brute = (0..200_000)
                .map(|i| {
                    let s = i as f64 * 1e-4;
                    s * t - rho.value(s)
                })
                .fold(f64::MIN, f64::max);
            assert_relative_eq!(rho.conjugate(t), brute, max_relative = 1e-6);
        }
    }

    #[test]
    fn plain_power_is_t_to_the_p() {
        let psi = PowerNFunction::plain_power(2.6);
        assert_relative_eq!(psi.value(1.7), 1.7f64.powf(2.6), max_relative = 1e-14);
        assert_relative_eq!(psi.second_deriv(1.7), 2.6 * 1.6 * 1.7f64.powf(0.6), max_relative = 1e-14);
    }

    #[test]
    fn ellipticity_ratio_within_characteristics() {
        for &p in &[1.3f64, 1.5, 2.0, 3.0, 5.0] {
            for &kappa in &[0.0, 1e-3, 1.0] {
                let rho = PowerNFunction::new(1.0, kappa, p);
                // t ρ''/ρ' = 1 + (p−2)t/(κ+t) lies between min(1,p−1) and max(1,p−1)
                let lo = 1.0 / (p - 1.0).max(1.0);
                let hi = 1.0 / (p - 1.0).min(1.0);
                let loose = ((p - 1.0).min(1.0) / 2.0, 2.0 * (p - 1.0).max(1.0));
                for k in -30..30 {
                    let t = 10f64.powf(k as f64 / 5.0);
                    let r = rho.deriv(t) / (t * rho.second_deriv(t));
                    assert!(r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12), "p={p} kappa={kappa} t={t} r={r}");
                    if (1.5..=3.0).contains(&p) {
                        assert!(r >= loose.0 && r <= loose.1 * (1.0 + 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn young_gap_quadratic() {
        let f = fam(2.0, 0.0);
        assert!(f.young_gap(&X, 0.0, 0.0, 3.0, 0.5).unwrap() >= 0.0);
        assert!(f.young_gap(&X, 0.0, 2.0, 1.0, 0.5).unwrap() >= 0.0);
        assert!(f.young_gap(&X, 0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn kappa_outside_unit_interval_rejected() {
        let e = ExponentField::constant(2.0, Domain::UnitSquare).unwrap();
        assert!(PhiFamily::integral(e.clone(), 1.5).is_err());
        assert!(PhiFamily::integral(e, -0.1).is_err());
    }
}
