//! Modulars and Luxemburg norms on `L^{p(·)}`, and empirical constants for
//! the variable-exponent key estimates and the shifted Poincaré inequality.
//!
//! Every integral is a midpoint lattice sum, and the suprema over `x ∈ Q`
//! are taken over the same lattice.

use rand::Rng;

use crate::errors::{Error, Result};
use crate::exponent::ExponentField;
use crate::nfunction::PowerNFunction;
use crate::scalar::{Point, Real};

/// Default lattice resolution per cube side.
pub const DEFAULT_RESOLUTION: usize = 64;

/// Axis-parallel square `corner + [0, side]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube<T: Real> {
    pub corner: Point<T>,
    pub side: T,
}

impl<T: Real> Cube<T> {
    pub fn new(corner: Point<T>, side: T) -> Result<Self> {
        if !(side > T::zero()) {
            return Err(Error::Argument(format!("cube side must be positive (got {side})")));
        }
        Ok(Self { corner, side })
    }

    pub fn unit() -> Self {
        Self { corner: [T::zero(); 2], side: T::one() }
    }

    /// The dyadic cube of side `2^{-k}` containing `x`, clamped to `[0,1]²`.
    pub fn dyadic_containing(k: u32, x: &Point<T>) -> Self {
        let side = T::lit(0.5f64.powi(k as i32));
        let cells = T::lit(2f64.powi(k as i32));
        let snap = |c: T| {
            let i = (c / side).floor().max(T::zero()).min(cells - T::one());
            i * side
        };
        Self { corner: [snap(x[0]), snap(x[1])], side }
    }

    pub fn measure(&self) -> T {
        self.side * self.side
    }

    pub fn center(&self) -> Point<T> {
        let h = T::lit(0.5) * self.side;
        [self.corner[0] + h, self.corner[1] + h]
    }

    /// Midpoints of a `res × res` lattice and the common cell measure.
    pub fn lattice(&self, res: usize) -> (Vec<Point<T>>, T) {
        let h = self.side / T::from_usize_lossy(res);
        let half = T::lit(0.5);
        let mut pts = Vec::with_capacity(res * res);
        for j in 0..res {
            for i in 0..res {
                pts.push([
                    self.corner[0] + (T::from_usize_lossy(i) + half) * h,
                    self.corner[1] + (T::from_usize_lossy(j) + half) * h,
                ]);
            }
        }
        (pts, h * h)
    }
}

/// Sampled values (and optionally gradients) with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T: Real> {
    points: Vec<Point<T>>,
    weights: Vec<T>,
    values: Vec<T>,
    gradients: Option<Vec<[T; 2]>>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(points: Vec<Point<T>>, weights: Vec<T>, values: Vec<T>) -> Result<Self> {
        if points.len() != weights.len() || points.len() != values.len() {
            return Err(Error::Argument("points, weights and values must have equal length".into()));
        }
        if weights.iter().any(|&w| !(w > T::zero())) {
            return Err(Error::Argument("cell measures must be positive".into()));
        }
        Ok(Self { points, weights, values, gradients: None })
    }

    /// Samples `f` on the midpoint lattice of `cube`.
    pub fn sample(cube: &Cube<T>, res: usize, f: impl Fn(&Point<T>) -> T) -> Self {
        let (points, w) = cube.lattice(res);
        let values = points.iter().map(&f).collect();
        Self { weights: vec![w; points.len()], points, values, gradients: None }
    }

    /// Samples `u` and `∇u` on the midpoint lattice of `cube`.
    pub fn sample_with_gradient(cube: &Cube<T>, res: usize, u: impl Fn(&Point<T>) -> (T, [T; 2])) -> Self {
        let (points, w) = cube.lattice(res);
        let (values, grads): (Vec<T>, Vec<[T; 2]>) = points.iter().map(u).unzip();
        Self { weights: vec![w; points.len()], points, values, gradients: Some(grads) }
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn gradients(&self) -> Option<&[[T; 2]]> {
        self.gradients.as_deref()
    }

    pub fn measure(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| v * s).collect(),
            gradients: self.gradients.as_ref().map(|g| g.iter().map(|d| [d[0] * s, d[1] * s]).collect()),
            ..self.clone()
        }
    }

    /// `∫ g(x, f(x)) dx`.
    pub fn integrate(&self, g: impl Fn(&Point<T>, T) -> T) -> T {
        self.points.iter().zip(&self.weights).zip(&self.values).map(|((x, &w), &v)| w * g(x, v)).sum()
    }

    /// `⨍ |f|`.
    pub fn mean_abs(&self) -> T {
        self.integrate(|_, v| v.abs()) / self.measure()
    }

    fn mean_grad_abs(&self) -> Result<T> {
        let g = self.require_gradients()?;
        let total: T = g.iter().zip(&self.weights).map(|(d, &w)| w * d[0].hypot(d[1])).sum();
        Ok(total / self.measure())
    }

    fn require_gradients(&self) -> Result<&[[T; 2]]> {
        self.gradients.as_deref().ok_or_else(|| Error::Argument("grid function carries no gradient".into()))
    }
}

/// `∫ |f(x)|^{p(x)} dx`.
pub fn modular<T: Real>(f: &GridFunction<T>, p: &ExponentField<T>) -> T {
    f.integrate(|x, v| if v == T::zero() { T::zero() } else { v.abs().powf(p.eval_unchecked(x)) })
}

/// `inf{λ > 0 : ∫ |f/λ|^{p(x)} ≤ 1}`, by bisection in `log λ`.
pub fn luxemburg_norm<T: Real>(f: &GridFunction<T>, p: &ExponentField<T>) -> T {
    let exps: Vec<T> = f.points.iter().map(|x| p.eval_unchecked(x)).collect();
    let modular_at = |lambda: T| -> T {
        f.values
            .iter()
            .zip(&f.weights)
            .zip(&exps)
            .map(|((&v, &w), &q)| if v == T::zero() { T::zero() } else { w * (v.abs() / lambda).powf(q) })
            .sum()
    };
    if modular_at(T::one()) == T::zero() {
        return T::zero();
    }
    let two = T::lit(2.0);
    let (mut lo, mut hi) = (T::one(), T::one());
    while modular_at(lo) <= T::one() {
        lo = lo / two;
    }
    while modular_at(hi) > T::one() {
        hi = hi * two;
    }
    // modular(lo) > 1 ≥ modular(hi)
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let m = modular_at(mid);
        if m > T::one() {
            lo = mid;
        } else {
            hi = mid;
        }
        if (m - T::one()).abs() <= T::lit(1e-13) {
            return mid;
        }
    }
    hi
}

fn check_cube<T: Real>(cube: &Cube<T>) -> Result<()> {
    if cube.side > T::one() {
        return Err(Error::Precondition(format!("cube side {} exceeds 1", cube.side)));
    }
    Ok(())
}

fn admissibility_bound<T: Real>(cube: &Cube<T>, m: T) -> T {
    T::one().max(cube.measure().powf(-m))
}

fn shifted_power<T: Real>(p: T, a: T) -> PowerNFunction<T> {
    PowerNFunction::plain_power(p).shifted(a)
}

/// Smallest `c₁` with `(⨍_Q|f|)^{p(x)} ≤ c₁ ⨍_Q |f|^{p(y)} dy + c₁|Q|^m`
/// over lattice points `x ∈ Q`.
pub fn key_estimate_probe<T: Real>(p: &ExponentField<T>, cube: &Cube<T>, f: &GridFunction<T>, m: T) -> Result<T> {
    check_cube(cube)?;
    let mean = f.mean_abs();
    if mean > admissibility_bound(cube, m) {
        return Err(Error::Precondition(format!("mean |f| = {mean} is not admissible")));
    }
    let rhs = modular(f, p) / f.measure() + cube.measure().powf(m);
    let lhs = f.points.iter().map(|x| mean.powf(p.eval_unchecked(x))).fold(T::zero(), T::max);
    Ok(lhs / rhs)
}

/// As [`key_estimate_probe`] for `φ_a(x,t)`, the shift of `t^{p(x)}`.
pub fn shifted_key_probe<T: Real>(p: &ExponentField<T>, cube: &Cube<T>, f: &GridFunction<T>, a: T, m: T) -> Result<T> {
    check_cube(cube)?;
    let mean = f.mean_abs();
    if a < T::zero() || a + mean > admissibility_bound(cube, m) {
        return Err(Error::Precondition(format!("a + mean |f| = {} is not admissible", a + mean)));
    }
    let mean_phi = f.integrate(|x, v| shifted_power(p.eval_unchecked(x), a).value(v.abs())) / f.measure();
    let rhs = mean_phi + cube.measure().powf(m);
    let lhs = f.points.iter().map(|x| shifted_power(p.eval_unchecked(x), a).value(mean)).fold(T::zero(), T::max);
    Ok(lhs / rhs)
}

/// Smallest `c` with
/// `∫_Q φ_a(x, |u−⟨u⟩_Q|/ℓ(Q)) ≤ c ∫_Q φ_a(x, |∇u|) + c|Q|^m`.
pub fn poincare_shift_probe<T: Real>(
    p: &ExponentField<T>,
    cube: &Cube<T>,
    u: &GridFunction<T>,
    a: T,
    m: T,
) -> Result<T> {
    check_cube(cube)?;
    let grads = u.require_gradients()?;
    let mean_grad = u.mean_grad_abs()?;
    if a < T::zero() || a + mean_grad > admissibility_bound(cube, m) {
        return Err(Error::Precondition(format!("a + mean |∇u| = {} is not admissible", a + mean_grad)));
    }
    let avg = u.integrate(|_, v| v) / u.measure();
    let mut lhs = T::zero();
    let mut rhs = T::zero();
    for ((x, &w), (&v, g)) in u.points.iter().zip(&u.weights).zip(u.values.iter().zip(grads)) {
        let phi = shifted_power(p.eval_unchecked(x), a);
        lhs = lhs + w * phi.value((v - avg).abs() / cube.side);
        rhs = rhs + w * phi.value(g[0].hypot(g[1]));
    }
    Ok(lhs / (rhs + cube.measure().powf(m)))
}

/// A random trigonometric polynomial `Σ cⱼ sin(2π(kⱼ·x) + θⱼ)` with its
/// gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial<T: Real> {
    modes: Vec<([T; 2], T, T)>,
}

impl<T: Real> TrigPolynomial<T> {
    pub fn random<R: Rng>(rng: &mut R, terms: usize, max_freq: u32) -> Self {
        let modes = (0..terms)
            .map(|_| {
                let k = [
                    T::from_usize_lossy(rng.gen_range(0..=max_freq) as usize),
                    T::from_usize_lossy(rng.gen_range(0..=max_freq) as usize),
                ];
                (k, T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(0.0..std::f64::consts::TAU)))
            })
            .collect();
        Self { modes }
    }

    pub fn eval(&self, x: &Point<T>) -> (T, [T; 2]) {
        let tau = T::TAU();
        let mut v = T::zero();
        let mut g = [T::zero(); 2];
        for (k, c, theta) in &self.modes {
            let arg = tau * (k[0] * x[0] + k[1] * x[1]) + *theta;
            v = v + *c * arg.sin();
            let d = *c * arg.cos() * tau;
            g[0] = g[0] + d * k[0];
            g[1] = g[1] + d * k[1];
        }
        (v, g)
    }
}

/// Applies `probe` on the dyadic cubes of side `2^{-k}`, `k ∈ levels`,
/// containing `anchor`.
pub fn dyadic_sweep<T: Real>(
    levels: impl IntoIterator<Item = u32>,
    anchor: &Point<T>,
    mut probe: impl FnMut(&Cube<T>) -> Result<T>,
) -> Result<Vec<T>> {
    levels.into_iter().map(|k| probe(&Cube::dyadic_containing(k, anchor))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::ExponentKind;
    use crate::geometry::Domain;
    use crate::numeric::integrate;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant(p: f64) -> ExponentField<f64> {
        ExponentField::constant(p, Domain::UnitSquare).unwrap()
    }

    fn affine() -> ExponentField<f64> {
        ExponentField::new(ExponentKind::Affine { base: 2.0, gradient: [1.0, 0.0] }, Domain::UnitSquare).unwrap()
    }

    fn sinusoidal() -> ExponentField<f64> {
        ExponentField::new(ExponentKind::Sinusoidal { base: 2.0, amplitude: 0.5, frequency: 1.0 }, Domain::UnitSquare)
            .unwrap()
    }

    #[test]
    fn modular_of_constants() {
        let q = Cube::unit();
        assert_relative_eq!(modular(&GridFunction::sample(&q, 16, |_| 1.0), &affine()), 1.0, epsilon = 1e-13);
        assert_relative_eq!(modular(&GridFunction::sample(&q, 16, |_| 2.0), &constant(3.0)), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn modular_matches_one_dimensional_quadrature() {
        // ∫₀¹ x^{2+x} dx, the integrand being independent of x₂
        let oracle = integrate(|x: f64| x.powf(2.0 + x), 0.0, 1.0, 1e-12);
        let f = GridFunction::sample(&Cube::unit(), 512, |x| x[0]);
        assert!((modular(&f, &affine()) - oracle).abs() < 1e-5, "{oracle}");
    }

    #[test]
    fn luxemburg_norm_examples() {
        let q = Cube::unit();
        assert_relative_eq!(
            luxemburg_norm(&GridFunction::sample(&q, 8, |_| 1.0), &affine()),
            1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            luxemburg_norm(&GridFunction::sample(&q, 8, |_| 2.0), &constant(2.0)),
            2.0,
            max_relative = 1e-12
        );
        assert_eq!(luxemburg_norm(&GridFunction::sample(&q, 8, |_| 0.0), &affine()), 0.0);

        let f = GridFunction::sample(&q, 32, |_| 3.0);
        let n = luxemburg_norm(&f, &affine());
        assert!((modular(&f.scaled(1.0 / n), &affine()) - 1.0).abs() <= 1e-8);
        // the unit square has measure one, so constants are their own norm
        assert_relative_eq!(n, 3.0, max_relative = 1e-10);
    }

    #[test]
    fn luxemburg_norm_matches_lp_for_constant_exponent() {
        let f = GridFunction::sample(&Cube::unit(), 32, |x: &[f64; 2]| (x[0] - 0.3) * x[1]);
        let p = 2.5;
        let lp = f.integrate(|_, v| v.abs().powf(p)).powf(1.0 / p);
        assert_relative_eq!(luxemburg_norm(&f, &constant(p)), lp, max_relative = 1e-10);
    }

    #[test]
    fn key_estimate_is_jensen_for_constant_exponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let trig = TrigPolynomial::random(&mut rng, 4, 3);
            let f = GridFunction::sample(&Cube::unit(), 32, |x| 0.25 * trig.eval(x).0);
            let c = key_estimate_probe(&constant(2.7), &Cube::unit(), &f, 2.0).unwrap();
            assert!(c <= 1.0 + 1e-12, "{c}");
        }
    }

    #[test]
    fn key_estimate_constant_f_bounded_by_max_over_mean() {
        let p = sinusoidal();
        let cube = Cube::new([0.25, 0.25], 0.5).unwrap();
        let f = GridFunction::sample(&cube, 32, |_| 0.8);
        let c = key_estimate_probe(&p, &cube, &f, 2.0).unwrap();
        let vals: Vec<f64> = f.points().iter().map(|x| 0.8f64.powf(p.eval_unchecked(x))).collect();
        let max = vals.iter().copied().fold(0.0, f64::max);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!(c <= max / mean + 1e-12);
    }

    #[test]
    fn key_estimate_rejects_inadmissible_input() {
        let f = GridFunction::sample(&Cube::unit(), 8, |_| 5.0);
        assert!(matches!(key_estimate_probe(&affine(), &Cube::unit(), &f, 2.0), Err(Error::Precondition(_))));
        let big = Cube::new([0.0, 0.0], 2.0).unwrap();
        assert!(matches!(key_estimate_probe(&affine(), &big, &f, 2.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn shifted_key_probe_reduces_at_zero_shift() {
        let cube = Cube::new([0.5, 0.0], 0.25).unwrap();
        let f = GridFunction::sample(&cube, 32, |x| 1.0 + x[0] * x[1]);
        let plain = key_estimate_probe(&sinusoidal(), &cube, &f, 2.0).unwrap();
        let shifted = shifted_key_probe(&sinusoidal(), &cube, &f, 0.0, 2.0).unwrap();
        assert_relative_eq!(plain, shifted, max_relative = 1e-12);
    }

    #[test]
    fn shifted_key_probe_three_regimes() {
        let p = sinusoidal();
        let unit = Cube::unit();
        let small = Cube::new([0.25, 0.5], 0.25).unwrap();
        // mean ≥ a; mean ≤ a ≤ |Q|^m; mean ≤ a with |Q|^m ≤ a
        let cases: [(Cube<f64>, f64, f64); 3] = [(unit, 0.6, 0.1), (unit, 0.1, 0.5), (small, 0.1, 0.5)];
        for (cube, level, a) in cases {
            let f = GridFunction::sample(&cube, 32, |x| level * (1.0 + 0.5 * (7.0 * x[0]).sin()));
            let c = shifted_key_probe(&p, &cube, &f, a, 2.0).unwrap();
            assert!(c.is_finite() && c > 0.0 && c < 10.0, "{c}");
        }
        let f = GridFunction::sample(&unit, 16, |x| x[0]);
        assert!(shifted_key_probe(&constant(2.0), &unit, &f, 0.3, 2.0).unwrap() <= 4.0);
    }

    #[test]
    fn poincare_probe_examples() {
        let cube = Cube::new([0.0, 0.25], 0.5).unwrap();
        let flat = GridFunction::sample_with_gradient(&cube, 32, |_| (2.0, [0.0, 0.0]));
        assert_eq!(poincare_shift_probe(&sinusoidal(), &cube, &flat, 0.3, 2.0).unwrap(), 0.0);

        let lin = GridFunction::sample_with_gradient(&cube, 32, |x| (0.3 * x[0] - 0.2 * x[1], [0.3, -0.2]));
        let c = poincare_shift_probe(&constant(2.0), &cube, &lin, 0.0, 2.0).unwrap();
        // ⨍|g·(x−x̄)|²/ℓ² = |g|²/12 for a square
        assert!(c <= 1.0 / 12.0 + 1e-3, "{c}");

        let no_grad = GridFunction::sample(&cube, 8, |_| 1.0);
        assert!(poincare_shift_probe(&constant(2.0), &cube, &no_grad, 0.0, 2.0).is_err());
    }

    #[test]
    fn dyadic_cube_contains_anchor() {
        for k in 0..7 {
            let q = Cube::dyadic_containing(k, &[0.3, 0.999]);
            assert!(q.corner[0] <= 0.3 && 0.3 <= q.corner[0] + q.side);
            assert!(q.corner[1] <= 0.999 && 0.999 <= q.corner[1] + q.side);
        }
        assert_eq!(Cube::<f64>::dyadic_containing(1, &[1.0, 1.0]).corner, [0.5, 0.5]);
    }

    #[test]
    fn trig_gradient_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = TrigPolynomial::<f64>::random(&mut rng, 5, 4);
        let x = [0.31, 0.72];
        let (_, g) = t.eval(&x);
        let h = 1e-6;
        let fd0 = (t.eval(&[x[0] + h, x[1]]).0 - t.eval(&[x[0] - h, x[1]]).0) / (2.0 * h);
        let fd1 = (t.eval(&[x[0], x[1] + h]).0 - t.eval(&[x[0], x[1] - h]).0) / (2.0 * h);
        assert_relative_eq!(g[0], fd0, epsilon = 1e-6);
        assert_relative_eq!(g[1], fd1, epsilon = 1e-6);
    }
}
