//! Symmetric quadrature rules on the reference triangle.
//!
//! Weights are normalized to sum to one, so `Σ wᵢ f(xᵢ)·|K|` approximates
//! `∫_K f`.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule<T: Real> {
    pub bary: Vec<[T; 3]>,
    pub weights: Vec<T>,
    pub degree: usize,
}

fn orbit3(a: f64, b: f64) -> [[f64; 3]; 3] {
    [[a, b, b], [b, a, b], [b, b, a]]
}

fn orbit6(a: f64, b: f64, c: f64) -> [[f64; 3]; 6] {
    [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

impl<T: Real> TriangleRule<T> {
    fn build(degree: usize, pts: Vec<([f64; 3], f64)>) -> Self {
        Self {
            bary: pts.iter().map(|(b, _)| b.map(T::lit)).collect(),
            weights: pts.iter().map(|&(_, w)| T::lit(w)).collect(),
            degree,
        }
    }

    /// Smallest built-in rule exact for polynomials of the given degree.
    pub fn of_degree(degree: usize) -> Self {
        let third = 1.0 / 3.0;
        match degree {
            0 | 1 => Self::build(1, vec![([third; 3], 1.0)]),
            2 => Self::build(2, orbit3(2.0 / 3.0, 1.0 / 6.0).into_iter().map(|b| (b, third)).collect()),
            3 | 4 => {
                let mut pts: Vec<_> = orbit3(0.108_103_018_168_070, 0.445_948_490_915_965)
                    .into_iter()
                    .map(|b| (b, 0.223_381_589_678_011))
                    .collect();
                pts.extend(
                    orbit3(0.816_847_572_980_459, 0.091_576_213_509_771)
                        .into_iter()
                        .map(|b| (b, 0.109_951_743_655_322)),
                );
                Self::build(4, pts)
            }
            _ => {
                let mut pts = vec![([third; 3], -0.149_570_044_467_682)];
                pts.extend(
                    orbit3(0.479_308_067_841_920, 0.260_345_966_079_040)
                        .into_iter()
                        .map(|b| (b, 0.175_615_257_433_208)),
                );
                pts.extend(
                    orbit3(0.869_739_794_195_568, 0.065_130_102_902_216)
                        .into_iter()
                        .map(|b| (b, 0.053_347_235_608_838)),
                );
                pts.extend(
                    orbit6(0.048_690_315_425_316, 0.312_865_496_004_874, 0.638_444_188_569_810)
                        .into_iter()
                        .map(|b| (b, 0.077_113_760_890_257)),
                );
                Self::build(7, pts)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    // ∫_{ref} x^a y^b = a! b! / (a+b+2)!, reference area 1/2
    fn check(rule: &TriangleRule<f64>, tol: f64) {
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12, "weights sum {sum}");
        for a in 0..=rule.degree as u32 {
            for b in 0..=(rule.degree as u32 - a) {
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                let approx: f64 = rule
                    .bary
                    .iter()
                    .zip(&rule.weights)
                    .map(|(l, w)| 0.5 * w * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                assert!((approx - exact).abs() < tol * exact.max(1e-3), "x^{a} y^{b}: {approx} vs {exact}");
            }
        }
    }

    #[test]
    fn rules_integrate_monomials_exactly() {
        for (deg, tol) in [(1, 1e-14), (2, 1e-14), (4, 1e-12), (7, 1e-12)] {
            let rule = TriangleRule::<f64>::of_degree(deg);
            assert_eq!(rule.degree, deg);
            check(&rule, tol);
        }
    }

    #[test]
    fn point_counts() {
        assert_eq!(TriangleRule::<f64>::of_degree(4).len(), 6);
        assert_eq!(TriangleRule::<f64>::of_degree(7).len(), 13);
    }

    #[test]
    fn degree_four_rule_is_not_exact_beyond_degree_four() {
        let rule = TriangleRule::<f64>::of_degree(4);
        let exact = factorial(6) / factorial(8);
        let approx: f64 = rule.bary.iter().zip(&rule.weights).map(|(l, w)| 0.5 * w * l[1].powi(6)).sum();
        assert!((approx - exact).abs() > 1e-8);
    }
}
