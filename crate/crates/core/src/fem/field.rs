use std::sync::Arc;

use crate::nfunction::Tensor;
use crate::scalar::{Point, Real};

/// A vector field `v: Ω → ℝᴺ` with an analytic gradient.
pub trait FieldFunction<T: Real>: Send + Sync {
    fn components(&self) -> usize {
        1
    }
    fn value(&self, x: &Point<T>) -> Vec<T>;
    fn gradient(&self, x: &Point<T>) -> Tensor<T>;
}

/// `sin(kπx₁)·sin(kπx₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineProduct<T: Real> {
    pub frequency: T,
}

impl<T: Real> FieldFunction<T> for SineProduct<T> {
    fn value(&self, x: &Point<T>) -> Vec<T> {
        let w = self.frequency * T::PI();
        vec![(w * x[0]).sin() * (w * x[1]).sin()]
    }

    fn gradient(&self, x: &Point<T>) -> Tensor<T> {
        let w = self.frequency * T::PI();
        let (s0, c0) = (w * x[0]).sin_cos();
        let (s1, c1) = (w * x[1]).sin_cos();
        Tensor::vector([w * c0 * s1, w * s0 * c1])
    }
}

/// `x ↦ c + G x` with one row of `G` per component.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineField<T: Real> {
    pub offset: Vec<T>,
    pub gradient: Vec<[T; 2]>,
}

impl<T: Real> FieldFunction<T> for AffineField<T> {
    fn components(&self) -> usize {
        self.offset.len()
    }

    fn value(&self, x: &Point<T>) -> Vec<T> {
        self.offset.iter().zip(&self.gradient).map(|(&c, g)| c + g[0] * x[0] + g[1] * x[1]).collect()
    }

    fn gradient(&self, _: &Point<T>) -> Tensor<T> {
        Tensor::from_rows(&self.gradient)
    }
}

type ValueFn<T> = dyn Fn(&Point<T>) -> Vec<T> + Send + Sync;
type GradFn<T> = dyn Fn(&Point<T>) -> Tensor<T> + Send + Sync;

/// A field given by closures.
#[derive(Clone)]
pub struct FnField<T: Real> {
    components: usize,
    value: Arc<ValueFn<T>>,
    gradient: Arc<GradFn<T>>,
}

impl<T: Real> FnField<T> {
    pub fn new(
        components: usize,
        value: impl Fn(&Point<T>) -> Vec<T> + Send + Sync + 'static,
        gradient: impl Fn(&Point<T>) -> Tensor<T> + Send + Sync + 'static,
    ) -> Self {
        Self { components, value: Arc::new(value), gradient: Arc::new(gradient) }
    }
}

impl<T: Real> std::fmt::Debug for FnField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnField").field("components", &self.components).finish_non_exhaustive()
    }
}

impl<T: Real> FieldFunction<T> for FnField<T> {
    fn components(&self) -> usize {
        self.components
    }

    fn value(&self, x: &Point<T>) -> Vec<T> {
        (self.value)(x)
    }

    fn gradient(&self, x: &Point<T>) -> Tensor<T> {
        (self.gradient)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_gradient_matches_finite_difference() {
        let f = SineProduct { frequency: 2.0f64 };
        let x = [0.3, 0.8];
        let g = f.gradient(&x);
        let h = 1e-6;
        let d0 = (f.value(&[x[0] + h, x[1]])[0] - f.value(&[x[0] - h, x[1]])[0]) / (2.0 * h);
        let d1 = (f.value(&[x[0], x[1] + h])[0] - f.value(&[x[0], x[1] - h])[0]) / (2.0 * h);
        assert!((g.as_slice()[0] - d0).abs() < 1e-7);
        assert!((g.as_slice()[1] - d1).abs() < 1e-7);
    }
}
