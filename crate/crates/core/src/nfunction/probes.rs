//! Empirical envelopes for the shifted N-function equivalences.
//!
//! Each probe evaluates both sides of an equivalence `f ∼ g` over sample
//! grids and records the range of `f/g`. The equivalences hold with
//! constants depending only on the characteristics of `ρ`, so the
//! envelopes must stay finite and, for exponents in a compact range,
//! moderate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{flux::hammer_ratios, shift_by_quadrature, young_gap, PowerNFunction, Tensor};
use crate::scalar::Real;

/// Running minimum and maximum of a sampled ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope<T: Real> {
    pub min: T,
    pub max: T,
    pub count: usize,
}

impl<T: Real> Default for Envelope<T> {
    fn default() -> Self {
        Self { min: T::infinity(), max: T::neg_infinity(), count: 0 }
    }
}

impl<T: Real> Envelope<T> {
    pub fn push(&mut self, v: T) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        self.count += other.count;
    }

    pub fn is_finite(&self) -> bool {
        self.count > 0 && self.min.is_finite() && self.max.is_finite() && self.min > T::zero()
    }

    /// Whether every sample lies in `[lo, hi]`.
    pub fn within(&self, lo: T, hi: T) -> bool {
        self.count > 0 && self.min >= lo && self.max <= hi
    }

    /// `max/min`; 1 when all samples agree.
    pub fn spread(&self) -> T {
        self.max / self.min
    }
}

/// Logarithmically spaced samples `lo … hi`.
pub fn log_grid<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * T::from_usize_lossy(i) / T::from_usize_lossy(count - 1)).exp()).collect()
}

/// `ρ_a(t) ∼ ρ''(a)t²` for `t ≤ a` and `ρ_a(t) ∼ ρ(t)` for `t ≥ a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftEquivalence<T: Real> {
    pub small: Envelope<T>,
    pub large: Envelope<T>,
}

pub fn shift_equivalence<T: Real>(rho: &PowerNFunction<T>, shifts: &[T], ts: &[T]) -> ShiftEquivalence<T> {
    let mut small = Envelope::default();
    let mut large = Envelope::default();
    for &a in shifts {
        let shifted = rho.shifted(a);
        for &t in ts {
            if t <= T::zero() {
                continue;
            }
            let v = shifted.value(t);
            if t <= a {
                small.push(v / (rho.second_deriv(a) * t * t));
            }
            if t >= a {
                large.push(v / rho.value(t));
            }
        }
    }
    ShiftEquivalence { small, large }
}

/// `(ρ_a)_b(t) / ρ_{a+b}(t)`, the outer shift taken from the defining
/// integral rather than the closed form.
pub fn double_shift<T: Real>(rho: &PowerNFunction<T>, shifts: &[T], ts: &[T]) -> Envelope<T> {
    let mut env = Envelope::default();
    for &a in shifts {
        let inner = rho.shifted(a);
        for &b in shifts {
            let direct = rho.shifted(a + b);
            for &t in ts {
                if t <= T::zero() {
                    continue;
                }
                let nested = shift_by_quadrature(|s| inner.deriv(s), b, t, T::lit(1e-12));
                env.push(nested / direct.value(t));
            }
        }
    }
    env
}

/// Smallest constants `C_δ ≥ 1` with
/// `ρ_{|a|}(t) ≤ C_δ ρ_{|b|}(t) + δ ρ_{|a|}(|a−b|)` and the analogue for
/// conjugates, over the sampled vectors and `t`.
pub fn change_of_shift<T: Real>(rho: &PowerNFunction<T>, delta: T, vectors: &[[T; 2]], ts: &[T]) -> (T, T) {
    let mut primal = T::one();
    let mut conj = T::one();
    for a in vectors {
        let na = a[0].hypot(a[1]);
        let rho_a = rho.shifted(na);
        for b in vectors {
            let nb = b[0].hypot(b[1]);
            let rho_b = rho.shifted(nb);
            let penalty = delta * rho_a.value((a[0] - b[0]).hypot(a[1] - b[1]));
            for &t in ts {
                let lhs = rho_a.value(t) - penalty;
                let rhs = rho_b.value(t);
                if lhs > T::zero() && rhs > T::zero() {
                    primal = primal.max(lhs / rhs);
                }
                let lhs_c = rho_a.conjugate(t) - penalty;
                let rhs_c = rho_b.conjugate(t);
                if lhs_c > T::zero() && rhs_c > T::zero() {
                    conj = conj.max(lhs_c / rhs_c);
                }
            }
        }
    }
    (primal, conj)
}

/// Envelopes for `(ρ_a)*(t) ∼ (ρ*)_{ρ'(a)}(t)`, `ρ_a(λa) ∼ λ²ρ(a)` and
/// `(ρ_a)*(λρ'(a)) ∼ λ²ρ(a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateShift<T: Real> {
    pub conjugate: Envelope<T>,
    pub scaling: Envelope<T>,
    pub conjugate_scaling: Envelope<T>,
}

pub fn conjugate_shift<T: Real>(rho: &PowerNFunction<T>, shifts: &[T], ts: &[T], lambdas: &[T]) -> ConjugateShift<T> {
    let mut out = ConjugateShift {
        conjugate: Envelope::default(),
        scaling: Envelope::default(),
        conjugate_scaling: Envelope::default(),
    };
    for &a in shifts {
        let rho_a = rho.shifted(a);
        let b = rho.deriv(a);
        for &t in ts {
            if t <= T::zero() {
                continue;
            }
            let lhs = rho_a.conjugate(t);
            let rhs = shift_by_quadrature(|u| rho.conjugate_deriv(u), b, t, T::lit(1e-11));
            out.conjugate.push(lhs / rhs);
        }
        if a <= T::zero() {
            continue;
        }
        for &lambda in lambdas {
            if lambda <= T::zero() {
                continue;
            }
            let base = lambda * lambda * rho.value(a);
            out.scaling.push(rho_a.value(lambda * a) / base);
            out.conjugate_scaling.push(rho_a.conjugate(lambda * b) / base);
        }
    }
    out
}

/// Smallest `c` with `ρ_a(λt) ≤ c·max{λ^q, λ²}·ρ_a(t)` and
/// `(ρ_a)*(λt) ≤ c·max{λ^{q'}, λ²}·(ρ_a)*(t)` over `λ ∈ (0,1]`.
pub fn shifted_index<T: Real>(rho: &PowerNFunction<T>, shifts: &[T], ts: &[T], lambdas: &[T]) -> (T, T) {
    let two = T::lit(2.0);
    let q = rho.p;
    let q_conj = q / (q - T::one());
    let mut primal = T::zero();
    let mut conj = T::zero();
    for &a in shifts {
        let rho_a = rho.shifted(a);
        for &t in ts {
            if t <= T::zero() {
                continue;
            }
            let base = rho_a.value(t);
            let base_c = rho_a.conjugate(t);
            for &lambda in lambdas {
                if lambda <= T::zero() || lambda > T::one() {
                    continue;
                }
                let w = lambda.powf(q).max(lambda.powf(two));
                primal = primal.max(rho_a.value(lambda * t) / (w * base));
                let wc = lambda.powf(q_conj).max(lambda.powf(two));
                conj = conj.max(rho_a.conjugate(lambda * t) / (wc * base_c));
            }
        }
    }
    (primal, conj)
}

/// Envelopes of the three monotonicity ratios over random `(p, κ, P, Q)`.
pub fn hammer_envelope<T: Real>(p_range: (T, T), kappas: &[T], draws: usize, seed: u64) -> [Envelope<T>; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = [Envelope::default(); 3];
    let random_tensor = |rng: &mut ChaCha8Rng| {
        let mag = 10f64.powf(rng.gen_range(-3.0..2.0));
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        Tensor::vector([T::lit(mag * angle.cos()), T::lit(mag * angle.sin())])
    };
    for i in 0..draws {
        let p = p_range.0 + (p_range.1 - p_range.0) * T::lit(rng.gen::<f64>());
        let kappa = kappas[i % kappas.len()];
        let rho = PowerNFunction::new(T::one(), kappa, p);
        let pt = random_tensor(&mut rng);
        // mix in near-coincident and opposite pairs
        let qt = match i % 4 {
            0 => pt.scaled(T::lit(1.0 + 1e-3 * rng.gen::<f64>())),
            1 => pt.scaled(-T::one()),
            _ => random_tensor(&mut rng),
        };
        if let Ok(r) = hammer_ratios(&rho, &pt, &qt) {
            for k in 0..3 {
                env[k].push(r[k]);
            }
        }
    }
    env
}

/// Smallest `gap/(1+st)` of the δ-Young inequality over the grids.
pub fn young_scan<T: Real>(rho: &PowerNFunction<T>, shifts: &[T], values: &[T], deltas: &[T]) -> T {
    let mut worst = T::infinity();
    for &a in shifts {
        let rho_a = rho.shifted(a);
        for &s in values {
            for &t in values {
                for &delta in deltas {
                    let gap = young_gap(&rho_a, s, t, delta);
                    worst = worst.min(gap / (T::one() + s * t));
                }
            }
        }
    }
    worst
}
