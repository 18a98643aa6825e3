//! One-dimensional numerical kernels: adaptive Gauss–Kronrod quadrature,
//! golden-section maximisation and monotone root bracketing.

#![allow(clippy::excessive_precision)]

use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights attached to XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    (kronrod * radius, ((kronrod - gauss) * radius).abs())
}

const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_804_939_476_142_360_184,
    0.525_532_409_916_328_985_817_739_049_189_246,
    0.796_666_477_413_626_739_591_553_936_475_831,
    0.960_289_856_497_536_231_683_560_868_569_473,
];

const GL8_W: [f64; 4] = [
    0.362_683_783_378_361_982_965_150_449_277_196,
    0.313_706_645_877_887_287_337_962_201_986_601,
    0.222_381_034_453_374_470_544_355_994_426_241,
    0.101_228_536_290_376_259_152_531_354_309_962,
];

/// Fixed 8-point Gauss–Legendre rule on `[a, b]`, exact for degree 15.
pub fn gauss_legendre8<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T) -> T {
    gauss_legendre8_span(f, a, b - a)
}

/// Same rule on `[a, a + width]`, for widths below the resolution of `a`.
pub fn gauss_legendre8_span<T: Real, F: Fn(T) -> T>(f: F, a: T, width: T) -> T {
    let half = T::lit(0.5);
    let radius = half * width;
    let center = a + radius;
    let mut sum = T::zero();
    for j in 0..4 {
        let dx = radius * T::lit(GL8_X[j]);
        sum = sum + T::lit(GL8_W[j]) * (f(center - dx) + f(center + dx));
    }
    sum * radius
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]` to the
/// given relative tolerance.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, rel_tol: T) -> T {
    if a == b {
        return T::zero();
    }
    let (whole, err) = gk15(&f, a, b);
    let abs_floor = T::epsilon() * T::lit(64.0) * whole.abs().max(T::min_positive_value());
    refine(&f, a, b, whole, err, rel_tol, abs_floor, 0)
}

#[allow(clippy::too_many_arguments)]
fn refine<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, whole: T, err: T, rel_tol: T, abs_floor: T, depth: usize) -> T {
    if err <= rel_tol * whole.abs() || err <= abs_floor || depth >= 48 {
        return whole;
    }
    let mid = T::lit(0.5) * (a + b);
    let (left, el) = gk15(f, a, mid);
    let (right, er) = gk15(f, mid, b);
    refine(f, a, mid, left, el, rel_tol, abs_floor, depth + 1)
        + refine(f, mid, b, right, er, rel_tol, abs_floor, depth + 1)
}

/// Maximises a unimodal function on `[lo, hi]` by golden-section search.
/// Returns `(argmax, max)`.
pub fn golden_section_max<T: Real, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, rel_tol: T) -> (T, T) {
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if (hi - lo) <= rel_tol * (lo.abs() + hi.abs()) || hi - lo <= T::min_positive_value() {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let ends = [(lo, f(lo)), (hi, f(hi)), (x1, f1), (x2, f2)];
    ends.into_iter().fold((lo, T::neg_infinity()), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Solves `g(s) = target` for a continuous non-decreasing `g` on `[0, ∞)`
/// with `g(0) <= target`, by bracketing and bisection.
pub fn invert_increasing<T: Real, G: Fn(T) -> T>(g: G, target: T) -> T {
    if target <= g(T::zero()) {
        return T::zero();
    }
    let mut hi = T::one();
    let mut guard = 0;
    while g(hi) < target && guard < 2000 {
        hi = hi * T::lit(2.0);
        guard += 1;
    }
    let mut lo = T::zero();
    for _ in 0..400 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    T::lit(0.5) * (lo + hi)
}

#[cfg(test)]
mod tests {
    #[test]
    fn gauss_legendre_is_exact_for_degree_fifteen() {
        let v = super::gauss_legendre8(|x: f64| x.powi(15) + x.powi(14), -1.0, 2.0);
        let exact = (2f64.powi(16) - 1.0) / 16.0 + (2f64.powi(15) + 1.0) / 15.0;
        assert!((v - exact).abs() < 1e-10 * exact);
    }

    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_integrated_exactly() {
        // ∫_0^2 x^5 dx = 64/6
        let v = integrate(|x: f64| x.powi(5), 0.0, 2.0, 1e-14);
        assert_relative_eq!(v, 64.0 / 6.0, max_relative = 1e-14);
    }

    #[test]
    fn singular_endpoint_converges() {
        // ∫_0^1 sqrt(x) dx = 2/3
        let v = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12);
        assert_relative_eq!(v, 2.0 / 3.0, max_relative = 1e-11);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, v) = golden_section_max(|s: f64| s - s.powi(3) / 3.0, 0.0, 4.0, 1e-12);
        assert_relative_eq!(x, 1.0, epsilon = 1e-6);
        assert_relative_eq!(v, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn inversion_of_cubic() {
        let s = invert_increasing(|s: f64| s * s * s, 27.0);
        assert_relative_eq!(s, 3.0, max_relative = 1e-12);
        assert_eq!(invert_increasing(|s: f64| s, 0.0), 0.0);
    }
}
