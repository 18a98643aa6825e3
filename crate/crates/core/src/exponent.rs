//! Variable exponent fields `p : Ω → (1, ∞)` with bounds and Hölder metadata.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::errors::{Error, Result};
use crate::geometry::{Domain, Triangle};
use crate::scalar::{dist, Point, Real};

/// Default barycentric lattice order used to locate `argmin_K p`; order 4
/// gives 15 sample points per cell.
pub const DEFAULT_LATTICE_ORDER: usize = 4;

/// Bilinear table on a uniform background grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable<T: Real> {
    pub origin: Point<T>,
    pub extent: Point<T>,
    pub nx: usize,
    pub ny: usize,
    /// Nodal values, `(nx+1)·(ny+1)` entries, x running fastest.
    pub values: Vec<T>,
}

impl<T: Real> GridTable<T> {
    fn node(&self, i: usize, j: usize) -> T {
        self.values[j * (self.nx + 1) + i]
    }

    fn eval(&self, x: &Point<T>) -> T {
        let hx = self.extent[0] / T::from_usize_lossy(self.nx);
        let hy = self.extent[1] / T::from_usize_lossy(self.ny);
        let locate = |c: T, h: T, n: usize| -> (usize, T) {
            let s = (c / h).max(T::zero());
            let i = s.floor().to_usize().unwrap_or(0).min(n - 1);
            (i, (s - T::from_usize_lossy(i)).min(T::one()))
        };
        let (i, sx) = locate(x[0] - self.origin[0], hx, self.nx);
        let (j, sy) = locate(x[1] - self.origin[1], hy, self.ny);
        let one = T::one();
        self.node(i, j) * (one - sx) * (one - sy)
            + self.node(i + 1, j) * sx * (one - sy)
            + self.node(i, j + 1) * (one - sx) * sy
            + self.node(i + 1, j + 1) * sx * sy
    }

    /// Bound on the gradient of the bilinear interpolant.
    fn lipschitz(&self) -> T {
        let hx = self.extent[0] / T::from_usize_lossy(self.nx);
        let hy = self.extent[1] / T::from_usize_lossy(self.ny);
        let mut gx = T::zero();
        let mut gy = T::zero();
        for j in 0..=self.ny {
            for i in 0..=self.nx {
                if i < self.nx {
                    gx = gx.max((self.node(i + 1, j) - self.node(i, j)).abs() / hx);
                }
                if j < self.ny {
                    gy = gy.max((self.node(i, j + 1) - self.node(i, j)).abs() / hy);
                }
            }
        }
        gx.hypot(gy)
    }
}

/// Closed-form description of an exponent.
#[derive(Debug, Clone, PartialEq)]
pub enum ExponentKind<T: Real> {
    Constant {
        p: T,
    },
    /// `p(x) = base + gradient·x`.
    Affine {
        base: T,
        gradient: Point<T>,
    },
    /// `p(x) = base + amplitude·sin(frequency·π·x₁)`.
    Sinusoidal {
        base: T,
        amplitude: T,
        frequency: T,
    },
    /// `p(x) = base + amplitude·|x − center|^alpha`.
    HolderCusp {
        base: T,
        amplitude: T,
        center: Point<T>,
        alpha: T,
    },
    UserDefined(GridTable<T>),
}

/// A variable exponent on a bounded domain together with its range and
/// `C^{0,α}` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField<T: Real> {
    kind: ExponentKind<T>,
    domain: Domain,
    p_minus: T,
    p_plus: T,
    holder_alpha: T,
    holder_const: T,
}

/// Range of an exponent on one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRange<T: Real> {
    pub p_min: T,
    pub p_max: T,
    /// A point realising `p_min`.
    pub argmin: Point<T>,
}

fn domain_corners<T: Real>(domain: Domain) -> Vec<Point<T>> {
    let z = T::zero();
    let o = T::one();
    let h = T::lit(0.5);
    match domain {
        Domain::UnitSquare => vec![[z, z], [o, z], [o, o], [z, o]],
        Domain::LShape => vec![[z, z], [o, z], [o, h], [h, h], [h, o], [z, o]],
    }
}

fn sine_range<T: Real>(frequency: T) -> (T, T) {
    // sin(θ) for θ ∈ [0, frequency·π] (or the mirrored interval).
    let end = frequency * T::PI();
    let (lo_t, hi_t) = if end >= T::zero() { (T::zero(), end) } else { (end, T::zero()) };
    let mut lo = lo_t.sin().min(hi_t.sin());
    let mut hi = lo_t.sin().max(hi_t.sin());
    let half_pi = T::FRAC_PI_2();
    let mut k = ((lo_t - half_pi) / T::PI()).ceil();
    loop {
        let theta = half_pi + k * T::PI();
        if theta > hi_t {
            break;
        }
        let s = theta.sin();
        lo = lo.min(s);
        hi = hi.max(s);
        k = k + T::one();
    }
    (lo, hi)
}

impl<T: Real> ExponentField<T> {
    /// Builds a field, computing its range and Hölder data. Fails unless
    /// `1 < p⁻ ≤ p⁺ < ∞`.
    pub fn new(kind: ExponentKind<T>, domain: Domain) -> Result<Self> {
        let corners = domain_corners::<T>(domain);
        let (p_minus, p_plus, alpha, holder) = match &kind {
            ExponentKind::Constant { p } => (*p, *p, T::one(), T::zero()),
            ExponentKind::Affine { base, gradient } => {
                let vals: Vec<T> = corners.iter().map(|c| *base + gradient[0] * c[0] + gradient[1] * c[1]).collect();
                let lo = vals.iter().copied().fold(T::infinity(), T::min);
                let hi = vals.iter().copied().fold(T::neg_infinity(), T::max);
                (lo, hi, T::one(), gradient[0].hypot(gradient[1]))
            }
            ExponentKind::Sinusoidal { base, amplitude, frequency } => {
                let (slo, shi) = sine_range(*frequency);
                let (a, b) = (*base + *amplitude * slo, *base + *amplitude * shi);
                (a.min(b), a.max(b), T::one(), amplitude.abs() * frequency.abs() * T::PI())
            }
            ExponentKind::HolderCusp { base, amplitude, center, alpha } => {
                if !(*alpha > T::zero() && *alpha <= T::one()) {
                    return Err(Error::Argument("cusp exponent alpha must lie in (0,1]".into()));
                }
                let near = if domain.contains(center, T::zero()) {
                    T::zero()
                } else {
                    // distance to the polygon boundary
                    let n = corners.len();
                    (0..n)
                        .map(|i| {
                            let a = corners[i];
                            let b = corners[(i + 1) % n];
                            let e = [b[0] - a[0], b[1] - a[1]];
                            let l2 = e[0] * e[0] + e[1] * e[1];
                            let s = (((center[0] - a[0]) * e[0] + (center[1] - a[1]) * e[1]) / l2)
                                .max(T::zero())
                                .min(T::one());
                            dist(&[a[0] + s * e[0], a[1] + s * e[1]], center)
                        })
                        .fold(T::infinity(), T::min)
                };
                let far = corners.iter().map(|c| dist(c, center)).fold(T::zero(), T::max);
                let (a, b) = (*base + *amplitude * near.powf(*alpha), *base + *amplitude * far.powf(*alpha));
                (a.min(b), a.max(b), *alpha, amplitude.abs())
            }
            ExponentKind::UserDefined(table) => {
                if table.nx == 0 || table.ny == 0 || table.values.len() != (table.nx + 1) * (table.ny + 1) {
                    return Err(Error::Argument("user-defined exponent table has inconsistent size".into()));
                }
                let covers = table.origin[0] <= T::zero()
                    && table.origin[1] <= T::zero()
                    && table.origin[0] + table.extent[0] >= T::one()
                    && table.origin[1] + table.extent[1] >= T::one();
                if !covers {
                    return Err(Error::Argument("user-defined exponent table must cover the unit square".into()));
                }
                let lo = table.values.iter().copied().fold(T::infinity(), T::min);
                let hi = table.values.iter().copied().fold(T::neg_infinity(), T::max);
                (lo, hi, T::one(), table.lipschitz())
            }
        };
        if !(p_minus > T::one()) {
            return Err(Error::Argument(format!("exponent must satisfy p⁻ > 1 (got {p_minus})")));
        }
        if !p_plus.is_finite() {
            return Err(Error::Argument("exponent must be bounded".into()));
        }
        Ok(Self { kind, domain, p_minus, p_plus, holder_alpha: alpha, holder_const: holder })
    }

    pub fn constant(p: T, domain: Domain) -> Result<Self> {
        Self::new(ExponentKind::Constant { p }, domain)
    }

    pub fn kind(&self) -> &ExponentKind<T> {
        &self.kind
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn p_minus(&self) -> T {
        self.p_minus
    }

    pub fn p_plus(&self) -> T {
        self.p_plus
    }

    pub fn holder_alpha(&self) -> T {
        self.holder_alpha
    }

    pub fn holder_const(&self) -> T {
        self.holder_const
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, ExponentKind::Constant { .. })
    }

    /// Short human-readable tag used in reports.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            ExponentKind::Constant { p } => format!("constant(p={p})"),
            ExponentKind::Affine { base, gradient } => {
                format!("affine(base={base},grad=[{},{}])", gradient[0], gradient[1])
            }
            ExponentKind::Sinusoidal { base, amplitude, frequency } => {
                format!("sinusoidal(base={base},amp={amplitude},freq={frequency})")
            }
            ExponentKind::HolderCusp { base, amplitude, center, alpha } => {
                format!("holder-cusp(base={base},amp={amplitude},center=[{},{}],alpha={alpha})", center[0], center[1])
            }
            ExponentKind::UserDefined(t) => format!("user-defined({}x{})", t.nx, t.ny),
        }
    }

    /// `p(x)` for `x` in the closure of the domain.
    pub fn eval(&self, x: &Point<T>) -> Result<T> {
        if !self.domain.contains(x, T::lit(1e-12).max(T::epsilon() * T::lit(8.0))) {
            return Err(Error::Domain { x: x[0].as_f64(), y: x[1].as_f64() });
        }
        Ok(self.eval_unchecked(x))
    }

    /// `p(x)` without the domain check.
    pub fn eval_unchecked(&self, x: &Point<T>) -> T {
        match &self.kind {
            ExponentKind::Constant { p } => *p,
            ExponentKind::Affine { base, gradient } => *base + gradient[0] * x[0] + gradient[1] * x[1],
            ExponentKind::Sinusoidal { base, amplitude, frequency } => {
                *base + *amplitude * (*frequency * T::PI() * x[0]).sin()
            }
            ExponentKind::HolderCusp { base, amplitude, center, alpha } => {
                *base + *amplitude * dist(x, center).powf(*alpha)
            }
            ExponentKind::UserDefined(table) => table.eval(x),
        }
    }

    /// Minimum and maximum of `p` over a cell, plus a minimiser `x_K`.
    ///
    /// Constant and affine fields are scanned at the vertices (exact). Other
    /// kinds are sampled on a barycentric lattice of the given order and the
    /// best sample is polished by a compass search inside the cell.
    pub fn range_on_cell(&self, cell: &Triangle<T>, lattice_order: usize) -> Result<CellRange<T>> {
        if !(cell.area() > T::zero()) {
            return Err(Error::Geometry("cell has zero area".into()));
        }
        let vertex_scan = || {
            let mut best = (T::infinity(), cell.corners[0]);
            let mut hi = T::neg_infinity();
            for c in &cell.corners {
                let v = self.eval_unchecked(c);
                if v < best.0 {
                    best = (v, *c);
                }
                hi = hi.max(v);
            }
            CellRange { p_min: best.0, p_max: hi, argmin: best.1 }
        };
        match &self.kind {
            ExponentKind::Constant { .. } | ExponentKind::Affine { .. } => return Ok(vertex_scan()),
            _ => {}
        }
        let order = lattice_order.max(1);
        let k = T::from_usize_lossy(order);
        let mut lattice = Vec::with_capacity((order + 1) * (order + 2) / 2);
        for i in 0..=order {
            for j in 0..=(order - i) {
                let l = order - i - j;
                lattice.push([T::from_usize_lossy(i) / k, T::from_usize_lossy(j) / k, T::from_usize_lossy(l) / k]);
            }
        }
        let value = |b: &[T; 3]| self.eval_unchecked(&cell.at(*b));
        let pick = |sign: T| {
            let mut best = lattice[0];
            let mut best_v = sign * value(&best);
            for b in &lattice[1..] {
                let v = sign * value(b);
                if v < best_v {
                    best_v = v;
                    best = *b;
                }
            }
            compass_polish(|b| sign * value(b), best, best_v, T::one() / k)
        };
        let (bmin, mut vmin) = pick(T::one());
        let mut argmin = cell.at(bmin);
        let (_, neg_max) = pick(-T::one());
        let mut p_max = -neg_max;
        if let ExponentKind::HolderCusp { center, amplitude, .. } = &self.kind {
            let target = if *amplitude >= T::zero() { cell.closest_point(center) } else { argmin };
            let v = self.eval_unchecked(&target);
            if v < vmin {
                vmin = v;
                argmin = target;
            }
        }
        p_max = p_max.max(vmin);
        Ok(CellRange { p_min: vmin, p_max, argmin })
    }

    /// Largest sampled value of `|p(x) − p(y)| / |x − y|^α` over all pairs
    /// of `samples` seeded points of the domain. Later samples extend the
    /// earlier sequence, so the result is non-decreasing in `samples`.
    pub fn holder_probe(&self, samples: usize, seed: u64) -> T {
        let pts = self.sample_points(samples, seed);
        let vals: Vec<T> = pts.iter().map(|x| self.eval_unchecked(x)).collect();
        let mut worst = T::zero();
        for i in 0..pts.len() {
            for j in 0..i {
                let d = dist(&pts[i], &pts[j]);
                if d > T::zero() {
                    worst = worst.max((vals[i] - vals[j]).abs() / d.powf(self.holder_alpha));
                }
            }
        }
        worst
    }

    /// Sampled estimate of the log-Hölder constant of `1/p`; reporting only.
    pub fn log_holder_estimate(&self, samples: usize, seed: u64) -> T {
        let pts = self.sample_points(samples, seed);
        let inv: Vec<T> = pts.iter().map(|x| T::one() / self.eval_unchecked(x)).collect();
        let e = T::E();
        let mut worst = T::zero();
        for i in 0..pts.len() {
            for j in 0..i {
                let d = dist(&pts[i], &pts[j]);
                if d > T::zero() {
                    worst = worst.max((inv[i] - inv[j]).abs() * (e + T::one() / d).ln());
                }
            }
        }
        worst
    }

    fn sample_points(&self, samples: usize, seed: u64) -> Vec<Point<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::with_capacity(samples);
        while pts.len() < samples {
            let x = [T::lit(rng.gen::<f64>()), T::lit(rng.gen::<f64>())];
            if self.domain.accepts(&x) {
                pts.push(x);
            }
        }
        pts
    }
}

/// Compass search in barycentric coordinates, staying inside the simplex.
fn compass_polish<T: Real, F: Fn(&[T; 3]) -> T>(f: F, start: [T; 3], start_v: T, step0: T) -> ([T; 3], T) {
    let mut best = start;
    let mut best_v = start_v;
    let mut step = step0;
    let dirs: [(usize, usize); 6] = [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)];
    for _ in 0..200 {
        let mut improved = false;
        for &(up, down) in &dirs {
            let mut cand = best;
            let s = step.min(cand[down]);
            if s <= T::zero() {
                continue;
            }
            cand[up] = cand[up] + s;
            cand[down] = cand[down] - s;
            let v = f(&cand);
            if v < best_v {
                best_v = v;
                best = cand;
                improved = true;
            }
        }
        if !improved {
            step = step * T::lit(0.5);
            if step < T::epsilon() * T::lit(16.0) {
                break;
            }
        }
    }
    (best, best_v)
}

/// JSON description of an exponent field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExponentSpec {
    Constant {
        p: f64,
    },
    Affine {
        base: f64,
        gradient: [f64; 2],
    },
    Sinusoidal {
        base: f64,
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
    },
    HolderCusp {
        base: f64,
        amplitude: f64,
        center: [f64; 2],
        alpha: f64,
    },
    UserDefined {
        origin: [f64; 2],
        extent: [f64; 2],
        nx: usize,
        ny: usize,
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl ExponentSpec {
    pub fn build<T: Real>(&self, domain: Domain) -> Result<ExponentField<T>> {
        let l = T::lit;
        let kind = match self {
            ExponentSpec::Constant { p } => ExponentKind::Constant { p: l(*p) },
            ExponentSpec::Affine { base, gradient } => {
                ExponentKind::Affine { base: l(*base), gradient: [l(gradient[0]), l(gradient[1])] }
            }
            ExponentSpec::Sinusoidal { base, amplitude, frequency } => {
                ExponentKind::Sinusoidal { base: l(*base), amplitude: l(*amplitude), frequency: l(*frequency) }
            }
            ExponentSpec::HolderCusp { base, amplitude, center, alpha } => ExponentKind::HolderCusp {
                base: l(*base),
                amplitude: l(*amplitude),
                center: [l(center[0]), l(center[1])],
                alpha: l(*alpha),
            },
            ExponentSpec::UserDefined { origin, extent, nx, ny, values } => ExponentKind::UserDefined(GridTable {
                origin: [l(origin[0]), l(origin[1])],
                extent: [l(extent[0]), l(extent[1])],
                nx: *nx,
                ny: *ny,
                values: values.iter().map(|&v| l(v)).collect(),
            }),
        };
        ExponentField::new(kind, domain)
    }
}
