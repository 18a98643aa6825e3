use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::errors::{Error, Result};
use crate::exponent::DEFAULT_LATTICE_ORDER;
use crate::nfunction::PhiFamily;
use crate::numeric::golden_section_max;
use crate::scalar::{Point, Real};

use super::assembly::Assembler;
use super::field::FieldFunction;
use super::freeze::{freeze, FrozenExponent};
use super::space::{FeFunction, FeSpace};
use super::sparse::LinearSolver;

pub type SourceFn<T> = Arc<dyn Fn(&Point<T>) -> Vec<T> + Send + Sync>;

/// Right-hand side of the problem.
#[derive(Clone)]
pub enum Load<T: Real> {
    /// A source term `f`.
    Source(SourceFn<T>),
    /// The load `ψ ↦ ∫ A(·,∇v)·∇ψ` of a known exact solution `v`.
    Manufactured(Arc<dyn FieldFunction<T>>),
}

impl<T: Real> std::fmt::Debug for Load<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Load::Source(_) => f.write_str("Load::Source(..)"),
            Load::Manufactured(_) => f.write_str("Load::Manufactured(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Stop when the residual max-norm drops to this value.
    pub tol: f64,
    pub max_iter: usize,
    /// Floor on `κ` inside the solver; the error metric keeps the problem's `κ`.
    pub kappa_solve: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub quadrature_degree: usize,
    pub lattice_order: usize,
    pub direct_below: usize,
    pub cg_rel_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let lin = LinearSolver::default();
        Self {
            tol: 1e-10,
            max_iter: 50,
            kappa_solve: 1e-7,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 40,
            quadrature_degree: 4,
            lattice_order: DEFAULT_LATTICE_ORDER,
            direct_below: lin.direct_below,
            cg_rel_tol: lin.cg_rel_tol,
            cg_max_iter: lin.cg_max_iter,
        }
    }
}

impl SolverOptions {
    fn linear(&self) -> LinearSolver {
        LinearSolver { direct_below: self.direct_below, cg_rel_tol: self.cg_rel_tol, cg_max_iter: self.cg_max_iter }
    }
}

#[derive(Debug, Clone)]
pub struct Problem<T: Real> {
    pub phi: PhiFamily<T>,
    pub load: Load<T>,
    pub options: SolverOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveStats {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    /// Energy after the initial guess and after every accepted step.
    pub energies: Vec<f64>,
    /// `J(u_{k+1}) − J(u_k)` per step, free of the rounding in `energies`.
    pub energy_changes: Vec<f64>,
    pub step_lengths: Vec<f64>,
    pub linear_iterations: usize,
    pub kappa_effective: f64,
    pub frozen: bool,
}

/// Solution together with the data needed to measure it.
#[derive(Debug, Clone)]
pub struct Solution<T: Real> {
    pub u: FeFunction<T>,
    pub stats: SolveStats,
    pub frozen: Option<FrozenExponent<T>>,
}

fn l2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn max_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

impl<T: Real> Problem<T> {
    pub fn new(phi: PhiFamily<T>, load: Load<T>) -> Self {
        Self { phi, load, options: SolverOptions::default() }
    }

    fn assembler(&self, space: &Arc<FeSpace<T>>, frozen: Option<&FrozenExponent<T>>) -> Result<Assembler<T>> {
        Assembler::new(space, &self.phi, frozen, self.options.quadrature_degree)
    }

    /// The load vector over free dofs, assembled with the problem's `κ`.
    pub fn load_vector(&self, asm: &Assembler<T>) -> Vec<T> {
        match &self.load {
            Load::Source(f) => asm.source_load(f.as_ref()),
            Load::Manufactured(v) => asm.manufactured_load(v.as_ref()),
        }
    }

    /// Runs damped Newton and reports the final iterate even when it fails.
    pub fn solve_detailed(&self, space: &Arc<FeSpace<T>>, frozen: bool) -> Result<Solution<T>> {
        let opts = &self.options;
        if !(opts.tol >= 0.0) || opts.max_iter == 0 {
            return Err(Error::Argument("tolerance must be non-negative and max_iter positive".into()));
        }
        let frozen_p = if frozen { Some(freeze(space.mesh(), self.phi.exponent(), opts.lattice_order)?) } else { None };
        let base = self.assembler(space, frozen_p.as_ref())?;
        let load = self.load_vector(&base);
        let kappa_eff = base.kappa().max(T::lit(opts.kappa_solve));
        let asm = base.with_kappa(kappa_eff);
        let linear = opts.linear();
        let tol = T::lit(opts.tol);

        let mut stats = SolveStats {
            converged: false,
            iterations: 0,
            residual: f64::NAN,
            energies: Vec::new(),
            energy_changes: Vec::new(),
            step_lengths: Vec::new(),
            linear_iterations: 0,
            kappa_effective: kappa_eff.as_f64(),
            frozen,
        };

        let mut u = self.initial_guess(&asm, &load, &linear, &mut stats)?;
        let mut energy = asm.energy(&u, &load);
        stats.energies.push(energy.as_f64());
        let mut r = asm.residual(&u, &load);

        loop {
            let res = max_norm(&r);
            stats.residual = res.as_f64();
            if res <= tol {
                stats.converged = true;
                break;
            }
            if stats.iterations >= opts.max_iter {
                break;
            }
            let jac = asm.jacobian(&u)?;
            let neg_r: Vec<T> = r.iter().map(|&x| -x).collect();
            let (d, ls) = linear.solve(&jac, &neg_r)?;
            stats.linear_iterations += ls.iterations;
            let slope: T = r.iter().zip(&d).map(|(&a, &b)| a * b).sum();
            if !(slope < T::zero()) {
                // no descent left at working precision
                break;
            }
            let dir = FeFunction::from_free(space, &d)?;
            // once the predicted decrease is at rounding level of the energy,
            // the energy test is noise; fall back to the residual norm
            let noise = T::lit(1e3) * T::epsilon() * (energy.abs() + asm.internal_energy(&u) + T::one());
            let by_residual = -slope < noise;
            let r_norm = l2(&r);
            let mut t = T::one();
            let mut accepted = None;
            for _ in 0..=opts.max_backtracks {
                let trial = u.combine(T::one(), &dir, t);
                let de = asm.energy_difference(&u, &trial, &load);
                if by_residual {
                    let rt = asm.residual(&trial, &load);
                    if l2(&rt) <= (T::one() - T::lit(opts.armijo) * t) * r_norm {
                        accepted = Some((trial, de, rt));
                        break;
                    }
                } else if de <= T::lit(opts.armijo) * t * slope {
                    let rt = asm.residual(&trial, &load);
                    accepted = Some((trial, de, rt));
                    break;
                }
                t = t * T::lit(opts.backtrack);
            }
            let Some((next, de, rt)) = accepted else { break };
            u = next;
            r = rt;
            energy = energy + de;
            stats.iterations += 1;
            stats.energies.push(energy.as_f64());
            stats.energy_changes.push(de.as_f64());
            stats.step_lengths.push(t.as_f64());
        }
        Ok(Solution { u, stats, frozen: frozen_p })
    }

    /// Solves the discrete problem; non-convergence is an error.
    pub fn solve(&self, space: &Arc<FeSpace<T>>, frozen: bool) -> Result<(FeFunction<T>, SolveStats)> {
        let sol = self.solve_detailed(space, frozen)?;
        if !sol.stats.converged {
            return Err(Error::NonConvergence { iterations: sol.stats.iterations, residual: sol.stats.residual });
        }
        Ok((sol.u, sol.stats))
    }

    /// Zero for the quadratic problem; otherwise the best multiple of the
    /// Laplace solution along the energy.
    fn initial_guess(
        &self,
        asm: &Assembler<T>,
        load: &[T],
        linear: &LinearSolver,
        stats: &mut SolveStats,
    ) -> Result<FeFunction<T>> {
        let space = asm.space();
        let two = T::lit(2.0);
        let quadratic = asm.exponents().iter().all(|&p| p == two);
        if quadratic || load.iter().all(|&b| b == T::zero()) {
            return Ok(FeFunction::zeros(space));
        }
        let (w, ls) = linear.solve(&asm.stiffness(), load)?;
        stats.linear_iterations += ls.iterations;
        let w = FeFunction::from_free(space, &w)?;
        let zero = FeFunction::zeros(space);
        let along = |s: T| -asm.energy_difference(&zero, &w.combine(s, &zero, T::zero()), load);
        // coarse log scan, then golden section around the best sample
        let mut best = (T::zero(), T::zero());
        for k in -12..=12 {
            let s = two.powi(k);
            let v = along(s);
            if v > best.1 {
                best = (s, v);
            }
        }
        if best.0 == T::zero() {
            return Ok(zero);
        }
        let (s, _) = golden_section_max(along, best.0 / two, best.0 * two, T::lit(1e-6));
        Ok(w.combine(s, &zero, T::zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{ExponentField, ExponentKind};
    use crate::fem::SineProduct;
    use crate::geometry::Domain;
    use crate::mesh::Triangulation;

    fn space(n: usize) -> Arc<FeSpace<f64>> {
        FeSpace::scalar(Arc::new(Triangulation::generate(Domain::UnitSquare, n).unwrap())).unwrap()
    }

    fn problem(kind: ExponentKind<f64>, kappa: f64) -> Problem<f64> {
        let p = ExponentField::new(kind, Domain::UnitSquare).unwrap();
        Problem::new(
            PhiFamily::integral(p, kappa).unwrap(),
            Load::Manufactured(Arc::new(SineProduct { frequency: 1.0 })),
        )
    }

    #[test]
    fn quadratic_problem_takes_one_step() {
        let s = space(8);
        let pb = problem(ExponentKind::Constant { p: 2.0 }, 0.0);
        let (u, stats) = pb.solve(&s, false).unwrap();
        assert_eq!(stats.iterations, 1);
        // oracle: direct linear solve with the stiffness matrix
        let asm = Assembler::new(&s, &pb.phi, None, 4).unwrap();
        let b = pb.load_vector(&asm);
        let (x, _) = LinearSolver::default().solve(&asm.stiffness(), &b).unwrap();
        for (a, b) in u.free_values().iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nonlinear_problems_converge_with_decreasing_energy() {
        let s = space(8);
        for (kind, kappa) in [
            (ExponentKind::Constant { p: 3.0 }, 1e-4),
            (ExponentKind::Constant { p: 1.5 }, 1e-4),
            (ExponentKind::Sinusoidal { base: 2.0, amplitude: 0.5, frequency: 1.0 }, 0.0),
        ] {
            let pb = problem(kind, kappa);
            for frozen in [false, true] {
                let sol = pb.solve_detailed(&s, frozen).unwrap();
                assert!(sol.stats.converged, "{:?}", sol.stats);
                assert!(sol.stats.residual <= 1e-10);
                assert!(sol.stats.energies.windows(2).all(|w| w[1] <= w[0]));
                assert!(sol.stats.energy_changes.iter().all(|&d| d < 0.0), "{:?}", sol.stats.energy_changes);
                assert_eq!(sol.frozen.is_some(), frozen);
                assert!(sol.u.is_zero_trace());
            }
        }
    }

    #[test]
    fn solver_floor_on_kappa() {
        let s = space(4);
        let (_, stats) = problem(ExponentKind::Constant { p: 3.0 }, 0.0).solve(&s, false).unwrap();
        assert_eq!(stats.kappa_effective, 1e-7);
        let (_, stats) = problem(ExponentKind::Constant { p: 3.0 }, 0.5).solve(&s, false).unwrap();
        assert_eq!(stats.kappa_effective, 0.5);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let s = space(8);
        let mut pb = problem(ExponentKind::Constant { p: 3.0 }, 1e-4);
        pb.options.max_iter = 1;
        pb.options.tol = 0.0;
        let sol = pb.solve_detailed(&s, false).unwrap();
        assert!(!sol.stats.converged);
        assert!(matches!(pb.solve(&s, false), Err(Error::NonConvergence { iterations: 1, .. })));
    }

    #[test]
    fn results_are_reproducible() {
        let s = space(8);
        let pb = problem(ExponentKind::Sinusoidal { base: 2.0, amplitude: 0.5, frequency: 1.0 }, 0.0);
        let (a, sa) = pb.solve(&s, false).unwrap();
        let (b, sb) = pb.solve(&s, false).unwrap();
        assert_eq!(a.coeffs(), b.coeffs());
        assert_eq!(sa, sb);
    }

    #[test]
    fn zero_load_gives_zero_solution() {
        let s = space(4);
        let p = ExponentField::constant(3.0, Domain::UnitSquare).unwrap();
        let pb = Problem::new(PhiFamily::integral(p, 0.0).unwrap(), Load::Source(Arc::new(|_: &Point<f64>| vec![0.0])));
        let (u, stats) = pb.solve(&s, false).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn single_precision_solve() {
        let s = FeSpace::<f32>::scalar(Arc::new(Triangulation::generate(Domain::UnitSquare, 8).unwrap())).unwrap();
        let p = ExponentField::constant(3.0f32, Domain::UnitSquare).unwrap();
        let mut pb = Problem::new(
            PhiFamily::integral(p, 1e-3).unwrap(),
            Load::Manufactured(Arc::new(SineProduct { frequency: 1.0f32 })),
        );
        pb.options.tol = 1e-5;
        let (u, _) = pb.solve(&s, false).unwrap();
        assert!(u.max_abs() > 0.5 && u.max_abs() < 1.5);
    }
}
