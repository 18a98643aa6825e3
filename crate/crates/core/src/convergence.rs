//! Quasi-norm errors, experimental orders of convergence and the
//! convergence-study driver.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::errors::{Error, Result};
use crate::exponent::ExponentSpec;
use crate::fem::{
    Assembler, FeFunction, FeSpace, FieldFunction, FrozenExponent, Load, Problem, SineProduct, SolverOptions,
};
use crate::geometry::Domain;
use crate::interp::Interpolator;
use crate::mesh::Triangulation;
use crate::nfunction::PhiFamily;
use crate::scalar::Real;

/// Quadrature degree shared by assembly and error measurement.
pub const ERROR_QUADRATURE_DEGREE: usize = 4;

/// `‖F(·,∇v) − F(·,∇v_h)‖₂`.
pub fn quasi_norm_error<T: Real>(phi: &PhiFamily<T>, v: &dyn FieldFunction<T>, vh: &FeFunction<T>) -> Result<T> {
    Ok(Assembler::new(vh.space(), phi, None, ERROR_QUADRATURE_DEGREE)?.quasi_norm_distance(v, vh))
}

/// `‖F_T(·,∇v) − F_T(·,∇v_h)‖₂` with the cellwise frozen exponent.
pub fn frozen_quasi_norm_error<T: Real>(
    phi: &PhiFamily<T>,
    frozen: &FrozenExponent<T>,
    v: &dyn FieldFunction<T>,
    vh: &FeFunction<T>,
) -> Result<T> {
    if frozen.values().len() != vh.space().mesh().num_cells() {
        return Err(Error::Argument("frozen exponent belongs to a different mesh".into()));
    }
    Ok(Assembler::new(vh.space(), phi, Some(frozen), ERROR_QUADRATURE_DEGREE)?.quasi_norm_distance(v, vh))
}

/// Galerkin error over the error of `Π_h v`; `None` when `Π_h v` is exact.
pub fn cea_ratio<T: Real>(
    phi: &PhiFamily<T>,
    v: &dyn FieldFunction<T>,
    vh: &FeFunction<T>,
    interp: &FeFunction<T>,
) -> Result<Option<T>> {
    if !Arc::ptr_eq(vh.space(), interp.space()) {
        return Err(Error::Argument("both functions must live on the same space".into()));
    }
    let den = quasi_norm_error(phi, v, interp)?;
    if den == T::zero() {
        return Ok(None);
    }
    Ok(Some(quasi_norm_error(phi, v, vh)? / den))
}

/// `log(e_{k−1}/e_k) / log(h_{k−1}/h_k)`; NaN where an error is not positive.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(Error::Argument(format!(
            "need two or more matching entries (got {} errors, {} mesh sizes)",
            errors.len(),
            hs.len()
        )));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| {
            if e[0] > 0.0 && e[1] > 0.0 && h[0] > 0.0 && h[1] > 0.0 && h[0] != h[1] {
                (e[0] / e[1]).ln() / (h[0] / h[1]).ln()
            } else {
                f64::NAN
            }
        })
        .collect())
}

/// Manufactured exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExactSolution {
    /// `sin(kπx₁)·sin(kπx₂)`.
    SineProduct { frequency: f64 },
}

impl Default for ExactSolution {
    fn default() -> Self {
        ExactSolution::SineProduct { frequency: 1.0 }
    }
}

impl ExactSolution {
    pub fn field<T: Real>(&self) -> Arc<dyn FieldFunction<T>> {
        match *self {
            ExactSolution::SineProduct { frequency } => Arc::new(SineProduct { frequency: T::lit(frequency) }),
        }
    }

    /// Whether the field vanishes on the boundary of `domain`.
    pub fn vanishes_on(&self, domain: Domain) -> bool {
        match (*self, domain) {
            (ExactSolution::SineProduct { frequency }, Domain::UnitSquare) => frequency.fract() == 0.0,
            // the re-entrant edges sit on x = ½ and y = ½
            (ExactSolution::SineProduct { frequency }, Domain::LShape) => (frequency / 2.0).fract() == 0.0,
        }
    }
}

fn default_domain() -> Domain {
    Domain::UnitSquare
}

fn default_n0() -> usize {
    4
}

fn default_levels() -> usize {
    4
}

/// Parameters of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_domain")]
    pub domain: Domain,
    pub exponent: ExponentSpec,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub exact: ExactSolution,
    /// Subdivisions of the coarsest mesh.
    #[serde(default = "default_n0")]
    pub n0: usize,
    /// Number of uniform refinements after the coarsest level.
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Also solve the frozen-exponent scheme.
    #[serde(default)]
    pub frozen: bool,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl StudyConfig {
    pub fn new(domain: Domain, exponent: ExponentSpec, kappa: f64) -> Self {
        Self {
            domain,
            exponent,
            kappa,
            exact: ExactSolution::default(),
            n0: default_n0(),
            levels: default_levels(),
            frozen: false,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n0 == 0 {
            return Err(Error::Config("n0 must be positive".into()));
        }
        if self.domain == Domain::LShape && !self.n0.is_multiple_of(2) {
            return Err(Error::Config("the L-shape needs an even n0".into()));
        }
        if !self.exact.vanishes_on(self.domain) {
            return Err(Error::Config("exact solution does not vanish on the boundary".into()));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::Config(format!("kappa must lie in [0,1] (got {})", self.kappa)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub ndof: usize,
    pub quasi_err: f64,
    pub eoc: Option<f64>,
    pub frozen_quasi_err: Option<f64>,
    pub frozen_eoc: Option<f64>,
    pub interp_err: f64,
    /// `None` when `Π_h v` is exact.
    pub cea_ratio: Option<f64>,
    pub newton_iters: usize,
    pub frozen_newton_iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyMetadata {
    pub exponent: String,
    pub alpha: f64,
    pub kappa: f64,
    pub domain: Domain,
    pub n0: usize,
    pub levels: usize,
    pub frozen: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub metadata: StudyMetadata,
    pub rows: Vec<ConvergenceRow>,
}

/// A study aborted by a failing level, with the levels completed before it.
#[derive(Debug, thiserror::Error)]
#[error("study aborted at level {level}: {source}")]
pub struct StudyError {
    pub level: usize,
    pub partial: Box<ConvergenceReport>,
    #[source]
    pub source: Error,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.10e}"))
}

fn fmt_rate(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_nan() => "NaN".into(),
        Some(x) => format!("{x:.6}"),
        None => String::new(),
    }
}

// label, colour, (h, error) points
type Series<'a> = (&'a str, &'a str, Vec<(f64, f64)>);

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str =
        "level,h,ndof,quasi_err,eoc,frozen_quasi_err,frozen_eoc,interp_err,cea_ratio,newton_iters";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let cea = match r.cea_ratio {
                Some(c) => format!("{c:.6}"),
                None => "exact".into(),
            };
            let _ = writeln!(
                out,
                "{},{:.10e},{},{:.10e},{},{},{},{:.10e},{},{}",
                r.level,
                r.h,
                r.ndof,
                r.quasi_err,
                fmt_rate(r.eoc),
                fmt_opt(r.frozen_quasi_err),
                fmt_rate(r.frozen_eoc),
                r.interp_err,
                cea,
                r.newton_iters
            );
        }
        out
    }

    /// Rate between the last two levels.
    pub fn final_eoc(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.eoc)
    }

    pub fn final_frozen_eoc(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.frozen_eoc)
    }

    /// Whether every error column decreases from level to level.
    pub fn errors_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].quasi_err < w[0].quasi_err
                && w[1].interp_err < w[0].interp_err
                && match (w[0].frozen_quasi_err, w[1].frozen_quasi_err) {
                    (Some(a), Some(b)) => b < a,
                    _ => true,
                }
        })
    }

    /// `max/min` of the recorded Céa ratios.
    pub fn cea_spread(&self) -> Option<f64> {
        let c: Vec<f64> = self.rows.iter().filter_map(|r| r.cea_ratio).collect();
        if c.is_empty() {
            return None;
        }
        let max = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = c.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max / min)
    }

    /// Log-log plot of the error columns against `h` with a reference slope `α`.
    pub fn to_svg(&self) -> String {
        let (w, hgt, pad) = (640.0, 480.0, 60.0);
        let mut series: Vec<Series> = vec![
            ("quasi_err", "#1f77b4", self.rows.iter().map(|r| (r.h, r.quasi_err)).collect()),
            ("interp_err", "#2ca02c", self.rows.iter().map(|r| (r.h, r.interp_err)).collect()),
        ];
        let frozen: Vec<(f64, f64)> = self.rows.iter().filter_map(|r| r.frozen_quasi_err.map(|e| (r.h, e))).collect();
        if !frozen.is_empty() {
            series.push(("frozen_quasi_err", "#d62728", frozen));
        }
        let pts: Vec<(f64, f64)> =
            series.iter().flat_map(|s| s.2.iter().copied()).filter(|&(h, e)| h > 0.0 && e > 0.0).collect();
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{hgt}\" viewBox=\"0 0 {w} {hgt}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        );
        if pts.is_empty() {
            svg.push_str("</svg>\n");
            return svg;
        }
        let lx: Vec<f64> = pts.iter().map(|p| p.0.log10()).collect();
        let ly: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
        let (x0, x1) =
            (lx.iter().copied().fold(f64::INFINITY, f64::min), lx.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let (y0, y1) =
            (ly.iter().copied().fold(f64::INFINITY, f64::min), ly.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let (x0, x1) = (x0 - 0.1, x1 + 0.1);
        let (y0, y1) = (y0 - 0.2, y1 + 0.2);
        let sx = |x: f64| pad + (x.log10() - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| hgt - pad - (y.log10() - y0) / (y1 - y0) * (hgt - 2.0 * pad);
        let _ = writeln!(
            svg,
            "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            w - 2.0 * pad,
            hgt - 2.0 * pad
        );
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">h</text>", w / 2.0, hgt - 15.0);
        let _ = writeln!(
            svg,
            "<text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">error</text>",
            hgt / 2.0,
            hgt / 2.0
        );
        for (i, (name, colour, data)) in series.iter().enumerate() {
            let path: Vec<String> = data
                .iter()
                .filter(|&&(h, e)| h > 0.0 && e > 0.0)
                .map(|&(h, e)| format!("{:.2},{:.2}", sx(h), sy(e)))
                .collect();
            let _ = writeln!(
                svg,
                "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{}\"/>",
                path.join(" ")
            );
            for p in &path {
                let (cx, cy) = p.split_once(',').unwrap_or(("0", "0"));
                let _ = writeln!(svg, "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"3\" fill=\"{colour}\"/>");
            }
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" fill=\"{colour}\">{name}</text>",
                pad + 10.0,
                pad + 20.0 + 18.0 * i as f64
            );
        }
        // reference slope through the finest quasi-norm error
        if let Some(last) = self.rows.last().filter(|r| r.quasi_err > 0.0) {
            let first_h = self.rows[0].h;
            let alpha = self.metadata.alpha;
            let e0 = last.quasi_err * (first_h / last.h).powf(alpha);
            let _ = writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>",
                sx(first_h),
                sy(e0 * 0.5),
                sx(last.h),
                sy(last.quasi_err * 0.5)
            );
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" fill=\"gray\">slope {alpha}</text>",
                pad + 10.0,
                pad + 20.0 + 18.0 * series.len() as f64
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// Solves the exact-exponent (and optionally frozen) problem on `n0·2^k`
/// meshes for `k = 0..=levels` and measures the errors.
pub fn run_study<T: Real>(cfg: &StudyConfig) -> Result<ConvergenceReport, StudyError> {
    let fail =
        |level, partial: &ConvergenceReport, source| StudyError { level, partial: Box::new(partial.clone()), source };
    let empty = ConvergenceReport {
        metadata: StudyMetadata {
            exponent: format!("{:?}", cfg.exponent),
            alpha: f64::NAN,
            kappa: cfg.kappa,
            domain: cfg.domain,
            n0: cfg.n0,
            levels: cfg.levels,
            frozen: cfg.frozen,
            notes: vec![],
        },
        rows: vec![],
    };
    cfg.validate().map_err(|e| fail(0, &empty, e))?;
    let exponent = cfg.exponent.build::<T>(cfg.domain).map_err(|e| fail(0, &empty, e))?;
    let phi = PhiFamily::integral(exponent, T::lit(cfg.kappa)).map_err(|e| fail(0, &empty, e))?;
    let alpha = phi.exponent().holder_alpha().as_f64();
    let mut notes = Vec::new();
    if alpha < 1.0 {
        notes.push(format!(
            "exponent is only C^{{0,{alpha}}}: the rate h^{alpha} needs F(.,grad v) in W^(1,2), which is not expected here; the observed rate is recorded as is"
        ));
    }
    if cfg.domain == Domain::LShape {
        notes.push("re-entrant corner limits regularity; rates are recorded, not asserted".into());
    }
    let mut report = ConvergenceReport {
        metadata: StudyMetadata { exponent: phi.exponent().descriptor(), alpha, notes, ..empty.metadata },
        rows: vec![],
    };
    let v = cfg.exact.field::<T>();
    let mut problem = Problem::new(phi.clone(), Load::Manufactured(v.clone()));
    problem.options = cfg.solver;

    let mut mesh = Triangulation::<T>::generate(cfg.domain, cfg.n0).map_err(|e| fail(0, &report, e))?;
    for level in 0..=cfg.levels {
        if level > 0 {
            mesh = mesh.refine_uniform().map_err(|e| fail(level, &report, e))?;
        }
        let row =
            study_level(&problem, &phi, v.as_ref(), &mesh, level, cfg.frozen).map_err(|e| fail(level, &report, e))?;
        report.rows.push(row);
        fill_rates(&mut report.rows);
    }
    Ok(report)
}

fn study_level<T: Real>(
    problem: &Problem<T>,
    phi: &PhiFamily<T>,
    v: &dyn FieldFunction<T>,
    mesh: &Triangulation<T>,
    level: usize,
    frozen: bool,
) -> Result<ConvergenceRow> {
    let space = FeSpace::scalar(Arc::new(mesh.clone()))?;
    let (uh, stats) = problem.solve(&space, false)?;
    let quasi_err = quasi_norm_error(phi, v, &uh)?;
    let interp = Interpolator::new(&space, true).interpolate(v)?;
    let interp_err = quasi_norm_error(phi, v, &interp)?;
    let cea = cea_ratio(phi, v, &uh, &interp)?;
    let (frozen_quasi_err, frozen_newton_iters) = if frozen {
        let sol = problem.solve_detailed(&space, true)?;
        if !sol.stats.converged {
            return Err(Error::NonConvergence { iterations: sol.stats.iterations, residual: sol.stats.residual });
        }
        let pt = sol.frozen.as_ref().ok_or_else(|| Error::Argument("frozen solve lost its exponent".into()))?;
        (Some(frozen_quasi_norm_error(phi, pt, v, &sol.u)?.as_f64()), Some(sol.stats.iterations))
    } else {
        (None, None)
    };
    Ok(ConvergenceRow {
        level,
        h: mesh.h().as_f64(),
        ndof: space.num_free(),
        quasi_err: quasi_err.as_f64(),
        eoc: None,
        frozen_quasi_err,
        frozen_eoc: None,
        interp_err: interp_err.as_f64(),
        cea_ratio: cea.map(|c| c.as_f64()),
        newton_iters: stats.iterations,
        frozen_newton_iters,
    })
}

fn fill_rates(rows: &mut [ConvergenceRow]) {
    let n = rows.len();
    if n < 2 {
        return;
    }
    let hs = [rows[n - 2].h, rows[n - 1].h];
    let rate = |a: f64, b: f64| eoc(&[a, b], &hs).map(|r| r[0]).unwrap_or(f64::NAN);
    rows[n - 1].eoc = Some(rate(rows[n - 2].quasi_err, rows[n - 1].quasi_err));
    if let (Some(a), Some(b)) = (rows[n - 2].frozen_quasi_err, rows[n - 1].frozen_quasi_err) {
        rows[n - 1].frozen_eoc = Some(rate(a, b));
    }
}
