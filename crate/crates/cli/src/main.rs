mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use pxfem::convergence::{frozen_quasi_norm_error, quasi_norm_error, run_study, ConvergenceReport};
use pxfem::fem::{FeSpace, Load, Problem};
use pxfem::mesh::{read_mesh, write_mesh, Triangulation};
use pxfem::probe::{probes_to_csv, run_probes};
use pxfem::{Error, PhiFamily};
use serde_json::json;

use config::RunConfig;

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_ASSERT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "pxfem", version, about = "Finite elements for the p(x)-Laplacian")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve once on the coarsest mesh (or the configured mesh file).
    Solve(Common),
    /// Run a convergence study over uniformly refined meshes.
    Study(Common),
    /// Run the configured lemma probes.
    Probe(Common),
    /// Generate or validate a mesh, refine it and write it out.
    Mesh(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

/// A failed run with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } | Error::Indefinite(_) | Error::Singular(_) => EXIT_SOLVER,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

fn assertion(message: String) -> Failure {
    Failure { code: EXIT_ASSERT, message }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure { code: EXIT_CONFIG, message: format!("cannot write {}: {e}", path.display()) })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (Command::Solve(common) | Command::Study(common) | Command::Probe(common) | Command::Mesh(common)) =
        &cli.command;
    let cfg = RunConfig::load(&common.config)?;
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&common.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", common.out.display())))?;
    match &cli.command {
        Command::Solve(c) => solve(&cfg, c),
        Command::Study(c) => study(&cfg, c),
        Command::Probe(c) => probe(&cfg, c),
        Command::Mesh(c) => mesh(&cfg, c),
    }
}

fn log(c: &Common, msg: impl AsRef<str>) {
    if c.verbose {
        eprintln!("{}", msg.as_ref());
    }
}

fn solve(cfg: &RunConfig, c: &Common) -> Result<(), Failure> {
    let study = cfg.study_config()?;
    let p = cfg.problem()?;
    let mesh = match &cfg.mesh.input {
        Some(path) => read_mesh::<f64>(path)?.with_domain(p.domain),
        None => Triangulation::generate(p.domain, cfg.mesh.n0)?,
    };
    log(c, format!("solving on {} cells", mesh.num_cells()));
    let space = FeSpace::scalar(Arc::new(mesh))?;
    let phi = PhiFamily::integral(study.exponent.build(p.domain)?, p.kappa)?;
    let exact = p.exact.field::<f64>();
    let mut problem = Problem::new(phi.clone(), Load::Manufactured(exact.clone()));
    problem.options = cfg.solver;
    let sol = problem.solve_detailed(&space, p.frozen)?;

    let mut csv = String::from("x,y,u_h,u_exact\n");
    for (v, x) in space.mesh().vertices().iter().enumerate() {
        let _ = writeln!(csv, "{:.17e},{:.17e},{:.17e},{:.17e}", x[0], x[1], sol.u.at_vertex(v)[0], exact.value(x)[0]);
    }
    write(&c.out.join("solution.csv"), &csv)?;
    let quasi_err = quasi_norm_error(&phi, exact.as_ref(), &sol.u)?;
    let frozen_err = match &sol.frozen {
        Some(pt) => Some(frozen_quasi_norm_error(&phi, pt, exact.as_ref(), &sol.u)?),
        None => None,
    };
    let stats = json!({
        "ndof": space.num_free(),
        "cells": space.mesh().num_cells(),
        "h": space.mesh().h(),
        "quasi_err": quasi_err,
        "frozen_quasi_err": frozen_err,
        "stats": sol.stats,
    });
    write(&c.out.join("stats.json"), &serde_json::to_string_pretty(&stats).unwrap_or_default())?;
    log(c, format!("{} Newton iterations, residual {:e}", sol.stats.iterations, sol.stats.residual));
    if !sol.stats.converged {
        return Err(Error::NonConvergence { iterations: sol.stats.iterations, residual: sol.stats.residual }.into());
    }
    Ok(())
}

fn write_report(cfg: &RunConfig, c: &Common, report: &ConvergenceReport) -> Result<(), Failure> {
    write(&c.out.join("convergence.csv"), &report.to_csv())?;
    write(&c.out.join("report.json"), &serde_json::to_string_pretty(report).unwrap_or_default())?;
    if cfg.study.svg {
        write(&c.out.join("convergence.svg"), &report.to_svg())?;
    }
    Ok(())
}

fn study(cfg: &RunConfig, c: &Common) -> Result<(), Failure> {
    let sc = cfg.study_config()?;
    log(c, format!("study with {} refinements from n0 = {}", sc.levels, sc.n0));
    let report = match run_study::<f64>(&sc) {
        Ok(r) => r,
        Err(e) => {
            write_report(cfg, c, &e.partial)?;
            let mut f = Failure::from(e.source);
            f.message = format!("level {}: {}", e.level, f.message);
            return Err(f);
        }
    };
    write_report(cfg, c, &report)?;
    for r in &report.rows {
        log(c, format!("level {} h={:.4e} err={:.4e} eoc={:?}", r.level, r.h, r.quasi_err, r.eoc));
    }
    if let Some(bound) = cfg.study.assert_eoc {
        match report.final_eoc() {
            Some(e) if e >= bound => {}
            got => return Err(assertion(format!("final EOC {got:?} below asserted {bound}"))),
        }
    }
    if let Some(bound) = cfg.study.assert_frozen_eoc {
        match report.final_frozen_eoc() {
            Some(e) if e >= bound => {}
            got => return Err(assertion(format!("final frozen EOC {got:?} below asserted {bound}"))),
        }
    }
    if cfg.study.assert_monotone && !report.errors_monotone() {
        return Err(assertion("errors do not decrease monotonically".into()));
    }
    Ok(())
}

fn probe(cfg: &RunConfig, c: &Common) -> Result<(), Failure> {
    if cfg.probe.probes.is_empty() {
        return Err(Error::Config("no probes configured".into()).into());
    }
    let seed = c.seed.or(cfg.seed).unwrap_or(0);
    log(c, format!("running {} probes with seed {seed}", cfg.probe.probes.len()));
    let rows = run_probes(&cfg.probe.probes, seed)?;
    write(&c.out.join("probes.csv"), &probes_to_csv(&rows))
}

fn mesh(cfg: &RunConfig, c: &Common) -> Result<(), Failure> {
    let domain = cfg.problem.as_ref().map(|p| p.domain);
    let mut mesh = match &cfg.mesh.input {
        Some(path) => {
            let m = read_mesh::<f64>(path)?;
            match domain {
                Some(d) => m.with_domain(d),
                None => m,
            }
        }
        None => Triangulation::generate(domain.unwrap_or(pxfem::Domain::UnitSquare), cfg.mesh.n0)?,
    };
    for _ in 0..cfg.mesh.levels {
        mesh = mesh.refine_uniform()?;
    }
    let (h, gamma) = mesh.shape_metrics()?;
    log(c, format!("{} vertices, {} cells, h = {h:.4e}", mesh.num_vertices(), mesh.num_cells()));
    write_mesh(&mesh, c.out.join("mesh.pxmesh"))?;
    let info = json!({
        "vertices": mesh.num_vertices(),
        "cells": mesh.num_cells(),
        "boundary_vertices": mesh.boundary_vertices().len(),
        "level": mesh.level(),
        "h": h,
        "shape_regularity": gamma,
        "euler_characteristic": mesh.euler_characteristic(),
        "area": mesh.area(),
    });
    write(&c.out.join("mesh.json"), &serde_json::to_string_pretty(&info).unwrap_or_default())
}
