use std::path::{Path, PathBuf};

use pxfem::convergence::{ExactSolution, StudyConfig};
use pxfem::fem::SolverOptions;
use pxfem::probe::ProbeSpec;
use pxfem::{Domain, Error, ExponentSpec, Result};
use serde::Deserialize;

fn default_domain() -> Domain {
    Domain::UnitSquare
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default = "default_domain")]
    pub domain: Domain,
    pub exponent: ExponentSpec,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub exact: ExactSolution,
    #[serde(default)]
    pub frozen: bool,
}

fn default_n0() -> usize {
    4
}

fn default_levels() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    #[serde(default = "default_n0")]
    pub n0: usize,
    /// Refinements after `n0`; a study runs levels `0..=levels`.
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Mesh file used instead of the generator by `solve` and `mesh`.
    #[serde(default)]
    pub input: Option<PathBuf>,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self { n0: default_n0(), levels: default_levels(), input: None }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    /// Minimum final quasi-norm EOC; a miss exits with status 3.
    #[serde(default)]
    pub assert_eoc: Option<f64>,
    #[serde(default)]
    pub assert_frozen_eoc: Option<f64>,
    /// Require every error column to decrease with `h`.
    #[serde(default)]
    pub assert_monotone: bool,
    #[serde(default = "yes")]
    pub svg: bool,
}

impl Default for StudySection {
    fn default() -> Self {
        Self { assert_eoc: None, assert_frozen_eoc: None, assert_monotone: false, svg: true }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default)]
    pub probes: Vec<ProbeSpec>,
}

/// Everything a run needs besides paths and verbosity.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub problem: Option<ProblemSection>,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        // relative mesh paths are taken from the config's directory
        if let (Some(input), Some(dir)) = (cfg.mesh.input.as_mut(), path.parent()) {
            if input.is_relative() {
                *input = dir.join(&*input);
            }
        }
        Ok(cfg)
    }

    pub fn problem(&self) -> Result<&ProblemSection> {
        self.problem.as_ref().ok_or_else(|| Error::Config("missing \"problem\" section".into()))
    }

    pub fn study_config(&self) -> Result<StudyConfig> {
        let p = self.problem()?;
        let cfg = StudyConfig {
            domain: p.domain,
            exponent: p.exponent.clone(),
            kappa: p.kappa,
            exact: p.exact,
            n0: self.mesh.n0,
            levels: self.mesh.levels,
            frozen: p.frozen,
            solver: self.solver,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
