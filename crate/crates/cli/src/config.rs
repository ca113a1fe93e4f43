//! Run configuration, read from a TOML file.
//!
//! ```toml
//! [problem]
//! n = 4
//! m = 2
//! sector = "biaxial-tau"
//!
//! [problem.nonlinearity]
//! family = "power"
//! p = 3.0
//! mass = 1.0
//!
//! [grid]
//! r_max = 15.0
//! delta = 0.1
//! ```
//!
//! Every section and key is optional; missing values take the defaults below.

use std::path::{Path, PathBuf};

use quasilin::grid::{Sector, SectorSpec};
use quasilin::nonlinearity::BLNonlinearity;
use quasilin::pohozaev::{FunctionalContext, Transform};
use quasilin::solver::{MountainPassConfig, SolveConfig};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub paths: PathsConfig,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    /// Block size of the biaxial sectors; ignored for `radial`.
    pub m: usize,
    pub sector: String,
    pub kappa: f64,
    /// `"dual"`, or `"identity"` to replace `g` by the identity (semilinear
    /// calibration runs only).
    pub transform: String,
    pub nonlinearity: NonlinearityConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearityConfig {
    /// `"power"`: `|t|^{p-1}t - mass·t`; `"saturable"`: `t³/(1+t²) - mass·t`.
    pub family: String,
    pub p: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub r_max: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub precondition_shift: f64,
    /// Number of path seeds minimized from; more than one runs a multistart.
    pub starts: usize,
    /// Mountain-pass searches between the lowest solution and its mirror.
    pub saddles: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub k: usize,
    /// Fixed outer scale; tuned when absent.
    pub r: Option<f64>,
    /// Random points of `Σ_k` added to its vertices for tuning.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub p: Vec<f64>,
    pub mass: Vec<f64>,
    pub n: Vec<usize>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            n: 3,
            m: 0,
            sector: "radial".into(),
            kappa: 1.0,
            transform: "dual".into(),
            nonlinearity: NonlinearityConfig::default(),
        }
    }
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self {
            family: "power".into(),
            p: 3.0,
            mass: 1.0,
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { r_max: 20.0, delta: 0.05 }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveConfig::default();
        Self {
            grad_tol: d.grad_tol,
            max_iter: d.max_iter,
            precondition_shift: d.precondition_shift,
            starts: 1,
            saddles: 0,
        }
    }
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            k: 1,
            r: None,
            samples: 100,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            p: vec![2.5, 3.0, 3.5],
            mass: vec![1.0],
            n: vec![3],
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks everything that can be checked without running a computation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.spec()?;
        self.nonlinearity()?;
        self.transform()?;
        if !(self.grid.r_max.is_finite() && self.grid.r_max > 0.0) {
            return Err(CliError::Config(format!("grid.r_max must be positive, got {}", self.grid.r_max)));
        }
        if !(self.grid.delta.is_finite() && self.grid.delta > 0.0 && self.grid.delta * 4.0 <= self.grid.r_max) {
            return Err(CliError::Config(format!(
                "grid.delta must be positive and at most r_max/4, got {}",
                self.grid.delta
            )));
        }
        self.solve_config().validate()?;
        if self.solver.starts == 0 {
            return Err(CliError::Config("solver.starts must be at least 1".into()));
        }
        if self.paths.k == 0 {
            return Err(CliError::Config("paths.k must be at least 1".into()));
        }
        if let Some(r) = self.paths.r {
            if !(r >= 10.0 * self.paths.k as f64) {
                return Err(CliError::Config(format!("paths.r = {r} must be at least 10k")));
            }
        }
        Ok(())
    }

    pub fn sector(&self) -> Result<Sector, CliError> {
        Ok(self.problem.sector.parse()?)
    }

    pub fn spec(&self) -> Result<SectorSpec, CliError> {
        Ok(match self.sector()? {
            Sector::Radial => SectorSpec::radial(self.problem.n)?,
            s => SectorSpec::new(self.problem.n, self.problem.m, s)?,
        })
    }

    pub fn nonlinearity(&self) -> Result<BLNonlinearity, CliError> {
        nonlinearity_for(&self.problem.nonlinearity, self.problem.n)?
            .with_kappa(self.problem.kappa)
            .map_err(Into::into)
    }

    pub fn transform(&self) -> Result<Transform, CliError> {
        match self.problem.transform.as_str() {
            "dual" => Ok(Transform::default()),
            "identity" => Ok(Transform::Identity),
            other => Err(CliError::Config(format!("unknown transform '{other}' (dual | identity)"))),
        }
    }

    pub fn context(&self) -> Result<FunctionalContext, CliError> {
        Ok(FunctionalContext::new(self.transform()?, self.nonlinearity()?, self.spec()?))
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            grad_tol: self.solver.grad_tol,
            max_iter: self.solver.max_iter,
            precondition_shift: self.solver.precondition_shift,
            ..SolveConfig::default()
        }
    }

    pub fn mountain_pass_config(&self) -> MountainPassConfig {
        MountainPassConfig {
            grad_tol: self.solver.grad_tol,
            precondition_shift: self.solver.precondition_shift,
            ..MountainPassConfig::default()
        }
    }
}

pub fn nonlinearity_for(cfg: &NonlinearityConfig, n: usize) -> Result<BLNonlinearity, CliError> {
    match cfg.family.as_str() {
        "power" => Ok(BLNonlinearity::model_power(cfg.p, cfg.mass, n)?),
        "saturable" => Ok(BLNonlinearity::saturable(cfg.mass)?),
        other => Err(CliError::Config(format!("unknown nonlinearity family '{other}' (power | saturable)"))),
    }
}
