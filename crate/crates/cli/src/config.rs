use std::path::{Path, PathBuf};

use bundle_accel::objectives::ObjectiveSpec;
use bundle_accel::solvers::{SolverConfig, SolverKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One experiment. Read from a TOML `key = value` file, then overridden by
/// command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `worst-case:<n>` or `psd-quad:<n>:<seed>`
    pub objective: String,
    /// `gd`, `agd`, `pbm`, `pbm-single` or `apbm`
    pub solver: String,
    pub rho: f64,
    pub beta: f64,
    /// Outer iterations; subproblem solves for `pbm-single`.
    pub iterations: usize,
    /// Seed for diagnostic sampling.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_inner: Option<usize>,
    /// Record bundle models and run the certificate checks after the solve.
    pub diagnostics: bool,
    /// CSV destination; the JSON sidecar goes next to it.
    pub output_path: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            objective: "worst-case:500".into(),
            solver: "apbm".into(),
            rho: 1.0,
            beta: 0.5,
            iterations: 1000,
            seed: 0,
            max_inner: None,
            diagnostics: false,
            output_path: PathBuf::from("run.csv"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config fields are plain values")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn objective_spec(&self) -> Result<ObjectiveSpec, CliError> {
        Ok(self.objective.parse::<ObjectiveSpec>()?)
    }

    pub fn solver_kind(&self) -> Result<SolverKind, CliError> {
        Ok(self.solver.parse::<SolverKind>()?)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.objective_spec()?;
        let kind = self.solver_kind()?;
        if kind.is_bundle() {
            if !(self.rho > 0.0 && self.rho.is_finite()) {
                return Err(CliError::Config(format!("rho must be positive, got {}", self.rho)));
            }
            if !(self.beta > 0.0 && self.beta < 1.0) {
                return Err(CliError::Config(format!(
                    "beta must lie in (0, 1), got {}",
                    self.beta
                )));
            }
        }
        if self.iterations == 0 {
            return Err(CliError::Config("iterations must be at least 1".into()));
        }
        if self.max_inner == Some(0) {
            return Err(CliError::Config("max_inner must be at least 1".into()));
        }
        Ok(())
    }

    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        self.validate()?;
        Ok(SolverConfig {
            max_inner: self.max_inner,
            ..SolverConfig::new(self.solver_kind()?, self.rho, self.beta, self.iterations)
        })
    }
}

/// Flag values; each one that is present replaces the config value.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct ConfigOverrides {
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "iters", visible_alias = "iterations")]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_inner: Option<usize>,
    #[arg(long)]
    pub diagnostics: bool,
    #[arg(long = "output", short = 'o')]
    pub output_path: Option<PathBuf>,
}

impl ConfigOverrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = &self.objective {
            cfg.objective = v.clone();
        }
        if let Some(v) = &self.solver {
            cfg.solver = v.clone();
        }
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.max_inner {
            cfg.max_inner = Some(v);
        }
        if self.diagnostics {
            cfg.diagnostics = true;
        }
        if let Some(v) = &self.output_path {
            cfg.output_path = v.clone();
        }
    }

    /// Config file (or defaults) with these flags applied on top.
    pub fn resolve(&self, file: Option<&Path>) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match file {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        self.apply(&mut cfg);
        Ok(cfg)
    }
}
