//! Experiment description, loaded from JSON or TOML and patched by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stiefel_opt::problems::{Family, ProblemSpec, WoppType};
use stiefel_opt::{BbGradient, BbMode, MixParams, SearchMode, SolverConfig64, StepRule};

use crate::BenchError;

/// Solver settings that differ from the library defaults. Unset weights fall
/// back to the family preset (see [`preset_mix`]).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOverrides {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub eta: Option<f64>,
    pub mode: Option<SearchMode>,
    pub step_rule: Option<StepRule>,
    pub bb_mode: Option<BbMode>,
    pub bb_gradient: Option<BbGradient>,
    pub epsilon: Option<f64>,
    pub tolx: Option<f64>,
    pub tolf: Option<f64>,
    pub window: Option<usize>,
    pub max_iters: Option<usize>,
    pub tau0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub solver: SolverOverrides,
    #[serde(default = "default_sims")]
    pub sims: usize,
    /// Simulation `i` uses seed `seed + i`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Write the per-iteration log of the first simulation.
    #[serde(default = "default_true")]
    pub history: bool,
    /// Values of `alpha` to sweep, each paired with `beta = 1 - alpha`.
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
    /// Worker threads; `None` lets the pool decide, `1` runs sequentially.
    #[serde(default)]
    pub jobs: Option<usize>,
}

fn default_sims() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// Weights used when a config leaves `alpha` and `beta` unset: `0.5/0.5` for
/// well-conditioned WOPP, `1/0` for the ill-conditioned WOPP types and the
/// eigenvalue problem, `0.7/0.3` for total energy.
pub fn preset_mix(family: Family, ptype: WoppType) -> (f64, f64) {
    match (family, ptype) {
        (Family::Wopp, WoppType::P1) => (0.5, 0.5),
        (Family::Wopp, _) => (1.0, 0.0),
        (Family::Energy, _) => (0.7, 0.3),
        (Family::Eig, _) => (1.0, 0.0),
    }
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec) -> Self {
        Self {
            problem,
            solver: SolverOverrides::default(),
            sims: 1,
            seed: 0,
            out: None,
            history: true,
            sweep: None,
            jobs: None,
        }
    }

    /// Reads a config file; `.toml` files are parsed as TOML, anything else as JSON.
    pub fn from_path(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let cfg: Self = if is_toml {
            toml::from_str(&text).map_err(|e| BenchError::Config(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| BenchError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.sims == 0 {
            return Err(BenchError::Config("sims must be at least 1".into()));
        }
        let (rows, cols) = (self.problem.rows, self.problem.cols);
        if cols == 0 || rows < cols {
            return Err(BenchError::Config(format!(
                "need rows >= cols >= 1, got {rows}x{cols}"
            )));
        }
        if let Some(grid) = &self.sweep {
            if grid.is_empty() {
                return Err(BenchError::Config("sweep grid is empty".into()));
            }
            if let Some(a) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(BenchError::Config(format!("sweep value {a} is outside [0, 1]")));
            }
        }
        self.solver_config()?;
        Ok(())
    }

    pub fn mix(&self) -> (f64, f64) {
        let (pa, pb) = preset_mix(self.problem.family, self.problem.ptype);
        (self.solver.alpha.unwrap_or(pa), self.solver.beta.unwrap_or(pb))
    }

    /// Library defaults, then the family preset, then the overrides. Monotone
    /// mode restarts every search from `tau0` unless a step rule is given.
    pub fn solver_config(&self) -> Result<SolverConfig64, BenchError> {
        let o = &self.solver;
        let mut cfg = match o.mode {
            Some(SearchMode::Monotone) => SolverConfig64::monotone(),
            _ => SolverConfig64::default(),
        };
        let (alpha, beta) = self.mix();
        cfg.mix = MixParams::relaxed(alpha, beta)?;
        if let Some(v) = o.eta {
            cfg.eta = v;
        }
        if let Some(v) = o.step_rule {
            cfg.step_rule = v;
        }
        if let Some(v) = o.bb_mode {
            cfg.bb_mode = v;
        }
        if let Some(v) = o.bb_gradient {
            cfg.bb_gradient = v;
        }
        if let Some(v) = o.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = o.tolx {
            cfg.tolx = v;
        }
        if let Some(v) = o.tolf {
            cfg.tolf = v;
        }
        if let Some(v) = o.window {
            cfg.window = v;
        }
        if let Some(v) = o.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = o.tau0 {
            cfg.tau0 = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Both naming schemes for the variable's shape.
    pub fn dims_label(&self) -> String {
        let (rows, cols) = (self.problem.rows, self.problem.cols);
        match self.problem.family {
            Family::Wopp => format!("X is {rows}x{cols} (rows=m={rows}, cols=n=q={cols}; St({rows}, {cols}))"),
            Family::Energy => format!("X is {rows}x{cols} (n={rows}, k={cols})"),
            Family::Eig => format!("X is {rows}x{cols} (n={rows}, p={cols})"),
        }
    }
}
