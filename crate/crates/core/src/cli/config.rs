//! Run configuration: defaults, then a TOML file, then the
//! `LANEMIX_OUTPUT_DIR` environment variable, then command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::lemma_verify::{DEFAULT_N, DEFAULT_S};
use crate::reduction::{BallPolicy, ForcingModel};

use super::CliError;

pub const OUTPUT_DIR_ENV: &str = "LANEMIX_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub lemma: LemmaConfig,
    pub solve: SolveConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub r_max: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// relative tolerance of the hypergeometric and Euler routes
    pub hypergeometric: f64,
    /// closed form vs singular-integral oracle
    pub fraclap: f64,
    /// Gaussian multiplier route vs oracle, and grid ⟨·,·⟩_s vs oracle
    pub convention: f64,
    pub fixed_point: f64,
    /// |F| ≤ bifurcation·(ε+μ) ends the λ bisection
    pub bifurcation: f64,
    pub pde_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaConfig {
    pub n_list: Vec<u32>,
    pub s_list: Vec<f64>,
    pub h_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub n: u32,
    pub s: f64,
    pub eps: f64,
    pub eps_list: Vec<f64>,
    pub alpha: Option<f64>,
    pub lambda_bracket: Option<(f64, f64)>,
    pub ball_policy: BallPolicy,
    pub forcing: ForcingModel,
    pub max_iterations: usize,
    pub ball_pairs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("lanemix-out"),
            seed: 20240601,
            workers: 4,
            grid: GridConfig::default(),
            tolerances: Tolerances::default(),
            lemma: LemmaConfig::default(),
            solve: SolveConfig::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { r_max: 100.0, size: 1024 }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { hypergeometric: 1e-9, fraclap: 1e-4, convention: 1e-5, fixed_point: 1e-10, bifurcation: 1e-8, pde_residual: 1e-6 }
    }
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self { n_list: DEFAULT_N.to_vec(), s_list: DEFAULT_S.to_vec(), h_samples: 1000 }
    }
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            n: 3,
            s: 0.5,
            eps: 1e-2,
            eps_list: vec![1e-1, 3e-2, 1e-2],
            alpha: None,
            lambda_bracket: None,
            ball_policy: BallPolicy::Enforce,
            forcing: ForcingModel::GridConsistent,
            max_iterations: 200,
            ball_pairs: 10,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", p.display())))?
            }
            None => Self::default(),
        };
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            cfg.output_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        for (name, v) in [
            ("hypergeometric", t.hypergeometric),
            ("fraclap", t.fraclap),
            ("convention", t.convention),
            ("fixed_point", t.fixed_point),
            ("bifurcation", t.bifurcation),
            ("pde_residual", t.pde_residual),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        if self.workers == 0 {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg: RunConfig = toml::from_str("seed = 7\n[solve]\nn = 5\neps_list = [0.05]\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.solve.n, 5);
        assert_eq!(cfg.solve.s, 0.5);
        assert_eq!(cfg.grid, GridConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("sede = 7\n").is_err());
    }
}
