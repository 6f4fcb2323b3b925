//! The `lanemix` command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 regime error.

pub mod commands;
pub mod config;
pub mod oracle;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::lemma_verify::LemmaError;
use crate::radialgrid::GridError;
use crate::reduction::{BallPolicy, ForcingModel, ReductionError};

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("regime: {0}")]
    Regime(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) | CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Regime(_) => 3,
        }
    }
}

impl From<LemmaError> for CliError {
    fn from(e: LemmaError) -> Self {
        match e {
            LemmaError::Invalid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Verification(e.to_string()),
        }
    }
}

impl From<ReductionError> for CliError {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::Param(_) | ReductionError::Invalid(_) | ReductionError::Grid(GridError::Usage(_)) => {
                CliError::Usage(e.to_string())
            }
            ReductionError::Regime { .. } | ReductionError::NonConvergence { .. } | ReductionError::Solver { .. } => {
                CliError::Regime(e.to_string())
            }
            _ => CliError::Verification(e.to_string()),
        }
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::Io(io) => CliError::Io(io),
            GridError::Usage(_) => CliError::Usage(e.to_string()),
            _ => CliError::Verification(e.to_string()),
        }
    }
}

impl From<crate::profiles::ParamError> for CliError {
    fn from(e: crate::profiles::ParamError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Verification(format!("serialization: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "lanemix", version, about = "Bubble-perturbation solutions of the mixed local/nonlocal Lane-Emden equation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (also settable with LANEMIX_OUTPUT_DIR)
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Seed for the random ball pairs
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Truncation radius of the radial grid
    #[arg(long, global = true)]
    pub r_max: Option<f64>,
    /// Number of grid nodes
    #[arg(long, global = true)]
    pub grid_size: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify the signs of A, B and H(ρ) over an (n, s) matrix
    VerifyLemma {
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<u32>>,
        #[arg(long, value_delimiter = ',')]
        s_list: Option<Vec<f64>>,
        #[arg(long)]
        h_samples: Option<usize>,
    },
    /// Solve the reduced problem at one (n, s, ε)
    Solve {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[command(flatten)]
        opts: SolveArgs,
    },
    /// Solve along a list of ε values
    Sweep {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        eps_list: Option<Vec<f64>>,
        #[command(flatten)]
        opts: SolveArgs,
    },
    /// Run the independent-route cross-checks
    OracleCheck {
        /// Replace every cross-check tolerance by this value
        #[arg(long)]
        tolerance: Option<f64>,
        /// Multiply the singular-integral normalization (negative control)
        #[arg(long, default_value_t = 1.0)]
        convention_scale: f64,
    },
    /// Collect the lemma reports in the output directory into one file
    Export {
        #[arg(long, value_enum, default_value_t = ExportFormat::Json)]
        format: ExportFormat,
    },
}

#[derive(Debug, Args, Clone)]
pub struct SolveArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// λ bracket `lo,hi`; defaults to (λ₀/2, 2λ₀)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambda_bracket: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub ball_policy: Option<BallPolicyArg>,
    #[arg(long, value_enum)]
    pub forcing: Option<ForcingArg>,
    /// Fixed-point iteration cap
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BallPolicyArg {
    Enforce,
    Report,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ForcingArg {
    GridConsistent,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Json,
    Csv,
}

impl From<BallPolicyArg> for BallPolicy {
    fn from(a: BallPolicyArg) -> Self {
        match a {
            BallPolicyArg::Enforce => BallPolicy::Enforce,
            BallPolicyArg::Report => BallPolicy::Report,
        }
    }
}

impl From<ForcingArg> for ForcingModel {
    fn from(a: ForcingArg) -> Self {
        match a {
            ForcingArg::GridConsistent => ForcingModel::GridConsistent,
            ForcingArg::ClosedForm => ForcingModel::ClosedForm,
        }
    }
}

/// Builds the effective configuration: file, environment, then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(cli.global.config.as_deref())?;
    let g = &cli.global;
    if let Some(d) = &g.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(w) = g.workers {
        cfg.workers = w;
    }
    if let Some(r) = g.r_max {
        cfg.grid.r_max = r;
    }
    if let Some(n) = g.grid_size {
        cfg.grid.size = n;
    }
    match &cli.command {
        Command::VerifyLemma { n_list, s_list, h_samples } => {
            if let Some(v) = n_list {
                cfg.lemma.n_list = v.clone();
            }
            if let Some(v) = s_list {
                cfg.lemma.s_list = v.clone();
            }
            if let Some(h) = h_samples {
                cfg.lemma.h_samples = *h;
            }
        }
        Command::Solve { n, s, eps, opts } => {
            apply_point(&mut cfg, *n, *s, opts)?;
            if let Some(e) = eps {
                cfg.solve.eps = *e;
            }
        }
        Command::Sweep { n, s, eps_list, opts } => {
            apply_point(&mut cfg, *n, *s, opts)?;
            if let Some(v) = eps_list {
                cfg.solve.eps_list = v.clone();
            }
        }
        Command::OracleCheck { tolerance, .. } => {
            if let Some(t) = tolerance {
                cfg.tolerances.hypergeometric = *t;
                cfg.tolerances.fraclap = *t;
                cfg.tolerances.convention = *t;
            }
        }
        Command::Export { .. } => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_point(cfg: &mut RunConfig, n: Option<u32>, s: Option<f64>, opts: &SolveArgs) -> Result<(), CliError> {
    if let Some(n) = n {
        cfg.solve.n = n;
    }
    if let Some(s) = s {
        cfg.solve.s = s;
    }
    if let Some(a) = opts.alpha {
        cfg.solve.alpha = Some(a);
    }
    if let Some(b) = &opts.lambda_bracket {
        match b.as_slice() {
            [lo, hi] => cfg.solve.lambda_bracket = Some((*lo, *hi)),
            _ => return Err(CliError::Usage("--lambda-bracket takes lo,hi".into())),
        }
    }
    if let Some(p) = opts.ball_policy {
        cfg.solve.ball_policy = p.into();
    }
    if let Some(f) = opts.forcing {
        cfg.solve.forcing = f.into();
    }
    if let Some(m) = opts.max_iterations {
        cfg.solve.max_iterations = m;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::VerifyLemma { .. } => commands::verify_lemma(&cfg),
        Command::Solve { .. } => commands::solve(&cfg),
        Command::Sweep { .. } => commands::sweep(&cfg),
        Command::OracleCheck { convention_scale, .. } => commands::oracle_check(&cfg, *convention_scale),
        Command::Export { format } => commands::export(&cfg, *format),
    }
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("lanemix: {e}");
            e.exit_code()
        }
    }
}
