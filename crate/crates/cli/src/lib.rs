//! Command-line front end: argument parsing, run configuration and the six
//! subcommands.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] sadsp::Error),
}

impl CliError {
    /// 1 usage, 2 data or I/O, 3 training divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(sadsp::Error::Divergence { .. }) => 3,
            CliError::Io { .. } | CliError::Core(_) => 2,
        }
    }

    pub fn message(&self) -> String {
        self.to_string()
    }
}

#[derive(Debug, Parser)]
#[command(name = "sadsp", version, about = "Compositional recognition over feature vectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat key = value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Run directory for every artifact.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Fusion weights, e.g. "0.7,0.25,0.05".
    #[arg(long, global = true)]
    pub gamma: Option<String>,
    /// Comma list of branches to switch off: pf_s, pf_o, pc_s, pc_o.
    #[arg(long, global = true)]
    pub disable: Option<String>,
    /// end_to_end or fixed_trunk.
    #[arg(long, global = true)]
    pub regime: Option<String>,
    /// Any configuration key, e.g. --set epochs=5. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic feature file and its pair sidecar.
    Gen,
    /// Train a model and write the checkpoint and loss log.
    Train,
    /// Evaluate a checkpoint with the bias sweep.
    Eval,
    /// Evaluate every module- and branch-level ablation.
    Ablate,
    /// Grid search over the fusion weights.
    Sweep,
    /// Attention accumulation, feasible pairs, prototypes and leakage probes.
    Analyze,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Ablate => "ablate",
            Command::Sweep => "sweep",
            Command::Analyze => "analyze",
        }
    }
}

impl Cli {
    /// File settings first, then `--set`, then dedicated flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for item in &self.overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {item:?}")))?;
            cfg.set(k, v)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out.clone_from(out);
        }
        let flags = [("gamma", &self.gamma), ("disable", &self.disable), ("regime", &self.regime)];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::Gen => commands::cmd_gen(cfg),
        Command::Train => commands::cmd_train(cfg),
        Command::Eval => commands::cmd_eval(cfg).map(|(_, files)| files),
        Command::Ablate => commands::cmd_ablate(cfg),
        Command::Sweep => commands::cmd_sweep(cfg),
        Command::Analyze => commands::cmd_analyze(cfg),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Messages go to stdout/stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = cli.resolve().and_then(|cfg| execute(cli.command, &cfg));
    match result {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("sadsp {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
