//! Config-driven front end. Every command reads one JSON document and writes
//! CSV files carrying a provenance comment; suboptimalities in these files
//! are in discounted-return units.

mod commands;
mod config;
mod sweep;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::*;
pub use config::*;
pub use sweep::*;

use crate::error::{Error, Result};
use crate::report::provenance_line;

#[derive(Debug, Parser)]
#[command(name = "transfer-irl", version, about = "Multi-expert IRL and reward transferability experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment config; optional for `example1` and `sweep`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the sweep.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Use the full-size sweep preset (long-running).
    #[arg(long, global = true)]
    pub paper_scale: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the regularized MDP of `environment` and `reward`.
    Solve,
    /// Recover a reward from several experts.
    Irl,
    /// Principal angles between the potential-shaping spaces of several laws.
    Angles,
    /// Transferability certificates.
    Certificate,
    /// The two-state counterexample table.
    Example1,
    /// Windy-gridworld sweep over wind strength, data size and seed.
    Sweep,
}

/// Stable process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidMdp(_) | Error::InvalidInput(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
        Error::Precondition(_) => 4,
        Error::NonConvergence { .. }
        | Error::BracketViolation { .. }
        | Error::Numerical(_)
        | Error::BoundaryOccupancy { .. }
        | Error::RankDeficient { .. }
        | Error::NegativeSuboptimality(_)
        | Error::SandwichViolation { .. } => 3,
    }
}

/// Runs `command` on an already parsed config; `base` resolves relative paths.
pub fn execute(
    command: Command,
    cfg: &ExperimentConfig,
    base: &Path,
    seed: u64,
    jobs: Option<usize>,
    paper_scale: bool,
) -> Result<Vec<Artifact>> {
    match command {
        Command::Solve => solve(cfg, base, seed),
        Command::Irl => irl(cfg, base, seed),
        Command::Angles => angles(cfg, base),
        Command::Certificate => certificate(cfg, base),
        Command::Example1 => example1(cfg),
        Command::Sweep => {
            let preset = if paper_scale { SweepPlan::full_size(seed) } else { SweepPlan::desk(seed) };
            let plan = match &cfg.sweep {
                Some(o) => preset.with_overrides(o),
                None => preset,
            };
            if paper_scale {
                log::warn!("full-size sweep: {} cells, expect a very long run", plan.cells().len());
            }
            let table = run_sweep(&plan, jobs, &cfg.solver.options())?;
            let mut out: Vec<Artifact> =
                panel_tables(&table).into_iter().map(|(n, t)| Artifact::Csv(n, t)).collect();
            out.insert(0, Artifact::Csv("sweep.csv".into(), table));
            Ok(out)
        }
    }
}

/// Full command: read the config, run, write artifacts. Returns the paths written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let (bytes, base) = match &cli.config {
        Some(p) => (std::fs::read(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
        None if matches!(cli.command, Command::Example1 | Command::Sweep) => (b"{}".to_vec(), PathBuf::new()),
        None => return Err(Error::input("--config is required for this command")),
    };
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::input("config is not valid UTF-8"))?;
    let cfg = ExperimentConfig::from_json(text)?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let out_dir = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));

    let artifacts = execute(cli.command, &cfg, &base, seed, cli.jobs, cli.paper_scale)?;

    std::fs::create_dir_all(&out_dir)?;
    let prov = provenance_line(&bytes, seed);
    let mut written = Vec::with_capacity(artifacts.len());
    for a in &artifacts {
        let path = out_dir.join(a.name());
        match a {
            Artifact::Csv(_, t) => t.write(std::io::BufWriter::new(std::fs::File::create(&path)?), Some(&prov))?,
            Artifact::Text(_, s) => std::fs::write(&path, s)?,
        }
        written.push(path);
    }
    Ok(written)
}
