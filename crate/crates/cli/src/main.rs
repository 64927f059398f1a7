mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "pa-giant", version, about = "Giant components of concave preferential attachment networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; PA_GIANT_WORKERS overrides.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network and write it as an edge CSV with a JSON sidecar.
    Generate(Common),
    /// Connected components of a stored network.
    Components(Common),
    /// Keep each edge of a stored network independently with probability p.
    Percolate(Common),
    /// Indegree histogram against the limiting weights.
    DegreeDist(Common),
    /// Tree size distribution, optionally next to a network's.
    SizeDist(Common),
    /// Survival probability of the neighbourhood tree.
    Survival(Common),
    /// Spectral radius of the operator over a list of alpha.
    Operator(Common),
    /// Giant component, robustness and percolation verdicts.
    Criterion(Common),
    /// Verdicts or estimates over a (gamma, beta) grid, with an SVG heatmap.
    PhaseDiagram(Common),
    /// Finite networks against the tree: giant size and size distribution.
    TheoremCheck(Common),
    /// Largest component after percolation over a list of p.
    PercolationSweep(Common),
}

/// An invariant or acceptance check failed; reported with exit code 2.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(c) => commands::generate(c),
        Command::Components(c) => commands::components(c),
        Command::Percolate(c) => commands::percolate(c),
        Command::DegreeDist(c) => commands::degree_dist(c),
        Command::SizeDist(c) => commands::size_dist(c),
        Command::Survival(c) => commands::survival(c),
        Command::Operator(c) => commands::operator(c),
        Command::Criterion(c) => commands::criterion(c),
        Command::PhaseDiagram(c) => commands::phase_diagram(c),
        Command::TheoremCheck(c) => commands::theorem_check(c),
        Command::PercolationSweep(c) => commands::percolation_sweep(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let invariant = e.downcast_ref::<CheckFailed>().is_some()
                || matches!(e.downcast_ref::<pa_giant::Error>(), Some(pa_giant::Error::Invariant(_)));
            ExitCode::from(if invariant { 2 } else { 1 })
        }
    }
}
