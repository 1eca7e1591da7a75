use clap::{Parser, Subcommand};

use rkphase_cli::commands::{bench, gen, solve, surface};

/// Phase-retrieval benchmark tools: generate instances, run solvers,
/// sweep Monte-Carlo experiments.
#[derive(Debug, Parser)]
#[command(name = "rkphase", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded problem instance into a directory.
    Gen(gen::GenArgs),
    /// Run a solver on an instance directory or raw operator/measurements.
    Solve(solve::SolveArgs),
    /// Run a Monte-Carlo experiment sweep from a config file.
    Bench(bench::BenchArgs),
    /// Export a loss landscape over a real 2-D grid as CSV.
    Surface(surface::SurfaceArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(args) => gen::run(args),
        Command::Solve(args) => solve::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Surface(args) => surface::run(args),
    };
    if let Err(e) = result {
        eprintln!(
            "{}",
            serde_json::json!({ "error": e.kind(), "message": e.message() })
        );
        std::process::exit(e.exit_code());
    }
}
