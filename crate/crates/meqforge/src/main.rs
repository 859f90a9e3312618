use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use meqforge::{parse_config, run, CliError, Command};

#[derive(Parser)]
#[command(name = "meqforge", version, about = "Master-equation builds, steady states and heat-flow sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
    /// Output directory (overrides outputs.dir of the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bohr frequencies and their clusters.
    Spectrum(Common),
    /// Export the generator and its per-bath dissipators.
    Liouvillian(Common),
    /// Steady state and heat currents.
    Steady(Common),
    /// Heat currents over a parameter grid.
    Sweep(Common),
    /// Symmetry report and block sizes.
    Blocks(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MEQFORGE_LOG", "warn")).init();
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Liouvillian(a) => (Command::Liouvillian, a),
        Cmd::Steady(a) => (Command::Steady, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Blocks(a) => (Command::Blocks, a),
    };
    let result = parse_config(&args.config).and_then(|cfg| run(cmd, &cfg, args.out.as_deref(), args.jobs as usize));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e @ CliError::Config { .. }) => {
            eprintln!("error: invalid configuration: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
