//! `trilaman`: simulate and verify gradient formation control on
//! triangulated Laman graphs.
//!
//! Exit status: 0 pass, 1 check failure, 2 usage or parse error,
//! 3 numerical failure or an inconclusive (degenerate) check.

mod commands;
mod failure;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::failure::Failure;
use crate::output::{Emitter, Format};

#[derive(Parser, Debug)]
#[command(name = "trilaman", version, about)]
struct Cli {
    /// Report style on stdout.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Write output files, the report rows and a manifest here.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Random triangulated Laman graph spec.
    Generate {
        #[arg(long, short = 'n')]
        vertices: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check target distances and laws of a scenario.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Integrate the flow and refine the endpoint.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Initial configuration; random when omitted.
        #[arg(long)]
        initial: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Line equilibria for every ordering, plus Newton from random starts.
    Equilibria {
        #[arg(long)]
        scenario: PathBuf,
        /// Random Newton starts.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Equilibrium residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Independent partition of a configuration.
    Partition {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Collinearity tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Hessian eigenvalues and signature at an equilibrium.
    Spectrum {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Equilibrium residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Classification, partition, index formula and (on a line) reduction.
    Analyze {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Equilibrium residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// All target orbits, one per sign word.
    Enumerate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Monte Carlo basin statistics.
    Basin {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Full verification chain with a pass/fail summary.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        /// Basin trials; 0 skips the Monte Carlo stage.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.97)]
        min_target_fraction: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate { .. } => "generate",
            Command::Validate { .. } => "validate",
            Command::Simulate { .. } => "simulate",
            Command::Equilibria { .. } => "equilibria",
            Command::Partition { .. } => "partition",
            Command::Spectrum { .. } => "spectrum",
            Command::Analyze { .. } => "analyze",
            Command::Enumerate { .. } => "enumerate",
            Command::Basin { .. } => "basin",
            Command::Verify { .. } => "verify",
        }
    }
}

fn run(cli: Cli, out: &mut Emitter) -> Result<(), Failure> {
    match cli.command {
        Command::Generate { vertices, seed } => commands::generate(out, vertices, seed),
        Command::Validate { scenario } => commands::validate(out, &scenario),
        Command::Simulate {
            scenario,
            initial,
            seed,
            horizon,
        } => commands::simulate(out, &scenario, initial.as_deref(), seed, horizon),
        Command::Equilibria {
            scenario,
            trials,
            seed,
            tol,
        } => commands::equilibria(out, &scenario, trials, seed, tol),
        Command::Partition { scenario, config, tol } => commands::partition(out, &scenario, &config, tol),
        Command::Spectrum { scenario, config, tol } => commands::spectrum_cmd(out, &scenario, &config, tol),
        Command::Analyze { scenario, config, tol } => commands::analyze(out, &scenario, &config, tol),
        Command::Enumerate { scenario } => commands::enumerate(out, &scenario),
        Command::Basin { scenario, trials, seed } => commands::basin(out, &scenario, trials, seed),
        Command::Verify {
            scenario,
            trials,
            seed,
            min_target_fraction,
        } => commands::verify(out, &scenario, trials, seed, min_target_fraction),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let name = cli.command.name();
    let mut out = Emitter::new(cli.format, cli.out_dir.clone());
    let result = run(cli, &mut out);
    let finished = out.finish(name, &argv);
    match result.and(finished) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}
