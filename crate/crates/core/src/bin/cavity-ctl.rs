use std::path::PathBuf;
use std::process::ExitCode;

use cavity_ctl::scenario::{run_scenario, Command, Options};
use clap::{Parser, Subcommand};

/// Photon wave packets in 1D dielectric resonators: ring-down, coherent
/// control and region non-Markovianity.
#[derive(Parser)]
#[command(name = "cavity-ctl", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Directory receiving output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long, global = true, env = "CAVITY_CTL_THREADS")]
    threads: Option<usize>,

    /// Write the space-time energy density as little-endian f64 with a text header.
    #[arg(long, global = true)]
    binary: bool,

    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve and write every output requested by the scenario.
    Run { config: PathBuf },
    /// Reflection and transmission spectra of the stack.
    Spectra { config: PathBuf },
    /// On-resonance ray model of the pulse train.
    Raytrace { config: PathBuf },
    /// Distance and non-Markovian content only.
    Measure { config: PathBuf },
    /// Check the scenario and its guards without solving.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, config) = match cli.command {
        Cmd::Run { config } => (Command::Run, config),
        Cmd::Spectra { config } => (Command::Spectra, config),
        Cmd::Raytrace { config } => (Command::Raytrace, config),
        Cmd::Measure { config } => (Command::Measure, config),
        Cmd::Validate { config } => (Command::Validate, config),
    };
    let opts = Options {
        out_dir: cli.out_dir,
        binary: cli.binary,
        quiet: cli.quiet,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads.filter(|&n| n > 0) {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run_scenario(command, &config, &opts)) {
        Ok(manifest) => {
            if !opts.quiet {
                for o in &manifest.outputs {
                    println!("{}", opts.out_dir.join(&o.path).display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
