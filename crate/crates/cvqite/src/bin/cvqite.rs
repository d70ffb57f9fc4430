//! Thin command-line front end: parse arguments, load the JSON config,
//! dispatch to the library, map outcomes to exit codes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cvqite::cli::{self, CmdOutcome, RunConfig};
use cvqite::error::Error;

#[derive(Parser)]
#[command(
    name = "cvqite",
    about = "Imaginary-time energy estimation for the lattice phi^4 theory on qumodes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the imaginary-time loop; writes trace.csv and summary.json.
    Qite(CommonArgs),
    /// Ground and odd-sector runs differenced per step; writes massgap.csv.
    Massgap(CommonArgs),
    /// Exact-diagonalization levels with parity labels; writes spectrum.json.
    Spectrum(CommonArgs),
    /// Krylov treatment of the recorded iterates; writes qlanczos.json.
    Qlanczos(CommonArgs),
    /// Squeezer-imprecision scan of d^3 P0/d(eta^2)^3; writes sensitivity.csv.
    Sensitivity(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to the config's `outputs` field.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(command: &Command) -> Result<CmdOutcome, Error> {
    let args = match command {
        Command::Qite(a)
        | Command::Massgap(a)
        | Command::Spectrum(a)
        | Command::Qlanczos(a)
        | Command::Sensitivity(a) => a,
    };
    let config = RunConfig::load(&args.config)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.outputs.clone())
        .ok_or_else(|| {
            Error::InvalidConfig(
                "no output directory: pass --out or set `outputs` in the config".into(),
            )
        })?;
    std::fs::create_dir_all(&out_dir)?;
    match command {
        Command::Qite(_) => cli::cmd_qite(&config, &out_dir),
        Command::Massgap(_) => cli::cmd_massgap(&config, &out_dir),
        Command::Spectrum(_) => cli::cmd_spectrum(&config, &out_dir),
        Command::Qlanczos(_) => cli::cmd_qlanczos(&config, &out_dir),
        Command::Sensitivity(_) => cli::cmd_sensitivity(&config, &out_dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(outcome) => ExitCode::from(cli::exit_code_for_outcome(outcome) as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(cli::exit_code_for(&err) as u8)
        }
    }
}
