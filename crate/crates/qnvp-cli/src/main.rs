//! Command-line entry point. Exit codes: 0 success (and all checks passing
//! for `verify`), 1 usage or configuration error, 2 numerical divergence,
//! 3 verification failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qnvp_cli::config::parse_config;
use qnvp_cli::experiment::{compare_command, run_command, sweep_command};
use qnvp_cli::verify::{verify_command, VerifyOptions};
use qnvp_core::Error;

#[derive(Parser)]
#[command(name = "qnvp", version, about = "Kinetic/quasineutral plasma experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's output.directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel kernels (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Single-threaded, scheduling-independent execution
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one model and write diagnostics (and optional field dumps)
    Run(Common),
    /// Integrate the kinetic and limit models from matched initial data
    Compare(Common),
    /// Repeat a measurement over the configured delta list and fit scaling
    Sweep(Common),
    /// Run the property verification suite and write its report
    Verify {
        #[command(flatten)]
        common: Common,
        /// Run a single named criterion instead of the full suite
        #[arg(long)]
        check: Option<String>,
        /// Flip one sign inside the two-route bracket comparison; the
        /// suite must then report a failure (harness self-test)
        #[arg(long, hide = true)]
        corrupt_bracket_sign: bool,
    },
}

fn install_thread_pool(common: &Common) -> Result<(), Error> {
    let threads = if common.deterministic {
        Some(1)
    } else {
        common.threads
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool, Error> {
    let common = match &cli.command {
        Command::Run(c) | Command::Compare(c) | Command::Sweep(c) => c,
        Command::Verify { common, .. } => common,
    };
    install_thread_pool(common)?;
    let cfg = parse_config(&common.config)?;
    let out_dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    match cli.command {
        Command::Run(_) => run_command(&cfg, &out_dir).map(|()| true),
        Command::Compare(_) => compare_command(&cfg, &out_dir).map(|()| true),
        Command::Sweep(_) => sweep_command(&cfg, &out_dir).map(|()| true),
        Command::Verify {
            check,
            corrupt_bracket_sign,
            ..
        } => verify_command(
            &cfg,
            &out_dir,
            &VerifyOptions {
                check,
                corrupt_bracket_sign,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(3)
        }
        Err(Error::Diverged { step, time }) => {
            eprintln!("error: numerical divergence at step {step} (t = {time})");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
