use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use trivirus_cli::config::Scenario;
use trivirus_cli::runner;

/// Numerical laboratory for three competing viruses on a contact network.
#[derive(Parser)]
#[command(name = "trivirus", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and write its artifacts
    Run {
        config: PathBuf,
        /// Output directory (default: $TRIVIRUS_OUT/<config stem>, else runs/<config stem>)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's global seed
        #[arg(long)]
        seed: Option<u64>,
        /// Fan independent plan items out on a thread pool; output order is unchanged
        #[arg(long)]
        parallel: bool,
    },
    /// Run a bundled preset end to end
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fan independent starts out on a thread pool; output order is unchanged
        #[arg(long)]
        parallel: bool,
    },
    /// List bundled presets with one-line descriptions
    ListPresets,
    /// Print the condition checks for a scenario's parameters
    Check { config: PathBuf },
    /// Print the equilibrium enumeration for a scenario's parameters
    Enumerate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Restore the default SIGPIPE action so `trivirus ... | head` exits quietly
/// instead of panicking on a closed stdout.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            parallel,
        } => {
            let scenario = Scenario::load(&config)?;
            let name = config
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
            let dir = runner::resolve_out_dir(out, scenario.out.as_deref(), &name);
            let outcome = runner::run_scenario(&scenario, &dir, seed, parallel)?;
            print!("{}", outcome.summary);
            println!("artifacts in {}", outcome.dir.display());
        }
        Command::Preset {
            name,
            out,
            seed,
            parallel,
        } => {
            let dir = runner::resolve_out_dir(out, None, &name);
            let outcome = runner::run_preset_command(&name, &dir, seed.unwrap_or(0), parallel)?;
            print!("{}", outcome.summary);
            println!("artifacts in {}", outcome.dir.display());
        }
        Command::ListPresets => {
            for preset in trivirus::presets::all_presets() {
                println!("{:<10} {}", preset.name, preset.description);
            }
        }
        Command::Check { config } => {
            print!("{}", runner::check_only(&Scenario::load(&config)?)?);
        }
        Command::Enumerate { config, seed } => {
            print!(
                "{}",
                runner::enumerate_only(&Scenario::load(&config)?, seed)?
            );
        }
    }
    Ok(())
}
