use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use poiseuille_cli::commands::{self, CommandError};
use poiseuille_cli::config::{load_config, RunConfig};

#[derive(Parser)]
#[command(name = "poiseuille", version, about = "Carreau-Yasuda pipe flow under a radially varying pressure gradient")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the regime, flux range and existence verdict.
    Classify(Common),
    /// Compute the steady profile.
    Steady(Common),
    /// Integrate the time-dependent problem.
    Unsteady(Common),
    /// Run every member of the configured parameter sweep.
    Sweep(Common),
    /// Run the built-in oracle fixtures.
    Verify {
        #[arg(long, default_value = "verify-out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Keep integrating after the backward-parabolic regime is reached.
    #[arg(long)]
    override_backward: bool,
    /// Run even when the case hypotheses fail.
    #[arg(long)]
    override_hypotheses: bool,
    /// Worker threads for sweeps.
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CommandError> {
        let mut cfg = load_config(&self.config)?;
        cfg.run.override_backward |= self.override_backward;
        cfg.run.override_hypotheses |= self.override_hypotheses;
        if let Some(w) = self.workers {
            cfg.run.workers = Some(w.max(1));
        }
        Ok(cfg)
    }
}

fn dispatch(command: Command) -> Result<(), CommandError> {
    match command {
        Command::Classify(c) => commands::cmd_classify(&c.load()?, &c.out).map(|_| ()),
        Command::Steady(c) => commands::cmd_steady(&c.load()?, &c.out).map(|_| ()),
        Command::Unsteady(c) => commands::cmd_unsteady(&c.load()?, &c.out).map(|_| ()),
        Command::Sweep(c) => commands::cmd_sweep(&c.load()?, &c.out).map(|_| ()),
        Command::Verify { out } => {
            let checks = commands::cmd_verify(&out)?;
            for c in &checks {
                println!("{}", c.line());
            }
            commands::verify_status(&checks)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
