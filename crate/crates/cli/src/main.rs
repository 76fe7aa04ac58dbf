use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nflab_cli::commands::{self, Overrides};
use nflab_cli::error::{CliError, Result};
use nflab_cli::plot;

#[derive(Parser)]
#[command(name = "nflab", version, about = "Neural-field width experiments")]
struct Cli {
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,

    #[arg(long, env = "NFLAB_OUT", default_value = "out")]
    out: PathBuf,

    /// Master seed, replacing the one in the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Number of seeds for the probe subcommands.
    #[arg(long)]
    seeds: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            seeds: self.seeds,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a network to the configured task.
    Train(Common),
    /// Check the interpolation bound at initialization for each seed.
    VerifyBound(Common),
    /// Last-layer spectral norm against fan-in.
    SpectralNorm(Common),
    /// Smallest singular value of the last hidden features against width.
    SigmaMin(Common),
    /// Loss at initialization against dataset size.
    InitLoss(Common),
    /// Minimal-width search over dataset sizes.
    Sweep {
        #[command(flatten)]
        common: Common,

        /// Reuse trials recorded in the output directory's journal.
        #[arg(long)]
        resume: bool,
    },
    /// Fit a high-resolution image through a 4x average-pooling operator.
    Superres(Common),
    /// Fit an occupancy field and score it on held-out points.
    Occupancy(Common),
    /// Print a matplotlib script for a CSV written by another subcommand.
    PlotScript { csv: PathBuf },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    match cli.command {
        Command::Train(c) => commands::train(&c.config, &c.out, &c.overrides()),
        Command::VerifyBound(c) => commands::verify_bound(&c.config, &c.out, &c.overrides()),
        Command::SpectralNorm(c) => commands::spectral_norm(&c.config, &c.out, &c.overrides()),
        Command::SigmaMin(c) => commands::sigma_min(&c.config, &c.out, &c.overrides()),
        Command::InitLoss(c) => commands::init_loss(&c.config, &c.out, &c.overrides()),
        Command::Sweep { common: c, resume } => {
            if c.seeds.is_some() {
                return Err(CliError::config("--seeds does not apply to sweep; set seeds in the sweep config"));
            }
            let trained = commands::sweep(&c.config, &c.out, c.seed, resume)?;
            eprintln!("trained {trained} trials");
            Ok(())
        }
        Command::Superres(c) => commands::superres(&c.config, &c.out, &c.overrides()),
        Command::Occupancy(c) => commands::occupancy(&c.config, &c.out, &c.overrides()),
        Command::PlotScript { csv } => {
            print!("{}", plot::plot_script(&csv)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
