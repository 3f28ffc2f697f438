use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use feddrl_cli::{
    build_manifest, build_report, load_datasets, load_run, read_config_text, run_to_dir, sweep,
    write_partition, write_report, CliError, ExperimentConfig, Result,
};
use feddrl_metrics::best_top1;

/// Federated learning simulator with learned aggregation weights.
///
/// Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.
#[derive(Parser)]
#[command(name = "feddrl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set round.max_rounds=50`. Repeatable;
    /// takes precedence over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(&read_config_text(self.config.as_deref())?, &self.overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Partition the training set and write the manifest and statistics.
    Partition {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (default: the config's output_dir).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment and write its logs and checkpoints.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Compare finished runs.
    Report {
        /// Run directories.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(short, long, default_value = "report")]
        out: PathBuf,
        /// Convergence target top-1 in (0, 1]; default: the lowest best top-1.
        #[arg(long)]
        target: Option<f64>,
        /// Smoothing window for accuracy curves.
        #[arg(long, default_value_t = 10)]
        window: usize,
    },
    /// Run the cartesian product of `--axis key=v1,v2,...` values.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long = "axis", value_name = "KEY=V1,V2", required = true)]
        axes: Vec<String>,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Partition { cfg, out } => {
            let cfg = cfg.load()?;
            let (train, _) = load_datasets(&cfg)?;
            let manifest = build_manifest(&cfg, &train)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            write_partition(&dir, &cfg, &manifest)?;
            println!("{} clients, manifest written to {}", manifest.client_count(), dir.display());
        }
        Command::Run { cfg } => {
            let cfg = cfg.load()?;
            let run = run_to_dir(&cfg)?;
            println!(
                "{} rounds, best top-1 {:.4}, outputs in {}",
                run.log.len(),
                best_top1(&run.log)?,
                cfg.output_dir.display()
            );
        }
        Command::Report {
            runs,
            out,
            target,
            window,
        } => {
            if window == 0 {
                return Err(CliError::Config("window must be positive".into()));
            }
            let loaded = runs.iter().map(|d| load_run(d)).collect::<Result<Vec<_>>>()?;
            let files = build_report(&loaded, target, window)?;
            write_report(&out, &files)?;
            print!("{}", files[0].1);
        }
        Command::Sweep { cfg, axes } => {
            let text = read_config_text(cfg.config.as_deref())?;
            let dirs = sweep(&text, &cfg.overrides, &axes)?;
            for d in dirs {
                println!("{}", d.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
