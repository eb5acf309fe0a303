use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lsqkf_cli::{load_config, output, run_experiment, summarize, CliError, Experiment};
use lsqkf_core::Preset;

#[derive(Parser)]
#[command(
    name = "lsqkf",
    version,
    about = "Online least-squares prediction versus the Kalman filter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment and write records and summaries.
    Run {
        config: PathBuf,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Root directory for results, overriding the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Added to every configured seed.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
    /// Recompute summary.csv and summary.json from an experiment directory.
    Summarize { dir: PathBuf },
    /// List the built-in models.
    Presets,
    /// Check a config and print its canonical form.
    Validate {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            jobs,
            output,
            seed_offset,
        } => run(&config, jobs, output, seed_offset),
        Command::Summarize { dir } => {
            let summary = summarize(&output::read_records(&dir)?)?;
            output::write_summary(&dir, &summary)?;
            print!("{}", summary.to_csv());
            Ok(())
        }
        Command::Presets => {
            println!(
                "{:<18} {:>3} {:>3} {:>6} {:>9} {:>10} {:>10}  description",
                "name", "n", "m", "kappa", "kappa_max", "rho(A-KC)", "beta_floor"
            );
            for preset in Preset::ALL {
                let info = preset.info().map_err(|source| CliError::Numerical {
                    seed: None,
                    phase: "riccati",
                    source,
                })?;
                let kappa = info.kappa.map_or("-".to_string(), |k| k.to_string());
                let floor = info
                    .beta_floor
                    .map_or("-".to_string(), |b| format!("{b:.3}"));
                println!(
                    "{:<18} {:>3} {:>3} {:>6} {:>9} {:>10.6} {:>10}  {}",
                    info.name,
                    info.state_dim,
                    info.output_dim,
                    kappa,
                    info.kappa_max,
                    info.rho_closed_loop,
                    floor,
                    info.description
                );
            }
            Ok(())
        }
        Command::Validate {
            config,
            seed_offset,
        } => {
            let exp = Experiment::prepare(with_offset(load_config(&config)?, seed_offset))?;
            println!("# hash {}", exp.hash);
            for warning in exp.validation.warnings() {
                println!("# warning: {warning}");
            }
            print!("{}", exp.config.canonical());
            Ok(())
        }
    }
}

fn with_offset(
    mut config: lsqkf_cli::ExperimentConfig,
    offset: u64,
) -> lsqkf_cli::ExperimentConfig {
    config.seeds.iter_mut().for_each(|s| *s += offset);
    config
}

fn run(
    config: &Path,
    jobs: Option<usize>,
    output_root: Option<PathBuf>,
    seed_offset: u64,
) -> Result<(), CliError> {
    let mut cfg = with_offset(load_config(config)?, seed_offset);
    if let Some(root) = output_root {
        cfg.output = Some(root);
    }
    let root = cfg.output_dir();
    let exp = Experiment::prepare(cfg)?;
    for warning in exp.validation.warnings() {
        eprintln!("warning: {warning}");
    }
    let records = run_experiment(&exp, jobs, Some(&root))?;
    let dir = exp.directory(&root);
    let summary = summarize(&records)?;
    output::write_summary(&dir, &summary)?;
    eprintln!("wrote {} run(s) to {}", records.len(), dir.display());
    print!("{}", summary.to_csv());
    Ok(())
}
