use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use chsav_runner::output::OUTPUT_DIR_ENV;
use chsav_runner::{recipe, run, RunConfig, RunError, RunSummary};

/// Degenerate Cahn–Hilliard simulations with the upwind SAV scheme.
#[derive(Parser)]
#[command(name = "chsav", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML configuration.
    Run {
        config: PathBuf,
        /// Override a setting, e.g. `--set scheme.dt=5e-4`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run a built-in experiment (random, rose, two-circles, ellipse-circle, pinch-off).
    Recipe {
        name: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Print the resolved configuration as TOML instead of running it.
        #[arg(long)]
        print: bool,
    },
    /// Run one configuration per value of a parameter, in parallel.
    Sweep {
        config: PathBuf,
        /// `key=v1,v2,...`
        #[arg(long, value_name = "KEY=V1,V2,...")]
        vary: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn output_root() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from)
}

fn report(config: &RunConfig, summary: &RunSummary) {
    let r = &summary.last;
    eprintln!(
        "{}: {} steps to t = {:.6}, energy {:.8e}, mass {:.8e}, xi {:.6}, {} relaxed line solves",
        config.output.csv_path.display(),
        summary.steps,
        r.t,
        r.energy,
        r.mass,
        r.xi,
        summary.totals.relaxed_solves,
    );
}

fn execute(config: &RunConfig) -> Result<(), RunError> {
    let summary = run(config, output_root().as_deref())?;
    report(config, &summary);
    Ok(())
}

fn tagged(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{tag}"),
    };
    path.with_file_name(name)
}

fn sweep(config: &Path, vary: &str, set: &[String]) -> Result<(), RunError> {
    let (key, values) = vary
        .split_once('=')
        .ok_or_else(|| RunError::Config(format!("--vary expects key=v1,v2,..., got `{vary}`")))?;
    let variants = values
        .split(',')
        .map(|v| {
            let mut overrides = set.to_vec();
            overrides.push(format!("{key}={v}"));
            let mut c = RunConfig::load(config)?.with_overrides(&overrides)?;
            let tag = format!("{}-{v}", key.rsplit('.').next().unwrap_or(key));
            c.output.csv_path = tagged(&c.output.csv_path, &tag);
            c.output.snapshot_dir = c.output.snapshot_dir.map(|d| tagged(&d, &tag));
            Ok(c)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let results: Vec<_> = variants.par_iter().map(execute).collect();
    // the most severe failure decides the exit code
    results
        .into_iter()
        .filter_map(Result::err)
        .inspect(|e| eprintln!("error: {e}"))
        .max_by_key(RunError::exit_code)
        .map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, set } => RunConfig::load(&config).and_then(|c| c.with_overrides(&set)).and_then(|c| execute(&c)),
        Command::Recipe { name, set, print } => recipe(&name, &set).and_then(|c| {
            if print {
                print!("{}", c.to_toml());
                Ok(())
            } else {
                execute(&c)
            }
        }),
        Command::Sweep { config, vary, set } => sweep(&config, &vary, &set),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
