use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use relaxpack::lattice::{predict_pattern, prediction_table, write_prediction_csv};
use relaxpack::workflow::{run_compare, run_relax};
use relaxpack::{Error, Execution, RunConfig};

/// Uniform particle distributions by total-error relaxation.
#[derive(Parser, Debug)]
#[command(name = "relaxpack", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Seed and relax the domain described by a config file.
    Relax {
        config: PathBuf,
        /// Output directory; overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relax the same start with gradient descent and the inertial scheme.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predicted lattice pattern for one cut-off radius (in units of particle spacing).
    Predict {
        h: f64,
        /// Write CSV here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Prediction table for `h0, h0 + dh, ..., h1`.
    Table {
        h0: f64,
        h1: f64,
        dh: f64,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Compute rows one after another.
        #[arg(long)]
        sequential: bool,
    },
}

fn load(path: &Path) -> Result<RunConfig> {
    Ok(RunConfig::from_path(path)?)
}

fn out_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| cfg.output.dir.clone())
}

fn sink(output: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match output {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Relax { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg, out);
            let (results, files) = run_relax(&cfg, &dir)?;
            for r in &results {
                let last = r.trace.last().expect("trace has the final state");
                println!(
                    "{}: N = {}, steps = {}, E = {:.6e}, psi6 = {}",
                    r.name.as_deref().unwrap_or("periodic"),
                    r.particles.len(),
                    last.step,
                    last.energy,
                    r.psi6.map_or("n/a".into(), |v| format!("{v:.4}")),
                );
            }
            println!("wrote {}", files.meta.display());
        }
        Command::Compare { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg, out);
            let cmp = run_compare(&cfg, &dir)?;
            println!("{}", cmp.summary());
        }
        Command::Predict { h, output } => {
            let row = predict_pattern(h)?;
            let mut w = sink(output.as_deref())?;
            write_prediction_csv(&mut w, &[row])?;
            w.flush()?;
        }
        Command::Table { h0, h1, dh, output, sequential } => {
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let rows = prediction_table(h0, h1, dh, exec)?;
            let mut w = sink(output.as_deref())?;
            write_prediction_csv(&mut w, &rows)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Divergence { .. }) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
