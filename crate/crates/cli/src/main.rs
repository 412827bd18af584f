//! `cfp`: run the market simulator, sweep parameter grids, and analyze price series.
//!
//! ```text
//! cfp run --config baseline.conf --seed 7 --out runs
//! cfp sweep --spec robustness.sweep --workers 8 --out sweep-out
//! cfp analyze --prices runs/<dir>/prices.csv --windows 15000,1500,150
//! cfp ingest --file ge.csv --price-col close --out ge-prices.csv
//! ```
//!
//! Exit status is 0 on success, 1 for usage and input errors, 2 for failures
//! during simulation or analysis.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cfp::workbench::{analyze_prices, ingest_external, read_prices, run_sweep, run_to_dir, AnalysisOptions, SweepSpec};
use cfp::SimConfig;

#[derive(Parser)]
#[command(name = "cfp", version, about = "Contagion financial pricing market simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write prices, logs and a report to a new directory
    Run {
        /// Key-value config file; omitted keys take their defaults
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Run every cell of a sweep spec and print per-cell means and deviations
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Worker threads (default: available cores)
        #[arg(long)]
        workers: Option<usize>,
        /// Also write summary.csv and runs.csv here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stylized-facts report for a price file
    Analyze {
        #[arg(long)]
        prices: PathBuf,
        /// Subwindow lengths for the ADF runs
        #[arg(long, value_delimiter = ',', default_value = "15000,1500,150")]
        windows: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        max_lag: usize,
        /// Write report.txt and the plot tables here instead of printing the report
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a column of an external delimited file into a price file
    Ingest {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        price_col: String,
        /// Output price file (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration
    Defaults,
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
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}

fn exit_status(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<cfp::Error>() {
        Some(err) if !err.is_usage() => 2,
        _ => 1,
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, &out),
        Command::Sweep { spec, workers, out } => cmd_sweep(&spec, workers, out.as_deref()),
        Command::Analyze {
            prices,
            windows,
            max_lag,
            out,
        } => cmd_analyze(&prices, windows, max_lag, out.as_deref()),
        Command::Ingest { file, price_col, out } => cmd_ingest(&file, &price_col, out.as_deref()),
        Command::Defaults => {
            print!("{}", SimConfig::default().to_kv_text());
            Ok(())
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| cfp::Error::Io {
        path: path.display().to_string(),
        source: e,
    }
    .into())
}

fn cmd_run(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = SimConfig::from_kv_text(&read_text(config)?).with_context(|| format!("in {}", config.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let artifacts = run_to_dir(&cfg, out)?;
    let o = &artifacts.output;
    println!("{}", artifacts.dir.display());
    eprintln!(
        "{} ticks, {} avalanches, last price {:.4}",
        o.prices.len() - 1,
        o.avalanches.len(),
        o.prices.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_sweep(spec_path: &Path, workers: Option<usize>, out: Option<&Path>) -> Result<()> {
    let spec = SweepSpec::from_text(&read_text(spec_path)?).with_context(|| format!("in {}", spec_path.display()))?;
    let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let summary = run_sweep(&spec, workers)?;
    print!("{}", summary.display_text());
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("summary.csv"), summary.table_text())?;
        std::fs::write(dir.join("runs.csv"), summary.runs_text())?;
        std::fs::write(dir.join("sweep.txt"), spec.to_text())?;
    }
    Ok(())
}

fn cmd_analyze(prices_path: &Path, windows: Vec<usize>, max_lag: usize, out: Option<&Path>) -> Result<()> {
    let prices = read_prices(prices_path)?;
    let options = AnalysisOptions {
        windows,
        max_lag,
        ..AnalysisOptions::default()
    };
    let analysis = analyze_prices(&prices, &options)?;
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            analysis.write_files(dir)?;
            println!("{}", dir.join("report.txt").display());
        }
        None => print!("{}", analysis.report_text()),
    }
    Ok(())
}

fn cmd_ingest(file: &Path, price_col: &str, out: Option<&Path>) -> Result<()> {
    let series = ingest_external(file, price_col)?;
    for s in &series.skipped {
        eprintln!("row {}: skipped ({})", s.row, s.reason);
    }
    eprintln!("{} prices read, {} rows skipped", series.len(), series.skipped.len());
    match out {
        Some(path) => std::fs::write(path, series.prices_text()).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", series.prices_text()),
    }
    Ok(())
}
