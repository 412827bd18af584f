//! File-level workflows behind the `cfp` command line: single runs written
//! to a directory, parameter sweeps, analysis reports and ingestion of
//! external price files.

mod analyze;
mod ingest;
mod rundir;
mod sweep;

pub use analyze::{analyze_prices, read_prices, AdfWindows, Analysis, AnalysisOptions};
pub use ingest::{ingest_external, ExternalSeries, SkippedRow};
pub use rundir::{run_to_dir, RunArtifacts};
pub use sweep::{run_sweep, CellSummary, RunResult, SweepSpec, SweepSummary};
