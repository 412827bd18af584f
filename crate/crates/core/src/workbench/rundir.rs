use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::analyze::{analyze_prices, AnalysisOptions};
use crate::config::{fmt_real, SimConfig};
use crate::error::{Error, Result};
use crate::information::avalanche_log_text;
use crate::market::{run, RunOutput};
use crate::stats::{fit_power_law, log_binned_histogram, relevant_threshold};
use crate::traders::population_dump;

/// Share of the population an avalanche must reach to count as relevant.
pub const RELEVANT_FRACTION: f64 = 0.002;

#[derive(Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub output: RunOutput,
}

/// Runs `config` and writes everything about it into a fresh directory under `out_root`.
///
/// `manifest.txt` is a loadable config; run statistics follow as comments.
pub fn run_to_dir(config: &SimConfig, out_root: &Path) -> Result<RunArtifacts> {
    let output = run(config)?;
    let dir = fresh_dir(out_root, config.seed)?;
    let put = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };

    put("prices.csv", output.prices_text())?;
    put("avalanches.csv", avalanche_log_text(&output.avalanches))?;
    put("population.csv", population_dump(&output.traders))?;
    put("topology.txt", output.topology.edge_list_text())?;

    let sizes: Vec<u64> = output.avalanches.iter().map(|r| r.distinct_agents as u64).collect();
    let mut hist = String::from("lower,upper,center,count,density\n");
    for b in log_binned_histogram(&sizes, 1)? {
        let _ = writeln!(
            hist,
            "{},{},{},{},{}",
            b.lower,
            b.upper,
            fmt_real(b.center),
            b.count,
            fmt_real(b.density)
        );
    }
    put("avalanche_hist.csv", hist)?;
    put("manifest.txt", manifest_text(&output)?)?;

    let analysis = analyze_prices(&output.prices, &AnalysisOptions::default())?;
    analysis.write_files(&dir)?;
    Ok(RunArtifacts { dir, output })
}

fn manifest_text(out: &RunOutput) -> Result<String> {
    let mut s = out.config.to_kv_text();
    let c = &out.counters;
    let threshold = relevant_threshold(out.config.node_count(), RELEVANT_FRACTION)?;
    let sizes: Vec<u64> = out.avalanches.iter().map(|r| r.distinct_agents as u64).collect();
    let relevant = sizes.iter().filter(|&&s| s >= threshold as u64).count();
    let mut note = |k: &str, v: String| {
        let _ = writeln!(s, "# {k} = {v}");
    };
    note("version", env!("CARGO_PKG_VERSION").to_string());
    note("edges", out.topology.edge_count().to_string());
    note("rewired_edges", out.rewire_report.rewired.to_string());
    note("stuck_rewirings", out.rewire_report.stuck.to_string());
    note("avalanches", sizes.len().to_string());
    note("relevant_threshold", threshold.to_string());
    note("relevant_avalanches", relevant.to_string());
    match fit_power_law(&sizes, threshold as u64) {
        Ok(f) => {
            note("avalanche_exponent_mle", fmt_real(f.exponent_mle));
            note("avalanche_binned_slope", fmt_real(f.binned_slope));
            note("avalanche_decades", fmt_real(f.decades));
        }
        Err(e) => note("avalanche_fit", format!("failed: {e}")),
    }
    note("topplings", c.topplings.to_string());
    note("imitations", c.imitations.to_string());
    note("individual_clamps", c.individual_clamps.to_string());
    note("global_clamps", c.global_clamps.to_string());
    note("exponent_caps", c.exponent_caps.to_string());
    note("max_audit_residual", fmt_real(c.max_audit_residual));
    note("mean_abs_omega", fmt_real(out.mean_omega_abs()));
    note("max_abs_omega", fmt_real(c.omega_abs_max));
    note("mean_i_av", fmt_real(out.mean_i_av()));
    Ok(s)
}

fn fresh_dir(root: &Path, seed: u64) -> Result<PathBuf> {
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S");
    for k in 1.. {
        let name = if k == 1 {
            format!("run-{stamp}-seed{seed}")
        } else {
            format!("run-{stamp}-seed{seed}-{k}")
        };
        let dir = root.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(&dir, e)),
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workbench::read_prices;

    fn small() -> SimConfig {
        SimConfig {
            n_side: 10,
            ticks: 400,
            seed: 3,
            ..SimConfig::default()
        }
    }

    #[test]
    fn directory_contents() {
        let root = tempfile::tempdir().unwrap();
        let a = run_to_dir(&small(), root.path()).unwrap();
        for f in [
            "prices.csv",
            "avalanches.csv",
            "population.csv",
            "topology.txt",
            "avalanche_hist.csv",
            "manifest.txt",
            "report.txt",
            "pdf.csv",
            "acf.csv",
            "qq.csv",
            "adf_windows.csv",
        ] {
            assert!(a.dir.join(f).is_file(), "{f}");
        }
        let prices = std::fs::read_to_string(a.dir.join("prices.csv")).unwrap();
        assert_eq!(prices.lines().count(), 402);
    }

    #[test]
    fn manifest_reloads_and_report_reproduces() {
        let root = tempfile::tempdir().unwrap();
        let a = run_to_dir(&small(), root.path()).unwrap();
        let manifest = std::fs::read_to_string(a.dir.join("manifest.txt")).unwrap();
        assert_eq!(SimConfig::from_kv_text(&manifest).unwrap(), small());

        let prices = read_prices(&a.dir.join("prices.csv")).unwrap();
        assert_eq!(prices, a.output.prices);
        let again = analyze_prices(&prices, &AnalysisOptions::default()).unwrap();
        let stored = std::fs::read_to_string(a.dir.join("report.txt")).unwrap();
        assert_eq!(again.report_text(), stored);
    }

    #[test]
    fn distinct_directories() {
        let root = tempfile::tempdir().unwrap();
        let a = run_to_dir(&small(), root.path()).unwrap();
        let b = run_to_dir(&small(), root.path()).unwrap();
        assert_ne!(a.dir, b.dir);
        let pa = std::fs::read(a.dir.join("prices.csv")).unwrap();
        let pb = std::fs::read(b.dir.join("prices.csv")).unwrap();
        assert_eq!(pa, pb);
    }
}
