use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::config::{fmt_real, parse_pairs, SimConfig, KEYS};
use crate::error::{Error, Result};
use crate::market::run;
use crate::rng::derive_seed;
use crate::stats::{log_returns, relevant_avalanche_count, volatility};

const SWEEP_KEYS: &[&str] = &["runs", "master_seed", "relevant_fraction"];

/// A grid of configurations, each run `runs` times with derived seeds.
///
/// Text form: sweep keys and base config keys at the top, then one
/// `[cell NAME]` block of config overrides per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: SimConfig,
    pub cells: Vec<(String, Vec<(String, String)>)>,
    pub runs: usize,
    pub master_seed: u64,
    pub relevant_fraction: f64,
}

impl SweepSpec {
    pub fn new(base: SimConfig) -> Self {
        SweepSpec {
            base,
            cells: Vec::new(),
            runs: 50,
            master_seed: 1,
            relevant_fraction: 0.002,
        }
    }

    /// Fixed versus variable fundamental price, chartist window and
    /// sensitivities, all eight combinations.
    pub fn robustness_grid(base: SimConfig, runs: usize, master_seed: u64) -> Self {
        let mut spec = SweepSpec {
            runs,
            master_seed,
            ..SweepSpec::new(base)
        };
        for mask in 0..8u32 {
            let flag = |bit: u32| (mask >> bit & 1 == 1).to_string();
            let name = format!(
                "pf-{}_m-{}_sens-{}",
                if mask & 1 == 1 { "var" } else { "fix" },
                if mask & 2 == 2 { "var" } else { "fix" },
                if mask & 4 == 4 { "var" } else { "fix" },
            );
            let overrides = vec![
                ("variable_fundamental_price".to_string(), flag(0)),
                ("variable_window".to_string(), flag(1)),
                ("variable_phi".to_string(), flag(2)),
                ("variable_kappa".to_string(), flag(2)),
            ];
            spec.cells.push((name, overrides));
        }
        spec
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut spec = SweepSpec::new(SimConfig::default());
        let mut section: Option<usize> = None;
        let mut unknown = Vec::new();
        let mut seen = BTreeMap::new();
        let mut base_pairs = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if let Some(header) = line.strip_prefix('[') {
                let name = header
                    .strip_suffix(']')
                    .and_then(|h| h.trim().strip_prefix("cell"))
                    .map(str::trim)
                    .filter(|n| !n.is_empty())
                    .ok_or_else(|| Error::Config(format!("line {}: expected '[cell NAME]'", lineno + 1)))?;
                spec.cells.push((name.to_string(), Vec::new()));
                section = Some(spec.cells.len() - 1);
                continue;
            }
            let Some((k, v, _)) = parse_pairs(line)?.into_iter().next() else {
                continue;
            };
            let scope = section.map_or("top".to_string(), |c| spec.cells[c].0.clone());
            if let Some(prev) = seen.insert((scope.clone(), k.clone()), lineno + 1) {
                return Err(Error::Config(format!(
                    "key '{k}' set twice in {scope} (lines {prev} and {})",
                    lineno + 1
                )));
            }
            match section {
                None if SWEEP_KEYS.contains(&k.as_str()) => match k.as_str() {
                    "runs" => spec.runs = parse(&k, &v)?,
                    "master_seed" => spec.master_seed = parse(&k, &v)?,
                    _ => spec.relevant_fraction = parse(&k, &v)?,
                },
                _ if !KEYS.contains(&k.as_str()) => unknown.push(k),
                None => {
                    let _ = writeln!(base_pairs, "{k} = {v}");
                }
                Some(c) => spec.cells[c].1.push((k, v)),
            }
        }
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        spec.base = SimConfig::from_kv_text(&base_pairs)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "runs = {}", self.runs);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "relevant_fraction = {}", fmt_real(self.relevant_fraction));
        s.push_str(&self.base.to_kv_text());
        for (name, overrides) in &self.cells {
            let _ = writeln!(s, "\n[cell {name}]");
            for (k, v) in overrides {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }

    /// Cells as (name, overrides); a spec without cells runs the base alone.
    fn effective_cells(&self) -> Vec<(String, Vec<(String, String)>)> {
        if self.cells.is_empty() {
            vec![("base".to_string(), Vec::new())]
        } else {
            self.cells.clone()
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len().max(1)
    }

    /// The complete configuration of cell `cell` before seeding.
    pub fn cell_config(&self, cell: usize) -> Result<SimConfig> {
        let cells = self.effective_cells();
        let (name, overrides) = cells
            .get(cell)
            .ok_or_else(|| Error::InvalidParameter(format!("no cell {cell}")))?;
        let mut cfg = self.base.clone();
        for (k, v) in overrides {
            cfg.set(k, v).map_err(|e| Error::Config(format!("cell {name}: {e}")))?;
        }
        cfg.validate().map_err(|e| Error::Config(format!("cell {name}: {e}")))?;
        Ok(cfg)
    }

    pub fn run_seed(&self, cell: usize, run: usize) -> u64 {
        derive_seed(self.master_seed, &[cell as u64, run as u64])
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if !(self.relevant_fraction > 0.0 && self.relevant_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "relevant_fraction must be in (0, 1], got {}",
                self.relevant_fraction
            )));
        }
        for c in 0..self.cell_count() {
            self.cell_config(c)?;
        }
        Ok(())
    }
}

fn parse<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("invalid value '{raw}' for '{key}'")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub cell: usize,
    pub run: usize,
    pub seed: u64,
    pub outcome: std::result::Result<(f64, usize), String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub name: String,
    pub runs: usize,
    pub volatility_mean: f64,
    pub volatility_sd: f64,
    pub relevant_mean: f64,
    pub relevant_sd: f64,
    /// First run error, if any run of the cell failed.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSummary {
    pub cells: Vec<CellSummary>,
    pub runs: Vec<RunResult>,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

fn one_run(cfg: &SimConfig, fraction: f64) -> Result<(f64, usize)> {
    let out = run(cfg)?;
    let vol = volatility(&log_returns(&out.prices)?)?;
    let relevant = relevant_avalanche_count(&out.avalanches, cfg.node_count(), fraction)?;
    Ok((vol, relevant))
}

/// Runs every (cell, run) pair on a pool of `workers` threads.
///
/// Results are gathered in (cell, run) order, so the summary does not
/// depend on the worker count or on scheduling.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepSummary> {
    spec.validate()?;
    let configs: Vec<SimConfig> = (0..spec.cell_count()).map(|c| spec.cell_config(c)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..spec.runs).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidState(format!("worker pool: {e}")))?;
    let runs: Vec<RunResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(cell, run)| {
                let seed = spec.run_seed(cell, run);
                let cfg = SimConfig {
                    seed,
                    ..configs[cell].clone()
                };
                RunResult {
                    cell,
                    run,
                    seed,
                    outcome: one_run(&cfg, spec.relevant_fraction).map_err(|e| e.to_string()),
                }
            })
            .collect()
    });

    let names: Vec<String> = spec.effective_cells().into_iter().map(|(n, _)| n).collect();
    Ok(summarize(&names, runs))
}

fn summarize(names: &[String], runs: Vec<RunResult>) -> SweepSummary {
    let cells = names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let rows: Vec<&RunResult> = runs.iter().filter(|r| r.cell == c).collect();
            let failure = rows.iter().find_map(|r| r.outcome.as_ref().err().cloned());
            let ok: Vec<(f64, usize)> = rows.iter().filter_map(|r| r.outcome.as_ref().ok().copied()).collect();
            let (vm, vs) = mean_sd(&ok.iter().map(|o| o.0).collect::<Vec<_>>());
            let (rm, rs) = mean_sd(&ok.iter().map(|o| o.1 as f64).collect::<Vec<_>>());
            CellSummary {
                name: name.clone(),
                runs: rows.len(),
                volatility_mean: vm,
                volatility_sd: vs,
                relevant_mean: rm,
                relevant_sd: rs,
                failure,
            }
        })
        .collect();
    SweepSummary { cells, runs }
}

impl SweepSummary {
    /// One row per cell at full precision.
    pub fn table_text(&self) -> String {
        let mut s = String::from("cell,name,runs,volatility_mean,volatility_sd,relevant_mean,relevant_sd,status\n");
        for (i, c) in self.cells.iter().enumerate() {
            let status = match &c.failure {
                None => "ok".to_string(),
                Some(e) => format!("failed: {}", e.replace(',', ";")),
            };
            let _ = writeln!(
                s,
                "{i},{},{},{},{},{},{},{status}",
                c.name,
                c.runs,
                fmt_real(c.volatility_mean),
                fmt_real(c.volatility_sd),
                fmt_real(c.relevant_mean),
                fmt_real(c.relevant_sd),
            );
        }
        s
    }

    /// The cell table rounded for reading.
    pub fn display_text(&self) -> String {
        let width = self.cells.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
        let mut s = format!(
            "{:<width$}  {:>4}  {:>12}  {:>12}  {:>10}  {:>10}  status\n",
            "cell", "runs", "vol mean", "vol sd", "rel mean", "rel sd"
        );
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{:<width$}  {:>4}  {:>12.4e}  {:>12.4e}  {:>10.2}  {:>10.2}  {}",
                c.name,
                c.runs,
                c.volatility_mean,
                c.volatility_sd,
                c.relevant_mean,
                c.relevant_sd,
                if c.failure.is_some() { "FAILED" } else { "ok" }
            );
        }
        s
    }

    /// One row per run.
    pub fn runs_text(&self) -> String {
        let mut s = String::from("cell,run,seed,volatility,relevant_avalanches,status\n");
        for r in &self.runs {
            let _ = match &r.outcome {
                Ok((v, n)) => writeln!(s, "{},{},{},{},{n},ok", r.cell, r.run, r.seed, fmt_real(*v)),
                Err(e) => writeln!(s, "{},{},{},,,failed: {}", r.cell, r.run, r.seed, e.replace(',', ";")),
            };
        }
        s
    }
}
