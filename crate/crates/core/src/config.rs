//! Simulation configuration and its flat `key = value` text form.
//!
//! Keys mirror the [`SimConfig`] field names. Blank lines and `#` comments are
//! ignored; unknown keys, duplicate keys and unparsable values are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::information::DriveMode;
use crate::network::Boundary;
use crate::traders::{Composition, ParamDist, PopulationSpec, PriceFloor, WindowDist};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Group-proportion-weighted average of group mean prices, i.e. the mean over all traders.
    #[default]
    GrandMean,
    /// Each group's price sum weighted by its proportion, as the formula is typeset.
    Literal,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::GrandMean => "grand-mean",
            Aggregation::Literal => "literal",
        }
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grand-mean" => Ok(Aggregation::GrandMean),
            "literal" => Ok(Aggregation::Literal),
            other => Err(Error::Config(format!("unknown aggregation '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n_side: usize,
    pub boundary: Boundary,
    pub rewire_prob: f64,
    pub fraction_fundamentalists: f64,
    pub fraction_chartists: f64,
    pub fraction_random: f64,
    pub fundamental_price: f64,
    pub fundamental_price_stdev: f64,
    pub variable_fundamental_price: bool,
    pub phi: f64,
    pub phi_stdev: f64,
    pub variable_phi: bool,
    pub kappa: f64,
    pub kappa_stdev: f64,
    pub variable_kappa: bool,
    pub window_min: usize,
    pub window_max: usize,
    pub window_fixed: usize,
    pub variable_window: bool,
    pub sigma: f64,
    pub shared_eps: bool,
    pub beta: f64,
    pub omega_exponent_cap: f64,
    pub alpha: f64,
    pub info_threshold: f64,
    pub drive_mode: DriveMode,
    pub aggregation: Aggregation,
    pub initial_price: f64,
    pub price_floor: f64,
    pub ticks: u64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_side: 40,
            boundary: Boundary::Open,
            rewire_prob: 0.02,
            fraction_fundamentalists: 0.25,
            fraction_chartists: 0.75,
            fraction_random: 0.0,
            fundamental_price: 5000.0,
            fundamental_price_stdev: 250.0,
            variable_fundamental_price: false,
            phi: 2.0,
            phi_stdev: 0.2,
            variable_phi: false,
            kappa: 2.0,
            kappa_stdev: 0.2,
            variable_kappa: false,
            window_min: 1,
            window_max: 90,
            window_fixed: 45,
            variable_window: true,
            sigma: 200.0,
            shared_eps: false,
            beta: 16.0,
            omega_exponent_cap: 700.0,
            alpha: 0.92,
            info_threshold: 1.0,
            drive_mode: DriveMode::GlobalUniform,
            aggregation: Aggregation::GrandMean,
            initial_price: 5000.0,
            price_floor: 1e-2,
            ticks: 10_000,
            seed: 1,
        }
    }
}

/// Field names in emission order.
pub const KEYS: &[&str] = &[
    "n_side",
    "boundary",
    "rewire_prob",
    "fraction_fundamentalists",
    "fraction_chartists",
    "fraction_random",
    "fundamental_price",
    "fundamental_price_stdev",
    "variable_fundamental_price",
    "phi",
    "phi_stdev",
    "variable_phi",
    "kappa",
    "kappa_stdev",
    "variable_kappa",
    "window_min",
    "window_max",
    "window_fixed",
    "variable_window",
    "sigma",
    "shared_eps",
    "beta",
    "omega_exponent_cap",
    "alpha",
    "info_threshold",
    "drive_mode",
    "aggregation",
    "initial_price",
    "price_floor",
    "ticks",
    "seed",
];

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse::<T>()
        .map_err(|_| Error::Config(format!("key '{key}': cannot parse value '{raw}'")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("key '{key}': expected a boolean, got '{raw}'"))),
    }
}

/// Splits `key = value` text into an ordered map. Unknown keys are reported by the caller.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected 'key = value'", lineno + 1)));
        };
        out.push((k.trim().to_string(), v.trim().to_string(), lineno + 1));
    }
    Ok(out)
}

impl SimConfig {
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        let unknown: Vec<&str> = pairs
            .iter()
            .filter(|(k, _, _)| !KEYS.contains(&k.as_str()))
            .map(|(k, _, _)| k.as_str())
            .collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        let mut cfg = SimConfig::default();
        let mut seen = BTreeMap::new();
        for (k, v, line) in &pairs {
            if let Some(prev) = seen.insert(k.clone(), *line) {
                return Err(Error::Config(format!("key '{k}' set twice (lines {prev} and {line})")));
            }
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "n_side" => self.n_side = parse_value(key, raw)?,
            "boundary" => self.boundary = raw.parse()?,
            "rewire_prob" => self.rewire_prob = parse_value(key, raw)?,
            "fraction_fundamentalists" => self.fraction_fundamentalists = parse_value(key, raw)?,
            "fraction_chartists" => self.fraction_chartists = parse_value(key, raw)?,
            "fraction_random" => self.fraction_random = parse_value(key, raw)?,
            "fundamental_price" => self.fundamental_price = parse_value(key, raw)?,
            "fundamental_price_stdev" => self.fundamental_price_stdev = parse_value(key, raw)?,
            "variable_fundamental_price" => self.variable_fundamental_price = parse_bool(key, raw)?,
            "phi" => self.phi = parse_value(key, raw)?,
            "phi_stdev" => self.phi_stdev = parse_value(key, raw)?,
            "variable_phi" => self.variable_phi = parse_bool(key, raw)?,
            "kappa" => self.kappa = parse_value(key, raw)?,
            "kappa_stdev" => self.kappa_stdev = parse_value(key, raw)?,
            "variable_kappa" => self.variable_kappa = parse_bool(key, raw)?,
            "window_min" => self.window_min = parse_value(key, raw)?,
            "window_max" => self.window_max = parse_value(key, raw)?,
            "window_fixed" => self.window_fixed = parse_value(key, raw)?,
            "variable_window" => self.variable_window = parse_bool(key, raw)?,
            "sigma" => self.sigma = parse_value(key, raw)?,
            "shared_eps" => self.shared_eps = parse_bool(key, raw)?,
            "beta" => self.beta = parse_value(key, raw)?,
            "omega_exponent_cap" => self.omega_exponent_cap = parse_value(key, raw)?,
            "alpha" => self.alpha = parse_value(key, raw)?,
            "info_threshold" => self.info_threshold = parse_value(key, raw)?,
            "drive_mode" => self.drive_mode = raw.parse()?,
            "aggregation" => self.aggregation = raw.parse()?,
            "initial_price" => self.initial_price = parse_value(key, raw)?,
            "price_floor" => self.price_floor = parse_value(key, raw)?,
            "ticks" => self.ticks = parse_value(key, raw)?,
            "seed" => self.seed = parse_value(key, raw)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Text form of one field; reals use a round-trippable representation.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "n_side" => self.n_side.to_string(),
            "boundary" => self.boundary.as_str().to_string(),
            "rewire_prob" => fmt_real(self.rewire_prob),
            "fraction_fundamentalists" => fmt_real(self.fraction_fundamentalists),
            "fraction_chartists" => fmt_real(self.fraction_chartists),
            "fraction_random" => fmt_real(self.fraction_random),
            "fundamental_price" => fmt_real(self.fundamental_price),
            "fundamental_price_stdev" => fmt_real(self.fundamental_price_stdev),
            "variable_fundamental_price" => self.variable_fundamental_price.to_string(),
            "phi" => fmt_real(self.phi),
            "phi_stdev" => fmt_real(self.phi_stdev),
            "variable_phi" => self.variable_phi.to_string(),
            "kappa" => fmt_real(self.kappa),
            "kappa_stdev" => fmt_real(self.kappa_stdev),
            "variable_kappa" => self.variable_kappa.to_string(),
            "window_min" => self.window_min.to_string(),
            "window_max" => self.window_max.to_string(),
            "window_fixed" => self.window_fixed.to_string(),
            "variable_window" => self.variable_window.to_string(),
            "sigma" => fmt_real(self.sigma),
            "shared_eps" => self.shared_eps.to_string(),
            "beta" => fmt_real(self.beta),
            "omega_exponent_cap" => fmt_real(self.omega_exponent_cap),
            "alpha" => fmt_real(self.alpha),
            "info_threshold" => fmt_real(self.info_threshold),
            "drive_mode" => self.drive_mode.as_str().to_string(),
            "aggregation" => self.aggregation.as_str().to_string(),
            "initial_price" => fmt_real(self.initial_price),
            "price_floor" => fmt_real(self.price_floor),
            "ticks" => self.ticks.to_string(),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.n_side * self.n_side
    }

    pub fn composition(&self) -> Result<Composition> {
        Composition::new(
            self.fraction_fundamentalists,
            self.fraction_chartists,
            self.fraction_random,
        )
    }

    pub fn population_spec(&self) -> Result<PopulationSpec> {
        Ok(PopulationSpec {
            n: self.node_count(),
            composition: self.composition()?,
            phi: ParamDist {
                mean: self.phi,
                stdev: self.phi_stdev,
                variable: self.variable_phi,
            },
            fundamental_price: ParamDist {
                mean: self.fundamental_price,
                stdev: self.fundamental_price_stdev,
                variable: self.variable_fundamental_price,
            },
            kappa: ParamDist {
                mean: self.kappa,
                stdev: self.kappa_stdev,
                variable: self.variable_kappa,
            },
            window: WindowDist {
                min: self.window_min,
                max: self.window_max,
                fixed: self.window_fixed,
                variable: self.variable_window,
            },
            initial_price: self.initial_price,
            info_threshold: self.info_threshold,
            floor: PriceFloor(self.price_floor),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_side < 2 {
            return bad(format!("n_side must be >= 2, got {}", self.n_side));
        }
        if !(0.0..=1.0).contains(&self.rewire_prob) {
            return bad(format!("rewire_prob must lie in [0, 1], got {}", self.rewire_prob));
        }
        self.composition().map_err(|e| Error::Config(e.to_string()))?;
        for (name, v) in [
            ("fundamental_price", self.fundamental_price),
            ("initial_price", self.initial_price),
            ("price_floor", self.price_floor),
            ("info_threshold", self.info_threshold),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        for (name, v) in [
            ("fundamental_price_stdev", self.fundamental_price_stdev),
            ("phi_stdev", self.phi_stdev),
            ("kappa_stdev", self.kappa_stdev),
            ("sigma", self.sigma),
            ("omega_exponent_cap", self.omega_exponent_cap),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be nonnegative and finite, got {v}"));
            }
        }
        for (name, v) in [("phi", self.phi), ("kappa", self.kappa), ("beta", self.beta)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        self.population_spec()?
            .window
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// Shortest decimal text that parses back to the same bits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}
