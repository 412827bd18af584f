//! The market engine: one tick of drive, pricing, cascades, imitation and
//! aggregation, and full runs built on it.

use std::fmt::Write as _;

use crate::config::{Aggregation, SimConfig};
use crate::error::{Error, Result};
use crate::information::{
    apply_imitation, dissipation_audit, stamp_initiator_prices, AvalancheRecord, InformationField,
};
use crate::network::{build_lattice, NetworkTopology, RewireReport};
use crate::rng::{RandomSource, StreamRole};
use crate::traders::{
    populate, price_chartist, price_fundamentalist, price_random, PriceFloor, RoleKind, Trader, TraderRole,
};

/// `eps * exp(beta * I_av)`; the exponent is capped at `cap`. Returns the value
/// and whether the cap was hit.
pub fn omega(i_av: f64, beta: f64, eps: f64, cap: f64) -> Result<(f64, bool)> {
    if !(i_av >= 0.0) || !i_av.is_finite() {
        return Err(Error::Domain(format!("I_av must be finite and nonnegative, got {i_av}")));
    }
    let exponent = beta * i_av;
    let capped = exponent > cap;
    let value = eps * exponent.min(cap).exp();
    if !value.is_finite() {
        return Err(Error::Numeric(format!("global noise overflowed: eps={eps}, exponent={exponent}")));
    }
    Ok((value, capped))
}

/// New global price from the traders' individual prices plus the global noise.
pub fn aggregate_price(traders: &[Trader], omega_value: f64, mode: Aggregation, floor: PriceFloor) -> Result<f64> {
    if traders.is_empty() {
        return Err(Error::InvalidState("cannot aggregate an empty population".into()));
    }
    let n = traders.len() as f64;
    let base = match mode {
        Aggregation::GrandMean => traders.iter().map(|t| t.individual_price).sum::<f64>() / n,
        Aggregation::Literal => {
            let mut sums = [0.0f64; 3];
            let mut counts = [0usize; 3];
            for t in traders {
                let g = t.role.kind() as usize;
                sums[g] += t.individual_price;
                counts[g] += 1;
            }
            (0..3).map(|g| counts[g] as f64 / n * sums[g]).sum()
        }
    };
    Ok(floor.apply(base + omega_value)?.price)
}

/// `I_av`: mean information over all traders.
pub fn compute_i_av(field: &InformationField) -> f64 {
    field.mean()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Counters {
    pub individual_clamps: u64,
    pub global_clamps: u64,
    pub exponent_caps: u64,
    pub topplings: u64,
    pub imitations: u64,
    pub max_audit_residual: f64,
    pub omega_abs_sum: f64,
    pub omega_abs_max: f64,
    pub i_av_sum: f64,
}

#[derive(Clone, Debug)]
pub struct MarketState {
    pub tick: u64,
    pub history: Vec<f64>,
    pub avalanches: Vec<AvalancheRecord>,
    pub counters: Counters,
}

struct Sources {
    drive: RandomSource,
    noise: RandomSource,
    random_pricing: RandomSource,
    global_noise: RandomSource,
}

pub struct Market {
    config: SimConfig,
    topology: NetworkTopology,
    rewire_report: RewireReport,
    traders: Vec<Trader>,
    is_random: Vec<bool>,
    field: InformationField,
    state: MarketState,
    sources: Sources,
    window_upper: usize,
    window_means: Vec<f64>,
}

/// Everything a finished run emits.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: SimConfig,
    pub prices: Vec<f64>,
    pub avalanches: Vec<AvalancheRecord>,
    pub traders: Vec<Trader>,
    pub topology: NetworkTopology,
    pub rewire_report: RewireReport,
    pub counters: Counters,
}

impl Market {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        let mut rewiring = RandomSource::for_role(seed, StreamRole::Rewiring);
        let lattice = build_lattice(config.n_side, config.boundary)?;
        let (topology, rewire_report) = lattice.rewire(config.rewire_prob, &mut rewiring)?;

        let spec = config.population_spec()?;
        let mut hetero = RandomSource::for_role(seed, StreamRole::Heterogeneity);
        let mut info = RandomSource::for_role(seed, StreamRole::InitialInformation);
        let population = populate(&spec, &topology, &mut hetero, &mut info)?;
        let is_random = population.traders.iter().map(|t| t.role.is_random()).collect();
        let field = InformationField::new(
            population.information,
            config.info_threshold,
            config.alpha,
            config.drive_mode,
        )?;
        let window_upper = spec.window.upper();
        Ok(Market {
            config: config.clone(),
            topology,
            rewire_report,
            traders: population.traders,
            is_random,
            field,
            state: MarketState {
                tick: 0,
                history: vec![config.initial_price],
                avalanches: Vec::new(),
                counters: Counters::default(),
            },
            sources: Sources {
                drive: RandomSource::for_role(seed, StreamRole::Drive),
                noise: RandomSource::for_role(seed, StreamRole::AgentNoise),
                random_pricing: RandomSource::for_role(seed, StreamRole::RandomPricing),
                global_noise: RandomSource::for_role(seed, StreamRole::GlobalNoise),
            },
            window_upper,
            window_means: vec![0.0; window_upper + 1],
        })
    }

    pub fn state(&self) -> &MarketState {
        &self.state
    }

    pub fn traders(&self) -> &[Trader] {
        &self.traders
    }

    pub fn field(&self) -> &InformationField {
        &self.field
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn last_price(&self) -> f64 {
        *self.state.history.last().expect("history is never empty")
    }

    /// `window_means[m]` = mean of the last `min(m, len)` global prices.
    fn refresh_window_means(&mut self) {
        let history = &self.state.history;
        let len = history.len();
        let mut sum = 0.0;
        for m in 1..=self.window_upper {
            if m <= len {
                sum += history[len - m];
            }
            self.window_means[m] = sum / m.min(len) as f64;
        }
    }

    /// Advances the market by one tick and returns the new global price.
    pub fn step(&mut self) -> Result<f64> {
        self.refresh_window_means();
        let cfg = &self.config;
        let floor = PriceFloor(cfg.price_floor);
        let sigma = cfg.sigma;
        let tick = self.state.tick + 1;

        // 1. information drive
        let activated = self.field.drive(&self.is_random, &mut self.sources.drive)?;

        // 2. individual prices from the last global price
        let p_t = *self.state.history.last().expect("history is never empty");
        let shared = if cfg.shared_eps {
            Some(self.sources.noise.uniform(-sigma, sigma)?)
        } else {
            None
        };
        let mut clamps = 0;
        for t in &mut self.traders {
            let quote = match t.role {
                TraderRole::Fundamentalist { phi, fundamental_price } => {
                    let eps = match shared {
                        Some(e) => e,
                        None => self.sources.noise.uniform(-sigma, sigma)?,
                    };
                    price_fundamentalist(p_t, phi, fundamental_price, eps, floor)?
                }
                TraderRole::Chartist { kappa, window } => {
                    let eps = match shared {
                        Some(e) => e,
                        None => self.sources.noise.uniform(-sigma, sigma)?,
                    };
                    price_chartist(p_t, kappa, window, self.window_means[window], eps, floor)?
                }
                TraderRole::Random => price_random(p_t, floor, &mut self.sources.random_pricing)?,
            };
            clamps += quote.clamped as u64;
            t.individual_price = quote.price;
        }

        // 3. cascades
        let before = self.field.total();
        let mut outcome = self.field.relax(&activated, &self.topology, &self.is_random, tick)?;
        let residual = dissipation_audit(before, self.field.total(), &outcome.topples, cfg.alpha)?;

        // 4. imitation
        let mut prices: Vec<f64> = self.traders.iter().map(|t| t.individual_price).collect();
        stamp_initiator_prices(&mut outcome.records, &prices);
        let imitations = apply_imitation(&outcome.records, &mut prices, &self.is_random);
        for (t, p) in self.traders.iter_mut().zip(prices) {
            t.individual_price = p;
        }

        // 5. global noise from post-cascade information
        let i_av = compute_i_av(&self.field);
        let eps = self.sources.global_noise.uniform(-sigma, sigma)?;
        let (omega_value, capped) = omega(i_av, cfg.beta, eps, cfg.omega_exponent_cap)?;
        if capped {
            log::warn!("tick {tick}: global noise exponent capped at {}", cfg.omega_exponent_cap);
        }

        // 6. aggregation
        let raw_mean = aggregate_price(&self.traders, omega_value, cfg.aggregation, PriceFloor(f64::MIN))?;
        let price = floor.apply(raw_mean)?;

        let c = &mut self.state.counters;
        c.individual_clamps += clamps;
        c.global_clamps += price.clamped as u64;
        c.exponent_caps += capped as u64;
        c.topplings += outcome.topples.len() as u64;
        c.imitations += imitations as u64;
        c.max_audit_residual = c.max_audit_residual.max(residual);
        c.omega_abs_sum += omega_value.abs();
        c.omega_abs_max = c.omega_abs_max.max(omega_value.abs());
        c.i_av_sum += i_av;

        self.state.history.push(price.price);
        self.state.avalanches.extend(outcome.records);
        self.state.tick = tick;
        Ok(price.price)
    }

    pub fn into_output(self) -> RunOutput {
        RunOutput {
            config: self.config,
            prices: self.state.history,
            avalanches: self.state.avalanches,
            traders: self.traders,
            topology: self.topology,
            rewire_report: self.rewire_report,
            counters: self.state.counters,
        }
    }
}

/// Builds the market from `config` and advances it `config.ticks` times.
pub fn run(config: &SimConfig) -> Result<RunOutput> {
    let mut market = Market::new(config)?;
    for _ in 0..config.ticks {
        market.step()?;
    }
    Ok(market.into_output())
}

impl RunOutput {
    pub fn role_count(&self, kind: RoleKind) -> usize {
        self.traders.iter().filter(|t| t.role.kind() == kind).count()
    }

    /// Avalanche sizes (distinct traders) in log order.
    pub fn avalanche_sizes(&self) -> Vec<usize> {
        self.avalanches.iter().map(|r| r.distinct_agents).collect()
    }

    pub fn mean_omega_abs(&self) -> f64 {
        let steps = self.prices.len().saturating_sub(1).max(1);
        self.counters.omega_abs_sum / steps as f64
    }

    pub fn mean_i_av(&self) -> f64 {
        let steps = self.prices.len().saturating_sub(1).max(1);
        self.counters.i_av_sum / steps as f64
    }

    /// Header line then `tick,price` rows at 17 significant digits.
    pub fn prices_text(&self) -> String {
        prices_text(&self.prices)
    }
}

pub fn prices_text(prices: &[f64]) -> String {
    let mut out = String::with_capacity(prices.len() * 32);
    out.push_str("tick,price\n");
    for (t, p) in prices.iter().enumerate() {
        let _ = writeln!(out, "{t},{p:.16e}");
    }
    out
}
