//! Trader roles, individual price rules and population construction.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::network::NetworkTopology;
use crate::rng::RandomSource;

/// Smallest magnitude a drawn sensitivity may take.
pub const MIN_SENSITIVITY: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraderRole {
    Fundamentalist { phi: f64, fundamental_price: f64 },
    Chartist { kappa: f64, window: usize },
    Random,
}

impl TraderRole {
    pub fn kind(&self) -> RoleKind {
        match self {
            TraderRole::Fundamentalist { .. } => RoleKind::Fundamentalist,
            TraderRole::Chartist { .. } => RoleKind::Chartist,
            TraderRole::Random => RoleKind::Random,
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, TraderRole::Random)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TraderRole::Fundamentalist { phi, fundamental_price } => {
                if !phi.is_finite() || !(fundamental_price > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "fundamentalist needs finite phi and positive p_f, got phi={phi}, p_f={fundamental_price}"
                    )));
                }
            }
            TraderRole::Chartist { kappa, window } => {
                if window < 1 {
                    return Err(Error::InvalidWindow(window as i64));
                }
                if !kappa.is_finite() {
                    return Err(Error::InvalidParameter(format!("chartist kappa {kappa} not finite")));
                }
            }
            TraderRole::Random => {}
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RoleKind {
    Fundamentalist,
    Chartist,
    Random,
}

impl RoleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RoleKind::Fundamentalist => "fundamentalist",
            RoleKind::Chartist => "chartist",
            RoleKind::Random => "random",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trader {
    pub id: usize,
    pub role: TraderRole,
    pub individual_price: f64,
}

/// Lower bound applied to every individual and global price.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriceFloor(pub f64);

impl Default for PriceFloor {
    fn default() -> Self {
        PriceFloor(1e-2)
    }
}

/// A price after the floor was applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quote {
    pub price: f64,
    pub clamped: bool,
}

impl PriceFloor {
    pub fn apply(self, raw: f64) -> Result<Quote> {
        if !raw.is_finite() {
            return Err(Error::Numeric(format!("non-finite price {raw}")));
        }
        Ok(if raw < self.0 {
            Quote { price: self.0, clamped: true }
        } else {
            Quote { price: raw, clamped: false }
        })
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::Numeric(format!("non-finite pricing input {v}"))),
        None => Ok(()),
    }
}

/// `p_t + phi * (p_f - p_t) + eps`, floored.
pub fn price_fundamentalist(p_t: f64, phi: f64, p_f: f64, eps: f64, floor: PriceFloor) -> Result<Quote> {
    check_finite(&[p_t, phi, p_f, eps])?;
    floor.apply(p_t + phi * (p_f - p_t) + eps)
}

/// `p_t + (kappa / M) * (p_t - p_M) + eps`, floored.
pub fn price_chartist(
    p_t: f64,
    kappa: f64,
    window: usize,
    window_mean: f64,
    eps: f64,
    floor: PriceFloor,
) -> Result<Quote> {
    if window < 1 {
        return Err(Error::InvalidWindow(window as i64));
    }
    check_finite(&[p_t, kappa, window_mean, eps])?;
    floor.apply(p_t + (kappa / window as f64) * (p_t - window_mean) + eps)
}

/// Uniform in [0, p_t), floored.
pub fn price_random(p_t: f64, floor: PriceFloor, source: &mut RandomSource) -> Result<Quote> {
    check_finite(&[p_t])?;
    floor.apply(source.uniform(0.0, p_t)?)
}

/// Mean of the last `min(window, len)` entries.
pub fn moving_average(history: &[f64], window: usize) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::InvalidState("moving average of empty history".into()));
    }
    if window < 1 {
        return Err(Error::InvalidWindow(window as i64));
    }
    let take = window.min(history.len());
    let tail = &history[history.len() - take..];
    Ok(tail.iter().sum::<f64>() / take as f64)
}

/// Fractions of each role; must be nonnegative and sum to one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Composition {
    pub fundamentalists: f64,
    pub chartists: f64,
    pub random: f64,
}

impl Composition {
    pub fn new(fundamentalists: f64, chartists: f64, random: f64) -> Result<Self> {
        let c = Composition {
            fundamentalists,
            chartists,
            random,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.fundamentalists, self.chartists, self.random];
        if parts.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) {
            return Err(Error::InvalidComposition(format!("negative or non-finite fraction in {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidComposition(format!("fractions sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// Largest-remainder rounding; ties go to the earlier role (F, C, R).
    pub fn counts(&self, n: usize) -> Result<[usize; 3]> {
        self.validate()?;
        let exact = [
            self.fundamentalists * n as f64,
            self.chartists * n as f64,
            self.random * n as f64,
        ];
        // snap values that are integers up to rounding noise
        let snapped = exact.map(|x| if (x - x.round()).abs() < 1e-9 { x.round() } else { x });
        let mut counts = snapped.map(|x| x.floor() as usize);
        let assigned: usize = counts.iter().sum();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let ra = snapped[a] - snapped[a].floor();
            let rb = snapped[b] - snapped[b].floor();
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        for &i in order.iter().take(n.saturating_sub(assigned)) {
            counts[i] += 1;
        }
        Ok(counts)
    }
}

/// Fixed value, or a per-agent normal draw around it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamDist {
    pub mean: f64,
    pub stdev: f64,
    pub variable: bool,
}

impl ParamDist {
    pub fn fixed(mean: f64) -> Self {
        ParamDist {
            mean,
            stdev: 0.0,
            variable: false,
        }
    }

    fn draw(&self, source: &mut RandomSource) -> Result<f64> {
        if self.variable {
            source.normal(self.mean, self.stdev)
        } else {
            Ok(self.mean)
        }
    }
}

/// Chartist look-back window: a fixed length or a per-agent integer draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowDist {
    pub min: usize,
    pub max: usize,
    pub fixed: usize,
    pub variable: bool,
}

impl WindowDist {
    fn draw(&self, source: &mut RandomSource) -> Result<usize> {
        if self.variable {
            Ok(source.uniform_int(self.min as i64, self.max as i64)? as usize)
        } else {
            Ok(self.fixed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variable {
            if self.min < 1 {
                return Err(Error::InvalidWindow(self.min as i64));
            }
            if self.min > self.max {
                return Err(Error::InvalidParameter(format!(
                    "window range [{}, {}] is empty",
                    self.min, self.max
                )));
            }
        } else if self.fixed < 1 {
            return Err(Error::InvalidWindow(self.fixed as i64));
        }
        Ok(())
    }

    /// Largest window any chartist can have.
    pub fn upper(&self) -> usize {
        if self.variable {
            self.max
        } else {
            self.fixed
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationSpec {
    pub n: usize,
    pub composition: Composition,
    pub phi: ParamDist,
    pub fundamental_price: ParamDist,
    pub kappa: ParamDist,
    pub window: WindowDist,
    pub initial_price: f64,
    pub info_threshold: f64,
    pub floor: PriceFloor,
}

#[derive(Clone, Debug)]
pub struct Population {
    pub traders: Vec<Trader>,
    /// Initial information level of each trader, uniform in [0, I_th).
    pub information: Vec<f64>,
}

impl Population {
    pub fn count(&self, kind: RoleKind) -> usize {
        self.traders.iter().filter(|t| t.role.kind() == kind).count()
    }
}

fn away_from_zero(x: f64) -> f64 {
    if x.abs() < MIN_SENSITIVITY {
        MIN_SENSITIVITY.copysign(x)
    } else {
        x
    }
}

/// Assigns roles to nodes by a uniform random permutation and draws per-agent
/// parameters. `hetero` drives the permutation and parameter draws, `info` the
/// initial information levels.
pub fn populate(
    spec: &PopulationSpec,
    topology: &NetworkTopology,
    hetero: &mut RandomSource,
    info: &mut RandomSource,
) -> Result<Population> {
    if spec.n != topology.node_count() {
        return Err(Error::InvalidComposition(format!(
            "population size {} does not match topology size {}",
            spec.n,
            topology.node_count()
        )));
    }
    if !(spec.initial_price > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "initial price must be positive, got {}",
            spec.initial_price
        )));
    }
    if !(spec.info_threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "information threshold must be positive, got {}",
            spec.info_threshold
        )));
    }
    spec.window.validate()?;
    let [nf, nc, nr] = spec.composition.counts(spec.n)?;
    let mut kinds: Vec<RoleKind> = std::iter::repeat_n(RoleKind::Fundamentalist, nf)
        .chain(std::iter::repeat_n(RoleKind::Chartist, nc))
        .chain(std::iter::repeat_n(RoleKind::Random, nr))
        .collect();
    hetero.shuffle(&mut kinds);

    let mut traders = Vec::with_capacity(spec.n);
    for (id, kind) in kinds.into_iter().enumerate() {
        let role = match kind {
            RoleKind::Fundamentalist => TraderRole::Fundamentalist {
                phi: away_from_zero(spec.phi.draw(hetero)?),
                fundamental_price: spec.fundamental_price.draw(hetero)?.max(spec.floor.0),
            },
            RoleKind::Chartist => TraderRole::Chartist {
                kappa: away_from_zero(spec.kappa.draw(hetero)?),
                window: spec.window.draw(hetero)?,
            },
            RoleKind::Random => TraderRole::Random,
        };
        role.validate()?;
        traders.push(Trader {
            id,
            role,
            individual_price: spec.initial_price,
        });
    }
    let information = (0..spec.n)
        .map(|_| info.uniform(0.0, spec.info_threshold))
        .collect::<Result<Vec<_>>>()?;
    Ok(Population { traders, information })
}

/// Audit dump: `id,role,phi,fundamental_price,kappa,window`, empty cells for
/// parameters a role does not have.
pub fn population_dump(traders: &[Trader]) -> String {
    let mut out = String::from("id,role,phi,fundamental_price,kappa,window\n");
    for t in traders {
        let _ = match t.role {
            TraderRole::Fundamentalist { phi, fundamental_price } => {
                writeln!(out, "{},fundamentalist,{phi:.17e},{fundamental_price:.17e},,", t.id)
            }
            TraderRole::Chartist { kappa, window } => {
                writeln!(out, "{},chartist,,,{kappa:.17e},{window}", t.id)
            }
            TraderRole::Random => writeln!(out, "{},random,,,,", t.id),
        };
    }
    out
}
