use super::{ols, Design};
use crate::error::{Error, Result};
use crate::information::AvalancheRecord;

/// Bins with fewer samples than this end the binned-slope fit.
pub const MIN_BIN_COUNT: usize = 10;

const MIN_TAIL: usize = 100;

/// Integer sizes in `[lower, upper)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogBin {
    pub lower: u64,
    pub upper: u64,
    pub center: f64,
    pub count: usize,
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerLawFit {
    /// Exponent of `P(s) ~ s^-alpha` by the continuous approximation to the discrete MLE.
    pub exponent_mle: f64,
    /// Least-squares slope of log density on log size over the fitted bins.
    pub binned_slope: f64,
    /// Quadratic coefficient of the same fit; near zero for a power law,
    /// clearly negative for an exponential cutoff. `None` with fewer than 4 bins.
    pub curvature: Option<f64>,
    pub s_min: u64,
    pub tail_count: usize,
    pub bins_used: usize,
    /// `log10` of the size range covered by the fitted bins.
    pub decades: f64,
    pub bins: Vec<LogBin>,
}

/// Ratio-2 bins starting at `s_min`; densities are per unit size and per tail sample.
pub fn log_binned_histogram(sizes: &[u64], s_min: u64) -> Result<Vec<LogBin>> {
    if s_min == 0 {
        return Err(Error::InvalidParameter("s_min must be at least 1".into()));
    }
    let tail: Vec<u64> = sizes.iter().copied().filter(|&s| s >= s_min).collect();
    let Some(&max) = tail.iter().max() else {
        return Ok(Vec::new());
    };
    let mut bins = Vec::new();
    let mut lower = s_min;
    while lower <= max {
        let upper = lower * 2;
        bins.push(LogBin {
            lower,
            upper,
            center: ((lower as f64 - 0.5) * (upper as f64 - 0.5)).sqrt(),
            count: 0,
            density: 0.0,
        });
        lower = upper;
    }
    for s in &tail {
        let k = (s / s_min).ilog2() as usize;
        bins[k].count += 1;
    }
    let n = tail.len() as f64;
    for b in &mut bins {
        b.density = b.count as f64 / (n * (b.upper - b.lower) as f64);
    }
    Ok(bins)
}

/// MLE exponent and binned log-log slope of the sizes at or above `s_min`.
///
/// The binned fit runs from the first bin through the last bin holding at
/// least [`MIN_BIN_COUNT`] samples; empty bins in between are skipped.
pub fn fit_power_law(sizes: &[u64], s_min: u64) -> Result<PowerLawFit> {
    if s_min == 0 {
        return Err(Error::InvalidParameter("s_min must be at least 1".into()));
    }
    let tail: Vec<u64> = sizes.iter().copied().filter(|&s| s >= s_min).collect();
    if tail.len() < MIN_TAIL {
        return Err(Error::InsufficientData(format!(
            "{} sizes at or above {s_min}, need {MIN_TAIL}",
            tail.len()
        )));
    }
    let first = tail[0];
    if tail.iter().all(|&s| s == first) {
        return Err(Error::InsufficientData("all tail sizes are equal".into()));
    }

    let x_min = s_min as f64 - 0.5;
    let log_sum: f64 = tail.iter().map(|&s| (s as f64 / x_min).ln()).sum();
    let exponent_mle = 1.0 + tail.len() as f64 / log_sum;

    let bins = log_binned_histogram(&tail, s_min)?;
    let last = bins
        .iter()
        .rposition(|b| b.count >= MIN_BIN_COUNT)
        .ok_or_else(|| Error::InsufficientData(format!("no bin holds {MIN_BIN_COUNT} samples")))?;
    let used: Vec<&LogBin> = bins[..=last].iter().filter(|b| b.count > 0).collect();
    if used.len() < 2 {
        return Err(Error::InsufficientData("binned fit needs at least two bins".into()));
    }
    let u: Vec<f64> = used.iter().map(|b| b.center.log10()).collect();
    let v: Vec<f64> = used.iter().map(|b| b.density.log10()).collect();
    let ones = vec![1.0; u.len()];
    let binned_slope = if u.len() == 2 {
        (v[1] - v[0]) / (u[1] - u[0])
    } else {
        ols(&v, &Design::from_columns(&[ones.clone(), u.clone()])?)?.coefficients[1]
    };
    let curvature = if u.len() >= 4 {
        let sq: Vec<f64> = u.iter().map(|x| x * x).collect();
        Some(ols(&v, &Design::from_columns(&[ones, u.clone(), sq])?)?.coefficients[2])
    } else {
        None
    };

    Ok(PowerLawFit {
        exponent_mle,
        binned_slope,
        curvature,
        s_min,
        tail_count: tail.len(),
        bins_used: used.len(),
        decades: u[u.len() - 1] - u[0],
        bins,
    })
}

/// `ceil(fraction * n)`, treating products within rounding noise of an integer as that integer.
pub fn relevant_threshold(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0) || !fraction.is_finite() {
        return Err(Error::InvalidParameter(format!("fraction must be positive, got {fraction}")));
    }
    let x = fraction * n as f64;
    let r = x.round();
    Ok(if (x - r).abs() < 1e-9 * r.max(1.0) { r as usize } else { x.ceil() as usize })
}

/// Avalanches involving at least `ceil(fraction * n)` distinct agents.
pub fn relevant_avalanche_count(log: &[AvalancheRecord], n: usize, fraction: f64) -> Result<usize> {
    let threshold = relevant_threshold(n, fraction)?;
    Ok(log.iter().filter(|r| r.distinct_agents >= threshold).count())
}
