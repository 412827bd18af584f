use crate::error::{Error, Result};

/// Log-returns of a price series.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnsSeries {
    values: Vec<f64>,
    source_len: usize,
}

impl ReturnsSeries {
    /// Wraps an arbitrary series (for instance synthetic data) for analysis.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value {v} in series")));
        }
        let source_len = values.len() + 1;
        Ok(ReturnsSeries { values, source_len })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Length of the price series the returns came from.
    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn abs(&self) -> ReturnsSeries {
        ReturnsSeries {
            values: self.values.iter().map(|v| v.abs()).collect(),
            source_len: self.source_len,
        }
    }

    pub fn window(&self, start: usize, len: usize) -> ReturnsSeries {
        ReturnsSeries {
            values: self.values[start..start + len].to_vec(),
            source_len: len + 1,
        }
    }
}

/// `r_t = ln p_{t+1} - ln p_t`.
pub fn log_returns(prices: &[f64]) -> Result<ReturnsSeries> {
    if prices.len() < 2 {
        return Err(Error::InvalidLength {
            needed: 2,
            got: prices.len(),
        });
    }
    if let Some((i, p)) = prices.iter().enumerate().find(|(_, p)| !(**p > 0.0) || !p.is_finite()) {
        return Err(Error::Domain(format!("price {p} at index {i} is not positive")));
    }
    Ok(ReturnsSeries {
        values: prices.windows(2).map(|w| w[1].ln() - w[0].ln()).collect(),
        source_len: prices.len(),
    })
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    // exact for constant input, so its deviations vanish
    match xs.first() {
        Some(&x0) if xs.iter().all(|&x| x == x0) => x0,
        _ => xs.iter().sum::<f64>() / xs.len() as f64,
    }
}

/// Sample standard deviation (n - 1 denominator).
pub(crate) fn sample_stdev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// `(r - mean) / stdev` with the sample standard deviation.
pub fn normalize(series: &ReturnsSeries) -> Result<ReturnsSeries> {
    let xs = series.values();
    if xs.len() < 2 {
        return Err(Error::InvalidLength { needed: 2, got: xs.len() });
    }
    let m = mean(xs);
    let sd = sample_stdev(xs);
    if !(sd > 0.0) {
        return Err(Error::DegenerateSeries("zero variance, cannot normalize".into()));
    }
    Ok(ReturnsSeries {
        values: xs.iter().map(|x| (x - m) / sd).collect(),
        source_len: series.source_len,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Sample standard deviation.
    pub stdev: f64,
    /// `m3 / m2^1.5`; `None` for a constant series.
    pub skewness: Option<f64>,
    /// `m4 / m2^2 - 3`; `None` for a constant series.
    pub excess_kurtosis: Option<f64>,
}

pub fn moments(series: &ReturnsSeries) -> Result<Moments> {
    let xs = series.values();
    if xs.len() < 4 {
        return Err(Error::InvalidLength { needed: 4, got: xs.len() });
    }
    let n = xs.len() as f64;
    let m = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let stdev = (m2 / (n - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    } else {
        (None, None)
    };
    Ok(Moments {
        mean: m,
        stdev,
        skewness,
        excess_kurtosis,
    })
}

/// Sample standard deviation of the returns.
pub fn volatility(returns: &ReturnsSeries) -> Result<f64> {
    let xs = returns.values();
    if xs.len() < 2 {
        return Err(Error::InvalidLength { needed: 2, got: xs.len() });
    }
    Ok(sample_stdev(xs))
}
