use super::{ols, Design, ReturnsSeries};
use crate::error::{Error, Result};

/// Large-sample Dickey-Fuller critical values, constant and no trend (MacKinnon).
pub const ADF_CRITICAL_1PCT: f64 = -3.43;
pub const ADF_CRITICAL_5PCT: f64 = -2.86;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lags {
    Auto,
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdfResult {
    pub statistic: f64,
    pub lags: usize,
    pub observations: usize,
    pub reject_1pct: bool,
    pub reject_5pct: bool,
}

/// `floor(12 (T / 100)^(1/4))`.
pub fn auto_lags(len: usize) -> usize {
    (12.0 * (len as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Augmented Dickey-Fuller test with a constant.
///
/// Regresses `dy_t` on `1, y_{t-1}, dy_{t-1}, ..., dy_{t-L}` and reports the
/// t-ratio of the `y_{t-1}` coefficient.
pub fn adf_test(series: &ReturnsSeries, lags: Lags) -> Result<AdfResult> {
    let y = series.values();
    let t = y.len();
    let l = match lags {
        Lags::Auto => auto_lags(t),
        Lags::Fixed(l) => l,
    };
    if t <= l + 10 {
        return Err(Error::InvalidLength { needed: l + 11, got: t });
    }
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    // dy[i] is the change from y[i] to y[i + 1]; rows run over i = l..dy.len()
    let rows = dy.len() - l;
    let mut x = Design::zeros(rows, 2 + l);
    let mut target = Vec::with_capacity(rows);
    for (r, i) in (l..dy.len()).enumerate() {
        target.push(dy[i]);
        x.set(r, 0, 1.0);
        x.set(r, 1, y[i]);
        for j in 1..=l {
            x.set(r, 1 + j, dy[i - j]);
        }
    }
    let fit = ols(&target, &x)?;
    let statistic = fit.coefficients[1] / fit.std_errors[1];
    if !statistic.is_finite() {
        return Err(Error::DegenerateSeries(format!("ADF statistic is {statistic}")));
    }
    Ok(AdfResult {
        statistic,
        lags: l,
        observations: rows,
        reject_1pct: statistic < ADF_CRITICAL_1PCT,
        reject_5pct: statistic < ADF_CRITICAL_5PCT,
    })
}
