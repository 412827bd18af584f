use super::ReturnsSeries;
use crate::error::{Error, Result};

/// Sample autocorrelation at lags `0..=max_lag`, normalized by the lag-0 sum of squares.
pub fn acf(series: &ReturnsSeries, max_lag: usize) -> Result<Vec<f64>> {
    let xs = series.values();
    let n = xs.len();
    if 2 * max_lag >= n {
        return Err(Error::InvalidParameter(format!(
            "max_lag {max_lag} must be below half the series length {n}"
        )));
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let denom: f64 = d.iter().map(|x| x * x).sum();
    if !(denom > 0.0) {
        return Err(Error::DegenerateSeries("zero variance, autocorrelation undefined".into()));
    }
    Ok((0..=max_lag)
        .map(|lag| d[..n - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

/// Autocorrelation of absolute values.
pub fn abs_acf(series: &ReturnsSeries, max_lag: usize) -> Result<Vec<f64>> {
    acf(&series.abs(), max_lag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use proptest::prelude::*;

    fn series(v: Vec<f64>) -> ReturnsSeries {
        ReturnsSeries::from_values(v).unwrap()
    }

    fn within_band(values: &[f64], n: usize) -> f64 {
        let band = 3.0 / (n as f64).sqrt();
        values[1..].iter().filter(|v| v.abs() < band).count() as f64 / (values.len() - 1) as f64
    }

    #[test]
    fn lag_zero_is_one() {
        let a = acf(&series(vec![1.0, 3.0, 2.0, 5.0, 4.0]), 2).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alternation() {
        let xs: Vec<f64> = (0..1000).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a = acf(&series(xs), 3).unwrap();
        assert!((a[1] + 1.0).abs() < 0.01);
        assert!((a[2] - 1.0).abs() < 0.01);
    }

    #[test]
    fn independent_noise_stays_in_band() {
        let mut r = RandomSource::new(3, 0);
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| r.uniform(-1.0, 1.0).unwrap()).collect();
        let s = series(xs);
        assert!(within_band(&acf(&s, 100).unwrap(), n) >= 0.95);
        assert!(within_band(&abs_acf(&s, 100).unwrap(), n) >= 0.95);
    }

    #[test]
    fn clustered_volatility_shows_in_absolute_values() {
        // regime-switching scale: long calm and turbulent stretches
        let mut r = RandomSource::new(5, 0);
        let mut scale = 1.0;
        let xs: Vec<f64> = (0..20_000)
            .map(|_| {
                if r.chance(0.01) {
                    scale = if scale == 1.0 { 5.0 } else { 1.0 };
                }
                scale * r.normal(0.0, 1.0).unwrap()
            })
            .collect();
        let s = series(xs);
        let plain = acf(&s, 50).unwrap();
        let absolute = abs_acf(&s, 50).unwrap();
        for lag in 1..=50 {
            assert!(absolute[lag] > plain[lag], "lag {lag}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(acf(&series(vec![1.0; 10]), 2), Err(Error::DegenerateSeries(_))));
        assert!(matches!(acf(&series(vec![1.0, 2.0, 3.0, 4.0]), 2), Err(Error::InvalidParameter(_))));
    }

    proptest! {
        #[test]
        fn bounded(xs in proptest::collection::vec(-10.0f64..10.0, 8..300)) {
            let s = series(xs);
            let max_lag = (s.len() - 1) / 2;
            if let Ok(a) = acf(&s, max_lag) {
                prop_assert!(a.iter().all(|v| v.abs() <= 1.0 + 1e-12));
            }
        }
    }
}
