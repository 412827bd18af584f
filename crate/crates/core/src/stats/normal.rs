use super::ReturnsSeries;
use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF: Acklam's rational approximation followed by
/// one Halley step against [`normal_cdf`].
#[allow(clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile probability {p} outside (0, 1)")));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    // work on the smaller tail so the residual keeps its precision
    let e = if p < 0.5 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - 0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    Ok(x - u / (1.0 + x * u / 2.0))
}

/// Sorted sample paired with normal quantiles at `(i - 0.5) / n`.
pub fn qq_points(series: &ReturnsSeries) -> Result<Vec<(f64, f64)>> {
    let n = series.len();
    if n < 10 {
        return Err(Error::InvalidLength { needed: 10, got: n });
    }
    let mut sorted = series.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, y)| Ok((normal_quantile((i as f64 + 0.5) / n as f64)?, y)))
        .collect()
}
