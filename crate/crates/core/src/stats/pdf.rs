use super::ReturnsSeries;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdfBin {
    pub center: f64,
    pub density: f64,
    pub count: usize,
}

/// Histogram density over `[-range, range]` in bins of `bin_width`.
///
/// Densities are normalized by the full sample size, so they integrate to the
/// fraction of samples that fall inside the range.
pub fn empirical_pdf(series: &ReturnsSeries, bin_width: f64, range: f64) -> Result<Vec<PdfBin>> {
    if !(bin_width > 0.0) || !(range > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bin width and range must be positive, got {bin_width} and {range}"
        )));
    }
    let bins = ((2.0 * range / bin_width).round() as usize).max(1);
    let width = 2.0 * range / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in series.values() {
        if x < -range || x > range {
            continue;
        }
        let k = (((x + range) / width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = series.len().max(1) as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| PdfBin {
            center: -range + (k as f64 + 0.5) * width,
            density: count as f64 / (n * width),
            count,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;

    #[test]
    fn point_mass() {
        let s = ReturnsSeries::from_values(vec![0.0; 50]).unwrap();
        let pdf = empirical_pdf(&s, 0.2, 10.0).unwrap();
        let nonzero: Vec<&PdfBin> = pdf.iter().filter(|b| b.density > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((nonzero[0].density - 5.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_density() {
        let mut r = RandomSource::new(4, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.uniform(-1.0, 1.0).unwrap()).collect();
        let pdf = empirical_pdf(&ReturnsSeries::from_values(xs).unwrap(), 0.5, 1.0).unwrap();
        assert_eq!(pdf.len(), 4);
        // density 0.5 per bin; binomial sd of each count is sqrt(n/4 * 3/4) ~ 194
        for b in &pdf {
            assert!((b.density - 0.5).abs() < 5.0 * 194.0 / (n as f64 * 0.5), "{b:?}");
        }
    }

    #[test]
    fn total_probability_at_most_one() {
        let mut r = RandomSource::new(9, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| r.normal(0.0, 4.0).unwrap()).collect();
        let pdf = empirical_pdf(&ReturnsSeries::from_values(xs).unwrap(), 0.2, 10.0).unwrap();
        let total: f64 = pdf.iter().map(|b| b.density * 0.2).sum();
        assert!(total <= 1.0 + 1e-9);
        assert!(total > 0.9);
    }
}
