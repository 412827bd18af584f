use std::fmt::Write as _;
use std::path::Path;

use crate::config::fmt_real;
use crate::error::{Error, Result};
use crate::stats::{
    abs_acf, acf, adf_test, empirical_pdf, fit_q_gaussian, log_returns, moments, normalize, qq_points, AdfResult,
    Lags, Moments, PdfBin, QGaussianFit, ReturnsSeries,
};

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOptions {
    /// Subwindow lengths for the scale-dependent ADF runs.
    pub windows: Vec<usize>,
    pub max_lag: usize,
    pub bin_width: f64,
    pub range: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            windows: vec![15_000, 1_500, 150],
            max_lag: 100,
            bin_width: 0.2,
            range: 10.0,
        }
    }
}

/// ADF verdicts on consecutive non-overlapping windows of one length.
#[derive(Clone, Debug, PartialEq)]
pub struct AdfWindows {
    pub length: usize,
    pub results: Vec<AdfResult>,
    /// Why no window was tested, when none was.
    pub skipped: Option<String>,
}

impl AdfWindows {
    pub fn reject_1pct(&self) -> usize {
        self.results.iter().filter(|r| r.reject_1pct).count()
    }

    pub fn reject_5pct(&self) -> usize {
        self.results.iter().filter(|r| r.reject_5pct).count()
    }
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub options: AnalysisOptions,
    pub price_count: usize,
    pub returns: ReturnsSeries,
    pub moments: Moments,
    pub pdf: Vec<PdfBin>,
    pub q_fit: std::result::Result<QGaussianFit, String>,
    pub max_lag: usize,
    pub acf: Vec<f64>,
    pub abs_acf: Vec<f64>,
    pub qq: Vec<(f64, f64)>,
    pub adf: AdfResult,
    pub adf_windows: Vec<AdfWindows>,
}

/// Full stylized-facts analysis of a price series.
///
/// The lag range is trimmed to fit short series; a failed q-Gaussian fit is
/// recorded in the report rather than aborting.
pub fn analyze_prices(prices: &[f64], options: &AnalysisOptions) -> Result<Analysis> {
    if prices.len() < 100 {
        return Err(Error::InvalidLength {
            needed: 100,
            got: prices.len(),
        });
    }
    let returns = log_returns(prices)?;
    let z = normalize(&returns)?;
    let m = moments(&z)?;
    let pdf = empirical_pdf(&z, options.bin_width, options.range)?;
    let q_fit = fit_q_gaussian(&pdf).map_err(|e| e.to_string());
    let max_lag = options.max_lag.min((returns.len() - 1) / 2);
    let acf_values = acf(&returns, max_lag)?;
    let abs_values = abs_acf(&returns, max_lag)?;
    let qq = qq_points(&z)?;
    let adf = adf_test(&returns, Lags::Auto)?;

    let mut adf_windows = Vec::new();
    for &length in &options.windows {
        let mut w = AdfWindows {
            length,
            results: Vec::new(),
            skipped: None,
        };
        let count = returns.len().checked_div(length).unwrap_or(0);
        if count == 0 {
            w.skipped = Some(format!("series of {} returns is shorter than one window", returns.len()));
        }
        for k in 0..count {
            match adf_test(&returns.window(k * length, length), Lags::Auto) {
                Ok(r) => w.results.push(r),
                Err(e) => {
                    w.results.clear();
                    w.skipped = Some(e.to_string());
                    break;
                }
            }
        }
        adf_windows.push(w);
    }

    Ok(Analysis {
        options: options.clone(),
        price_count: prices.len(),
        returns,
        moments: m,
        pdf,
        q_fit,
        max_lag,
        acf: acf_values,
        abs_acf: abs_values,
        qq,
        adf,
        adf_windows,
    })
}

fn opt_real(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), fmt_real)
}

impl Analysis {
    /// Key-value report in `[section]` blocks; reals at full precision.
    pub fn report_text(&self) -> String {
        let mut s = String::new();
        let n = self.returns.len();
        let _ = writeln!(s, "[series]");
        let _ = writeln!(s, "prices = {}", self.price_count);
        let _ = writeln!(s, "returns = {n}");
        let _ = writeln!(s, "volatility = {}", fmt_real(crate::stats::volatility(&self.returns).unwrap_or(0.0)));

        let _ = writeln!(s, "\n[moments]");
        let _ = writeln!(s, "mean = {}", fmt_real(self.moments.mean));
        let _ = writeln!(s, "stdev = {}", fmt_real(self.moments.stdev));
        let _ = writeln!(s, "skewness = {}", opt_real(self.moments.skewness));
        let _ = writeln!(s, "excess_kurtosis = {}", opt_real(self.moments.excess_kurtosis));

        let _ = writeln!(s, "\n[pdf]");
        let _ = writeln!(s, "bin_width = {}", fmt_real(self.options.bin_width));
        let _ = writeln!(s, "range = {}", fmt_real(self.options.range));
        let _ = writeln!(s, "nonzero_bins = {}", self.pdf.iter().filter(|b| b.count > 0).count());

        let _ = writeln!(s, "\n[q_gaussian]");
        match &self.q_fit {
            Ok(f) => {
                let _ = writeln!(s, "status = ok");
                let _ = writeln!(s, "q = {}", fmt_real(f.q));
                let _ = writeln!(s, "a = {}", fmt_real(f.a));
                let _ = writeln!(s, "b = {}", fmt_real(f.b));
                let _ = writeln!(s, "objective = {}", fmt_real(f.objective));
                let _ = writeln!(s, "bins_used = {}", f.bins_used);
            }
            Err(e) => {
                let _ = writeln!(s, "status = failed: {e}");
            }
        }

        let band = 3.0 / (n as f64).sqrt();
        let lags = self.max_lag.max(1) as f64;
        let _ = writeln!(s, "\n[acf]");
        let _ = writeln!(s, "max_lag = {}", self.max_lag);
        let _ = writeln!(s, "band = {}", fmt_real(band));
        let _ = writeln!(s, "within_band = {}", self.acf[1..].iter().filter(|v| v.abs() < band).count());
        let _ = writeln!(s, "mean_acf = {}", fmt_real(self.acf[1..].iter().sum::<f64>() / lags));
        let _ = writeln!(s, "abs_positive = {}", self.abs_acf[1..].iter().filter(|v| **v > 0.0).count());
        let _ = writeln!(s, "mean_abs_acf = {}", fmt_real(self.abs_acf[1..].iter().sum::<f64>() / lags));

        let _ = writeln!(s, "\n[adf]");
        write_adf(&mut s, &self.adf);

        for w in &self.adf_windows {
            let _ = writeln!(s, "\n[adf_windows {}]", w.length);
            match &w.skipped {
                Some(why) => {
                    let _ = writeln!(s, "status = skipped: {why}");
                }
                None => {
                    let _ = writeln!(s, "windows = {}", w.results.len());
                    let _ = writeln!(s, "lags = {}", w.results[0].lags);
                    let _ = writeln!(s, "reject_1pct = {}", w.reject_1pct());
                    let _ = writeln!(s, "reject_5pct = {}", w.reject_5pct());
                }
            }
        }
        s
    }

    /// Writes `report.txt` and the plot-ready tables into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        let put = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        put("report.txt", self.report_text())?;

        let mut pdf = String::from("center,density,count\n");
        for b in &self.pdf {
            let _ = writeln!(pdf, "{},{},{}", fmt_real(b.center), fmt_real(b.density), b.count);
        }
        put("pdf.csv", pdf)?;

        let mut acf = String::from("lag,acf,abs_acf\n");
        for (lag, (a, b)) in self.acf.iter().zip(&self.abs_acf).enumerate() {
            let _ = writeln!(acf, "{lag},{},{}", fmt_real(*a), fmt_real(*b));
        }
        put("acf.csv", acf)?;

        let mut qq = String::from("theoretical,empirical\n");
        for (t, e) in &self.qq {
            let _ = writeln!(qq, "{},{}", fmt_real(*t), fmt_real(*e));
        }
        put("qq.csv", qq)?;

        let mut adf = String::from("length,window,statistic,lags,reject_1pct,reject_5pct\n");
        for w in &self.adf_windows {
            for (k, r) in w.results.iter().enumerate() {
                let _ = writeln!(
                    adf,
                    "{},{k},{},{},{},{}",
                    w.length,
                    fmt_real(r.statistic),
                    r.lags,
                    r.reject_1pct,
                    r.reject_5pct
                );
            }
        }
        put("adf_windows.csv", adf)
    }
}

fn write_adf(s: &mut String, r: &AdfResult) {
    let _ = writeln!(s, "statistic = {}", fmt_real(r.statistic));
    let _ = writeln!(s, "lags = {}", r.lags);
    let _ = writeln!(s, "observations = {}", r.observations);
    let _ = writeln!(s, "reject_1pct = {}", r.reject_1pct);
    let _ = writeln!(s, "reject_5pct = {}", r.reject_5pct);
}

/// Reads a `tick,price` file (or any file whose last column is the price).
///
/// Nonpositive or unparseable prices are errors naming every offending row.
pub fn read_prices(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut prices = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cell = line.rsplit(',').next().unwrap_or("").trim();
        match cell.parse::<f64>() {
            Ok(p) if p > 0.0 && p.is_finite() => prices.push(p),
            Ok(_) => bad.push(i + 1),
            // a non-numeric first line is the header
            Err(_) if i == 0 => {}
            Err(_) => bad.push(i + 1),
        }
    }
    if !bad.is_empty() {
        let rows: Vec<String> = bad.iter().take(20).map(usize::to_string).collect();
        let more = if bad.len() > 20 { format!(" and {} more", bad.len() - 20) } else { String::new() };
        return Err(Error::Ingestion(format!(
            "{}: nonpositive or unparseable prices on rows {}{more}",
            path.display(),
            rows.join(", ")
        )));
    }
    Ok(prices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;

    fn walk(n: usize, seed: u64) -> Vec<f64> {
        let mut r = RandomSource::new(seed, 0);
        let mut p = 100.0;
        (0..n)
            .map(|_| {
                p *= (r.normal(0.0, 0.01).unwrap()).exp();
                p
            })
            .collect()
    }

    #[test]
    fn report_sections() {
        let a = analyze_prices(&walk(3001, 1), &AnalysisOptions::default()).unwrap();
        let text = a.report_text();
        for section in ["[moments]", "[q_gaussian]", "[acf]", "[adf]", "[adf_windows 150]"] {
            assert!(text.contains(section), "{section}");
        }
        assert!(text.contains("[adf_windows 15000]\nstatus = skipped"));
        let w150 = a.adf_windows.iter().find(|w| w.length == 150).unwrap();
        assert_eq!(w150.results.len(), 20);
        assert_eq!(a.acf.len(), 101);
    }

    #[test]
    fn short_series_trims_lags() {
        let a = analyze_prices(&walk(120, 2), &AnalysisOptions::default()).unwrap();
        assert_eq!(a.max_lag, 59);
    }

    #[test]
    fn constant_prices_are_degenerate() {
        let err = analyze_prices(&[50.0; 200], &AnalysisOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateSeries(_)));
    }

    #[test]
    fn bad_rows_listed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "tick,price\n0,1.5\n1,0\n2,2.0\n3,-4\n").unwrap();
        let err = read_prices(&path).unwrap_err().to_string();
        assert!(err.contains("rows 3, 5"), "{err}");
        std::fs::write(&path, "tick,price\n0,1.5\n1,2.5\n").unwrap();
        assert_eq!(read_prices(&path).unwrap(), vec![1.5, 2.5]);
    }
}
