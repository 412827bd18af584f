//! Statistics for checking simulated (or real) price series against the
//! stylized facts of financial returns.

mod acf;
mod adf;
mod normal;
mod ols;
mod pdf;
mod powerlaw;
mod qgauss;
mod returns;

pub use acf::{abs_acf, acf};
pub use adf::{adf_test, auto_lags, AdfResult, Lags, ADF_CRITICAL_1PCT, ADF_CRITICAL_5PCT};
pub use normal::{normal_cdf, normal_quantile, qq_points};
pub use ols::{ols, Design, OlsFit};
pub use pdf::{empirical_pdf, PdfBin};
pub use powerlaw::{
    fit_power_law, log_binned_histogram, relevant_avalanche_count, relevant_threshold, LogBin, PowerLawFit,
    MIN_BIN_COUNT,
};
pub use qgauss::{fit_q_gaussian, q_gaussian, QGaussianFit, Q_START_GRID};
pub use returns::{log_returns, moments, normalize, volatility, Moments, ReturnsSeries};
