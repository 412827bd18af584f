use super::PdfBin;
use crate::error::{Error, Result};

/// Starting entropic indices for the deterministic restarts.
pub const Q_START_GRID: [f64; 5] = [1.1, 1.3, 1.5, 1.7, 2.0];

const MAX_ITERATIONS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QGaussianFit {
    pub q: f64,
    pub a: f64,
    pub b: f64,
    /// Sum of squared log-density residuals.
    pub objective: f64,
    pub bins_used: usize,
}

/// `A * [1 - (1 - q) B x^2]^(1 / (1 - q))`, with the Gaussian limit at `q = 1`
/// and zero where the bracket is nonpositive.
pub fn q_gaussian(x: f64, q: f64, a: f64, b: f64) -> f64 {
    if (q - 1.0).abs() < 1e-12 {
        return a * (-b * x * x).exp();
    }
    let bracket = 1.0 - (1.0 - q) * b * x * x;
    if bracket <= 0.0 {
        0.0
    } else {
        a * bracket.powf(1.0 / (1.0 - q))
    }
}

fn ln_q_gaussian(x: f64, q: f64, a: f64, b: f64) -> f64 {
    // q > 1 on the fit path, so the bracket is at least 1
    a.ln() + (1.0 + (q - 1.0) * b * x * x).ln() / (1.0 - q)
}

/// Fits `(q, A, B)` to the nonzero bins of a histogram by minimizing squared
/// residuals of log densities. Nelder-Mead from each entry of
/// [`Q_START_GRID`]; points outside `q in (1, 3)`, `A > 0`, `B > 0` are rejected.
pub fn fit_q_gaussian(pdf: &[PdfBin]) -> Result<QGaussianFit> {
    let points: Vec<(f64, f64)> = pdf
        .iter()
        .filter(|b| b.density > 0.0)
        .map(|b| (b.center, b.density.ln()))
        .collect();
    if points.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "q-Gaussian fit needs at least 8 nonzero bins, got {}",
            points.len()
        )));
    }
    let objective = |p: &[f64; 3]| -> f64 {
        let [q, a, b] = *p;
        if !(q > 1.0 && q < 3.0 && a > 0.0 && b > 0.0) {
            return f64::INFINITY;
        }
        points
            .iter()
            .map(|&(x, ln_d)| (ln_d - ln_q_gaussian(x, q, a, b)).powi(2))
            .sum()
    };

    let peak = pdf.iter().map(|b| b.density).fold(0.0, f64::max);
    let mass: f64 = pdf.iter().map(|b| b.density).sum();
    let second: f64 = pdf.iter().map(|b| b.density * b.center * b.center).sum::<f64>() / mass;
    let b0 = 1.0 / (2.0 * second.max(1e-12));

    let mut best: Option<QGaussianFit> = None;
    for &q0 in &Q_START_GRID {
        let start = [q0, peak, b0];
        let Some((p, f)) = nelder_mead(&objective, start).and_then(|(p, _)| nelder_mead(&objective, p)) else {
            continue;
        };
        if best.is_none_or(|b| f < b.objective) {
            best = Some(QGaussianFit {
                q: p[0],
                a: p[1],
                b: p[2],
                objective: f,
                bins_used: points.len(),
            });
        }
    }
    best.ok_or_else(|| Error::FitFailure("no q-Gaussian restart converged".into()))
}

/// Minimizes `f` from `start`; `None` when the iteration budget runs out.
fn nelder_mead(f: &impl Fn(&[f64; 3]) -> f64, start: [f64; 3]) -> Option<([f64; 3], f64)> {
    let mut simplex = [start; 4];
    for i in 0..3 {
        let step = if start[i] != 0.0 { 0.1 * start[i] } else { 0.05 };
        simplex[i + 1][i] += step;
    }
    let mut values = simplex.map(|p| f(&p));
    if !values[0].is_finite() {
        return None;
    }

    for _ in 0..MAX_ITERATIONS {
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);

        let spread = values[3] - values[0];
        let size = (1..4)
            .map(|i| (0..3).map(|d| (simplex[i][d] - simplex[0][d]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= 1e-14 * (1.0 + values[0].abs()) && size < 1e-10 {
            return Some((simplex[0], values[0]));
        }

        let mut centroid = [0.0; 3];
        for p in &simplex[..3] {
            for d in 0..3 {
                centroid[d] += p[d] / 3.0;
            }
        }
        let along = |t: f64| -> [f64; 3] { std::array::from_fn(|d| centroid[d] + t * (simplex[3][d] - centroid[d])) };

        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[3] = expanded;
                values[3] = fe;
            } else {
                simplex[3] = reflected;
                values[3] = fr;
            }
        } else if fr < values[2] {
            simplex[3] = reflected;
            values[3] = fr;
        } else {
            let contracted = if fr < values[3] { along(-0.5) } else { along(0.5) };
            let fc = f(&contracted);
            if fc < values[3].min(fr) {
                simplex[3] = contracted;
                values[3] = fc;
            } else {
                for i in 1..4 {
                    simplex[i] = std::array::from_fn(|d| simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]));
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    None
}
