use crate::error::{Error, Result};

/// Row-major design matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Design {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidParameter("design columns differ in length".into()));
        }
        let mut d = Design::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                d.set(i, j, v);
            }
        }
        Ok(d)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// `RSS / (n - k)`.
    pub residual_variance: f64,
}

/// Least squares by Householder QR.
#[allow(clippy::needless_range_loop)]
pub fn ols(y: &[f64], x: &Design) -> Result<OlsFit> {
    let (n, k) = (x.rows, x.cols);
    if y.len() != n {
        return Err(Error::InvalidParameter(format!("{} observations for {n} design rows", y.len())));
    }
    if k == 0 || n <= k {
        return Err(Error::InvalidLength { needed: k + 1, got: n });
    }
    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..k).map(|j| (0..n).map(|i| x.get(i, j)).collect()).collect();
    let mut b = y.to_vec();
    let mut diag = vec![0.0; k];

    for j in 0..k {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Collinearity);
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v = a[j][j..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|e| e * e).sum();
        diag[j] = alpha;
        a[j][j] = alpha;
        a[j][j + 1..].iter_mut().for_each(|e| *e = 0.0);
        if vv == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(j + 1) {
            reflect(&v, vv, &mut col[j..]);
        }
        reflect(&v, vv, &mut b[j..]);
    }

    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if diag.iter().any(|d| d.abs() <= 1e-10 * scale) {
        return Err(Error::Collinearity);
    }

    let r = |i: usize, j: usize| a[j][i];
    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r(i, j) * beta[j]).sum();
        beta[i] = (b[i] - s) / r(i, i);
    }
    let rss: f64 = b[k..].iter().map(|e| e * e).sum();
    let s2 = rss / (n - k) as f64;

    // (X'X)^-1 = R^-1 R^-T; its diagonal is the squared row norms of R^-1
    let mut rinv = vec![vec![0.0; k]; k];
    for c in 0..k {
        for i in (0..=c).rev() {
            let target = if i == c { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=c).map(|j| r(i, j) * rinv[j][c]).sum();
            rinv[i][c] = (target - s) / r(i, i);
        }
    }
    let std_errors = rinv
        .iter()
        .map(|row| (row.iter().map(|e| e * e).sum::<f64>() * s2).sqrt())
        .collect();

    Ok(OlsFit {
        coefficients: beta,
        std_errors,
        residual_variance: s2,
    })
}

fn reflect(v: &[f64], vv: f64, target: &mut [f64]) {
    let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vv;
    for (t, e) in target.iter_mut().zip(v) {
        *t -= f * e;
    }
}
