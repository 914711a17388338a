//! Ordinary least squares.
//!
//! Coefficients are obtained from a Householder QR factorization of the
//! design matrix rather than by inverting `XᵀX`. A column is declared
//! rank-deficient when its squared pivot falls below `1e-12` times the
//! largest diagonal entry of `XᵀX`, which is the same test a Cholesky
//! factorization of the normal equations would apply.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative pivot threshold for rank detection.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Row-major `n_obs × m` design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl DesignMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if cols == 0 {
            return Err(Error::usage("design matrix needs at least one column"));
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::usage("ragged design matrix rows"));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("design matrix entries must be finite"));
        }
        Ok(DesignMatrix {
            data,
            rows: rows.len(),
            cols,
        })
    }

    /// Intercept column of ones followed by the predictor values.
    pub fn with_intercept(x: &[f64]) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("predictor values must be finite"));
        }
        let data = x.iter().flat_map(|&v| [1.0, v]).collect();
        Ok(DesignMatrix {
            data,
            rows: x.len(),
            cols: 2,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.rows
    }

    pub fn n_params(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `Xᵀv`.
    pub fn transpose_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate().take(self.rows) {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.get(i, j) * vi;
            }
        }
        out
    }
}

/// Fitted regression coefficients (intercept first for intercept models).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coefficients(pub Vec<f64>);

impl Coefficients {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for Coefficients {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Least-squares coefficients minimizing `Σ (y_i − x_i·β)²`.
pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<Coefficients> {
    let (n, m) = (x.n_obs(), x.n_params());
    if y.len() != n {
        return Err(Error::usage(format!("response has {} entries, design matrix {n} rows", y.len())));
    }
    if n < m {
        return Err(Error::usage(format!("{n} observations cannot determine {m} parameters")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::usage("response values must be finite"));
    }

    let max_gram_diag = (0..m)
        .map(|j| (0..n).map(|i| x.get(i, j).powi(2)).sum::<f64>())
        .fold(0.0f64, f64::max);

    // Column-major working copy; Householder reflections applied in place.
    let mut a: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| x.get(i, j)).collect()).collect();
    let mut rhs = y.to_vec();

    for k in 0..m {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm * norm <= RANK_TOLERANCE * max_gram_diag || norm == 0.0 {
            return Err(Error::RankDeficient { pivot: k });
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|e| e * e).sum();
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(k) {
                reflect(&mut col[k..], &v, vnorm2);
            }
            reflect(&mut rhs[k..], &v, vnorm2);
        }
        a[k][k] = alpha;
    }

    // Back substitution on the upper-triangular R.
    let mut beta = vec![0.0; m];
    for k in (0..m).rev() {
        let tail: f64 = (k + 1..m).map(|j| a[j][k] * beta[j]).sum();
        beta[k] = (rhs[k] - tail) / a[k][k];
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::RankDeficient { pivot: m - 1 });
    }
    Ok(Coefficients(beta))
}

fn reflect(target: &mut [f64], v: &[f64], vnorm2: f64) {
    let dot: f64 = target.iter().zip(v).map(|(t, vi)| t * vi).sum();
    let scale = 2.0 * dot / vnorm2;
    for (t, vi) in target.iter_mut().zip(v) {
        *t -= scale * vi;
    }
}

/// `ŷ = Xβ`.
pub fn ols_predict(x: &DesignMatrix, beta: &Coefficients) -> Result<Vec<f64>> {
    if x.n_params() != beta.len() {
        return Err(Error::usage(format!(
            "design matrix has {} columns, coefficient vector {} entries",
            x.n_params(),
            beta.len()
        )));
    }
    Ok((0..x.n_obs())
        .map(|i| x.row(i).iter().zip(beta.as_slice()).map(|(a, b)| a * b).sum())
        .collect())
}

/// Sum of squared residuals.
pub fn sse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::usage(format!("length mismatch: {} vs {}", y.len(), yhat.len())));
    }
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum())
}

/// Fits `y = β₀ + β₁x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<Coefficients> {
    ols_fit(&DesignMatrix::with_intercept(x)?, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dm(rows: &[&[f64]]) -> DesignMatrix {
        DesignMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn exact_line() {
        let x = dm(&[&[1.0, 1.0], &[1.0, 2.0], &[1.0, 3.0]]);
        let b = ols_fit(&x, &[3.0, 5.0, 7.0]).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_rows_are_rank_deficient() {
        let x = dm(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(ols_fit(&x, &[1.0, 2.0]), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn identical_large_times_are_rank_deficient() {
        let x = DesignMatrix::with_intercept(&[2500.123; 9]).unwrap();
        assert!(matches!(ols_fit(&x, &[1.0; 9]), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn underdetermined_is_usage_error() {
        let x = dm(&[&[1.0, 1.0]]);
        assert!(matches!(ols_fit(&x, &[1.0]), Err(Error::Usage(_))));
        assert!(matches!(ols_fit(&x, &[1.0, 2.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn predict_examples() {
        let b = Coefficients(vec![0.0, 1.0]);
        assert_eq!(ols_predict(&dm(&[&[1.0, 5.0]]), &b).unwrap(), vec![5.0]);
        let b = Coefficients(vec![1.0, 2.0]);
        assert_eq!(ols_predict(&dm(&[&[1.0, 0.0], &[1.0, 10.0]]), &b).unwrap(), vec![1.0, 21.0]);
        let b = Coefficients(vec![4.5, 0.0]);
        let x = DesignMatrix::with_intercept(&[0.0, 3.0, 1e4]).unwrap();
        assert_eq!(ols_predict(&x, &b).unwrap(), vec![4.5; 3]);
        assert!(ols_predict(&x, &Coefficients(vec![1.0])).is_err());
    }

    #[test]
    fn sse_examples() {
        assert_eq!(sse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(sse(&[1.0, 2.0], &[2.0, 2.0]).unwrap(), 1.0);
        let y = [1.0, 4.0, -2.0];
        let yhat = [0.5, 3.0, 1.0];
        let base = sse(&y, &yhat).unwrap();
        let scaled_y: Vec<f64> = y.iter().map(|v| v * 3.0).collect();
        let scaled_h: Vec<f64> = yhat.iter().map(|v| v * 3.0).collect();
        assert!((sse(&scaled_y, &scaled_h).unwrap() - 9.0 * base).abs() < 1e-12);
        assert!(sse(&[1.0], &[]).is_err());
    }

    #[test]
    fn three_parameter_fit() {
        // y = 2 - x + 0.5 x²
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x, x * x]).collect();
        let y: Vec<f64> = xs.iter().map(|&x| 2.0 - x + 0.5 * x * x).collect();
        let b = ols_fit(&DesignMatrix::from_rows(&rows).unwrap(), &y).unwrap();
        for (got, want) in b.as_slice().iter().zip([2.0, -1.0, 0.5]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn residuals_orthogonal_to_columns(
            xs in prop::collection::vec(-50.0f64..50.0, 5..40),
            noise in prop::collection::vec(-3.0f64..3.0, 40),
        ) {
            let spread = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(spread > 1.0);
            let y: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| 0.3 - 1.7 * x + e).collect();
            let x = DesignMatrix::with_intercept(&xs).unwrap();
            let b = ols_fit(&x, &y).unwrap();
            let yhat = ols_predict(&x, &b).unwrap();
            let resid: Vec<f64> = y.iter().zip(&yhat).map(|(a, b)| a - b).collect();
            let xtr = x.transpose_mul(&resid);
            let xty = x.transpose_mul(&y);
            let scale = xty.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in xtr {
                prop_assert!(v.abs() <= 1e-8 * scale.max(1.0));
            }
        }

        #[test]
        fn recovers_generating_coefficients(
            xs in prop::collection::vec(-10.0f64..10.0, 3..30),
            b0 in -100.0f64..100.0,
            b1 in -10.0f64..10.0,
        ) {
            let spread = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(spread > 2.0);
            let y: Vec<f64> = xs.iter().map(|x| b0 + b1 * x).collect();
            let b = fit_line(&xs, &y).unwrap();
            prop_assert!((b[0] - b0).abs() <= 1e-10 * b0.abs().max(1.0));
            prop_assert!((b[1] - b1).abs() <= 1e-10 * b1.abs().max(1.0));
        }
    }
}
