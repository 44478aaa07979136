//! Observed pairs of noisy series and their noise covariances.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;

/// Two observed series `x` (length n) and `y` (length m) with Gaussian noise
/// covariances. The joint covariance of the stacked vector `(x; y)` is
/// `blockdiag(sigma_x, sigma_y)`.
#[derive(Clone, Debug)]
pub struct TimeSeriesPair {
    x: Vec<f64>,
    y: Vec<f64>,
    sigma_x: DMatrix<f64>,
    sigma_y: DMatrix<f64>,
    chol_x: Cholesky<f64, Dyn>,
    chol_y: Cholesky<f64, Dyn>,
}

fn check_covariance(which: &'static str, sigma: &DMatrix<f64>, len: usize) -> Result<Cholesky<f64, Dyn>> {
    if sigma.nrows() != len || sigma.ncols() != len {
        return Err(Error::Covariance {
            which,
            reason: format!("expected {len}x{len}, got {}x{}", sigma.nrows(), sigma.ncols()),
        });
    }
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::Covariance { which, reason: "non-finite entry".into() });
    }
    for i in 0..len {
        for j in (i + 1)..len {
            let (a, b) = (sigma[(i, j)], sigma[(j, i)]);
            if (a - b).abs() > SYMMETRY_TOL * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::Covariance {
                    which,
                    reason: format!("entries ({i},{j}) and ({j},{i}) differ: {a} vs {b}"),
                });
            }
        }
    }
    Cholesky::new(sigma.clone()).ok_or_else(|| Error::Covariance {
        which,
        reason: "Cholesky factorization failed".into(),
    })
}

impl TimeSeriesPair {
    pub fn new(x: Vec<f64>, y: Vec<f64>, sigma_x: DMatrix<f64>, sigma_y: DMatrix<f64>) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::InvalidInput("both series must be non-empty".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("series contain non-finite values".into()));
        }
        let chol_x = check_covariance("x", &sigma_x, x.len())?;
        let chol_y = check_covariance("y", &sigma_y, y.len())?;
        Ok(Self { x, y, sigma_x, sigma_y, chol_x, chol_y })
    }

    /// Pair with unit-variance independent noise on both series.
    pub fn with_identity(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let (n, m) = (x.len(), y.len());
        Self::new(x, y, DMatrix::identity(n, n), DMatrix::identity(m, m))
    }

    /// Pair with independent noise of the given per-series variances.
    pub fn with_variances(x: Vec<f64>, y: Vec<f64>, var_x: f64, var_y: f64) -> Result<Self> {
        let (n, m) = (x.len(), y.len());
        Self::new(
            x,
            y,
            DMatrix::identity(n, n) * var_x,
            DMatrix::identity(m, m) * var_y,
        )
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sigma_x(&self) -> &DMatrix<f64> {
        &self.sigma_x
    }

    pub fn sigma_y(&self) -> &DMatrix<f64> {
        &self.sigma_y
    }

    /// The stacked observation `(x; y)`.
    pub fn stacked(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    /// Same covariances, new observations.
    pub fn with_values(&self, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), actual: x.len() });
        }
        if y.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), actual: y.len() });
        }
        Ok(Self { x, y, ..self.clone() })
    }

    /// `Sigma v` for a stacked vector `v` of length n + m.
    pub fn sigma_mul(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if v.len() != n + self.m() {
            return Err(Error::DimensionMismatch { expected: n + self.m(), actual: v.len() });
        }
        let vx = DVector::from_column_slice(&v[..n]);
        let vy = DVector::from_column_slice(&v[n..]);
        Ok((&self.sigma_x * vx).iter().chain((&self.sigma_y * vy).iter()).copied().collect())
    }

    /// `v' Sigma v` evaluated as `|L' v|^2` through the Cholesky factors.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        let n = self.n();
        if v.len() != n + self.m() {
            return Err(Error::DimensionMismatch { expected: n + self.m(), actual: v.len() });
        }
        let vx = DVector::from_column_slice(&v[..n]);
        let vy = DVector::from_column_slice(&v[n..]);
        let lx = self.chol_x.l_dirty().lower_triangle();
        let ly = self.chol_y.l_dirty().lower_triangle();
        Ok(lx.tr_mul(&vx).norm_squared() + ly.tr_mul(&vy).norm_squared())
    }

    /// Lower Cholesky factors of `sigma_x` and `sigma_y`.
    pub fn cholesky_factors(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.chol_x.l(), self.chol_y.l())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_series() {
        assert!(TimeSeriesPair::with_identity(vec![], vec![1.0]).is_err());
        assert!(TimeSeriesPair::with_identity(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn rejects_asymmetric_covariance() {
        let sx = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.2, 1.0]);
        let err = TimeSeriesPair::new(vec![0.0, 1.0], vec![0.0], sx, DMatrix::identity(1, 1)).unwrap_err();
        assert!(matches!(err, Error::Covariance { which: "x", .. }));
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let sy = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = TimeSeriesPair::new(vec![0.0], vec![0.0, 1.0], DMatrix::identity(1, 1), sy).unwrap_err();
        assert!(matches!(err, Error::Covariance { which: "y", .. }));
    }

    #[test]
    fn quadratic_form_matches_direct_product() {
        let sx = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let sy = DMatrix::from_row_slice(1, 1, &[3.0]);
        let pair = TimeSeriesPair::new(vec![0.0, 1.0], vec![2.0], sx, sy).unwrap();
        let v = [1.0, -2.0, 0.5];
        let sv = pair.sigma_mul(&v).unwrap();
        let direct: f64 = v.iter().zip(&sv).map(|(a, b)| a * b).sum();
        assert!((pair.quadratic_form(&v).unwrap() - direct).abs() < 1e-12);
    }
}
