//! Empirical marginal distributions given as sample matrices.

use ndarray::{Array2, ArrayView1, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// `N x d` sample matrix for one boundary distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSamples {
    data: Array2<f64>,
    label: String,
}

impl MarginalSamples {
    pub fn new(data: Array2<f64>, label: impl Into<String>) -> Result<Self> {
        let (n, d) = data.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument(format!(
                "marginal samples need N >= 1 and d >= 1, got {n}x{d}"
            )));
        }
        let label = label.into();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("marginal samples '{label}'")));
        }
        Ok(Self { data, label })
    }

    /// One-dimensional samples.
    pub fn from_values(values: &[f64], label: impl Into<String>) -> Result<Self> {
        let data = Array2::from_shape_vec((values.len(), 1), values.to_vec())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::new(data, label)
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    /// Values of one coordinate.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.column(j).to_vec()
    }

    pub fn mean(&self) -> Vec<f64> {
        self.data.mean_axis(Axis(0)).expect("non-empty").to_vec()
    }

    /// Rows `idx` in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            data: self.data.select(Axis(0), idx),
            label: self.label.clone(),
        }
    }

    /// `m` rows drawn uniformly with replacement.
    pub fn resample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Self {
        let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..self.len())).collect();
        self.select(&idx)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(MarginalSamples::new(Array2::zeros((0, 2)), "a").is_err());
        assert!(MarginalSamples::new(Array2::zeros((3, 0)), "a").is_err());
        assert!(MarginalSamples::new(array![[1.0, f64::NAN]], "a").is_err());
        assert!(MarginalSamples::new(array![[1.0, 2.0]], "a").is_ok());
    }

    #[test]
    fn mean_and_select() {
        let m = MarginalSamples::new(array![[0.0, 1.0], [2.0, 3.0]], "x").unwrap();
        assert_eq!(m.mean(), vec![1.0, 2.0]);
        let s = m.select(&[1, 1, 0]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.row(0).to_vec(), vec![2.0, 3.0]);
    }
}

/// Multivariate normal law used for presets and parametric initial laws.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: Vec<f64>,
    // lower Cholesky factor of the covariance, row-major d x d
    chol: Vec<f64>,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, cov: &[Vec<f64>]) -> Result<Self> {
        let d = mean.len();
        if d == 0 || cov.len() != d || cov.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument(format!(
                "gaussian needs a {d}x{d} covariance matching its mean"
            )));
        }
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                if (cov[i][j] - cov[j][i]).abs() > 1e-12 * (1.0 + cov[i][j].abs()) {
                    return Err(Error::InvalidArgument("covariance is not symmetric".into()));
                }
                let mut sum = cov[i][j];
                for k in 0..j {
                    sum -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::InvalidArgument(
                            "covariance is not positive definite".into(),
                        ));
                    }
                    l[i * d + i] = sum.sqrt();
                } else {
                    l[i * d + j] = sum / l[j * d + j];
                }
            }
        }
        Ok(Self { mean, chol: l })
    }

    /// Independent coordinates with the given variances.
    pub fn diagonal(mean: Vec<f64>, variances: &[f64]) -> Result<Self> {
        let d = mean.len();
        let cov: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { variances[i] } else { 0.0 }).collect())
            .collect();
        Self::new(mean, &cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
        label: impl Into<String>,
    ) -> Result<MarginalSamples> {
        let d = self.dim();
        let mut data = Array2::zeros((n, d));
        let mut z = vec![0.0; d];
        for i in 0..n {
            for v in z.iter_mut() {
                *v = rng.sample(rand_distr::StandardNormal);
            }
            for r in 0..d {
                let mut acc = self.mean[r];
                for c in 0..=r {
                    acc += self.chol[r * d + c] * z[c];
                }
                data[[i, r]] = acc;
            }
        }
        MarginalSamples::new(data, label)
    }
}
