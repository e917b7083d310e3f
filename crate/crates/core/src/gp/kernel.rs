use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `s2 exp(-|z - z'|^2 / (2 l^2))`
    #[serde(rename = "eq", alias = "exponentiated_quadratic")]
    ExponentiatedQuadratic,
    /// `s2 exp(-|z - z'| / l)`
    Exponential,
}

/// Stationary kernel on `state ⊕ time` inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub family: KernelFamily,
    pub lengthscale: f64,
    pub signal_variance: f64,
}

impl Default for Kernel {
    fn default() -> Self {
        Self {
            family: KernelFamily::Exponential,
            lengthscale: 1.0,
            signal_variance: 1.0,
        }
    }
}

impl Kernel {
    pub fn new(family: KernelFamily, lengthscale: f64) -> Result<Self> {
        let k = Self {
            family,
            lengthscale,
            signal_variance: 1.0,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn exponential(lengthscale: f64) -> Self {
        Self {
            family: KernelFamily::Exponential,
            lengthscale,
            signal_variance: 1.0,
        }
    }

    pub fn squared_exponential(lengthscale: f64) -> Self {
        Self {
            family: KernelFamily::ExponentiatedQuadratic,
            lengthscale,
            signal_variance: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lengthscale.is_finite() && self.lengthscale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kernel lengthscale must be positive, got {}",
                self.lengthscale
            )));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kernel signal variance must be positive, got {}",
                self.signal_variance
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.from_sq_dist(sq)
    }

    #[inline]
    pub fn from_sq_dist(&self, sq: f64) -> f64 {
        let l = self.lengthscale;
        match self.family {
            KernelFamily::ExponentiatedQuadratic => self.signal_variance * (-0.5 * sq / (l * l)).exp(),
            KernelFamily::Exponential => self.signal_variance * (-sq.sqrt() / l).exp(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let eq = Kernel::squared_exponential(2.0);
        let ex = Kernel::exponential(2.0);
        let a = [0.0, 0.0];
        let b = [3.0, 4.0];
        assert_eq!(eq.eval(&a, &a), 1.0);
        assert_eq!(ex.eval(&a, &a), 1.0);
        assert!((eq.eval(&a, &b) - (-25.0f64 / 8.0).exp()).abs() < 1e-15);
        assert!((ex.eval(&a, &b) - (-2.5f64).exp()).abs() < 1e-15);
        let scaled = Kernel {
            signal_variance: 3.0,
            ..ex
        };
        assert_eq!(scaled.eval(&b, &b), 3.0);
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(Kernel::new(KernelFamily::Exponential, 0.0).is_err());
        assert!(Kernel::new(KernelFamily::Exponential, f64::INFINITY).is_err());
        assert!(Kernel::new(KernelFamily::ExponentiatedQuadratic, 0.25).is_ok());
    }
}
