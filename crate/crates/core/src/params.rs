use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the coupling for which the exchange functionals stay bounded below.
pub const ALPHA_MAX: f64 = 4.0 / std::f64::consts::PI;

/// Physical parameters shared by every solver (units with hbar = c = m = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, lambda: f64) -> Result<Self> {
        let params = Self { alpha, beta, lambda };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and > 0, got {}",
                self.beta
            )));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and > 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Additional check for computations that contain the exchange term.
    pub fn validate_interacting(&self) -> Result<()> {
        self.validate()?;
        if self.alpha >= ALPHA_MAX {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} must be below 4/pi = {:.6}",
                self.alpha, ALPHA_MAX
            )));
        }
        Ok(())
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 1.0,
            lambda: 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(ModelParams::new(0.1, 0.0, 1.0).is_err());
        assert!(ModelParams::new(0.1, f64::INFINITY, 1.0).is_err());
        assert!(ModelParams::new(0.1, 1.0, -1.0).is_err());
    }

    #[test]
    fn interacting_bound() {
        let p = ModelParams::new(1.3, 1.0, 1.0).unwrap();
        assert!(p.validate_interacting().is_err());
        let p = ModelParams::new(1.27, 1.0, 1.0).unwrap();
        assert!(p.validate_interacting().is_ok());
    }
}
