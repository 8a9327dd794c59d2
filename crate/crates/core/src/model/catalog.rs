//! Parameter containers for models that are described but not priced here:
//! two-factor Heston, Scott's exponential Ornstein-Uhlenbeck model and the
//! lognormal (mean-reverting SABR, beta = 1) volatility model.

use serde::{Deserialize, Serialize};

use super::heston::HestonParams;
use crate::error::{check, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleHestonParams {
    pub first: HestonParams,
    pub second: HestonParams,
}

impl DoubleHestonParams {
    pub fn validate(&self) -> Result<()> {
        self.first.validate()?;
        self.second.validate()
    }
}

/// `d ln v = kappa (theta - ln v) dt + sigma dW`. `theta` is a log-level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScottParams {
    pub v0: f64,
    pub theta: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl ScottParams {
    pub fn validate(&self) -> Result<()> {
        check(self.v0 > 0.0, "v0", self.v0, "must be > 0")?;
        check(self.kappa >= 0.0, "kappa", self.kappa, "must be >= 0")?;
        check(self.sigma >= 0.0, "sigma", self.sigma, "must be >= 0")?;
        check(self.theta.is_finite(), "theta", self.theta, "must be finite")?;
        check(self.rho.abs() < 1.0, "rho", self.rho, "must lie in (-1, 1)")
    }
}

/// `dv = kappa (theta - v) dt + sigma v dW`. Only used by the mixing rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalVolParams {
    pub v0: f64,
    pub theta: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl LognormalVolParams {
    pub fn new(v0: f64, theta: f64, kappa: f64, sigma: f64, rho: f64) -> Result<Self> {
        let p = Self {
            v0,
            theta,
            kappa,
            sigma,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.v0 > 0.0, "v0", self.v0, "must be > 0")?;
        check(self.theta >= 0.0, "theta", self.theta, "must be >= 0")?;
        check(self.kappa >= 0.0, "kappa", self.kappa, "must be >= 0")?;
        check(self.sigma >= 0.0, "sigma", self.sigma, "must be >= 0")?;
        check(self.rho.abs() < 1.0, "rho", self.rho, "must lie in (-1, 1)")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(LognormalVolParams::new(1.0, 1.0, 1.0, 0.8, -0.3).is_ok());
        assert!(LognormalVolParams::new(1.0, 1.0, 1.0, -0.1, 0.0).is_err());
        let s = ScottParams {
            v0: 0.2,
            theta: (0.2f64).ln(),
            kappa: 1.0,
            sigma: 0.5,
            rho: 0.0,
        };
        assert!(s.validate().is_ok());
    }
}
