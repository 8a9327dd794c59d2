//! Heston dynamics with compensated lognormal jumps in the forward.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::heston::{cf_heston, HestonParams};
use super::CharacteristicFunction;
use crate::error::{check, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatesParams {
    pub heston: HestonParams,
    /// Annual jump frequency.
    pub jump_intensity: f64,
    /// Mean percentage jump `k̄`; `ln(1 + k) ~ N(ln(1 + k̄) - δ²/2, δ²)`.
    pub mean_jump: f64,
    /// Standard deviation `δ` of the log jump size.
    pub jump_vol: f64,
}

impl BatesParams {
    pub fn new(heston: HestonParams, jump_intensity: f64, mean_jump: f64, jump_vol: f64) -> Result<Self> {
        let p = Self {
            heston,
            jump_intensity,
            mean_jump,
            jump_vol,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.heston.validate()?;
        check(
            self.jump_intensity >= 0.0,
            "jump_intensity",
            self.jump_intensity,
            "must be >= 0",
        )?;
        check(self.jump_vol >= 0.0, "jump_vol", self.jump_vol, "must be >= 0")?;
        check(self.mean_jump > -1.0, "mean_jump", self.mean_jump, "must be > -1")
    }

    fn log_jump_mean(&self) -> f64 {
        self.mean_jump.ln_1p() - 0.5 * self.jump_vol * self.jump_vol
    }
}

/// Heston characteristic function times the compensated jump factor
/// `exp(λT [E(e^{iuJ}) - 1 - iu k̄])`.
pub fn cf_bates(u: Complex64, p: &BatesParams, expiry: f64) -> Complex64 {
    if u == Complex64::new(0.0, 0.0) {
        return Complex64::new(1.0, 0.0);
    }
    let i = Complex64::i();
    let jump_cf = (i * u * p.log_jump_mean() - 0.5 * u * u * p.jump_vol * p.jump_vol).exp();
    let exponent = p.jump_intensity * expiry * (jump_cf - 1.0 - i * u * p.mean_jump);
    cf_heston(u, &p.heston, expiry) * exponent.exp()
}

impl CharacteristicFunction for BatesParams {
    fn cf(&self, u: Complex64, expiry: f64) -> Complex64 {
        cf_bates(u, self, expiry)
    }

    fn mean_variance(&self, expiry: f64) -> f64 {
        let m = self.log_jump_mean();
        self.heston.expected_mean_variance(expiry) + self.jump_intensity * (self.jump_vol * self.jump_vol + m * m)
    }
}
