//! Per-tenor Heston fit to one ATM / strangle / risk-reversal triple with a
//! maturity-scaled mean reversion.

use serde::{Deserialize, Serialize};

use super::{calibrate, CalibrationOptions, CalibrationResult, CalibrationTarget, FixSet};
use crate::error::{check, Result};
use crate::fx::{Conventions, TenorQuote};
use crate::model::{HestonParams, MarketSlice, Model, ModelKind, ParamName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThetaRule {
    /// `theta` shares the free parameter of `v0`.
    #[default]
    EqualsV0,
    /// `theta` fixed at the squared ATM vol of the tenor.
    AtmVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TenorRules {
    /// `c` in `kappa = c / T`.
    pub kappa_constant: f64,
    pub theta_rule: ThetaRule,
}

impl Default for TenorRules {
    fn default() -> Self {
        Self {
            kappa_constant: 1.5,
            theta_rule: ThetaRule::EqualsV0,
        }
    }
}

impl TenorRules {
    pub fn validate(&self) -> Result<()> {
        check(
            self.kappa_constant > 0.0,
            "kappa_constant",
            self.kappa_constant,
            "must be > 0",
        )
    }

    pub fn kappa(&self, expiry: f64) -> f64 {
        self.kappa_constant / expiry
    }
}

/// The three resolved smile points of a tenor as a vol-space target.
pub fn tenor_target(q: &TenorQuote, slice: &MarketSlice, conv: &Conventions) -> Result<CalibrationTarget> {
    CalibrationTarget::from_quotes(&[(q.clone(), *slice)], conv)
}

/// Fits `(v0, sigma, rho)` of a Heston model to one tenor with `kappa = c / T`
/// and `theta` set by the rule.
pub fn calibrate_tenor(
    q: &TenorQuote,
    slice: &MarketSlice,
    rules: &TenorRules,
    conv: &Conventions,
    opts: &CalibrationOptions,
) -> Result<CalibrationResult> {
    q.validate()?;
    rules.validate()?;
    let target = tenor_target(q, slice, conv)?;
    let atm_var = q.atm_vol * q.atm_vol;
    let mut fix = FixSet::none().with(ParamName::Kappa, rules.kappa(slice.expiry));
    match rules.theta_rule {
        ThetaRule::EqualsV0 => fix.tie_theta_to_v0 = true,
        ThetaRule::AtmVariance => {
            fix.fixed.insert(ParamName::Theta, atm_var);
        }
    }
    // Start the correlation on the side of the risk reversal.
    let rho = if q.rr25 == 0.0 { 0.0 } else { 0.5 * q.rr25.signum() };
    let init = Model::Heston(HestonParams {
        v0: atm_var,
        theta: atm_var,
        kappa: rules.kappa(slice.expiry),
        sigma: 0.5,
        rho,
    });
    calibrate(&target, ModelKind::Heston, &fix, Some(&init), opts)
}
