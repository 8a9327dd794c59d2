//! Model parameter types and characteristic functions.

mod bates;
mod catalog;
pub mod cmath;
mod heston;
mod piecewise;
mod schobel_zhu;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use bates::{cf_bates, BatesParams};
pub use catalog::{DoubleHestonParams, LognormalVolParams, ScottParams};
pub use heston::{cf_heston, expected_mean_variance, feller_ratio, HestonParams, Segment};
pub use piecewise::{cf_piecewise_heston, PiecewiseHestonParams};
pub use schobel_zhu::{cf_schobel_zhu, SchobelZhuParams};

use crate::error::{check, Error, Result};

/// Characteristic function of `ln(F_T / F_0)` under the `T`-forward measure.
pub trait CharacteristicFunction {
    fn cf(&self, u: Complex64, expiry: f64) -> Complex64;

    /// Annualized variance level of the log-forward, used to pick a
    /// Black-Scholes control variate. Any positive value is valid.
    fn mean_variance(&self, expiry: f64) -> f64;
}

impl<T: CharacteristicFunction + ?Sized> CharacteristicFunction for &T {
    fn cf(&self, u: Complex64, expiry: f64) -> Complex64 {
        (**self).cf(u, expiry)
    }

    fn mean_variance(&self, expiry: f64) -> f64 {
        (**self).mean_variance(expiry)
    }
}

/// Forward, discount factor and time to a single expiry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketSlice {
    pub forward: f64,
    pub discount: f64,
    pub expiry: f64,
}

impl MarketSlice {
    pub fn new(forward: f64, discount: f64, expiry: f64) -> Result<Self> {
        check(forward > 0.0, "forward", forward, "must be > 0")?;
        check(
            discount > 0.0 && discount <= 1.0,
            "discount",
            discount,
            "must lie in (0, 1]",
        )?;
        check(expiry > 0.0, "expiry", expiry, "must be > 0")?;
        Ok(Self {
            forward,
            discount,
            expiry,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Heston,
    Bates,
    SchobelZhu,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Heston => "heston",
            ModelKind::Bates => "bates",
            ModelKind::SchobelZhu => "schobel_zhu",
        }
    }

    pub fn param_names(self) -> &'static [ParamName] {
        use ParamName::*;
        match self {
            ModelKind::Heston | ModelKind::SchobelZhu => &[V0, Theta, Kappa, Sigma, Rho],
            ModelKind::Bates => &[V0, Theta, Kappa, Sigma, Rho, JumpIntensity, MeanJump, JumpVol],
        }
    }

    /// Open box used by the calibrator for each parameter.
    pub fn bounds(self, name: ParamName) -> (f64, f64) {
        use ParamName::*;
        match (self, name) {
            (ModelKind::SchobelZhu, V0) => (1e-3, 2.0),
            (ModelKind::SchobelZhu, Theta) => (0.0, 2.0),
            (_, V0) | (_, Theta) => (1e-6, 4.0),
            (_, Kappa) => (0.0, 50.0),
            (_, Sigma) => (1e-6, 10.0),
            (_, Rho) => (-0.999, 0.999),
            (_, JumpIntensity) => (0.0, 10.0),
            (_, MeanJump) => (-0.9, 1.0),
            (_, JumpVol) => (1e-6, 2.0),
        }
    }

    /// Whether `v0`/`theta` are variances (Heston family) or volatilities.
    pub fn variance_state(self) -> bool {
        !matches!(self, ModelKind::SchobelZhu)
    }

    /// Starting point: `v0 = theta` at the ATM level, `kappa = 2`,
    /// `sigma = 0.5`, `rho = -0.5`.
    pub fn default_guess(self, atm_vol: f64) -> Model {
        let level = if self.variance_state() {
            atm_vol * atm_vol
        } else {
            atm_vol
        };
        let heston = HestonParams {
            v0: level,
            theta: level,
            kappa: 2.0,
            sigma: 0.5,
            rho: -0.5,
        };
        match self {
            ModelKind::Heston => Model::Heston(heston),
            ModelKind::Bates => Model::Bates(BatesParams {
                heston,
                jump_intensity: 0.1,
                mean_jump: -0.05,
                jump_vol: 0.1,
            }),
            ModelKind::SchobelZhu => Model::SchobelZhu(SchobelZhuParams {
                v0: level,
                theta: level,
                kappa: 2.0,
                sigma: 0.2,
                rho: -0.5,
            }),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heston" => Ok(ModelKind::Heston),
            "bates" => Ok(ModelKind::Bates),
            "schobel_zhu" | "schobel-zhu" => Ok(ModelKind::SchobelZhu),
            other => Err(Error::Domain(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    V0,
    Theta,
    Kappa,
    Sigma,
    Rho,
    JumpIntensity,
    MeanJump,
    JumpVol,
}

impl ParamName {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::V0 => "v0",
            ParamName::Theta => "theta",
            ParamName::Kappa => "kappa",
            ParamName::Sigma => "sigma",
            ParamName::Rho => "rho",
            ParamName::JumpIntensity => "jump_intensity",
            ParamName::MeanJump => "mean_jump",
            ParamName::JumpVol => "jump_vol",
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "v0" => ParamName::V0,
            "theta" => ParamName::Theta,
            "kappa" => ParamName::Kappa,
            "sigma" => ParamName::Sigma,
            "rho" => ParamName::Rho,
            "jump_intensity" | "lambda" => ParamName::JumpIntensity,
            "mean_jump" => ParamName::MeanJump,
            "jump_vol" | "delta" => ParamName::JumpVol,
            other => return Err(Error::Domain(format!("unknown parameter `{other}`"))),
        })
    }
}

/// A priced affine model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Heston(HestonParams),
    Bates(BatesParams),
    SchobelZhu(SchobelZhuParams),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Heston(_) => ModelKind::Heston,
            Model::Bates(_) => ModelKind::Bates,
            Model::SchobelZhu(_) => ModelKind::SchobelZhu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Heston(p) => p.validate(),
            Model::Bates(p) => p.validate(),
            Model::SchobelZhu(p) => p.validate(),
        }
    }

    /// Values in the order of [`ModelKind::param_names`].
    pub fn values(&self) -> Vec<f64> {
        match self {
            Model::Heston(p) => vec![p.v0, p.theta, p.kappa, p.sigma, p.rho],
            Model::Bates(p) => {
                let h = &p.heston;
                vec![
                    h.v0,
                    h.theta,
                    h.kappa,
                    h.sigma,
                    h.rho,
                    p.jump_intensity,
                    p.mean_jump,
                    p.jump_vol,
                ]
            }
            Model::SchobelZhu(p) => vec![p.v0, p.theta, p.kappa, p.sigma, p.rho],
        }
    }

    pub fn from_values(kind: ModelKind, v: &[f64]) -> Result<Self> {
        let n = kind.param_names().len();
        if v.len() != n {
            return Err(Error::Domain(format!("{kind} takes {n} parameters, got {}", v.len())));
        }
        let heston = HestonParams {
            v0: v[0],
            theta: v[1],
            kappa: v[2],
            sigma: v[3],
            rho: v[4],
        };
        let m = match kind {
            ModelKind::Heston => Model::Heston(heston),
            ModelKind::Bates => Model::Bates(BatesParams {
                heston,
                jump_intensity: v[5],
                mean_jump: v[6],
                jump_vol: v[7],
            }),
            ModelKind::SchobelZhu => Model::SchobelZhu(SchobelZhuParams {
                v0: v[0],
                theta: v[1],
                kappa: v[2],
                sigma: v[3],
                rho: v[4],
            }),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn get(&self, name: ParamName) -> Option<f64> {
        let idx = self.kind().param_names().iter().position(|&p| p == name)?;
        Some(self.values()[idx])
    }

    /// Feller ratio for the square-root variance models.
    pub fn feller(&self) -> Option<f64> {
        match self {
            Model::Heston(p) => Some(p.feller_ratio()),
            Model::Bates(p) => Some(p.heston.feller_ratio()),
            Model::SchobelZhu(_) => None,
        }
    }
}

impl CharacteristicFunction for Model {
    fn cf(&self, u: Complex64, expiry: f64) -> Complex64 {
        match self {
            Model::Heston(p) => cf_heston(u, p, expiry),
            Model::Bates(p) => cf_bates(u, p, expiry),
            Model::SchobelZhu(p) => cf_schobel_zhu(u, p, expiry),
        }
    }

    fn mean_variance(&self, expiry: f64) -> f64 {
        match self {
            Model::Heston(p) => p.mean_variance(expiry),
            Model::Bates(p) => p.mean_variance(expiry),
            Model::SchobelZhu(p) => p.mean_variance(expiry),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip() {
        for kind in [ModelKind::Heston, ModelKind::Bates, ModelKind::SchobelZhu] {
            let m = kind.default_guess(0.2);
            let back = Model::from_values(kind, &m.values()).unwrap();
            assert_eq!(back, m);
            assert_eq!(m.get(ParamName::Kappa), Some(2.0));
        }
    }

    #[test]
    fn serde_is_tagged() {
        let m = ModelKind::Heston.default_guess(0.1);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with(r#"{"model":"heston","v0":"#), "{s}");
        let back: Model = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn names_parse() {
        for kind in [ModelKind::Heston, ModelKind::Bates] {
            for &n in kind.param_names() {
                assert_eq!(n.as_str().parse::<ParamName>().unwrap(), n);
            }
            assert_eq!(kind.as_str().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("omega".parse::<ParamName>().is_err());
    }

    #[test]
    fn slice_validation() {
        assert!(MarketSlice::new(100.0, 1.0, 1.0).is_ok());
        assert!(MarketSlice::new(100.0, 1.2, 1.0).is_err());
        assert!(MarketSlice::new(-1.0, 1.0, 1.0).is_err());
        assert!(MarketSlice::new(1.0, 1.0, 0.0).is_err());
    }
}
