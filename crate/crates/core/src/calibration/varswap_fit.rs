//! Fit of `(v0, theta, kappa)` to a variance-swap term structure.

use serde::{Deserialize, Serialize};

use super::{calibrate, lm, CalibrationOptions, CalibrationResult, CalibrationTarget, FixSet};
use crate::error::{Error, Result};
use crate::model::{expected_mean_variance, Model, ModelKind, ParamName};

/// Default mean reversion reported when the curve cannot identify it.
pub const UNIDENTIFIED_KAPPA: f64 = 2.0;

/// Curves whose points all lie within this distance (in variance) of their
/// mean are treated as flat. Matches the accuracy of the default replication
/// grid, whose trapezoid error at the forward kink is about `1.7e-6 / T`.
pub const FLAT_TOLERANCE: f64 = 2e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarswapMode {
    /// Hold the fitted triple fixed in the option calibration.
    Fix,
    /// Use the fitted triple as the starting point only.
    InitialGuess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarswapFit {
    pub v0: f64,
    pub theta: f64,
    pub kappa: f64,
    /// False when the curve carries no information on `kappa`.
    pub kappa_identified: bool,
    pub converged: bool,
    pub rmse: f64,
    pub residuals: Vec<f64>,
}

impl VarswapFit {
    pub fn fix_set(&self) -> FixSet {
        FixSet::none()
            .with(ParamName::V0, self.v0)
            .with(ParamName::Theta, self.theta)
            .with(ParamName::Kappa, self.kappa)
    }

    /// `base` with `v0`, `theta` and `kappa` replaced by the fit.
    pub fn apply(&self, base: &Model) -> Result<Model> {
        let kind = base.kind();
        if !kind.variance_state() {
            return Err(Error::Domain(format!("variance-swap fit does not apply to {kind}")));
        }
        let mut v = base.values();
        v[0] = self.v0;
        v[1] = self.theta;
        v[2] = self.kappa;
        Model::from_values(kind, &v)
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn to_box(x: f64, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * logistic(x)
}

fn from_box(p: f64, (lo, hi): (f64, f64)) -> f64 {
    let eps = 1e-10 * (hi - lo);
    let p = p.clamp(lo + eps, hi - eps);
    ((p - lo) / (hi - p)).ln()
}

/// Least-squares fit of the expected mean variance to `(T, fair variance)`
/// pairs. Needs at least three distinct maturities.
pub fn calibrate_varswap(curve: &[(f64, f64)]) -> Result<VarswapFit> {
    let mut ts: Vec<f64> = curve.iter().map(|c| c.0).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if ts.len() < 3 {
        return Err(Error::Domain(format!(
            "variance-swap fit needs at least three distinct maturities, got {}",
            ts.len()
        )));
    }
    for &(t, v) in curve {
        if !(t > 0.0 && v > 0.0 && t.is_finite() && v.is_finite()) {
            return Err(Error::Domain(format!("invalid curve point ({t}, {v})")));
        }
    }

    let mean = curve.iter().map(|c| c.1).sum::<f64>() / curve.len() as f64;
    if curve.iter().all(|c| (c.1 - mean).abs() <= FLAT_TOLERANCE) {
        return Ok(VarswapFit {
            v0: mean,
            theta: mean,
            kappa: UNIDENTIFIED_KAPPA,
            kappa_identified: false,
            converged: true,
            rmse: (curve.iter().map(|c| (c.1 - mean).powi(2)).sum::<f64>() / curve.len() as f64).sqrt(),
            residuals: curve.iter().map(|c| mean - c.1).collect(),
        });
    }

    let kind = ModelKind::Heston;
    let bounds = [
        kind.bounds(ParamName::V0),
        kind.bounds(ParamName::Theta),
        kind.bounds(ParamName::Kappa),
    ];
    let params = |x: &[f64]| {
        (
            to_box(x[0], bounds[0]),
            to_box(x[1], bounds[1]),
            to_box(x[2], bounds[2]),
        )
    };
    let resid = |x: &[f64]| {
        let (v0, theta, kappa) = params(x);
        Some(
            curve
                .iter()
                .map(|&(t, v)| expected_mean_variance(v0, theta, kappa, t) - v)
                .collect(),
        )
    };
    let mut by_t = curve.to_vec();
    by_t.sort_by(|a, b| a.0.total_cmp(&b.0));
    let x0 = [
        from_box(by_t[0].1, bounds[0]),
        from_box(by_t[by_t.len() - 1].1, bounds[1]),
        from_box(1.0, bounds[2]),
    ];
    let out = lm::minimize(resid, &x0, &lm::LmConfig::default()).expect("closed-form residuals are total");
    let (v0, theta, kappa) = params(&out.x);
    let identified = (v0 - theta).abs() > 1e-8 * theta;
    Ok(VarswapFit {
        v0,
        theta,
        kappa: if identified { kappa } else { UNIDENTIFIED_KAPPA },
        kappa_identified: identified,
        converged: out.converged,
        rmse: (out.cost / curve.len() as f64).sqrt(),
        residuals: out.residuals,
    })
}

/// Option calibration seeded (or constrained) by a variance-swap fit.
pub fn calibrate_with_varswap(
    target: &CalibrationTarget,
    kind: ModelKind,
    curve: &[(f64, f64)],
    mode: VarswapMode,
    opts: &CalibrationOptions,
) -> Result<(VarswapFit, CalibrationResult)> {
    let fit = calibrate_varswap(curve)?;
    let atm = fit.v0.sqrt();
    let base = kind.default_guess(atm);
    let init = fit.apply(&base)?;
    let res = match mode {
        VarswapMode::Fix => calibrate(target, kind, &fit.fix_set(), Some(&init), opts)?,
        VarswapMode::InitialGuess => calibrate(target, kind, &FixSet::none(), Some(&init), opts)?,
    };
    Ok((fit, res))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_curve_leaves_kappa_unidentified() {
        let fit = calibrate_varswap(&[(0.5, 0.04), (1.0, 0.04), (2.0, 0.04)]).unwrap();
        assert_eq!((fit.v0, fit.theta), (0.04, 0.04));
        assert!(!fit.kappa_identified);
        assert_eq!(fit.kappa, UNIDENTIFIED_KAPPA);
        let nearly = calibrate_varswap(&[(0.5, 0.040_001_7), (1.0, 0.040_000_8), (2.0, 0.040_000_4)]).unwrap();
        assert!(!nearly.kappa_identified);
        assert!((nearly.v0 - 0.04).abs() < 2e-6);
    }

    #[test]
    fn synthetic_round_trip() {
        let curve: Vec<(f64, f64)> = [0.5, 1.0, 2.0, 5.0]
            .iter()
            .map(|&t| (t, expected_mean_variance(0.04, 0.09, 1.0, t)))
            .collect();
        let fit = calibrate_varswap(&curve).unwrap();
        assert!(fit.converged && fit.kappa_identified);
        assert!((fit.v0 - 0.04).abs() < 1e-6);
        assert!((fit.theta - 0.09).abs() < 1e-6);
        assert!((fit.kappa - 1.0).abs() < 1e-6);
    }

    #[test]
    fn hump_is_a_misfit() {
        let fit = calibrate_varswap(&[(0.5, 0.04), (1.0, 0.09), (2.0, 0.05)]).unwrap();
        assert!(fit.converged);
        assert!(fit.rmse > 5e-3, "{fit:?}");
    }

    #[test]
    fn arity_is_checked() {
        let err = calibrate_varswap(&[(1.0, 0.04), (2.0, 0.05)]).unwrap_err();
        assert!(err.to_string().contains("at least three"));
        assert!(calibrate_varswap(&[(1.0, 0.04), (1.0, 0.05), (2.0, 0.05)]).is_err());
    }

    #[test]
    fn fix_set_and_initial_guess() {
        let fit = calibrate_varswap(&[(0.5, 0.04), (1.0, 0.05), (2.0, 0.06)]).unwrap();
        let fs = fit.fix_set();
        assert_eq!(fs.fixed.len(), 3);
        let m = fit.apply(&ModelKind::Heston.default_guess(0.2)).unwrap();
        assert_eq!(m.get(ParamName::Kappa), Some(fit.kappa));
        assert!(fit.apply(&ModelKind::SchobelZhu.default_guess(0.2)).is_err());
    }
}
