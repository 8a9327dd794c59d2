//! Calibration penalized towards a previous parameter set, with the penalty
//! weight chosen so that the total error doubles the unpenalized error.

use serde::{Deserialize, Serialize};

use super::{calibrate, objective, run_lm, CalibrationOptions, CalibrationResult, CalibrationTarget, FixSet, Layout};
use crate::error::Result;
use crate::model::Model;

/// Unpenalized errors below this are treated as an exact fit.
pub const ERROR_FLOOR: f64 = 1e-12;
const TARGET_RATIO: f64 = 2.0;
/// Bisection stops inside this band; the contract is 5%.
const RATIO_BAND: f64 = 0.02;
const ACCEPT_BAND: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyStatus {
    /// Total error within the band around twice the unpenalized error.
    Doubled,
    /// Unpenalized error below the floor; the unpenalized fit is returned.
    ExactFit,
    /// The previous parameters already fit within twice the unpenalized
    /// error, so they are returned unchanged.
    PriorWithinBudget,
    /// Bisection did not reach the band; the unpenalized fit is returned.
    BisectionFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenalizedResult {
    pub result: CalibrationResult,
    pub unpenalized: CalibrationResult,
    /// Penalty weight; `None` when the prior is returned unchanged and no
    /// finite weight reproduces it.
    pub weight: Option<f64>,
    pub status: PenaltyStatus,
    /// Data error plus weighted penalty at the returned parameters.
    pub total_error: f64,
    pub unpenalized_error: f64,
}

impl PenalizedResult {
    pub fn ratio(&self) -> f64 {
        self.total_error / self.unpenalized_error
    }
}

/// Euclidean distance with each component divided by its calibration box width.
pub fn normalized_distance(a: &Model, b: &Model) -> f64 {
    let kind = a.kind();
    kind.param_names()
        .iter()
        .zip(a.values().iter().zip(b.values()))
        .map(|(&n, (x, y))| {
            let (lo, hi) = kind.bounds(n);
            ((x - y) / (hi - lo)).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

fn deviations(layout: &Layout, values: &[f64], prev: &[f64]) -> Vec<f64> {
    let kind = layout.kind();
    layout
        .varying()
        .into_iter()
        .map(|i| {
            let (lo, hi) = kind.bounds(kind.param_names()[i]);
            (values[i] - prev[i]) / (hi - lo)
        })
        .collect()
}

struct Solve {
    x: Vec<f64>,
    result: CalibrationResult,
    total: f64,
}

/// Minimizes the data error plus `w |p - prev|^2` with components scaled by
/// box width, choosing `w` by bisection on `log w` so that the total error is
/// twice the unpenalized one. The unpenalized fit starts from `prev`.
pub fn calibrate_penalized(
    target: &CalibrationTarget,
    prev: &Model,
    fix: &FixSet,
    opts: &CalibrationOptions,
) -> Result<PenalizedResult> {
    prev.validate()?;
    let kind = prev.kind();
    let layout = Layout::new(kind, fix)?;
    let prev = layout.conform(prev)?;
    let prev_values = prev.values();

    let unpen = calibrate(target, kind, fix, Some(&prev), opts)?;
    let e0 = unpen.objective;
    let finish = |result: CalibrationResult, weight: Option<f64>, status: PenaltyStatus, total: f64| PenalizedResult {
        result,
        unpenalized: unpen.clone(),
        weight,
        status,
        total_error: total,
        unpenalized_error: e0,
    };

    if e0 < ERROR_FLOOR {
        return Ok(finish(unpen.clone(), Some(0.0), PenaltyStatus::ExactFit, e0));
    }
    let prev_resid = objective(target, &prev, &opts.quadrature)?;
    let prev_error: f64 = prev_resid.iter().map(|r| r * r).sum();
    if prev_error <= TARGET_RATIO * e0 {
        let at_prev = CalibrationResult::from_residuals(prev, prev_resid, 0, true);
        let weight = if prev_error <= e0 * (1.0 + 1e-9) {
            Some(0.0)
        } else {
            None
        };
        return Ok(finish(at_prev, weight, PenaltyStatus::PriorWithinBudget, prev_error));
    }

    let x_unpen = layout.coords(&unpen.params);
    let solve = |w: f64, x0: &[f64]| -> Option<Solve> {
        let sw = w.sqrt();
        let out = run_lm(target, &layout, x0, opts, |v| {
            deviations(&layout, v, &prev_values)
                .into_iter()
                .map(|d| sw * d)
                .collect()
        })?;
        let n = target.points.len();
        let data = out.residuals[..n].to_vec();
        let params = layout.params(&out.x).ok()?;
        let result = CalibrationResult::from_residuals(params, data, out.iterations, out.converged);
        Some(Solve {
            x: out.x,
            total: out.cost,
            result,
        })
    };

    // Natural scale: the weight at which the penalty of the unpenalized fit
    // equals its data error.
    let dev0: f64 = deviations(&layout, &unpen.params.values(), &prev_values)
        .iter()
        .map(|d| d * d)
        .sum();
    let mut w = if dev0 > 0.0 { e0 / dev0 } else { 1.0 };
    let mut lo: Option<(f64, Solve)> = None;
    let mut hi: Option<(f64, Solve)> = None;
    let mut warm = x_unpen.clone();
    let fallback =
        || -> Result<PenalizedResult> { Ok(finish(unpen.clone(), Some(0.0), PenaltyStatus::BisectionFailed, e0)) };

    for _ in 0..40 {
        let Some(s) = solve(w, &warm) else { return fallback() };
        warm = s.x.clone();
        let ratio = s.total / e0;
        if (ratio - TARGET_RATIO).abs() <= RATIO_BAND * TARGET_RATIO {
            return Ok(finish(s.result, Some(w), PenaltyStatus::Doubled, s.total));
        }
        if ratio < TARGET_RATIO {
            lo = Some((w, s));
            if hi.is_some() {
                break;
            }
            w *= 4.0;
        } else {
            hi = Some((w, s));
            if lo.is_some() {
                break;
            }
            w /= 4.0;
        }
    }
    let (Some(mut lo), Some(mut hi)) = (lo, hi) else {
        return fallback();
    };

    for _ in 0..60 {
        let w = (lo.0 * hi.0).sqrt();
        let warm = if (w / lo.0).ln().abs() < (hi.0 / w).ln().abs() {
            &lo.1.x
        } else {
            &hi.1.x
        };
        let Some(s) = solve(w, warm) else { break };
        let ratio = s.total / e0;
        if (ratio - TARGET_RATIO).abs() <= RATIO_BAND * TARGET_RATIO {
            return Ok(finish(s.result, Some(w), PenaltyStatus::Doubled, s.total));
        }
        if ratio < TARGET_RATIO {
            lo = (w, s);
        } else {
            hi = (w, s);
        }
        if hi.0 / lo.0 < 1.0 + 1e-12 {
            break;
        }
    }
    // Accept the closer bracket end when it lies within the contract band.
    let best = [lo, hi]
        .into_iter()
        .min_by(|a, b| {
            (a.1.total / e0 - TARGET_RATIO)
                .abs()
                .total_cmp(&(b.1.total / e0 - TARGET_RATIO).abs())
        })
        .expect("two candidates");
    if (best.1.total / e0 - TARGET_RATIO).abs() <= ACCEPT_BAND {
        return Ok(finish(
            best.1.result,
            Some(best.0),
            PenaltyStatus::Doubled,
            best.1.total,
        ));
    }
    fallback()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::TargetSpace;
    use crate::model::{HestonParams, MarketSlice};
    use crate::pricing::QuadratureConfig;

    fn heston(v0: f64, theta: f64, kappa: f64, sigma: f64, rho: f64) -> Model {
        Model::Heston(HestonParams::new(v0, theta, kappa, sigma, rho).unwrap())
    }

    fn small_surface(m: &Model) -> CalibrationTarget {
        let grid: Vec<(MarketSlice, Vec<f64>)> = [0.5, 2.0]
            .iter()
            .map(|&t| {
                (
                    MarketSlice::new(1.0, 1.0, t).unwrap(),
                    vec![0.85, 0.95, 1.0, 1.05, 1.15],
                )
            })
            .collect();
        CalibrationTarget::from_model(m, &grid, TargetSpace::Vol, &QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn doubling_rule_and_closer_to_prior() {
        let prev = heston(0.04, 0.05, 1.5, 0.6, -0.6);
        let moved = heston(0.045, 0.055, 1.7, 0.65, -0.55);
        let mut target = small_surface(&moved);
        for (i, p) in target.points.iter_mut().enumerate() {
            p.value += 1e-3 * (((i * 37) % 11) as f64 / 5.0 - 1.0);
        }
        let res = calibrate_penalized(&target, &prev, &FixSet::none(), &CalibrationOptions::default()).unwrap();
        assert_eq!(res.status, PenaltyStatus::Doubled);
        assert!((res.ratio() - 2.0).abs() <= 0.1, "{}", res.ratio());
        assert!(normalized_distance(&res.result.params, &prev) < normalized_distance(&res.unpenalized.params, &prev));
    }

    #[test]
    fn prior_at_optimum_is_returned() {
        let truth = heston(0.04, 0.05, 1.5, 0.6, -0.6);
        let mut target = small_surface(&truth);
        for (i, p) in target.points.iter_mut().enumerate() {
            p.value += 1e-3 * (((i * 37) % 11) as f64 / 5.0 - 1.0);
        }
        let opts = CalibrationOptions::default();
        let opt = calibrate(&target, truth.kind(), &FixSet::none(), Some(&truth), &opts).unwrap();
        let res = calibrate_penalized(&target, &opt.params, &FixSet::none(), &opts).unwrap();
        assert_eq!(res.status, PenaltyStatus::PriorWithinBudget);
        assert!(normalized_distance(&res.result.params, &opt.params) < 1e-6);
        assert!((res.total_error / res.unpenalized_error - 1.0).abs() < 1e-3);
    }

    #[test]
    fn exact_fit_skips_penalty() {
        let truth = heston(0.04, 0.05, 1.5, 0.6, -0.6);
        let target = small_surface(&truth);
        let prev = heston(0.05, 0.05, 1.5, 0.6, -0.6);
        let res = calibrate_penalized(&target, &prev, &FixSet::none(), &CalibrationOptions::default()).unwrap();
        assert_eq!(res.status, PenaltyStatus::ExactFit);
        assert_eq!(res.weight, Some(0.0));
        assert_eq!(res.result, res.unpenalized);
    }
}
