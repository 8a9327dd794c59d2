//! Least-squares calibration of affine models to vanilla quotes.

pub mod lm;
mod penalized;
mod tenor;
mod varswap_fit;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use lm::LmConfig;
pub use penalized::{calibrate_penalized, normalized_distance, PenalizedResult, PenaltyStatus};
pub use tenor::{calibrate_tenor, tenor_target, TenorRules, ThetaRule};
pub use varswap_fit::{calibrate_varswap, calibrate_with_varswap, VarswapFit, VarswapMode, FLAT_TOLERANCE};

use crate::error::{Error, Result};
use crate::fx::{resolve_smile, Conventions, TenorQuote};
use crate::model::{MarketSlice, Model, ModelKind, ParamName};
use crate::pricing::{bs_implied_vol, bs_price, cf_vanilla_prices, OptionKind, OptionSpec, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpace {
    /// Black implied volatilities.
    #[default]
    Vol,
    /// Discounted out-of-the-money option prices.
    Price,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPoint {
    pub slice: MarketSlice,
    pub strike: f64,
    /// Market value in the target's space.
    pub value: f64,
    pub weight: f64,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTarget {
    pub points: Vec<TargetPoint>,
    pub space: TargetSpace,
}

impl CalibrationTarget {
    pub fn new(points: Vec<TargetPoint>, space: TargetSpace) -> Result<Self> {
        let t = Self { points, space };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Domain("calibration target has no points".into()));
        }
        for p in &self.points {
            if !(p.weight > 0.0 && p.weight.is_finite()) {
                return Err(Error::Domain(format!(
                    "point `{}`: weight {} must be > 0",
                    p.label, p.weight
                )));
            }
            if !(p.strike > 0.0 && p.value.is_finite()) {
                return Err(Error::Domain(format!("point `{}`: invalid strike or value", p.label)));
            }
            MarketSlice::new(p.slice.forward, p.slice.discount, p.slice.expiry)?;
        }
        Ok(())
    }

    /// Three resolved smile points per tenor, unit weights, vol space.
    pub fn from_quotes(quotes: &[(TenorQuote, MarketSlice)], conv: &Conventions) -> Result<Self> {
        let mut points = Vec::with_capacity(3 * quotes.len());
        for (q, slice) in quotes {
            for sp in resolve_smile(q, slice, conv)? {
                points.push(TargetPoint {
                    slice: *slice,
                    strike: sp.strike,
                    value: sp.vol,
                    weight: 1.0,
                    label: format!("{} {}", q.tenor_label, sp.label.as_str()),
                });
            }
        }
        Self::new(points, TargetSpace::Vol)
    }

    /// Target generated by a model, useful for round-trip checks.
    pub fn from_model(
        model: &Model,
        grid: &[(MarketSlice, Vec<f64>)],
        space: TargetSpace,
        quad: &QuadratureConfig,
    ) -> Result<Self> {
        let mut points = Vec::new();
        for (slice, strikes) in grid {
            for &k in strikes {
                points.push(TargetPoint {
                    slice: *slice,
                    strike: k,
                    value: 0.0,
                    weight: 1.0,
                    label: format!("T={} K={}", slice.expiry, k),
                });
            }
        }
        let mut t = Self { points, space };
        let values = model_values(&t, model, quad)?;
        for (p, v) in t.points.iter_mut().zip(values) {
            p.value = v;
        }
        t.validate()?;
        Ok(t)
    }

    /// Copy with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut t = self.clone();
        for p in &mut t.points {
            p.weight *= factor;
        }
        t
    }

    /// Level used for the default initial guess: the market vol closest to
    /// the money on the shortest expiry.
    fn atm_level(&self) -> f64 {
        if self.space == TargetSpace::Price {
            return 0.15;
        }
        let t_min = self.points.iter().map(|p| p.slice.expiry).fold(f64::INFINITY, f64::min);
        self.points
            .iter()
            .filter(|p| p.slice.expiry == t_min)
            .min_by(|a, b| {
                let da = (a.strike / a.slice.forward).ln().abs();
                let db = (b.strike / b.slice.forward).ln().abs();
                da.total_cmp(&db)
            })
            .map(|p| p.value)
            .filter(|v| *v > 0.0)
            .unwrap_or(0.15)
    }
}

fn otm_option(p: &TargetPoint) -> OptionSpec {
    OptionSpec {
        strike: p.strike,
        expiry: p.slice.expiry,
        kind: OptionKind::out_of_the_money(p.slice.forward, p.strike),
    }
}

/// Model values of every target point in the target's space. Points on the
/// same slice share one Fourier integration.
pub fn model_values(target: &CalibrationTarget, model: &Model, quad: &QuadratureConfig) -> Result<Vec<f64>> {
    let mut groups: BTreeMap<[u64; 3], Vec<usize>> = BTreeMap::new();
    for (i, p) in target.points.iter().enumerate() {
        let key = [
            p.slice.expiry.to_bits(),
            p.slice.forward.to_bits(),
            p.slice.discount.to_bits(),
        ];
        groups.entry(key).or_default().push(i);
    }
    let mut out = vec![0.0; target.points.len()];
    for idx in groups.values() {
        let slice = target.points[idx[0]].slice;
        let options: Vec<OptionSpec> = idx.iter().map(|&i| otm_option(&target.points[i])).collect();
        let prices = cf_vanilla_prices(model, &slice, &options, quad)?;
        for ((&i, o), price) in idx.iter().zip(&options).zip(prices) {
            out[i] = match target.space {
                TargetSpace::Price => price,
                TargetSpace::Vol => bs_implied_vol(&slice, o, price.max(0.0))?,
            };
        }
    }
    Ok(out)
}

/// Weighted residuals `w_i (model_i - market_i)`.
pub fn objective(target: &CalibrationTarget, model: &Model, quad: &QuadratureConfig) -> Result<Vec<f64>> {
    let values = model_values(target, model, quad)?;
    Ok(target
        .points
        .iter()
        .zip(values)
        .map(|(p, v)| p.weight * (v - p.value))
        .collect())
}

/// Market value of a point converted to the other space at its own vol.
pub fn point_price(p: &TargetPoint, vol: f64) -> f64 {
    bs_price(&p.slice, &otm_option(p), vol)
}

/// Parameters held fixed during a calibration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FixSet {
    #[serde(default)]
    pub fixed: BTreeMap<ParamName, f64>,
    /// When set, `v0` is fixed at this 1M ATM vol squared (the vol itself for
    /// models whose state is a volatility).
    #[serde(default)]
    pub v0_from_atm_1m: Option<f64>,
    /// Calibrate `theta` and `v0` as one shared parameter.
    #[serde(default)]
    pub tie_theta_to_v0: bool,
}

impl FixSet {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: ParamName, value: f64) -> Self {
        self.fixed.insert(name, value);
        self
    }

    fn resolved(&self, kind: ModelKind) -> Result<BTreeMap<ParamName, f64>> {
        let mut fixed = self.fixed.clone();
        for name in fixed.keys() {
            if !kind.param_names().contains(name) {
                return Err(Error::Domain(format!("{kind} has no parameter `{name}`")));
            }
        }
        if let Some(atm) = self.v0_from_atm_1m {
            if !(atm > 0.0 && atm.is_finite()) {
                return Err(Error::Domain(format!("1M ATM vol {atm} must be > 0")));
            }
            let v0 = if kind.variance_state() { atm * atm } else { atm };
            fixed.insert(ParamName::V0, v0);
        }
        if self.tie_theta_to_v0 && fixed.contains_key(&ParamName::Theta) {
            return Err(Error::Domain("theta cannot be both fixed and tied to v0".into()));
        }
        Ok(fixed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub lm: LmConfig,
    pub quadrature: QuadratureConfig,
    /// Extra perturbed starts tried when the first run does not converge.
    pub restarts: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            lm: LmConfig::default(),
            quadrature: QuadratureConfig::default(),
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: Model,
    pub rmse: f64,
    pub iterations: usize,
    pub converged: bool,
    pub feller: Option<f64>,
    pub residuals: Vec<f64>,
    /// Sum of squared weighted residuals.
    pub objective: f64,
}

impl CalibrationResult {
    fn from_residuals(params: Model, residuals: Vec<f64>, iterations: usize, converged: bool) -> Self {
        let objective: f64 = residuals.iter().map(|r| r * r).sum();
        Self {
            params,
            rmse: (objective / residuals.len() as f64).sqrt(),
            iterations,
            converged,
            feller: params.feller(),
            residuals,
            objective,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Free(usize),
    Fixed(f64),
    /// Copies the value of another parameter slot.
    Tied(usize),
}

/// Maps unconstrained optimizer coordinates to admissible parameters through
/// a logistic transform onto each parameter's box.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    kind: ModelKind,
    slots: Vec<Slot>,
    bounds: Vec<(f64, f64)>,
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Layout {
    pub(crate) fn new(kind: ModelKind, fix: &FixSet) -> Result<Self> {
        let fixed = fix.resolved(kind)?;
        let names = kind.param_names();
        let mut slots = Vec::with_capacity(names.len());
        let mut bounds = Vec::new();
        for &name in names {
            let slot = if let Some(&v) = fixed.get(&name) {
                Slot::Fixed(v)
            } else if name == ParamName::Theta && fix.tie_theta_to_v0 {
                Slot::Tied(0)
            } else {
                bounds.push(kind.bounds(name));
                Slot::Free(bounds.len() - 1)
            };
            slots.push(slot);
        }
        if bounds.is_empty() {
            return Err(Error::Domain("fix set leaves no free parameter".into()));
        }
        Ok(Self { kind, slots, bounds })
    }

    pub(crate) fn n_free(&self) -> usize {
        self.bounds.len()
    }

    pub(crate) fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Indices into the full parameter vector that are not fixed.
    pub(crate) fn varying(&self) -> Vec<usize> {
        (0..self.slots.len())
            .filter(|&i| !matches!(self.slots[i], Slot::Fixed(_)))
            .collect()
    }

    pub(crate) fn values(&self, x: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .slots
            .iter()
            .map(|s| match *s {
                Slot::Free(j) => {
                    let (lo, hi) = self.bounds[j];
                    lo + (hi - lo) * logistic(x[j])
                }
                Slot::Fixed(c) => c,
                Slot::Tied(_) => f64::NAN,
            })
            .collect();
        for i in 0..v.len() {
            if let Slot::Tied(src) = self.slots[i] {
                v[i] = v[src];
            }
        }
        v
    }

    pub(crate) fn params(&self, x: &[f64]) -> Result<Model> {
        Model::from_values(self.kind, &self.values(x))
    }

    /// Inverse transform; values on or outside a bound are pulled just inside.
    pub(crate) fn coords(&self, m: &Model) -> Vec<f64> {
        let v = m.values();
        let mut x = vec![0.0; self.n_free()];
        for (i, s) in self.slots.iter().enumerate() {
            if let Slot::Free(j) = *s {
                let (lo, hi) = self.bounds[j];
                let eps = 1e-10 * (hi - lo);
                let p = v[i].clamp(lo + eps, hi - eps);
                x[j] = ((p - lo) / (hi - p)).ln();
            }
        }
        x
    }

    /// Model with fixed and tied values imposed on `m`.
    pub(crate) fn conform(&self, m: &Model) -> Result<Model> {
        let mut v = m.values();
        for (i, s) in self.slots.iter().enumerate() {
            match *s {
                Slot::Fixed(c) => v[i] = c,
                Slot::Tied(src) => v[i] = v[src],
                Slot::Free(_) => {}
            }
        }
        Model::from_values(self.kind, &v)
    }
}

/// Runs the optimizer with optional extra residuals appended by `extra`.
pub(crate) fn run_lm<E>(
    target: &CalibrationTarget,
    layout: &Layout,
    x0: &[f64],
    opts: &CalibrationOptions,
    extra: E,
) -> Option<lm::LmOutcome>
where
    E: Fn(&[f64]) -> Vec<f64>,
{
    let f = |x: &[f64]| {
        let m = layout.params(x).ok()?;
        let mut r = objective(target, &m, &opts.quadrature).ok()?;
        r.extend(extra(&layout.values(x)));
        Some(r)
    };
    lm::minimize(f, x0, &opts.lm)
}

/// Deterministic perturbations of a start point in optimizer coordinates.
pub(crate) fn perturbed(x0: &[f64], k: usize) -> Vec<f64> {
    x0.iter()
        .enumerate()
        .map(|(i, &x)| {
            let sign = if (i + k).is_multiple_of(2) { 1.0 } else { -1.0 };
            x + sign * 0.6 * k as f64
        })
        .collect()
}

/// Full calibration of `kind` to `target`.
///
/// Starts from `init` (or the default guess at the target's ATM level) with
/// fixed and tied values imposed. If the run does not converge, up to
/// `opts.restarts` perturbed starts are tried and the best result returned.
pub fn calibrate(
    target: &CalibrationTarget,
    kind: ModelKind,
    fix: &FixSet,
    init: Option<&Model>,
    opts: &CalibrationOptions,
) -> Result<CalibrationResult> {
    target.validate()?;
    let layout = Layout::new(kind, fix)?;
    if layout.n_free() > target.points.len() {
        return Err(Error::Domain(format!(
            "{} free parameters but only {} target points",
            layout.n_free(),
            target.points.len()
        )));
    }
    let start = match init {
        Some(m) if m.kind() != kind => {
            return Err(Error::Domain(format!(
                "initial guess is {} but calibrating {kind}",
                m.kind()
            )));
        }
        Some(m) => *m,
        None => kind.default_guess(target.atm_level()),
    };
    let start = layout.conform(&start)?;
    let x0 = layout.coords(&start);

    let mut best: Option<(lm::LmOutcome, usize)> = None;
    let mut total_iterations = 0;
    for k in 0..=opts.restarts {
        let xs = if k == 0 { x0.clone() } else { perturbed(&x0, k) };
        let Some(out) = run_lm(target, &layout, &xs, opts, |_| Vec::new()) else {
            continue;
        };
        total_iterations += out.iterations;
        let better = match &best {
            None => true,
            Some((b, _)) => (out.converged && !b.converged) || (out.converged == b.converged && out.cost < b.cost),
        };
        if better {
            best = Some((out, total_iterations));
        }
        if best.as_ref().is_some_and(|(b, _)| b.converged) {
            break;
        }
    }
    let Some((out, iterations)) = best else {
        return Err(Error::Numerical {
            message: "objective could not be evaluated at any start point".into(),
            residual: f64::INFINITY,
        });
    };
    let params = layout.params(&out.x)?;
    Ok(CalibrationResult::from_residuals(
        params,
        out.residuals,
        iterations,
        out.converged,
    ))
}
