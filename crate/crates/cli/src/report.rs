//! JSON reports. Field order is fixed by the struct definitions and no
//! report carries a timestamp, so identical runs give identical bytes.

use serde::Serialize;
use svcal::calibration::{model_values, PenalizedResult, PenaltyStatus, VarswapFit};
use svcal::{CalibrationResult, CalibrationTarget, Model, ModelKind, OptionKind, QuadratureConfig};

use crate::error::CliResult;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub label: String,
    pub expiry: f64,
    pub strike: f64,
    pub market: f64,
    pub model: f64,
    /// Weighted `model - market`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    /// Tenor label, or `surface` for a joint fit.
    pub label: String,
    pub expiry: Option<f64>,
    pub params: Model,
    pub rmse: f64,
    pub feller: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub points: Vec<PointReport>,
}

impl FitReport {
    pub fn new(
        label: impl Into<String>,
        expiry: Option<f64>,
        target: &CalibrationTarget,
        res: &CalibrationResult,
        quad: &QuadratureConfig,
    ) -> CliResult<Self> {
        let model = model_values(target, &res.params, quad)?;
        let points = target
            .points
            .iter()
            .zip(model)
            .zip(&res.residuals)
            .map(|((p, m), &r)| PointReport {
                label: p.label.clone(),
                expiry: p.slice.expiry,
                strike: p.strike,
                market: p.value,
                model: m,
                residual: r,
            })
            .collect();
        Ok(Self {
            label: label.into(),
            expiry,
            params: res.params,
            rmse: res.rmse,
            feller: res.feller,
            iterations: res.iterations,
            converged: res.converged,
            points,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyReport {
    pub status: PenaltyStatus,
    pub weight: Option<f64>,
    pub prior: Model,
    pub unpenalized: Model,
    pub unpenalized_rmse: f64,
    pub unpenalized_error: f64,
    pub total_error: f64,
    pub ratio: f64,
}

impl PenaltyReport {
    pub fn new(prior: &Model, p: &PenalizedResult) -> Self {
        Self {
            status: p.status,
            weight: p.weight,
            prior: *prior,
            unpenalized: p.unpenalized.params,
            unpenalized_rmse: p.unpenalized.rmse,
            unpenalized_error: p.unpenalized_error,
            total_error: p.total_error,
            ratio: p.ratio(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub expiry: f64,
    pub variance: f64,
    /// `sqrt(variance)`.
    pub vol: f64,
}

impl CurvePoint {
    pub fn from_pairs(curve: &[(f64, f64)]) -> Vec<Self> {
        curve
            .iter()
            .map(|&(expiry, variance)| Self {
                expiry,
                variance,
                vol: variance.sqrt(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarswapSection {
    /// `implied` (replicated from the quotes) or `quoted` (from a curve file).
    pub source: &'static str,
    pub curve: Vec<CurvePoint>,
    pub fit: Option<VarswapFit>,
    pub misfit: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub schema: u32,
    pub command: &'static str,
    pub strategy: &'static str,
    pub model: ModelKind,
    pub quote_digest: String,
    pub mixing: Option<String>,
    pub converged: bool,
    pub results: Vec<FitReport>,
    pub penalty: Option<PenaltyReport>,
    pub varswap: Option<VarswapSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarswapReport {
    pub schema: u32,
    pub command: &'static str,
    pub quote_digest: Option<String>,
    #[serde(flatten)]
    pub section: VarswapSection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceRow {
    pub strike: f64,
    pub kind: OptionKind,
    pub price: f64,
    pub implied_vol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceReport {
    pub schema: u32,
    pub command: &'static str,
    /// Store id when parameters came from the store.
    pub record: Option<u64>,
    pub params: Model,
    pub expiry: f64,
    pub forward: f64,
    pub discount: f64,
    pub prices: Vec<PriceRow>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize infallibly");
    s.push('\n');
    s
}
