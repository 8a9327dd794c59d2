//! Stochastic-volatility calibration toolkit.
//!
//! Affine characteristic functions (Heston, Bates, Schöbel-Zhu and
//! piecewise-constant Heston), Fourier vanilla pricing, FX smile quote
//! conventions, calibration strategies, mixing-weight rules, variance-swap
//! replication and a parameter store for up-front calibration workflows.

// NaN must fail validity checks, so comparisons are written negated.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod fx;
pub mod mixing;
pub mod model;
pub mod param_store;
pub mod pricing;
pub mod varswap;

pub use calibration::{CalibrationOptions, CalibrationResult, CalibrationTarget, FixSet, TenorRules, ThetaRule};
pub use error::{Error, Result};
pub use fx::{Conventions, TenorQuote};
pub use mixing::MixingCurve;
pub use model::{
    BatesParams, CharacteristicFunction, HestonParams, MarketSlice, Model, ModelKind, ParamName, PiecewiseHestonParams,
    SchobelZhuParams,
};
pub use param_store::{ParamRecord, ParamStore};
pub use pricing::{OptionKind, OptionSpec, QuadratureConfig};
pub use varswap::ReplicationConfig;
