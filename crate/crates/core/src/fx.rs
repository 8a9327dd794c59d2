//! FX smile quote conventions: ATM, 25-delta strangle and risk reversal
//! quotes turned into strike/volatility points.

use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};
use crate::model::MarketSlice;
use crate::pricing::{black_forward_delta, inv_norm_cdf, OptionKind};

/// Market quote triple for one tenor. Volatilities are decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenorQuote {
    pub tenor_label: String,
    pub expiry: f64,
    pub atm_vol: f64,
    /// 25-delta strangle premium over ATM.
    pub ms25: f64,
    /// 25-delta risk reversal, call vol minus put vol.
    pub rr25: f64,
}

impl TenorQuote {
    pub fn new(tenor_label: impl Into<String>, expiry: f64, atm_vol: f64, ms25: f64, rr25: f64) -> Result<Self> {
        let q = Self {
            tenor_label: tenor_label.into(),
            expiry,
            atm_vol,
            ms25,
            rr25,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.expiry > 0.0, "expiry", self.expiry, "must be > 0")?;
        check(self.atm_vol > 0.0, "atm_vol", self.atm_vol, "must be > 0")?;
        check(self.ms25.is_finite(), "ms25", self.ms25, "must be finite")?;
        check(self.rr25.is_finite(), "rr25", self.rr25, "must be finite")?;
        let wing = self.atm_vol + self.ms25 - 0.5 * self.rr25.abs();
        check(wing > 0.0, "rr25", self.rr25, "implies a non-positive wing volatility")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DeltaKind {
    /// Undiscounted forward delta `N(d1)`.
    #[default]
    Forward,
    /// Spot delta `df_foreign * N(d1)`.
    Spot { foreign_discount: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AtmKind {
    /// Delta-neutral straddle, `K = F exp(σ²T/2)`.
    #[default]
    DeltaNeutralStraddle,
    /// At-the-money forward, `K = F`.
    Forward,
}

/// Only the smile (broker) strangle is supported: the strangle quote is
/// added directly to both wing volatilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StrangleKind {
    #[default]
    Smile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Conventions {
    #[serde(default)]
    pub delta_kind: DeltaKind,
    #[serde(default)]
    pub atm_kind: AtmKind,
    #[serde(default)]
    pub strangle_kind: StrangleKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmileLabel {
    Put25,
    Atm,
    Call25,
}

impl SmileLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SmileLabel::Put25 => "25d_put",
            SmileLabel::Atm => "atm",
            SmileLabel::Call25 => "25d_call",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmilePoint {
    pub strike: f64,
    pub vol: f64,
    pub label: SmileLabel,
}

/// `(σ_25p, σ_atm, σ_25c)` with `σ_25c/p = atm + ms ± rr / 2`.
pub fn smile_vols(q: &TenorQuote) -> Result<(f64, f64, f64)> {
    let call = q.atm_vol + q.ms25 + 0.5 * q.rr25;
    let put = q.atm_vol + q.ms25 - 0.5 * q.rr25;
    if !(call > 0.0 && put > 0.0 && q.atm_vol > 0.0) {
        return Err(Error::Domain(format!(
            "tenor {}: quotes imply non-positive wing volatilities ({put}, {call})",
            q.tenor_label
        )));
    }
    Ok((put, q.atm_vol, call))
}

/// Strike at which an option of volatility `vol` has the given absolute delta.
pub fn strike_from_delta(
    slice: &MarketSlice,
    vol: f64,
    delta: f64,
    kind: OptionKind,
    conv: &Conventions,
) -> Result<f64> {
    check(vol > 0.0, "vol", vol, "must be > 0")?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta {delta} outside (0, 1)")));
    }
    let fwd_delta = match conv.delta_kind {
        DeltaKind::Forward => delta,
        DeltaKind::Spot { foreign_discount } => {
            check(
                foreign_discount > 0.0 && foreign_discount <= 1.5,
                "foreign_discount",
                foreign_discount,
                "must lie in (0, 1.5]",
            )?;
            delta / foreign_discount
        }
    };
    if fwd_delta >= 1.0 {
        return Err(Error::Domain(format!(
            "spot delta {delta} exceeds the attainable bound given the foreign discount factor"
        )));
    }
    let stdev = vol * slice.expiry.sqrt();
    let x = inv_norm_cdf(fwd_delta);
    let sign = kind.sign();
    Ok(slice.forward * (-sign * stdev * x + 0.5 * stdev * stdev).exp())
}

/// Absolute Black delta under the declared convention (inverse of
/// [`strike_from_delta`]).
pub fn delta_of_strike(slice: &MarketSlice, vol: f64, strike: f64, kind: OptionKind, conv: &Conventions) -> f64 {
    let d = black_forward_delta(slice.forward, strike, slice.expiry, vol, kind).abs();
    match conv.delta_kind {
        DeltaKind::Forward => d,
        DeltaKind::Spot { foreign_discount } => d * foreign_discount,
    }
}

pub fn atm_strike(slice: &MarketSlice, atm_vol: f64, conv: &Conventions) -> f64 {
    match conv.atm_kind {
        AtmKind::DeltaNeutralStraddle => slice.forward * (0.5 * atm_vol * atm_vol * slice.expiry).exp(),
        AtmKind::Forward => slice.forward,
    }
}

/// Put wing, ATM and call wing points, in increasing strike order.
pub fn resolve_smile(q: &TenorQuote, slice: &MarketSlice, conv: &Conventions) -> Result<[SmilePoint; 3]> {
    q.validate()?;
    let (put_vol, atm_vol, call_vol) = smile_vols(q)?;
    let put_k = strike_from_delta(slice, put_vol, 0.25, OptionKind::Put, conv)?;
    let call_k = strike_from_delta(slice, call_vol, 0.25, OptionKind::Call, conv)?;
    let atm_k = atm_strike(slice, atm_vol, conv);
    if !(put_k < atm_k && atm_k < call_k) {
        return Err(Error::Domain(format!(
            "tenor {}: resolved strikes not increasing ({put_k}, {atm_k}, {call_k})",
            q.tenor_label
        )));
    }
    Ok([
        SmilePoint {
            strike: put_k,
            vol: put_vol,
            label: SmileLabel::Put25,
        },
        SmilePoint {
            strike: atm_k,
            vol: atm_vol,
            label: SmileLabel::Atm,
        },
        SmilePoint {
            strike: call_k,
            vol: call_vol,
            label: SmileLabel::Call25,
        },
    ])
}
