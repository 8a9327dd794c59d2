//! Black (forward) pricing and implied volatility.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{check, Error, Result};
use crate::model::MarketSlice;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    /// `+1` for calls, `-1` for puts.
    pub fn sign(self) -> f64 {
        match self {
            OptionKind::Call => 1.0,
            OptionKind::Put => -1.0,
        }
    }

    /// The out-of-the-money side at `strike` for the given forward.
    pub fn out_of_the_money(forward: f64, strike: f64) -> Self {
        if strike >= forward {
            OptionKind::Call
        } else {
            OptionKind::Put
        }
    }
}

impl fmt::Display for OptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptionKind::Call => "call",
            OptionKind::Put => "put",
        })
    }
}

impl FromStr for OptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "call" | "c" => Ok(OptionKind::Call),
            "put" | "p" => Ok(OptionKind::Put),
            other => Err(Error::Domain(format!("unknown option kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub strike: f64,
    pub expiry: f64,
    pub kind: OptionKind,
}

impl OptionSpec {
    pub fn new(strike: f64, expiry: f64, kind: OptionKind) -> Result<Self> {
        check(strike > 0.0, "strike", strike, "must be > 0")?;
        check(expiry > 0.0, "expiry", expiry, "must be > 0")?;
        Ok(Self { strike, expiry, kind })
    }
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Inverse standard normal CDF, polished with one Halley step against
/// [`norm_cdf`] so that the pair round-trips to machine precision.
pub fn inv_norm_cdf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    let err = norm_cdf(x) - p;
    let pdf = norm_pdf(x);
    if pdf == 0.0 {
        return x;
    }
    let t = err / pdf;
    x - t / (1.0 + 0.5 * x * t)
}

/// Undiscounted Black value on the forward.
pub fn black(forward: f64, strike: f64, expiry: f64, vol: f64, kind: OptionKind) -> f64 {
    let w = kind.sign();
    let stdev = vol * expiry.sqrt();
    if stdev <= 0.0 {
        return (w * (forward - strike)).max(0.0);
    }
    let d1 = (forward / strike).ln() / stdev + 0.5 * stdev;
    let d2 = d1 - stdev;
    w * (forward * norm_cdf(w * d1) - strike * norm_cdf(w * d2))
}

/// Undiscounted Black vega `dV/dvol`.
pub fn black_vega(forward: f64, strike: f64, expiry: f64, vol: f64) -> f64 {
    let sqrt_t = expiry.sqrt();
    let stdev = vol * sqrt_t;
    if stdev <= 0.0 {
        return 0.0;
    }
    let d1 = (forward / strike).ln() / stdev + 0.5 * stdev;
    forward * norm_pdf(d1) * sqrt_t
}

/// Forward (undiscounted) Black delta: `N(d1)` for calls, `-N(-d1)` for puts.
pub fn black_forward_delta(forward: f64, strike: f64, expiry: f64, vol: f64, kind: OptionKind) -> f64 {
    let stdev = vol * expiry.sqrt();
    let d1 = (forward / strike).ln() / stdev + 0.5 * stdev;
    let w = kind.sign();
    w * norm_cdf(w * d1)
}

/// Discounted Black price. `vol = 0` gives the discounted intrinsic value.
pub fn bs_price(slice: &MarketSlice, opt: &OptionSpec, vol: f64) -> f64 {
    slice.discount * black(slice.forward, opt.strike, opt.expiry, vol, opt.kind)
}

/// Implied Black volatility of a discounted price.
///
/// Works on the out-of-the-money side to avoid cancellation, brackets the
/// root and runs Newton steps that fall back to bisection when they leave
/// the bracket.
pub fn bs_implied_vol(slice: &MarketSlice, opt: &OptionSpec, price: f64) -> Result<f64> {
    let (f, k, t) = (slice.forward, opt.strike, opt.expiry);
    let p = price / slice.discount;
    let intrinsic = (opt.kind.sign() * (f - k)).max(0.0);
    let upper = match opt.kind {
        OptionKind::Call => f,
        OptionKind::Put => k,
    };
    if !p.is_finite() || p < intrinsic - 1e-14 * upper {
        return Err(Error::Domain(format!(
            "price {price} below the lower bound df*({})+ = {}",
            if opt.kind == OptionKind::Call { "F-K" } else { "K-F" },
            slice.discount * intrinsic
        )));
    }
    if p >= upper {
        return Err(Error::Domain(format!(
            "price {price} at or above the upper bound df*{} = {}",
            if opt.kind == OptionKind::Call { "F" } else { "K" },
            slice.discount * upper
        )));
    }

    let otm = OptionKind::out_of_the_money(f, k);
    let target = if otm == opt.kind { p } else { p - intrinsic };
    if target <= 0.0 {
        return Ok(0.0);
    }

    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    let mut vol = (2.0 * (f / k).ln().abs() / t).sqrt().max(0.1);
    for _ in 0..200 {
        let diff = black(f, k, t, vol, otm) - target;
        if diff.abs() <= 1e-15 * target {
            return Ok(vol);
        }
        if diff > 0.0 {
            hi = vol;
        } else {
            lo = vol;
        }
        let vega = black_vega(f, k, t, vol);
        let newton = vol - diff / vega;
        let next = if vega > 0.0 && newton > lo && newton < hi {
            newton
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            2.0 * vol
        };
        if (next - vol).abs() <= 4.0 * f64::EPSILON * vol {
            return Ok(next);
        }
        vol = next;
    }
    let residual = (black(f, k, t, vol, otm) - target).abs();
    if residual <= 1e-12 * target {
        Ok(vol)
    } else {
        Err(Error::Numerical {
            message: "implied volatility did not converge".into(),
            residual,
        })
    }
}
