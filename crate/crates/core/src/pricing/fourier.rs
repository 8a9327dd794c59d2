//! Vanilla prices from a characteristic function.
//!
//! Single-integral (Lewis) representation along `Im(u) = -1/2` with a
//! Black-Scholes control variate:
//!
//! ```text
//! C = C_BS(s) - sqrt(F K) / pi * ∫_0^∞ Re[e^{iuk} (φ(u - i/2) - φ_BS(u - i/2))] / (u^2 + 1/4) du
//! ```
//!
//! with `k = ln(F/K)` and `s^2 T` the model's mean variance. The frequency is
//! integrated in units of `1 / (s sqrt(T))`, so the truncation is expressed
//! relative to the log-forward standard deviation and covers short and long
//! expiries alike.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::black::{black, bs_implied_vol, OptionKind, OptionSpec};
use super::quadrature::integrate;
use crate::error::{Error, Result};
use crate::model::{CharacteristicFunction, MarketSlice};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Upper limit of the scaled frequency `u * s * sqrt(T)`.
    pub truncation: f64,
    /// Absolute tolerance on the integral.
    pub tolerance: f64,
    pub max_evals: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            truncation: 200.0,
            tolerance: 1e-10,
            max_evals: 200_000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.truncation > 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::Domain("quadrature truncation and tolerance must be > 0".into()));
        }
        Ok(())
    }
}

const MIN_STDEV: f64 = 1e-4;

/// Undiscounted call values for several strikes sharing one set of
/// characteristic-function evaluations.
fn forward_calls<M>(model: &M, forward: f64, expiry: f64, strikes: &[f64], cfg: &QuadratureConfig) -> Result<Vec<f64>>
where
    M: CharacteristicFunction + ?Sized,
{
    cfg.validate()?;
    let mv = model.mean_variance(expiry);
    let stdev = if mv.is_finite() && mv > 0.0 {
        (mv * expiry).sqrt().max(MIN_STDEV)
    } else {
        0.2 * expiry.sqrt()
    };
    let cv_vol = stdev / expiry.sqrt();
    let log_m: Vec<f64> = strikes.iter().map(|&k| (forward / k).ln()).collect();
    let shift = Complex64::new(0.0, -0.5);

    let integrand = |w: f64, out: &mut [f64]| {
        let u = w / stdev;
        let phi = model.cf(Complex64::new(u, 0.0) + shift, expiry);
        let phi_bs = (-0.5 * (u * u + 0.25) * stdev * stdev).exp();
        let diff = phi - phi_bs;
        let denom = (u * u + 0.25) * stdev;
        for (o, &k) in out.iter_mut().zip(&log_m) {
            let (s, c) = (u * k).sin_cos();
            *o = (c * diff.re - s * diff.im) / denom;
        }
    };

    let breaks = scaled_breaks(cfg.truncation);
    let integral = integrate(integrand, &breaks, strikes.len(), cfg.tolerance, cfg.max_evals)?;

    let u_max = cfg.truncation / stdev;
    let tail_phi =
        model.cf(Complex64::new(u_max, -0.5), expiry).norm() + (-0.5 * (u_max * u_max + 0.25) * stdev * stdev).exp();
    let tail = tail_phi / u_max;
    if !(tail <= cfg.tolerance) {
        return Err(Error::Numerical {
            message: format!("characteristic function not decayed at truncation {}", cfg.truncation),
            residual: tail,
        });
    }
    if integral.value.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            message: "non-finite Fourier integral".into(),
            residual: f64::INFINITY,
        });
    }

    Ok(strikes
        .iter()
        .zip(&integral.value)
        .map(|(&k, &v)| {
            let call = black(forward, k, expiry, cv_vol, OptionKind::Call) - (forward * k).sqrt() / PI * v;
            // quadrature error must not produce arbitrageable values
            call.clamp((forward - k).max(0.0), forward)
        })
        .collect())
}

fn scaled_breaks(truncation: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = 0.5;
    while x < truncation {
        b.push(x);
        x *= 2.0;
    }
    b.push(truncation);
    b
}

/// Discounted prices of several options on one expiry.
pub fn cf_vanilla_prices<M>(
    model: &M,
    slice: &MarketSlice,
    options: &[OptionSpec],
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>>
where
    M: CharacteristicFunction + ?Sized,
{
    for o in options {
        if (o.expiry - slice.expiry).abs() > 1e-12 * slice.expiry {
            return Err(Error::Domain(format!(
                "option expiry {} does not match market slice expiry {}",
                o.expiry, slice.expiry
            )));
        }
    }
    let strikes: Vec<f64> = options.iter().map(|o| o.strike).collect();
    let calls = forward_calls(model, slice.forward, slice.expiry, &strikes, cfg)?;
    Ok(options
        .iter()
        .zip(calls)
        .map(|(o, c)| {
            let undiscounted = match o.kind {
                OptionKind::Call => c,
                OptionKind::Put => c - (slice.forward - o.strike),
            };
            slice.discount * undiscounted
        })
        .collect())
}

pub fn cf_vanilla_price<M>(model: &M, slice: &MarketSlice, opt: &OptionSpec, cfg: &QuadratureConfig) -> Result<f64>
where
    M: CharacteristicFunction + ?Sized,
{
    Ok(cf_vanilla_prices(model, slice, std::slice::from_ref(opt), cfg)?[0])
}

/// Implied volatilities of the model at the given strikes, each inverted from
/// its out-of-the-money option.
pub fn model_smile<M>(
    model: &M,
    slice: &MarketSlice,
    strikes: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<(f64, f64)>>
where
    M: CharacteristicFunction + ?Sized,
{
    if strikes.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::Domain("strikes must be positive".into()));
    }
    if strikes.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("strikes must be sorted".into()));
    }
    let options: Vec<OptionSpec> = strikes
        .iter()
        .map(|&k| OptionSpec {
            strike: k,
            expiry: slice.expiry,
            kind: OptionKind::out_of_the_money(slice.forward, k),
        })
        .collect();
    let prices = cf_vanilla_prices(model, slice, &options, cfg)?;
    options
        .iter()
        .zip(prices)
        .map(|(o, p)| {
            let vol = bs_implied_vol(slice, o, p.max(0.0))?;
            if vol > 0.0 && vol.is_finite() {
                Ok((o.strike, vol))
            } else {
                Err(Error::Numerical {
                    message: format!("degenerate implied volatility at strike {}", o.strike),
                    residual: p,
                })
            }
        })
        .collect()
}
