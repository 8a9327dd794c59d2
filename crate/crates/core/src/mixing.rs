//! Mixing-weight rules between local and stochastic volatility.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};
use crate::fx::TenorQuote;

fn check_weight(lambda: f64) -> Result<()> {
    check((0.0..=1.0).contains(&lambda), "lambda", lambda, "must lie in [0, 1]")
}

/// Maximally stochastic vol-of-vol and correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxParams {
    pub sigma_max: f64,
    pub rho_max: f64,
}

impl MaxParams {
    pub fn new(sigma_max: f64, rho_max: f64) -> Result<Self> {
        check(sigma_max >= 0.0, "sigma_max", sigma_max, "must be >= 0")?;
        check(rho_max.abs() < 1.0, "rho_max", rho_max, "must lie in (-1, 1)")?;
        Ok(Self { sigma_max, rho_max })
    }
}

/// `(lambda sigma_max, lambda rho_max)`.
pub fn tataru_mix(lambda: f64, m: &MaxParams) -> Result<(f64, f64)> {
    check_weight(lambda)?;
    Ok((lambda * m.sigma_max, lambda * m.rho_max))
}

/// Strangle and risk reversal multiplied by `lambda`; ATM untouched.
pub fn clark_markdown(q: &TenorQuote, lambda: f64) -> Result<TenorQuote> {
    check_weight(lambda)?;
    Ok(TenorQuote {
        ms25: q.ms25 * lambda,
        rr25: q.rr25 * lambda,
        ..q.clone()
    })
}

/// `(1 - lambda) sigma`.
pub fn austing_effective_volvol(sigma: f64, lambda: f64) -> Result<f64> {
    check_weight(lambda)?;
    check(sigma >= 0.0, "sigma", sigma, "must be >= 0")?;
    Ok((1.0 - lambda) * sigma)
}

/// Piecewise-constant weight: `values[i]` applies on `(t_{i-1}, t_i]` with
/// `t_{-1} = 0`, and the last value continues past the last breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve", into = "RawCurve")]
pub struct MixingCurve {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawCurve {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawCurve> for MixingCurve {
    type Error = Error;

    fn try_from(r: RawCurve) -> Result<Self> {
        MixingCurve::new(r.breakpoints, r.values)
    }
}

impl From<MixingCurve> for RawCurve {
    fn from(c: MixingCurve) -> Self {
        RawCurve {
            breakpoints: c.breakpoints,
            values: c.values,
        }
    }
}

impl MixingCurve {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::Domain(format!(
                "mixing curve needs one value per breakpoint ({} breakpoints, {} values)",
                breakpoints.len(),
                values.len()
            )));
        }
        for &t in &breakpoints {
            check(t > 0.0, "breakpoint", t, "must be > 0")?;
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "mixing curve breakpoints must be strictly increasing".into(),
            ));
        }
        for &v in &values {
            check_weight(v)?;
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(lambda: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![lambda])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn mix_at(curve: &MixingCurve, expiry: f64) -> Result<f64> {
    check(expiry > 0.0, "expiry", expiry, "must be > 0")?;
    let i = curve.breakpoints.partition_point(|&t| t < expiry);
    Ok(curve.values[i.min(curve.values.len() - 1)])
}

/// `T:lambda` pairs separated by commas, e.g. `1:0.5,5:0.8`. A bare number
/// is a constant curve.
impl FromStr for MixingCurve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if !s.contains(':') {
            let v: f64 = s
                .parse()
                .map_err(|_| Error::Domain(format!("invalid mixing weight `{s}`")))?;
            return Self::constant(v);
        }
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for part in s.split(',') {
            let (t, v) = part
                .split_once(':')
                .ok_or_else(|| Error::Domain(format!("expected `T:lambda`, got `{part}`")))?;
            let parse = |x: &str| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Domain(format!("invalid number `{x}` in mixing curve")))
            };
            ts.push(parse(t)?);
            vs.push(parse(v)?);
        }
        Self::new(ts, vs)
    }
}

impl fmt::Display for MixingCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (t, v)) in self.breakpoints.iter().zip(&self.values).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}:{v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row_3m() -> TenorQuote {
        TenorQuote::new("3M", 0.249, 0.127, 0.0028, -0.0055).unwrap()
    }

    #[test]
    fn tataru_examples() {
        let m = MaxParams::new(0.4, -0.6).unwrap();
        assert_eq!(tataru_mix(0.0, &m).unwrap(), (0.0, -0.0));
        assert_eq!(tataru_mix(1.0, &m).unwrap(), (0.4, -0.6));
        assert_eq!(tataru_mix(0.5, &m).unwrap(), (0.2, -0.3));
        assert!(tataru_mix(1.1, &m).is_err());
        assert!(MaxParams::new(0.4, -1.0).is_err());
    }

    #[test]
    fn clark_examples() {
        let q = row_3m();
        assert_eq!(clark_markdown(&q, 1.0).unwrap(), q);
        let z = clark_markdown(&q, 0.0).unwrap();
        assert_eq!((z.ms25, z.rr25, z.atm_vol), (0.0, -0.0, 0.127));
        let h = clark_markdown(&q, 0.5).unwrap();
        assert_eq!((h.atm_vol, h.ms25, h.rr25), (0.127, 0.0014, -0.00275));
    }

    #[test]
    fn austing_examples() {
        assert_eq!(austing_effective_volvol(0.8, 0.0).unwrap(), 0.8);
        assert_eq!(austing_effective_volvol(0.8, 1.0).unwrap(), 0.0);
        assert!((austing_effective_volvol(0.8, 0.25).unwrap() - 0.6).abs() < 1e-15);
        assert!(austing_effective_volvol(-0.1, 0.5).is_err());
    }

    #[test]
    fn step_lookup() {
        let c = MixingCurve::constant(0.7).unwrap();
        assert_eq!(mix_at(&c, 0.01).unwrap(), 0.7);
        assert_eq!(mix_at(&c, 30.0).unwrap(), 0.7);
        let c: MixingCurve = "1:0.3,2:0.6".parse().unwrap();
        assert_eq!(mix_at(&c, 1.5).unwrap(), 0.6);
        assert_eq!(mix_at(&c, 1.0).unwrap(), 0.3);
        assert_eq!(mix_at(&c, 0.5).unwrap(), 0.3);
        assert_eq!(mix_at(&c, 2.0).unwrap(), 0.6);
        assert_eq!(mix_at(&c, 9.0).unwrap(), 0.6);
        assert!(mix_at(&c, 0.0).is_err());
    }

    #[test]
    fn curve_validation_and_text() {
        assert!(MixingCurve::new(vec![2.0, 1.0], vec![0.1, 0.2]).is_err());
        assert!(MixingCurve::new(vec![1.0], vec![1.5]).is_err());
        assert!(MixingCurve::new(vec![], vec![]).is_err());
        assert!("1:0.5,x:0.2".parse::<MixingCurve>().is_err());
        let c: MixingCurve = "1:0.5,5:0.8".parse().unwrap();
        assert_eq!(c.to_string(), "1:0.5,5:0.8");
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"breakpoints":[1.0,5.0],"values":[0.5,0.8]}"#);
        assert_eq!(serde_json::from_str::<MixingCurve>(&json).unwrap(), c);
        assert!(serde_json::from_str::<MixingCurve>(r#"{"breakpoints":[1.0],"values":[2.0]}"#).is_err());
    }

    proptest! {
        #[test]
        fn linear_in_lambda(l in 0.0f64..=1.0, s in 0.0f64..3.0, r in -0.99f64..0.99) {
            let m = MaxParams::new(s, r).unwrap();
            let (a, b) = tataru_mix(l, &m).unwrap();
            prop_assert!((a - l * s).abs() <= 1e-15 && (b - l * r).abs() <= 1e-15);
            let e = austing_effective_volvol(s, l).unwrap();
            prop_assert!((e - (1.0 - l) * s).abs() <= 1e-15);
        }

        #[test]
        fn markdown_composes(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let q = row_3m();
            let twice = clark_markdown(&clark_markdown(&q, a).unwrap(), b).unwrap();
            let once = clark_markdown(&q, a * b).unwrap();
            prop_assert_eq!(twice.atm_vol, q.atm_vol);
            prop_assert!((twice.ms25 - once.ms25).abs() <= 1e-18);
            prop_assert!((twice.rr25 - once.rr25).abs() <= 1e-18);
        }

        #[test]
        fn piecewise_constant(k in 0usize..1000) {
            let c: MixingCurve = "1:0.3,2:0.6,5:0.9".parse().unwrap();
            let edges = [0.0, 1.0, 2.0, 5.0, 8.0];
            for seg in 0..4 {
                let t = edges[seg] + (edges[seg + 1] - edges[seg]) * (k as f64 + 1.0) / 1000.0;
                let want = [0.3, 0.6, 0.9, 0.9][seg];
                prop_assert_eq!(mix_at(&c, t).unwrap(), want);
            }
        }
    }
}
