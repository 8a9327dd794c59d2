//! Variance-swap fair strikes: closed form under Heston and static
//! replication from a smile.

use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};
use crate::fx::{resolve_smile, Conventions, TenorQuote};
use crate::model::{HestonParams, MarketSlice};
use crate::pricing::{black, OptionKind};

/// Fair variance of a Heston variance swap, `E[(1/T) ∫ v dt]`.
pub fn varswap_from_heston(p: &HestonParams, expiry: f64) -> f64 {
    p.expected_mean_variance(expiry)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Quadratic in log-moneyness through exactly three points.
    #[default]
    Parabola,
    /// Piecewise linear in log-moneyness.
    Linear,
}

/// Continuous implied volatility in strike, flat beyond the outer nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmileFunction {
    forward: f64,
    interpolation: Interpolation,
    /// `(ln(K/F), vol)` sorted by log-moneyness.
    nodes: Vec<(f64, f64)>,
}

impl SmileFunction {
    /// Parabola for three points, piecewise linear otherwise.
    pub fn from_points(forward: f64, points: &[(f64, f64)]) -> Result<Self> {
        let kind = if points.len() == 3 {
            Interpolation::Parabola
        } else {
            Interpolation::Linear
        };
        Self::with_interpolation(forward, points, kind)
    }

    pub fn with_interpolation(forward: f64, points: &[(f64, f64)], interpolation: Interpolation) -> Result<Self> {
        check(forward > 0.0, "forward", forward, "must be > 0")?;
        if points.is_empty() {
            return Err(Error::Domain("smile needs at least one point".into()));
        }
        if interpolation == Interpolation::Parabola && points.len() != 3 {
            return Err(Error::Domain(format!(
                "parabolic smile needs exactly 3 points, got {}",
                points.len()
            )));
        }
        let mut nodes = Vec::with_capacity(points.len());
        for &(k, v) in points {
            check(k > 0.0, "strike", k, "must be > 0")?;
            check(v > 0.0, "vol", v, "must be > 0")?;
            nodes.push(((k / forward).ln(), v));
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Domain("smile strikes must be distinct".into()));
        }
        Ok(Self {
            forward,
            interpolation,
            nodes,
        })
    }

    pub fn flat(forward: f64, vol: f64) -> Result<Self> {
        Self::with_interpolation(forward, &[(forward, vol)], Interpolation::Linear)
    }

    pub fn from_tenor(q: &TenorQuote, slice: &MarketSlice, conv: &Conventions) -> Result<Self> {
        let pts = resolve_smile(q, slice, conv)?;
        Self::from_points(slice.forward, &pts.map(|p| (p.strike, p.vol)))
    }

    pub fn forward(&self) -> f64 {
        self.forward
    }

    /// Volatility at log-moneyness `x = ln(K/F)`.
    pub fn vol_at(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        let (x0, v0) = self.nodes[0];
        let (xn, vn) = self.nodes[n - 1];
        if x <= x0 {
            return v0;
        }
        if x >= xn {
            return vn;
        }
        match self.interpolation {
            Interpolation::Parabola => {
                let [(a, fa), (b, fb), (c, fc)] = [self.nodes[0], self.nodes[1], self.nodes[2]];
                fa * (x - b) * (x - c) / ((a - b) * (a - c))
                    + fb * (x - a) * (x - c) / ((b - a) * (b - c))
                    + fc * (x - a) * (x - b) / ((c - a) * (c - b))
            }
            Interpolation::Linear => {
                let i = self.nodes.partition_point(|n| n.0 <= x);
                let (xa, va) = self.nodes[i - 1];
                let (xb, vb) = self.nodes[i];
                va + (vb - va) * (x - xa) / (xb - xa)
            }
        }
    }

    pub fn vol(&self, strike: f64) -> f64 {
        self.vol_at((strike / self.forward).ln())
    }

    /// Copy with every vol shifted by `dv`.
    pub fn shifted(&self, dv: f64) -> Result<Self> {
        let mut s = self.clone();
        for n in &mut s.nodes {
            n.1 += dv;
            check(n.1 > 0.0, "vol", n.1, "must be > 0 after shift")?;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationConfig {
    /// Strikes run over `[F / m, F m]`.
    pub multiplier: f64,
    /// Number of intervals; half on each side of the forward.
    pub grid_size: usize,
    pub rule: QuadratureRule,
}

impl Default for ReplicationConfig {
    fn default() -> Self {
        Self {
            multiplier: 10.0,
            grid_size: 2048,
            rule: QuadratureRule::Trapezoid,
        }
    }
}

impl ReplicationConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.multiplier > 1.0, "multiplier", self.multiplier, "must be > 1")?;
        if self.grid_size < 16 || !self.grid_size.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "grid size {} must be even and >= 16",
                self.grid_size
            )));
        }
        if self.rule == QuadratureRule::Simpson && !self.grid_size.is_multiple_of(4) {
            return Err(Error::Domain(format!(
                "Simpson rule needs a grid size divisible by 4, got {}",
                self.grid_size
            )));
        }
        Ok(())
    }
}

/// `(2/T) ∫ OTM(K) / K^2 dK` over `[F/m, F m]` with undiscounted Black
/// values, integrated in `x = ln(K/F)` so that the forward is a grid node.
pub fn replicate_varswap(smile: &SmileFunction, slice: &MarketSlice, cfg: &ReplicationConfig) -> Result<f64> {
    cfg.validate()?;
    let f = slice.forward;
    let t = slice.expiry;
    let half = cfg.grid_size / 2;
    let h = cfg.multiplier.ln() / half as f64;

    let integrand = |x: f64| -> Result<f64> {
        let vol = smile.vol_at(x);
        if !(vol > 0.0) {
            return Err(Error::Domain(format!(
                "interpolated vol {vol} at log-moneyness {x} is not positive"
            )));
        }
        let k = f * x.exp();
        let kind = if x < 0.0 { OptionKind::Put } else { OptionKind::Call };
        // OTM(K)/K^2 dK = OTM(K)/K dx
        Ok(black(f, k, t, vol, kind) / k)
    };

    let mut sum = 0.0;
    for side in [-1.0, 1.0] {
        let mut s = 0.0;
        for j in 0..=half {
            let w = match cfg.rule {
                QuadratureRule::Trapezoid => {
                    if j == 0 || j == half {
                        0.5
                    } else {
                        1.0
                    }
                }
                QuadratureRule::Simpson => {
                    if j == 0 || j == half {
                        1.0 / 3.0
                    } else if j % 2 == 1 {
                        4.0 / 3.0
                    } else {
                        2.0 / 3.0
                    }
                }
            };
            s += w * integrand(side * h * j as f64)?;
        }
        sum += s * h;
    }
    Ok(2.0 / t * sum)
}

/// Replicated fair variance per tenor, sorted by expiry.
pub fn implied_varswap_curve(
    quotes: &[(TenorQuote, MarketSlice)],
    conv: &Conventions,
    cfg: &ReplicationConfig,
) -> Result<Vec<(f64, f64)>> {
    if quotes.is_empty() {
        return Err(Error::Domain("no quotes".into()));
    }
    let mut curve = quotes
        .iter()
        .map(|(q, s)| {
            let smile = SmileFunction::from_tenor(q, s, conv)?;
            Ok((s.expiry, replicate_varswap(&smile, s, cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::{model_smile, QuadratureConfig};

    fn slice(t: f64) -> MarketSlice {
        MarketSlice::new(1.0, 1.0, t).unwrap()
    }

    #[test]
    fn flat_smile_is_sigma_squared() {
        let s = SmileFunction::flat(1.0, 0.2).unwrap();
        let v = replicate_varswap(&s, &slice(1.0), &ReplicationConfig::default()).unwrap();
        assert!((v - 0.04).abs() < 2e-5, "{v}");
        let simpson = ReplicationConfig {
            rule: QuadratureRule::Simpson,
            ..Default::default()
        };
        let v2 = replicate_varswap(&s, &slice(1.0), &simpson).unwrap();
        assert!((v2 - 0.04).abs() < 2e-5, "{v2}");
    }

    #[test]
    fn second_order_convergence_and_grid_stability() {
        let s = SmileFunction::flat(1.0, 0.2).unwrap();
        let run = |n| {
            let cfg = ReplicationConfig {
                grid_size: n,
                ..Default::default()
            };
            replicate_varswap(&s, &slice(1.0), &cfg).unwrap()
        };
        let e1 = (run(256) - 0.04).abs();
        let e2 = (run(512) - 0.04).abs();
        assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5, "{e1} {e2}");
        assert!((run(2048) - run(4096)).abs() < 1e-6);
    }

    #[test]
    fn parabola_reproduces_quotes_and_is_flat_outside() {
        let q = TenorQuote::new("1Y", 1.0, 0.1265, 0.0032, -0.0070).unwrap();
        let s = slice(1.0);
        let conv = Conventions::default();
        let sm = SmileFunction::from_tenor(&q, &s, &conv).unwrap();
        for p in resolve_smile(&q, &s, &conv).unwrap() {
            assert!((sm.vol(p.strike) - p.vol).abs() < 1e-15);
        }
        let lo = resolve_smile(&q, &s, &conv).unwrap()[0];
        assert_eq!(sm.vol(lo.strike * 0.5), lo.vol);
    }

    #[test]
    fn heston_cross_check() {
        let p = HestonParams::new(0.04, 0.04, 1.0, 0.5, -0.7).unwrap();
        let s = slice(1.0);
        let strikes: Vec<f64> = (-60..=60).map(|i| (i as f64 * 0.02).exp()).collect();
        let smile = model_smile(&p, &s, &strikes, &QuadratureConfig::default()).unwrap();
        let sm = SmileFunction::from_points(1.0, &smile).unwrap();
        let v = replicate_varswap(&sm, &s, &ReplicationConfig::default()).unwrap();
        assert!((v - varswap_from_heston(&p, 1.0)).abs() < 5e-4, "{v}");
    }

    #[test]
    fn put_call_relabeling() {
        // Calls everywhere minus intrinsic value give the same integral.
        let sm = SmileFunction::from_points(1.0, &[(0.9, 0.13), (1.0, 0.12), (1.1, 0.125)]).unwrap();
        let s = slice(0.5);
        let cfg = ReplicationConfig::default();
        let v = replicate_varswap(&sm, &s, &cfg).unwrap();
        let half = cfg.grid_size / 2;
        let h = cfg.multiplier.ln() / half as f64;
        let mut sum = 0.0;
        for j in -(half as i64)..=(half as i64) {
            let x = h * j as f64;
            let k = x.exp();
            let w = if j.unsigned_abs() as usize == half { 0.5 } else { 1.0 };
            let c = black(1.0, k, 0.5, sm.vol_at(x), OptionKind::Call) - (1.0 - k).max(0.0);
            sum += w * c / k;
        }
        let alt = 2.0 / 0.5 * sum * h;
        assert!((v - alt).abs() < 1e-12);
    }

    #[test]
    fn upward_shift_increases_variance() {
        let sm = SmileFunction::from_points(1.0, &[(0.9, 0.13), (1.0, 0.12), (1.1, 0.125)]).unwrap();
        let s = slice(2.0);
        let cfg = ReplicationConfig::default();
        let a = replicate_varswap(&sm, &s, &cfg).unwrap();
        let b = replicate_varswap(&sm.shifted(0.01).unwrap(), &s, &cfg).unwrap();
        assert!(b > a);
    }

    #[test]
    fn curve_is_sorted_and_flat_for_flat_quotes() {
        let conv = Conventions::default();
        let rows: Vec<(TenorQuote, MarketSlice)> = [2.0, 0.25, 1.0]
            .iter()
            .map(|&t| (TenorQuote::new("x", t, 0.127, 0.0, 0.0).unwrap(), slice(t)))
            .collect();
        let curve = implied_varswap_curve(&rows, &conv, &ReplicationConfig::default()).unwrap();
        assert_eq!(curve.iter().map(|c| c.0).collect::<Vec<_>>(), vec![0.25, 1.0, 2.0]);
        for (_, v) in &curve {
            assert!((v - 0.127 * 0.127).abs() < 2e-5);
        }
        assert_eq!(
            implied_varswap_curve(&rows[..1], &conv, &ReplicationConfig::default())
                .unwrap()
                .len(),
            1
        );
        assert!(implied_varswap_curve(&[], &conv, &ReplicationConfig::default()).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = [
            ReplicationConfig {
                multiplier: 1.0,
                ..Default::default()
            },
            ReplicationConfig {
                grid_size: 8,
                ..Default::default()
            },
            ReplicationConfig {
                grid_size: 18,
                rule: QuadratureRule::Simpson,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
        assert!(SmileFunction::with_interpolation(1.0, &[(1.0, 0.1)], Interpolation::Parabola).is_err());
        assert!(SmileFunction::from_points(1.0, &[(1.0, 0.1), (1.0, 0.2)]).is_err());
    }
}
