//! Heston model with piecewise-constant variance parameters in time.
//!
//! Segment `i` applies on `(t_{i-1}, t_i]` with `t_0 = 0`; the last segment
//! extends beyond the last breakpoint. The characteristic function is built
//! by backward induction from the expiry: the affine coefficients at the end
//! of each segment become the terminal condition of the previous one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::heston::{relaxation_factor, Segment};
use super::CharacteristicFunction;
use crate::error::{check, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseHestonParams {
    pub v0: f64,
    pub breakpoints: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl PiecewiseHestonParams {
    pub fn new(v0: f64, breakpoints: Vec<f64>, segments: Vec<Segment>) -> Result<Self> {
        let p = Self {
            v0,
            breakpoints,
            segments,
        };
        p.validate()?;
        Ok(p)
    }

    /// A single segment repeated on the given grid.
    pub fn uniform(v0: f64, breakpoints: Vec<f64>, segment: Segment) -> Result<Self> {
        let n = breakpoints.len();
        Self::new(v0, breakpoints, vec![segment; n])
    }

    pub fn validate(&self) -> Result<()> {
        check(self.v0 > 0.0, "v0", self.v0, "must be > 0")?;
        if self.breakpoints.is_empty() {
            return Err(Error::Domain("piecewise Heston needs at least one segment".into()));
        }
        if self.breakpoints.len() != self.segments.len() {
            return Err(Error::Domain(format!(
                "{} breakpoints but {} segments",
                self.breakpoints.len(),
                self.segments.len()
            )));
        }
        let mut prev = 0.0;
        for &t in &self.breakpoints {
            if !(t > prev) || !t.is_finite() {
                return Err(Error::Domain(
                    "breakpoints must be positive and strictly increasing".into(),
                ));
            }
            prev = t;
        }
        self.segments.iter().try_for_each(Segment::validate)
    }

    /// Segment intervals clipped to `[0, expiry]`, in calendar order.
    fn clipped(&self, expiry: f64) -> impl Iterator<Item = (f64, f64, &Segment)> {
        let n = self.segments.len();
        (0..n).filter_map(move |i| {
            let start = if i == 0 { 0.0 } else { self.breakpoints[i - 1] };
            let end = if i + 1 == n {
                expiry
            } else {
                self.breakpoints[i].min(expiry)
            };
            (end > start).then_some((start, end, &self.segments[i]))
        })
    }
}

pub fn cf_piecewise_heston(u: Complex64, p: &PiecewiseHestonParams, expiry: f64) -> Complex64 {
    if u == Complex64::new(0.0, 0.0) {
        return Complex64::new(1.0, 0.0);
    }
    let intervals: Vec<_> = p.clipped(expiry).collect();
    let mut c = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &(start, end, seg) in intervals.iter().rev() {
        (c, d) = seg.step(u, end - start, c, d);
    }
    (c + d * p.v0).exp()
}

impl CharacteristicFunction for PiecewiseHestonParams {
    fn cf(&self, u: Complex64, expiry: f64) -> Complex64 {
        cf_piecewise_heston(u, self, expiry)
    }

    fn mean_variance(&self, expiry: f64) -> f64 {
        let mut level = self.v0;
        let mut total = 0.0;
        for (start, end, seg) in self.clipped(expiry) {
            let dt = end - start;
            let x = seg.kappa * dt;
            total += dt * (seg.theta + (level - seg.theta) * relaxation_factor(x));
            level = seg.theta + (level - seg.theta) * (-x).exp();
        }
        total / expiry
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::heston::{cf_heston, HestonParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn seg(theta: f64, kappa: f64, sigma: f64, rho: f64) -> Segment {
        Segment {
            theta,
            kappa,
            sigma,
            rho,
        }
    }

    #[test]
    fn one_segment_is_heston() {
        let h = HestonParams::new(0.03, 0.05, 1.2, 0.5, -0.4).unwrap();
        let p = PiecewiseHestonParams::uniform(0.03, vec![1.0], h.segment()).unwrap();
        for &t in &[0.3, 1.0, 4.0] {
            for &x in &[0.2, 3.0, 25.0] {
                let u = c(x, -0.5);
                assert_eq!(cf_piecewise_heston(u, &p, t), cf_heston(u, &h, t));
            }
        }
    }

    #[test]
    fn identical_segments_match_heston() {
        let h = HestonParams::new(0.03, 0.05, 1.2, 0.5, -0.4).unwrap();
        let p = PiecewiseHestonParams::uniform(0.03, vec![0.25, 0.5, 1.0, 2.0], h.segment()).unwrap();
        for &t in &[0.1, 1.0, 5.0] {
            for k in 1..200 {
                let u = c(k as f64, 0.0);
                let a = cf_piecewise_heston(u, &p, t);
                let b = cf_heston(u, &h, t);
                assert!((a - b).norm() <= 1e-10 * b.norm().max(1e-300), "t={t} u={k}");
            }
        }
    }

    /// Frozen from an independent ODE integration of the segment Riccati system.
    #[test]
    fn matches_riccati_integration() {
        let p = PiecewiseHestonParams::new(
            0.03,
            vec![0.5, 1.5, 3.0],
            vec![
                seg(0.04, 2.0, 0.3, -0.5),
                seg(0.06, 1.0, 0.6, -0.7),
                seg(0.05, 0.5, 0.4, -0.2),
            ],
        )
        .unwrap();
        let cases = [
            (1.0, c(0.951_773_642_603_058_4, -0.032_419_293_476_309_54)),
            (4.0, c(0.602_681_342_329_320_1, 0.064_978_992_292_918_74)),
            (10.0, c(0.111_316_698_313_298_88, 0.127_412_890_238_605_47)),
        ];
        for (x, expected) in cases {
            let got = cf_piecewise_heston(c(x, 0.0), &p, 2.0);
            assert!((got - expected).norm() < 1e-11, "u={x}: {got} vs {expected}");
        }
    }

    #[test]
    fn martingale_for_any_structure() {
        let p = PiecewiseHestonParams::new(
            0.02,
            vec![0.1, 0.7],
            vec![seg(0.09, 4.0, 1.1, -0.9), seg(0.01, 0.0, 0.2, 0.5)],
        )
        .unwrap();
        for &t in &[0.05, 0.5, 3.0] {
            assert!((cf_piecewise_heston(c(0.0, -1.0), &p, t) - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn mean_variance_chains_segments() {
        let p = PiecewiseHestonParams::new(
            0.04,
            vec![1.0, 2.0],
            vec![seg(0.04, 1.0, 0.0, 0.0), seg(0.09, 0.0, 0.0, 0.0)],
        )
        .unwrap();
        // flat 0.04 for one year then frozen at 0.04 (kappa = 0)
        assert!((p.mean_variance(3.0) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        let s = seg(0.04, 1.0, 0.3, 0.0);
        assert!(PiecewiseHestonParams::new(0.04, vec![], vec![]).is_err());
        assert!(PiecewiseHestonParams::new(0.04, vec![1.0, 1.0], vec![s, s]).is_err());
        assert!(PiecewiseHestonParams::new(0.04, vec![0.0], vec![s]).is_err());
        assert!(PiecewiseHestonParams::new(0.04, vec![1.0], vec![s, s]).is_err());
    }
}
