//! Schöbel-Zhu model: the volatility itself follows an Ornstein-Uhlenbeck
//! process, `dv = kappa (theta - v) dt + sigma dW_v`.
//!
//! The log-forward characteristic function is `exp(A + B v0 + C v0^2 / 2)`
//! where `(A, B, C)` solve
//!
//! ```text
//! C' = -s - 2 gamma C + sigma^2 C^2
//! B' = kappa theta C - gamma B + sigma^2 B C
//! A' = kappa theta B + sigma^2 (B^2 + C) / 2
//! ```
//!
//! with `s = u^2 + iu` and `gamma = kappa - i u rho sigma`. All three have
//! closed forms in `x = exp(-d tau)`, `d = sqrt(gamma^2 + sigma^2 s)`, written
//! below without any division by `sigma`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::heston::relaxation_factor;
use super::CharacteristicFunction;
use crate::error::{check, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchobelZhuParams {
    /// Initial volatility (not variance).
    pub v0: f64,
    /// Long-run volatility.
    pub theta: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl SchobelZhuParams {
    pub fn new(v0: f64, theta: f64, kappa: f64, sigma: f64, rho: f64) -> Result<Self> {
        let p = Self {
            v0,
            theta,
            kappa,
            sigma,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.v0 > 0.0, "v0", self.v0, "must be > 0")?;
        check(self.theta >= 0.0, "theta", self.theta, "must be >= 0")?;
        check(self.kappa >= 0.0, "kappa", self.kappa, "must be >= 0")?;
        check(self.sigma >= 0.0, "sigma", self.sigma, "must be >= 0")?;
        check(self.rho.abs() < 1.0, "rho", self.rho, "must lie in (-1, 1)")
    }
}

pub fn cf_schobel_zhu(u: Complex64, p: &SchobelZhuParams, expiry: f64) -> Complex64 {
    if u == Complex64::new(0.0, 0.0) {
        return Complex64::new(1.0, 0.0);
    }
    let i = Complex64::i();
    let SchobelZhuParams {
        v0,
        theta,
        kappa,
        sigma,
        rho,
    } = *p;
    let tau = expiry;

    let s = u * u + i * u;
    let gamma = kappa - i * u * rho * sigma;
    let d = (gamma * gamma + sigma * sigma * s).sqrt();
    let x = (-d * tau).exp();
    let q = (d + gamma) + (d - gamma) * x * x;

    let c = -s * (1.0 - x * x) / q;
    let b = -kappa * theta * s * (1.0 - x) * (1.0 - x) / (d * q);
    let kt = kappa * theta;
    let drift =
        kt * kt * s / (d * d * d) * ((1.0 - x) * (d * (1.0 + x) + 2.0 * gamma * (1.0 - x)) / (2.0 * q) - 0.5 * d * tau);
    let a = drift + 0.5 * (gamma - d) * tau - 0.5 * (q / (2.0 * d)).ln();

    (a + b * v0 + 0.5 * c * v0 * v0).exp()
}

impl CharacteristicFunction for SchobelZhuParams {
    fn cf(&self, u: Complex64, expiry: f64) -> Complex64 {
        cf_schobel_zhu(u, self, expiry)
    }

    /// `E[v_t^2]` integrated in closed form over `[0, T]`, annualized.
    fn mean_variance(&self, expiry: f64) -> f64 {
        let SchobelZhuParams {
            v0,
            theta,
            kappa,
            sigma,
            ..
        } = *self;
        let t = expiry;
        // E[v_t] = theta + (v0 - theta) e^{-kt}, Var[v_t] = sigma^2 (1 - e^{-2kt}) / (2k)
        let dev = v0 - theta;
        let f1 = relaxation_factor(kappa * t);
        let f2 = relaxation_factor(2.0 * kappa * t);
        let mean_sq = theta * theta + 2.0 * theta * dev * f1 + dev * dev * f2;
        // (1/T) ∫ sigma^2 (1 - e^{-2ks}) / (2k) ds = sigma^2 T (1 - f2) / (2 k T)
        let var = if kappa * t < 1e-8 {
            sigma * sigma * t * (1.0 - kappa * t * 2.0 / 3.0) / 2.0
        } else {
            sigma * sigma * (1.0 - f2) / (2.0 * kappa)
        };
        mean_sq + var
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Values frozen from an independent high-accuracy ODE integration of the
    /// Riccati system (DOP853, rtol 1e-13).
    #[test]
    fn matches_riccati_integration() {
        let p = SchobelZhuParams::new(0.2, 0.25, 1.5, 0.3, -0.6).unwrap();
        let cases = [
            (c(1.3, 0.0), c(0.937_019_580_790_309, -0.033_935_788_584_305_01)),
            (c(5.0, 0.0), c(0.497_897_204_434_966_93, 0.083_752_715_726_321_02)),
            (c(-2.0, 0.0), c(0.863_606_220_014_390_8, 0.032_059_394_303_100_94)),
            (c(0.7, -0.5), c(0.975_646_399_458_922_7, 0.001_685_288_264_681_269_2)),
        ];
        for (u, expected) in cases {
            let got = cf_schobel_zhu(u, &p, 1.0);
            assert!((got - expected).norm() < 1e-11, "u={u}: {got} vs {expected}");
        }
    }

    #[test]
    fn martingale_and_normalization() {
        let p = SchobelZhuParams::new(0.15, 0.2, 0.8, 0.4, -0.3).unwrap();
        assert_eq!(cf_schobel_zhu(c(0.0, 0.0), &p, 3.0), c(1.0, 0.0));
        assert!((cf_schobel_zhu(c(0.0, -1.0), &p, 3.0) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn deterministic_volatility_limit() {
        // sigma -> 0 with theta = v0: constant volatility, Black-Scholes cf.
        let p = SchobelZhuParams::new(0.2, 0.2, 1.0, 1e-12, 0.3).unwrap();
        let t = 2.0;
        for &x in &[0.3, 3.0, 12.0] {
            let u = c(x, 0.0);
            let bs = (-(u * u + Complex64::i() * u) * 0.5 * 0.04 * t).exp();
            assert!((cf_schobel_zhu(u, &p, t) - bs).norm() < 1e-12);
        }
    }

    #[test]
    fn mean_variance_limits() {
        let p = SchobelZhuParams::new(0.2, 0.2, 1.0, 0.0, 0.0).unwrap();
        assert!((p.mean_variance(1.0) - 0.04).abs() < 1e-15);
        let q = SchobelZhuParams::new(0.2, 0.3, 0.0, 0.1, 0.0).unwrap();
        // kappa = 0: v_t = v0 + sigma W, E[v^2] = v0^2 + sigma^2 t; mean over [0,T]
        assert!((q.mean_variance(2.0) - (0.04 + 0.01 * 1.0)).abs() < 1e-12);
    }
}
