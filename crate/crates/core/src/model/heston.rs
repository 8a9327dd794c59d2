//! Heston stochastic variance model.
//!
//! The characteristic function uses the rotation-count-free formulation
//! (Albrecher et al., "little Heston trap"). The Riccati step is written for a
//! general terminal condition so that the piecewise-constant model can chain
//! segments through the same code.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cmath::{ln_1p, one_minus_exp_neg_over};
use super::CharacteristicFunction;
use crate::error::{check, Result};

/// Below this vol-of-variance the variance path is treated as deterministic.
pub(crate) const DETERMINISTIC_SIGMA: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub v0: f64,
    pub theta: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl HestonParams {
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
        check(self.theta > 0.0, "theta", self.theta, "must be > 0")?;
        check(self.kappa >= 0.0, "kappa", self.kappa, "must be >= 0")?;
        check(self.sigma >= 0.0, "sigma", self.sigma, "must be >= 0")?;
        check(self.rho.abs() < 1.0, "rho", self.rho, "must lie in (-1, 1)")
    }

    /// Feller ratio `2 kappa theta / sigma^2`; infinite when `sigma == 0`.
    pub fn feller_ratio(&self) -> f64 {
        feller_ratio(self.kappa, self.theta, self.sigma)
    }

    /// Mean of the integrated variance over `[0, expiry]`, annualized.
    pub fn expected_mean_variance(&self, expiry: f64) -> f64 {
        expected_mean_variance(self.v0, self.theta, self.kappa, expiry)
    }

    pub(crate) fn segment(&self) -> Segment {
        Segment {
            theta: self.theta,
            kappa: self.kappa,
            sigma: self.sigma,
            rho: self.rho,
        }
    }
}

/// `2 kappa theta / sigma^2`. A zero vol-of-variance returns `+inf`: the
/// condition then holds trivially.
pub fn feller_ratio(kappa: f64, theta: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return f64::INFINITY;
    }
    2.0 * kappa * theta / (sigma * sigma)
}

/// `theta + (v0 - theta) (1 - exp(-kappa T)) / (kappa T)`, continuous at `kappa = 0`.
pub fn expected_mean_variance(v0: f64, theta: f64, kappa: f64, expiry: f64) -> f64 {
    theta + (v0 - theta) * relaxation_factor(kappa * expiry)
}

/// `(1 - exp(-x)) / x` with its limit 1 at `x = 0`.
pub(crate) fn relaxation_factor(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Heston characteristic function of `ln(F_T / F_0)`.
pub fn cf_heston(u: Complex64, p: &HestonParams, expiry: f64) -> Complex64 {
    if u == Complex64::new(0.0, 0.0) {
        return Complex64::new(1.0, 0.0);
    }
    let (c, d) = p
        .segment()
        .step(u, expiry, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    (c + d * p.v0).exp()
}

impl CharacteristicFunction for HestonParams {
    fn cf(&self, u: Complex64, expiry: f64) -> Complex64 {
        cf_heston(u, self, expiry)
    }

    fn mean_variance(&self, expiry: f64) -> f64 {
        self.expected_mean_variance(expiry)
    }
}

/// Variance-process parameters over one interval of constant coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub theta: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl Segment {
    pub fn validate(&self) -> Result<()> {
        check(self.theta > 0.0, "theta", self.theta, "must be > 0")?;
        check(self.kappa >= 0.0, "kappa", self.kappa, "must be >= 0")?;
        check(self.sigma >= 0.0, "sigma", self.sigma, "must be >= 0")?;
        check(self.rho.abs() < 1.0, "rho", self.rho, "must lie in (-1, 1)")
    }

    /// Propagates the affine coefficients `(C, D)` of `exp(C + D v)` over a
    /// time-to-go `tau`, starting from `(c0, d0)`.
    ///
    /// Solves `D' = -a - beta D + sigma^2 D^2 / 2`, `C' = kappa theta D` with
    /// `a = (u^2 + iu) / 2`, `beta = kappa - i rho sigma u`. The root
    /// `(beta - d) / sigma^2` is written as `-2a / (beta + d)` so that no
    /// division by `sigma^2` is left in the coefficients.
    pub(crate) fn step(&self, u: Complex64, tau: f64, c0: Complex64, d0: Complex64) -> (Complex64, Complex64) {
        let i = Complex64::i();
        let a = 0.5 * (u * u + i * u);
        let (theta, kappa, sigma, rho) = (self.theta, self.kappa, self.sigma, self.rho);

        if sigma < DETERMINISTIC_SIGMA {
            let decay = (-kappa * tau).exp();
            let phi1 = tau * relaxation_factor(kappa * tau);
            let d = d0 * decay - a * phi1;
            let c = c0 + theta * (d0 * (1.0 - decay) - a * (tau - phi1));
            return (c, d);
        }

        let beta = kappa - i * rho * sigma * u;
        let s2 = sigma * sigma;
        let disc = (beta * beta + 2.0 * s2 * a).sqrt();
        // Smaller root of the Riccati quadratic. beta + d vanishes only when
        // a = 0, where the other expression is exact.
        let sum = beta + disc;
        let root = if sum.norm() > 1e-12 * (beta.norm() + disc.norm()) {
            -2.0 * a / sum
        } else {
            (beta - disc) / s2
        };
        let offset = root - d0;
        let big = sum - s2 * d0;
        let e = (-disc * tau).exp();

        let d = (root * big - sum * offset * e) / (big - s2 * offset * e);
        let z = 0.5 * s2 * offset * one_minus_exp_neg_over(disc, tau);
        let c = c0 + kappa * theta * (root * tau - 2.0 * ln_1p(z) / s2);
        (c, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn feller_examples() {
        assert_relative_eq!(feller_ratio(2.0, 0.04, 0.4), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            feller_ratio(6.02, 0.018, 0.49),
            0.902_623_906_705_539_4,
            epsilon = 1e-14
        );
        assert_eq!(feller_ratio(3.0, 0.0, 0.5), 0.0);
        assert!(feller_ratio(1.0, 0.04, 0.0).is_infinite());
    }

    #[test]
    fn mean_variance_examples() {
        assert_relative_eq!(expected_mean_variance(0.04, 0.04, 3.0, 7.0), 0.04, epsilon = 1e-16);
        assert_relative_eq!(
            expected_mean_variance(0.04, 0.09, 1.0, 1.0),
            0.058_393_972_058_572_1,
            epsilon = 1e-15
        );
        assert_relative_eq!(expected_mean_variance(0.04, 0.09, 1e6, 50.0), 0.09, epsilon = 1e-9);
        assert_eq!(expected_mean_variance(0.04, 0.09, 0.0, 2.0), 0.04);
        let near = expected_mean_variance(0.04, 0.09, 1e-12, 1.0);
        assert!((near - 0.04).abs() < 1e-10);
    }

    #[test]
    fn cf_basic_identities() {
        let p = HestonParams::new(0.04, 0.06, 1.5, 0.6, -0.7).unwrap();
        assert_eq!(cf_heston(c(0.0, 0.0), &p, 1.0), c(1.0, 0.0));
        let m = cf_heston(c(0.0, -1.0), &p, 1.0);
        assert!((m - 1.0).norm() < 1e-12);
        let u = c(3.7, 0.0);
        let lhs = cf_heston(-u, &p, 2.0);
        let rhs = cf_heston(u, &p, 2.0).conj();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn deterministic_limit_matches_gaussian() {
        let p = HestonParams::new(0.04, 0.09, 1.0, 0.0, -0.5).unwrap();
        let t = 1.3;
        let var = t * p.expected_mean_variance(t);
        for &x in &[0.5, 2.0, 10.0] {
            let u = c(x, 0.0);
            let expected = (-(u * u + Complex64::i() * u) * 0.5 * var).exp();
            assert!((cf_heston(u, &p, t) - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn tiny_sigma_is_continuous_with_deterministic_branch() {
        let p0 = HestonParams::new(0.04, 0.09, 1.0, 0.0, -0.5).unwrap();
        let p1 = HestonParams { sigma: 1e-7, ..p0 };
        for &x in &[0.5, 5.0, 50.0] {
            let u = c(x, 0.0);
            let a = cf_heston(u, &p0, 1.0);
            let b = cf_heston(u, &p1, 1.0);
            assert!((a - b).norm() < 1e-5 * x.max(1.0), "u={x}: {a} vs {b}");
        }
    }

    #[test]
    fn long_maturity_has_no_branch_jumps() {
        // Continuity in u on a fine grid at a long maturity with strong correlation.
        let p = HestonParams::new(0.04, 0.04, 0.5, 1.0, -0.9).unwrap();
        let mut prev = cf_heston(c(0.0, -0.5), &p, 10.0);
        for k in 1..4000 {
            let u = c(k as f64 * 0.01, -0.5);
            let cur = cf_heston(u, &p, 10.0);
            assert!((cur - prev).norm() < 2e-2, "jump at u={}", u.re);
            prev = cur;
        }
    }

    #[test]
    fn rejects_inadmissible() {
        assert!(HestonParams::new(0.0, 0.04, 1.0, 0.5, 0.0).is_err());
        assert!(HestonParams::new(0.04, 0.04, -1.0, 0.5, 0.0).is_err());
        assert!(HestonParams::new(0.04, 0.04, 1.0, 0.5, 1.0).is_err());
        assert!(HestonParams::new(0.04, f64::NAN, 1.0, 0.5, 0.0).is_err());
    }
}
