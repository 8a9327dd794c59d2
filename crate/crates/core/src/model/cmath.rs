//! Cancellation-free complex helpers.

use num_complex::Complex64;

/// `exp(z) - 1` without cancellation for small `|z|`.
pub fn exp_m1(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let half = (0.5 * y).sin();
    Complex64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin())
}

/// Principal `ln(1 + z)` without cancellation for small `|z|`.
pub fn ln_1p(z: Complex64) -> Complex64 {
    let modulus = 0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p();
    Complex64::new(modulus, z.im.atan2(1.0 + z.re))
}

/// `(1 - exp(-d tau)) / d`, tending to `tau` as `d -> 0`.
pub fn one_minus_exp_neg_over(d: Complex64, tau: f64) -> Complex64 {
    let x = d * tau;
    if x.norm() < 1e-300 {
        return Complex64::new(tau, 0.0);
    }
    -exp_m1(-x) / d
}
