use num_complex::Complex64;
use proptest::prelude::*;
use svcal::model::Segment;
use svcal::{BatesParams, CharacteristicFunction, HestonParams, PiecewiseHestonParams, SchobelZhuParams};

fn heston() -> impl Strategy<Value = HestonParams> {
    (0.005..0.2f64, 0.005..0.2f64, 0.1..8.0f64, 0.01..1.5f64, -0.95..0.95f64)
        .prop_map(|(v0, theta, kappa, sigma, rho)| HestonParams::new(v0, theta, kappa, sigma, rho).unwrap())
}

fn bates() -> impl Strategy<Value = BatesParams> {
    (heston(), 0.0..2.0f64, -0.2..0.2f64, 0.01..0.3f64)
        .prop_map(|(h, lambda, mu, delta)| BatesParams::new(h, lambda, mu, delta).unwrap())
}

fn schobel_zhu() -> impl Strategy<Value = SchobelZhuParams> {
    (0.05..0.4f64, 0.05..0.4f64, 0.1..6.0f64, 0.01..0.8f64, -0.9..0.9f64)
        .prop_map(|(v0, theta, kappa, sigma, rho)| SchobelZhuParams::new(v0, theta, kappa, sigma, rho).unwrap())
}

fn check_identities(cf: &dyn CharacteristicFunction, t: f64, u: f64) -> Result<(), TestCaseError> {
    let zero = cf.cf(Complex64::new(0.0, 0.0), t);
    prop_assert!((zero - 1.0).norm() < 1e-12, "cf(0) = {zero}");
    let martingale = cf.cf(Complex64::new(0.0, -1.0), t);
    prop_assert!((martingale - 1.0).norm() < 1e-10, "cf(-i) = {martingale}");
    let a = cf.cf(Complex64::new(u, 0.0), t);
    let b = cf.cf(Complex64::new(-u, 0.0), t);
    prop_assert!(a.is_finite());
    prop_assert!(a.norm() <= 1.0 + 1e-12, "|cf({u})| = {}", a.norm());
    prop_assert!((a - b.conj()).norm() < 1e-12);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn heston_identities(p in heston(), t in 0.02..10.0f64, u in 0.0..200.0f64) {
        check_identities(&p, t, u)?;
    }

    #[test]
    fn bates_identities(p in bates(), t in 0.02..10.0f64, u in 0.0..200.0f64) {
        check_identities(&p, t, u)?;
    }

    #[test]
    fn schobel_zhu_identities(p in schobel_zhu(), t in 0.02..10.0f64, u in 0.0..200.0f64) {
        check_identities(&p, t, u)?;
    }

    #[test]
    fn bates_without_jumps_is_heston(h in heston(), t in 0.02..5.0f64, u in 0.0..50.0f64, v in -0.9..0.0f64) {
        let b = BatesParams::new(h, 0.0, 0.1, 0.1).unwrap();
        let z = Complex64::new(u, v);
        prop_assert!((b.cf(z, t) - h.cf(z, t)).norm() < 1e-13);
    }

    #[test]
    fn uniform_piecewise_is_heston(h in heston(), t in 0.05..5.0f64, u in 0.0..50.0f64, n in 1usize..6) {
        let seg = Segment { theta: h.theta, kappa: h.kappa, sigma: h.sigma, rho: h.rho };
        let breaks: Vec<f64> = (1..=n).map(|i| t * i as f64 / n as f64).collect();
        let pw = PiecewiseHestonParams::uniform(h.v0, breaks, seg).unwrap();
        let z = Complex64::new(u, -0.5);
        let (a, b) = (pw.cf(z, t), h.cf(z, t));
        prop_assert!((a - b).norm() <= 1e-11 * b.norm().max(1e-3), "{a} vs {b}");
    }
}
