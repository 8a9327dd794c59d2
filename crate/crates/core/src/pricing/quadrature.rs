//! Globally adaptive Gauss-Kronrod (7/15) quadrature for vector integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone)]
pub struct Integral {
    pub value: Vec<f64>,
    /// Sum of per-interval error estimates (max norm over components).
    pub error: f64,
    pub evals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, buf: &mut [f64]) -> Piece {
    let dim = buf.len();
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut gk = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let nodes: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
        for &sgn in nodes {
            f(centre + sgn * half * x, buf);
            for i in 0..dim {
                gk[i] += w * buf[i];
                if j % 2 == 1 {
                    g[i] += WG[j / 2] * buf[i];
                }
            }
        }
    }
    let mut error: f64 = 0.0;
    for i in 0..dim {
        gk[i] *= half;
        g[i] *= half;
        error = error.max((gk[i] - g[i]).abs());
    }
    Piece { a, b, value: gk, error }
}

/// Integrates `f` (writing `dim` components into its output slice) over the
/// union of consecutive intervals given by `breaks`, bisecting the interval
/// with the largest error until the total error is below `tol`.
pub fn integrate<F>(mut f: F, breaks: &[f64], dim: usize, tol: f64, max_evals: usize) -> Result<Integral>
where
    F: FnMut(f64, &mut [f64]),
{
    let mut buf = vec![0.0; dim];
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in breaks.windows(2) {
        heap.push(kronrod(&mut f, w[0], w[1], &mut buf));
        evals += 15;
    }
    let min_width = (breaks[breaks.len() - 1] - breaks[0]).abs() * 1e-13;
    let mut total: f64 = heap.iter().map(|p| p.error).sum();
    let mut frozen = Vec::new();

    while total > tol {
        let Some(worst) = heap.pop() else { break };
        if (worst.b - worst.a).abs() < min_width {
            // cannot refine further; keep it and stop refining this piece
            total -= worst.error;
            frozen.push(worst);
            continue;
        }
        if evals + 30 > max_evals {
            heap.push(worst);
            return Err(Error::Numerical {
                message: format!("quadrature exceeded {max_evals} evaluations"),
                residual: total,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod(&mut f, worst.a, mid, &mut buf);
        let right = kronrod(&mut f, mid, worst.b, &mut buf);
        evals += 30;
        total += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    let mut pieces: Vec<Piece> = heap.into_vec();
    pieces.extend(frozen);
    // Sum in a fixed order so results do not depend on heap layout.
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = vec![0.0; dim];
    let mut error = 0.0;
    for p in &pieces {
        for (v, pv) in value.iter_mut().zip(&p.value) {
            *v += pv;
        }
        error += p.error;
    }
    Ok(Integral { value, error, evals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x, out| out[0] = x.powi(9) - 3.0 * x * x, &[0.0, 2.0], 1, 1e-14, 1000).unwrap();
        assert!((r.value[0] - (102.4 - 8.0)).abs() < 1e-12);
        assert_eq!(r.evals, 15);
    }

    #[test]
    fn vector_integrand_with_peak() {
        let r = integrate(
            |x, out| {
                out[0] = (-x * x).exp();
                out[1] = 1.0 / (1.0 + 1e4 * (x - 0.3).powi(2));
            },
            &[0.0, 1.0, 10.0],
            2,
            1e-12,
            100_000,
        )
        .unwrap();
        let erf10 = 0.5 * std::f64::consts::PI.sqrt();
        assert!((r.value[0] - erf10).abs() < 1e-12);
        let exact = ((9.7f64 * 100.0).atan() + (0.3f64 * 100.0).atan()) / 100.0;
        assert!((r.value[1] - exact).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let err = integrate(
            |x, out| out[0] = (1.0 / x.max(1e-300)).sin(),
            &[0.0, 1.0],
            1,
            1e-15,
            200,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }
}
