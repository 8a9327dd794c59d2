//! Levenberg-Marquardt least squares with finite-difference Jacobians.
//!
//! The residual callback may reject a point by returning `None`; the step is
//! then treated like a step that increased the cost. All stopping criteria
//! are invariant under a constant rescaling of the residuals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Bound on `|J^T r|_inf / (|r| sqrt(max diag J^T J))`.
    pub gradient_tol: f64,
    /// Relative step length below which the iteration stops.
    pub step_tol: f64,
    /// Stop once the cost falls below this fraction of the initial cost.
    pub cost_tol: f64,
    /// Central-difference step in the unconstrained coordinates.
    pub fd_step: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            gradient_tol: 1e-10,
            step_tol: 1e-13,
            cost_tol: 1e-30,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian<F>(f: &mut F, x: &[f64], r: &[f64], h: f64) -> DMatrix<f64>
where
    F: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let (m, n) = (r.len(), x.len());
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        let step = h * x[j].abs().max(1.0);
        probe[j] = x[j] + step;
        let up = f(&probe).filter(|v| v.len() == m);
        probe[j] = x[j] - step;
        let down = f(&probe).filter(|v| v.len() == m);
        probe[j] = x[j];
        let col: Option<Vec<f64>> = match (up, down) {
            (Some(u), Some(d)) => Some(u.iter().zip(&d).map(|(a, b)| (a - b) / (2.0 * step)).collect()),
            (Some(u), None) => Some(u.iter().zip(r).map(|(a, b)| (a - b) / step).collect()),
            (None, Some(d)) => Some(r.iter().zip(&d).map(|(a, b)| (a - b) / step).collect()),
            (None, None) => None,
        };
        if let Some(col) = col {
            for i in 0..m {
                jac[(i, j)] = col[i];
            }
        }
    }
    jac
}

fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.solve(b));
    }
    a.clone().lu().solve(b)
}

/// Minimizes `|f(x)|^2` from `x0`. Returns `None` if `f(x0)` is rejected.
pub fn minimize<F>(mut f: F, x0: &[f64], cfg: &LmConfig) -> Option<LmOutcome>
where
    F: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = f(&x)?;
    let mut cost = sum_sq(&r);
    let cost0 = cost;
    let done = |x: Vec<f64>, r: Vec<f64>, cost: f64, iterations: usize, converged: bool| LmOutcome {
        x,
        residuals: r,
        cost,
        iterations,
        converged,
    };
    if n == 0 || cost == 0.0 {
        return Some(done(x, r, cost, 0, true));
    }

    let mut jac = jacobian(&mut f, &x, &r, cfg.fd_step);
    let mut jtj = jac.transpose() * &jac;
    let mut grad = jac.transpose() * DVector::from_column_slice(&r);
    let max_diag = |a: &DMatrix<f64>| (0..n).map(|i| a[(i, i)]).fold(0.0_f64, f64::max);
    let gradient_small =
        |g: &DVector<f64>, a: &DMatrix<f64>, cost: f64| g.amax() <= cfg.gradient_tol * cost.sqrt() * max_diag(a).sqrt();
    if gradient_small(&grad, &jtj, cost) {
        return Some(done(x, r, cost, 0, true));
    }

    let mut mu = 1e-3 * max_diag(&jtj).max(f64::MIN_POSITIVE);
    let mut nu = 2.0;
    let mut stalled = 0;

    for iter in 1..=cfg.max_iterations {
        let md = max_diag(&jtj);
        let mut damped = jtj.clone();
        for i in 0..n {
            damped[(i, i)] += mu * jtj[(i, i)].max(1e-12 * md).max(f64::MIN_POSITIVE);
        }
        let Some(delta) = solve(&damped, &(-&grad)) else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };
        let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if delta.norm() <= cfg.step_tol * (x_norm + cfg.step_tol) {
            return Some(done(x, r, cost, iter, true));
        }

        let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
        let accepted = f(&trial).filter(|v| v.len() == r.len() && v.iter().all(|e| e.is_finite()));
        let new_cost = accepted.as_ref().map(|v| sum_sq(v)).unwrap_or(f64::INFINITY);

        if new_cost < cost {
            let mut scaled = DVector::zeros(n);
            for i in 0..n {
                scaled[i] = mu * jtj[(i, i)].max(1e-12 * md) * delta[i];
            }
            let predicted = 0.5 * delta.dot(&(scaled - &grad));
            let gain = if predicted > 0.0 {
                0.5 * (cost - new_cost) / predicted
            } else {
                1.0
            };
            let reduction = (cost - new_cost) / cost;

            x = trial;
            r = accepted.expect("finite cost implies residuals");
            cost = new_cost;
            mu *= (1.0 / 3.0f64).max(1.0 - (2.0 * gain - 1.0).powi(3));
            nu = 2.0;

            if cost <= cfg.cost_tol * cost0 {
                return Some(done(x, r, cost, iter, true));
            }
            jac = jacobian(&mut f, &x, &r, cfg.fd_step);
            jtj = jac.transpose() * &jac;
            grad = jac.transpose() * DVector::from_column_slice(&r);
            if gradient_small(&grad, &jtj, cost) {
                return Some(done(x, r, cost, iter, true));
            }
            stalled = if reduction < 1e-14 { stalled + 1 } else { 0 };
            if stalled >= 3 {
                return Some(done(x, r, cost, iter, true));
            }
        } else {
            mu *= nu;
            nu *= 2.0;
            // No descent direction left at working precision.
            if mu > 1e20 * max_diag(&jtj).max(1.0) {
                return Some(done(x, r, cost, iter, true));
            }
        }
    }
    Some(done(x, r, cost, cfg.max_iterations, false))
}
