//! Interior-point solver for the surrogate subproblem: a linear objective over
//! variables `sigma > 0` subject to constraints of the form
//! `lin^T sigma - kappa * sum_{i in mask} ln(sigma_i) + offset <= rhs`.
//!
//! Each constraint is convex and coercive in every coordinate it logs, so the
//! feasible set is bounded away from zero and compact whenever the linear
//! coefficients are positive. A phase-I pass maximizes the minimum slack to
//! obtain a strictly interior start; phase II follows the central path with
//! damped Newton steps.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::solve_spd;

/// One constraint `lin^T x - log_coeff * sum_{mask} ln(x_i) + offset <= rhs`.
#[derive(Debug, Clone)]
pub struct LinLogConstraint {
    pub lin: DVector<f64>,
    pub log_mask: Vec<bool>,
    pub log_coeff: f64,
    pub offset: f64,
    pub rhs: f64,
}

impl LinLogConstraint {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let mut v = self.lin.dot(x) + self.offset;
        for (i, &logged) in self.log_mask.iter().enumerate() {
            if logged {
                v -= self.log_coeff * x[i].ln();
            }
        }
        v
    }

    pub fn slack(&self, x: &DVector<f64>) -> f64 {
        self.rhs - self.value(x)
    }

    fn grad(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        out.copy_from(&self.lin);
        for (i, &logged) in self.log_mask.iter().enumerate() {
            if logged {
                out[i] -= self.log_coeff / x[i];
            }
        }
    }
}

const MAX_NEWTON: usize = 80;
const NEWTON_TOL: f64 = 1e-13;

/// Minimizes `f^T x` subject to the constraints, starting from a feasible
/// point (slacks may be zero; phase I recovers strict interiority).
pub fn minimize_linear(
    f: &DVector<f64>,
    constraints: &[LinLogConstraint],
    start: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = start.len();
    if start.iter().any(|&v| v <= 0.0) {
        return Err(Error::Parameter("start must be componentwise positive".into()));
    }
    let x0 = phase_one(constraints, start)?;

    // normalize the objective so the centering schedule is scale free
    let fmax = f.amax();
    if fmax <= 0.0 {
        return Ok(x0);
    }
    let fn_ = f / fmax;

    let m = constraints.len() as f64;
    let mut x = x0;
    let mut t = 1.0f64;
    let target = 1e-12;
    while m / t > target {
        x = center(&fn_, constraints, &x, t, n)?;
        t *= 12.0;
        if t > 1e18 {
            break;
        }
    }
    Ok(x)
}

/// Maximizes the minimum slack to find a strictly interior point. Returns the
/// input when it is already comfortably interior.
fn phase_one(constraints: &[LinLogConstraint], start: &DVector<f64>) -> Result<DVector<f64>> {
    let min_slack = constraints
        .iter()
        .map(|c| c.slack(start))
        .fold(f64::INFINITY, f64::min);
    if min_slack > 1e-7 {
        return Ok(start.clone());
    }
    let n = start.len();
    // augmented variable y = (x, s): maximize s with slacks shifted by s
    let mut y = DVector::zeros(n + 1);
    y.rows_mut(0, n).copy_from(start);
    y[n] = min_slack - 1.0;
    let mut t = 1.0f64;
    let mut grad = DVector::zeros(n + 1);
    let mut cgrad = DVector::zeros(n);
    for _ in 0..60 {
        for _ in 0..MAX_NEWTON {
            let mut h = DMatrix::zeros(n + 1, n + 1);
            grad.fill(0.0);
            grad[n] = -t; // maximize s
            for c in constraints {
                let x = y.rows(0, n).into_owned();
                let slack = c.slack(&x) - y[n];
                if slack <= 0.0 {
                    return Err(Error::Numeric("phase-one slack collapsed".into()));
                }
                c.grad(&x, &mut cgrad);
                // full gradient of the constraint in (x, s): (cgrad, 1)
                for i in 0..n {
                    grad[i] += cgrad[i] / slack;
                }
                grad[n] += 1.0 / slack;
                for i in 0..n {
                    for j in 0..n {
                        h[(i, j)] += cgrad[i] * cgrad[j] / (slack * slack);
                    }
                    h[(i, n)] += cgrad[i] / (slack * slack);
                    h[(n, i)] += cgrad[i] / (slack * slack);
                    // curvature of the log terms
                    if c.log_mask[i] {
                        h[(i, i)] += c.log_coeff / (x[i] * x[i]) / slack;
                    }
                }
                h[(n, n)] += 1.0 / (slack * slack);
            }
            for i in 0..=n {
                h[(i, i)] += 1e-12;
            }
            let step = solve_spd(&h, &grad)?;
            let decrement = grad.dot(&step);
            if !decrement.is_finite() {
                return Err(Error::Numeric("phase-one Newton diverged".into()));
            }
            if decrement < NEWTON_TOL {
                break;
            }
            let mut alpha = 1.0f64;
            for _ in 0..60 {
                let trial = &y - &step * alpha;
                let ok = trial.rows(0, n).iter().all(|&v| v > 0.0)
                    && constraints.iter().all(|c| {
                        let x = trial.rows(0, n).into_owned();
                        c.slack(&x) - trial[n] > 0.0
                    });
                if ok {
                    y = trial;
                    break;
                }
                alpha *= 0.5;
            }
        }
        if y[n] > 1e-6 {
            break;
        }
        t *= 10.0;
        if t > 1e14 {
            break;
        }
    }
    if y[n] <= 0.0 {
        return Err(Error::Infeasible(
            "no strictly interior point for the surrogate constraints".into(),
        ));
    }
    Ok(y.rows(0, y.len() - 1).into_owned())
}

/// One centering pass: damped Newton on `t f^T x - sum ln(slack)`.
fn center(
    f: &DVector<f64>,
    constraints: &[LinLogConstraint],
    start: &DVector<f64>,
    t: f64,
    n: usize,
) -> Result<DVector<f64>> {
    let mut x = start.clone();
    let mut cgrad = DVector::zeros(n);
    let barrier = |x: &DVector<f64>| -> f64 {
        let mut v = t * f.dot(x);
        for c in constraints {
            let s = c.slack(x);
            if s <= 0.0 || x.iter().any(|&xi| xi <= 0.0) {
                return f64::INFINITY;
            }
            v -= s.ln();
        }
        v
    };
    for _ in 0..MAX_NEWTON {
        let mut grad = f * t;
        let mut h = DMatrix::zeros(n, n);
        for c in constraints {
            let slack = c.slack(&x);
            if slack <= 0.0 {
                return Err(Error::Numeric("lost feasibility during centering".into()));
            }
            c.grad(&x, &mut cgrad);
            for i in 0..n {
                grad[i] += cgrad[i] / slack;
                for j in 0..n {
                    h[(i, j)] += cgrad[i] * cgrad[j] / (slack * slack);
                }
                if c.log_mask[i] {
                    h[(i, i)] += c.log_coeff / (x[i] * x[i]) / slack;
                }
            }
        }
        for i in 0..n {
            h[(i, i)] += 1e-14 * (1.0 + h[(i, i)]);
        }
        let step = solve_spd(&h, &grad)?;
        let decrement = grad.dot(&step);
        if !decrement.is_finite() {
            return Err(Error::Numeric("Newton decrement not finite".into()));
        }
        if decrement < NEWTON_TOL {
            break;
        }
        let f0 = barrier(&x);
        let mut alpha = 1.0f64;
        let mut moved = false;
        for _ in 0..70 {
            let trial = &x - &step * alpha;
            if trial.iter().all(|&v| v > 0.0) {
                let f1 = barrier(&trial);
                if f1 < f0 - 0.25 * alpha * decrement {
                    x = trial;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(x)
}
