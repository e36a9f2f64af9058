//! Norm-constrained quadratic minimization (trust-region subproblem):
//! minimize `1/2 x^T A x + g^T x` over `||x|| <= radius` for symmetric PSD `A`,
//! solved through the eigendecomposition and a safeguarded bisection on the
//! Lagrange multiplier.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Interior stationary points violating the ball by more than this are pushed
/// to the boundary.
pub const INTERIOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TrsSolution {
    pub x: DVector<f64>,
    /// Lagrange multiplier of the norm constraint (zero when interior).
    pub lambda: f64,
    /// Stationarity residual plus complementarity defect.
    pub kkt_residual: f64,
    pub boundary: bool,
    /// True when numerically negative curvature had to be clamped.
    pub regularized: bool,
}

pub fn solve_trs(a: &DMatrix<f64>, g: &DVector<f64>, radius: f64) -> Result<TrsSolution> {
    let n = g.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Dimension("quadratic form does not match gradient".into()));
    }
    if radius < 0.0 {
        return Err(Error::Parameter("radius must be >= 0".into()));
    }
    if radius == 0.0 {
        return Ok(TrsSolution {
            x: DVector::zeros(n),
            lambda: 0.0,
            kkt_residual: g.norm(),
            boundary: true,
            regularized: false,
        });
    }
    let eig = a.clone().symmetric_eigen();
    let q = eig.eigenvectors;
    let scale = eig.eigenvalues.amax().max(g.amax()).max(1e-300);
    let mut regularized = false;
    let lam: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| {
            if l < -1e-10 * scale {
                regularized = true;
            }
            l.max(0.0)
        })
        .collect();
    // coordinates of -g in the eigenbasis
    let d = q.transpose() * (-g);
    let zero_tol = 1e-14 * scale;

    let norm_at = |mu: f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            let denom = lam[i] + mu;
            if denom <= 0.0 {
                if d[i].abs() > zero_tol {
                    return f64::INFINITY;
                }
                continue;
            }
            let t = d[i] / denom;
            acc += t * t;
        }
        acc.sqrt()
    };

    // interior candidate: pseudo-inverse stationary point (minimum norm)
    let pinv_valid = (0..n).all(|i| lam[i] > zero_tol || d[i].abs() <= zero_tol);
    if pinv_valid {
        let y = DVector::from_fn(n, |i, _| if lam[i] > zero_tol { d[i] / lam[i] } else { 0.0 });
        let x = &q * &y;
        let nx = x.norm();
        if nx <= radius * (1.0 + INTERIOR_TOL) {
            let residual = (a * &x + g).norm();
            return Ok(TrsSolution { x, lambda: 0.0, kkt_residual: residual, boundary: false, regularized });
        }
    }

    // boundary: find mu > 0 with ||x(mu)|| = radius (monotone decreasing)
    let mut hi = scale.max(g.norm() / radius).max(1e-30);
    while norm_at(hi) > radius && hi < 1e300 {
        hi *= 2.0;
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    let y = DVector::from_fn(n, |i, _| {
        let denom = lam[i] + mu;
        if denom > 0.0 { d[i] / denom } else { 0.0 }
    });
    let mut x = &q * &y;
    // exact norm placement on the boundary
    let nx = x.norm();
    if nx > 0.0 {
        x *= radius / nx;
    }
    let stationarity = (a * &x + g + &x * mu).norm();
    let complementarity = (mu * (x.norm() - radius)).abs();
    Ok(TrsSolution {
        x,
        lambda: mu,
        kkt_residual: stationarity + complementarity,
        boundary: true,
        regularized,
    })
}
