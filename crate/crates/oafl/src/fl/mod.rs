//! Federated-learning core: the global model, local update normalization,
//! the global update step, and the convergence-bound evaluator.

pub mod dataset;

use nalgebra::DVector;

use crate::error::{Error, Result};

pub use dataset::{
    load_mnist_idx, logistic_constants, logistic_task, partition_dataset, partition_iid,
    ridge_constants, synthetic_ridge, TaskConstants, TaskData,
};

/// Variance floor below which a local update is treated as constant and
/// contributes only its mean term.
pub const ZERO_VARIANCE_GUARD: f64 = 1e-24;

/// Global model parameters plus training hyperparameters. The stored vector is
/// zero-padded to even length; the pad is stripped when the model is applied.
#[derive(Debug, Clone)]
pub struct GlobalModel {
    theta: DVector<f64>,
    pub eta: f64,
    pub round: usize,
    logical_len: usize,
}

impl GlobalModel {
    pub fn new(theta: DVector<f64>, eta: f64) -> Result<Self> {
        if eta <= 0.0 {
            return Err(Error::Parameter("learning rate must be > 0".into()));
        }
        let logical_len = theta.len();
        if logical_len == 0 {
            return Err(Error::Dimension("empty parameter vector".into()));
        }
        let padded = if logical_len % 2 == 1 {
            let mut t = DVector::zeros(logical_len + 1);
            t.rows_mut(0, logical_len).copy_from(&theta);
            t
        } else {
            theta
        };
        Ok(Self { theta: padded, eta, round: 0, logical_len })
    }

    pub fn zeros(len: usize, eta: f64) -> Result<Self> {
        Self::new(DVector::zeros(len), eta)
    }

    /// Padded length N (always even).
    pub fn padded_len(&self) -> usize {
        self.theta.len()
    }

    pub fn logical_len(&self) -> usize {
        self.logical_len
    }

    /// Parameters without the pad.
    pub fn theta(&self) -> DVector<f64> {
        DVector::from_iterator(self.logical_len, self.theta.iter().take(self.logical_len).cloned())
    }

    pub fn theta_padded(&self) -> &DVector<f64> {
        &self.theta
    }
}

/// A device's local update together with its normalization statistics.
#[derive(Debug, Clone)]
pub struct LocalUpdate {
    /// Raw summed gradient (padded length N).
    pub g: DVector<f64>,
    /// Per-entry variance of `g`.
    pub v: f64,
    /// Mean entry of `g`.
    pub gbar: f64,
    /// Normalized update: zero mean, unit per-entry second moment
    /// (identically zero under the variance guard).
    pub g_norm: DVector<f64>,
}

impl LocalUpdate {
    /// Normalizes a raw update: subtract the mean, divide by the per-entry
    /// standard deviation. Constant vectors trip the zero-variance guard.
    pub fn from_gradient(g: DVector<f64>) -> Self {
        let n = g.len() as f64;
        let gbar = g.sum() / n;
        let centered = g.map(|x| x - gbar);
        let v = centered.norm_squared() / n;
        let g_norm = if v < ZERO_VARIANCE_GUARD {
            DVector::zeros(g.len())
        } else {
            centered / v.sqrt()
        };
        Self { g, v, gbar, g_norm }
    }

    /// Reassembles the raw update from its normalized parts.
    pub fn denormalized(&self) -> DVector<f64> {
        let mut out = &self.g_norm * self.v.sqrt();
        out.iter_mut().for_each(|x| *x += self.gbar);
        out
    }
}

/// Computes a device's local update. With `local_steps == 1` this is the plain
/// summed gradient at the current model; with more steps the device runs local
/// full-batch descent and reports the accumulated model delta divided by eta.
pub fn local_gradient(
    model: &GlobalModel,
    shard: &TaskData,
    local_steps: usize,
) -> Result<LocalUpdate> {
    if shard.n_samples() == 0 {
        return Err(Error::Data("empty shard".into()));
    }
    if shard.theta_len() != model.logical_len {
        return Err(Error::Dimension(format!(
            "shard parameter length {} does not match model length {}",
            shard.theta_len(),
            model.logical_len
        )));
    }
    let theta = model.theta();
    let g_logical = if local_steps <= 1 {
        shard.grad_sum(&theta)
    } else {
        let mut local = theta.clone();
        for _ in 0..local_steps {
            let g = shard.grad_sum(&local);
            local -= g * model.eta;
        }
        (theta - local) / model.eta
    };
    let mut g = DVector::zeros(model.padded_len());
    g.rows_mut(0, model.logical_len).copy_from(&g_logical);
    Ok(LocalUpdate::from_gradient(g))
}

/// Applies the fused global update: adds the bias term rebuilt from the device
/// means, then takes one descent step. The pad entries are ignored.
pub fn apply_global_update(
    model: &GlobalModel,
    z_hat: &DVector<f64>,
    gbar_all: &[f64],
) -> Result<GlobalModel> {
    if z_hat.len() != model.padded_len() {
        return Err(Error::Dimension(format!(
            "fused update length {} does not match padded model length {}",
            z_hat.len(),
            model.padded_len()
        )));
    }
    let bias: f64 = gbar_all.iter().sum();
    let mut next = model.clone();
    for j in 0..model.logical_len {
        next.theta[j] -= model.eta * (z_hat[j] + bias);
    }
    next.round = model.round + 1;
    Ok(next)
}

/// Strong-convexity and smoothness constants plus the initial optimality gap.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceParams {
    pub mu: f64,
    pub lipschitz: f64,
    pub initial_gap: f64,
}

impl ConvergenceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= self.lipschitz) {
            return Err(Error::Parameter(format!(
                "need 0 < mu <= L, got mu = {}, L = {}",
                self.mu, self.lipschitz
            )));
        }
        Ok(())
    }
}

/// Evaluates the optimality-gap bound curve. Entry 0 is the initial gap;
/// entry t is the bound after t rounds driven by the per-round system
/// distortions:
///
/// bound[t] = (1 - mu/L)^t * gap + sum_{t'=1..t} (1 - mu/L)^{t-t'} (N/L) D[t'-1]
pub fn convergence_bound(
    params: &ConvergenceParams,
    d_system_history: &[f64],
    n: usize,
) -> Result<Vec<f64>> {
    params.validate()?;
    let contraction = 1.0 - params.mu / params.lipschitz;
    let gain = n as f64 / params.lipschitz;
    let mut curve = Vec::with_capacity(d_system_history.len() + 1);
    let mut bound = params.initial_gap;
    curve.push(bound);
    for &d in d_system_history {
        bound = contraction * bound + gain * d;
        curve.push(bound);
    }
    Ok(curve)
}
