//! Stage-1 over-the-air edge aggregation: real/complex packing, rank-1
//! transmit signals under a per-device power budget, and receive combining.

use nalgebra::{Complex, DMatrix, DVector};

use crate::channel::{uplink_transmit, ChannelRealization};
use crate::error::{Error, Result};
use crate::fl::LocalUpdate;

/// Slack allowed when checking the transmit power budget.
pub const POWER_TOL: f64 = 1e-12;

/// Transmit vectors, receive vectors, fusion weights, and power budgets.
#[derive(Debug, Clone)]
pub struct BeamformerSet {
    /// Transmit beamformer per device, length N_T.
    pub alpha: Vec<DVector<Complex<f64>>>,
    /// Receive beamformer per AP, length N_R.
    pub beta: Vec<DVector<Complex<f64>>>,
    /// Fusion weights applied at the server, length N_A.
    pub c: DVector<f64>,
    /// Power budget per device, watts.
    pub power_budget: Vec<f64>,
}

impl BeamformerSet {
    /// Checks `2 ||alpha_k||^2 <= P_k` for every device.
    pub fn validate_power(&self) -> Result<()> {
        for (k, a) in self.alpha.iter().enumerate() {
            let used = 2.0 * a.norm_squared();
            if used > self.power_budget[k] + POWER_TOL {
                return Err(Error::PowerConstraint(format!(
                    "device {k}: 2||alpha||^2 = {used} exceeds budget {}",
                    self.power_budget[k]
                )));
            }
        }
        Ok(())
    }
}

/// One AP's real-valued edge update of model length N.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeUpdate {
    pub s: DVector<f64>,
}

impl EdgeUpdate {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!(self.s.iter().cloned().collect::<Vec<f64>>())
    }
}

/// Effective scalar gain of a (receive, channel, transmit) triple:
/// `beta^H H alpha`. This single definition pins the conjugation convention
/// used everywhere in the crate.
pub fn effective_gain(
    beta: &DVector<Complex<f64>>,
    h: &DMatrix<Complex<f64>>,
    alpha: &DVector<Complex<f64>>,
) -> Complex<f64> {
    beta.dotc(&(h * alpha))
}

/// Packs an even-length real vector into C = N/2 complex entries:
/// first half real parts, second half imaginary parts.
pub fn to_complex(g_norm: &DVector<f64>) -> Result<DVector<Complex<f64>>> {
    let n = g_norm.len();
    if n % 2 != 0 {
        return Err(Error::Dimension(format!("length {n} is odd; pad upstream")));
    }
    let c = n / 2;
    Ok(DVector::from_fn(c, |m, _| Complex::new(g_norm[m], g_norm[c + m])))
}

/// Inverse of [`to_complex`]: stacks `[Re; Im]`.
pub fn from_complex(r: &DVector<Complex<f64>>) -> DVector<f64> {
    let c = r.len();
    DVector::from_fn(2 * c, |m, _| if m < c { r[m].re } else { r[m - c].im })
}

/// Forms the rank-1 transmit matrix `alpha r^T`, enforcing the power budget.
pub fn form_transmit_signal(
    r: &DVector<Complex<f64>>,
    alpha: &DVector<Complex<f64>>,
    power_budget: f64,
) -> Result<DMatrix<Complex<f64>>> {
    let used = 2.0 * alpha.norm_squared();
    if used > power_budget + POWER_TOL {
        return Err(Error::PowerConstraint(format!(
            "2||alpha||^2 = {used} exceeds budget {power_budget}"
        )));
    }
    let n_t = alpha.len();
    let c = r.len();
    Ok(DMatrix::from_fn(n_t, c, |t, m| alpha[t] * r[m]))
}

/// Applies the receive beamformer: `(beta^H Y)^T`.
pub fn receive_combine(
    y: &DMatrix<Complex<f64>>,
    beta: &DVector<Complex<f64>>,
) -> Result<DVector<Complex<f64>>> {
    if y.nrows() != beta.len() {
        return Err(Error::Dimension(format!(
            "received matrix has {} rows, beamformer has {}",
            y.nrows(),
            beta.len()
        )));
    }
    let c = y.ncols();
    Ok(DVector::from_fn(c, |m, _| {
        let mut acc = Complex::new(0.0, 0.0);
        for rx in 0..y.nrows() {
            acc += beta[rx].conj() * y[(rx, m)];
        }
        acc
    }))
}

/// Runs the whole edge stage for one round: normalize/pack, transmit over the
/// MIMO uplink, combine per AP, unpack. Deterministic given the noise seed.
pub fn edge_aggregate_round(
    updates: &[LocalUpdate],
    ch: &ChannelRealization,
    bf: &BeamformerSet,
    seed: u64,
) -> Result<Vec<EdgeUpdate>> {
    let dims = ch.dims();
    if updates.len() != dims.n_devices {
        return Err(Error::Dimension(format!(
            "{} updates for {} devices",
            updates.len(),
            dims.n_devices
        )));
    }
    if bf.alpha.len() != dims.n_devices || bf.beta.len() != dims.n_aps {
        return Err(Error::Dimension("beamformer set does not match dims".into()));
    }
    bf.validate_power()?;
    let mut signals = Vec::with_capacity(dims.n_devices);
    for (k, up) in updates.iter().enumerate() {
        let r = to_complex(&up.g_norm)?;
        signals.push(form_transmit_signal(&r, &bf.alpha[k], bf.power_budget[k])?);
    }
    let received = uplink_transmit(ch, &signals, seed)?;
    let mut out = Vec::with_capacity(dims.n_aps);
    for (i, y) in received.iter().enumerate() {
        let combined = receive_combine(y, &bf.beta[i])?;
        out.push(EdgeUpdate { s: from_complex(&combined) });
    }
    Ok(out)
}
