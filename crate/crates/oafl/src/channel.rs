//! MIMO Cloud-RAN uplink radio access: channel sampling and noisy transmission.
//!
//! A realization holds one block-fading draw of every AP/device channel matrix
//! together with the receiver noise powers and the device-to-AP assignment.
//! All dB quantities are converted to linear scale once, at construction.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{randcn, rng_from_seed};

/// Antenna counts and population sizes of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    /// Number of access points.
    pub n_aps: usize,
    /// Number of edge devices.
    pub n_devices: usize,
    /// Receive antennas per AP.
    pub n_rx: usize,
    /// Transmit antennas per device.
    pub n_tx: usize,
}

impl Dims {
    pub fn validate(&self) -> Result<()> {
        if self.n_aps == 0 || self.n_devices == 0 || self.n_rx == 0 || self.n_tx == 0 {
            return Err(Error::Dimension("all dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Partition of device indices across APs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    cells: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds a topology from per-AP device lists, checking that they partition
    /// `0..n_devices` with pairwise-disjoint cells.
    pub fn new(cells: Vec<Vec<usize>>, n_devices: usize) -> Result<Self> {
        let mut seen = vec![false; n_devices];
        for cell in &cells {
            for &k in cell {
                if k >= n_devices {
                    return Err(Error::Topology(format!(
                        "device index {k} out of range (n_devices = {n_devices})"
                    )));
                }
                if seen[k] {
                    return Err(Error::Topology(format!("device {k} assigned to two APs")));
                }
                seen[k] = true;
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::Topology(format!("device {k} not served by any AP")));
        }
        Ok(Self { cells })
    }

    /// Splits `0..n_devices` into `n_aps` contiguous, near-even cells.
    pub fn even(n_aps: usize, n_devices: usize) -> Self {
        let mut cells = vec![Vec::new(); n_aps];
        for k in 0..n_devices {
            cells[k * n_aps / n_devices.max(1)].push(k);
        }
        Self { cells }
    }

    pub fn n_aps(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, ap: usize) -> &[usize] {
        &self.cells[ap]
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// The AP serving device `k`.
    pub fn serving_ap(&self, k: usize) -> Option<usize> {
        self.cells.iter().position(|c| c.contains(&k))
    }
}

/// Large-scale fading parameters, stored in dB as configured.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathlossParams {
    /// Receive antenna gain per AP, dBi.
    pub antenna_gain_ap_db: Vec<f64>,
    /// Transmit antenna gain per device, dBi.
    pub antenna_gain_dev_db: Vec<f64>,
    /// Pathloss exponent.
    pub exponent: f64,
    /// Reference loss at 1 m, dB.
    pub reference_loss_db: f64,
    /// Distance in meters per (AP, device) pair.
    pub distance_m: Vec<Vec<f64>>,
}

impl PathlossParams {
    /// Same gains and distance for every pair.
    pub fn uniform(
        n_aps: usize,
        n_devices: usize,
        gain_ap_db: f64,
        gain_dev_db: f64,
        exponent: f64,
        reference_loss_db: f64,
        distance_m: f64,
    ) -> Self {
        Self {
            antenna_gain_ap_db: vec![gain_ap_db; n_aps],
            antenna_gain_dev_db: vec![gain_dev_db; n_devices],
            exponent,
            reference_loss_db,
            distance_m: vec![vec![distance_m; n_devices]; n_aps],
        }
    }

    pub fn validate(&self, dims: &Dims) -> Result<()> {
        if self.antenna_gain_ap_db.len() != dims.n_aps
            || self.antenna_gain_dev_db.len() != dims.n_devices
            || self.distance_m.len() != dims.n_aps
            || self.distance_m.iter().any(|r| r.len() != dims.n_devices)
        {
            return Err(Error::Dimension("pathloss tables do not match dims".into()));
        }
        if self.exponent <= 0.0 {
            return Err(Error::Parameter("pathloss exponent must be > 0".into()));
        }
        if self.distance_m.iter().flatten().any(|&d| d <= 0.0) {
            return Err(Error::Parameter("distances must be > 0".into()));
        }
        Ok(())
    }

    /// Linear per-entry channel gain (variance of one channel coefficient)
    /// for the (AP, device) pair.
    pub fn gain_linear(&self, ap: usize, device: usize) -> f64 {
        let g_r = 10f64.powf(self.antenna_gain_ap_db[ap] / 10.0);
        let g_t = 10f64.powf(self.antenna_gain_dev_db[device] / 10.0);
        let nu = 10f64.powf(self.reference_loss_db / 10.0);
        g_r * g_t * nu * self.distance_m[ap][device].powf(-self.exponent)
    }
}

/// One block-fading draw of all channel matrices plus receiver noise statistics.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `h[i][k]` is the N_R x N_T matrix between device `k` and AP `i`.
    h: Vec<Vec<DMatrix<Complex<f64>>>>,
    /// Per-AP receiver noise power (linear).
    noise_variance: Vec<f64>,
    topology: Topology,
    dims: Dims,
}

impl ChannelRealization {
    pub fn new(
        h: Vec<Vec<DMatrix<Complex<f64>>>>,
        noise_variance: Vec<f64>,
        topology: Topology,
        dims: Dims,
    ) -> Result<Self> {
        dims.validate()?;
        if topology.n_aps() != dims.n_aps {
            return Err(Error::Topology("topology AP count does not match dims".into()));
        }
        if h.len() != dims.n_aps || h.iter().any(|row| row.len() != dims.n_devices) {
            return Err(Error::Dimension("channel table does not match dims".into()));
        }
        for row in &h {
            for m in row {
                if m.nrows() != dims.n_rx || m.ncols() != dims.n_tx {
                    return Err(Error::Dimension(format!(
                        "channel matrix is {}x{}, expected {}x{}",
                        m.nrows(),
                        m.ncols(),
                        dims.n_rx,
                        dims.n_tx
                    )));
                }
            }
        }
        if noise_variance.len() != dims.n_aps || noise_variance.iter().any(|&v| v < 0.0) {
            return Err(Error::Parameter("noise variances must be >= 0, one per AP".into()));
        }
        Ok(Self { h, noise_variance, topology, dims })
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn gain(&self, ap: usize, device: usize) -> &DMatrix<Complex<f64>> {
        &self.h[ap][device]
    }

    pub fn noise_variance(&self, ap: usize) -> f64 {
        self.noise_variance[ap]
    }

    /// Aggregate receiver noise power seen by the fusion analytics:
    /// `N_R * sigma_z^2 * C / N` with `C = N / 2` channel uses.
    pub fn epsilon(&self, ap: usize, model_len: usize) -> f64 {
        let c = model_len as f64 / 2.0;
        self.dims.n_rx as f64 * self.noise_variance[ap] * c / model_len as f64
    }

    pub fn epsilons(&self, model_len: usize) -> Vec<f64> {
        (0..self.dims.n_aps).map(|i| self.epsilon(i, model_len)).collect()
    }

    /// Copy with every AP's channel rows scaled by a per-AP factor; the noise
    /// power scales by the squared factor so signal-to-noise ratios are
    /// preserved. Used to fold receive-side calibration into the design-side
    /// channel view.
    pub fn scaled_per_ap(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.dims.n_aps {
            return Err(Error::Dimension("one scale factor per AP required".into()));
        }
        let h = self
            .h
            .iter()
            .zip(factors)
            .map(|(row, &f)| row.iter().map(|m| m.map(|z| z * f)).collect())
            .collect();
        let noise = self
            .noise_variance
            .iter()
            .zip(factors)
            .map(|(&v, &f)| v * f * f)
            .collect();
        Self::new(h, noise, self.topology.clone(), self.dims)
    }

    pub fn to_snapshot(&self) -> ChannelSnapshot {
        ChannelSnapshot {
            dims: self.dims,
            topology: self.topology.clone(),
            noise_variance: self.noise_variance.clone(),
            h: self
                .h
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|m| MatrixSnapshot {
                            rows: m.nrows(),
                            cols: m.ncols(),
                            entries: m.iter().map(|z| [z.re, z.im]).collect(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_snapshot(snap: &ChannelSnapshot) -> Result<Self> {
        let h = snap
            .h
            .iter()
            .map(|row| {
                row.iter()
                    .map(|m| {
                        DMatrix::from_iterator(
                            m.rows,
                            m.cols,
                            m.entries.iter().map(|e| Complex::new(e[0], e[1])),
                        )
                    })
                    .collect()
            })
            .collect();
        Self::new(h, snap.noise_variance.clone(), snap.topology.clone(), snap.dims)
    }
}

/// JSON-friendly channel dump; complex numbers stored as `[re, im]` pairs in
/// column-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelSnapshot {
    pub dims: Dims,
    pub topology: Topology,
    pub noise_variance: Vec<f64>,
    pub h: Vec<Vec<MatrixSnapshot>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixSnapshot {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

/// Draws one block-fading realization: each coefficient is the linear
/// large-scale gain times a unit circularly-symmetric complex Gaussian.
pub fn sample_channel(
    pathloss: &PathlossParams,
    dims: &Dims,
    topology: &Topology,
    noise_variance: &[f64],
    seed: u64,
) -> Result<ChannelRealization> {
    dims.validate()?;
    pathloss.validate(dims)?;
    if topology.n_aps() != dims.n_aps {
        return Err(Error::Topology("topology AP count does not match dims".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut h = Vec::with_capacity(dims.n_aps);
    for i in 0..dims.n_aps {
        let mut row = Vec::with_capacity(dims.n_devices);
        for k in 0..dims.n_devices {
            let scale = pathloss.gain_linear(i, k).sqrt();
            let m = DMatrix::from_fn(dims.n_rx, dims.n_tx, |_, _| randcn(&mut rng, 1.0) * scale);
            row.push(m);
        }
        h.push(row);
    }
    ChannelRealization::new(h, noise_variance.to_vec(), topology.clone(), *dims)
}

/// Transmits one signal matrix per device over the uplink and returns the
/// received matrix per AP: the in-cell superposition plus white complex
/// Gaussian noise.
pub fn uplink_transmit(
    ch: &ChannelRealization,
    signals: &[DMatrix<Complex<f64>>],
    seed: u64,
) -> Result<Vec<DMatrix<Complex<f64>>>> {
    let dims = ch.dims();
    if signals.len() != dims.n_devices {
        return Err(Error::Dimension(format!(
            "expected {} transmit matrices, got {}",
            dims.n_devices,
            signals.len()
        )));
    }
    let uses = signals.first().map(|x| x.ncols()).unwrap_or(0);
    for (k, x) in signals.iter().enumerate() {
        if x.nrows() != dims.n_tx || x.ncols() != uses {
            return Err(Error::Dimension(format!(
                "signal of device {k} is {}x{}, expected {}x{}",
                x.nrows(),
                x.ncols(),
                dims.n_tx,
                uses
            )));
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut received = Vec::with_capacity(dims.n_aps);
    for i in 0..dims.n_aps {
        let mut y = DMatrix::from_element(dims.n_rx, uses, Complex::new(0.0, 0.0));
        for &k in ch.topology().cell(i) {
            y += ch.gain(i, k) * &signals[k];
        }
        let var = ch.noise_variance(i);
        if var > 0.0 {
            for v in y.iter_mut() {
                *v += randcn(&mut rng, var);
            }
        } else {
            // keep the RNG stream aligned with the noisy case
            for _ in 0..y.len() {
                let _ = randcn(&mut rng, 1.0);
            }
        }
        received.push(y);
    }
    Ok(received)
}
