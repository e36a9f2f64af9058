//! Layered side-information decoder: per-coordinate scalar networks, one per
//! (layer, AP), each fed its AP's dequantized value and the other branches'
//! previous-layer estimates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{psd_cholesky, randn, rng_from_seed};

use super::{encode, CompressionMatrix, EncoderState, QuantizedPayload};

/// Decoder shape: number of layers and hidden width of each scalar network.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecoderArch {
    pub layers: usize,
    pub hidden: usize,
}

impl Default for DecoderArch {
    fn default() -> Self {
        Self { layers: 3, hidden: 16 }
    }
}

/// Two-input scalar network with a linear skip path:
/// `out = skip_u * u + skip_s * s + w2 . tanh(w1 [u, s] + b1) + b2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarNet {
    pub w1_u: Vec<f64>,
    pub w1_s: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub skip_u: f64,
    pub skip_s: f64,
}

impl ScalarNet {
    fn identity(hidden: usize) -> Self {
        Self {
            w1_u: vec![0.0; hidden],
            w1_s: vec![0.0; hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
            skip_u: 1.0,
            skip_s: 0.0,
        }
    }

    fn random(hidden: usize, rng: &mut impl rand::Rng) -> Self {
        Self {
            w1_u: (0..hidden).map(|_| 0.5 * randn(rng)).collect(),
            w1_s: (0..hidden).map(|_| 0.5 * randn(rng)).collect(),
            b1: vec![0.0; hidden],
            w2: (0..hidden).map(|_| 0.05 * randn(rng)).collect(),
            b2: 0.0,
            skip_u: 1.0,
            skip_s: 0.0,
        }
    }

    fn zeros_like(&self) -> Self {
        let h = self.w1_u.len();
        Self {
            w1_u: vec![0.0; h],
            w1_s: vec![0.0; h],
            b1: vec![0.0; h],
            w2: vec![0.0; h],
            b2: 0.0,
            skip_u: 0.0,
            skip_s: 0.0,
        }
    }

    fn forward(&self, u: f64, s: f64, hidden_out: &mut [f64]) -> f64 {
        let mut out = self.skip_u * u + self.skip_s * s + self.b2;
        for j in 0..self.w1_u.len() {
            let h = (self.w1_u[j] * u + self.w1_s[j] * s + self.b1[j]).tanh();
            hidden_out[j] = h;
            out += self.w2[j] * h;
        }
        out
    }

    /// Accumulates weight gradients for one sample and returns
    /// `(d out / d u, d out / d s)`-weighted upstream deltas.
    #[allow(clippy::too_many_arguments)]
    fn backward(
        &self,
        u: f64,
        s: f64,
        hidden: &[f64],
        delta: f64,
        grad: &mut ScalarNet,
    ) -> (f64, f64) {
        grad.skip_u += delta * u;
        grad.skip_s += delta * s;
        grad.b2 += delta;
        let mut du = delta * self.skip_u;
        let mut ds = delta * self.skip_s;
        for j in 0..self.w1_u.len() {
            let h = hidden[j];
            grad.w2[j] += delta * h;
            let da = delta * self.w2[j] * (1.0 - h * h);
            grad.b1[j] += da;
            grad.w1_u[j] += da * u;
            grad.w1_s[j] += da * s;
            du += da * self.w1_u[j];
            ds += da * self.w1_s[j];
        }
        (du, ds)
    }

    fn step(&mut self, grad: &ScalarNet, lr: f64) {
        for j in 0..self.w1_u.len() {
            self.w1_u[j] -= lr * grad.w1_u[j];
            self.w1_s[j] -= lr * grad.w1_s[j];
            self.b1[j] -= lr * grad.b1[j];
            self.w2[j] -= lr * grad.w2[j];
        }
        self.b2 -= lr * grad.b2;
        self.skip_u -= lr * grad.skip_u;
        self.skip_s -= lr * grad.skip_s;
    }

    fn is_finite(&self) -> bool {
        self.w1_u.iter().all(|v| v.is_finite())
            && self.w1_s.iter().all(|v| v.is_finite())
            && self.b1.iter().all(|v| v.is_finite())
            && self.w2.iter().all(|v| v.is_finite())
            && self.b2.is_finite()
            && self.skip_u.is_finite()
            && self.skip_s.is_finite()
    }
}

/// All decoder parameters: `layers x n_aps` scalar networks. `zero_side`
/// forces the side-information inputs to zero at every layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecoderWeights {
    pub nets: Vec<Vec<ScalarNet>>,
    pub arch: DecoderArch,
    pub zero_side: bool,
}

impl DecoderWeights {
    /// Pass-through decoder: every network computes `u` exactly.
    pub fn identity(arch: DecoderArch, n_aps: usize) -> Self {
        let nets = (0..arch.layers)
            .map(|_| (0..n_aps).map(|_| ScalarNet::identity(arch.hidden)).collect())
            .collect();
        Self { nets, arch, zero_side: false }
    }

    pub fn random(arch: DecoderArch, n_aps: usize, zero_side: bool, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let nets = (0..arch.layers)
            .map(|_| (0..n_aps).map(|_| ScalarNet::random(arch.hidden, &mut rng)).collect())
            .collect();
        Self { nets, arch, zero_side }
    }

    pub fn n_aps(&self) -> usize {
        self.nets.first().map(|l| l.len()).unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    fn is_finite(&self) -> bool {
        self.nets.iter().flatten().all(|n| n.is_finite())
    }
}

/// Forward pass over one coordinate set of per-AP features. `features[i][n]`
/// is AP i's reconstructed value at coordinate n. Returns the fused estimate
/// and, when `tape` is given, stores hidden activations and side inputs for
/// the backward pass.
fn forward(
    weights: &DecoderWeights,
    features: &[DVector<f64>],
    c: &DVector<f64>,
    mut tape: Option<&mut Tape>,
) -> DVector<f64> {
    let n_aps = weights.n_aps();
    let n = features[0].len();
    let hidden = weights.arch.hidden;
    let mut est: Vec<DVector<f64>> = vec![DVector::zeros(n); n_aps];
    let mut side: Vec<DVector<f64>> = vec![DVector::zeros(n); n_aps];
    let mut scratch = vec![0.0f64; hidden];
    for (k, layer) in weights.nets.iter().enumerate() {
        for i in 0..n_aps {
            for m in 0..n {
                let s_in = if weights.zero_side { 0.0 } else { side[i][m] };
                let out = layer[i].forward(features[i][m], s_in, &mut scratch);
                if let Some(t) = tape.as_deref_mut() {
                    t.hidden[k][i][m].copy_from_slice(&scratch);
                    t.side_in[k][i][m] = s_in;
                }
                est[i][m] = out;
            }
        }
        if k + 1 < weights.nets.len() && !weights.zero_side {
            let mut total = DVector::zeros(n);
            for e in &est {
                total += e;
            }
            for i in 0..n_aps {
                side[i] = &total - &est[i];
            }
        }
        if let Some(t) = tape.as_deref_mut() {
            for i in 0..n_aps {
                t.est[k][i].copy_from(&est[i]);
            }
        }
    }
    let mut z = DVector::zeros(n);
    for i in 0..n_aps {
        z += &est[i] * c[i];
    }
    z
}

struct Tape {
    /// hidden[k][i][m][j]
    hidden: Vec<Vec<Vec<Vec<f64>>>>,
    /// side_in[k][i][m]
    side_in: Vec<Vec<Vec<f64>>>,
    /// est[k][i][m]
    est: Vec<Vec<DVector<f64>>>,
}

impl Tape {
    fn new(layers: usize, n_aps: usize, n: usize, hidden: usize) -> Self {
        Self {
            hidden: vec![vec![vec![vec![0.0; hidden]; n]; n_aps]; layers],
            side_in: vec![vec![vec![0.0; n]; n_aps]; layers],
            est: vec![vec![DVector::zeros(n); n_aps]; layers],
        }
    }
}

/// Decodes one round of payloads into the fused update estimate.
/// Payload `i` must come from AP `i`; the shared compression operator expands
/// each dequantized vector back to model length before the scalar networks.
pub fn decode(
    payloads: &[QuantizedPayload],
    a_mat: &CompressionMatrix,
    weights: &DecoderWeights,
    c: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n_aps = weights.n_aps();
    if payloads.len() != n_aps || c.len() != n_aps {
        return Err(Error::Data(format!(
            "expected {} payloads and weights, got {} payloads",
            n_aps,
            payloads.len()
        )));
    }
    for (i, p) in payloads.iter().enumerate() {
        if p.ap_id as usize != i {
            return Err(Error::Data(format!(
                "payload {i} carries ap_id {}, expected {i}",
                p.ap_id
            )));
        }
    }
    let features: Vec<DVector<f64>> = payloads
        .iter()
        .map(|p| a_mat.reconstruct(&p.dequantize()))
        .collect();
    let n = features[0].len();
    if features.iter().any(|f| f.len() != n) {
        return Err(Error::Dimension("payload lengths disagree".into()));
    }
    Ok(forward(weights, &features, c, None))
}

/// Outcome of a decoder training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub weights: DecoderWeights,
    pub loss_trace: Vec<f64>,
}

const TRAIN_LR: f64 = 1e-2;

fn sample_sources(
    chol: &DMatrix<f64>,
    n_aps: usize,
    n: usize,
    rng: &mut impl rand::Rng,
) -> Vec<DVector<f64>> {
    let mut out = vec![DVector::zeros(n); n_aps];
    let mut z = DVector::zeros(n_aps);
    for m in 0..n {
        for zi in z.iter_mut() {
            *zi = randn(rng);
        }
        let s = chol * &z;
        for i in 0..n_aps {
            out[i][m] = s[i];
        }
    }
    out
}

fn encode_features(
    sources: &[DVector<f64>],
    states: &[EncoderState],
) -> Result<Vec<DVector<f64>>> {
    sources
        .iter()
        .zip(states)
        .map(|(s, st)| {
            let mut local = st.clone();
            local.reset_delta();
            let payload = encode(s, &mut local)?;
            Ok(local.a_mat().reconstruct(&payload.dequantize()))
        })
        .collect()
}

/// Trains the decoder on synthetic correlated Gaussian coordinates pushed
/// through the actual encoders (error accumulators cleared). Plain gradient
/// descent at 1e-2, halved whenever the loss increases; deterministic given
/// the seed. `zero_side` trains the no-side-information variant.
pub fn train_decoder(
    sigma_s: &DMatrix<f64>,
    c: &DVector<f64>,
    encoder_states: &[EncoderState],
    arch: DecoderArch,
    epochs: usize,
    zero_side: bool,
    seed: u64,
) -> Result<TrainReport> {
    let weights = DecoderWeights::random(arch, sigma_s.nrows(), zero_side, seed ^ 0x5eed);
    train_decoder_from(weights, sigma_s, c, encoder_states, epochs, seed)
}

/// Continues training from existing weights (warm start between rounds).
pub fn train_decoder_from(
    mut weights: DecoderWeights,
    sigma_s: &DMatrix<f64>,
    c: &DVector<f64>,
    encoder_states: &[EncoderState],
    epochs: usize,
    seed: u64,
) -> Result<TrainReport> {
    let n_aps = sigma_s.nrows();
    if encoder_states.len() != n_aps || c.len() != n_aps || weights.n_aps() != n_aps {
        return Err(Error::Dimension("encoder states and weights must match AP count".into()));
    }
    let n = encoder_states[0].a_mat().input_len();
    if encoder_states.iter().any(|s| s.a_mat().input_len() != n) {
        return Err(Error::Dimension("encoders disagree on source length".into()));
    }
    let arch = weights.arch;
    let chol = psd_cholesky(sigma_s);
    let mut rng = rng_from_seed(seed);
    if epochs == 0 {
        return Ok(TrainReport { weights, loss_trace: vec![] });
    }

    // fixed training batch: enough vectors to cover a few thousand coordinates
    let batch_vectors = (4096 / n).clamp(1, 64);
    let mut batches = Vec::with_capacity(batch_vectors);
    for _ in 0..batch_vectors {
        let sources = sample_sources(&chol, n_aps, n, &mut rng);
        let features = encode_features(&sources, encoder_states)?;
        let mut target = DVector::zeros(n);
        for i in 0..n_aps {
            target += &sources[i] * c[i];
        }
        batches.push((features, target));
    }

    let mut lr = TRAIN_LR;
    let mut prev_loss = f64::INFINITY;
    let mut best = (weights.clone(), f64::INFINITY);
    let mut trace = Vec::with_capacity(epochs);
    // normalize by the prior per-coordinate variance of the target so the
    // descent step is scale free in the fusion weights
    let target_scale = 1.0 + c.dot(&(sigma_s * c));
    let norm = (batch_vectors * n) as f64 * target_scale;
    for epoch in 0..epochs {
        let mut loss = 0.0;
        let mut grads: Vec<Vec<ScalarNet>> = weights
            .nets
            .iter()
            .map(|layer| layer.iter().map(|net| net.zeros_like()).collect())
            .collect();
        for (features, target) in &batches {
            let mut tape = Tape::new(arch.layers, n_aps, n, arch.hidden);
            let z = forward(&weights, features, c, Some(&mut tape));
            let resid = &z - target;
            loss += resid.norm_squared();
            backward(&weights, features, c, &tape, &resid, norm, &mut grads);
        }
        loss /= norm;
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                last_loss: best.1,
                checkpoint: Box::new(best.0),
            });
        }
        if loss < best.1 {
            best = (weights.clone(), loss);
        }
        if loss > prev_loss {
            lr *= 0.5;
        }
        prev_loss = loss;
        trace.push(loss);
        for (layer, glayer) in weights.nets.iter_mut().zip(&grads) {
            for (net, g) in layer.iter_mut().zip(glayer) {
                net.step(g, lr);
            }
        }
        if !weights.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                last_loss: best.1,
                checkpoint: Box::new(best.0),
            });
        }
    }
    Ok(TrainReport { weights, loss_trace: trace })
}

fn backward(
    weights: &DecoderWeights,
    features: &[DVector<f64>],
    c: &DVector<f64>,
    tape: &Tape,
    resid: &DVector<f64>,
    total_coords: f64,
    grads: &mut [Vec<ScalarNet>],
) {
    let n_aps = weights.n_aps();
    let layers = weights.nets.len();
    let n = resid.len();
    // deltas w.r.t. each branch estimate at the current layer
    let mut d_est: Vec<DVector<f64>> = (0..n_aps)
        .map(|i| resid.map(|r| 2.0 * r / total_coords * c[i]))
        .collect();
    for k in (0..layers).rev() {
        let mut d_side: Vec<DVector<f64>> = vec![DVector::zeros(n); n_aps];
        for i in 0..n_aps {
            let net = &weights.nets[k][i];
            let g = &mut grads[k][i];
            for m in 0..n {
                let delta = d_est[i][m];
                if delta == 0.0 {
                    continue;
                }
                let (_, ds) = net.backward(
                    features[i][m],
                    tape.side_in[k][i][m],
                    &tape.hidden[k][i][m],
                    delta,
                    g,
                );
                d_side[i][m] = ds;
            }
        }
        if k == 0 || weights.zero_side {
            break;
        }
        // side input of branch i at layer k is the sum of other branches'
        // layer k-1 estimates
        for j in 0..n_aps {
            let mut acc = DVector::zeros(n);
            for (i, ds) in d_side.iter().enumerate() {
                if i != j {
                    acc += ds;
                }
            }
            d_est[j] = acc;
        }
    }
}

/// Held-out decoder objective: mean per-coordinate squared error between the
/// weighted source sum and the decoded estimate on fresh synthetic samples.
pub fn decoder_holdout_mse(
    weights: &DecoderWeights,
    sigma_s: &DMatrix<f64>,
    c: &DVector<f64>,
    encoder_states: &[EncoderState],
    n_vectors: usize,
    seed: u64,
) -> Result<f64> {
    let n_aps = sigma_s.nrows();
    let n = encoder_states[0].a_mat().input_len();
    let chol = psd_cholesky(sigma_s);
    let mut rng = rng_from_seed(seed);
    let mut acc = 0.0;
    for _ in 0..n_vectors {
        let sources = sample_sources(&chol, n_aps, n, &mut rng);
        let features = encode_features(&sources, encoder_states)?;
        let z = forward(weights, &features, c, None);
        let mut target = DVector::zeros(n);
        for i in 0..n_aps {
            target += &sources[i] * c[i];
        }
        acc += (z - target).norm_squared() / n as f64;
    }
    Ok(acc / n_vectors as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::alaw_quantize;

    fn corr(n: usize, rho: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho })
    }

    fn states(n_aps: usize, n: usize, rate: f64) -> Vec<EncoderState> {
        (0..n_aps)
            .map(|i| EncoderState::identity(i as u16, n, rate).unwrap())
            .collect()
    }

    #[test]
    fn identity_decoder_reduces_to_weighted_dequantization() {
        let n = 32;
        let n_aps = 3;
        let c = DVector::from_row_slice(&[0.5, 1.0, 1.5]);
        let mut sts = states(n_aps, n, 4.0);
        let mut rng = rng_from_seed(5);
        let payloads: Vec<QuantizedPayload> = sts
            .iter_mut()
            .map(|st| {
                let s = DVector::from_fn(n, |_, _| randn(&mut rng));
                encode(&s, st).unwrap()
            })
            .collect();
        let weights = DecoderWeights::identity(DecoderArch { layers: 1, hidden: 4 }, n_aps);
        let z = decode(&payloads, &CompressionMatrix::identity(n), &weights, &c).unwrap();
        let mut direct = DVector::zeros(n);
        for (i, p) in payloads.iter().enumerate() {
            direct += p.dequantize() * c[i];
        }
        assert_eq!(z, direct);
    }

    #[test]
    fn zero_side_decoder_ignores_other_branches() {
        // with side info forced to zero only the last layer's networks matter
        let n = 16;
        let n_aps = 2;
        let arch = DecoderArch { layers: 3, hidden: 8 };
        let c = DVector::from_row_slice(&[1.0, 0.5]);
        let mut w = DecoderWeights::random(arch, n_aps, true, 31);
        w.zero_side = true;
        let mut last_only = DecoderWeights {
            nets: vec![w.nets.last().unwrap().clone()],
            arch: DecoderArch { layers: 1, hidden: 8 },
            zero_side: true,
        };
        last_only.zero_side = true;
        let mut rng = rng_from_seed(40);
        let features: Vec<DVector<f64>> =
            (0..n_aps).map(|_| DVector::from_fn(n, |_, _| randn(&mut rng))).collect();
        let a = forward(&w, &features, &c, None);
        let b = forward(&last_only, &features, &c, None);
        assert_eq!(a, b);
    }

    #[test]
    fn missing_ap_payload_is_rejected() {
        let n = 8;
        let mut sts = states(2, n, 4.0);
        let s = DVector::from_element(n, 1.0);
        let p0 = encode(&s, &mut sts[0]).unwrap();
        let weights = DecoderWeights::identity(DecoderArch { layers: 1, hidden: 4 }, 2);
        let c = DVector::from_element(2, 1.0);
        let am = CompressionMatrix::identity(n);
        assert!(decode(&[p0.clone()], &am, &weights, &c).is_err());
        let mut wrong = p0.clone();
        wrong.ap_id = 1;
        assert!(decode(&[wrong, p0], &am, &weights, &c).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let n = 6;
        let n_aps = 2;
        let arch = DecoderArch { layers: 2, hidden: 3 };
        let c = DVector::from_row_slice(&[1.0, 0.7]);
        let mut rng = rng_from_seed(13);
        let features: Vec<DVector<f64>> =
            (0..n_aps).map(|_| DVector::from_fn(n, |_, _| randn(&mut rng))).collect();
        let target = DVector::from_fn(n, |_, _| randn(&mut rng));
        let weights = DecoderWeights::random(arch, n_aps, false, 21);

        let loss_of = |w: &DecoderWeights| {
            let z = forward(w, &features, &c, None);
            (z - &target).norm_squared() / n as f64
        };

        let mut grads: Vec<Vec<ScalarNet>> = weights
            .nets
            .iter()
            .map(|layer| layer.iter().map(|net| net.zeros_like()).collect())
            .collect();
        let mut tape = Tape::new(arch.layers, n_aps, n, arch.hidden);
        let z = forward(&weights, &features, &c, Some(&mut tape));
        let resid = &z - &target;
        backward(&weights, &features, &c, &tape, &resid, n as f64, &mut grads);

        let h = 1e-6;
        for k in 0..arch.layers {
            for i in 0..n_aps {
                for j in 0..arch.hidden {
                    let mut wp = weights.clone();
                    wp.nets[k][i].w1_s[j] += h;
                    let mut wm = weights.clone();
                    wm.nets[k][i].w1_s[j] -= h;
                    let fd = (loss_of(&wp) - loss_of(&wm)) / (2.0 * h);
                    let an = grads[k][i].w1_s[j];
                    assert!(
                        (fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()).max(1e-3),
                        "layer {k} ap {i} hidden {j}: fd {fd} vs analytic {an}"
                    );
                }
                let mut wp = weights.clone();
                wp.nets[k][i].skip_s += h;
                let mut wm = weights.clone();
                wm.nets[k][i].skip_s -= h;
                let fd = (loss_of(&wp) - loss_of(&wm)) / (2.0 * h);
                let an = grads[k][i].skip_s;
                assert!(
                    (fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()).max(1e-3),
                    "skip_s layer {k} ap {i}: fd {fd} vs analytic {an}"
                );
            }
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let sigma = corr(2, 0.5);
        let c = DVector::from_element(2, 1.0);
        let sts = states(2, 16, 4.0);
        let arch = DecoderArch { layers: 2, hidden: 4 };
        let a = train_decoder(&sigma, &c, &sts, arch, 0, false, 7).unwrap();
        let b = DecoderWeights::random(arch, 2, false, 7u64 ^ 0x5eed);
        assert_eq!(
            serde_json::to_string(&a.weights).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a.loss_trace.is_empty());
    }

    #[test]
    fn training_is_deterministic_and_descends_on_average() {
        let sigma = corr(2, 0.9);
        let c = DVector::from_element(2, 1.0);
        let sts = states(2, 64, 2.0);
        let arch = DecoderArch { layers: 2, hidden: 8 };
        let a = train_decoder(&sigma, &c, &sts, arch, 60, false, 3).unwrap();
        let b = train_decoder(&sigma, &c, &sts, arch, 60, false, 3).unwrap();
        assert_eq!(a.loss_trace, b.loss_trace);
        let head: f64 = a.loss_trace[..10].iter().sum::<f64>() / 10.0;
        let tail: f64 = a.loss_trace[a.loss_trace.len() - 10..].iter().sum::<f64>() / 10.0;
        assert!(tail <= head, "smoothed loss went up: {head} -> {tail}");
    }

    #[test]
    fn weights_round_trip_through_json() {
        let w = DecoderWeights::random(DecoderArch { layers: 2, hidden: 4 }, 3, false, 9);
        let j = w.to_json().unwrap();
        let back = DecoderWeights::from_json(&j).unwrap();
        assert_eq!(serde_json::to_string(&w).unwrap(), serde_json::to_string(&back).unwrap());
    }

    #[test]
    fn quantize_helper_reexport_sane() {
        // touch the re-exported quantizer so the module wiring stays covered
        assert_eq!(alaw_quantize(&[0.0], 1, 1.0).len(), 1);
    }
}
