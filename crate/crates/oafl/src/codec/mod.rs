//! Practical fronthaul codec: random-projection compression, quantization
//! with error accumulation at each AP, and the layered side-information
//! decoder trained at the server.

pub mod alaw;
mod decoder;

pub use alaw::{alaw_dequantize, alaw_quantize};
pub use decoder::{
    decode, decoder_holdout_mse, train_decoder, train_decoder_from, DecoderArch, DecoderWeights,
    ScalarNet, TrainReport,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{randn, rng_from_seed};

/// Shared compression operator. `Dense` holds a random sketch whose transpose
/// (rescaled) reconstructs; `Identity` keeps the source dimension.
#[derive(Debug, Clone)]
pub enum CompressionMatrix {
    Identity { n: usize },
    Dense { a: DMatrix<f64> },
}

impl CompressionMatrix {
    /// Random sketch with entries N(0, 1/n) so the rescaled transpose is an
    /// unbiased reconstruction.
    pub fn random(n: usize, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma <= 1.0) {
            return Err(Error::Config(format!("compression ratio {sigma} outside (0, 1]")));
        }
        let m = ((n as f64 * sigma).ceil() as usize).max(1);
        if m == n {
            return Ok(Self::Identity { n });
        }
        let std = (1.0 / n as f64).sqrt();
        let mut rng = rng_from_seed(seed);
        Ok(Self::Dense { a: DMatrix::from_fn(m, n, |_, _| std * randn(&mut rng)) })
    }

    pub fn identity(n: usize) -> Self {
        Self::Identity { n }
    }

    /// Source dimension N.
    pub fn input_len(&self) -> usize {
        match self {
            Self::Identity { n } => *n,
            Self::Dense { a } => a.ncols(),
        }
    }

    /// Compressed dimension.
    pub fn output_len(&self) -> usize {
        match self {
            Self::Identity { n } => *n,
            Self::Dense { a } => a.nrows(),
        }
    }

    pub fn compress(&self, s: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Identity { .. } => s.clone(),
            Self::Dense { a } => a * s,
        }
    }

    /// Adjoint reconstruction `(n/m) A^T y`.
    pub fn reconstruct(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Identity { .. } => y.clone(),
            Self::Dense { a } => (a.transpose() * y) * (a.ncols() as f64 / a.nrows() as f64),
        }
    }
}

/// Per-AP encoder state: the shared compression operator, the running
/// quantization-error accumulator, and the rate budget.
#[derive(Debug, Clone)]
pub struct EncoderState {
    pub ap_id: u16,
    a_mat: CompressionMatrix,
    delta: DVector<f64>,
    sigma: f64,
    rate: f64,
}

impl EncoderState {
    pub fn new(ap_id: u16, a_mat: CompressionMatrix, sigma: f64, rate: f64) -> Result<Self> {
        if rate <= 0.0 {
            return Err(Error::Rate(format!("rate {rate} must be positive")));
        }
        let m = a_mat.output_len();
        Ok(Self { ap_id, a_mat, delta: DVector::zeros(m), sigma, rate })
    }

    /// Encoder with a shared random sketch.
    pub fn random(ap_id: u16, n: usize, sigma: f64, rate: f64, seed: u64) -> Result<Self> {
        Self::new(ap_id, CompressionMatrix::random(n, sigma, seed)?, sigma, rate)
    }

    /// Uncompressed encoder (identity sketch).
    pub fn identity(ap_id: u16, n: usize, rate: f64) -> Result<Self> {
        Self::new(ap_id, CompressionMatrix::identity(n), 1.0, rate)
    }

    pub fn a_mat(&self) -> &CompressionMatrix {
        &self.a_mat
    }

    pub fn delta(&self) -> &DVector<f64> {
        &self.delta
    }

    pub fn reset_delta(&mut self) {
        self.delta.fill(0.0);
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Bits per compressed element under the budget `N * r` total bits.
    pub fn bits_per_element(&self) -> Result<u8> {
        let n = self.a_mat.input_len() as f64;
        let m = self.a_mat.output_len() as f64;
        let bits = (n * self.rate / m).floor();
        if bits < 1.0 {
            return Err(Error::Rate(format!(
                "rate {} bits/symbol too small for 1 bit per compressed element",
                self.rate
            )));
        }
        Ok(bits.min(30.0) as u8)
    }
}

/// Quantized fronthaul message of one AP for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPayload {
    pub ap_id: u16,
    pub bits: u8,
    pub scale: f64,
    pub codes: Vec<u32>,
}

impl QuantizedPayload {
    pub fn dequantize(&self) -> DVector<f64> {
        DVector::from_vec(alaw_dequantize(&self.codes, self.bits, self.scale))
    }

    /// Payload size on the wire in bits, excluding the fixed header.
    pub fn payload_bits(&self) -> usize {
        self.codes.len() * self.bits as usize
    }

    /// Serializes as a length-prefixed record: header
    /// `{ap_id: u16, bits: u8, len: u32, scale: f64}` (little endian) followed
    /// by MSB-first bit-packed codes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(15 + (self.payload_bits() + 7) / 8);
        out.extend_from_slice(&self.ap_id.to_le_bytes());
        out.push(self.bits);
        out.extend_from_slice(&(self.codes.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.scale.to_le_bytes());
        let mut acc: u64 = 0;
        let mut nbits: u32 = 0;
        for &code in &self.codes {
            acc = (acc << self.bits) | code as u64;
            nbits += self.bits as u32;
            while nbits >= 8 {
                nbits -= 8;
                out.push(((acc >> nbits) & 0xff) as u8);
            }
        }
        if nbits > 0 {
            out.push(((acc << (8 - nbits)) & 0xff) as u8);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 15 {
            return Err(Error::Data("payload header truncated".into()));
        }
        let ap_id = u16::from_le_bytes([bytes[0], bytes[1]]);
        let bits = bytes[2];
        if bits == 0 || bits > 30 {
            return Err(Error::Data(format!("invalid bit width {bits}")));
        }
        let len = u32::from_le_bytes([bytes[3], bytes[4], bytes[5], bytes[6]]) as usize;
        let scale = f64::from_le_bytes(bytes[7..15].try_into().unwrap());
        let need = (len * bits as usize + 7) / 8;
        let body = &bytes[15..];
        if body.len() < need {
            return Err(Error::Data("payload body truncated".into()));
        }
        let mut codes = Vec::with_capacity(len);
        let mut acc: u64 = 0;
        let mut nbits: u32 = 0;
        let mut pos = 0usize;
        for _ in 0..len {
            while nbits < bits as u32 {
                acc = (acc << 8) | body[pos] as u64;
                pos += 1;
                nbits += 8;
            }
            nbits -= bits as u32;
            codes.push(((acc >> nbits) & ((1u64 << bits) - 1)) as u32);
        }
        Ok(Self { ap_id, bits, scale, codes })
    }
}

/// Encodes one edge update: compress, add the carried error accumulator,
/// quantize, and store the fresh quantization residual for the next round.
pub fn encode(s: &DVector<f64>, state: &mut EncoderState) -> Result<QuantizedPayload> {
    if s.len() != state.a_mat.input_len() {
        return Err(Error::Dimension(format!(
            "source length {} does not match encoder length {}",
            s.len(),
            state.a_mat.input_len()
        )));
    }
    let bits = state.bits_per_element()?;
    let compressed = state.a_mat.compress(s);
    let biased = &compressed + &state.delta;
    let scale = biased.amax().max(1e-30);
    let codes = alaw_quantize(biased.as_slice(), bits, scale);
    let payload = QuantizedPayload { ap_id: state.ap_id, bits, scale, codes };
    state.delta = &biased - payload.dequantize();
    Ok(payload)
}
