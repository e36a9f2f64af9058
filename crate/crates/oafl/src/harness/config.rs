//! Experiment configuration: one JSON document, all randomness funneled
//! through named seeds.

use serde::{Deserialize, Serialize};

use crate::channel::{Dims, PathlossParams};
use crate::error::{Error, Result};
use crate::fl::{
    load_mnist_idx, logistic_task, partition_dataset, partition_iid, synthetic_ridge, TaskData,
};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DimsConfig {
    pub n_aps: usize,
    pub n_devices: usize,
    pub n_rx: usize,
    pub n_tx: usize,
}

impl DimsConfig {
    pub fn to_dims(self) -> Dims {
        Dims { n_aps: self.n_aps, n_devices: self.n_devices, n_rx: self.n_rx, n_tx: self.n_tx }
    }
}

/// Uniform large-scale fading parameters in dB, as they appear in link
/// budgets; converted to linear scale once at channel construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathlossConfig {
    pub gain_ap_dbi: f64,
    pub gain_dev_dbi: f64,
    pub exponent: f64,
    pub reference_loss_db: f64,
    pub distance_m: f64,
}

impl PathlossConfig {
    pub fn to_params(&self, dims: &Dims) -> PathlossParams {
        PathlossParams::uniform(
            dims.n_aps,
            dims.n_devices,
            self.gain_ap_dbi,
            self.gain_dev_dbi,
            self.exponent,
            self.reference_loss_db,
            self.distance_m,
        )
    }
}

/// Fronthaul schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ErrorFree,
    LdscBound,
    Practical,
    PracticalZeroSide,
    Quantization,
}

impl Scheme {
    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::ErrorFree => "error-free",
            Scheme::LdscBound => "ldsc-bound",
            Scheme::Practical => "practical",
            Scheme::PracticalZeroSide => "practical-zero-side",
            Scheme::Quantization => "quantization",
        }
    }
}

/// The training task.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskConfig {
    Ridge {
        n_features: usize,
        n_samples: usize,
        #[serde(default)]
        test_samples: usize,
        noise_std: f64,
        lambda: f64,
    },
    LogisticMnist {
        images: std::path::PathBuf,
        labels: std::path::PathBuf,
        train_samples: usize,
        test_samples: usize,
        lambda: f64,
    },
}

impl TaskConfig {
    /// Materializes (train, test) datasets.
    pub fn build(&self, seed: u64) -> Result<(TaskData, TaskData)> {
        match self {
            TaskConfig::Ridge { n_features, n_samples, test_samples, noise_std, lambda } => {
                let total = n_samples + test_samples;
                let all = synthetic_ridge(total, *n_features, *noise_std, *lambda, seed);
                let train_idx: Vec<usize> = (0..*n_samples).collect();
                let test_idx: Vec<usize> = (*n_samples..total).collect();
                let test = if test_idx.is_empty() {
                    all.subset(&train_idx)
                } else {
                    all.subset(&test_idx)
                };
                Ok((all.subset(&train_idx), test))
            }
            TaskConfig::LogisticMnist { images, labels, train_samples, test_samples, lambda } => {
                let (x, labs) = load_mnist_idx(images, labels, Some(train_samples + test_samples))?;
                let all = logistic_task(x, labs, *lambda);
                let train_idx: Vec<usize> = (0..*train_samples).collect();
                let test_idx: Vec<usize> =
                    (*train_samples..(train_samples + test_samples).min(all.n_samples())).collect();
                let test = if test_idx.is_empty() {
                    all.subset(&train_idx)
                } else {
                    all.subset(&test_idx)
                };
                Ok((all.subset(&train_idx), test))
            }
        }
    }

    /// Splits the training set across devices; labeled tasks honor the
    /// class-limit `q` when it is set.
    pub fn partition(
        &self,
        train: &TaskData,
        n_devices: usize,
        q: Option<usize>,
        seed: u64,
    ) -> Result<Vec<TaskData>> {
        match (self, q) {
            (TaskConfig::LogisticMnist { .. }, Some(q)) => {
                partition_dataset(train, n_devices, q, seed)
            }
            _ => Ok(partition_iid(train, n_devices, seed)),
        }
    }
}

/// Learning-rate schedule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EtaConfig {
    /// `1/L`, the rate the convergence bound assumes.
    InvL,
    Fixed { value: f64 },
    /// `base / (1 + t / decay)` decaying schedule.
    Decay { base: f64, decay: f64 },
}

impl EtaConfig {
    pub fn rate_for_round(&self, round: usize, lipschitz: f64) -> f64 {
        match self {
            EtaConfig::InvL => 1.0 / lipschitz,
            EtaConfig::Fixed { value } => *value,
            EtaConfig::Decay { base, decay } => base / (1.0 + (round as f64 - 1.0) / decay),
        }
    }
}

/// Named RNG seeds; every random draw in a run derives from one of these.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Seeds {
    pub channel: u64,
    pub noise: u64,
    pub data: u64,
    pub init: u64,
    pub training: u64,
}

impl Seeds {
    pub fn from_master(master: u64) -> Self {
        use crate::linalg::derive_seed;
        Self {
            channel: derive_seed(master, 1),
            noise: derive_seed(master, 2),
            data: derive_seed(master, 3),
            init: derive_seed(master, 4),
            training: derive_seed(master, 5),
        }
    }
}

/// Practical-codec knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CodecConfig {
    #[serde(default = "default_k_layers")]
    pub k_layers: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    /// Epochs for the initial decoder fit.
    #[serde(default = "default_train_epochs")]
    pub train_epochs: usize,
    /// Epochs per later round (warm start).
    #[serde(default = "default_finetune_epochs")]
    pub finetune_epochs: usize,
    /// Carry the quantization residual into the next round.
    #[serde(default = "default_true")]
    pub error_feedback: bool,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            k_layers: default_k_layers(),
            hidden: default_hidden(),
            train_epochs: default_train_epochs(),
            finetune_epochs: default_finetune_epochs(),
            error_feedback: true,
        }
    }
}

fn default_k_layers() -> usize {
    3
}
fn default_hidden() -> usize {
    16
}
fn default_train_epochs() -> usize {
    150
}
fn default_finetune_epochs() -> usize {
    10
}
fn default_true() -> bool {
    true
}
fn default_sigma() -> f64 {
    1.0
}
fn default_rounds() -> usize {
    20
}
fn default_local_steps() -> usize {
    1
}
fn default_probe() -> usize {
    512
}
fn default_ao_sweeps() -> usize {
    5
}
fn default_ao_tol() -> f64 {
    1e-8
}

/// Scalar broadcast or explicit per-entry list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    pub fn expand(&self, len: usize) -> Vec<f64> {
        match self {
            ScalarOrVec::Scalar(v) => vec![*v; len],
            ScalarOrVec::Vec(v) => v.clone(),
        }
    }
}

/// Full experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dims: DimsConfig,
    /// Device indices per AP; near-even split when omitted.
    #[serde(default)]
    pub topology: Option<Vec<Vec<usize>>>,
    pub pathloss: PathlossConfig,
    /// Receiver noise power in dBm.
    pub noise_dbm: f64,
    /// Transmit power budget in watts (scalar or per device).
    pub power_w: ScalarOrVec,
    /// Fronthaul rate in bits/symbol (scalar or per AP).
    pub rates: ScalarOrVec,
    /// Compression ratio of the practical encoder.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    pub scheme: Scheme,
    pub task: TaskConfig,
    /// Classes per device for heterogeneous labeled partitions.
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_local_steps")]
    pub local_steps: usize,
    pub eta: EtaConfig,
    pub seeds: Seeds,
    #[serde(default = "default_ao_sweeps")]
    pub ao_sweeps: usize,
    #[serde(default = "default_ao_tol")]
    pub ao_tol: f64,
    #[serde(default)]
    pub codec: CodecConfig,
    /// Subsample size used to estimate source statistics.
    #[serde(default = "default_probe")]
    pub sigma_s_probe: usize,
    /// Re-estimate statistics every round (otherwise only at round one).
    #[serde(default = "default_true")]
    pub sigma_s_refresh: bool,
    /// Record wall-clock timings (off by default so metric files are
    /// byte-identical across runs).
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn noise_linear(&self) -> f64 {
        10f64.powf((self.noise_dbm - 30.0) / 10.0)
    }

    pub fn power_per_device(&self) -> Vec<f64> {
        self.power_w.expand(self.dims.n_devices)
    }

    pub fn rates_per_ap(&self) -> Vec<f64> {
        self.rates.expand(self.dims.n_aps)
    }

    pub fn with_seed_override(mut self, master: u64) -> Self {
        self.seeds = Seeds::from_master(master);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.to_dims().validate()?;
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be >= 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(Error::Config(format!("sigma {} outside (0, 1]", self.sigma)));
        }
        if self.power_per_device().len() != self.dims.n_devices {
            return Err(Error::Config("power list length != n_devices".into()));
        }
        if self.rates_per_ap().len() != self.dims.n_aps {
            return Err(Error::Config("rate list length != n_aps".into()));
        }
        if self.sigma_s_probe == 0 {
            return Err(Error::Config("sigma_s_probe must be >= 1".into()));
        }
        if let TaskConfig::LogisticMnist { images, labels, .. } = &self.task {
            if !images.exists() || !labels.exists() {
                return Err(Error::Config("referenced IDX files do not exist".into()));
            }
        }
        Ok(())
    }
}
