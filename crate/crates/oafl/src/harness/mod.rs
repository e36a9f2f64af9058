//! Experiment runner: wires the channel, edge aggregation, fronthaul schemes,
//! and model updates into full training rounds, re-optimizing the system each
//! round, and emits per-round metrics and optimizer traces.
//!
//! Scale convention: each AP normalizes its edge update by a calibration
//! amplitude before fronthaul coding (the amplitude travels error-free with
//! the other per-round scalars). The design pass therefore works on a
//! calibrated channel view whose gains and noise are divided by the same
//! amplitudes, the source statistics are estimated at correlation scale, and
//! the distortion analytics stay unit-consistent with the normalized model
//! updates.

mod config;

pub use config::{
    CodecConfig, DimsConfig, EtaConfig, ExperimentConfig, PathlossConfig, ScalarOrVec, Scheme,
    Seeds, TaskConfig,
};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::time::Instant;

use crate::channel::{sample_channel, ChannelRealization, Topology};
use crate::codec::{
    decode, encode, train_decoder, train_decoder_from, CompressionMatrix, DecoderArch,
    DecoderWeights, EncoderState,
};
use crate::edge::{edge_aggregate_round, BeamformerSet, EdgeUpdate};
use crate::error::{Error, Result};
use crate::fl::{
    apply_global_update, local_gradient, logistic_constants, ridge_constants, GlobalModel,
    LocalUpdate, TaskConstants, TaskData,
};
use crate::ldsc::{
    d_system, decode_test_channel, estimate_sigma_s,
    estimate_sigma_s_correlation, SourceStats,
};
use crate::linalg::derive_seed;
use crate::optimizer::{alternating_optimize, initialize_ao, AoOptions, AoState, SweepTrace};

/// One row of `metrics.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRecord {
    pub round: usize,
    pub scheme: String,
    pub train_loss: f64,
    pub test_metric: f64,
    /// Squared norm of the gradient-estimation error.
    pub mse: f64,
    pub d_system: f64,
    /// Optimality-gap bound after this round (meaningful under the 1/L rate).
    pub bound: f64,
    pub wall_ms: f64,
}

/// Fixed CSV header.
pub const METRICS_HEADER: &str = "round,scheme,train_loss,test_metric,mse,d_system,bound,wall_ms";

/// Renders records with the exact header; floats use the shortest
/// round-trippable representation so identical runs are byte-identical.
pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.round, r.scheme, r.train_loss, r.test_metric, r.mse, r.d_system, r.bound, r.wall_ms
        ));
    }
    out
}

/// Task constants gathered at setup time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RunConstants {
    pub mu: f64,
    pub lipschitz: f64,
    pub loss_star: f64,
    pub initial_gap: f64,
    pub model_len: usize,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<MetricsRecord>,
    pub trace: serde_json::Value,
    pub constants: RunConstants,
    pub final_theta: DVector<f64>,
}

#[derive(Serialize)]
struct RoundTrace {
    round: usize,
    sweeps: Vec<SweepTrace>,
    d_terms: crate::ldsc::DistortionReport,
    calibration: Vec<f64>,
}

/// Direct per-AP quantization baseline: companding quantization of each edge
/// update at `floor(r_i)` bits with no compression, error feedback, or
/// decoding networks; the server takes the weighted sum of dequantized
/// vectors.
pub fn baseline_quantization(
    edge: &[EdgeUpdate],
    c: &DVector<f64>,
    rates: &[f64],
) -> Result<DVector<f64>> {
    if edge.len() != c.len() || edge.len() != rates.len() {
        return Err(Error::Dimension("edge updates, weights, rates must agree".into()));
    }
    let n = edge[0].s.len();
    let mut z = DVector::zeros(n);
    for (i, e) in edge.iter().enumerate() {
        let mut state = EncoderState::identity(i as u16, n, rates[i])?;
        let payload = encode(&e.s, &mut state)?;
        z += payload.dequantize() * c[i];
    }
    Ok(z)
}

struct RoundContext {
    updates: Vec<LocalUpdate>,
    v: Vec<f64>,
    gbars: Vec<f64>,
    sum_target: DVector<f64>,
}

fn device_round(
    model: &GlobalModel,
    shards: &[TaskData],
    local_steps: usize,
) -> Result<RoundContext> {
    let mut updates = Vec::with_capacity(shards.len());
    for shard in shards {
        updates.push(local_gradient(model, shard, local_steps)?);
    }
    let v = updates.iter().map(|u| u.v).collect();
    let gbars = updates.iter().map(|u| u.gbar).collect();
    let mut sum_target = DVector::zeros(model.padded_len());
    for u in &updates {
        sum_target += &u.g_norm * u.v.sqrt();
    }
    Ok(RoundContext { updates, v, gbars, sum_target })
}

fn subsample(s: &DVector<f64>, len: usize) -> DVector<f64> {
    let take = len.min(s.len());
    DVector::from_iterator(take, s.iter().take(take).cloned())
}

/// Per-AP empirical second moment of a subsample.
fn amplitude(s: &DVector<f64>) -> f64 {
    (s.norm_squared() / s.len().max(1) as f64).max(1e-300)
}

/// Coding-noise diagonal measured from the quantizer residual on a subsample
/// (identity compression, `floor(r)` bits), per the practical-design recipe.
/// The residual power is normalized by the subsample power so the estimate
/// describes a unit-variance source.
fn measured_sigma_v(subs: &[DVector<f64>], rates: &[f64]) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(subs.len());
    for (i, sub) in subs.iter().enumerate() {
        let mut st = EncoderState::identity(i as u16, sub.len(), rates[i])?;
        let payload = encode(sub, &mut st)?;
        let resid = sub - payload.dequantize();
        let rel = resid.norm_squared() / sub.norm_squared().max(1e-300);
        out[i] = rel.max(crate::ldsc::SIGMA_V_FLOOR);
    }
    Ok(out)
}

struct SchemeState {
    encoders: Vec<EncoderState>,
    a_mat: CompressionMatrix,
    decoder: Option<DecoderWeights>,
}

/// Final per-device calibration after the block design: rotates and scales
/// each transmit vector so its own effective gain lands on `sqrt(v_k) / c_i`
/// (clipped at the power boundary). The per-AP gain sums the optimizer
/// matched are preserved, the noise and coding terms do not involve the
/// transmit vectors, and the per-device residuals become real non-negative,
/// which is the regime where the summed mismatch term genuinely dominates
/// the per-device error.
fn align_device_gains(
    bf: &BeamformerSet,
    design_ch: &ChannelRealization,
    v: &[f64],
) -> BeamformerSet {
    let mut out = bf.clone();
    for i in 0..design_ch.dims().n_aps {
        let c_i = bf.c[i];
        if c_i.abs() < 1e-300 {
            continue;
        }
        for &k in design_ch.topology().cell(i) {
            let gain = crate::edge::effective_gain(&bf.beta[i], design_ch.gain(i, k), &bf.alpha[k]);
            if gain.norm_sqr() < 1e-300 {
                continue;
            }
            let tau = nalgebra::Complex::new(v[k].sqrt() / c_i, 0.0) / gain;
            if !tau.re.is_finite() || !tau.im.is_finite() {
                continue;
            }
            let mut alpha = bf.alpha[k].map(|z| z * tau);
            let used = 2.0 * alpha.norm_squared();
            if used > bf.power_budget[k] {
                let shrink = (bf.power_budget[k] / used).sqrt();
                alpha = alpha.map(|z| z * shrink);
            }
            out.alpha[k] = alpha;
        }
    }
    out
}

/// Predicted per-coordinate variance of each AP's normalized edge update
/// under the current design: squared aggregate effective gain plus the
/// combined receiver noise, all on the calibrated channel view.
fn predicted_amplitudes(bf: &BeamformerSet, design_ch: &ChannelRealization) -> Vec<f64> {
    let n_aps = design_ch.dims().n_aps;
    (0..n_aps)
        .map(|i| {
            let g: nalgebra::Complex<f64> = design_ch
                .topology()
                .cell(i)
                .iter()
                .map(|&k| {
                    crate::edge::effective_gain(&bf.beta[i], design_ch.gain(i, k), &bf.alpha[k])
                })
                .sum();
            let noise = design_ch.noise_variance(i) * bf.beta[i].norm_squared() / 2.0;
            (g.norm_sqr() + noise).max(1e-300)
        })
        .collect()
}

/// Runs a full experiment. Deterministic given the config (wall-clock timing
/// is recorded only when `record_wall_time` is set, so metric files from
/// identical configs are byte-identical).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let dims = cfg.dims.to_dims();
    let topology = match &cfg.topology {
        Some(cells) => Topology::new(cells.clone(), dims.n_devices)?,
        None => Topology::even(dims.n_aps, dims.n_devices),
    };
    let pathloss = cfg.pathloss.to_params(&dims);
    let noise_linear = vec![cfg.noise_linear(); dims.n_aps];
    let power = cfg.power_per_device();
    let rates = cfg.rates_per_ap();

    // task, shards, constants
    let (train, test) = cfg.task.build(cfg.seeds.data)?;
    let shards = cfg.task.partition(&train, dims.n_devices, cfg.q, cfg.seeds.data)?;
    let constants = match &cfg.task {
        TaskConfig::Ridge { .. } => ridge_constants(&train)?,
        TaskConfig::LogisticMnist { .. } => logistic_constants(&train, 400)?,
    };
    let TaskConstants { mu, lipschitz, theta_star: _, loss_star } = constants;

    let eta0 = cfg.eta.rate_for_round(1, lipschitz);
    let mut model = GlobalModel::zeros(train.theta_len(), eta0)?;
    let n = model.padded_len();
    let initial_gap = train.loss_sum(&model.theta()) - loss_star;
    let run_constants = RunConstants { mu, lipschitz, loss_star, initial_gap, model_len: n };

    // persistent cross-round state
    let mut bf: Option<BeamformerSet> = None;
    let mut sigma_v_warm: Option<DVector<f64>> = None;
    let mut sigma_s_est: Option<DMatrix<f64>> = None;
    let mut calibration: Vec<f64> = vec![1.0; dims.n_aps];
    let mut scheme_state: Option<SchemeState> = None;
    let mut bound = initial_gap;
    let contraction = 1.0 - mu / lipschitz;

    let mut records = Vec::with_capacity(cfg.rounds);
    let mut round_traces: Vec<RoundTrace> = Vec::new();
    let scheme_tag = cfg.scheme.tag().to_string();

    for t in 1..=cfg.rounds {
        let started = Instant::now();
        model.eta = cfg.eta.rate_for_round(t, lipschitz);
        let ctx = device_round(&model, &shards, cfg.local_steps)?;

        if cfg.scheme == Scheme::ErrorFree {
            model = apply_global_update(&model, &ctx.sum_target, &ctx.gbars)?;
            bound *= contraction;
            let train_loss = train.loss_sum(&model.theta());
            records.push(MetricsRecord {
                round: t,
                scheme: scheme_tag.clone(),
                train_loss,
                test_metric: test_metric(&test, &model),
                mse: 0.0,
                d_system: 0.0,
                bound,
                wall_ms: elapsed_ms(cfg, started),
            });
            continue;
        }

        let ch = sample_channel(
            &pathloss,
            &dims,
            &topology,
            &noise_linear,
            derive_seed(cfg.seeds.channel, t as u64),
        )?;

        // bootstrap the design state with a probe transmission
        if bf.is_none() {
            let init = initialize_ao(
                &ch,
                DMatrix::identity(dims.n_aps, dims.n_aps),
                rates.clone(),
                power.clone(),
                cfg.seeds.init,
            )?;
            let probe = edge_aggregate_round(
                &ctx.updates,
                &ch,
                &init.bf,
                derive_seed(cfg.seeds.noise, 0x9999 ^ t as u64),
            )?;
            let subs: Vec<DVector<f64>> =
                probe.iter().map(|e| subsample(&e.s, cfg.sigma_s_probe)).collect();
            sigma_s_est = Some(estimate_sigma_s_correlation(&subs)?);
            calibration = subs.iter().map(amplitude).collect();
            bf = Some(init.bf);
        }

        // calibrated design view: per-AP gains and noise divided by the
        // fronthaul normalization amplitudes
        let cal_factors: Vec<f64> = calibration.iter().map(|w| 1.0 / w.sqrt()).collect();
        let design_ch = ch.scaled_per_ap(&cal_factors)?;
        let eps_design: Vec<f64> = design_ch.epsilons(n);

        let sigma_s = sigma_s_est.clone().expect("estimated above");
        let sigma_v0 = sigma_v_warm
            .clone()
            .unwrap_or_else(|| DVector::from_element(dims.n_aps, crate::ldsc::SIGMA_V_FLOOR));

        // for the practical codec the coding parameter is measured, not optimized
        let optimize_sigma_v = cfg.scheme == Scheme::LdscBound;
        let mut stats = SourceStats::new(sigma_s.clone(), sigma_v0, rates.clone())?;
        if !optimize_sigma_v {
            let subs = normalized_probe_subsample(
                &ctx,
                &ch,
                bf.as_ref().unwrap(),
                &calibration,
                cfg,
                t,
            )?;
            stats =
                SourceStats::new(sigma_s.clone(), measured_sigma_v(&subs, &rates)?, rates.clone())?;
        }

        let ao_state = AoState {
            bf: bf.clone().unwrap(),
            stats,
            objective_trace: vec![],
            sweep_traces: vec![],
            diagnostics: Default::default(),
        };
        let opts = AoOptions {
            sweeps: cfg.ao_sweeps,
            tol: cfg.ao_tol,
            optimize_sigma_v,
            ..Default::default()
        };
        let ao = alternating_optimize(ao_state, &design_ch, &ctx.v, &eps_design, &opts)?;
        let stats = ao.stats.clone();
        sigma_v_warm = Some(stats.sigma_v.clone());

        // pin the receive-side scale: jointly rescaling (beta, c) leaves the
        // mismatch and noise terms invariant while making the predicted
        // variance of each normalized edge update exactly one, so the
        // unit-scale source statistics describe what the fronthaul codes and
        // the calibration amplitudes stay bounded over rounds
        let mut designed = ao.bf.clone();
        let w_pred = predicted_amplitudes(&designed, &design_ch);
        for i in 0..dims.n_aps {
            let t = 1.0 / w_pred[i].sqrt().clamp(1e-150, 1e150);
            designed.beta[i] = designed.beta[i].map(|z| z * t);
            designed.c[i] /= t;
        }
        bf = Some(align_device_gains(&designed, &design_ch, &ctx.v));
        let bf_now = bf.as_ref().unwrap();

        // physical transmission with the raw channel, then per-AP normalization
        let edges_raw = edge_aggregate_round(
            &ctx.updates,
            &ch,
            bf_now,
            derive_seed(cfg.seeds.noise, t as u64),
        )?;
        let edges_norm: Vec<EdgeUpdate> = edges_raw
            .iter()
            .zip(&calibration)
            .map(|(e, w)| EdgeUpdate { s: &e.s / w.sqrt() })
            .collect();

        // fronthaul stage
        let z_hat = match cfg.scheme {
            Scheme::ErrorFree => unreachable!(),
            Scheme::LdscBound => decode_test_channel(
                &edges_norm,
                &stats,
                &bf_now.c,
                derive_seed(cfg.seeds.noise, 0x7000 ^ t as u64),
            )?,
            Scheme::Quantization => baseline_quantization(&edges_norm, &bf_now.c, &rates)?,
            Scheme::Practical | Scheme::PracticalZeroSide => {
                let zero_side = cfg.scheme == Scheme::PracticalZeroSide;
                let state = match scheme_state.as_mut() {
                    Some(s) => s,
                    None => {
                        let a_seed = derive_seed(cfg.seeds.init, 0xa0a0);
                        let a_mat = CompressionMatrix::random(n, cfg.sigma, a_seed)?;
                        let encoders: Vec<EncoderState> = (0..dims.n_aps)
                            .map(|i| {
                                EncoderState::new(i as u16, a_mat.clone(), cfg.sigma, rates[i])
                            })
                            .collect::<Result<_>>()?;
                        scheme_state = Some(SchemeState { encoders, a_mat, decoder: None });
                        scheme_state.as_mut().unwrap()
                    }
                };
                let arch = DecoderArch { layers: cfg.codec.k_layers, hidden: cfg.codec.hidden };
                let train_seed = derive_seed(cfg.seeds.training, t as u64);
                let report = match state.decoder.take() {
                    None => train_decoder(
                        &stats.sigma_s,
                        &bf_now.c,
                        &state.encoders,
                        arch,
                        cfg.codec.train_epochs,
                        zero_side,
                        train_seed,
                    )?,
                    Some(w) => train_decoder_from(
                        w,
                        &stats.sigma_s,
                        &bf_now.c,
                        &state.encoders,
                        cfg.codec.finetune_epochs,
                        train_seed,
                    )?,
                };
                state.decoder = Some(report.weights);
                let mut payloads = Vec::with_capacity(dims.n_aps);
                for (i, e) in edges_norm.iter().enumerate() {
                    if !cfg.codec.error_feedback {
                        state.encoders[i].reset_delta();
                    }
                    payloads.push(encode(&e.s, &mut state.encoders[i])?);
                }
                decode(&payloads, &state.a_mat, state.decoder.as_ref().unwrap(), &bf_now.c)?
            }
        };

        // model update and metrics
        let err = &ctx.sum_target - &z_hat;
        let mse = err.norm_squared();
        model = apply_global_update(&model, &z_hat, &ctx.gbars)?;
        let report = d_system(&stats, bf_now, &design_ch, &ctx.v, &eps_design)?;
        bound = contraction * bound + (n as f64 / lipschitz) * report.d_system;
        let train_loss = train.loss_sum(&model.theta());
        records.push(MetricsRecord {
            round: t,
            scheme: scheme_tag.clone(),
            train_loss,
            test_metric: test_metric(&test, &model),
            mse,
            d_system: report.d_system,
            bound,
            wall_ms: elapsed_ms(cfg, started),
        });
        round_traces.push(RoundTrace {
            round: t,
            sweeps: ao.sweep_traces.clone(),
            d_terms: report,
            calibration: calibration.clone(),
        });

        // refresh statistics and calibration from the realized transmission
        if cfg.sigma_s_refresh || t == 1 {
            let subs: Vec<DVector<f64>> =
                edges_norm.iter().map(|e| subsample(&e.s, cfg.sigma_s_probe)).collect();
            sigma_s_est = Some(estimate_sigma_s_correlation(&subs)?);
            for (w, sub) in calibration.iter_mut().zip(&subs) {
                *w = (*w * amplitude(sub)).max(1e-300);
            }
        }
    }

    Ok(RunOutput {
        records,
        trace: serde_json::json!({
            "scheme": scheme_tag,
            "rounds": round_traces,
            "constants": run_constants,
        }),
        constants: run_constants,
        final_theta: model.theta(),
    })
}

/// Normalized subsamples for the coding-noise measurement, obtained from a
/// probe with the current design (the measurement must precede transmission).
fn normalized_probe_subsample(
    ctx: &RoundContext,
    ch: &ChannelRealization,
    bf: &BeamformerSet,
    calibration: &[f64],
    cfg: &ExperimentConfig,
    t: usize,
) -> Result<Vec<DVector<f64>>> {
    let probe = edge_aggregate_round(
        &ctx.updates,
        ch,
        bf,
        derive_seed(cfg.seeds.noise, 0x5555 ^ t as u64),
    )?;
    Ok(probe
        .iter()
        .zip(calibration)
        .map(|(e, w)| subsample(&e.s, cfg.sigma_s_probe) / w.sqrt())
        .collect())
}

fn test_metric(test: &TaskData, model: &GlobalModel) -> f64 {
    let theta = model.theta();
    test.accuracy(&theta)
        .or_else(|| test.mean_squared_error(&theta))
        .unwrap_or(f64::NAN)
}

fn elapsed_ms(cfg: &ExperimentConfig, started: Instant) -> f64 {
    if cfg.record_wall_time {
        started.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

/// One-shot design pass on a frozen round: samples the channel, computes the
/// round's updates, estimates statistics from a probe, and runs the
/// alternating optimizer, returning its state and sweep trace.
pub fn optimize_once(cfg: &ExperimentConfig) -> Result<(AoState, serde_json::Value)> {
    cfg.validate()?;
    let dims = cfg.dims.to_dims();
    let topology = match &cfg.topology {
        Some(cells) => Topology::new(cells.clone(), dims.n_devices)?,
        None => Topology::even(dims.n_aps, dims.n_devices),
    };
    let pathloss = cfg.pathloss.to_params(&dims);
    let noise_linear = vec![cfg.noise_linear(); dims.n_aps];
    let (train, _) = cfg.task.build(cfg.seeds.data)?;
    let shards = cfg.task.partition(&train, dims.n_devices, cfg.q, cfg.seeds.data)?;
    let constants = match &cfg.task {
        TaskConfig::Ridge { .. } => ridge_constants(&train)?,
        TaskConfig::LogisticMnist { .. } => logistic_constants(&train, 200)?,
    };
    let model =
        GlobalModel::zeros(train.theta_len(), cfg.eta.rate_for_round(1, constants.lipschitz))?;
    let n = model.padded_len();
    let ctx = device_round(&model, &shards, cfg.local_steps)?;
    let ch = sample_channel(
        &pathloss,
        &dims,
        &topology,
        &noise_linear,
        derive_seed(cfg.seeds.channel, 1),
    )?;
    let init = initialize_ao(
        &ch,
        DMatrix::identity(dims.n_aps, dims.n_aps),
        cfg.rates_per_ap(),
        cfg.power_per_device(),
        cfg.seeds.init,
    )?;
    let probe =
        edge_aggregate_round(&ctx.updates, &ch, &init.bf, derive_seed(cfg.seeds.noise, 0x9998))?;
    let subs: Vec<DVector<f64>> =
        probe.iter().map(|e| subsample(&e.s, cfg.sigma_s_probe)).collect();
    let sigma_s = estimate_sigma_s_correlation(&subs)?;
    let calibration: Vec<f64> = subs.iter().map(amplitude).collect();
    let cal_factors: Vec<f64> = calibration.iter().map(|w| 1.0 / w.sqrt()).collect();
    let design_ch = ch.scaled_per_ap(&cal_factors)?;
    let eps: Vec<f64> = (0..dims.n_aps).map(|i| ch.epsilon(i, n) / calibration[i]).collect();
    let state = AoState {
        bf: init.bf,
        stats: SourceStats::new(sigma_s, init.stats.sigma_v.clone(), cfg.rates_per_ap())?,
        objective_trace: vec![],
        sweep_traces: vec![],
        diagnostics: Default::default(),
    };
    let opts = AoOptions { sweeps: cfg.ao_sweeps, tol: cfg.ao_tol, ..Default::default() };
    let out = alternating_optimize(state, &design_ch, &ctx.v, &eps, &opts)?;
    let trace = serde_json::json!({
        "sweeps": out.sweep_traces,
        "diagnostics": out.diagnostics,
        "calibration": calibration,
    });
    Ok((out, trace))
}

/// Raw covariance estimate re-exported for the feasibility CLI.
pub fn estimate_sigma_s_raw(subvectors: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    estimate_sigma_s(subvectors)
}
