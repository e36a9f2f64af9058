//! Alternating system design: per-device norm-constrained quadratic programs
//! for the transmit vectors, closed-form receive vectors and fusion weights,
//! and majorization-minimization over the coding parameter with a log-barrier
//! inner solver.

mod barrier;
mod trs;

pub use barrier::LinLogConstraint;
pub use trs::{solve_trs, TrsSolution};

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::channel::ChannelRealization;
use crate::edge::BeamformerSet;
use crate::error::{Error, Result};
use crate::ldsc::{d_system, rd_feasible, SourceStats, SubsetSlack, SIGMA_V_FLOOR};
use crate::linalg::{
    mask_complement, mask_indices, principal_submatrix, randn, rng_from_seed, submatrix,
    top_eigvec_hermitian,
};

/// `log2(e) / 2`: the factor converting natural-log trace terms to bits.
const HALF_LOG2_E: f64 = 0.5 / std::f64::consts::LN_2;

/// Per-AP aggregates reused by every sub-solver.
#[derive(Debug, Clone)]
struct Aggregates {
    /// `p_i = sum_{k in cell(i)} H_ik alpha_k`
    p: Vec<DVector<Complex<f64>>>,
    /// `V_i = sum_{k in cell(i)} sqrt(v_k)`
    vsum: Vec<f64>,
    /// `G_i = beta_i^H p_i`
    gain: Vec<Complex<f64>>,
    /// `W_i = V_i - c_i G_i`
    w: Vec<Complex<f64>>,
}

fn aggregates(bf: &BeamformerSet, ch: &ChannelRealization, v: &[f64]) -> Aggregates {
    let n_aps = ch.dims().n_aps;
    let mut p = Vec::with_capacity(n_aps);
    let mut vsum = Vec::with_capacity(n_aps);
    let mut gain = Vec::with_capacity(n_aps);
    let mut w = Vec::with_capacity(n_aps);
    for i in 0..n_aps {
        let mut pi = DVector::from_element(ch.dims().n_rx, Complex::new(0.0, 0.0));
        let mut vs = 0.0;
        for &k in ch.topology().cell(i) {
            pi += ch.gain(i, k) * &bf.alpha[k];
            vs += v[k].sqrt();
        }
        let gi = bf.beta[i].dotc(&pi);
        p.push(pi);
        vsum.push(vs);
        gain.push(gi);
        w.push(Complex::new(vs, 0.0) - gi * bf.c[i]);
    }
    Aggregates { p, vsum, gain, w }
}

/// Result of one transmit-vector subproblem.
#[derive(Debug, Clone)]
pub struct AlphaSolution {
    pub alpha: DVector<Complex<f64>>,
    pub kkt_residual: f64,
    pub boundary: bool,
    /// Numerically negative curvature was clamped inside the solver.
    pub regularized: bool,
}

/// Solves the norm-constrained quadratic program for device `k`'s transmit
/// vector with everything else fixed: the residual-mismatch objective is
/// quadratic in the real embedding of `alpha_k` and the power budget is a
/// Euclidean ball of radius `sqrt(P_k / 2)`.
pub fn solve_alpha_k(
    k: usize,
    bf: &BeamformerSet,
    stats: &SourceStats,
    ch: &ChannelRealization,
    v: &[f64],
) -> Result<AlphaSolution> {
    let i0 = ch
        .topology()
        .serving_ap(k)
        .ok_or_else(|| Error::Topology(format!("device {k} has no serving AP")))?;
    let n_t = ch.dims().n_tx;
    let radius = (bf.power_budget[k] / 2.0).sqrt();
    let agg = aggregates(bf, ch, v);
    let s = &stats.sigma_s;
    let c0 = bf.c[i0];
    let s00 = s[(i0, i0)];

    // channel-combiner direction: h^T alpha equals beta^H H alpha
    let h = ch.gain(i0, k).transpose() * bf.beta[i0].map(|z| z.conj());
    let u_cur = h.transpose() * &bf.alpha[k];
    let w_k = Complex::new(v[k].sqrt(), 0.0) - u_cur[(0, 0)] * c0;
    let mut m = Complex::new(0.0, 0.0);
    for i in 0..stats.n_aps() {
        m += agg.w[i] * s[(i0, i)];
    }
    m -= w_k * s00;
    let zeta = (Complex::new(s00 * v[k].sqrt(), 0.0) + m) * c0;
    let quad = s00 * c0 * c0;

    // degenerate objective: any feasible point is stationary
    let h_scale = h.norm();
    if quad * h_scale * h_scale < 1e-300 && (zeta.norm() * h_scale) < 1e-300 {
        return Ok(AlphaSolution {
            alpha: bf.alpha[k].clone(),
            kkt_residual: 0.0,
            boundary: false,
            regularized: false,
        });
    }

    // real embedding: minimize 1/2 x^T A x + g^T x over ||x|| <= radius with
    //   A = 2 quad * Re-embedding of (conj(h) h^T),  g = -2 [Re w; Im w],
    //   w = zeta * conj(h)
    let mr = DMatrix::from_fn(n_t, n_t, |r, c2| (h[r].conj() * h[c2]).re);
    let mi = DMatrix::from_fn(n_t, n_t, |r, c2| (h[r].conj() * h[c2]).im);
    let mut a = DMatrix::zeros(2 * n_t, 2 * n_t);
    for r in 0..n_t {
        for c2 in 0..n_t {
            a[(r, c2)] = 2.0 * quad * mr[(r, c2)];
            a[(r + n_t, c2 + n_t)] = 2.0 * quad * mr[(r, c2)];
            a[(r, c2 + n_t)] = -2.0 * quad * mi[(r, c2)];
            a[(r + n_t, c2)] = 2.0 * quad * mi[(r, c2)];
        }
    }
    let wvec: Vec<Complex<f64>> = (0..n_t).map(|t| h[t].conj() * zeta).collect();
    let g = DVector::from_fn(2 * n_t, |j, _| {
        if j < n_t {
            -2.0 * wvec[j].re
        } else {
            -2.0 * wvec[j - n_t].im
        }
    });
    let sol = solve_trs(&a, &g, radius)?;
    let alpha = DVector::from_fn(n_t, |t, _| Complex::new(sol.x[t], sol.x[t + n_t]));
    Ok(AlphaSolution {
        alpha,
        kkt_residual: sol.kkt_residual,
        boundary: sol.boundary,
        regularized: sol.regularized,
    })
}

/// Result of one receive-vector subproblem.
#[derive(Debug, Clone)]
pub struct BetaSolution {
    pub beta: DVector<Complex<f64>>,
    /// The regularized system was singular and the minimum-norm solution was
    /// returned instead.
    pub pinv_fallback: bool,
}

/// Closed-form receive vector for AP `i` with everything else fixed. The
/// stationary point of the quadratic objective lies along `p_i`; the scalar
/// coefficient balances the source-weighted mismatch against the noise term.
pub fn solve_beta_i(
    i: usize,
    bf: &BeamformerSet,
    stats: &SourceStats,
    ch: &ChannelRealization,
    v: &[f64],
    eps: &[f64],
) -> Result<BetaSolution> {
    let agg = aggregates(bf, ch, v);
    let s = &stats.sigma_s;
    let c_i = bf.c[i];
    if c_i.abs() < 1e-300 {
        // the objective does not depend on beta_i
        return Ok(BetaSolution { beta: bf.beta[i].clone(), pinv_fallback: false });
    }
    let mut rho = Complex::new(0.0, 0.0);
    for j in 0..stats.n_aps() {
        rho += Complex::new(s[(i, j)] * agg.vsum[j], 0.0);
        if j != i {
            rho -= agg.gain[j].conj() * (s[(i, j)] * bf.c[j]);
        }
    }
    let p = &agg.p[i];
    let denom = c_i * (eps[i] + s[(i, i)] * p.norm_squared());
    if denom.abs() < 1e-300 {
        return Ok(BetaSolution {
            beta: DVector::from_element(ch.dims().n_rx, Complex::new(0.0, 0.0)),
            pinv_fallback: true,
        });
    }
    let factor = rho / denom;
    Ok(BetaSolution { beta: p.map(|z| z * factor), pinv_fallback: false })
}

/// Result of the fusion-weight solve.
#[derive(Debug, Clone)]
pub struct CSolution {
    pub c: DVector<f64>,
    /// The textbook right-hand side failed the stationarity check and the
    /// directly assembled normal equations were used instead.
    pub refit: bool,
    /// A ridge term was needed to factor the system.
    pub regularized: bool,
}

/// Fusion weights with everything else fixed. Assembles
/// `M = T + Omega + (S - S (S+V)^{-1} S)` and first tries the right-hand side
/// `S diag(Re G) Vsum`; if the stationarity residual of that solution exceeds
/// `1e-4` of scale, the normal-equation right-hand side `diag(Re G) S Vsum`
/// takes precedence and the discrepancy is flagged.
pub fn solve_c(
    bf: &BeamformerSet,
    stats: &SourceStats,
    ch: &ChannelRealization,
    v: &[f64],
    eps: &[f64],
) -> Result<CSolution> {
    let n_aps = stats.n_aps();
    let agg = aggregates(bf, ch, v);
    let s = &stats.sigma_s;
    let obs_inv = stats
        .observation_cov()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular observation covariance".into()))?;
    let wired = s - s * obs_inv * s;
    let mut m = wired.clone();
    for i in 0..n_aps {
        for j in 0..n_aps {
            m[(i, j)] += s[(i, j)] * (agg.gain[i].conj() * agg.gain[j]).re;
        }
        m[(i, i)] += eps[i] * bf.beta[i].norm_squared();
    }
    let vsum = DVector::from_fn(n_aps, |i, _| agg.vsum[i]);
    let re_g = DVector::from_fn(n_aps, |i, _| agg.gain[i].re);
    let q_paper = s * DVector::from_fn(n_aps, |i, _| re_g[i] * vsum[i]);
    let sv = s * &vsum;
    let q_exact = DVector::from_fn(n_aps, |i, _| re_g[i] * sv[i]);

    let mut regularized = false;
    let solve = |rhs: &DVector<f64>, regularized: &mut bool| -> Result<DVector<f64>> {
        if let Some(sol) = m.clone().lu().solve(rhs) {
            if sol.iter().all(|x| x.is_finite()) {
                return Ok(sol);
            }
        }
        *regularized = true;
        let scale = m.diagonal().amax().max(1e-300);
        let mut reg = m.clone();
        for i in 0..n_aps {
            reg[(i, i)] += 1e-10 * scale;
        }
        reg.lu()
            .solve(rhs)
            .ok_or_else(|| Error::Numeric("singular fusion-weight system".into()))
    };

    let scale = q_exact.norm().max(1e-300);
    let c_first = solve(&q_paper, &mut regularized)?;
    let residual = (&m * &c_first - &q_exact).norm();
    if residual <= 1e-4 * scale {
        return Ok(CSolution { c: c_first, refit: false, regularized });
    }
    let c_exact = solve(&q_exact, &mut regularized)?;
    Ok(CSolution { c: c_exact, refit: true, regularized })
}

/// Tangent-point data of the surrogate subproblem at a fixed coding parameter.
#[derive(Debug, Clone)]
pub struct SurrogateContext {
    /// `b = (S + V_hat)^{-1} S c`
    pub b: DVector<f64>,
    /// `G = S + V_hat`
    pub g_mat: DMatrix<f64>,
    /// Per-subset blocks and the assembled barrier constraints.
    pub subsets: Vec<SurrogateSubset>,
}

#[derive(Debug, Clone)]
pub struct SurrogateSubset {
    pub mask: u32,
    /// `E_K = [S]_{K,Kc} ([S + V_hat]_{Kc})^{-1}` (empty for the full set).
    pub e_mat: DMatrix<f64>,
    /// Schur complement `F_K`, symmetric positive definite.
    pub f_mat: DMatrix<f64>,
    pub constraint: LinLogConstraint,
}

/// Builds the convex surrogate of the rate constraints at `sigma_v_hat`:
/// every log-determinant of the observation covariance is replaced by its
/// tangent, leaving constraints linear in the diagonal entries minus the
/// explicit `-1/2 log2 det([V]_K)` terms.
pub fn surrogate_context(
    sigma_s: &DMatrix<f64>,
    sigma_v_hat: &DVector<f64>,
    c: &DVector<f64>,
    rates: &[f64],
) -> Result<SurrogateContext> {
    let n = sigma_s.nrows();
    let mut obs = sigma_s.clone();
    for i in 0..n {
        obs[(i, i)] += sigma_v_hat[i];
    }
    let obs_inv = obs
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular observation covariance".into()))?;
    let b = &obs_inv * (sigma_s * c);
    let mut subsets = Vec::with_capacity((1usize << n) - 1);
    for mask in 1u32..(1u32 << n) {
        let comp = mask_complement(mask, n);
        let k_idx = mask_indices(mask, n);
        let kc_idx = mask_indices(comp, n);
        let (e_mat, f_mat) = if comp == 0 {
            (DMatrix::zeros(0, 0), obs.clone())
        } else {
            let b_blk = submatrix(sigma_s, mask, comp);
            let c_blk = principal_submatrix(&obs, comp);
            let c_inv = c_blk
                .try_inverse()
                .ok_or_else(|| Error::Numeric("singular complement block".into()))?;
            let e = &b_blk * &c_inv;
            let f = principal_submatrix(&obs, mask) - &e * b_blk.transpose();
            (e, f)
        };
        if f_mat.clone().cholesky().is_none() {
            return Err(Error::Numeric(format!(
                "Schur complement of subset {mask:#b} is not positive definite"
            )));
        }
        let f_inv = f_mat
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("singular Schur complement".into()))?;

        let mut lin = DVector::zeros(n);
        for (a, &i) in k_idx.iter().enumerate() {
            lin[i] = HALF_LOG2_E * f_inv[(a, a)];
        }
        if !kc_idx.is_empty() {
            let efe = e_mat.transpose() * &f_inv * &e_mat;
            for (bidx, &i) in kc_idx.iter().enumerate() {
                lin[i] = HALF_LOG2_E * efe[(bidx, bidx)];
            }
        }
        let mut log_mask = vec![false; n];
        for &i in &k_idx {
            log_mask[i] = true;
        }

        // constant part: trace of F^{-1} applied to the source blocks plus the
        // tangent normalization
        let offset = if comp == 0 {
            HALF_LOG2_E * (&f_inv * sigma_s).trace() + HALF_LOG2_E * f_mat.determinant().ln()
                - n as f64 * HALF_LOG2_E
        } else {
            let s_k = principal_submatrix(sigma_s, mask);
            let s_kc = principal_submatrix(sigma_s, comp);
            let s_k_kc = submatrix(sigma_s, mask, comp);
            let inner = &s_k + &e_mat * &s_kc * e_mat.transpose()
                - &e_mat * s_k_kc.transpose()
                - &s_k_kc * e_mat.transpose();
            HALF_LOG2_E * (&f_inv * inner).trace() + HALF_LOG2_E * f_mat.determinant().ln()
                - k_idx.len() as f64 * HALF_LOG2_E
        };
        let rhs: f64 = k_idx.iter().map(|&i| rates[i]).sum();
        subsets.push(SurrogateSubset {
            mask,
            e_mat,
            f_mat,
            constraint: LinLogConstraint {
                lin,
                log_mask,
                log_coeff: HALF_LOG2_E,
                offset,
                rhs,
            },
        });
    }
    Ok(SurrogateContext { b, g_mat: obs, subsets })
}

/// The quantity the coding-parameter stage maximizes:
/// `c^T S (S + diag(sigma_v))^{-1} S c`.
pub fn retained_information(
    sigma_s: &DMatrix<f64>,
    sigma_v: &DVector<f64>,
    c: &DVector<f64>,
) -> Result<f64> {
    let n = sigma_s.nrows();
    let mut obs = sigma_s.clone();
    for i in 0..n {
        obs[(i, i)] += sigma_v[i];
    }
    let inv = obs
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular observation covariance".into()))?;
    let sc = sigma_s * c;
    Ok(sc.dot(&(&inv * &sc)))
}

/// Finds a feasible diagonal by doubling `tau * I` until the rate region
/// admits it. Fails (naming the tightest subset) when even an enormous
/// coding noise cannot satisfy the budgets.
pub fn feasible_sigma_v(stats: &SourceStats) -> Result<DVector<f64>> {
    if rd_feasible(stats)?.feasible {
        return Ok(stats.sigma_v.clone());
    }
    let n = stats.n_aps();
    let scale = (stats.sigma_s.diagonal().mean()).max(SIGMA_V_FLOOR);
    let mut tau = scale * 1e-6;
    while tau < scale * 1e30 {
        let candidate = stats.with_sigma_v(DVector::from_element(n, tau))?;
        // the barrier needs a strictly interior start, so demand positive slack
        if rd_feasible(&candidate)?.worst_slack > 0.0 {
            return Ok(candidate.sigma_v);
        }
        tau *= 2.0;
    }
    let report = rd_feasible(&stats.with_sigma_v(DVector::from_element(n, scale * 1e30))?)?;
    let tight = report.tightest().expect("nonempty subset list");
    Err(Error::Infeasible(format!(
        "rates cannot support any coding parameter; tightest subset {:#b} needs {:.6} bits, has {:.6}",
        tight.subset, tight.required, tight.budget
    )))
}

/// Outcome of the majorization-minimization stage.
#[derive(Debug, Clone)]
pub struct MmResult {
    pub sigma_v: DVector<f64>,
    /// Original objective per iteration (non-decreasing).
    pub objective_trace: Vec<f64>,
    /// Accepted coding-parameter iterates, starting point included.
    pub iterate_trace: Vec<DVector<f64>>,
    pub iterations: usize,
}

/// Maximizes the retained information over the diagonal coding parameter
/// under the rate constraints by repeatedly solving the tangent surrogate.
pub fn mm_sigma_v(
    stats: &SourceStats,
    c: &DVector<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<MmResult> {
    let mut sigma_v = feasible_sigma_v(stats)?;
    let mut obj = retained_information(&stats.sigma_s, &sigma_v, c)?;
    let mut trace = vec![obj];
    let mut iterates = vec![sigma_v.clone()];
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let ctx = surrogate_context(&stats.sigma_s, &sigma_v, c, &stats.rates)?;
        let f = DVector::from_fn(sigma_v.len(), |i, _| ctx.b[i] * ctx.b[i]);
        let constraints: Vec<LinLogConstraint> =
            ctx.subsets.iter().map(|s| s.constraint.clone()).collect();
        let candidate = barrier::minimize_linear(&f, &constraints, &sigma_v)?
            .map(|v| v.max(SIGMA_V_FLOOR));
        let cand_stats = stats.with_sigma_v(candidate.clone())?;
        if !rd_feasible(&cand_stats)?.feasible {
            break;
        }
        let new_obj = retained_information(&stats.sigma_s, &candidate, c)?;
        if new_obj < obj - 1e-9 {
            break;
        }
        let improvement = new_obj - obj;
        sigma_v = candidate;
        obj = new_obj;
        trace.push(obj);
        iterates.push(sigma_v.clone());
        if improvement < tol * obj.abs().max(1e-300) {
            break;
        }
    }
    Ok(MmResult { sigma_v, objective_trace: trace, iterate_trace: iterates, iterations })
}

/// Per-sweep record of the alternating optimizer.
#[derive(Debug, Clone, Serialize)]
pub struct SweepTrace {
    pub sweep: usize,
    pub objective: f64,
    pub wireless: f64,
    pub noise: f64,
    pub wired: f64,
    pub rate_slacks: Vec<SubsetSlack>,
}

/// Counters for numerically flagged sub-solves.
#[derive(Debug, Clone, Default, Serialize)]
pub struct AoDiagnostics {
    pub alpha_regularized: usize,
    pub beta_pinv: usize,
    pub c_refit: usize,
    pub c_regularized: usize,
}

/// Mutable optimizer state: the current design plus the objective trace.
#[derive(Debug, Clone)]
pub struct AoState {
    pub bf: BeamformerSet,
    pub stats: SourceStats,
    pub objective_trace: Vec<f64>,
    pub sweep_traces: Vec<SweepTrace>,
    pub diagnostics: AoDiagnostics,
}

/// Options for [`alternating_optimize`].
#[derive(Debug, Clone, Copy)]
pub struct AoOptions {
    pub sweeps: usize,
    /// Relative improvement threshold for early exit.
    pub tol: f64,
    /// Skip the coding-parameter stage (it is a measured constant for the
    /// practical codec).
    pub optimize_sigma_v: bool,
    pub mm_max_iters: usize,
    pub mm_tol: f64,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self { sweeps: 10, tol: 1e-10, optimize_sigma_v: true, mm_max_iters: 60, mm_tol: 1e-12 }
    }
}

/// Initial design: transmit vectors at the power boundary along the dominant
/// channel direction, random unit receive vectors, unit fusion weights, and a
/// feasible coding parameter found by doubling.
pub fn initialize_ao(
    ch: &ChannelRealization,
    sigma_s: DMatrix<f64>,
    rates: Vec<f64>,
    power_budget: Vec<f64>,
    seed: u64,
) -> Result<AoState> {
    let dims = ch.dims();
    if power_budget.len() != dims.n_devices {
        return Err(Error::Dimension("one power budget per device required".into()));
    }
    let mut alpha = Vec::with_capacity(dims.n_devices);
    for k in 0..dims.n_devices {
        let i0 = ch
            .topology()
            .serving_ap(k)
            .ok_or_else(|| Error::Topology(format!("device {k} unserved")))?;
        let h = ch.gain(i0, k);
        let gram = h.adjoint() * h;
        let dir = top_eigvec_hermitian(&gram, 60);
        let scale = (power_budget[k] / 2.0).sqrt();
        alpha.push(dir.map(|z| z * scale));
    }
    let mut rng = rng_from_seed(seed);
    let mut beta = Vec::with_capacity(dims.n_aps);
    for _ in 0..dims.n_aps {
        let mut b = DVector::from_fn(dims.n_rx, |_, _| {
            Complex::new(randn(&mut rng), randn(&mut rng))
        });
        let norm = b.norm();
        if norm > 0.0 {
            b = b.map(|z| z / norm);
        }
        beta.push(b);
    }
    let c = DVector::from_element(dims.n_aps, 1.0);
    let sigma_v0 = DVector::from_element(dims.n_aps, SIGMA_V_FLOOR);
    let stats = SourceStats::new(sigma_s, sigma_v0, rates)?;
    let sigma_v = feasible_sigma_v(&stats)?;
    let stats = stats.with_sigma_v(sigma_v)?;
    let bf = BeamformerSet { alpha, beta, c, power_budget };
    Ok(AoState {
        bf,
        stats,
        objective_trace: vec![],
        sweep_traces: vec![],
        diagnostics: AoDiagnostics::default(),
    })
}

/// Runs block-coordinate sweeps: all transmit vectors, all receive vectors,
/// the coding parameter, then the fusion weights. Each stage is an exact
/// minimizer of the shared objective, so the trace is non-increasing. Stops
/// on the sweep budget or when the relative improvement drops below `tol`.
pub fn alternating_optimize(
    mut state: AoState,
    ch: &ChannelRealization,
    v: &[f64],
    eps: &[f64],
    opts: &AoOptions,
) -> Result<AoState> {
    let dims = ch.dims();
    if v.len() != dims.n_devices || eps.len() != dims.n_aps {
        return Err(Error::Dimension("v and eps lengths must match dims".into()));
    }
    let mut prev = d_system(&state.stats, &state.bf, ch, v, eps)?.d_system;
    for sweep in 0..opts.sweeps {
        for k in 0..dims.n_devices {
            let sol = solve_alpha_k(k, &state.bf, &state.stats, ch, v).map_err(|e| {
                Error::Solver { stage: "alpha", detail: e.to_string() }
            })?;
            if sol.regularized {
                state.diagnostics.alpha_regularized += 1;
            }
            state.bf.alpha[k] = sol.alpha;
        }
        for i in 0..dims.n_aps {
            let sol = solve_beta_i(i, &state.bf, &state.stats, ch, v, eps).map_err(|e| {
                Error::Solver { stage: "beta", detail: e.to_string() }
            })?;
            if sol.pinv_fallback {
                state.diagnostics.beta_pinv += 1;
            }
            state.bf.beta[i] = sol.beta;
        }
        if opts.optimize_sigma_v {
            let mm = mm_sigma_v(&state.stats, &state.bf.c, opts.mm_max_iters, opts.mm_tol)
                .map_err(|e| Error::Solver { stage: "sigma_v", detail: e.to_string() })?;
            state.stats = state.stats.with_sigma_v(mm.sigma_v)?;
        }
        let sol = solve_c(&state.bf, &state.stats, ch, v, eps)
            .map_err(|e| Error::Solver { stage: "c", detail: e.to_string() })?;
        if sol.refit {
            state.diagnostics.c_refit += 1;
        }
        if sol.regularized {
            state.diagnostics.c_regularized += 1;
        }
        state.bf.c = sol.c;

        let report = d_system(&state.stats, &state.bf, ch, v, eps)?;
        let slacks = rd_feasible(&state.stats)?.slacks;
        state.objective_trace.push(report.d_system);
        state.sweep_traces.push(SweepTrace {
            sweep,
            objective: report.d_system,
            wireless: report.wireless_term,
            noise: report.noise_term,
            wired: report.wired_term,
            rate_slacks: slacks,
        });
        let improvement = prev - report.d_system;
        prev = report.d_system;
        if improvement < opts.tol * prev.abs().max(1e-300) {
            break;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests;
