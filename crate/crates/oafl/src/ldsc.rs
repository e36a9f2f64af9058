//! Fronthaul rate-distortion analytics: source statistics estimation, the
//! achievable-region feasibility check, the fused-aggregation distortion, the
//! per-round system distortion, and a simulated ideal fronthaul decoder.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::edge::{effective_gain, BeamformerSet, EdgeUpdate};
use crate::error::{Error, Result};
use crate::linalg::{
    det_principal, is_symmetric, mask_indices, min_eig_sym, psd_project,
    randn, rng_from_seed,
};

/// Smallest allowed diagonal entry of the coding parameter.
pub const SIGMA_V_FLOOR: f64 = 1e-9;
/// Worst slack tolerated before a rate tuple is declared infeasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Subset enumeration cap.
pub const MAX_APS: usize = 16;

/// Source covariance, coding parameter, and per-AP rate budgets.
#[derive(Debug, Clone)]
pub struct SourceStats {
    /// Symmetric PSD covariance of the per-coordinate edge updates.
    pub sigma_s: DMatrix<f64>,
    /// Diagonal of the coding parameter (test-channel noise), entries > 0.
    pub sigma_v: DVector<f64>,
    /// Rate budget per AP, bits per symbol.
    pub rates: Vec<f64>,
}

impl SourceStats {
    pub fn new(sigma_s: DMatrix<f64>, sigma_v: DVector<f64>, rates: Vec<f64>) -> Result<Self> {
        let n = sigma_s.nrows();
        if n == 0 || n > MAX_APS {
            return Err(Error::Config(format!("AP count {n} outside 1..={MAX_APS}")));
        }
        if !is_symmetric(&sigma_s, 1e-9) {
            return Err(Error::Parameter("source covariance must be symmetric".into()));
        }
        let min_eig = min_eig_sym(&sigma_s);
        if min_eig < -1e-10 {
            return Err(Error::Parameter(format!(
                "source covariance has eigenvalue {min_eig} < -1e-10"
            )));
        }
        let sigma_s = if min_eig < 0.0 { psd_project(&sigma_s) } else { sigma_s };
        if sigma_v.len() != n || rates.len() != n {
            return Err(Error::Dimension("sigma_v and rates must have one entry per AP".into()));
        }
        if sigma_v.iter().any(|&v| !v.is_finite()) {
            return Err(Error::Parameter("coding parameter entries must be finite".into()));
        }
        if rates.iter().any(|&r| r < 0.0) {
            return Err(Error::Parameter("rates must be >= 0".into()));
        }
        let sigma_v = sigma_v.map(|v| v.max(SIGMA_V_FLOOR));
        Ok(Self { sigma_s, sigma_v, rates })
    }

    pub fn n_aps(&self) -> usize {
        self.sigma_s.nrows()
    }

    pub fn sigma_v_mat(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.sigma_v)
    }

    /// `Sigma_S + Sigma_V`.
    pub fn observation_cov(&self) -> DMatrix<f64> {
        let mut m = self.sigma_s.clone();
        for i in 0..self.sigma_v.len() {
            m[(i, i)] += self.sigma_v[i];
        }
        m
    }

    pub fn with_sigma_v(&self, sigma_v: DVector<f64>) -> Result<Self> {
        Self::new(self.sigma_s.clone(), sigma_v, self.rates.clone())
    }
}

/// Estimates the per-coordinate source covariance from equal-length
/// subvectors of the edge updates: `(1/m) s_i^T s_j`, PSD-projected.
pub fn estimate_sigma_s(subvectors: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let n = subvectors.len();
    if n == 0 {
        return Err(Error::Estimation("no subvectors provided".into()));
    }
    let m = subvectors[0].len();
    if m == 0 {
        return Err(Error::Estimation("empty subsample".into()));
    }
    if subvectors.iter().any(|s| s.len() != m) {
        return Err(Error::Dimension("subvectors must share a length".into()));
    }
    let mut sigma = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let dot = subvectors[i].dot(&subvectors[j]) / m as f64;
            sigma[(i, j)] = dot;
            sigma[(j, i)] = dot;
        }
    }
    if min_eig_sym(&sigma) < 0.0 {
        sigma = psd_project(&sigma);
    }
    Ok(sigma)
}

/// Correlation-scale variant of [`estimate_sigma_s`]: unit diagonal, which is
/// the normalization the distortion analysis assumes for the source model.
pub fn estimate_sigma_s_correlation(subvectors: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let cov = estimate_sigma_s(subvectors)?;
    let n = cov.nrows();
    let scale: Vec<f64> = (0..n).map(|i| cov[(i, i)].max(1e-300).sqrt()).collect();
    let mut corr = DMatrix::from_fn(n, n, |i, j| cov[(i, j)] / (scale[i] * scale[j]));
    for i in 0..n {
        corr[(i, i)] = 1.0;
    }
    if min_eig_sym(&corr) < 0.0 {
        corr = psd_project(&corr);
    }
    Ok(corr)
}

/// Closed-form fused-aggregation distortion of the optimal linear decoder:
/// `c^T S c - c^T S (S + V)^{-1} S c`.
pub fn aggregation_distortion(stats: &SourceStats, c: &DVector<f64>) -> Result<f64> {
    if c.len() != stats.n_aps() {
        return Err(Error::Dimension("weight vector length mismatch".into()));
    }
    let obs = stats.observation_cov();
    let inv = obs
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular observation covariance".into()))?;
    let sc = &stats.sigma_s * c;
    let d = c.dot(&sc) - sc.dot(&(&inv * &sc));
    Ok(d.max(0.0))
}

/// Rate requirement of one subset (bits/symbol):
/// `1/2 log2( det(S+V) / (det([S+V]_{Kc}) det([V]_K)) )`.
/// The full-set case reduces to `1/2 log2(det(S+V)/det(V))`.
pub fn subset_rate_requirement(stats: &SourceStats, mask: u32) -> f64 {
    let n = stats.n_aps();
    let obs = stats.observation_cov();
    let comp = crate::linalg::mask_complement(mask, n);
    let det_full = obs.determinant();
    let det_comp = det_principal(&obs, comp);
    let det_v: f64 = mask_indices(mask, n).iter().map(|&i| stats.sigma_v[i]).product();
    0.5 * (det_full / (det_comp * det_v)).log2()
}

/// Feasibility slack of one subset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetSlack {
    /// Bitmask over APs.
    pub subset: u32,
    /// Required sum rate, bits/symbol.
    pub required: f64,
    /// Available sum rate, bits/symbol.
    pub budget: f64,
    /// `budget - required`.
    pub slack: f64,
}

/// Per-subset feasibility report for the achievable rate region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RdReport {
    pub feasible: bool,
    pub worst_slack: f64,
    pub slacks: Vec<SubsetSlack>,
}

impl RdReport {
    /// The subset with least slack.
    pub fn tightest(&self) -> Option<&SubsetSlack> {
        self.slacks
            .iter()
            .min_by(|a, b| a.slack.partial_cmp(&b.slack).unwrap())
    }
}

/// Evaluates every nonempty-subset rate constraint (the full set uses the
/// empty-complement determinant convention `det([.]_{}) = 1`).
pub fn rd_feasible(stats: &SourceStats) -> Result<RdReport> {
    let n = stats.n_aps();
    if n > MAX_APS {
        return Err(Error::Config(format!("subset enumeration capped at {MAX_APS} APs")));
    }
    let mut slacks = Vec::with_capacity((1usize << n) - 1);
    let mut worst = f64::INFINITY;
    for mask in 1u32..(1u32 << n) {
        let required = subset_rate_requirement(stats, mask);
        let budget: f64 = mask_indices(mask, n).iter().map(|&i| stats.rates[i]).sum();
        let slack = budget - required;
        worst = worst.min(slack);
        slacks.push(SubsetSlack { subset: mask, required, budget, slack });
    }
    Ok(RdReport { feasible: worst >= -FEASIBILITY_TOL, worst_slack: worst, slacks })
}

/// The three summands of the per-round system distortion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionReport {
    /// Residual beamforming mismatch weighted by the source covariance.
    pub wireless_term: f64,
    /// Receiver-noise power carried through combining and fusion.
    pub noise_term: f64,
    /// Fronthaul coding distortion (equals [`aggregation_distortion`]).
    pub wired_term: f64,
    /// Alias of `wired_term`.
    pub d_agg: f64,
    /// Sum of the three terms.
    pub d_system: f64,
}

/// Per-round system distortion: wireless mismatch + combined receiver noise +
/// fronthaul coding distortion.
pub fn d_system(
    stats: &SourceStats,
    bf: &BeamformerSet,
    ch: &ChannelRealization,
    v: &[f64],
    eps: &[f64],
) -> Result<DistortionReport> {
    let n_aps = stats.n_aps();
    let dims = ch.dims();
    if bf.beta.len() != n_aps || eps.len() != n_aps || bf.c.len() != n_aps {
        return Err(Error::Dimension("per-AP inputs disagree on AP count".into()));
    }
    if v.len() != dims.n_devices || bf.alpha.len() != dims.n_devices {
        return Err(Error::Dimension("per-device inputs disagree on device count".into()));
    }
    // residual mismatch weight per AP: sum_k (sqrt(v_k) - c_i beta^H H alpha)
    let mut w = vec![nalgebra::Complex::new(0.0, 0.0); n_aps];
    for i in 0..n_aps {
        for &k in ch.topology().cell(i) {
            let gain = effective_gain(&bf.beta[i], ch.gain(i, k), &bf.alpha[k]);
            w[i] += nalgebra::Complex::new(v[k].sqrt(), 0.0) - gain * bf.c[i];
        }
    }
    let mut wireless = 0.0;
    for i1 in 0..n_aps {
        for i2 in 0..n_aps {
            wireless += stats.sigma_s[(i1, i2)] * (w[i1].conj() * w[i2]).re;
        }
    }
    let mut noise = 0.0;
    for i in 0..n_aps {
        noise += eps[i] * bf.c[i] * bf.c[i] * bf.beta[i].norm_squared();
    }
    let wired = aggregation_distortion(stats, &bf.c)?;
    Ok(DistortionReport {
        wireless_term: wireless,
        noise_term: noise,
        wired_term: wired,
        d_agg: wired,
        d_system: wireless + noise + wired,
    })
}

/// Simulates the ideal fronthaul operating point: each AP's update is observed
/// through an additive Gaussian test channel with the configured per-AP noise,
/// and the server applies the optimal linear fusion of the observations.
pub fn ldsc_bound_decode(
    edge: &[EdgeUpdate],
    stats: &SourceStats,
    c: &DVector<f64>,
    seed: u64,
) -> Result<DVector<f64>> {
    let report = rd_feasible(stats)?;
    if !report.feasible {
        let tight = report.tightest().expect("at least one subset");
        return Err(Error::Infeasible(format!(
            "subset {:#b} needs {:.6} bits but has {:.6}",
            tight.subset, tight.required, tight.budget
        )));
    }
    decode_test_channel(edge, stats, c, seed)
}

/// The Gaussian test-channel decode without the feasibility gate; used where
/// the caller guarantees (or does not require) an achievable rate tuple.
pub fn decode_test_channel(
    edge: &[EdgeUpdate],
    stats: &SourceStats,
    c: &DVector<f64>,
    seed: u64,
) -> Result<DVector<f64>> {
    let n_aps = stats.n_aps();
    if edge.len() != n_aps || c.len() != n_aps {
        return Err(Error::Dimension("edge updates and weights must match AP count".into()));
    }
    let n = edge[0].s.len();
    if edge.iter().any(|e| e.s.len() != n) {
        return Err(Error::Dimension("edge updates must share a length".into()));
    }
    let obs = stats.observation_cov();
    let inv = obs
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular observation covariance".into()))?;
    // fusion row: c^T S (S+V)^{-1}
    let weights = inv.transpose() * (&stats.sigma_s * c);
    let mut rng = rng_from_seed(seed);
    let mut z_hat = DVector::zeros(n);
    for (i, e) in edge.iter().enumerate() {
        let std = stats.sigma_v[i].sqrt();
        let wi = weights[i];
        for (out, &s) in z_hat.iter_mut().zip(e.s.iter()) {
            *out += wi * (s + std * randn(&mut rng));
        }
    }
    Ok(z_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn stats2(sigma_s: [[f64; 2]; 2], sigma_v: [f64; 2], rates: [f64; 2]) -> SourceStats {
        SourceStats::new(
            DMatrix::from_row_slice(2, 2, &[sigma_s[0][0], sigma_s[0][1], sigma_s[1][0], sigma_s[1][1]]),
            DVector::from_row_slice(&sigma_v),
            rates.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn identical_subvectors_give_rank_one_gram() {
        let s = DVector::from_row_slice(&[1.0, -2.0, 3.0]);
        let sigma = estimate_sigma_s(&[s.clone(), s.clone()]).unwrap();
        let v = s.norm_squared() / 3.0;
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(sigma[(i, j)], v, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn independent_sources_have_small_off_diagonals() {
        let mut rng = rng_from_seed(1);
        let m = 100_000;
        let a = DVector::from_fn(m, |_, _| randn(&mut rng));
        let b = DVector::from_fn(m, |_, _| randn(&mut rng));
        let sigma = estimate_sigma_s(&[a, b]).unwrap();
        assert!(sigma[(0, 1)].abs() < 0.02);
        assert_relative_eq!(sigma[(0, 0)], 1.0, max_relative = 0.03);
    }

    #[test]
    fn anti_correlated_subvectors() {
        let s = DVector::from_row_slice(&[0.5, -1.5, 2.0, 1.0]);
        let sigma = estimate_sigma_s(&[s.clone(), -s.clone()]).unwrap();
        assert_relative_eq!(sigma[(0, 1)], -sigma[(0, 0)], max_relative = 1e-12);
    }

    #[test]
    fn empty_subsample_is_an_error() {
        assert!(estimate_sigma_s(&[]).is_err());
        assert!(estimate_sigma_s(&[DVector::zeros(0)]).is_err());
    }

    #[test]
    fn distortion_matches_hand_inversion() {
        let stats = stats2([[1.0, 0.5], [0.5, 1.0]], [0.1, 0.1], [10.0, 10.0]);
        let c = DVector::from_row_slice(&[1.0, 1.0]);
        let d = aggregation_distortion(&stats, &c).unwrap();
        assert_relative_eq!(d, 0.1875, max_relative = 1e-12);
    }

    #[test]
    fn distortion_reaches_prior_in_no_information_limit() {
        let stats = stats2([[1.0, 0.3], [0.3, 1.0]], [1e9, 1e9], [1.0, 1.0]);
        let c = DVector::from_row_slice(&[0.7, -0.4]);
        let d = aggregation_distortion(&stats, &c).unwrap();
        let prior = c.dot(&(&stats.sigma_s * &c));
        assert_relative_eq!(d, prior, max_relative = 1e-6);
    }

    #[test]
    fn distortion_matches_monte_carlo_mmse() {
        let stats = stats2([[1.0, 0.6], [0.6, 1.5]], [0.4, 0.2], [10.0, 10.0]);
        let c = DVector::from_row_slice(&[1.0, 0.5]);
        let formula = aggregation_distortion(&stats, &c).unwrap();
        let chol = crate::linalg::psd_cholesky(&stats.sigma_s);
        let obs_inv = stats.observation_cov().try_inverse().unwrap();
        let w = obs_inv.transpose() * (&stats.sigma_s * &c);
        let mut rng = rng_from_seed(44);
        let trials = 200_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let z = DVector::from_fn(2, |_, _| randn(&mut rng));
            let s = &chol * z;
            let q = DVector::from_fn(2, |i, _| s[i] + stats.sigma_v[i].sqrt() * randn(&mut rng));
            let target = c.dot(&s);
            let est = w.dot(&q);
            acc += (target - est) * (target - est);
        }
        let mc = acc / trials as f64;
        assert!(
            (mc / formula - 1.0).abs() < 0.02,
            "mc = {mc}, formula = {formula}"
        );
    }

    #[test]
    fn identity_example_has_zero_slack() {
        let stats = stats2([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0], [0.5, 0.5]);
        let report = rd_feasible(&stats).unwrap();
        assert!(report.feasible);
        assert!(report.worst_slack.abs() < 1e-12);
        // the sum-rate requirement is exactly one bit
        let full = report.slacks.iter().find(|s| s.subset == 0b11).unwrap();
        assert_relative_eq!(full.required, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn huge_coding_noise_is_feasible_for_any_rates() {
        let stats = stats2([[2.0, 0.8], [0.8, 2.0]], [1e12, 1e12], [0.0, 0.0]);
        let report = rd_feasible(&stats).unwrap();
        assert!(report.feasible, "worst slack {}", report.worst_slack);
    }

    #[test]
    fn zero_rates_with_finite_noise_are_infeasible() {
        let stats = stats2([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0], [0.0, 0.0]);
        let report = rd_feasible(&stats).unwrap();
        assert!(!report.feasible);
    }

    #[test]
    fn full_set_constraint_matches_subset_formula() {
        let stats = stats2([[1.2, 0.4], [0.4, 0.9]], [0.3, 0.7], [2.0, 2.0]);
        let full_direct = 0.5
            * (stats.observation_cov().determinant()
                / (stats.sigma_v[0] * stats.sigma_v[1]))
                .log2();
        assert_relative_eq!(
            subset_rate_requirement(&stats, 0b11),
            full_direct,
            max_relative = 1e-12
        );
    }

    proptest! {
        #[test]
        fn distortion_bounded_and_monotone_in_coding_noise(
            rho in -0.9f64..0.9,
            v1 in 0.01f64..2.0,
            v2 in 0.01f64..2.0,
            c1 in -2.0f64..2.0,
            c2 in -2.0f64..2.0,
        ) {
            let stats = stats2([[1.0, rho], [rho, 1.0]], [v1, v2], [8.0, 8.0]);
            let c = DVector::from_row_slice(&[c1, c2]);
            let d = aggregation_distortion(&stats, &c).unwrap();
            let prior = c.dot(&(&stats.sigma_s * &c));
            prop_assert!(d >= -1e-12);
            prop_assert!(d <= prior + 1e-9);

            let bigger = stats.with_sigma_v(DVector::from_row_slice(&[v1 * 2.0, v2])).unwrap();
            let d2 = aggregation_distortion(&bigger, &c).unwrap();
            prop_assert!(d2 >= d - 1e-9);
        }
    }

    #[test]
    fn matched_gains_leave_only_the_wired_term() {
        use crate::channel::{ChannelRealization, Dims, Topology};
        use nalgebra::Complex;
        let dims = Dims { n_aps: 2, n_devices: 2, n_rx: 1, n_tx: 1 };
        let topo = Topology::new(vec![vec![0], vec![1]], 2).unwrap();
        let h = vec![
            vec![DMatrix::from_element(1, 1, Complex::new(2.0, 0.0)); 2],
            vec![DMatrix::from_element(1, 1, Complex::new(0.5, 0.0)); 2],
        ];
        let ch = ChannelRealization::new(h, vec![0.0, 0.0], topo, dims).unwrap();
        let v = [1.44, 0.25];
        let c = DVector::from_row_slice(&[0.8, 1.25]);
        // beta^H H alpha = sqrt(v)/c per device
        let bf = BeamformerSet {
            alpha: vec![
                DVector::from_element(1, Complex::new(1.2 / 0.8 / 2.0, 0.0)),
                DVector::from_element(1, Complex::new(0.5 / 1.25 / 0.5, 0.0)),
            ],
            beta: vec![DVector::from_element(1, Complex::new(1.0, 0.0)); 2],
            c: c.clone(),
            power_budget: vec![100.0, 100.0],
        };
        let stats = stats2([[1.0, 0.5], [0.5, 1.0]], [0.2, 0.2], [8.0, 8.0]);
        let rep = d_system(&stats, &bf, &ch, &v, &[0.0, 0.0]).unwrap();
        assert!(rep.wireless_term.abs() < 1e-12);
        assert!(rep.noise_term.abs() < 1e-18);
        assert_relative_eq!(rep.d_system, rep.wired_term, max_relative = 1e-12);
        assert_relative_eq!(
            rep.wired_term,
            aggregation_distortion(&stats, &c).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_transmit_reduces_wireless_to_weighted_variance_sums() {
        use crate::channel::{ChannelRealization, Dims, Topology};
        use nalgebra::Complex;
        let dims = Dims { n_aps: 2, n_devices: 3, n_rx: 2, n_tx: 2 };
        let topo = Topology::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        let h = vec![
            vec![DMatrix::from_element(2, 2, Complex::new(1.0, 0.3)); 3],
            vec![DMatrix::from_element(2, 2, Complex::new(-0.4, 0.1)); 3],
        ];
        let ch = ChannelRealization::new(h, vec![0.0, 0.0], topo, dims).unwrap();
        let v = [1.0, 4.0, 9.0];
        let bf = BeamformerSet {
            alpha: vec![DVector::from_element(2, Complex::new(0.0, 0.0)); 3],
            beta: vec![DVector::from_element(2, Complex::new(0.7, 0.1)); 2],
            c: DVector::from_row_slice(&[1.0, 1.0]),
            power_budget: vec![1.0; 3],
        };
        let stats = stats2([[1.0, 0.25], [0.25, 2.0]], [0.5, 0.5], [8.0, 8.0]);
        let rep = d_system(&stats, &bf, &ch, &v, &[0.0, 0.0]).unwrap();
        // W_1 = 1 + 2 = 3, W_2 = 3
        let expected = 1.0 * 9.0 + 2.0 * 0.25 * 9.0 + 2.0 * 9.0;
        assert_relative_eq!(rep.wireless_term, expected, max_relative = 1e-12);
    }

    #[test]
    fn tiny_coding_noise_recovers_the_weighted_sum() {
        let stats = stats2([[1.0, 0.7], [0.7, 1.0]], [1e-9, 1e-9], [60.0, 60.0]);
        let c = DVector::from_row_slice(&[0.9, 1.1]);
        let mut rng = rng_from_seed(3);
        let edge: Vec<EdgeUpdate> = (0..2)
            .map(|_| EdgeUpdate { s: DVector::from_fn(512, |_, _| randn(&mut rng)) })
            .collect();
        let z_hat = ldsc_bound_decode(&edge, &stats, &c, 5).unwrap();
        let mut direct = DVector::zeros(512);
        for i in 0..2 {
            direct += &edge[i].s * c[i];
        }
        let rel = (z_hat - &direct).norm() / direct.norm();
        assert!(rel < 1e-3, "rel = {rel}");
    }

    #[test]
    fn zero_weights_decode_to_zero() {
        let stats = stats2([[1.0, 0.0], [0.0, 1.0]], [0.5, 0.5], [8.0, 8.0]);
        let c = DVector::zeros(2);
        let edge: Vec<EdgeUpdate> =
            (0..2).map(|_| EdgeUpdate { s: DVector::from_element(16, 1.0) }).collect();
        let z = ldsc_bound_decode(&edge, &stats, &c, 1).unwrap();
        assert_eq!(z, DVector::zeros(16));
    }

    #[test]
    fn infeasible_stats_refuse_to_decode() {
        let stats = stats2([[1.0, 0.0], [0.0, 1.0]], [0.01, 0.01], [0.1, 0.1]);
        let edge: Vec<EdgeUpdate> =
            (0..2).map(|_| EdgeUpdate { s: DVector::zeros(8) }).collect();
        let c = DVector::from_element(2, 1.0);
        assert!(matches!(
            ldsc_bound_decode(&edge, &stats, &c, 1),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn decode_distortion_matches_formula_monte_carlo() {
        let stats = stats2([[1.0, 0.8], [0.8, 1.0]], [0.3, 0.5], [10.0, 10.0]);
        let c = DVector::from_row_slice(&[1.0, 1.0]);
        let formula = aggregation_distortion(&stats, &c).unwrap();
        let n = 100_000;
        let chol = crate::linalg::psd_cholesky(&stats.sigma_s);
        let mut rng = rng_from_seed(9);
        // correlated per-coordinate pair of edge updates
        let mut s0 = DVector::zeros(n);
        let mut s1 = DVector::zeros(n);
        for m in 0..n {
            let z = DVector::from_fn(2, |_, _| randn(&mut rng));
            let s = &chol * z;
            s0[m] = s[0];
            s1[m] = s[1];
        }
        let edge = vec![EdgeUpdate { s: s0.clone() }, EdgeUpdate { s: s1.clone() }];
        let z_hat = ldsc_bound_decode(&edge, &stats, &c, 17).unwrap();
        let target = &s0 * c[0] + &s1 * c[1];
        let emp = (target - z_hat).norm_squared() / n as f64;
        assert!(
            (emp / formula - 1.0).abs() < 0.05,
            "empirical {emp} vs formula {formula}"
        );
    }
}
