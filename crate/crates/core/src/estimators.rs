//! Disjoint and sliding blocks estimators of `p̄(m)`, the recursion to the
//! cluster size distribution `π(m)`, and the induced extremal index estimate.
//!
//! For a pair of blocks `(i, i')` with disjoint index sets, the number of
//! observations in block `i'` strictly above the maximum of block `i` is,
//! in the limit, `CPP(θZ, π)` distributed with `Z ~ Exp(θ)`; its law is
//! `p̄`. The estimators average the indicator `{count = m}` over all such
//! pairs and then invert `π(m) = 4p̄(m) - 2 Σ_{k<m} π(m-k) p̄(k)`.

use alloc::vec::Vec;

use crate::blocks::{check_block_size, ecdf_at_observations, window_maxima, BlockMode, Sample};
use crate::competitors::CompetitorSpec;
use crate::error::{invalid, Error, Result};
use crate::math;
use crate::sweep::{disjoint_pair_count, naive_pair_histogram, sliding_pair_sweep};

/// Which values are compared with the block statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scale {
    /// Raw observations against the block maximum: `X_s > M_i`.
    Z,
    /// Empirical CDF values against `1 - Ŷ_i / b` with `Ŷ_i = -b·log F̂_n(M_i)`.
    Y,
}

impl Scale {
    pub fn as_str(self) -> &'static str {
        match self {
            Scale::Z => "z",
            Scale::Y => "y",
        }
    }
}

/// Default number of cluster sizes estimated.
pub const DEFAULT_M_MAX: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EstimatorSpec {
    pub mode: BlockMode,
    pub scale: Scale,
    pub b: usize,
    pub m_max: usize,
}

impl EstimatorSpec {
    pub fn new(mode: BlockMode, scale: Scale, b: usize, m_max: usize) -> Result<Self> {
        let spec = Self { mode, scale, b, m_max };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.b < 2 {
            return Err(invalid!("block size must be at least 2, got {}", self.b));
        }
        if self.m_max < 1 {
            return Err(invalid!("m_max must be at least 1, got {}", self.m_max));
        }
        Ok(())
    }

    /// Short label such as `sb-z` or `db-y`.
    pub fn label(&self) -> &'static str {
        match (self.mode, self.scale) {
            (BlockMode::Disjoint, Scale::Z) => "db-z",
            (BlockMode::Disjoint, Scale::Y) => "db-y",
            (BlockMode::Sliding, Scale::Z) => "sb-z",
            (BlockMode::Sliding, Scale::Y) => "sb-y",
        }
    }
}

/// Estimated `p̄(1..=m_max)`; `values[m - 1]` holds `p̄(m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PbarEstimate {
    pub spec: EstimatorSpec,
    pub values: Vec<f64>,
    /// Number of block pairs averaged over: `k(k-1)` or `|D_n|`.
    pub pair_count: u64,
}

impl PbarEstimate {
    pub fn get(&self, m: usize) -> f64 {
        self.values[m - 1]
    }
}

/// Estimated `π(1..=m_max)`; `values[m - 1]` holds `π(m)`. Values are raw
/// outputs of the recursion and may leave `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiEstimate {
    pub method: Method,
    pub values: Vec<f64>,
}

/// Which estimator produced a [`PiEstimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Blocks(EstimatorSpec),
    Competitor(CompetitorSpec),
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Blocks(s) => s.label(),
            Method::Competitor(c) => c.kind.as_str(),
        }
    }

    pub fn b(&self) -> usize {
        match self {
            Method::Blocks(s) => s.b,
            Method::Competitor(c) => c.b,
        }
    }
}

impl PiEstimate {
    pub fn get(&self, m: usize) -> f64 {
        self.values[m - 1]
    }

    pub fn theta_hat(&self, m: usize) -> Result<f64> {
        theta_hat(&self.values, m)
    }

    /// Negative entries set to zero; no renormalization.
    pub fn clip_negative(&self) -> Self {
        Self {
            method: self.method,
            values: self.values.iter().map(|v| v.max(0.0)).collect(),
        }
    }
}

/// Per-block `Ẑ_i = b(1 - F̂_n(M_i))` and `Ŷ_i = -b·log F̂_n(M_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockScores {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn block_scores(x: &Sample, mode: BlockMode, b: usize) -> Result<BlockScores> {
    x.check_block_size(b)?;
    let cdf = ecdf_at_observations(x.values());
    let f_max = window_maxima(&cdf, b, mode);
    let bf = b as f64;
    Ok(BlockScores {
        z: f_max.iter().map(|f| bf * (1.0 - f)).collect(),
        y: f_max.iter().map(|&f| -bf * math::ln(f)).collect(),
    })
}

/// Values compared and per-block thresholds for a given scale.
///
/// `F̂_n` is non-decreasing, so `F̂_n(M_i)` is the window maximum of the
/// CDF values and no search is needed.
fn comparison_inputs(x: &Sample, mode: BlockMode, scale: Scale, b: usize) -> (Vec<f64>, Vec<f64>) {
    match scale {
        Scale::Z => {
            let thresholds = window_maxima(x.values(), b, mode);
            (x.values().to_vec(), thresholds)
        }
        Scale::Y => {
            let cdf = ecdf_at_observations(x.values());
            let bf = b as f64;
            let thresholds = window_maxima(&cdf, b, mode)
                .into_iter()
                .map(|f| {
                    let y = -bf * math::ln(f);
                    1.0 - y / bf
                })
                .collect();
            (cdf, thresholds)
        }
    }
}

fn check(x: &Sample, spec: &EstimatorSpec) -> Result<()> {
    spec.validate()?;
    check_block_size(x.len(), spec.b)
}

/// `p̄̂(1..=m_max)`; the sliding version runs the threshold sweep.
pub fn pbar_hat(x: &Sample, spec: &EstimatorSpec) -> Result<PbarEstimate> {
    check(x, spec)?;
    let (values, thresholds) = comparison_inputs(x, spec.mode, spec.scale, spec.b);
    match spec.mode {
        BlockMode::Disjoint => Ok(disjoint_estimate(&values, &thresholds, spec)),
        BlockMode::Sliding => {
            let hist = sliding_pair_sweep(&values, spec.b, &thresholds, spec.m_max)?;
            Ok(from_totals(spec, &hist.totals(), disjoint_pair_count(x.len(), spec.b)))
        }
    }
}

/// Reference implementation by direct enumeration of block pairs.
pub fn pbar_hat_naive(x: &Sample, spec: &EstimatorSpec) -> Result<PbarEstimate> {
    check(x, spec)?;
    let (values, thresholds) = comparison_inputs(x, spec.mode, spec.scale, spec.b);
    match spec.mode {
        BlockMode::Disjoint => Ok(disjoint_estimate(&values, &thresholds, spec)),
        BlockMode::Sliding => {
            let hist = naive_pair_histogram(&values, spec.b, &thresholds, spec.m_max)?;
            Ok(from_totals(spec, &hist.totals(), disjoint_pair_count(x.len(), spec.b)))
        }
    }
}

fn disjoint_estimate(values: &[f64], thresholds: &[f64], spec: &EstimatorSpec) -> PbarEstimate {
    let b = spec.b;
    let k = thresholds.len();
    let cap = spec.m_max + 1;
    let mut totals = alloc::vec![0u64; cap + 1];
    for (i, &t) in thresholds.iter().enumerate() {
        for (j, block) in values.chunks_exact(b).take(k).enumerate() {
            if i == j {
                continue;
            }
            let c = block.iter().filter(|&&v| v > t).count();
            totals[c.min(cap)] += 1;
        }
    }
    from_totals(spec, &totals, (k * (k - 1)) as u64)
}

fn from_totals(spec: &EstimatorSpec, totals: &[u64], pair_count: u64) -> PbarEstimate {
    debug_assert_eq!(totals.iter().sum::<u64>(), pair_count);
    let denom = pair_count as f64;
    PbarEstimate {
        spec: *spec,
        values: (1..=spec.m_max).map(|m| totals[m] as f64 / denom).collect(),
        pair_count,
    }
}

/// `π(m) = 4p̄(m) - 2 Σ_{k=1}^{m-1} π(m-k) p̄(k)` for `m = 1..=len`, where
/// `pbar[m - 1] = p̄(m)`.
pub fn pi_recursion(pbar: &[f64]) -> Vec<f64> {
    let mut pi: Vec<f64> = Vec::with_capacity(pbar.len());
    for m in 1..=pbar.len() {
        let conv: f64 = (1..m).map(|k| pi[m - k - 1] * pbar[k - 1]).sum();
        pi.push(4.0 * pbar[m - 1] - 2.0 * conv);
    }
    pi
}

pub fn pi_from_pbar(pbar: &PbarEstimate) -> PiEstimate {
    PiEstimate {
        method: Method::Blocks(pbar.spec),
        values: pi_recursion(&pbar.values),
    }
}

/// `θ̂(m) = 1 / Σ_{j=1}^{m} j·π̂(j)`, with `pi[j - 1] = π̂(j)`.
pub fn theta_hat(pi: &[f64], m: usize) -> Result<f64> {
    if m < 1 || m > pi.len() {
        return Err(invalid!("m={m} must lie in 1..={}", pi.len()));
    }
    let denom: f64 = pi[..m].iter().enumerate().map(|(j, p)| (j + 1) as f64 * p).sum();
    if !(denom > 0.0) {
        return Err(Error::Degenerate {
            what: "theta denominator sum j*pi(j)",
            value: denom,
        });
    }
    Ok(1.0 / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmodel::{geometric_pi, iid_model, pbar_theory, CppModel, Pmf};
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sample(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    fn spec(mode: BlockMode, scale: Scale, b: usize, m_max: usize) -> EstimatorSpec {
        EstimatorSpec::new(mode, scale, b, m_max).unwrap()
    }

    #[test]
    fn hand_enumerated_disjoint_case() {
        let x = sample(&[1., 2., 3., 4.]);
        let est = pbar_hat(&x, &spec(BlockMode::Disjoint, Scale::Z, 2, 2)).unwrap();
        assert_eq!(est.pair_count, 2);
        assert_eq!(est.values, vec![0.0, 0.5]);
    }

    #[test]
    fn constant_sample_has_no_exceedances() {
        let x = sample(&[3.25; 40]);
        for mode in [BlockMode::Disjoint, BlockMode::Sliding] {
            for scale in [Scale::Z, Scale::Y] {
                let est = pbar_hat(&x, &spec(mode, scale, 5, 4)).unwrap();
                assert!(est.values.iter().all(|&v| v == 0.0), "{:?}", est);
                let pi = pi_from_pbar(&est);
                assert!(pi.values.iter().all(|&v| v == 0.0));
                assert!(matches!(pi.theta_hat(4), Err(Error::Degenerate { .. })));
            }
        }
    }

    #[test]
    fn argument_errors() {
        let x = sample(&[1., 2., 3., 4., 5.]);
        assert!(pbar_hat(&x, &EstimatorSpec { mode: BlockMode::Sliding, scale: Scale::Z, b: 3, m_max: 2 }).is_err());
        assert!(EstimatorSpec::new(BlockMode::Sliding, Scale::Z, 2, 0).is_err());
        assert!(EstimatorSpec::new(BlockMode::Sliding, Scale::Z, 1, 3).is_err());
    }

    #[test]
    fn recursion_examples() {
        assert_eq!(pi_recursion(&[0.25]), vec![1.0]);
        let pi = pi_recursion(&[1.0 / 8.0, 3.0 / 32.0]);
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pi[1], 0.25, epsilon = 1e-15);
        assert_eq!(pi_recursion(&[0.0; 4]), vec![0.0; 4]);
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_hat(&[1.0, 0.0, 0.0], 3).unwrap(), 1.0);
        let g = [0.5, 0.25, 0.125, 0.0625, 0.03125];
        assert_abs_diff_eq!(theta_hat(&g, 5).unwrap(), 1.0 / 1.78125, epsilon = 1e-15);
        let ar = [0.75, 0.1875, 0.0469, 0.0117, 0.0029];
        let direct = 1.0 / (0.75 + 2.0 * 0.1875 + 3.0 * 0.0469 + 4.0 * 0.0117 + 5.0 * 0.0029);
        assert_abs_diff_eq!(theta_hat(&ar, 5).unwrap(), direct, epsilon = 1e-15);
        assert!(theta_hat(&g, 0).is_err());
        assert!(theta_hat(&g, 6).is_err());
        match theta_hat(&[-0.2, 0.05], 2) {
            Err(Error::Degenerate { value, .. }) => assert_abs_diff_eq!(value, -0.1, epsilon = 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn clipping_is_opt_in() {
        let pi = PiEstimate {
            method: Method::Blocks(spec(BlockMode::Sliding, Scale::Z, 4, 3)),
            values: vec![0.9, -0.05, 0.1],
        };
        assert_eq!(pi.clip_negative().values, vec![0.9, 0.0, 0.1]);
        assert_eq!(pi.values[1], -0.05);
    }

    #[test]
    fn round_trip_through_theory() {
        let sqarch = Pmf::cluster_sizes(&[0.751, 0.168, 0.055, 0.014, 0.008]).unwrap();
        for pi in [Pmf::point_mass(1), geometric_pi(0.5, 40).unwrap(), sqarch] {
            let model = CppModel::new(0.5, pi.clone()).unwrap();
            let pbar = pbar_theory(&model, 8);
            let back = pi_recursion(&pbar.weights()[1..]);
            for (m, v) in back.iter().enumerate() {
                assert_abs_diff_eq!(*v, pi.get(m + 1), epsilon = 1e-12);
            }
        }
        let _ = iid_model();
    }

    #[test]
    fn y_scores_dominate_z_scores() {
        let v: Vec<f64> = (0..97).map(|i| ((i * 37) % 101) as f64 * 0.3).collect();
        let x = sample(&v);
        for mode in [BlockMode::Disjoint, BlockMode::Sliding] {
            let s = block_scores(&x, mode, 7).unwrap();
            for (z, y) in s.z.iter().zip(&s.y) {
                assert!(y >= z);
            }
        }
    }

    fn lcg_sample(seed: u64, n: usize) -> Vec<f64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect()
    }

    #[test]
    fn disjoint_divisor_variant_is_close() {
        for seed in 0..20 {
            let n = 60 + seed as usize * 7;
            let v = lcg_sample(seed, n);
            let x = sample(&v);
            let b = 3 + seed as usize % 5;
            let m_max = 4;
            let est = pbar_hat(&x, &spec(BlockMode::Disjoint, Scale::Z, b, m_max)).unwrap();
            let k = n / b;
            let maxima: Vec<f64> = v.chunks_exact(b).map(|c| c.iter().copied().fold(f64::MIN, f64::max)).collect();
            for m in 1..=m_max {
                let mut hits = 0;
                for t in &maxima {
                    for blk in v.chunks_exact(b) {
                        if blk.iter().filter(|&&u| u > *t).count() == m {
                            hits += 1;
                        }
                    }
                }
                let alt = hits as f64 / (k * k) as f64;
                assert!((est.get(m) - alt).abs() <= 1.0 / (k as f64 - 1.0));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sweep_matches_enumeration(v in proptest::collection::vec(-5.0f64..5.0, 8..150), b_frac in 0.0f64..1.0, y in any::<bool>()) {
            let n = v.len();
            let b = 2 + ((n / 2 - 2) as f64 * b_frac) as usize;
            let x = sample(&v);
            let sc = if y { Scale::Y } else { Scale::Z };
            let s = spec(BlockMode::Sliding, sc, b, 5);
            prop_assert_eq!(pbar_hat(&x, &s).unwrap(), pbar_hat_naive(&x, &s).unwrap());
        }

        #[test]
        fn estimates_are_sub_probabilities(v in proptest::collection::vec(0.0f64..1.0, 10..120), mode in prop_oneof![Just(BlockMode::Disjoint), Just(BlockMode::Sliding)]) {
            let x = sample(&v);
            let est = pbar_hat(&x, &spec(mode, Scale::Z, 3, 6)).unwrap();
            prop_assert!(est.values.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(est.values.iter().sum::<f64>() <= 1.0 + 1e-12);
            let pi = pi_from_pbar(&est);
            for m in 1..=6 {
                let conv: f64 = (1..m).map(|k| pi.get(m - k) * est.get(k)).sum();
                prop_assert!((pi.get(m) - (4.0 * est.get(m) - 2.0 * conv)).abs() < 1e-15);
            }
        }
    }
}
