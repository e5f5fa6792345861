//! Compound Poisson limit laws.
//!
//! With `N ~ CPP(θτ, π)` the count law is
//! `p^(τ)(0) = e^{-θτ}` and `p^(τ)(m) = Σ_{j=1}^{m} e^{-θτ} (θτ)^j / j! · π^{*j}(m)`.
//! Averaging over `τ ~ Exp(θ)` gives `p̄(m) = Σ_{j=1}^{m} 2^{-(j+1)} π^{*j}(m)`,
//! which no longer depends on θ. Two-level counts follow the analogous
//! formula with the bivariate compounding family `π₂^(σ)`.
//!
//! Every pmf here is indexed by its value (`weights[m]` is the mass at `m`).
//! Cluster size laws have no mass at 0. Supports are truncated at a cap;
//! all values `p^(τ)(m)` with `m` inside the cap are exact because π puts
//! no mass at 0.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::quadrature::GaussLegendre;

/// Default truncation of pmf supports.
pub const DEFAULT_SUPPORT_CAP: usize = 40;

const MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    weights: Vec<f64>,
}

impl Pmf {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid!("pmf needs at least one weight"));
        }
        if let Some(m) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid!("pmf weight at {m} is negative or not finite ({})", weights[m]));
        }
        let total: f64 = weights.iter().sum();
        if total > 1.0 + MASS_SLACK {
            return Err(invalid!("pmf weights sum to {total} > 1"));
        }
        Ok(Self { weights })
    }

    /// A cluster size law from `π(1), π(2), …`.
    pub fn cluster_sizes(pi: &[f64]) -> Result<Self> {
        let mut w = Vec::with_capacity(pi.len() + 1);
        w.push(0.0);
        w.extend_from_slice(pi);
        Self::new(w)
    }

    pub fn point_mass(at: usize) -> Self {
        let mut weights = alloc::vec![0.0; at + 1];
        weights[at] = 1.0;
        Self { weights }
    }

    /// Mass at `m`; zero outside the stored support.
    pub fn get(&self, m: usize) -> f64 {
        self.weights.get(m).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support_max(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass lost to support truncation.
    pub fn truncation_mass(&self) -> f64 {
        (1.0 - self.total_mass()).max(0.0)
    }

    /// `π(1), …, π(m)` padded with zeros.
    pub fn cluster_probabilities(&self, m: usize) -> Vec<f64> {
        (1..=m).map(|j| self.get(j)).collect()
    }
}

/// The two-level compounding family `σ ↦ π₂^(σ)` on
/// `{(i, j) : i ≥ j ≥ 0, i ≥ 1}`, given as an evaluator.
#[derive(Clone)]
pub struct BivariatePmfFamily {
    eval: Arc<dyn Fn(f64, usize, usize) -> f64 + Send + Sync>,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for BivariatePmfFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BivariatePmfFamily").finish_non_exhaustive()
    }
}

impl BivariatePmfFamily {
    pub fn new<F>(eval: F) -> Self
    where
        F: Fn(f64, usize, usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            breakpoints: Vec::new(),
        }
    }

    /// Ratios in `(0, 1)` where `σ ↦ π₂^(σ)` fails to be smooth; ratio
    /// integrals are split there.
    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        points.retain(|s| *s > 0.0 && *s < 1.0);
        points.sort_by(f64::total_cmp);
        points.dedup();
        self.breakpoints = points;
        self
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `π₂^(σ)(i, j)`; zero outside the index set.
    pub fn eval(&self, sigma: f64, i: usize, j: usize) -> f64 {
        if i == 0 || j > i {
            return 0.0;
        }
        (self.eval)(sigma, i, j)
    }

    pub fn table(&self, sigma: f64, i_max: usize) -> BivariateTable {
        let mut t = BivariateTable::zeroed(i_max);
        for i in 1..=i_max {
            for j in 0..=i {
                t.set(i, j, self.eval(sigma, i, j));
            }
        }
        t
    }
}

/// Square table `t[i][j]`, `0 ≤ i, j ≤ i_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateTable {
    dim: usize,
    cells: Vec<f64>,
}

impl BivariateTable {
    pub fn zeroed(i_max: usize) -> Self {
        let dim = i_max + 1;
        Self {
            dim,
            cells: alloc::vec![0.0; dim * dim],
        }
    }

    pub fn i_max(&self) -> usize {
        self.dim - 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= self.dim || j >= self.dim {
            return 0.0;
        }
        self.cells[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.cells[i * self.dim + j] = v;
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// Truncated convolution `(a ∗ b)(i, j)` for `i ≤ i_max`.
    fn convolve(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut out = Self::zeroed(d - 1);
        for i1 in 0..d {
            for j1 in 0..=i1 {
                let a = self.cells[i1 * d + j1];
                if a == 0.0 {
                    continue;
                }
                for i2 in 0..d - i1 {
                    for j2 in 0..=i2 {
                        out.cells[(i1 + i2) * d + j1 + j2] += a * other.cells[i2 * d + j2];
                    }
                }
            }
        }
        out
    }
}

/// Limit model: extremal index θ, cluster size law π and optionally the
/// two-level family π₂.
#[derive(Debug, Clone)]
pub struct CppModel {
    theta: f64,
    pi: Pmf,
    pi2: Option<BivariatePmfFamily>,
}

impl CppModel {
    pub fn new(theta: f64, pi: Pmf) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(invalid!("extremal index must lie in (0, 1], got {theta}"));
        }
        if pi.get(0) != 0.0 {
            return Err(invalid!("cluster size law must not put mass at 0"));
        }
        Ok(Self { theta, pi, pi2: None })
    }

    pub fn with_pi2(mut self, pi2: BivariatePmfFamily) -> Self {
        self.pi2 = Some(pi2);
        self
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn pi(&self) -> &Pmf {
        &self.pi
    }

    pub fn pi2(&self) -> Option<&BivariatePmfFamily> {
        self.pi2.as_ref()
    }

    pub(crate) fn require_pi2(&self) -> Result<&BivariatePmfFamily> {
        self.pi2
            .as_ref()
            .ok_or(Error::UnsupportedModel("model has no two-level compounding family"))
    }
}

/// Serially independent data: θ = 1, π = δ₁ and
/// `π₂^(σ) = (1 - σ)·δ_(1,0) + σ·δ_(1,1)`.
pub fn iid_model() -> CppModel {
    CppModel::new(1.0, Pmf::point_mass(1))
        .expect("valid iid model")
        .with_pi2(BivariatePmfFamily::new(|sigma, i, j| match (i, j) {
            (1, 0) => 1.0 - sigma,
            (1, 1) => sigma,
            _ => 0.0,
        }))
}

/// `π(m) = (1 - α) α^{m-1}` for `m = 1..=m_max`.
pub fn geometric_pi(alpha: f64, m_max: usize) -> Result<Pmf> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid!("geometric parameter must lie in [0, 1), got {alpha}"));
    }
    if m_max < 1 {
        return Err(invalid!("m_max must be at least 1"));
    }
    let mut w = alloc::vec![0.0; m_max + 1];
    let mut p = 1.0 - alpha;
    for slot in w.iter_mut().skip(1) {
        *slot = p;
        p *= alpha;
    }
    Pmf::new(w)
}

/// Limit model of the max-autoregressive process
/// `X_t = max(αX_{t-1}, (1-α)Z_t)` with unit Fréchet noise: `θ = 1 - α`,
/// geometric cluster sizes, and the two-level law of a cluster started by
/// one large innovation whose log-excess over the lower threshold is
/// `Exp(1)`.
pub fn armax_model(alpha: f64, m_max: usize) -> Result<CppModel> {
    if alpha == 0.0 {
        return Ok(iid_model());
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid!("ARMAX parameter must lie in [0, 1), got {alpha}"));
    }
    let c = -math::ln(alpha);
    let family = BivariatePmfFamily::new(move |sigma, i, j| {
        if i == 0 || j > i {
            return 0.0;
        }
        // N1 = i  <=>  L in [(i-1)c, ic); N2 = j  <=>  L - a in [(j-1)c, jc), or L < a for j = 0
        let a = if sigma > 0.0 { -math::ln(sigma) } else { f64::INFINITY };
        let (lo1, hi1) = ((i - 1) as f64 * c, i as f64 * c);
        let (lo2, hi2) = if j == 0 {
            (0.0, a)
        } else {
            (a + (j - 1) as f64 * c, a + j as f64 * c)
        };
        let (lo, hi) = (lo1.max(lo2), hi1.min(hi2));
        if hi <= lo {
            0.0
        } else {
            math::exp(-lo) - math::exp(-hi)
        }
    });
    // kinks where the upper threshold crosses a step of the decay, σ = α^k
    let mut kinks = Vec::new();
    let mut s = alpha;
    while s > 1e-4 {
        kinks.push(s);
        s *= alpha;
    }
    let family = family.with_breakpoints(kinks);
    Ok(CppModel::new(1.0 - alpha, geometric_pi(alpha, m_max)?)?.with_pi2(family))
}

/// Partial-sum extremal index `θ(m) = 1 / Σ_{j≤m} j·π(j)`.
pub fn theta_partial(pi: &Pmf, m: usize) -> Result<f64> {
    let s: f64 = (1..=m).map(|j| j as f64 * pi.get(j)).sum();
    if !(s > 0.0) {
        return Err(Error::Degenerate {
            what: "sum of j*pi(j)",
            value: s,
        });
    }
    Ok(1.0 / s)
}

/// `π^{*j}` truncated at `cap`.
pub fn self_convolve_capped(pi: &Pmf, j: usize, cap: usize) -> Result<Pmf> {
    if j < 1 {
        return Err(invalid!("convolution power must be at least 1, got {j}"));
    }
    let base: Vec<f64> = (0..=cap).map(|m| pi.get(m)).collect();
    let mut acc = base.clone();
    for _ in 1..j {
        acc = convolve_truncated(&acc, &base);
    }
    Ok(Pmf { weights: acc })
}

/// `π^{*j}`, truncated at the larger of the default cap and π's support.
pub fn self_convolve(pi: &Pmf, j: usize) -> Result<Pmf> {
    self_convolve_capped(pi, j, DEFAULT_SUPPORT_CAP.max(pi.support_max()))
}

fn convolve_truncated(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len();
    let mut out = alloc::vec![0.0; len];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (k, &y) in b.iter().take(len - i).enumerate() {
            out[i + k] += x * y;
        }
    }
    out
}

/// Convolution powers `π^{*k}(m)` for `1 ≤ k ≤ m ≤ m_max`, which is all
/// that enters `p^(τ)(m)` for `m ≤ m_max`.
#[derive(Debug, Clone)]
pub(crate) struct ConvolutionPowers {
    theta: f64,
    m_max: usize,
    /// `powers[k][m]`, k = 0..=m_max.
    powers: Vec<Vec<f64>>,
}

impl ConvolutionPowers {
    pub(crate) fn new(model: &CppModel, m_max: usize) -> Self {
        let base: Vec<f64> = (0..=m_max).map(|m| model.pi.get(m)).collect();
        let mut powers = Vec::with_capacity(m_max + 1);
        let mut delta0 = alloc::vec![0.0; m_max + 1];
        delta0[0] = 1.0;
        powers.push(delta0);
        for k in 1..=m_max {
            let next = convolve_truncated(&powers[k - 1], &base);
            powers.push(next);
        }
        Self {
            theta: model.theta,
            m_max,
            powers,
        }
    }

    /// `p^(τ)(0..=m_max)` into `out`.
    pub(crate) fn pmf_into(&self, tau: f64, out: &mut [f64]) {
        let lambda = self.theta * tau;
        let mut w = [0.0; DEFAULT_SUPPORT_CAP + 1];
        let mut wv;
        let weights: &mut [f64] = if self.m_max <= DEFAULT_SUPPORT_CAP {
            &mut w[..=self.m_max]
        } else {
            wv = alloc::vec![0.0; self.m_max + 1];
            &mut wv[..]
        };
        math::poisson_weights(lambda, self.m_max, weights);
        out[0] = weights[0];
        for m in 1..=self.m_max {
            out[m] = (1..=m).map(|k| weights[k] * self.powers[k][m]).sum();
        }
    }

    /// `d/dμ p^(μ)(m)` for `m = 0..=m_max` into `out`.
    pub(crate) fn derivative_into(&self, mu: f64, out: &mut [f64]) {
        let th = self.theta;
        let lambda = th * mu;
        let mut w = alloc::vec![0.0; self.m_max + 1];
        math::poisson_weights(lambda, self.m_max, &mut w);
        out[0] = -th * w[0];
        for m in 1..=self.m_max {
            out[m] = (1..=m)
                .map(|k| th * (w[k - 1] - w[k]) * self.powers[k][m])
                .sum();
        }
    }

    pub(crate) fn pbar_into(&self, out: &mut [f64]) {
        out[0] = 0.5;
        for m in 1..=self.m_max {
            let mut scale = 0.25;
            let mut s = 0.0;
            for k in 1..=m {
                s += scale * self.powers[k][m];
                scale *= 0.5;
            }
            out[m] = s;
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(invalid!("tau must be finite and non-negative, got {tau}"));
    }
    Ok(())
}

/// Cluster count law `p^(τ)(0..=m_max)`.
pub fn cpp_pmf(model: &CppModel, tau: f64, m_max: usize) -> Result<Pmf> {
    check_tau(tau)?;
    let powers = ConvolutionPowers::new(model, m_max);
    let mut w = alloc::vec![0.0; m_max + 1];
    powers.pmf_into(tau, &mut w);
    Ok(Pmf { weights: w })
}

/// `d/dμ p^(μ)(m)` for `m = 0..=m_max`, from the Poisson weights directly.
pub fn cpp_pmf_derivative(model: &CppModel, mu: f64, m_max: usize) -> Result<Vec<f64>> {
    check_tau(mu)?;
    let powers = ConvolutionPowers::new(model, m_max);
    let mut out = alloc::vec![0.0; m_max + 1];
    powers.derivative_into(mu, &mut out);
    Ok(out)
}

/// `p̄(0..=m_max)` with `p̄(0) = 1/2`.
pub fn pbar_theory(model: &CppModel, m_max: usize) -> Pmf {
    let powers = ConvolutionPowers::new(model, m_max);
    let mut w = alloc::vec![0.0; m_max + 1];
    powers.pbar_into(&mut w);
    Pmf { weights: w }
}

/// `p̄(m) = ∫ p^(τ)(m) dH(τ)` by Gauss–Legendre in `u = 1 - e^{-θτ}`.
pub fn pbar_integral_oracle(model: &CppModel, m_max: usize, nodes: usize) -> Pmf {
    let powers = ConvolutionPowers::new(model, m_max);
    let gl = GaussLegendre::new(nodes);
    let mut acc = alloc::vec![0.0; m_max + 1];
    let mut p = alloc::vec![0.0; m_max + 1];
    for (u, w) in gl.graded_to_one(0.0) {
        let tau = -math::ln_1p(-u) / model.theta;
        powers.pmf_into(tau, &mut p);
        for (a, v) in acc.iter_mut().zip(&p) {
            *a += w * v;
        }
    }
    Pmf { weights: acc }
}

/// Convolution powers of `π₂^(σ)` restricted to `i ≤ i_max`.
#[derive(Debug, Clone)]
pub(crate) struct BivariatePowers {
    theta: f64,
    /// `powers[k]`, k = 1..=i_max (index 0 unused).
    powers: Vec<BivariateTable>,
}

impl BivariatePowers {
    pub(crate) fn new(theta: f64, family: &BivariatePmfFamily, sigma: f64, i_max: usize) -> Self {
        let base = family.table(sigma, i_max);
        let mut powers = Vec::with_capacity(i_max + 1);
        powers.push(BivariateTable::zeroed(i_max));
        if i_max >= 1 {
            powers.push(base.clone());
        }
        for k in 2..=i_max {
            let next = powers[k - 1].convolve(&base);
            powers.push(next);
        }
        Self { theta, powers }
    }

    /// `p₂^(τ₁, σ·τ₁)` into `out`.
    pub(crate) fn table_into(&self, tau1: f64, out: &mut BivariateTable) {
        let i_max = out.i_max();
        let mut w = [0.0; DEFAULT_SUPPORT_CAP + 1];
        let mut wv;
        let weights: &mut [f64] = if i_max <= DEFAULT_SUPPORT_CAP {
            &mut w[..=i_max]
        } else {
            wv = alloc::vec![0.0; i_max + 1];
            &mut wv[..]
        };
        math::poisson_weights(self.theta * tau1, i_max, weights);
        out.cells.iter_mut().for_each(|c| *c = 0.0);
        out.set(0, 0, weights[0]);
        for i in 1..=i_max {
            for j in 0..=i {
                let v: f64 = (1..=i).map(|k| weights[k] * self.powers[k].get(i, j)).sum();
                out.set(i, j, v);
            }
        }
    }
}

/// Two-level count law `p₂^(τ₁, τ₂)(i, j)` for `τ₁ ≥ τ₂ ≥ 0`, `τ₁ > 0`.
pub fn cpp2_pmf(model: &CppModel, tau1: f64, tau2: f64, i_max: usize) -> Result<BivariateTable> {
    let family = model.require_pi2()?;
    check_tau(tau2)?;
    if !(tau1 > 0.0 && tau1 >= tau2 && tau1.is_finite()) {
        return Err(invalid!("need tau1 >= tau2 >= 0 and tau1 > 0, got ({tau1}, {tau2})"));
    }
    let powers = BivariatePowers::new(model.theta, family, tau2 / tau1, i_max);
    let mut out = BivariateTable::zeroed(i_max);
    powers.table_into(tau1, &mut out);
    Ok(out)
}
