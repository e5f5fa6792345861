//! Limit covariances of the blocks estimators, evaluated by quadrature.
//!
//! All half-line integrals against `dH`, the `Exp(θ)` distribution, are
//! taken in `u = H(τ) = 1 - e^{-θτ}` on a rule graded towards `u = 1`.
//! Integrals over ordered pairs `(τ, τ')` are folded onto the triangle
//! `τ' ≤ τ` and parametrized as `τ' = sτ`, so the compounding family is
//! only ever evaluated at the fixed ratios `σ = s` of one Gauss–Legendre
//! rule and its convolution powers can be cached. Expectations mixing an
//! indicator with `p^(Z)(j)` use integration by parts,
//! `E[1{N = j} g(Z)] = g(0) P(N = j) + ∫ g'(μ) P(N = j, Z > μ) dμ`, with
//! the closed-form derivative of `μ ↦ p^(μ)(j)`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::cpmodel::{
    pbar_theory, BivariatePowers, BivariateTable, ConvolutionPowers, CppModel, Pmf,
};
use crate::error::{invalid, Error, Result};
use crate::math;
use crate::quadrature::{GaussLegendre, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovKind {
    SigmaDb,
    SigmaSb,
    GammaDb,
    GammaSb,
}

impl CovKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CovKind::SigmaDb => "sigma_db",
            CovKind::SigmaSb => "sigma_sb",
            CovKind::GammaDb => "gamma_db",
            CovKind::GammaSb => "gamma_sb",
        }
    }
}

/// Symmetric `m × m` matrix, row-major; `get(r, c)` is 0-based, so entry
/// `(j, j')` of the usual 1-based notation is `get(j - 1, j' - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    pub m: usize,
    pub kind: CovKind,
    pub entries: Vec<f64>,
}

impl CovMatrix {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.m + c]
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.m {
            for c in 0..r {
                worst = worst.max((self.get(r, c) - self.get(c, r)).abs());
            }
        }
        worst
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.m, self.m, &self.entries)
    }

    /// Eigenvalues of the symmetrized matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let a = self.to_dmatrix();
        let sym = (&a + a.transpose()) * 0.5;
        let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Smallest eigenvalue of `other - self`; non-negative iff `self ⪯ other`
    /// in the Loewner order.
    pub fn loewner_gap(&self, other: &CovMatrix) -> Result<f64> {
        if self.m != other.m {
            return Err(invalid!("dimension mismatch: {} vs {}", self.m, other.m));
        }
        let diff = CovMatrix {
            m: self.m,
            kind: self.kind,
            entries: other.entries.iter().zip(&self.entries).map(|(a, b)| a - b).collect(),
        };
        Ok(diff.min_eigenvalue())
    }
}

fn tau_of(u: f64, theta: f64) -> f64 {
    -math::ln_1p(-u) / theta
}

/// Runs `eval` at `nodes` and, when refinement is on, at `2·nodes`,
/// returning the finer result if every entry moved by at most the tolerance.
fn refined<F>(quad: &QuadratureSpec, what: &'static str, eval: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Vec<f64>,
{
    quad.validate()?;
    let coarse = eval(quad.nodes_1d);
    if !quad.refinement {
        return Ok(coarse);
    }
    let fine = eval(2 * quad.nodes_1d);
    let delta = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if !(delta <= quad.tolerance) {
        return Err(Error::NumericFailure {
            what,
            delta,
            tolerance: quad.tolerance,
        });
    }
    Ok(fine)
}

fn check_m(m: usize) -> Result<()> {
    if m < 1 {
        return Err(invalid!("covariance dimension must be at least 1"));
    }
    Ok(())
}

/// Caches shared by the covariance quadratures for one rule.
struct Grid {
    theta: f64,
    m: usize,
    gl: GaussLegendre,
    /// graded outer rule in u: (τ, weight of dH)
    outer: Vec<(f64, f64)>,
    /// composite rule on [0, 1] for ratios, split at the family's kinks
    ratio: Vec<(f64, f64)>,
    /// plain rule on [0, 1] for ξ
    xi: Vec<(f64, f64)>,
    law: ConvolutionPowers,
    /// convolution powers of π₂^(s) at each ratio node
    pair_laws: Vec<BivariatePowers>,
}

impl Grid {
    fn new(model: &CppModel, m: usize, nodes: usize) -> Result<Self> {
        let family = model.require_pi2()?;
        let theta = model.theta();
        let gl = GaussLegendre::new(nodes);
        let outer = gl.graded_to_one(0.0).map(|(u, w)| (tau_of(u, theta), w)).collect();
        let xi: Vec<(f64, f64)> = gl.unit().collect();
        let ratio = if family.breakpoints().is_empty() {
            xi.clone()
        } else {
            let piece = GaussLegendre::new((nodes / 4).max(8));
            let mut edges = alloc::vec![0.0];
            edges.extend_from_slice(family.breakpoints());
            edges.push(1.0);
            edges
                .windows(2)
                .flat_map(|w| piece.on(w[0], w[1]).collect::<Vec<_>>())
                .collect()
        };
        let pair_laws = ratio
            .iter()
            .map(|&(s, _)| BivariatePowers::new(theta, family, s, m))
            .collect();
        Ok(Self {
            theta,
            m,
            gl,
            outer,
            ratio,
            xi,
            law: ConvolutionPowers::new(model, m),
            pair_laws,
        })
    }

    fn pmf(&self, tau: f64, out: &mut [f64]) {
        self.law.pmf_into(tau, out);
    }

    /// `∫ f(τ) dH(τ)` for vector-valued integrands.
    fn pbar(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.m + 1];
        self.law.pbar_into(&mut out);
        out
    }
}

fn idx(m: usize, j: usize, jp: usize) -> usize {
    (j - 1) * m + (jp - 1)
}

/// `Σ^db_m`: covariance of the limit of `√k (p̄̂^db(j) - p̄(j))`, j ≤ m.
pub fn sigma_db(model: &CppModel, m: usize, quad: &QuadratureSpec) -> Result<CovMatrix> {
    check_m(m)?;
    model.require_pi2()?;
    let entries = refined(quad, "sigma_db", |nodes| {
        let grid = Grid::new(model, m, nodes).expect("family checked");
        sigma_db_at(&grid)
    })?;
    Ok(CovMatrix {
        m,
        kind: CovKind::SigmaDb,
        entries,
    })
}

fn sigma_db_at(g: &Grid) -> Vec<f64> {
    let m = g.m;
    let th = g.theta;
    let pbar = g.pbar();
    let mut acc = alloc::vec![0.0; m * m];

    let mut p_hi = alloc::vec![0.0; m + 1];
    let mut p_lo = alloc::vec![0.0; m + 1];
    let mut dg = alloc::vec![0.0; m + 1];
    let mut p2 = BivariateTable::zeroed(m);
    // mixed[j][j'] = ∫ dH(τ) { E[1{N^τ = j} p^(Z)(j')] - p^τ(j) p̄(j') }
    let mut mixed = alloc::vec![0.0; m * m];
    // prod = ∫ p^τ(j) p^τ(j') dH(τ)
    let mut prod = alloc::vec![0.0; m * m];

    for &(tau, wu) in &g.outer {
        g.pmf(tau, &mut p_hi);
        for j in 1..=m {
            for jp in 1..=m {
                prod[idx(m, j, jp)] += wu * p_hi[j] * p_hi[jp];
            }
        }
        // inner ratio s: τ' = sτ (indicator–indicator) and μ = sτ (mixed)
        let mut inner_mixed = alloc::vec![0.0; m * m];
        for (k, &(s, ws)) in g.ratio.iter().enumerate() {
            let lo = s * tau;
            g.pmf(lo, &mut p_lo);
            g.pair_laws[k].table_into(tau, &mut p2);
            let dh = ws * th * tau * math::exp(-th * lo);
            g.law.derivative_into(lo, &mut dg);
            for j in 1..=m {
                for jp in 1..=m {
                    let joint = p2.get(j, jp) + p2.get(jp, j);
                    let indep = p_hi[j] * p_lo[jp] + p_lo[j] * p_hi[jp];
                    acc[idx(m, j, jp)] += wu * dh * (joint - indep);
                    inner_mixed[idx(m, j, jp)] += ws * tau * dg[jp] * p2.get(j, 0);
                }
            }
        }
        for j in 1..=m {
            for jp in 1..=m {
                mixed[idx(m, j, jp)] += wu * (inner_mixed[idx(m, j, jp)] - p_hi[j] * pbar[jp]);
            }
        }
    }
    for j in 1..=m {
        for jp in 1..=m {
            let i = idx(m, j, jp);
            let smooth = prod[i] - pbar[j] * pbar[jp];
            acc[i] += mixed[i] + mixed[idx(m, jp, j)] + smooth;
        }
    }
    acc
}

/// Joint law of `(X, Y) = (A + C_lo, B + C_hi)` with `A ~ p_a`, `B ~ p_b`
/// and `(C_hi, C_lo) ~ p2`, all independent; `out[x][y]` for `x, y ≤ m`.
fn overlap_joint(p_a: &[f64], p_b: &[f64], p2: &BivariateTable, m: usize, scratch: &mut [f64], out: &mut [f64]) {
    let d = m + 1;
    // scratch[c_hi][x] = Σ_a p_a(a) p2(c_hi, x - a)
    for c_hi in 0..d {
        for x in 0..d {
            let mut s = 0.0;
            for a in 0..=x {
                s += p_a[a] * p2.get(c_hi, x - a);
            }
            scratch[c_hi * d + x] = s;
        }
    }
    for x in 0..d {
        for y in 0..d {
            let mut s = 0.0;
            for c_hi in 0..=y {
                s += p_b[y - c_hi] * scratch[c_hi * d + x];
            }
            out[x * d + y] = s;
        }
    }
}

/// `Σ^sb_m`: covariance of the limit of `√k (p̄̂^sb(j) - p̄(j))`, j ≤ m.
pub fn sigma_sb(model: &CppModel, m: usize, quad: &QuadratureSpec) -> Result<CovMatrix> {
    check_m(m)?;
    model.require_pi2()?;
    let entries = refined(quad, "sigma_sb", |nodes| {
        let grid = Grid::new(model, m, nodes).expect("family checked");
        sigma_sb_at(&grid)
    })?;
    Ok(CovMatrix {
        m,
        kind: CovKind::SigmaSb,
        entries,
    })
}

fn sigma_sb_at(g: &Grid) -> Vec<f64> {
    let m = g.m;
    let d = m + 1;
    let th = g.theta;
    let pbar = g.pbar();
    let mut total = alloc::vec![0.0; m * m];

    let mut p_hi = alloc::vec![0.0; d];
    let mut p_lo = alloc::vec![0.0; d];
    let mut pa = alloc::vec![0.0; d];
    let mut pb = alloc::vec![0.0; d];
    let mut p2 = BivariateTable::zeroed(m);
    let mut scratch = alloc::vec![0.0; d * d];
    let mut joint = alloc::vec![0.0; d * d];
    let mut dg = alloc::vec![0.0; d];
    let mut dg2 = alloc::vec![0.0; d];

    // tail[τ][j'] = ∫_τ^∞ (d/dx p^(x)(j')) e^{-θx} dx, independent of ξ
    let tails: Vec<Vec<f64>> = g
        .outer
        .iter()
        .map(|&(tau, _)| {
            let mut t = alloc::vec![0.0; d];
            let scale = math::exp(-th * tau) / th;
            for (v, w) in g.gl.graded_to_one(0.0) {
                g.law.derivative_into(tau + tau_of(v, th), &mut dg);
                for jp in 1..=m {
                    t[jp] += w * scale * dg[jp];
                }
            }
            t
        })
        .collect();

    for &(xi, wx) in &g.xi {
        let mut t1 = alloc::vec![0.0; m * m];
        let mut t3 = alloc::vec![0.0; m * m];
        let mut t2 = alloc::vec![0.0; m * m];

        for (o, &(hi, wu)) in g.outer.iter().enumerate() {
            g.pmf(hi, &mut p_hi);
            g.pmf(xi * hi, &mut pb);
            for (k, &(s, ws)) in g.ratio.iter().enumerate() {
                let lo = s * hi;
                let dh = ws * th * hi * math::exp(-th * lo);
                g.pmf(lo, &mut p_lo);
                g.pmf(xi * lo, &mut pa);
                g.pair_laws[k].table_into((1.0 - xi) * hi, &mut p2);

                // X at level lo, Y at level hi
                overlap_joint(&pa, &pb, &p2, m, &mut scratch, &mut joint);
                for j in 1..=m {
                    for jp in 1..=m {
                        let both = joint[j * d + jp] + joint[jp * d + j];
                        let indep = p_lo[j] * p_hi[jp] + p_hi[j] * p_lo[jp];
                        t1[idx(m, j, jp)] += wu * dh * (both - indep);
                    }
                }

                // X3 at level τ = hi, threshold x = s·hi ≤ τ; p2 at ((1-ξ)τ, (1-ξ)x)
                let x = lo;
                g.law.derivative_into(x, &mut dg);
                let decay = math::exp(-th * xi * x);
                for j in 1..=m {
                    let mut prob = 0.0;
                    for l in 0..=j {
                        prob += pb[l] * p2.get(j - l, 0);
                    }
                    let prob = decay * prob;
                    for jp in 1..=m {
                        t3[idx(m, j, jp)] += wu * ws * hi * dg[jp] * prob;
                    }
                }

                // X2, Y2 with y = hi ≥ x = s·hi: survival exp(-θ(ξx + y))
                g.law.derivative_into(hi, &mut dg2);
                let surv = math::exp(-th * (xi * x + hi));
                // dy = du / (θ e^{-θy}), dx = hi ds
                let jac = ws * hi / (th * math::exp(-th * hi));
                for j in 1..=m {
                    for jp in 1..=m {
                        let sym = dg[j] * dg2[jp] + dg2[j] * dg[jp];
                        t2[idx(m, j, jp)] += wu * jac * sym * surv;
                    }
                }
            }
            // X3 tail: x > τ contributes e^{-θx} p^(ξτ)(j)
            let tail = &tails[o];
            for j in 1..=m {
                for jp in 1..=m {
                    t3[idx(m, j, jp)] += wu * (pb[j] * tail[jp] - p_hi[j] * pbar[jp]);
                }
            }
        }

        for j in 1..=m {
            for jp in 1..=m {
                let i = idx(m, j, jp);
                let inner = t1[i] + (t3[i] + t3[idx(m, jp, j)]) + (t2[i] - pbar[j] * pbar[jp]);
                total[i] += 2.0 * wx * inner;
            }
        }
    }
    total
}

/// Lower-triangular `A_m` with `v = A_m s`, where
/// `v_j = 4 s_j - 2 Σ_{k<j} π(j-k) s_k - 2 Σ_{k<j} p̄(j-k) v_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionMatrix {
    pub m: usize,
    pub entries: Vec<f64>,
}

impl RecursionMatrix {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.m + c]
    }

    pub fn apply(&self, s: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|r| (0..self.m).map(|c| self.get(r, c) * s[c]).sum())
            .collect()
    }
}

pub fn recursion_matrix(pi: &Pmf, pbar: &Pmf, m: usize) -> Result<RecursionMatrix> {
    check_m(m)?;
    let mut a = alloc::vec![0.0; m * m];
    for j in 1..=m {
        let r = j - 1;
        a[r * m + r] += 4.0;
        for k in 1..j {
            a[r * m + (k - 1)] -= 2.0 * pi.get(j - k);
            let coeff = 2.0 * pbar.get(j - k);
            for c in 0..m {
                let v = a[(k - 1) * m + c];
                a[r * m + c] -= coeff * v;
            }
        }
    }
    Ok(RecursionMatrix { m, entries: a })
}

/// `Γ = A Σ Aᵀ`.
pub fn gamma(sigma: &CovMatrix, a: &RecursionMatrix) -> Result<CovMatrix> {
    if sigma.m != a.m {
        return Err(invalid!("dimension mismatch: sigma is {0}x{0}, A is {1}x{1}", sigma.m, a.m));
    }
    let kind = match sigma.kind {
        CovKind::SigmaDb | CovKind::GammaDb => CovKind::GammaDb,
        CovKind::SigmaSb | CovKind::GammaSb => CovKind::GammaSb,
    };
    let s = sigma.to_dmatrix();
    let am = DMatrix::from_row_slice(a.m, a.m, &a.entries);
    let g = &am * s * am.transpose();
    let mut entries = Vec::with_capacity(a.m * a.m);
    for r in 0..a.m {
        for c in 0..a.m {
            entries.push(g[(r, c)]);
        }
    }
    Ok(CovMatrix { m: a.m, kind, entries })
}

/// `Γ_m` for the model's own `π` and `p̄`.
pub fn gamma_for_model(model: &CppModel, sigma: &CovMatrix) -> Result<CovMatrix> {
    let a = recursion_matrix(model.pi(), &pbar_theory(model, sigma.m), sigma.m)?;
    gamma(sigma, &a)
}

/// `σ²(m) = (Σ_{j≤m} jπ(j))^{-4} · (1, …, m) Γ_m (1, …, m)ᵀ`.
pub fn theta_asymp_var(gamma: &CovMatrix, pi: &Pmf, m: usize) -> Result<f64> {
    if m < 1 || m > gamma.m {
        return Err(invalid!("m={m} must lie in 1..={}", gamma.m));
    }
    let denom: f64 = (1..=m).map(|j| j as f64 * pi.get(j)).sum();
    if !(denom > 0.0) {
        return Err(Error::Degenerate {
            what: "sum of j*pi(j)",
            value: denom,
        });
    }
    let mut q = 0.0;
    for r in 0..m {
        for c in 0..m {
            q += (r + 1) as f64 * (c + 1) as f64 * gamma.get(r, c);
        }
    }
    Ok(q / math::powi(denom, 4))
}

/// Asymptotic variance `μ²(τ) = e^τ (τ + (1 - τ)² - e^{-τ})` of the
/// fixed-threshold blocks estimator of `π(1)` for serially independent data.
pub fn mu2_robert(tau: f64) -> f64 {
    math::exp(tau) * (tau + (1.0 - tau) * (1.0 - tau) - math::exp(-tau))
}

/// The `τ > 0` where `μ²(τ)` crosses `target`, by bisection (μ² is
/// increasing from 0).
pub fn robert_crossover(target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(invalid!("crossover target must be positive, got {target}"));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while mu2_robert(hi) < target {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(invalid!("no crossover below tau=1000 for target {target}"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mu2_robert(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Covariance `Cov(e_j(τ), e_{j'}(τ'))` of the sliding blocks empirical
/// process of compound probabilities, `0 ≤ τ ≤ τ'`.
pub fn sliding_process_cov(
    model: &CppModel,
    tau: f64,
    tau_prime: f64,
    j: usize,
    j_prime: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let family = model.require_pi2()?;
    if !(tau >= 0.0 && tau <= tau_prime && tau_prime.is_finite()) {
        return Err(invalid!("need 0 <= tau <= tau' < inf, got ({tau}, {tau_prime})"));
    }
    let m = j.max(j_prime);
    let law = ConvolutionPowers::new(model, m);
    let mut p = alloc::vec![0.0; m + 1];
    let mut pp = alloc::vec![0.0; m + 1];
    law.pmf_into(tau, &mut p);
    law.pmf_into(tau_prime, &mut pp);
    let product = p[j] * pp[j_prime];
    if tau_prime == 0.0 {
        let h = if j == 0 && j_prime == 0 { 1.0 } else { 0.0 };
        return Ok(2.0 * h - 2.0 * product);
    }
    let pair = BivariatePowers::new(model.theta(), family, tau / tau_prime, m);
    let integral = refined(quad, "sliding_process_cov", |nodes| {
        let gl = GaussLegendre::new(nodes);
        let d = m + 1;
        let mut pa = alloc::vec![0.0; d];
        let mut pb = alloc::vec![0.0; d];
        let mut p2 = BivariateTable::zeroed(m);
        let mut scratch = alloc::vec![0.0; d * d];
        let mut joint = alloc::vec![0.0; d * d];
        let mut s = 0.0;
        for (xi, w) in gl.unit() {
            law.pmf_into(xi * tau, &mut pa);
            law.pmf_into(xi * tau_prime, &mut pb);
            pair.table_into((1.0 - xi) * tau_prime, &mut p2);
            overlap_joint(&pa, &pb, &p2, m, &mut scratch, &mut joint);
            s += w * joint[j * d + j_prime];
        }
        alloc::vec![s]
    })?;
    Ok(2.0 * integral[0] - 2.0 * product)
}

/// Variance `p^(τ)(j) (1 - p^(τ)(j))` of the disjoint blocks limit process.
pub fn disjoint_process_var(model: &CppModel, tau: f64, j: usize) -> Result<f64> {
    let p = crate::cpmodel::cpp_pmf(model, tau, j)?.get(j);
    Ok(p * (1.0 - p))
}
