//! Reference estimators of the cluster size distribution: the blocks
//! estimator of Hsing, the intervals-declustering estimator of Ferro and
//! Segers, and Robert's integrated disjoint blocks estimator.
//!
//! Order statistics follow one convention throughout: the `j`-th largest
//! value is the element at descending rank `j` after a stable sort, and an
//! observation exceeds a threshold when it is strictly greater.

use core::fmt;
use core::str::FromStr;

use alloc::vec::Vec;

use crate::blocks::{check_block_size, Sample};
use crate::error::{invalid, Error, Result};
use crate::estimators::{Method, PiEstimate};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompetitorKind {
    Hsing,
    Ferro,
    Robert,
}

impl CompetitorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CompetitorKind::Hsing => "hsing",
            CompetitorKind::Ferro => "ferro",
            CompetitorKind::Robert => "robert",
        }
    }
}

impl fmt::Display for CompetitorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CompetitorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hsing" => Ok(CompetitorKind::Hsing),
            "ferro" => Ok(CompetitorKind::Ferro),
            "robert" => Ok(CompetitorKind::Robert),
            other => Err(invalid!("unknown competitor `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompetitorSpec {
    pub kind: CompetitorKind,
    pub b: usize,
    pub m_max: usize,
    pub robert_sigma: f64,
    pub robert_phi: f64,
    /// `Some(g)`: average over a uniform `g`-point grid of levels in
    /// `[σ, φ]`; `None`: exact average over the interval.
    pub robert_grid: Option<usize>,
}

impl CompetitorSpec {
    pub fn new(kind: CompetitorKind, b: usize, m_max: usize) -> Self {
        Self {
            kind,
            b,
            m_max,
            robert_sigma: 0.7,
            robert_phi: 1.3,
            robert_grid: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_max < 1 {
            return Err(invalid!("m_max must be at least 1, got {}", self.m_max));
        }
        if !(self.robert_sigma > 0.0 && self.robert_sigma < self.robert_phi && self.robert_phi.is_finite()) {
            return Err(invalid!(
                "need 0 < sigma < phi, got sigma={} phi={}",
                self.robert_sigma,
                self.robert_phi
            ));
        }
        if let Some(g) = self.robert_grid {
            if g < 2 {
                return Err(invalid!("tau grid needs at least 2 points, got {g}"));
            }
        }
        Ok(())
    }
}

pub fn estimate(x: &Sample, spec: &CompetitorSpec) -> Result<PiEstimate> {
    spec.validate()?;
    let values = match spec.kind {
        CompetitorKind::Hsing => hsing_values(x, spec.b, spec.m_max)?,
        CompetitorKind::Ferro => ferro_values(x, spec.b, spec.m_max)?,
        CompetitorKind::Robert => robert_values(x, spec)?,
    };
    Ok(PiEstimate {
        method: Method::Competitor(*spec),
        values,
    })
}

pub fn hsing_pi(x: &Sample, b: usize, m_max: usize) -> Result<PiEstimate> {
    estimate(x, &CompetitorSpec::new(CompetitorKind::Hsing, b, m_max))
}

pub fn ferro_pi(x: &Sample, b: usize, m_max: usize) -> Result<PiEstimate> {
    estimate(x, &CompetitorSpec::new(CompetitorKind::Ferro, b, m_max))
}

pub fn robert_pi(x: &Sample, spec: &CompetitorSpec) -> Result<PiEstimate> {
    if spec.kind != CompetitorKind::Robert {
        return Err(invalid!("robert_pi called with a {} spec", spec.kind));
    }
    estimate(x, spec)
}

fn descending(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Relative frequencies of `sizes` equal to `1..=m_max`.
fn size_frequencies(sizes: impl Iterator<Item = usize>, total: usize, m_max: usize) -> Vec<f64> {
    let mut counts = alloc::vec![0usize; m_max];
    for s in sizes {
        if (1..=m_max).contains(&s) {
            counts[s - 1] += 1;
        }
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

fn hsing_values(x: &Sample, b: usize, m_max: usize) -> Result<Vec<f64>> {
    if b < 4 {
        return Err(invalid!("Hsing estimator needs b >= 4, got b={b}"));
    }
    check_block_size(x.len(), b)?;
    let n = x.len();
    let s = 2 * (b - 3);
    let rank = n - n / s;
    let mut asc = x.values().to_vec();
    asc.sort_by(f64::total_cmp);
    let v = asc[rank - 1];
    let counts: Vec<usize> = x
        .values()
        .chunks_exact(b)
        .map(|blk| blk.iter().filter(|&&y| y > v).count())
        .collect();
    let hit = counts.iter().filter(|&&c| c > 0).count();
    if hit == 0 {
        return Err(Error::Degenerate {
            what: "blocks with an exceedance",
            value: 0.0,
        });
    }
    Ok(size_frequencies(counts.into_iter(), hit, m_max))
}

/// Intervals estimator of the extremal index from inter-exceedance times.
pub fn intervals_theta(times: &[usize]) -> Result<f64> {
    if times.is_empty() {
        return Err(invalid!("need at least one inter-exceedance time"));
    }
    let n = (times.len() + 1) as f64;
    let max = times.iter().copied().max().unwrap_or(0);
    let raw = if max <= 2 {
        let s: f64 = times.iter().map(|&t| t as f64).sum();
        let s2: f64 = times.iter().map(|&t| (t * t) as f64).sum();
        2.0 * s * s / ((n - 1.0) * s2)
    } else {
        let s: f64 = times.iter().map(|&t| t as f64 - 1.0).sum();
        let s2: f64 = times.iter().map(|&t| (t as f64 - 1.0) * (t as f64 - 2.0)).sum();
        2.0 * s * s / ((n - 1.0) * s2)
    };
    Ok(raw.min(1.0))
}

/// Splits sorted exceedance positions into `clusters` groups at the
/// `clusters - 1` largest gaps (earliest gap wins ties); returns group sizes.
pub fn split_at_largest_gaps(positions: &[usize], clusters: usize) -> Result<Vec<usize>> {
    if clusters < 1 || clusters > positions.len() {
        return Err(invalid!(
            "cannot form {clusters} clusters from {} exceedances",
            positions.len()
        ));
    }
    let mut gaps: Vec<(usize, usize)> = positions
        .windows(2)
        .enumerate()
        .map(|(i, w)| (w[1] - w[0], i))
        .collect();
    gaps.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut cuts: Vec<usize> = gaps[..clusters - 1].iter().map(|g| g.1).collect();
    cuts.sort_unstable();
    let mut sizes = Vec::with_capacity(clusters);
    let mut start = 0;
    for c in cuts {
        sizes.push(c + 1 - start);
        start = c + 1;
    }
    sizes.push(positions.len() - start);
    Ok(sizes)
}

fn ferro_values(x: &Sample, b: usize, m_max: usize) -> Result<Vec<f64>> {
    check_block_size(x.len(), b)?;
    let n = x.len();
    let big_n = 3 * (n / b);
    if big_n < 4 || big_n >= n {
        return Err(invalid!("need 4 <= N=3*floor(n/b) < n, got N={big_n} with n={n}, b={b}"));
    }
    let thr = descending(x.values())[big_n];
    let positions: Vec<usize> = x
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > thr)
        .map(|(i, _)| i)
        .collect();
    if positions.len() < 2 {
        return Err(Error::Degenerate {
            what: "exceedance count",
            value: positions.len() as f64,
        });
    }
    let times: Vec<usize> = positions.windows(2).map(|w| w[1] - w[0]).collect();
    if times.iter().all(|&t| t == 1) {
        return Err(Error::Degenerate {
            what: "inter-exceedance times all 1",
            value: 1.0,
        });
    }
    let theta = intervals_theta(&times)?;
    let clusters = math::floor(theta * positions.len() as f64) as usize;
    if clusters < 1 {
        return Err(Error::Degenerate {
            what: "declustered cluster count",
            value: theta * positions.len() as f64,
        });
    }
    let sizes = split_at_largest_gaps(&positions, clusters)?;
    Ok(size_frequencies(sizes.into_iter(), clusters, m_max))
}

/// Inverts `p(m) = e^{-θτ} Σ_{j=1}^{m} (θτ)^j / j! · π^{*j}(m)` given
/// `p(0..=m_max)`; returns `(θ, π(1..=m_max))`.
pub fn robert_invert(p: &[f64], tau: f64) -> Result<(f64, Vec<f64>)> {
    if p.len() < 2 {
        return Err(invalid!("need p(0) and at least p(1)"));
    }
    if !(tau > 0.0) {
        return Err(invalid!("tau must be positive, got {tau}"));
    }
    let p0 = p[0];
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::Degenerate {
            what: "p(0)",
            value: p0,
        });
    }
    let theta = -math::ln(p0) / tau;
    let lam = theta * tau;
    let m_max = p.len() - 1;
    // conv[j][m] = π^{*j}(m) for 1 ≤ j ≤ m ≤ m_max
    let mut conv = alloc::vec![alloc::vec![0.0; m_max + 1]; m_max + 1];
    let mut coeff = alloc::vec![0.0; m_max + 1];
    coeff[1] = lam;
    for j in 2..=m_max {
        coeff[j] = coeff[j - 1] * lam / j as f64;
    }
    let mut pi = alloc::vec![0.0; m_max];
    for m in 1..=m_max {
        let mut rest = 0.0;
        for j in 2..=m {
            let mut c = 0.0;
            for i in 1..=m - (j - 1) {
                c += pi[i - 1] * conv[j - 1][m - i];
            }
            conv[j][m] = c;
            rest += coeff[j] * c;
        }
        let v = (p[m] / p0 - rest) / lam;
        pi[m - 1] = v;
        conv[1][m] = v;
    }
    Ok((theta, pi))
}

/// `π̂` from the disjoint blocks counts above the `(r+1)`-th largest value,
/// which leaves exactly `r` observations strictly above the threshold.
/// `None` when `p̂(0)` is 0 or 1.
fn robert_at_rank(x: &Sample, desc: &[f64], b: usize, r: usize, m_max: usize) -> Result<Option<Vec<f64>>> {
    let k = x.len() / b;
    let thr = desc[r];
    let mut counts = alloc::vec![0usize; m_max + 1];
    for blk in x.values().chunks_exact(b) {
        let c = blk.iter().filter(|&&v| v > thr).count();
        if c <= m_max {
            counts[c] += 1;
        }
    }
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / k as f64).collect();
    // θ̂τ = -log p̂(0) whatever τ is, so the level only enters through r
    match robert_invert(&p, r as f64 / k as f64) {
        Ok((_, pi)) => Ok(Some(pi)),
        Err(Error::Degenerate { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn robert_values(x: &Sample, spec: &CompetitorSpec) -> Result<Vec<f64>> {
    let b = spec.b;
    check_block_size(x.len(), b)?;
    let n = x.len();
    let k = (n / b) as f64;
    let desc = descending(x.values());
    let rank = |tau: f64| (math::ceil(k * tau) as usize).clamp(1, n - 1);
    let (lo, hi) = (spec.robert_sigma, spec.robert_phi);

    // (rank, weight) pairs: level τ uses r = ⌈kτ⌉ exceedances
    let pieces: Vec<(usize, f64)> = match spec.robert_grid {
        Some(g) => (0..g)
            .map(|step| (rank(lo + (hi - lo) * step as f64 / (g - 1) as f64), 1.0))
            .collect(),
        // π̂^(τ) is constant on each ((r-1)/k, r/k], so the average over
        // [σ, φ] is a finite weighted sum
        None => (rank(lo)..=rank(hi))
            .map(|r| {
                let a = lo.max((r as f64 - 1.0) / k);
                let z = hi.min(r as f64 / k);
                (r, (z - a).max(0.0))
            })
            .filter(|&(_, w)| w > 0.0)
            .collect(),
    };
    let mut sum = alloc::vec![0.0; spec.m_max];
    let mut used = 0.0;
    for (r, w) in pieces {
        if let Some(pi) = robert_at_rank(x, &desc, b, r, spec.m_max)? {
            for (s, v) in sum.iter_mut().zip(&pi) {
                *s += w * v;
            }
            used += w;
        }
    }
    if !(used > 0.0) {
        return Err(Error::Degenerate {
            what: "usable threshold levels",
            value: 0.0,
        });
    }
    Ok(sum.into_iter().map(|s| s / used).collect())
}
