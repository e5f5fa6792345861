//! Block maxima, empirical CDF transform and exceedance counting.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// A finite, in-memory observation sequence `X_1, …, X_n` (n ≥ 2).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid!("a sample needs at least 2 observations, got {}", values.len()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid!("observation {} is not finite ({})", pos + 1, values[pos]));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Checks `2 ≤ b ≤ n/2`.
    pub fn check_block_size(&self, b: usize) -> Result<()> {
        check_block_size(self.len(), b)
    }
}

impl AsRef<[f64]> for Sample {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_block_size(n: usize, b: usize) -> Result<()> {
    if b < 2 || 2 * b > n {
        return Err(invalid!("block size b={b} must satisfy 2 <= b <= n/2 for n={n}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockMode {
    Disjoint,
    Sliding,
}

impl BlockMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockMode::Disjoint => "disjoint",
            BlockMode::Sliding => "sliding",
        }
    }

    /// Number of blocks of size `b` in a sample of length `n`.
    pub fn block_count(self, n: usize, b: usize) -> usize {
        match self {
            BlockMode::Disjoint => n / b,
            BlockMode::Sliding => n + 1 - b,
        }
    }

    /// 0-based index of the first observation of block `i`.
    pub fn block_start(self, i: usize, b: usize) -> usize {
        match self {
            BlockMode::Disjoint => i * b,
            BlockMode::Sliding => i,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockMaxima {
    pub b: usize,
    pub mode: BlockMode,
    pub maxima: Vec<f64>,
}

/// Maxima of the `⌊n/b⌋` non-overlapping blocks; a trailing partial block
/// is discarded.
pub fn disjoint_maxima(x: &Sample, b: usize) -> Result<BlockMaxima> {
    x.check_block_size(b)?;
    Ok(BlockMaxima {
        b,
        mode: BlockMode::Disjoint,
        maxima: disjoint_window_maxima(x.values(), b),
    })
}

/// Maxima of all `n - b + 1` windows of length `b`, in O(n).
pub fn sliding_maxima(x: &Sample, b: usize) -> Result<BlockMaxima> {
    x.check_block_size(b)?;
    Ok(BlockMaxima {
        b,
        mode: BlockMode::Sliding,
        maxima: sliding_window_maxima(x.values(), b),
    })
}

pub(crate) fn window_maxima(values: &[f64], b: usize, mode: BlockMode) -> Vec<f64> {
    match mode {
        BlockMode::Disjoint => disjoint_window_maxima(values, b),
        BlockMode::Sliding => sliding_window_maxima(values, b),
    }
}

fn disjoint_window_maxima(values: &[f64], b: usize) -> Vec<f64> {
    values
        .chunks_exact(b)
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Monotone deque: the front always holds the index of the current window
/// maximum, and values behind it are strictly decreasing.
fn sliding_window_maxima(values: &[f64], b: usize) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n + 1 - b);
    let mut deque: VecDeque<usize> = VecDeque::with_capacity(b);
    for (s, &v) in values.iter().enumerate() {
        while deque.back().is_some_and(|&t| values[t] <= v) {
            deque.pop_back();
        }
        deque.push_back(s);
        if deque.front().is_some_and(|&t| t + b <= s) {
            deque.pop_front();
        }
        if s + 1 >= b {
            out.push(values[deque[0]]);
        }
    }
    out
}

/// Empirical CDF evaluated at the observations, `F̂_n(X_s) = #{t : X_t ≤ X_s} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTransform {
    pub cdf_values: Vec<f64>,
}

/// Empirical CDF transform; tied observations share the same value.
pub fn ranks(x: &Sample) -> RankTransform {
    RankTransform {
        cdf_values: ecdf_at_observations(x.values()),
    }
}

pub(crate) fn ecdf_at_observations(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = alloc::vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let f = end as f64 / n as f64;
        for &idx in &order[start..end] {
            out[idx] = f;
        }
        start = end;
    }
    out
}

/// Number of observations in `window_start..window_start + b` strictly
/// greater than `threshold`.
pub fn count_exceedances(x: &Sample, window_start: usize, b: usize, threshold: f64) -> Result<usize> {
    let end = window_start
        .checked_add(b)
        .filter(|&e| e <= x.len() && b > 0)
        .ok_or_else(|| {
            invalid!(
                "window [{}, {}) does not fit in a sample of length {}",
                window_start,
                window_start.saturating_add(b),
                x.len()
            )
        })?;
    Ok(x.values()[window_start..end].iter().filter(|&&v| v > threshold).count())
}
