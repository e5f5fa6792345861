//! Pair histograms behind the sliding blocks estimator.
//!
//! For every sliding window `i` with threshold `t_i` we need the histogram,
//! over all windows `i'` disjoint from `i`, of the number of observations in
//! `i'` strictly above `t_i`. The direct enumeration costs O(n²·b). The sweep
//! visits thresholds in decreasing order while observations are switched on
//! as the threshold passes below them; each switch touches the at most `b`
//! windows containing that position. A global histogram of per-window
//! counters is kept current, and each query subtracts the `≤ 2b - 1`
//! overlapping windows by direct lookup. Total cost O(n·b + n·log n).

use alloc::vec::Vec;

use crate::blocks::check_block_size;
use crate::error::{invalid, Result};

/// Per-window histograms of exceedance counts over the disjoint partner
/// windows. Bucket `c ≤ m_max` counts partners with exactly `c`
/// exceedances; bucket `m_max + 1` collects everything larger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairHistogram {
    bins: usize,
    rows: Vec<u64>,
}

impl PairHistogram {
    fn zeroed(windows: usize, m_max: usize) -> Self {
        let bins = m_max + 2;
        Self {
            bins,
            rows: alloc::vec![0; windows * bins],
        }
    }

    pub fn windows(&self) -> usize {
        self.rows.len() / self.bins
    }

    pub fn m_max(&self) -> usize {
        self.bins - 2
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.bins..(i + 1) * self.bins]
    }

    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.rows[i * self.bins..(i + 1) * self.bins]
    }

    /// Bucket totals summed over all query windows.
    pub fn totals(&self) -> Vec<u64> {
        let mut out = alloc::vec![0u64; self.bins];
        for row in self.rows.chunks_exact(self.bins) {
            for (o, &c) in out.iter_mut().zip(row) {
                *o += c;
            }
        }
        out
    }

    /// Number of (query, partner) pairs accounted for.
    pub fn pair_count(&self) -> u64 {
        self.rows.iter().sum()
    }
}

/// `|D_n|`: ordered pairs of sliding-window starts whose windows are
/// disjoint, i.e. `|i - i'| ≥ b`, counted exactly at the boundaries.
pub fn disjoint_pair_count(n: usize, b: usize) -> u64 {
    let w = (n + 1 - b) as u64;
    let near: u64 = (0..n + 1 - b).map(|i| near_range(i, b, n + 1 - b).len() as u64).sum();
    w * w - near
}

fn near_range(i: usize, b: usize, windows: usize) -> core::ops::Range<usize> {
    i.saturating_sub(b - 1)..(i + b).min(windows)
}

fn check_inputs(values: &[f64], b: usize, thresholds: &[f64]) -> Result<usize> {
    check_block_size(values.len(), b)?;
    let windows = values.len() + 1 - b;
    if thresholds.len() != windows {
        return Err(invalid!(
            "expected one threshold per sliding window ({windows}), got {}",
            thresholds.len()
        ));
    }
    if values.iter().chain(thresholds).any(|v| v.is_nan()) {
        return Err(invalid!("values and thresholds must not be NaN"));
    }
    Ok(windows)
}

/// Threshold sweep; output equals [`naive_pair_histogram`] exactly.
///
/// `values` are the quantities compared against the thresholds (raw
/// observations for the Z-scale, empirical CDF values for the Y-scale) and
/// `thresholds[i]` belongs to the sliding window starting at `i`.
pub fn sliding_pair_sweep(
    values: &[f64],
    b: usize,
    thresholds: &[f64],
    m_max: usize,
) -> Result<PairHistogram> {
    let windows = check_inputs(values, b, thresholds)?;
    let cap = m_max + 1;

    let mut positions: Vec<usize> = (0..values.len()).collect();
    positions.sort_by(|&p, &q| values[q].total_cmp(&values[p]));
    let mut queries: Vec<usize> = (0..windows).collect();
    queries.sort_by(|&p, &q| thresholds[q].total_cmp(&thresholds[p]));

    let mut counters = alloc::vec![0usize; windows];
    let mut live = alloc::vec![0u64; cap + 1];
    live[0] = windows as u64;

    let mut out = PairHistogram::zeroed(windows, m_max);
    let mut next = 0;
    for &i in &queries {
        let t = thresholds[i];
        while next < positions.len() && values[positions[next]] > t {
            let s = positions[next];
            for w in s.saturating_sub(b - 1)..=s.min(windows - 1) {
                let c = counters[w];
                if c < cap {
                    live[c] -= 1;
                    live[c + 1] += 1;
                }
                counters[w] = c + 1;
            }
            next += 1;
        }
        let row = out.row_mut(i);
        row.copy_from_slice(&live);
        for w in near_range(i, b, windows) {
            row[counters[w].min(cap)] -= 1;
        }
    }
    Ok(out)
}

/// Direct O(n²·b) enumeration over all disjoint window pairs.
pub fn naive_pair_histogram(
    values: &[f64],
    b: usize,
    thresholds: &[f64],
    m_max: usize,
) -> Result<PairHistogram> {
    let windows = check_inputs(values, b, thresholds)?;
    let cap = m_max + 1;
    let mut out = PairHistogram::zeroed(windows, m_max);
    for (i, &t) in thresholds.iter().enumerate() {
        let row = out.row_mut(i);
        for j in 0..windows {
            if i.abs_diff(j) < b {
                continue;
            }
            let c = values[j..j + b].iter().filter(|&&v| v > t).count();
            row[c.min(cap)] += 1;
        }
    }
    Ok(out)
}
