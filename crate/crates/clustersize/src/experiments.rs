//! Monte Carlo study of the estimators over a block-size grid.
//!
//! Replication `r` simulates one path from seed
//! `substream_seed(master_seed, r)` and evaluates every configured
//! estimator at every block size. Results land in a slot indexed by `r`
//! and are reduced in index order once all replications finish, so the
//! summary does not depend on the number of workers.

use clustersize_core::competitors::{self, CompetitorSpec};
use clustersize_core::estimators::{pbar_hat, pi_from_pbar};
use clustersize_core::simulate::{gen, substream_seed, ModelSpec};
use clustersize_core::{Error as CoreError, EstimatorSpec, Sample};
use rayon::prelude::*;

use crate::config::{EstimatorId, ExperimentConfig};
use crate::error::{AppError, Result};

/// `π̂(1..=m_max)` of one estimator at one block size.
pub fn estimate_pi(x: &Sample, id: EstimatorId, b: usize, m_max: usize) -> clustersize_core::Result<Vec<f64>> {
    match id {
        EstimatorId::Blocks(mode, scale) => {
            let spec = EstimatorSpec::new(mode, scale, b, m_max)?;
            Ok(pi_from_pbar(&pbar_hat(x, &spec)?).values)
        }
        EstimatorId::Competitor(kind) => {
            Ok(competitors::estimate(x, &CompetitorSpec::new(kind, b, m_max))?.values)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: EstimatorId,
    pub b: usize,
    pub m: usize,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub n_missing: usize,
}

impl SummaryRow {
    pub fn mse_1e3(&self) -> f64 {
        self.mse * 1e3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Bias,
    Variance,
    Mse,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Bias => "bias",
            Metric::Variance => "variance",
            Metric::Mse => "mse",
        }
    }

    pub fn of(self, row: &SummaryRow) -> f64 {
        match self {
            Metric::Bias => row.bias,
            Metric::Variance => row.variance,
            Metric::Mse => row.mse,
        }
    }
}

/// Rows ordered by estimator (config order), then block size, then `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub reps: usize,
    pub estimators: Vec<EstimatorId>,
    pub block_grid: Vec<usize>,
    pub m_max: usize,
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn row(&self, estimator: EstimatorId, b: usize, m: usize) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.b == b && r.m == m)
    }

    /// Row with the smallest MSE over the block grid; the smallest `b` wins ties.
    pub fn min_over_b(&self, estimator: EstimatorId, m: usize) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .filter(|r| r.estimator == estimator && r.m == m && r.mse.is_finite())
            .fold(None, |best: Option<&SummaryRow>, r| match best {
                Some(b) if b.mse <= r.mse => Some(b),
                _ => Some(r),
            })
    }
}

type RepResult = Vec<Option<Vec<f64>>>;

fn run_rep(cfg: &ExperimentConfig, rep: usize) -> Result<RepResult> {
    let spec = ModelSpec {
        kind: cfg.model,
        n: cfg.n,
        burnin: cfg.burnin,
        seed: substream_seed(cfg.master_seed, rep as u64),
    };
    let x = gen(&spec)?;
    let mut out = Vec::with_capacity(cfg.estimators.len() * cfg.block_grid.len());
    for &id in &cfg.estimators {
        for &b in &cfg.block_grid {
            match estimate_pi(&x, id, b, cfg.m_max) {
                Ok(v) => out.push(Some(v)),
                Err(CoreError::Degenerate { .. }) => out.push(None),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(out)
}

/// Runs the study on `workers` threads (0 picks the machine's parallelism).
pub fn run(cfg: &ExperimentConfig, workers: usize) -> Result<SummaryTable> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| AppError::Usage(format!("cannot start worker pool: {e}")))?;
    let slots: Vec<Result<RepResult>> =
        pool.install(|| (0..cfg.reps).into_par_iter().map(|r| run_rep(cfg, r)).collect());
    let slots = slots.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(reduce(cfg, &slots))
}

fn reduce(cfg: &ExperimentConfig, slots: &[RepResult]) -> SummaryTable {
    let mut rows = Vec::new();
    let mut cell = 0;
    for &estimator in &cfg.estimators {
        for &b in &cfg.block_grid {
            for m in 1..=cfg.m_max {
                let truth = cfg.truth.pi[m - 1];
                let values: Vec<f64> = slots
                    .iter()
                    .filter_map(|rep| rep[cell].as_ref().map(|v| v[m - 1]))
                    .collect();
                let n_missing = slots.len() - values.len();
                let k = values.len() as f64;
                let mean = values.iter().sum::<f64>() / k;
                let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k;
                let mse = values.iter().map(|v| (v - truth) * (v - truth)).sum::<f64>() / k;
                rows.push(SummaryRow {
                    estimator,
                    b,
                    m,
                    bias: mean - truth,
                    variance,
                    mse,
                    n_missing,
                });
            }
            cell += 1;
        }
    }
    SummaryTable {
        reps: cfg.reps,
        estimators: cfg.estimators.clone(),
        block_grid: cfg.block_grid.clone(),
        m_max: cfg.m_max,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clustersize_core::simulate::ModelKind;

    fn tiny() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::standard(ModelKind::IidFrechet).unwrap();
        cfg.n = 100;
        cfg.reps = 2;
        cfg.block_grid = vec![4, 6, 10];
        cfg.master_seed = 3;
        cfg
    }

    #[test]
    fn identity_holds_per_row() {
        let table = run(&tiny(), 1).unwrap();
        assert_eq!(table.rows.len(), 7 * 3 * 5);
        for r in &table.rows {
            if r.n_missing < table.reps {
                assert!((r.mse - (r.variance + r.bias * r.bias)).abs() <= 1e-12 * (1.0 + r.mse), "{r:?}");
            }
        }
    }

    #[test]
    fn min_over_b_prefers_smallest_mse() {
        let table = run(&tiny(), 1).unwrap();
        let id = EstimatorId::ALL[2];
        let best = table.min_over_b(id, 1).unwrap();
        for &b in &table.block_grid {
            assert!(best.mse <= table.row(id, b, 1).unwrap().mse);
        }
    }

    #[test]
    fn missing_reps_are_excluded_and_counted() {
        let mut cfg = tiny();
        cfg.estimators = vec![EstimatorId::ALL[0]];
        cfg.block_grid = vec![4];
        cfg.m_max = 1;
        cfg.truth.pi = vec![1.0];
        cfg.reps = 3;
        let slots = vec![vec![Some(vec![0.8])], vec![None], vec![Some(vec![1.0])]];
        let table = reduce(&cfg, &slots);
        let r = &table.rows[0];
        assert_eq!(r.n_missing, 1);
        assert!((r.bias + 0.1).abs() < 1e-15);
        assert!((r.variance - 0.01).abs() < 1e-15);
        assert!((r.mse - 0.02).abs() < 1e-15);
    }
}
