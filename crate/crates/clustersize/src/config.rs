//! Experiment configuration and its flat `key = value` file format.
//!
//! ```text
//! # ARMAX study at reduced scale
//! model = armax(0.5)
//! n = 2000
//! reps = 100
//! block_grid = 6,8,10,12
//! estimators = sb-z,sb-y,robert
//! m_max = 5
//! master_seed = 7
//! ```
//!
//! Omitted keys take their defaults; `truth` (cluster size probabilities
//! `π(1..=m_max)`) and `truth_theta` default to the model's reference values.

use std::fmt;
use std::str::FromStr;

use clustersize_core::simulate::{ModelKind, DEFAULT_BURNIN};
use clustersize_core::{BlockMode, CompetitorKind, Scale};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorId {
    Blocks(BlockMode, Scale),
    Competitor(CompetitorKind),
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 7] = [
        EstimatorId::Blocks(BlockMode::Disjoint, Scale::Z),
        EstimatorId::Blocks(BlockMode::Disjoint, Scale::Y),
        EstimatorId::Blocks(BlockMode::Sliding, Scale::Z),
        EstimatorId::Blocks(BlockMode::Sliding, Scale::Y),
        EstimatorId::Competitor(CompetitorKind::Hsing),
        EstimatorId::Competitor(CompetitorKind::Ferro),
        EstimatorId::Competitor(CompetitorKind::Robert),
    ];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorId::Blocks(BlockMode::Disjoint, Scale::Z) => "db-z",
            EstimatorId::Blocks(BlockMode::Disjoint, Scale::Y) => "db-y",
            EstimatorId::Blocks(BlockMode::Sliding, Scale::Z) => "sb-z",
            EstimatorId::Blocks(BlockMode::Sliding, Scale::Y) => "sb-y",
            EstimatorId::Competitor(k) => k.as_str(),
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EstimatorId {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorId::ALL
            .into_iter()
            .find(|e| e.label() == s.trim())
            .ok_or_else(|| AppError::Config(format!("unknown estimator `{s}`")))
    }
}

/// Reference values the estimates are scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub pi: Vec<f64>,
    pub theta: f64,
}

const SQARCH_HALF_PI: [f64; 5] = [0.751, 0.168, 0.055, 0.014, 0.008];
const AR4_PI: [f64; 5] = [0.75, 0.1875, 0.0469, 0.0117, 0.0029];

/// Reference truth for a model, when one is known.
pub fn reference_truth(model: &ModelKind, m_max: usize) -> Result<Truth> {
    let listed = |pi: &[f64], theta: f64| {
        if m_max > pi.len() {
            return Err(AppError::Config(format!(
                "reference values for {model} stop at m={}; give `truth` explicitly",
                pi.len()
            )));
        }
        Ok(Truth {
            pi: pi[..m_max].to_vec(),
            theta,
        })
    };
    match *model {
        ModelKind::IidFrechet => Ok(geometric(0.0, m_max)),
        ModelKind::Armax { alpha } => Ok(geometric(alpha, m_max)),
        ModelKind::SqArch { lambda: 0.5 } => listed(&SQARCH_HALF_PI, 0.727),
        ModelKind::ArUniform { r: 4 } => listed(&AR4_PI, 0.75),
        // θ = 1 - 1/r with geometric cluster sizes
        ModelKind::ArUniform { r } => Ok(geometric(1.0 / f64::from(r), m_max)),
        ModelKind::SqArch { .. } => Err(AppError::Config(format!(
            "no reference values for {model}; give `truth` and `truth_theta`"
        ))),
    }
}

fn geometric(ratio: f64, m_max: usize) -> Truth {
    Truth {
        pi: (1..=m_max).map(|m| (1.0 - ratio) * ratio.powi(m as i32 - 1)).collect(),
        theta: 1.0 - ratio,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub n: usize,
    pub reps: usize,
    pub block_grid: Vec<usize>,
    pub estimators: Vec<EstimatorId>,
    pub m_max: usize,
    pub master_seed: u64,
    pub burnin: usize,
    pub truth: Truth,
}

impl ExperimentConfig {
    /// Full-scale study: n = 2000, 500 replications, b ∈ {6, 8, …, 38},
    /// every estimator, m ≤ 5.
    pub fn standard(model: ModelKind) -> Result<Self> {
        Ok(Self::with_truth(model, reference_truth(&model, 5)?))
    }

    fn with_truth(model: ModelKind, truth: Truth) -> Self {
        Self {
            model,
            n: 2000,
            reps: 500,
            block_grid: (6..=38).step_by(2).collect(),
            estimators: EstimatorId::ALL.to_vec(),
            m_max: 5,
            master_seed: 0,
            burnin: DEFAULT_BURNIN,
            truth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AppError::Config(msg));
        if self.estimators.is_empty() {
            return bad("no estimators configured".into());
        }
        if self.reps < 2 {
            return bad(format!("reps must be at least 2, got {}", self.reps));
        }
        if self.block_grid.is_empty() {
            return bad("block_grid is empty".into());
        }
        if self.m_max < 1 {
            return bad("m_max must be at least 1".into());
        }
        if self.truth.pi.len() != self.m_max {
            return bad(format!(
                "truth has {} entries but m_max is {}",
                self.truth.pi.len(),
                self.m_max
            ));
        }
        let needs_four = self.estimators.contains(&EstimatorId::Competitor(CompetitorKind::Hsing));
        for &b in &self.block_grid {
            if b < 2 || b % 2 != 0 || 2 * b > self.n {
                return bad(format!("block size {b} must be even, at least 2 and at most n/2 (n={})", self.n));
            }
            if needs_four && b < 4 {
                return bad(format!("hsing needs block sizes of at least 4, got {b}"));
            }
        }
        self.model.validate()?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut model = None;
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| AppError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "model" {
                model = Some(v.parse::<ModelKind>()?);
            } else {
                entries.push((i + 1, k.to_string(), v.to_string()));
            }
        }
        let model = model.ok_or_else(|| AppError::Config("missing `model`".into()))?;
        let mut cfg = Self::with_truth(
            model,
            Truth {
                pi: Vec::new(),
                theta: f64::NAN,
            },
        );
        let mut truth_pi: Option<Vec<f64>> = None;
        let mut truth_theta: Option<f64> = None;
        for (line, k, v) in entries {
            let err = |what: &str| AppError::Config(format!("line {line}: bad {what} `{v}`"));
            match k.as_str() {
                "n" => cfg.n = v.parse().map_err(|_| err("n"))?,
                "reps" => cfg.reps = v.parse().map_err(|_| err("reps"))?,
                "block_grid" => cfg.block_grid = parse_list(&v).map_err(|_| err("block_grid"))?,
                "estimators" => {
                    cfg.estimators = v.split(',').map(str::parse).collect::<Result<Vec<_>>>()?
                }
                "m_max" => cfg.m_max = v.parse().map_err(|_| err("m_max"))?,
                "master_seed" => cfg.master_seed = v.parse().map_err(|_| err("master_seed"))?,
                "burnin" => cfg.burnin = v.parse().map_err(|_| err("burnin"))?,
                "truth" => truth_pi = Some(parse_list(&v).map_err(|_| err("truth"))?),
                "truth_theta" => truth_theta = Some(v.parse().map_err(|_| err("truth_theta"))?),
                other => return Err(AppError::Config(format!("line {line}: unknown key `{other}`"))),
            }
        }
        cfg.truth = match (truth_pi, truth_theta) {
            (Some(pi), Some(theta)) => Truth { pi, theta },
            (Some(pi), None) => {
                let s: f64 = pi.iter().enumerate().map(|(j, p)| (j + 1) as f64 * p).sum();
                Truth { pi, theta: 1.0 / s }
            }
            (None, theta) => {
                let mut t = reference_truth(&model, cfg.m_max)?;
                if let Some(th) = theta {
                    t.theta = th;
                }
                t
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[String]| v.join(",");
        format!(
            "model = {}\nn = {}\nreps = {}\nblock_grid = {}\nestimators = {}\nm_max = {}\nmaster_seed = {}\nburnin = {}\ntruth = {}\ntruth_theta = {}\n",
            self.model,
            self.n,
            self.reps,
            join(&self.block_grid.iter().map(|b| b.to_string()).collect::<Vec<_>>()),
            join(&self.estimators.iter().map(|e| e.to_string()).collect::<Vec<_>>()),
            self.m_max,
            self.master_seed,
            self.burnin,
            join(&self.truth.pi.iter().map(|p| p.to_string()).collect::<Vec<_>>()),
            self.truth.theta,
        )
    }
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, T::Err> {
    v.split(',').map(|s| s.trim().parse()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_and_defaults() {
        let cfg = ExperimentConfig::parse("model = armax(0.5)\n").unwrap();
        assert_eq!(cfg.n, 2000);
        assert_eq!(cfg.reps, 500);
        assert_eq!(cfg.block_grid.first(), Some(&6));
        assert_eq!(cfg.block_grid.last(), Some(&38));
        assert_eq!(cfg.block_grid.len(), 17);
        assert_eq!(cfg.truth.pi, vec![0.5, 0.25, 0.125, 0.0625, 0.03125]);
        assert_eq!(cfg.truth.theta, 0.5);
    }

    #[test]
    fn parse_full_round_trip() {
        let text = "# study\nmodel = sqarch(0.5)\nn = 400  # short\nreps = 3\nblock_grid = 6, 8\n\
                    estimators = sb-z,hsing\nm_max = 2\nmaster_seed = 9\nburnin = 50\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.truth.pi, vec![0.751, 0.168]);
        assert_eq!(cfg.truth.theta, 0.727);
        assert_eq!(cfg.estimators.len(), 2);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "n = 10\n",
            "model = armax(0.5)\nfoo = 1\n",
            "model = armax(0.5)\nestimators = \n",
            "model = armax(0.5)\nestimators = sb-q\n",
            "model = armax(0.5)\nblock_grid = 7\n",
            "model = armax(0.5)\nreps = 1\n",
            "model = armax(0.5)\nn = 20\nblock_grid = 12\n",
            "model = sqarch(0.3)\n",
            "model = armax(0.5)\nm_max = 7\ntruth = 0.5\n",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
    }
}
