//! Seeded generators for the benchmark time series.
//!
//! Every path draws from one `ChaCha8Rng` seeded with `seed`; the start
//! value is drawn first, then one innovation per step through
//! `burnin + n` steps, of which the first `burnin` are discarded. The
//! i.i.d. Fréchet path consumes the generator exactly like ARMAX, so
//! `armax(0)` reproduces it.

use core::fmt;
use core::str::FromStr;

use alloc::string::ToString;
use alloc::vec::Vec;

use rand::distr::{Distribution, Open01};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::blocks::Sample;
use crate::error::{invalid, Error, Result};
use crate::math;

pub const DEFAULT_BURNIN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// `X_s = max(αX_{s-1}, (1-α)Z_s)`, `Z_s` standard Fréchet.
    Armax { alpha: f64 },
    /// `X_s = (2·10⁻⁵ + λX_{s-1}) Z_s²`, `Z_s` standard normal.
    SqArch { lambda: f64 },
    /// `X_s = X_{s-1}/r + D_s/r`, `D_s` uniform on `{0, …, r-1}`.
    ArUniform { r: u32 },
    IidFrechet,
}

impl ModelKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelKind::Armax { alpha } if !(0.0..1.0).contains(&alpha) => {
                Err(invalid!("armax alpha must lie in [0, 1), got {alpha}"))
            }
            ModelKind::SqArch { lambda } if !(lambda > 0.0 && lambda < 1.0) => {
                Err(invalid!("sqarch lambda must lie in (0, 1), got {lambda}"))
            }
            ModelKind::ArUniform { r } if r < 2 => Err(invalid!("ar r must be at least 2, got {r}")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Armax { alpha } => write!(f, "armax({alpha})"),
            ModelKind::SqArch { lambda } => write!(f, "sqarch({lambda})"),
            ModelKind::ArUniform { r } => write!(f, "ar({r})"),
            ModelKind::IidFrechet => f.write_str("iid"),
        }
    }
}

/// Parses `armax(0.5)`, `sqarch(0.5)`, `ar(2)` or `iid`.
impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "iid" || s == "iid_frechet" {
            return Ok(ModelKind::IidFrechet);
        }
        let (name, rest) = s
            .split_once('(')
            .ok_or_else(|| invalid!("unknown model `{s}`"))?;
        let arg = rest
            .strip_suffix(')')
            .ok_or_else(|| invalid!("missing `)` in model `{s}`"))?
            .trim();
        let bad = |_| invalid!("bad parameter `{arg}` in model `{s}`");
        let kind = match name.trim() {
            "armax" => ModelKind::Armax {
                alpha: arg.parse().map_err(bad)?,
            },
            "sqarch" => ModelKind::SqArch {
                lambda: arg.parse().map_err(bad)?,
            },
            "ar" | "ar_uniform" => ModelKind::ArUniform {
                r: arg.parse().map_err(|_| invalid!("bad parameter `{arg}` in model `{s}`"))?,
            },
            other => return Err(invalid!("unknown model `{}`", other.to_string())),
        };
        kind.validate()?;
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: usize,
    pub burnin: usize,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            burnin: DEFAULT_BURNIN,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if self.n < 10 {
            return Err(invalid!("sample length must be at least 10, got {}", self.n));
        }
        Ok(())
    }
}

fn frechet<R: RngCore>(rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    -1.0 / math::ln(u)
}

pub fn gen(spec: &ModelSpec) -> Result<Sample> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.burnin + spec.n;
    let mut out = Vec::with_capacity(spec.n);
    let keep = |s: usize, v: f64, out: &mut Vec<f64>| {
        if s >= spec.burnin {
            out.push(v);
        }
    };
    match spec.kind {
        ModelKind::Armax { alpha } => {
            let mut x = frechet(&mut rng);
            for s in 0..total {
                x = (alpha * x).max((1.0 - alpha) * frechet(&mut rng));
                keep(s, x, &mut out);
            }
        }
        ModelKind::IidFrechet => {
            let _ = frechet(&mut rng);
            for s in 0..total {
                keep(s, frechet(&mut rng), &mut out);
            }
        }
        ModelKind::SqArch { lambda } => {
            let z: f64 = rng.sample(StandardNormal);
            let mut x = 1e-4 * z * z;
            for s in 0..total {
                let z: f64 = rng.sample(StandardNormal);
                x = (2e-5 + lambda * x) * z * z;
                keep(s, x, &mut out);
            }
        }
        ModelKind::ArUniform { r } => {
            let rf = f64::from(r);
            let mut x: f64 = rng.random();
            for s in 0..total {
                let d = rng.random_range(0..r);
                x = x / rf + f64::from(d) / rf;
                keep(s, x, &mut out);
            }
        }
    }
    Sample::new(out)
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `rep` under `master`:
/// `mix(master + mix(rep ^ 0x9e3779b97f4a7c15))` with the splitmix64
/// finalizer `mix`. For a fixed master this is a bijection of `rep`, so
/// distinct replications never share a stream. `substream_seed(0, 0)` is
/// `0x48218226ff3cd4bf`.
pub fn substream_seed(master: u64, rep: u64) -> u64 {
    mix64(master.wrapping_add(mix64(rep ^ 0x9e37_79b9_7f4a_7c15)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: ModelKind, n: usize, seed: u64) -> ModelSpec {
        ModelSpec::new(kind, n, seed)
    }

    #[test]
    fn deterministic() {
        for kind in [
            ModelKind::Armax { alpha: 0.5 },
            ModelKind::SqArch { lambda: 0.5 },
            ModelKind::ArUniform { r: 2 },
            ModelKind::IidFrechet,
        ] {
            let a = gen(&spec(kind, 500, 42)).unwrap();
            let b = gen(&spec(kind, 500, 42)).unwrap();
            let c = gen(&spec(kind, 500, 43)).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
            assert_eq!(a.len(), 500);
        }
    }

    #[test]
    fn armax_frechet_marginal() {
        let x = gen(&spec(ModelKind::Armax { alpha: 0.5 }, 100_000, 7)).unwrap();
        let frac = x.values().iter().filter(|&&v| v <= 1.0).count() as f64 / 1e5;
        assert!((frac - (-1.0f64).exp()).abs() < 0.01, "{frac}");
    }

    #[test]
    fn ar_uniform_marginal_and_range() {
        let r = 4;
        let x = gen(&spec(ModelKind::ArUniform { r }, 100_000, 8)).unwrap();
        let mean = x.values().iter().sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
        assert!(x.values().iter().all(|&v| (0.0..1.0 + 1.0 / r as f64).contains(&v)));
    }

    #[test]
    fn sqarch_positive_and_finite() {
        let x = gen(&spec(ModelKind::SqArch { lambda: 0.5 }, 20_000, 9)).unwrap();
        assert!(x.values().iter().all(|&v| v > 0.0 && v.is_finite()));
    }

    #[test]
    fn armax_zero_is_iid() {
        let a = gen(&spec(ModelKind::Armax { alpha: 0.0 }, 1000, 11)).unwrap();
        let b = gen(&spec(ModelKind::IidFrechet, 1000, 11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn burnin_shifts_the_stream() {
        let mut s = spec(ModelKind::IidFrechet, 100, 3);
        s.burnin = 0;
        let short = gen(&s).unwrap();
        s.burnin = 10;
        let long = gen(&s).unwrap();
        assert_eq!(&short.values()[10..], &long.values()[..90]);
    }

    #[test]
    fn parse_and_display() {
        for text in ["armax(0.5)", "sqarch(0.25)", "ar(2)", "iid"] {
            let k: ModelKind = text.parse().unwrap();
            assert_eq!(alloc::format!("{k}"), text);
        }
        assert!("armax(1.5)".parse::<ModelKind>().is_err());
        assert!("ar(1)".parse::<ModelKind>().is_err());
        assert!("garch(0.1)".parse::<ModelKind>().is_err());
        assert!("armax(0.5".parse::<ModelKind>().is_err());
        assert!(gen(&spec(ModelKind::IidFrechet, 5, 0)).is_err());
    }

    #[test]
    fn substream_pinned_and_distinct() {
        assert_eq!(substream_seed(0, 0), 0x4821_8226_ff3c_d4bf);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1_000_000 {
            let s = rng.next_u64();
            assert_ne!(substream_seed(s, 0), substream_seed(s, 1));
        }
        let forward: Vec<u64> = (0..50).map(|k| substream_seed(99, k)).collect();
        let backward: Vec<u64> = (0..50).rev().map(|k| substream_seed(99, k)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
    }
}
