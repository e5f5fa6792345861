//! Block-maxima estimators for the limiting cluster size distribution and the
//! extremal index of a stationary time series.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! core: block maxima and rank transforms, the disjoint/sliding blocks
//! estimators of the cluster size distribution, three literature competitors,
//! the compound Poisson limit model, the asymptotic covariance formulas
//! evaluated by Gauss–Legendre quadrature, and seeded generators for the
//! reference time series models. IO, configuration and the Monte Carlo
//! harness live in the `clustersize` companion crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so NaN is rejected; index loops follow the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod blocks;
pub mod competitors;
pub mod cpmodel;
mod error;
pub mod estimators;
pub mod math;
pub mod quadrature;
pub mod simulate;
pub mod sweep;

pub use error::{Error, Result};

pub use asymptotics::{CovKind, CovMatrix};
pub use blocks::{BlockMaxima, BlockMode, RankTransform, Sample};
pub use competitors::{CompetitorKind, CompetitorSpec};
pub use cpmodel::{BivariatePmfFamily, CppModel, Pmf};
pub use estimators::{EstimatorSpec, Method, PbarEstimate, PiEstimate, Scale};
pub use simulate::{ModelKind, ModelSpec};
