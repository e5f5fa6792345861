//! Gauss–Legendre rules and the quadrature settings shared by the
//! asymptotic covariance evaluations.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math;

/// Settings for the covariance quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss–Legendre order used along every integration axis.
    pub nodes_1d: usize,
    /// Re-evaluate with twice the nodes and fail if any entry moves by more
    /// than `tolerance`.
    pub refinement: bool,
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes_1d: 64,
            refinement: true,
            tolerance: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_1d < 8 {
            return Err(invalid!("quadrature needs at least 8 nodes, got {}", self.nodes_1d));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid!("quadrature tolerance must be positive, got {}", self.tolerance));
        }
        Ok(())
    }

    pub fn with_nodes(self, nodes_1d: usize) -> Self {
        Self { nodes_1d, ..self }
    }
}

/// Exponent of the polynomial grading towards the right end of `[a, 1]`.
///
/// Integrands written in `u = 1 - e^{-θτ}` carry powers of `log(1 - u)`;
/// the map `u = 1 - (1 - a)(1 - v)^3` turns those into smooth functions.
const GRADING: i32 = 3;

/// An `n`-point Gauss–Legendre rule, stored on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `P_n`, found by Newton iteration from the
    /// usual Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = math::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]; x is the positive root of the pair
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights on `[0, 1]`.
    pub fn unit(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Nodes and weights on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = b - a;
        self.unit().map(move |(t, w)| (a + h * t, h * w))
    }

    /// Nodes and weights on `[a, 1]`, clustered polynomially towards 1.
    pub fn graded_to_one(&self, a: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 1.0 - a;
        self.unit().map(move |(t, w)| {
            let s = 1.0 - t;
            let u = 1.0 - h * math::powi(s, GRADING);
            (u, w * h * GRADING as f64 * math::powi(s, GRADING - 1))
        })
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
