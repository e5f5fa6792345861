//! Elementary functions routed through `libm` so the core stays `no_std`.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

/// Poisson probabilities `e^{-λ} λ^k / k!` for `k = 0..=k_max`.
pub fn poisson_weights(lambda: f64, k_max: usize, out: &mut [f64]) {
    debug_assert!(out.len() > k_max);
    let mut w = exp(-lambda);
    out[0] = w;
    for k in 1..=k_max {
        w *= lambda / k as f64;
        out[k] = w;
    }
}
