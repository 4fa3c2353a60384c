//! Shared numerical kernels.
//!
//! Everything here is pure and reentrant. Tolerances are always passed in by
//! the caller; there is no crate-wide epsilon.

mod bessel;
mod fft;
mod quadrature;

pub use bessel::{bessel_i, bessel_i_scaled};
pub use fft::{dft_grid, fft_in_place, Sign};
pub use quadrature::{
    gauss_hermite, gauss_legendre, integrate_adaptive, Estimate, QuadratureMethod, QuadratureSpec,
};

use num_complex::Complex64;

/// Below this magnitude `sinc` switches to its Taylor expansion.
pub const SINC_TAYLOR_THRESHOLD: f64 = 1e-4;

/// `sin(x) / x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SINC_TAYLOR_THRESHOLD {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        libm::sin(x) / x
    }
}

/// Principal-branch power `z^p = exp(p Log z)`, with `0^p = 0` for `Re p > 0`.
pub fn principal_pow(z: Complex64, p: f64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return z;
    }
    (z.ln() * p).exp()
}

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Binomial probability `C(n,k) p^k (1-p)^(n-k)`, evaluated in log space.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    // exact endpoints avoid ln(0)
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    libm::exp(ln_binomial(n, k) + k as f64 * libm::log(p) + (n - k) as f64 * libm::log1p(-p))
}

/// Poisson probability `e^-mu mu^k / k!`, evaluated in log space.
pub fn poisson_pmf(mu: f64, k: u64) -> f64 {
    if mu <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    libm::exp(k as f64 * libm::log(mu) - mu - ln_factorial(k))
}

/// Truncation order keeping a Poisson tail below roughly `1e-12`.
pub fn poisson_cutoff(mu: f64) -> usize {
    let mu = mu.max(0.0);
    libm::ceil(mu + 10.0 * libm::sqrt(mu) + 10.0) as usize
}
