use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::StokesPoint;
use crate::error::{invalid, Error, Result};
use crate::grid::{Axis, CoordinateSystem, QpdGrid};
use crate::numerics::{binomial_pmf, principal_pow};
use crate::states::LinearPolarizedState;

/// Radial kernel `w_m` regularized by the damping `e^{-gamma |w|}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WmRegularized {
    m: u32,
    gamma: f64,
}

impl WmRegularized {
    pub fn new(m: u32, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(
                "gamma",
                gamma,
                "regularization width must be positive",
            ));
        }
        Ok(Self { m, gamma })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn a(&self) -> Complex64 {
        Complex64::new(self.gamma, self.m as f64)
    }

    /// `(1/2pi) Re[a / (a^2 + S23^2)^{3/2}]`, `a = gamma + i m`.
    pub fn eval(&self, s23: f64) -> f64 {
        let a = self.a();
        (a / principal_pow(a * a + s23 * s23, 1.5)).re / (2.0 * PI)
    }

    /// Mass inside the disc `S23 <= radius`: `1 - Re[a / sqrt(a^2 + R^2)]`.
    pub fn disc_mass(&self, radius: f64) -> f64 {
        let a = self.a();
        1.0 - (a / principal_pow(a * a + radius * radius, 0.5)).re
    }
}

/// `w_m(S23)`; `gamma = 0` gives the unregularized limit, which is singular
/// on the ring `S23 = m`.
pub fn w_m(m: u32, s23: f64, gamma: f64) -> Result<f64> {
    if !(s23 >= 0.0) {
        return Err(invalid("s23", s23, "radius must be non-negative"));
    }
    if gamma > 0.0 {
        return Ok(WmRegularized::new(m, gamma)?.eval(s23));
    }
    if gamma != 0.0 {
        return Err(invalid("gamma", gamma, "must be non-negative"));
    }
    let mf = m as f64;
    if s23 == mf {
        return Err(Error::Domain(alloc::format!(
            "w_{m} is singular on the ring S23 = {m} without regularization"
        )));
    }
    if s23 > mf {
        return Ok(0.0);
    }
    Ok(-mf / (2.0 * PI * libm::pow(mf * mf - s23 * s23, 1.5)))
}

/// Weights `c_m` with `W23 = sum_m c_m w_m` for a linearly polarized state.
pub fn marginal_w23_weights(state: &LinearPolarizedState) -> Vec<(u32, f64)> {
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    for (n, pn) in state.iter() {
        for k in 0..=n {
            let m = (2 * k as i64 - n as i64).unsigned_abs() as u32;
            *acc.entry(m).or_insert(0.0) += pn * binomial_pmf(n as u64, k as u64, 0.5);
        }
    }
    acc.into_iter().collect()
}

/// `W23(S2, S3)` of a linearly polarized state on a grid.
///
/// With `gamma = 0` samples falling exactly on a ring are NaN and listed in
/// `singular_cells`.
pub fn marginal_w23_lp(
    state: &LinearPolarizedState,
    s2: Axis,
    s3: Axis,
    gamma: f64,
) -> Result<QpdGrid> {
    let weights = marginal_w23_weights(state);
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(invalid("gamma", gamma, "must be non-negative"));
    }
    let mut grid = QpdGrid::from_fn(alloc::vec![s2, s3], CoordinateSystem::RawStokes, |p| {
        let r = libm::hypot(p[0], p[1]);
        let mut v = 0.0;
        for &(m, c) in &weights {
            match w_m(m, r, gamma) {
                Ok(x) => v += c * x,
                Err(_) => return f64::NAN,
            }
        }
        v
    });
    grid.singular_cells = grid
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_nan())
        .map(|(i, _)| i)
        .collect();
    Ok(grid)
}

/// `W1(S1) = sum_n p_n delta(S1 - n)` as `(n, p_n)` pairs.
pub fn marginal_w1_lp(state: &LinearPolarizedState) -> Vec<(u32, f64)> {
    state.iter().collect()
}

/// Smoothed PQPD of a linearly polarized state in the large-`sigma` regime:
/// a sum of Gaussians with variance `sigma^2` along `S1` and `n + sigma^2`
/// across.
pub fn smoothed_pqpd_lp(
    state: &LinearPolarizedState,
    sigma: f64,
    point: StokesPoint,
) -> Result<f64> {
    if !(sigma >= 1.0 && sigma.is_finite()) {
        return Err(invalid(
            "sigma",
            sigma,
            "the Gaussian form needs sigma >= 1",
        ));
    }
    let s2 = sigma * sigma;
    let r2 = point.s2 * point.s2 + point.s3 * point.s3;
    let norm = libm::pow(2.0 * PI, 1.5) * sigma;
    Ok(state
        .iter()
        .map(|(n, pn)| {
            let nf = n as f64;
            let d = point.s1 - nf;
            let t = nf + s2;
            pn / (norm * t) * libm::exp(-d * d / (2.0 * s2) - r2 / (2.0 * t))
        })
        .sum())
}
