//! Polarization quasi-probability distributions.
//!
//! Fourier convention: `W(S) = int chi(u) e^{-i u.S} d^d u / (2 pi)^d`.

mod highlighted;
mod lp;
mod negativity;

pub use highlighted::{
    w23_from_wigner_convolution, w23_highlighted_sqz0, w23_highlighted_sqz1, wigner, WignerGridSpec,
};
pub use lp::{
    marginal_w1_lp, marginal_w23_lp, marginal_w23_weights, smoothed_pqpd_lp, w_m, WmRegularized,
};
pub use negativity::{
    negativity_condition, negativity_volume, negativity_volume_grid, NegativityCondition,
    NegativitySource,
};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::states::check_eta;

/// A point in Stokes space (photon-number units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesPoint {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesPoint {
    pub fn new(s1: f64, s2: f64, s3: f64) -> Self {
        Self { s1, s2, s3 }
    }

    pub fn transverse(s2: f64, s3: f64) -> Self {
        Self::new(0.0, s2, s3)
    }

    pub fn s23(&self) -> f64 {
        libm::hypot(self.s2, self.s3)
    }

    /// `(S2 - i S3) / (sqrt(eta) alpha0*)`, returned as `s2 + i s3`.
    pub fn normalized(&self, eta: f64, alpha0: Complex64) -> Result<Complex64> {
        check_eta(eta)?;
        check_alpha0(alpha0)?;
        Ok(Complex64::new(self.s2, -self.s3) / (alpha0.conj() * libm::sqrt(eta)))
    }

    /// Inverse of [`StokesPoint::normalized`] on the `S1 = 0` plane.
    pub fn from_normalized(s: Complex64, eta: f64, alpha0: Complex64) -> Result<Self> {
        check_eta(eta)?;
        check_alpha0(alpha0)?;
        let z = s * alpha0.conj() * libm::sqrt(eta);
        Ok(Self::transverse(z.re, -z.im))
    }
}

fn check_alpha0(alpha0: Complex64) -> Result<()> {
    let a = alpha0.norm();
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            "alpha0",
            a,
            "highlighting amplitude must be non-zero and finite",
        ))
    }
}

/// How `(s2, s3)` fields of a [`StokesPoint`] are to be read by the
/// highlighted-state densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coordinates {
    /// The point already holds normalized variables; density integrates to 1 in them.
    Normalized,
    /// Raw Stokes variables; density is divided by `eta |alpha0|^2`.
    Raw { eta: f64, alpha0: Complex64 },
}

impl Coordinates {
    /// Normalized `(s2, s3)` and the factor multiplying the normalized density.
    pub(crate) fn resolve(&self, p: &StokesPoint) -> Result<(f64, f64, f64)> {
        match *self {
            Coordinates::Normalized => Ok((p.s2, p.s3, 1.0)),
            Coordinates::Raw { eta, alpha0 } => {
                let s = p.normalized(eta, alpha0)?;
                Ok((s.re, s.im, 1.0 / (eta * alpha0.norm_sqr())))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_round_trip() {
        let a0 = Complex64::new(3.0, -4.0);
        let p = StokesPoint::transverse(1.5, -0.25);
        let s = p.normalized(0.64, a0).unwrap();
        let back = StokesPoint::from_normalized(s, 0.64, a0).unwrap();
        assert!((back.s2 - p.s2).abs() < 1e-14 && (back.s3 - p.s3).abs() < 1e-14);
        assert!(p.normalized(0.5, Complex64::new(0.0, 0.0)).is_err());
        assert_eq!(StokesPoint::new(9.0, 3.0, 4.0).s23(), 5.0);
    }

    #[test]
    fn real_alpha0_scales_axes() {
        // alpha0 real: s2 = S2 / (sqrt(eta) alpha0), s3 = -S3 / (sqrt(eta) alpha0)
        let s = StokesPoint::transverse(2.0, 1.0)
            .normalized(1.0, Complex64::new(2.0, 0.0))
            .unwrap();
        assert!((s.re - 1.0).abs() < 1e-15 && (s.im + 0.5).abs() < 1e-15);
    }
}
