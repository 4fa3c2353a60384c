//! Polarization characteristic functions `chi(u1, u2, u3)`.
//!
//! `w = u2 + i u3` and `lambda = sqrt(u1^2 + |w|^2)` throughout. A waveplate
//! setting `(theta, phi)` probes the ray `u1 = lambda cos(theta)`,
//! `w = lambda e^{i phi} sin(theta)`.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::numerics::{gauss_hermite, sinc, Estimate, QuadratureSpec};
use crate::states::{check_eta, DetectorModel, LinearPolarizedState, SymmetricCharFn};

/// A point in the Fourier-conjugate Stokes space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPoint {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

/// Spherical coordinates of a [`CharPoint`] in the waveplate parametrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadonCoords {
    pub lambda: f64,
    /// `[0, pi]`
    pub theta: f64,
    /// `[0, 2 pi)`
    pub phi: f64,
}

impl CharPoint {
    pub const ORIGIN: CharPoint = CharPoint {
        u1: 0.0,
        u2: 0.0,
        u3: 0.0,
    };

    pub fn new(u1: f64, u2: f64, u3: f64) -> Self {
        Self { u1, u2, u3 }
    }

    /// Point on the `u1 = 0` plane.
    pub fn transverse(w: Complex64) -> Self {
        Self::new(0.0, w.re, w.im)
    }

    pub fn w(&self) -> Complex64 {
        Complex64::new(self.u2, self.u3)
    }

    pub fn lambda(&self) -> f64 {
        libm::sqrt(self.u1 * self.u1 + self.u2 * self.u2 + self.u3 * self.u3)
    }

    pub fn from_radon(lambda: f64, theta: f64, phi: f64) -> Self {
        let w = Complex64::from_polar(lambda * libm::sin(theta), phi);
        Self::new(lambda * libm::cos(theta), w.re, w.im)
    }

    /// Inverse of [`CharPoint::from_radon`]; the origin maps to `(0, 0, 0)`.
    pub fn to_radon(&self) -> RadonCoords {
        let lambda = self.lambda();
        if lambda == 0.0 {
            return RadonCoords {
                lambda,
                theta: 0.0,
                phi: 0.0,
            };
        }
        let theta = libm::acos((self.u1 / lambda).clamp(-1.0, 1.0));
        let mut phi = libm::atan2(self.u3, self.u2);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        if phi >= 2.0 * PI {
            phi = 0.0;
        }
        RadonCoords { lambda, theta, phi }
    }
}

impl core::ops::Neg for CharPoint {
    type Output = CharPoint;
    fn neg(self) -> CharPoint {
        CharPoint::new(-self.u1, -self.u2, -self.u3)
    }
}

/// Single-photon amplitude `cos(lambda) + i u1 sinc(lambda)`.
fn fock_base(p: &CharPoint) -> Complex64 {
    let lambda = p.lambda();
    Complex64::new(libm::cos(lambda), p.u1 * sinc(lambda))
}

/// `chi(u | n) = (cos(lambda) + i u1 sinc(lambda))^n` for `n` photons in H.
pub fn chi_fock_lp(p: &CharPoint, n: u32) -> Complex64 {
    fock_base(p).powu(n)
}

/// `chi = sum_n p_n chi(u | n)` for a linearly polarized state.
pub fn chi_lp(state: &LinearPolarizedState, p: &CharPoint) -> Complex64 {
    let base = fock_base(p);
    let mut power = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for &pn in state.probs() {
        acc += power * pn;
        power *= base;
    }
    acc
}

/// Characteristic function of the two-mode coherent state `|alpha>_H |alpha0>_V`.
pub fn chi_two_mode_coherent(p: &CharPoint, alpha: Complex64, alpha0: Complex64) -> Complex64 {
    let lambda = p.lambda();
    let s = sinc(lambda);
    let kappa = Complex64::new(1.0 - libm::cos(lambda), -p.u1 * s);
    let cross = alpha * alpha0.conj() * p.w() + alpha.conj() * alpha0 * p.w().conj();
    (-kappa * alpha.norm_sqr() - kappa.conj() * alpha0.norm_sqr() + Complex64::i() * cross * s)
        .exp()
}

/// A signal state in H plus a bright coherent state `alpha0` in V.
///
/// `alpha0` is the amplitude as it reaches the detectors: losses acting on the
/// signal are modelled separately (on the signal or through `eps^2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighlightedState<C> {
    pub signal: C,
    pub alpha0: Complex64,
}

impl<C> HighlightedState<C> {
    pub fn new(signal: C, alpha0: Complex64) -> Result<Self> {
        let a = alpha0.norm();
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid(
                "alpha0",
                a,
                "highlighting amplitude must be non-zero and finite",
            ));
        }
        Ok(Self { signal, alpha0 })
    }
}

/// Total quantum inefficiency of highlighted tomography,
/// `eps^2 = (1 - eta + sigma^2 / |alpha0|^2) / eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inefficiency {
    pub eta: f64,
    pub sigma: f64,
    pub alpha0_abs: f64,
}

impl Inefficiency {
    pub fn new(detector: &DetectorModel, alpha0: Complex64) -> Result<Self> {
        let a = alpha0.norm();
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid(
                "alpha0",
                a,
                "highlighting amplitude must be non-zero and finite",
            ));
        }
        Ok(Self {
            eta: detector.eta(),
            sigma: detector.sigma(),
            alpha0_abs: a,
        })
    }

    pub fn eps2(&self) -> f64 {
        (1.0 - self.eta + self.sigma * self.sigma / (self.alpha0_abs * self.alpha0_abs)) / self.eta
    }
}

/// `zeta = sqrt(eta) alpha0 w*`.
pub fn zeta(eta: f64, alpha0: Complex64, w: Complex64) -> Complex64 {
    alpha0 * w.conj() * libm::sqrt(eta)
}

/// Largest `|w|` accepted by the exact highlighted formulas (exclusive).
pub const EXACT_W_LIMIT: f64 = 2.0 * PI;

fn check_w(w: Complex64) -> Result<f64> {
    let aw = w.norm();
    if !aw.is_finite() || aw >= EXACT_W_LIMIT {
        return Err(Error::Domain(alloc::format!(
            "|w| = {aw} outside [0, 2 pi) for the exact highlighted characteristic function"
        )));
    }
    Ok(aw)
}

/// Exact `chi(0, u2, u3)` of a highlighted state by two-dimensional
/// Gauss-Hermite quadrature over the signal's symmetric characteristic
/// function.
///
/// The signal's Gaussian envelope and the `cot^2(|w|/2)` kernel are combined
/// into one Gaussian weight per axis; the remaining factor (a polynomial or a
/// phase) is integrated with orders 4, 8, 16, ... until two successive orders
/// agree to `spec.tolerance`.
pub fn chi_highlighted_exact<C: SymmetricCharFn>(
    w: Complex64,
    hs: &HighlightedState<C>,
    spec: QuadratureSpec,
) -> Result<Estimate<Complex64>> {
    let aw = check_w(w)?;
    if aw == 0.0 {
        return Ok(Estimate {
            value: Complex64::new(1.0, 0.0),
            error: 0.0,
        });
    }
    let half = aw / 2.0;
    let (sin_h, cos_h) = (libm::sin(half), libm::cos(half));
    let cot = cos_h / sin_h;
    let c = cot * cot;
    let a = hs.alpha0 * w.conj() / aw;
    let (a1, a2) = hs.signal.envelope();
    let (p1, p2) = (a1 + c, a2 + c);
    let (m1, m2) = (2.0 * a.re * cot / p1, 2.0 * a.im * cot / p2);
    let exponent = -2.0 * (a.re * a.re * a1 / p1 + a.im * a.im * a2 / p2);
    let prefactor = libm::exp(exponent) / (sin_h * sin_h * libm::sqrt(p1 * p2) * PI);
    let (s1, s2) = (libm::sqrt(2.0 / p1), libm::sqrt(2.0 / p2));

    let sum_at = |order: usize| -> Complex64 {
        let (t, wt) = gauss_hermite(order);
        let mut acc = Complex64::new(0.0, 0.0);
        for (ti, wi) in t.iter().zip(&wt) {
            let x = m1 + ti * s1;
            let mut row = Complex64::new(0.0, 0.0);
            for (tj, wj) in t.iter().zip(&wt) {
                row += hs.signal.envelope_factor(Complex64::new(x, m2 + tj * s2)) * wj;
            }
            acc += row * wi;
        }
        acc * prefactor
    };

    let mut order = 4;
    let mut prev = sum_at(order);
    loop {
        let next_order = order * 2;
        if next_order > spec.max_order {
            let achieved = (sum_at(order) - prev).norm();
            return Err(Error::NoConvergence {
                achieved,
                requested: spec.tolerance,
            });
        }
        let cur = sum_at(next_order);
        let diff = (cur - prev).norm();
        if diff <= spec.tolerance {
            return Ok(Estimate {
                value: cur,
                error: diff,
            });
        }
        prev = cur;
        order = next_order;
    }
}

/// Highlighted characteristic function in the bright-highlighting limit,
/// `chi_s(zeta) exp(-eps^2 |zeta|^2 / 2)`; includes loss and smoothing.
pub fn chi_highlighted_asymptotic<C: SymmetricCharFn>(
    w: Complex64,
    hs: &HighlightedState<C>,
    detector: &DetectorModel,
) -> Result<Complex64> {
    let eps2 = Inefficiency::new(detector, hs.alpha0)?.eps2();
    let z = zeta(detector.eta(), hs.alpha0, w);
    Ok(hs.signal.chi_s(z) * libm::exp(-eps2 * z.norm_sqr() / 2.0))
}

struct SqueezedKernel {
    c0: f64,
    exponent: f64,
    kappa_p2: f64,
    kappa_m2: f64,
    cot2: f64,
    re2: f64,
    im2: f64,
    aw: f64,
}

fn squeezed_kernel(
    w: Complex64,
    r: f64,
    eta: f64,
    alpha0: Complex64,
) -> Result<Option<SqueezedKernel>> {
    check_eta(eta)?;
    if !r.is_finite() {
        return Err(invalid("r", r, "must be finite"));
    }
    let aw = check_w(w)?;
    if aw == 0.0 {
        return Ok(None);
    }
    let half = aw / 2.0;
    let sin2 = libm::sin(half).powi(2);
    let cot2 = libm::cos(half).powi(2) / sin2;
    let delta_p2 = eta * libm::exp(2.0 * r) + 1.0 - eta;
    let delta_m2 = eta * libm::exp(-2.0 * r) + 1.0 - eta;
    let kappa_p2 = delta_p2 + cot2;
    let kappa_m2 = delta_m2 + cot2;
    let c0 = 1.0 / (libm::sqrt(kappa_p2 * kappa_m2) * sin2);
    let aw_conj = alpha0 * w.conj();
    let (re2, im2) = (aw_conj.re * aw_conj.re, aw_conj.im * aw_conj.im);
    let exponent = -2.0 / (aw * aw) * (delta_p2 / kappa_p2 * re2 + delta_m2 / kappa_m2 * im2);
    Ok(Some(SqueezedKernel {
        c0,
        exponent,
        kappa_p2,
        kappa_m2,
        cot2,
        re2,
        im2,
        aw,
    }))
}

/// Closed-form exact `chi(0, u2, u3)` for a lossy squeezed vacuum signal
/// (loss `eta` on the signal, `alpha0` at the detectors).
pub fn chi_sqz0_exact(w: Complex64, r: f64, eta: f64, alpha0: Complex64) -> Result<Complex64> {
    Ok(match squeezed_kernel(w, r, eta, alpha0)? {
        None => Complex64::new(1.0, 0.0),
        Some(k) => Complex64::new(k.c0 * libm::exp(k.exponent), 0.0),
    })
}

/// Closed-form exact `chi(0, u2, u3)` for a lossy squeezed single-photon signal.
pub fn chi_sqz1_exact(w: Complex64, r: f64, eta: f64, alpha0: Complex64) -> Result<Complex64> {
    Ok(match squeezed_kernel(w, r, eta, alpha0)? {
        None => Complex64::new(1.0, 0.0),
        Some(k) => {
            let poly = k.c0 * k.c0 * (eta * libm::cos(k.aw) + 1.0 - eta)
                - 4.0 * eta / (k.aw * k.aw)
                    * k.cot2
                    * (k.re2 / (k.kappa_p2 * k.kappa_p2) * libm::exp(2.0 * r)
                        + k.im2 / (k.kappa_m2 * k.kappa_m2) * libm::exp(-2.0 * r));
            Complex64::new(k.c0 * poly * libm::exp(k.exponent), 0.0)
        }
    })
}

/// Photon-number-integration smoothing: `chi e^{-sigma^2 lambda^2 / 2}`.
pub fn smooth_char(chi: Complex64, lambda: f64, sigma: f64) -> Complex64 {
    chi * libm::exp(-sigma * sigma * lambda * lambda / 2.0)
}
