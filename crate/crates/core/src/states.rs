//! Single-mode quantum states, their symmetrically ordered characteristic
//! functions, optical loss, and photon-number statistics of linearly
//! polarized light.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::numerics::{binomial_pmf, poisson_cutoff, poisson_pmf};

/// Largest probability mass a truncated photon-number distribution may lose.
pub const TRUNCATION_TOLERANCE: f64 = 1e-12;

/// Single-mode states with closed-form symmetric characteristic functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingleModeState {
    Vacuum,
    Fock(u32),
    Coherent(Complex64),
    /// Squeezed vacuum `S(r)|0>`.
    SqueezedVacuum(f64),
    /// Squeezed single photon `S(r)|1>`.
    SqueezedFock1(f64),
}

/// A symmetrically ordered characteristic function `chi_s(z)` written as
/// `factor(z) * exp(-(a' z'^2 + a'' z''^2) / 2)`, where the factor is a
/// polynomial or a pure phase.
///
/// Keeping the Gaussian envelope separate lets the highlighted-tomography
/// quadrature fold it into the Gauss-Hermite weight.
pub trait SymmetricCharFn {
    /// Envelope precisions `(a', a'')` along `Re z` and `Im z`.
    fn envelope(&self) -> (f64, f64);

    /// `chi_s(z)` with the Gaussian envelope divided out.
    fn envelope_factor(&self, z: Complex64) -> Complex64;

    fn chi_s(&self, z: Complex64) -> Complex64 {
        let (a1, a2) = self.envelope();
        let g = libm::exp(-(a1 * z.re * z.re + a2 * z.im * z.im) / 2.0);
        self.envelope_factor(z) * g
    }
}

impl SingleModeState {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SingleModeState::Coherent(a) if !(a.re.is_finite() && a.im.is_finite()) => {
                Err(invalid("alpha", a.norm(), "must be finite"))
            }
            SingleModeState::SqueezedVacuum(r) | SingleModeState::SqueezedFock1(r)
                if !r.is_finite() =>
            {
                Err(invalid("r", r, "must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Mean photon number.
    pub fn mean_photons(&self) -> f64 {
        match *self {
            SingleModeState::Vacuum => 0.0,
            SingleModeState::Fock(n) => n as f64,
            SingleModeState::Coherent(a) => a.norm_sqr(),
            SingleModeState::SqueezedVacuum(r) => libm::sinh(r).powi(2),
            SingleModeState::SqueezedFock1(r) => 3.0 * libm::sinh(r).powi(2) + 1.0,
        }
    }
}

impl SymmetricCharFn for SingleModeState {
    fn envelope(&self) -> (f64, f64) {
        match *self {
            SingleModeState::SqueezedVacuum(r) | SingleModeState::SqueezedFock1(r) => {
                (libm::exp(2.0 * r), libm::exp(-2.0 * r))
            }
            _ => (1.0, 1.0),
        }
    }

    fn envelope_factor(&self, z: Complex64) -> Complex64 {
        match *self {
            SingleModeState::Vacuum | SingleModeState::SqueezedVacuum(_) => {
                Complex64::new(1.0, 0.0)
            }
            SingleModeState::Fock(n) => Complex64::new(laguerre(n, z.norm_sqr()), 0.0),
            // exp(i (z a* + z* a)) = exp(2i Re(z a*))
            SingleModeState::Coherent(a) => Complex64::from_polar(1.0, 2.0 * (z * a.conj()).re),
            SingleModeState::SqueezedFock1(r) => {
                let q = z.re * z.re * libm::exp(2.0 * r) + z.im * z.im * libm::exp(-2.0 * r);
                Complex64::new(1.0 - q, 0.0)
            }
        }
    }
}

/// `chi_s(z)` of a single-mode state.
pub fn chi_s(state: &SingleModeState, z: Complex64) -> Complex64 {
    state.chi_s(z)
}

/// Laguerre polynomial `L_n(x)` by the three-term recurrence.
pub fn laguerre(n: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// A state seen through a grey filter of power transmissivity `eta`:
/// `chi_loss(z) = chi(sqrt(eta) z) exp(-(1 - eta)|z|^2 / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lossy<C> {
    inner: C,
    eta: f64,
}

impl<C> Lossy<C> {
    pub fn inner(&self) -> &C {
        &self.inner
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

impl<C: SymmetricCharFn> SymmetricCharFn for Lossy<C> {
    fn envelope(&self) -> (f64, f64) {
        let (a1, a2) = self.inner.envelope();
        let loss = 1.0 - self.eta;
        (self.eta * a1 + loss, self.eta * a2 + loss)
    }

    fn envelope_factor(&self, z: Complex64) -> Complex64 {
        self.inner.envelope_factor(z * libm::sqrt(self.eta))
    }
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(invalid("eta", eta, "quantum efficiency must lie in (0, 1]"))
    }
}

/// Apply optical loss to any state's characteristic function.
pub fn apply_loss<C: SymmetricCharFn>(state: C, eta: f64) -> Result<Lossy<C>> {
    check_eta(eta)?;
    Ok(Lossy { inner: state, eta })
}

/// Photon-number distribution of the excited mode of a linearly polarized
/// state (the other polarization mode is vacuum). Index `n` holds `p_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPolarizedState {
    probs: Vec<f64>,
}

impl LinearPolarizedState {
    /// Validates `p_n >= 0` and `1 - 1e-12 <= sum p_n <= 1` (up to rounding).
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("empty photon-number distribution".into()));
        }
        for &p in &probs {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(invalid(
                    "p_n",
                    p,
                    "probabilities must be finite and non-negative",
                ));
            }
        }
        let total: f64 = probs.iter().sum();
        if !(1.0 - TRUNCATION_TOLERANCE..=1.0 + 1e-14).contains(&total) {
            return Err(invalid("sum p_n", total, "must lie in [1 - 1e-12, 1]"));
        }
        Ok(Self { probs })
    }

    pub fn vacuum() -> Self {
        Self { probs: vec![1.0] }
    }

    pub fn fock(n: u32) -> Self {
        let mut probs = vec![0.0; n as usize + 1];
        probs[n as usize] = 1.0;
        Self { probs }
    }

    /// Truncated Poisson distribution with the given mean.
    pub fn poissonian(mean: f64, n_max: Option<usize>) -> Result<Self> {
        if !(mean >= 0.0 && mean.is_finite()) {
            return Err(invalid("mean", mean, "must be finite and non-negative"));
        }
        let n_max = n_max.unwrap_or_else(|| poisson_cutoff(mean));
        let probs: Vec<f64> = (0..=n_max as u64).map(|n| poisson_pmf(mean, n)).collect();
        let mass: f64 = probs.iter().sum();
        if mass < 1.0 - TRUNCATION_TOLERANCE {
            return Err(Error::Truncation { n_max, mass });
        }
        Ok(Self { probs })
    }

    /// Mixture `sum_i w_i state_i`.
    pub fn mixture(parts: &[(f64, &LinearPolarizedState)]) -> Result<Self> {
        let len = parts.iter().map(|(_, s)| s.probs.len()).max().unwrap_or(0);
        let mut probs = vec![0.0; len];
        for (w, s) in parts {
            for (slot, p) in probs.iter_mut().zip(&s.probs) {
                *slot += w * p;
            }
        }
        Self::from_probs(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// `(n, p_n)` pairs with non-zero weight.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(n, p)| (n as u32, *p))
    }
}

/// Unified efficiency and photon-number-integration noise of the detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    eta: f64,
    sigma: f64,
}

impl DetectorModel {
    pub fn new(eta: f64, sigma: f64) -> Result<Self> {
        check_eta(eta)?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", sigma, "must be finite and non-negative"));
        }
        Ok(Self { eta, sigma })
    }

    pub fn ideal() -> Self {
        Self {
            eta: 1.0,
            sigma: 0.0,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Photon-number distribution reaching the detectors after loss `eta`.
///
/// Supports vacuum, Fock states (binomial thinning) and coherent states
/// (Poissonian with mean `eta |alpha|^2`). Squeezed states are rejected.
pub fn lp_photon_probs(
    state: &SingleModeState,
    eta: f64,
    n_max: Option<usize>,
) -> Result<LinearPolarizedState> {
    check_eta(eta)?;
    state.validate()?;
    match *state {
        SingleModeState::Vacuum | SingleModeState::Fock(0) => Ok(LinearPolarizedState::vacuum()),
        SingleModeState::Fock(n) => {
            let probs = (0..=n as u64)
                .map(|k| binomial_pmf(n as u64, k, eta))
                .collect();
            Ok(LinearPolarizedState { probs })
        }
        SingleModeState::Coherent(a) => LinearPolarizedState::poissonian(eta * a.norm_sqr(), n_max),
        other => Err(Error::UnsupportedState(format!(
            "{other:?}: photon statistics of squeezed states are not modelled"
        ))),
    }
}
