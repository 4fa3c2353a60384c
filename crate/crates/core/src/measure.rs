//! Simulated polarization measurements: a waveplate pair, a polarizing beam
//! splitter and two photon-number-integrating detectors whose difference is
//! recorded.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::numerics::{bessel_i_scaled, binomial_pmf, poisson_cutoff, poisson_pmf};
use crate::states::{check_eta, LinearPolarizedState};

/// Waveplate orientation; `theta in [0, pi]`, `phi in [0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveplateSetting {
    theta: f64,
    phi: f64,
}

impl WaveplateSetting {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(invalid("theta", theta, "must lie in [0, pi]"));
        }
        if !(0.0..2.0 * PI).contains(&phi) {
            return Err(invalid("phi", phi, "must lie in [0, 2 pi)"));
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// At the poles `phi` has no effect.
    pub fn phi_irrelevant(&self) -> bool {
        self.theta == 0.0 || self.theta == PI
    }

    /// `(cos^2(theta/2), sin^2(theta/2))`: probability that an H photon
    /// leaves through the parallel / perpendicular port.
    pub fn split(&self) -> (f64, f64) {
        let c = libm::cos(self.theta);
        ((1.0 + c) / 2.0, (1.0 - c) / 2.0)
    }

    /// Amplitudes in the parallel and perpendicular ports for coherent
    /// inputs `alpha` (H) and `alpha0` (V).
    pub fn project(&self, alpha: Complex64, alpha0: Complex64) -> (Complex64, Complex64) {
        let c = libm::cos(self.theta / 2.0);
        let s = libm::sin(self.theta / 2.0);
        let v = alpha0 * Complex64::from_polar(1.0, -self.phi);
        (alpha * c + v * s, alpha * s - v * c)
    }
}

/// Light entering the apparatus.
#[derive(Debug, Clone, PartialEq)]
pub enum CountSource {
    /// A photon-number mixture in H, vacuum in V.
    Linear(LinearPolarizedState),
    /// Coherent states `alpha` in H and `alpha0` in V (amplitudes before loss).
    CoherentPair { alpha: Complex64, alpha0: Complex64 },
}

/// Probabilities of integer count differences `n = offset + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountPmf {
    pub offset: i64,
    pub probs: Vec<f64>,
}

impl CountPmf {
    pub fn delta(n: i64) -> Self {
        Self {
            offset: n,
            probs: vec![1.0],
        }
    }

    pub fn get(&self, n: i64) -> f64 {
        let i = n - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.probs.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, p)| (self.offset + i as i64, *p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn min_n(&self) -> i64 {
        self.offset
    }

    pub fn max_n(&self) -> i64 {
        self.offset + self.probs.len() as i64 - 1
    }

    /// `sum_n p(n) e^{i lambda n}`.
    pub fn char_fn(&self, lambda: f64) -> Complex64 {
        // phase recurrence is accurate to ~n * 1e-16, ample for the count ranges here
        let step = Complex64::from_polar(1.0, lambda);
        let mut phase = Complex64::from_polar(1.0, lambda * self.offset as f64);
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &self.probs {
            acc += phase * p;
            phase *= step;
        }
        acc
    }

    fn trimmed(mut self) -> Self {
        while self.probs.len() > 1 && self.probs.last() == Some(&0.0) {
            self.probs.pop();
        }
        let lead = self.probs.iter().take_while(|p| **p == 0.0).count();
        if lead > 0 && lead < self.probs.len() {
            self.probs.drain(..lead);
            self.offset += lead as i64;
        }
        self
    }
}

/// Exact distribution or Monte Carlo readings for one setting.
#[derive(Debug, Clone, PartialEq)]
pub enum TomogramData {
    Pmf(CountPmf),
    /// Readings `y` (integers when `sigma = 0`).
    Samples(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tomogram {
    pub setting: WaveplateSetting,
    pub data: TomogramData,
    /// Number of shots; 0 for an exact distribution.
    pub shots: u64,
    pub seed: Option<u64>,
    /// Gaussian readout noise already present in `Samples`.
    pub sigma: f64,
}

impl Tomogram {
    pub fn pmf(&self) -> Option<&CountPmf> {
        match &self.data {
            TomogramData::Pmf(p) => Some(p),
            TomogramData::Samples(_) => None,
        }
    }

    pub fn samples(&self) -> Option<&[f64]> {
        match &self.data {
            TomogramData::Samples(s) => Some(s),
            TomogramData::Pmf(_) => None,
        }
    }

    /// Histogram of sampled readings: `(bin centre, count)` with bins of
    /// `width` centred on integer multiples of `width`.
    pub fn histogram(&self, width: f64) -> Result<Vec<(f64, u64)>> {
        if !(width > 0.0) {
            return Err(invalid("width", width, "bin width must be positive"));
        }
        let s = self
            .samples()
            .ok_or_else(|| Error::Domain("histogram needs sampled readings".into()))?;
        if s.is_empty() {
            return Ok(Vec::new());
        }
        let bin = |y: f64| libm::round(y / width) as i64;
        let lo = s.iter().map(|y| bin(*y)).min().unwrap_or(0);
        let hi = s.iter().map(|y| bin(*y)).max().unwrap_or(0);
        let mut counts = vec![0u64; (hi - lo + 1) as usize];
        for y in s {
            counts[(bin(*y) - lo) as usize] += 1;
        }
        Ok(counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| ((lo + i as i64) as f64 * width, c))
            .collect())
    }
}

/// Mass that the Poisson part of a coherent-source distribution must keep
/// inside `n_max`.
pub const COVERAGE_TOLERANCE: f64 = 1e-10;

/// Exact distribution of the count difference `n_par - n_perp`.
///
/// `n_max` caps the count per detector for coherent sources (default: mean
/// plus ten standard deviations plus ten). The result is renormalized after
/// truncation.
pub fn count_pmf(
    source: &CountSource,
    setting: WaveplateSetting,
    eta: f64,
    n_max: Option<usize>,
) -> Result<Tomogram> {
    check_eta(eta)?;
    let pmf = match source {
        CountSource::Linear(state) => linear_pmf(state, setting, eta),
        CountSource::CoherentPair { alpha, alpha0 } => {
            let (a, b) = setting.project(*alpha, *alpha0);
            let (mu_a, mu_b) = (eta * a.norm_sqr(), eta * b.norm_sqr());
            let (na, nb) = match n_max {
                Some(n) => (n, n),
                None => (poisson_cutoff(mu_a), poisson_cutoff(mu_b)),
            };
            for (mu, n) in [(mu_a, na), (mu_b, nb)] {
                let kept: f64 = (0..=n as u64).map(|k| poisson_pmf(mu, k)).sum();
                if kept < 1.0 - COVERAGE_TOLERANCE {
                    return Err(Error::Coverage(alloc::format!(
                        "n_max = {n} keeps only {kept:.12} of a Poisson law with mean {mu}"
                    )));
                }
            }
            skellam_pmf_bessel(mu_a, mu_b, na, nb)
        }
    };
    let total = pmf.total();
    let pmf = CountPmf {
        offset: pmf.offset,
        probs: pmf.probs.iter().map(|p| p / total).collect(),
    };
    Ok(Tomogram {
        setting,
        data: TomogramData::Pmf(pmf.trimmed()),
        shots: 0,
        seed: None,
        sigma: 0.0,
    })
}

/// Each photon goes parallel with `cos^2(theta/2)`, perpendicular otherwise,
/// and is detected with probability `eta`.
fn linear_pmf(state: &LinearPolarizedState, setting: WaveplateSetting, eta: f64) -> CountPmf {
    let (c2, _) = setting.split();
    let n_top = state.n_max() as i64;
    let mut probs = vec![0.0; (2 * n_top + 1) as usize];
    for (k, pk) in state.iter() {
        let k = k as u64;
        for d in 0..=k {
            let pd = pk * binomial_pmf(k, d, eta);
            if pd == 0.0 {
                continue;
            }
            for a in 0..=d {
                let n = 2 * a as i64 - d as i64;
                probs[(n + n_top) as usize] += pd * binomial_pmf(d, a, c2);
            }
        }
    }
    CountPmf {
        offset: -n_top,
        probs,
    }
}

/// Skellam law of `N_a - N_b` for independent Poisson counts, from
/// `p(n) = e^{-(mu_a + mu_b)} (mu_a / mu_b)^{n/2} I_|n|(2 sqrt(mu_a mu_b))`
/// on `-nb..=na`.
pub fn skellam_pmf_bessel(mu_a: f64, mu_b: f64, na: usize, nb: usize) -> CountPmf {
    let (na, nb) = (na as i64, nb as i64);
    let probs = if mu_a == 0.0 || mu_b == 0.0 {
        (-nb..=na)
            .map(|n| match (n >= 0, mu_a == 0.0, mu_b == 0.0) {
                (true, _, true) => poisson_pmf(mu_a, n as u64),
                (false, true, _) => poisson_pmf(mu_b, (-n) as u64),
                (true, true, false) if n == 0 => poisson_pmf(mu_b, 0),
                _ => 0.0,
            })
            .collect()
    } else {
        let x = 2.0 * libm::sqrt(mu_a * mu_b);
        let base = -(libm::sqrt(mu_a) - libm::sqrt(mu_b)).powi(2);
        let half_log_ratio = 0.5 * libm::log(mu_a / mu_b);
        (-nb..=na)
            .map(|n| {
                let i = bessel_i_scaled(n.unsigned_abs() as u32, x);
                if i == 0.0 {
                    0.0
                } else {
                    libm::exp(base + n as f64 * half_log_ratio + libm::log(i))
                }
            })
            .collect()
    };
    CountPmf { offset: -nb, probs }
}

/// Exact distribution convolved with Gaussian readout noise of width `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmearedPmf {
    pmf: CountPmf,
    sigma: f64,
}

pub fn smear_pmf(t: &Tomogram, sigma: f64) -> Result<SmearedPmf> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", sigma, "must be positive"));
    }
    let pmf = t
        .pmf()
        .ok_or_else(|| Error::Domain("smearing needs an exact distribution".into()))?;
    Ok(SmearedPmf {
        pmf: pmf.clone(),
        sigma,
    })
}

impl SmearedPmf {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn density(&self, y: f64) -> f64 {
        let norm = 1.0 / (libm::sqrt(2.0 * PI) * self.sigma);
        self.pmf
            .iter()
            .map(|(n, p)| {
                let d = (y - n as f64) / self.sigma;
                p * libm::exp(-0.5 * d * d)
            })
            .sum::<f64>()
            * norm
    }

    pub fn char_fn(&self, lambda: f64) -> Complex64 {
        self.pmf.char_fn(lambda) * libm::exp(-0.5 * self.sigma * self.sigma * lambda * lambda)
    }
}

/// Shots generated from one RNG stream.
pub const SHOTS_PER_BLOCK: u64 = 4096;

/// Parameters shared by every setting of a sampling run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    pub shots: u64,
    pub eta: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl SamplingPlan {
    pub fn new(shots: u64, eta: f64, sigma: f64, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(invalid("shots", 0.0, "at least one shot is required"));
        }
        check_eta(eta)?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", sigma, "must be non-negative"));
        }
        Ok(Self {
            shots,
            eta,
            sigma,
            seed,
        })
    }
}

/// Monte Carlo tomograms for every setting. Equivalent to calling
/// [`sample_setting`] for each index, which callers may do in parallel.
pub fn sample(
    source: &CountSource,
    settings: &[WaveplateSetting],
    plan: SamplingPlan,
) -> Result<Vec<Tomogram>> {
    settings
        .iter()
        .enumerate()
        .map(|(i, s)| sample_setting(source, *s, i as u32, plan))
        .collect()
}

/// Monte Carlo tomogram for one setting. Shots are drawn in blocks of
/// [`SHOTS_PER_BLOCK`], block `b` of setting `index` using the ChaCha stream
/// `(index << 32) | b` of `plan.seed`.
pub fn sample_setting(
    source: &CountSource,
    setting: WaveplateSetting,
    index: u32,
    plan: SamplingPlan,
) -> Result<Tomogram> {
    let sampler = ShotSampler::new(source, setting, plan.eta)?;
    let mut out = Vec::with_capacity(plan.shots as usize);
    let blocks = plan.shots.div_ceil(SHOTS_PER_BLOCK);
    for b in 0..blocks {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        rng.set_stream(((index as u64) << 32) | b);
        let count = SHOTS_PER_BLOCK.min(plan.shots - b * SHOTS_PER_BLOCK);
        for _ in 0..count {
            let n = sampler.draw(&mut rng) as f64;
            let y = if plan.sigma > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                n + plan.sigma * z
            } else {
                n
            };
            out.push(y);
        }
    }
    Ok(Tomogram {
        setting,
        data: TomogramData::Samples(out),
        shots: plan.shots,
        seed: Some(plan.seed),
        sigma: plan.sigma,
    })
}

enum ShotSampler {
    Linear { cdf: Vec<f64>, eta: f64, par: f64 },
    Coherent { mu_a: f64, mu_b: f64 },
}

impl ShotSampler {
    fn new(source: &CountSource, setting: WaveplateSetting, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(match source {
            CountSource::Linear(state) => {
                let mut acc = 0.0;
                let cdf = state
                    .probs()
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                ShotSampler::Linear {
                    cdf,
                    eta,
                    par: setting.split().0,
                }
            }
            CountSource::CoherentPair { alpha, alpha0 } => {
                let (a, b) = setting.project(*alpha, *alpha0);
                ShotSampler::Coherent {
                    mu_a: eta * a.norm_sqr(),
                    mu_b: eta * b.norm_sqr(),
                }
            }
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> i64 {
        match self {
            ShotSampler::Linear { cdf, eta, par } => {
                let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
                let k = cdf.partition_point(|c| *c <= u).min(cdf.len() - 1) as u64;
                let detected = draw_binomial(rng, k, *eta);
                let a = draw_binomial(rng, detected, *par);
                2 * a as i64 - detected as i64
            }
            ShotSampler::Coherent { mu_a, mu_b } => {
                draw_poisson(rng, *mu_a) as i64 - draw_poisson(rng, *mu_b) as i64
            }
        }
    }
}

fn draw_binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).map(|d| d.sample(rng)).unwrap_or(0)
}

/// Poisson variate: sequential inversion below a mean of 30, otherwise the
/// transformed rejection method with squeeze (PTRS).
pub fn draw_poisson<R: Rng>(rng: &mut R, mu: f64) -> u64 {
    if mu <= 0.0 {
        return 0;
    }
    if mu < 30.0 {
        let u: f64 = rng.random();
        let mut p = libm::exp(-mu);
        let mut cdf = p;
        let mut k = 0u64;
        let cap = poisson_cutoff(mu) as u64 + 50;
        while u > cdf && k < cap {
            k += 1;
            p *= mu / k as f64;
            cdf += p;
        }
        return k;
    }
    let slam = libm::sqrt(mu);
    let loglam = libm::log(mu);
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.024_83 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = libm::floor((2.0 * a / us + b) * u + mu + 0.43);
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if libm::log(v) + libm::log(inv_alpha) - libm::log(a / (us * us) + b)
            <= -mu + k * loglam - libm::lgamma(k + 1.0)
        {
            return k as u64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::{chi_lp, chi_two_mode_coherent, CharPoint};
    use crate::numerics::bessel_i;
    use crate::states::{lp_photon_probs, SingleModeState};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn half() -> WaveplateSetting {
        WaveplateSetting::new(PI / 2.0, 0.0).unwrap()
    }

    /// Direct convolution of two Poisson laws.
    fn brute_skellam(mu_a: f64, mu_b: f64, n: i64) -> f64 {
        (0..200u64)
            .map(|k| {
                let j = k as i64 - n;
                if j < 0 {
                    0.0
                } else {
                    poisson_pmf(mu_a, k) * poisson_pmf(mu_b, j as u64)
                }
            })
            .sum()
    }

    #[test]
    fn setting_ranges() {
        assert!(WaveplateSetting::new(-0.1, 0.0).is_err());
        assert!(WaveplateSetting::new(0.0, 2.0 * PI).is_err());
        assert!(WaveplateSetting::new(0.0, 1.0).unwrap().phi_irrelevant());
        assert!(!half().phi_irrelevant());
    }

    #[test]
    fn single_photon_pmf() {
        let src = CountSource::Linear(LinearPolarizedState::fock(1));
        let t = count_pmf(&src, half(), 0.6, None).unwrap();
        let p = t.pmf().unwrap();
        assert!((p.get(-1) - 0.3).abs() < 1e-15);
        assert!((p.get(0) - 0.4).abs() < 1e-15);
        assert!((p.get(1) - 0.3).abs() < 1e-15);
        assert_eq!((p.min_n(), p.max_n()), (-1, 1));
    }

    #[test]
    fn coherent_pmf_is_skellam() {
        let src = CountSource::CoherentPair {
            alpha: c(1.0, 0.0),
            alpha0: c(0.0, 0.0),
        };
        let t = count_pmf(&src, half(), 0.6, None).unwrap();
        let p = t.pmf().unwrap();
        let e = libm::exp(-0.6);
        assert!((p.get(0) - e * bessel_i(0, 0.6)).abs() < 1e-15);
        assert!((p.get(1) - e * bessel_i(1, 0.6)).abs() < 1e-15);
        assert!((p.get(0) - 0.5993).abs() < 1e-4 && (p.get(-1) - 0.1722).abs() < 1e-4);
        for n in -10..=10 {
            assert!(
                (p.get(n) - brute_skellam(0.3, 0.3, n)).abs() < 1e-12,
                "n={n}"
            );
        }
        assert!((p.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn skellam_matches_convolution_for_unequal_means() {
        for &(a, b) in &[
            (0.3, 2.0),
            (12.0, 0.01),
            (40.0, 35.0),
            (0.0, 3.0),
            (2.5, 0.0),
        ] {
            let p = skellam_pmf_bessel(a, b, poisson_cutoff(a), poisson_cutoff(b));
            for n in -30..=30 {
                let want = brute_skellam(a, b, n);
                assert!(
                    (p.get(n) - want).abs() < 1e-13 * want.max(1e-3),
                    "({a},{b}) n={n}"
                );
            }
        }
    }

    #[test]
    fn pole_setting_counts_h_only() {
        let src = CountSource::CoherentPair {
            alpha: c(1.5, 0.0),
            alpha0: c(0.0, 0.0),
        };
        let t = count_pmf(&src, WaveplateSetting::new(0.0, 0.0).unwrap(), 0.8, None).unwrap();
        let p = t.pmf().unwrap();
        assert_eq!(p.min_n(), 0);
        for k in 0..20 {
            assert!((p.get(k) - poisson_pmf(0.8 * 2.25, k as u64)).abs() < 1e-14);
        }
    }

    #[test]
    fn coverage_error() {
        let src = CountSource::CoherentPair {
            alpha: c(5.0, 0.0),
            alpha0: c(0.0, 0.0),
        };
        assert!(matches!(
            count_pmf(&src, half(), 1.0, Some(10)),
            Err(Error::Coverage(_))
        ));
    }

    #[test]
    fn thinning_at_source_equals_thinning_at_detectors() {
        let eta = 0.55;
        let cases = [
            (LinearPolarizedState::fock(3), SingleModeState::Fock(3)),
            (
                LinearPolarizedState::poissonian(1.7, None).unwrap(),
                SingleModeState::Coherent(c(libm::sqrt(1.7), 0.0)),
            ),
        ];
        for (st, single) in cases {
            let thinned = lp_photon_probs(&single, eta, None).unwrap();
            let s = WaveplateSetting::new(1.1, 2.0).unwrap();
            let at_det = count_pmf(&CountSource::Linear(st.clone()), s, eta, None).unwrap();
            let at_src = count_pmf(&CountSource::Linear(thinned), s, 1.0, None).unwrap();
            let (a, b) = (at_det.pmf().unwrap(), at_src.pmf().unwrap());
            for n in -20..=20 {
                assert!((a.get(n) - b.get(n)).abs() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn skellam_symmetry() {
        let src = CountSource::CoherentPair {
            alpha: c(1.3, 0.0),
            alpha0: c(0.0, 0.0),
        };
        let p = count_pmf(&src, half(), 0.7, None).unwrap();
        let p = p.pmf().unwrap();
        for n in 0..15 {
            assert!((p.get(n) - p.get(-n)).abs() < 1e-15);
        }
    }

    #[test]
    fn smearing() {
        let t = Tomogram {
            setting: half(),
            data: TomogramData::Pmf(CountPmf::delta(0)),
            shots: 0,
            seed: None,
            sigma: 0.0,
        };
        let s = smear_pmf(&t, 1.0).unwrap();
        assert!((s.density(0.7) - libm::exp(-0.245) / libm::sqrt(2.0 * PI)).abs() < 1e-15);
        let src = CountSource::Linear(LinearPolarizedState::fock(1));
        let t = count_pmf(&src, half(), 0.6, None).unwrap();
        let s = smear_pmf(&t, 100.0).unwrap();
        let want = (0.6 * libm::exp(-1.0 / 2e4) + 0.4) / (libm::sqrt(2.0 * PI) * 100.0);
        assert!((s.density(0.0) - want).abs() < 1e-15);
        assert!((s.density(0.0) - 0.003_989).abs() < 1e-6);
        let l = 0.02;
        let z = s.char_fn(l);
        let want = (0.4 + 0.6 * libm::cos(l)) * libm::exp(-0.5 * 1e4 * l * l);
        assert!((z.re - want).abs() < 1e-15 && z.im.abs() < 1e-15);
        assert!(smear_pmf(&t, 0.0).is_err());
    }

    #[test]
    fn monte_carlo_matches_pmf() {
        let src = CountSource::Linear(LinearPolarizedState::fock(1));
        let plan = SamplingPlan::new(100_000, 0.6, 0.0, 7).unwrap();
        let t = sample_setting(&src, half(), 0, plan).unwrap();
        let s = t.samples().unwrap();
        assert_eq!(s.len(), 100_000);
        let frac = |n: f64| s.iter().filter(|y| **y == n).count() as f64 / 1e5;
        for (n, p) in [(-1.0, 0.3), (0.0, 0.4), (1.0, 0.3)] {
            assert!(
                (frac(n) - p).abs() < 3.0 * libm::sqrt(p * (1.0 - p) / 1e5),
                "n={n}"
            );
        }
        assert_eq!(sample_setting(&src, half(), 0, plan).unwrap(), t);
        assert!(SamplingPlan::new(0, 0.6, 0.0, 7).is_err());
    }

    #[test]
    fn settings_use_distinct_streams() {
        let src = CountSource::CoherentPair {
            alpha: c(2.0, 0.0),
            alpha0: c(0.0, 0.0),
        };
        let plan = SamplingPlan::new(10, 1.0, 1.0, 3).unwrap();
        let v = sample(&src, &[half(), half()], plan).unwrap();
        assert_ne!(v[0].samples(), v[1].samples());
        let single = sample_setting(&src, half(), 1, plan).unwrap();
        assert_eq!(single, v[1]);
    }

    #[test]
    fn poisson_sampler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &mu in &[0.3, 5.0, 29.9, 30.0, 75.0, 400.0] {
            let n = 200_000;
            let draws: Vec<f64> = (0..n).map(|_| draw_poisson(&mut rng, mu) as f64).collect();
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            assert!(
                (mean - mu).abs() < 5.0 * libm::sqrt(mu / n as f64),
                "mu={mu} mean={mean}"
            );
            assert!((var / mu - 1.0).abs() < 0.03, "mu={mu} var={var}");
        }
    }

    #[test]
    fn ptrs_matches_pmf_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mu = 50.0;
        let n = 400_000;
        let mut counts = vec![0u64; 200];
        for _ in 0..n {
            counts[draw_poisson(&mut rng, mu).min(199) as usize] += 1;
        }
        for k in 35..65u64 {
            let p = poisson_pmf(mu, k);
            let f = counts[k as usize] as f64 / n as f64;
            assert!((f - p).abs() < 5.0 * libm::sqrt(p / n as f64), "k={k}");
        }
    }

    #[test]
    fn histogram_bins() {
        let t = Tomogram {
            setting: half(),
            data: TomogramData::Samples(vec![0.1, -0.1, 0.9, 1.2, 3.0]),
            shots: 5,
            seed: None,
            sigma: 0.0,
        };
        let h = t.histogram(1.0).unwrap();
        assert_eq!(h, vec![(0.0, 2), (1.0, 2), (2.0, 0), (3.0, 1)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn char_fn_consistency(theta in 0.0f64..PI, phi in 0.0f64..(2.0 * PI), lambda in -6.0f64..6.0,
                               ar in -1.0f64..1.0, ai in -1.0f64..1.0, br in -1.0f64..1.0, bi in -1.0f64..1.0) {
            let s = WaveplateSetting::new(theta, phi).unwrap();
            let p = CharPoint::from_radon(lambda, theta, phi);
            let eta = 0.7;
            let one = count_pmf(&CountSource::Linear(LinearPolarizedState::fock(1)), s, eta, None).unwrap();
            let lossy = LinearPolarizedState::from_probs(vec![1.0 - eta, eta]).unwrap();
            prop_assert!((one.pmf().unwrap().char_fn(lambda) - chi_lp(&lossy, &p)).norm() < 1e-9);
            let (a, a0) = (c(ar, ai), c(br, bi));
            let coh = count_pmf(&CountSource::CoherentPair { alpha: a, alpha0: a0 }, s, eta, None).unwrap();
            let k = libm::sqrt(eta);
            let want = chi_two_mode_coherent(&p, a * k, a0 * k);
            prop_assert!((coh.pmf().unwrap().char_fn(lambda) - want).norm() < 1e-9);
        }
    }
}
