use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use polqpd_core::charfn::{chi_two_mode_coherent, CharPoint};
use polqpd_core::grid::CoordinateSystem;
use polqpd_core::measure::{
    count_pmf, sample, sample_setting, CountSource, SamplingPlan, Tomogram, WaveplateSetting,
};
use polqpd_core::reconstruct::{
    assemble_2d, hermitize, invert_2d, AssemblySpec, CharGrid, FourierGrid, Ray,
};

fn phi_scan(count: usize) -> Vec<WaveplateSetting> {
    (0..count)
        .map(|j| WaveplateSetting::new(PI / 2.0, PI * j as f64 / count as f64).unwrap())
        .collect()
}

fn exact_round_trip(rays: usize) -> (f64, f64, f64) {
    let (eta, sigma) = (0.8, 1.5);
    let (alpha, alpha0) = (Complex64::new(0.6, -0.3), Complex64::new(3.0, 0.0));
    let src = CountSource::CoherentPair { alpha, alpha0 };
    let rays: Vec<Ray> = phi_scan(rays)
        .into_iter()
        .map(|s| {
            let t = count_pmf(&src, s, eta, None).unwrap();
            Ray::from_tomogram(&Tomogram { sigma, ..t }, 2.2, 221).unwrap()
        })
        .collect();
    let grid = FourierGrid::new(128, 0.035).unwrap();
    let mut cg = assemble_2d(&rays, grid, AssemblySpec::default()).unwrap();
    hermitize(&mut cg);
    let w = invert_2d(&cg).unwrap();
    assert!((w.mass() - 1.0).abs() < 1e-9);
    assert!(w.diagnostics.shot_noise_bound.is_none());

    let k = eta.sqrt();
    let direct = CharGrid::from_fn(grid, 2, CoordinateSystem::RawStokes, |u| {
        let p = CharPoint::new(0.0, u[0], u[1]);
        chi_two_mode_coherent(&p, alpha * k, alpha0 * k)
            * (-0.5 * sigma * sigma * p.lambda() * p.lambda()).exp()
    })
    .unwrap();
    let want = invert_2d(&direct).unwrap();
    let err = w
        .values
        .iter()
        .zip(&want.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    (err, w.diagnostics.interpolation_error.unwrap(), want.max())
}

// Exact tomograms of a highlighted coherent state against a direct inversion
// of the same smoothed characteristic function. Only angular interpolation
// separates the two, so the error is second order in the ray spacing.
#[test]
fn exact_tomograms_reconstruct_the_characteristic_function() {
    let (coarse, estimate, peak) = exact_round_trip(48);
    assert!(coarse < 1e-3 * peak, "err {coarse:e}, peak {peak:e}");
    assert!(
        coarse <= estimate,
        "err {coarse:e} above estimate {estimate:e}"
    );
    let (fine, estimate, _) = exact_round_trip(96);
    assert!(fine <= estimate);
    let order = (coarse / fine).log2();
    assert!((1.8..2.2).contains(&order), "observed order {order}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // A batch run and a single-setting run with the same index draw the same shots.
    #[test]
    fn batch_sampling_matches_single_setting(seed in any::<u64>(), shots in 1u64..9000, n in 1usize..5) {
        let src = CountSource::CoherentPair {
            alpha: Complex64::new(0.4, -0.2),
            alpha0: Complex64::new(1.5, 0.0),
        };
        let settings = phi_scan(n);
        let plan = SamplingPlan::new(shots, 0.7, 0.5, seed).unwrap();
        let batch = sample(&src, &settings, plan).unwrap();
        for (i, s) in settings.iter().enumerate() {
            prop_assert_eq!(&batch[i], &sample_setting(&src, *s, i as u32, plan).unwrap());
        }
    }

    // Exact count distributions are normalized and respect the photon-number mean.
    #[test]
    fn exact_pmf_moments(theta in 0.0..PI, phi in 0.0..2.0 * PI, eta in 0.05f64..1.0, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let alpha = Complex64::new(re, im);
        let alpha0 = Complex64::new(1.0, 0.5);
        let t = count_pmf(&CountSource::CoherentPair { alpha, alpha0 }, WaveplateSetting::new(theta, phi).unwrap(), eta, None).unwrap();
        let pmf = t.pmf().unwrap();
        prop_assert!((pmf.total() - 1.0).abs() < 1e-10);
        let mean: f64 = pmf.iter().map(|(n, p)| n as f64 * p).sum();
        // mean Stokes projection of two coherent modes after loss
        let (a, b) = (alpha * eta.sqrt(), alpha0 * eta.sqrt());
        let s1 = a.norm_sqr() - b.norm_sqr();
        let s23 = 2.0 * (a.conj() * b);
        let want = theta.cos() * s1 + theta.sin() * (phi.cos() * s23.re + phi.sin() * s23.im);
        prop_assert!((mean - want).abs() < 1e-8, "mean {} want {}", mean, want);
    }
}
