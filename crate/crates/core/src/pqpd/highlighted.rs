use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use super::{Coordinates, StokesPoint};
use crate::error::{invalid, Error, Result};
use crate::grid::{Axis, CoordinateSystem, Diagnostics, QpdGrid};
use crate::numerics::{dft_grid, Sign};
use crate::states::{check_eta, SymmetricCharFn};

fn deltas(r: f64, eps2: f64) -> Result<(f64, f64)> {
    if !r.is_finite() {
        return Err(invalid("r", r, "must be finite"));
    }
    if !(eps2 >= 0.0 && eps2.is_finite()) {
        return Err(invalid("eps2", eps2, "must be non-negative"));
    }
    Ok((libm::exp(2.0 * r) + eps2, libm::exp(-2.0 * r) + eps2))
}

/// Smoothed `W23` of a squeezed vacuum under highlighting; a Gaussian with
/// variances `delta_pm^2 = e^{pm 2r} + eps^2` in normalized variables.
pub fn w23_highlighted_sqz0(
    point: StokesPoint,
    r: f64,
    eps2: f64,
    coords: Coordinates,
) -> Result<f64> {
    let (dp2, dm2) = deltas(r, eps2)?;
    let (s2, s3, scale) = coords.resolve(&point)?;
    let g = libm::exp(-0.5 * (s2 * s2 / dp2 + s3 * s3 / dm2));
    Ok(scale * g / (2.0 * PI * libm::sqrt(dp2 * dm2)))
}

/// Smoothed `W23` of a squeezed single photon under highlighting.
pub fn w23_highlighted_sqz1(
    point: StokesPoint,
    r: f64,
    eps2: f64,
    coords: Coordinates,
) -> Result<f64> {
    let (dp2, dm2) = deltas(r, eps2)?;
    let (s2, s3, scale) = coords.resolve(&point)?;
    let poly = s2 * s2 * libm::exp(2.0 * r) / (dp2 * dp2)
        + s3 * s3 * libm::exp(-2.0 * r) / (dm2 * dm2)
        + (eps2 * eps2 - 1.0) / (dp2 * dm2);
    let g = libm::exp(-0.5 * (s2 * s2 / dp2 + s3 * s3 / dm2));
    Ok(scale * poly * g / (2.0 * PI * libm::sqrt(dp2 * dm2)))
}

/// Wigner grid of `n x n` points with spacing `2 x_max / n` centred on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerGridSpec {
    pub n: usize,
    pub x_max: f64,
}

impl WignerGridSpec {
    pub fn new(n: usize, x_max: f64) -> Result<Self> {
        if !n.is_power_of_two() || n < 4 {
            return Err(Error::GridSize(n));
        }
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(invalid("x_max", x_max, "must be positive"));
        }
        Ok(Self { n, x_max })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.x_max / self.n as f64
    }
}

/// Wigner function `W(x, p) = int chi_s(z) e^{-i sqrt2 (x z' + p z'')} d^2z / (2 pi^2)` by FFT.
///
/// `boundary_magnitude` holds the larger of the truncated `|chi_s|` at the
/// edge of the `z` grid and `|W|` at the edge of the output grid; either
/// being large signals too small a grid.
pub fn wigner<C: SymmetricCharFn>(state: &C, spec: WignerGridSpec) -> Result<QpdGrid> {
    let n = spec.n;
    let dx = spec.step();
    let dz = 2.0 * PI / (n as f64 * SQRT_2 * dx);
    let half = (n / 2) as f64;
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    let mut chi_edge: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = Complex64::new((i as f64 - half) * dz, (j as f64 - half) * dz);
            let v = state.chi_s(z);
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                chi_edge = chi_edge.max(v.norm());
            }
            values[i * n + j] = v;
        }
    }
    dft_grid(
        &mut values,
        &[n, n],
        Sign::Negative,
        dz * dz / (2.0 * PI * PI),
    )?;
    let axis = Axis::centered(n, dx)?;
    let max_imaginary = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let mut w_edge: f64 = 0.0;
    for i in 0..n {
        for j in [0, n - 1] {
            w_edge = w_edge
                .max(values[i * n + j].re.abs())
                .max(values[j * n + i].re.abs());
        }
    }
    let mut grid = QpdGrid {
        axes: vec![axis, axis],
        values: values.iter().map(|v| v.re).collect(),
        coordinates: CoordinateSystem::PhaseSpace,
        jacobian: None,
        singular_cells: Vec::new(),
        diagnostics: Diagnostics::default(),
    };
    grid.diagnostics = Diagnostics {
        normalization_error: Some((grid.mass() - 1.0).abs()),
        max_imaginary: Some(max_imaginary),
        boundary_magnitude: Some(chi_edge.max(w_edge)),
        ..Diagnostics::default()
    };
    Ok(grid)
}

/// Number of kernel standard deviations the Wigner grid must extend past
/// every output point.
const COVERAGE_SIGMAS: f64 = 6.0;

/// Smoothed `W23` in normalized variables from a Wigner grid:
/// `(1/(2 pi eps^2)) int W(x, p) exp(-|s - sqrt2 (x + i p)|^2 / (2 eps^2)) dx dp`.
///
/// `eps2 = 0` maps `W` directly, `W23(s) = W(s / sqrt2) / 2`, with bilinear
/// interpolation. `highlight = Some((eta, alpha0))` only records the Jacobian.
pub fn w23_from_wigner_convolution(
    wigner: &QpdGrid,
    eps2: f64,
    s2: Axis,
    s3: Axis,
    highlight: Option<(f64, Complex64)>,
) -> Result<QpdGrid> {
    if wigner.coordinates != CoordinateSystem::PhaseSpace || wigner.axes.len() != 2 {
        return Err(Error::Domain(
            "expected a two-dimensional phase-space grid".into(),
        ));
    }
    if !(eps2 >= 0.0 && eps2.is_finite()) {
        return Err(invalid("eps2", eps2, "must be non-negative"));
    }
    let jacobian = match highlight {
        Some((eta, alpha0)) => {
            check_eta(eta)?;
            Some(eta * alpha0.norm_sqr())
        }
        None => None,
    };
    let (xa, pa) = (wigner.axes[0], wigner.axes[1]);
    let sd = libm::sqrt(eps2 / 2.0);
    let reach = COVERAGE_SIGMAS * sd;
    let covers = |axis: &Axis, out: &Axis| {
        out.min() / SQRT_2 - reach >= axis.min() && out.max() / SQRT_2 + reach <= axis.max()
    };
    if !covers(&xa, &s2) || !covers(&pa, &s3) {
        return Err(Error::Coverage(alloc::format!(
            "Wigner grid [{:.3}, {:.3}] x [{:.3}, {:.3}] does not cover the output grid plus {COVERAGE_SIGMAS} kernel widths ({sd:.3})",
            xa.min(),
            xa.max(),
            pa.min(),
            pa.max()
        )));
    }

    let mut out = if eps2 == 0.0 {
        QpdGrid::from_fn(vec![s2, s3], CoordinateSystem::Normalized, |p| {
            0.5 * wigner
                .interpolate_2d(p[0] / SQRT_2, p[1] / SQRT_2)
                .unwrap_or(f64::NAN)
        })
    } else {
        if sd < xa.step.max(pa.step) {
            return Err(Error::Coverage(alloc::format!(
                "smoothing kernel width {sd:.3e} is below the Wigner grid step {:.3e}",
                xa.step.max(pa.step)
            )));
        }
        let kernel = |out: &Axis, inp: &Axis| -> Vec<f64> {
            let mut k = Vec::with_capacity(out.count * inp.count);
            for s in out.iter() {
                let c = s / SQRT_2;
                for x in inp.iter() {
                    let d = (x - c) / sd;
                    k.push(libm::exp(-0.5 * d * d));
                }
            }
            k
        };
        let a = kernel(&s2, &xa);
        let b = kernel(&s3, &pa);
        let (nx, np) = (xa.count, pa.count);
        // t[i][bj] = sum_j W[i][j] B[bj][j]
        let mut t = vec![0.0; nx * s3.count];
        for i in 0..nx {
            let row = &wigner.values[i * np..(i + 1) * np];
            for bj in 0..s3.count {
                let kb = &b[bj * np..(bj + 1) * np];
                t[i * s3.count + bj] = row.iter().zip(kb).map(|(w, k)| w * k).sum();
            }
        }
        let scale = xa.step * pa.step / (2.0 * PI * eps2);
        let mut values = vec![0.0; s2.count * s3.count];
        for ai in 0..s2.count {
            let ka = &a[ai * nx..(ai + 1) * nx];
            for bj in 0..s3.count {
                let mut acc = 0.0;
                for i in 0..nx {
                    acc += ka[i] * t[i * s3.count + bj];
                }
                values[ai * s3.count + bj] = acc * scale;
            }
        }
        QpdGrid {
            axes: vec![s2, s3],
            values,
            coordinates: CoordinateSystem::Normalized,
            jacobian: None,
            singular_cells: Vec::new(),
            diagnostics: Diagnostics::default(),
        }
    };
    out.jacobian = jacobian;
    out.diagnostics = wigner.diagnostics;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::SingleModeState;

    fn origin() -> StokesPoint {
        StokesPoint::transverse(0.0, 0.0)
    }

    #[test]
    fn closed_form_examples() {
        let n = Coordinates::Normalized;
        let v = w23_highlighted_sqz0(origin(), 0.0, 0.0, n).unwrap();
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let v = w23_highlighted_sqz0(origin(), 0.0, 1.0, n).unwrap();
        assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(
            w23_highlighted_sqz0(StokesPoint::transverse(40.0, 40.0), 0.0, 0.0, n).unwrap()
                < 1e-300
        );
        let v = w23_highlighted_sqz1(origin(), 0.0, 0.0, n).unwrap();
        assert!((v + 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(w23_highlighted_sqz1(origin(), 0.0, 1.0, n).unwrap(), 0.0);
        for k in 0..12 {
            let t = k as f64 * PI / 6.0;
            let p = StokesPoint::transverse(libm::cos(t), libm::sin(t));
            assert!(w23_highlighted_sqz1(p, 0.0, 0.0, n).unwrap().abs() < 1e-16);
        }
        assert!(w23_highlighted_sqz1(origin(), 0.0, -0.1, n).is_err());
    }

    #[test]
    fn raw_coordinates_carry_the_jacobian() {
        let (eta, a0) = (0.8, Complex64::new(3.0, 4.0));
        let raw = Coordinates::Raw { eta, alpha0: a0 };
        let s = Complex64::new(0.3, -0.7);
        let p = StokesPoint::from_normalized(s, eta, a0).unwrap();
        let want = w23_highlighted_sqz1(
            StokesPoint::transverse(s.re, s.im),
            0.4,
            0.3,
            Coordinates::Normalized,
        )
        .unwrap()
            / (eta * 25.0);
        let got = w23_highlighted_sqz1(p, 0.4, 0.3, raw).unwrap();
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_are_normalized() {
        let ax = Axis::new(-24.0, 24.0, 481).unwrap();
        for &(r, eps2) in &[(0.0, 0.0), (0.69, 0.7), (0.3, 0.2)] {
            for f in [w23_highlighted_sqz0, w23_highlighted_sqz1] {
                let g = QpdGrid::from_fn(vec![ax, ax], CoordinateSystem::Normalized, |p| {
                    f(
                        StokesPoint::transverse(p[0], p[1]),
                        r,
                        eps2,
                        Coordinates::Normalized,
                    )
                    .unwrap()
                });
                assert!(
                    (g.mass() - 1.0).abs() < 1e-10,
                    "r={r} eps2={eps2}: {}",
                    g.mass()
                );
            }
        }
    }

    #[test]
    fn wigner_examples() {
        let spec = WignerGridSpec::new(128, 8.0).unwrap();
        let vac = wigner(&SingleModeState::Vacuum, spec).unwrap();
        let c = 64 * 128 + 64;
        assert!((vac.values[c] - 1.0 / PI).abs() < 1e-12);
        assert!(vac.diagnostics.max_imaginary.unwrap() < 1e-12);
        assert!(vac.diagnostics.normalization_error.unwrap() < 1e-10);
        assert!(vac.diagnostics.boundary_magnitude.unwrap() < 1e-12);
        for res in [64usize, 256] {
            let spec = WignerGridSpec::new(res, 8.0).unwrap();
            let one = wigner(&SingleModeState::SqueezedFock1(0.0), spec).unwrap();
            let c = (res / 2) * res + res / 2;
            assert!((one.values[c] + 1.0 / PI).abs() < 1e-10, "n={res}");
        }
        let r = 0.4;
        let sq = wigner(&SingleModeState::SqueezedVacuum(r), spec).unwrap();
        for (idx, v) in sq.values.iter().enumerate().step_by(97) {
            let p = sq.point(idx);
            let want =
                libm::exp(-p[0] * p[0] * libm::exp(-2.0 * r) - p[1] * p[1] * libm::exp(2.0 * r))
                    / PI;
            assert!((v - want).abs() < 1e-10);
        }
    }

    #[test]
    fn coarse_wigner_grid_is_flagged() {
        let spec = WignerGridSpec::new(16, 2.0).unwrap();
        let g = wigner(&SingleModeState::Fock(3), spec).unwrap();
        assert!(g.diagnostics.boundary_magnitude.unwrap() > 1e-3);
    }

    #[test]
    fn convolution_reproduces_closed_forms() {
        let spec = WignerGridSpec::new(256, 10.0).unwrap();
        let one = wigner(&SingleModeState::SqueezedFock1(0.0), spec).unwrap();
        let vac = wigner(&SingleModeState::Vacuum, spec).unwrap();
        let out = Axis::new(-4.0, 4.0, 81).unwrap();
        let n = Coordinates::Normalized;

        let g = w23_from_wigner_convolution(&one, 0.7, out, out, None).unwrap();
        let want = QpdGrid::from_fn(vec![out, out], CoordinateSystem::Normalized, |p| {
            w23_highlighted_sqz1(StokesPoint::transverse(p[0], p[1]), 0.0, 0.7, n).unwrap()
        });
        let peak = want.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(g.max_abs_diff(&want).unwrap() < 1e-4 * peak);

        let g =
            w23_from_wigner_convolution(&vac, 0.3, out, out, Some((0.9, Complex64::new(5.0, 0.0))))
                .unwrap();
        assert_eq!(g.jacobian, Some(0.9 * 25.0));
        let want = QpdGrid::from_fn(vec![out, out], CoordinateSystem::Normalized, |p| {
            w23_highlighted_sqz0(StokesPoint::transverse(p[0], p[1]), 0.0, 0.3, n).unwrap()
        });
        assert!(g.max_abs_diff(&want).unwrap() < 1e-8);
    }

    #[test]
    fn zero_smoothing_is_a_coordinate_map() {
        // W23 at eps = 0 on points that land on Wigner nodes: s = sqrt2 * x_i
        let spec = WignerGridSpec::new(256, 8.0).unwrap();
        let one = wigner(&SingleModeState::SqueezedFock1(0.0), spec).unwrap();
        let step = SQRT_2 * spec.step();
        let out = Axis {
            start: -40.0 * step,
            step,
            count: 81,
        };
        let g = w23_from_wigner_convolution(&one, 0.0, out, out, None).unwrap();
        for (idx, v) in g.values.iter().enumerate() {
            let p = g.point(idx);
            let want = w23_highlighted_sqz1(
                StokesPoint::transverse(p[0], p[1]),
                0.0,
                0.0,
                Coordinates::Normalized,
            )
            .unwrap();
            assert!((v - want).abs() < 1e-6, "{p:?}: {v} vs {want}");
        }
    }

    #[test]
    fn coverage_is_checked() {
        let spec = WignerGridSpec::new(64, 4.0).unwrap();
        let vac = wigner(&SingleModeState::Vacuum, spec).unwrap();
        let wide = Axis::new(-6.0, 6.0, 13).unwrap();
        assert!(matches!(
            w23_from_wigner_convolution(&vac, 0.5, wide, wide, None),
            Err(Error::Coverage(_))
        ));
        let narrow = Axis::new(-1.0, 1.0, 5).unwrap();
        assert!(matches!(
            w23_from_wigner_convolution(&vac, 1e-4, narrow, narrow, None),
            Err(Error::Coverage(_))
        ));
    }
}
