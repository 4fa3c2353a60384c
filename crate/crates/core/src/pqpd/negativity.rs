use core::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::grid::QpdGrid;
use crate::numerics::{integrate_adaptive, Estimate};

/// Whether the smoothed squeezed single-photon `W23` has a negative region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NegativityCondition {
    /// `eps < 1`.
    pub negative: bool,
    /// `eps == 1` exactly: the minimum touches zero.
    pub at_threshold: bool,
}

pub fn negativity_condition(eps2: f64) -> NegativityCondition {
    NegativityCondition {
        negative: eps2 < 1.0,
        at_threshold: eps2 == 1.0,
    }
}

/// What to measure the negative volume of.
#[derive(Debug, Clone, Copy)]
pub enum NegativitySource<'a> {
    /// A sampled 2D grid (cell-wise clipping).
    Grid(&'a QpdGrid),
    /// Closed-form smoothed squeezed vacuum (never negative).
    Sqz0 { r: f64, eps2: f64 },
    /// Closed-form smoothed squeezed single photon.
    Sqz1 { r: f64, eps2: f64 },
}

/// `V- = -int_{W < 0} W`.
pub fn negativity_volume(source: NegativitySource<'_>, tolerance: f64) -> Result<Estimate<f64>> {
    match source {
        NegativitySource::Grid(g) => Ok(Estimate {
            value: negativity_volume_grid(g),
            error: 0.0,
        }),
        NegativitySource::Sqz0 { r, eps2 } => {
            check(r, eps2)?;
            Ok(Estimate {
                value: 0.0,
                error: 0.0,
            })
        }
        NegativitySource::Sqz1 { r, eps2 } => sqz1_volume(r, eps2, tolerance),
    }
}

fn check(r: f64, eps2: f64) -> Result<()> {
    if !r.is_finite() {
        return Err(invalid("r", r, "must be finite"));
    }
    if !(eps2 >= 0.0 && eps2.is_finite()) {
        return Err(invalid("eps2", eps2, "must be non-negative"));
    }
    Ok(())
}

/// Polar quadrature in elliptic coordinates `s2 = rho cos(t) dp2 e^{-r}`,
/// `s3 = rho sin(t) dm2 e^{r}`, where the zero contour is `rho^2 = q0`.
fn sqz1_volume(r: f64, eps2: f64, tolerance: f64) -> Result<Estimate<f64>> {
    check(r, eps2)?;
    let dp2 = libm::exp(2.0 * r) + eps2;
    let dm2 = libm::exp(-2.0 * r) + eps2;
    let q0 = (1.0 - eps2 * eps2) / (dp2 * dm2);
    if q0 <= 0.0 {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let rho_max = libm::sqrt(q0);
    let front = libm::sqrt(dp2 * dm2) / (2.0 * PI);
    let (ep, em) = (dp2 * libm::exp(-2.0 * r), dm2 * libm::exp(2.0 * r));
    let mut inner_failure = None;
    let outer = integrate_adaptive(
        |t| {
            let (c, s) = (libm::cos(t), libm::sin(t));
            let k = c * c * ep + s * s * em;
            match integrate_adaptive(
                |rho| (q0 - rho * rho) * libm::exp(-0.5 * rho * rho * k) * rho,
                &[0.0, rho_max],
                tolerance * 1e-2,
                1e-13,
                2000,
            ) {
                Ok(e) => e.value,
                Err(err) => {
                    inner_failure = Some(err);
                    0.0
                }
            }
        },
        &[0.0, PI / 2.0, PI, 1.5 * PI, 2.0 * PI],
        tolerance * 0.5,
        1e-13,
        2000,
    )?;
    if let Some(err) = inner_failure {
        return Err(err);
    }
    Ok(Estimate {
        value: front * outer.value,
        error: front * outer.error,
    })
}

/// Negative volume of a sampled 2D grid: every cell is split into bilinear
/// sub-cells wherever its corners change sign, so the zero contour is
/// followed to within the sub-cell size.
pub fn negativity_volume_grid(g: &QpdGrid) -> f64 {
    const SUB: usize = 8;
    if g.axes.len() != 2 {
        return -g.values.iter().filter(|v| **v < 0.0).sum::<f64>() * g.cell_volume();
    }
    let (nx, ny) = (g.axes[0].count, g.axes[1].count);
    let v = |i: usize, j: usize| g.values[i * ny + j];
    let mut total = 0.0;
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let c = [v(i, j), v(i + 1, j), v(i, j + 1), v(i + 1, j + 1)];
            if c.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let neg = c.iter().filter(|x| **x < 0.0).count();
            if neg == 0 {
                continue;
            }
            if neg == 4 {
                total += c.iter().sum::<f64>() / 4.0;
                continue;
            }
            let mut acc = 0.0;
            for a in 0..SUB {
                for b in 0..SUB {
                    let tx = (a as f64 + 0.5) / SUB as f64;
                    let ty = (b as f64 + 0.5) / SUB as f64;
                    let x = (1.0 - tx) * (1.0 - ty) * c[0]
                        + tx * (1.0 - ty) * c[1]
                        + (1.0 - tx) * ty * c[2]
                        + tx * ty * c[3];
                    acc += x.min(0.0);
                }
            }
            total += acc / (SUB * SUB) as f64;
        }
    }
    -total * g.cell_volume()
}
