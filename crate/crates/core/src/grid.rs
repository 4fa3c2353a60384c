//! Uniform rectilinear grids of real samples.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// One uniform axis: `start + i * step` for `i < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl Axis {
    /// `count` points spanning `[min, max]` inclusively.
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(invalid(
                "count",
                count as f64,
                "an axis needs at least two points",
            ));
        }
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(invalid(
                "max",
                max,
                "axis bounds must be finite with max > min",
            ));
        }
        Ok(Self {
            start: min,
            step: (max - min) / (count - 1) as f64,
            count,
        })
    }

    /// FFT layout: `(i - count/2) * step`.
    pub fn centered(count: usize, step: f64) -> Result<Self> {
        if !count.is_power_of_two() || count < 2 {
            return Err(Error::GridSize(count));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid("step", step, "must be positive"));
        }
        Ok(Self {
            start: -((count / 2) as f64) * step,
            step,
            count,
        })
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn min(&self) -> f64 {
        self.start
    }

    pub fn max(&self) -> f64 {
        self.coord(self.count - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.coord(i))
    }

    /// Index of the point closest to `x`, if `x` lies within half a step of the axis.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        let t = libm::round((x - self.start) / self.step);
        if t < 0.0 || t > (self.count - 1) as f64 {
            None
        } else {
            Some(t as usize)
        }
    }
}

/// Which variables a grid is laid out in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateSystem {
    /// Stokes variables `(S2, S3)` or `(S1, S2, S3)` in photon-number units.
    RawStokes,
    /// `s = (S2 - i S3) / (sqrt(eta) alpha0*)`.
    Normalized,
    /// Quadratures `(x, p)` of a single mode.
    PhaseSpace,
}

/// Numerical health of a computed grid; `None` means not applicable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// `|mass - expected mass|`.
    pub normalization_error: Option<f64>,
    /// Largest discarded imaginary part after a Fourier inversion.
    pub max_imaginary: Option<f64>,
    /// Largest `|chi|` on the boundary of the inverted characteristic grid.
    pub boundary_magnitude: Option<f64>,
    /// Pointwise shot-noise bound (one standard deviation).
    pub shot_noise_bound: Option<f64>,
    /// Pointwise interpolation error estimate.
    pub interpolation_error: Option<f64>,
}

/// Real samples on a product of uniform axes, row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct QpdGrid {
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
    pub coordinates: CoordinateSystem,
    /// `eta |alpha0|^2`: raw density = normalized density / jacobian.
    pub jacobian: Option<f64>,
    /// Flat indices of samples sitting on a singular ring (value NaN).
    pub singular_cells: Vec<usize>,
    pub diagnostics: Diagnostics,
}

impl QpdGrid {
    pub fn from_fn<F: FnMut(&[f64]) -> f64>(
        axes: Vec<Axis>,
        coordinates: CoordinateSystem,
        mut f: F,
    ) -> Self {
        let total: usize = axes.iter().map(|a| a.count).product();
        let mut values = Vec::with_capacity(total);
        let mut point = alloc::vec![0.0; axes.len()];
        for flat in 0..total {
            let mut rem = flat;
            for d in (0..axes.len()).rev() {
                point[d] = axes[d].coord(rem % axes[d].count);
                rem /= axes[d].count;
            }
            values.push(f(&point));
        }
        Self {
            axes,
            values,
            coordinates,
            jacobian: None,
            singular_cells: Vec::new(),
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.step).product()
    }

    /// Coordinates of the sample at `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut p = alloc::vec![0.0; self.axes.len()];
        let mut rem = flat;
        for d in (0..self.axes.len()).rev() {
            p[d] = self.axes[d].coord(rem % self.axes[d].count);
            rem /= self.axes[d].count;
        }
        p
    }

    /// Riemann sum of the finite samples.
    pub fn mass(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).sum::<f64>() * self.cell_volume()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min)
    }

    /// `max |self - other|` over a common layout.
    pub fn max_abs_diff(&self, other: &QpdGrid) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::Domain("grids have different shapes".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Bilinear interpolation on a 2D grid; `None` outside.
    pub fn interpolate_2d(&self, x: f64, y: f64) -> Option<f64> {
        if self.axes.len() != 2 {
            return None;
        }
        let (ax, ay) = (&self.axes[0], &self.axes[1]);
        let fx = (x - ax.start) / ax.step;
        let fy = (y - ay.start) / ay.step;
        let (mx, my) = ((ax.count - 1) as f64, (ay.count - 1) as f64);
        if !(fx >= 0.0 && fx <= mx && fy >= 0.0 && fy <= my) {
            return None;
        }
        let i = (libm::floor(fx) as usize).min(ax.count - 2);
        let j = (libm::floor(fy) as usize).min(ay.count - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let n = ay.count;
        let v = |a: usize, b: usize| self.values[a * n + b];
        Some(
            (1.0 - tx) * (1.0 - ty) * v(i, j)
                + tx * (1.0 - ty) * v(i + 1, j)
                + (1.0 - tx) * ty * v(i, j + 1)
                + tx * ty * v(i + 1, j + 1),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_layouts() {
        let a = Axis::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(a.step, 0.5);
        assert_eq!(a.max(), 1.0);
        assert_eq!(a.nearest(0.26), Some(3));
        assert_eq!(a.nearest(1.3), None);
        let c = Axis::centered(8, 0.25).unwrap();
        assert_eq!(c.coord(4), 0.0);
        assert_eq!(c.min(), -1.0);
        assert!(Axis::centered(6, 0.1).is_err());
        assert!(Axis::new(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn mass_and_interpolation() {
        let ax = Axis::new(0.0, 1.0, 11).unwrap();
        let g = QpdGrid::from_fn(alloc::vec![ax, ax], CoordinateSystem::RawStokes, |p| {
            p[0] + 2.0 * p[1]
        });
        assert_eq!(g.point(12), alloc::vec![0.1, 0.1]);
        let v = g.interpolate_2d(0.33, 0.71).unwrap();
        assert!((v - (0.33 + 1.42)).abs() < 1e-14);
        assert!(g.interpolate_2d(1.2, 0.0).is_none());
        assert_eq!(g.min(), 0.0);
        assert!((g.max() - 3.0).abs() < 1e-15);
    }
}
