//! Tomographic inversion: per-setting characteristic functions, assembly
//! on a Cartesian Fourier grid, and FFT inversion to a PQPD grid.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::{Axis, CoordinateSystem, Diagnostics, QpdGrid};
use crate::measure::{CountPmf, Tomogram, TomogramData, WaveplateSetting};
use crate::numerics::{dft_grid, Sign};

/// A characteristic-function value with its shot-noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharSample {
    pub value: Complex64,
    pub variance: f64,
}

fn pmf_char(pmf: &CountPmf, sigma: f64, lambda: f64) -> Complex64 {
    pmf.char_fn(lambda) * libm::exp(-0.5 * sigma * sigma * lambda * lambda)
}

/// `E[e^{i lambda y}]` from a tomogram. Exact distributions carry their
/// `sigma` as a Gaussian factor and zero variance.
pub fn empirical_char(t: &Tomogram, lambda: f64) -> Result<CharSample> {
    match &t.data {
        TomogramData::Pmf(p) => Ok(CharSample {
            value: pmf_char(p, t.sigma, lambda),
            variance: 0.0,
        }),
        TomogramData::Samples(s) => {
            if s.is_empty() {
                return Err(invalid("shots", 0.0, "tomogram has no samples"));
            }
            let sum: Complex64 = s
                .iter()
                .map(|y| Complex64::from_polar(1.0, lambda * y))
                .sum();
            let value = sum / s.len() as f64;
            Ok(CharSample {
                value,
                variance: (1.0 - value.norm_sqr()).max(0.0) / s.len() as f64,
            })
        }
    }
}

/// The characteristic function along one waveplate setting,
/// sampled at `lambda_k = k * lambda_step`, `k = 0..values.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub setting: WaveplateSetting,
    pub lambda_step: f64,
    pub values: Vec<Complex64>,
    /// Shot count; 0 marks noiseless data.
    pub shots: u64,
}

impl Ray {
    fn check(lambda_max: f64, count: usize) -> Result<f64> {
        if count < 2 {
            return Err(invalid(
                "count",
                count as f64,
                "a ray needs at least two samples",
            ));
        }
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(invalid("lambda_max", lambda_max, "must be positive"));
        }
        Ok(lambda_max / (count - 1) as f64)
    }

    pub fn from_tomogram(t: &Tomogram, lambda_max: f64, count: usize) -> Result<Self> {
        let step = Self::check(lambda_max, count)?;
        let values = match &t.data {
            TomogramData::Pmf(p) => (0..count)
                .map(|k| pmf_char(p, t.sigma, k as f64 * step))
                .collect(),
            TomogramData::Samples(s) => {
                if s.is_empty() {
                    return Err(invalid("shots", 0.0, "tomogram has no samples"));
                }
                let mut acc = vec![Complex64::new(0.0, 0.0); count];
                for y in s {
                    let rot = Complex64::from_polar(1.0, step * y);
                    let mut ph = Complex64::new(1.0, 0.0);
                    for a in acc.iter_mut() {
                        *a += ph;
                        ph *= rot;
                    }
                }
                let n = s.len() as f64;
                acc.into_iter().map(|a| a / n).collect()
            }
        };
        let shots = match t.data {
            TomogramData::Pmf(_) => 0,
            TomogramData::Samples(ref s) => s.len() as u64,
        };
        Ok(Self {
            setting: t.setting,
            lambda_step: step,
            values,
            shots,
        })
    }

    /// Noiseless ray from a known characteristic function of `lambda`.
    pub fn from_fn<F: FnMut(f64) -> Complex64>(
        setting: WaveplateSetting,
        lambda_max: f64,
        count: usize,
        mut f: F,
    ) -> Result<Self> {
        let step = Self::check(lambda_max, count)?;
        Ok(Self {
            setting,
            lambda_step: step,
            values: (0..count).map(|k| f(k as f64 * step)).collect(),
            shots: 0,
        })
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_step * (self.values.len() - 1) as f64
    }

    fn std(&self, k: usize) -> f64 {
        if self.shots == 0 {
            0.0
        } else {
            libm::sqrt((1.0 - self.values[k].norm_sqr()).max(0.0) / self.shots as f64)
        }
    }

    /// Sample `k`, continued to `k < 0` through `chi(-l) = conj(chi(l))`.
    fn node(&self, k: isize) -> (Complex64, f64) {
        let i = k.unsigned_abs();
        let v = self.values[i];
        (if k < 0 { v.conj() } else { v }, self.std(i))
    }

    /// Cubic Lagrange interpolation in `lambda` (linear in the last cell).
    /// `None` beyond `lambda_max`.
    fn radial(&self, lambda: f64) -> Option<Radial> {
        let f = lambda / self.lambda_step;
        let last = self.values.len() - 1;
        if f > last as f64 + 1e-9 {
            return None;
        }
        let k = (libm::floor(f) as usize).min(last - 1);
        let t = (f - k as f64).clamp(0.0, 1.0);
        let k = k as isize;
        let stencil: ([f64; 4], isize) = if k as usize + 2 <= last {
            (
                [
                    -t * (t - 1.0) * (t - 2.0) / 6.0,
                    (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                    -(t + 1.0) * t * (t - 2.0) / 2.0,
                    (t + 1.0) * t * (t - 1.0) / 6.0,
                ],
                k - 1,
            )
        } else {
            ([0.0, 1.0 - t, t, 0.0], k - 1)
        };
        let mut out = Radial {
            value: Complex64::new(0.0, 0.0),
            std: 0.0,
            weight: 0.0,
            error: 0.0,
        };
        for (j, w) in stencil.0.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let (v, s) = self.node(stencil.1 + j as isize);
            out.value += v * *w;
            out.std += w.abs() * s;
            out.weight += w.abs();
        }
        let d = |a: isize| self.node(a).0;
        out.error = if k + 3 <= last as isize {
            // cubic remainder at mid-cell, from the fourth difference
            (d(k - 2) - d(k - 1) * 4.0 + d(k) * 6.0 - d(k + 1) * 4.0 + d(k + 2)).norm() * 3.0
                / 128.0
        } else {
            (d(k + 1) - d(k) * 2.0 + d(k - 1)).norm() / 8.0
        };
        Some(out)
    }
}

struct Radial {
    value: Complex64,
    std: f64,
    weight: f64,
    error: f64,
}

/// Uniform Cartesian grid in `u`: `n` points per axis with spacing `du`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierGrid {
    pub n: usize,
    pub du: f64,
}

impl FourierGrid {
    pub fn new(n: usize, du: f64) -> Result<Self> {
        Axis::centered(n, du)?;
        Ok(Self { n, du })
    }

    pub fn axis(&self) -> Axis {
        Axis {
            start: -((self.n / 2) as f64) * self.du,
            step: self.du,
            count: self.n,
        }
    }

    /// Spacing of the conjugate Stokes grid, `2 pi / (n du)`.
    pub fn conjugate_step(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.du)
    }
}

/// Acceptance limits for assembling rays on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblySpec {
    /// Largest allowed angle between neighbouring rays (after mirroring).
    pub max_angular_gap: f64,
    /// A ray that ends inside the grid must have decayed below
    /// `decay_tolerance + 3 std` at its end.
    pub decay_tolerance: f64,
}

impl Default for AssemblySpec {
    fn default() -> Self {
        Self {
            max_angular_gap: PI / 6.0,
            decay_tolerance: 1e-6,
        }
    }
}

/// Characteristic function on a Cartesian grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CharGrid {
    pub axes: Vec<Axis>,
    pub values: Vec<Complex64>,
    /// Upper bound on the shot-noise variance of each value.
    pub variances: Vec<f64>,
    /// Coordinates of the conjugate (output) grid.
    pub coordinates: CoordinateSystem,
    /// Per ray: `(sum of |interpolation weights|, shots)`.
    pub ray_weights: Vec<(f64, u64)>,
    /// Per-point interpolation error estimates.
    pub interpolation_errors: Vec<f64>,
}

impl CharGrid {
    /// Noiseless grid from a known characteristic function of the grid point.
    pub fn from_fn<F: FnMut(&[f64]) -> Complex64>(
        grid: FourierGrid,
        dimension: usize,
        coordinates: CoordinateSystem,
        mut f: F,
    ) -> Result<Self> {
        if !(dimension == 2 || dimension == 3) {
            return Err(invalid("dimension", dimension as f64, "must be 2 or 3"));
        }
        let axes = vec![grid.axis(); dimension];
        let total = grid.n.pow(dimension as u32);
        let mut point = vec![0.0; dimension];
        let mut values = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            for d in (0..dimension).rev() {
                point[d] = axes[d].coord(rem % grid.n);
                rem /= grid.n;
            }
            values.push(f(&point));
        }
        Ok(Self {
            axes,
            values,
            variances: vec![0.0; total],
            coordinates,
            ray_weights: Vec::new(),
            interpolation_errors: vec![0.0; total],
        })
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    fn du_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.step).product()
    }

    fn fourier_constant(&self) -> f64 {
        self.du_volume() / libm::pow(2.0 * PI, self.dimension() as f64)
    }

    /// Bound on the standard deviation of every inverted value:
    /// `du^d / (2 pi)^d * sqrt(sum_r W_r^2 / shots_r)`.
    pub fn shot_noise_bound(&self) -> Option<f64> {
        let s: f64 = self
            .ray_weights
            .iter()
            .filter(|(_, n)| *n > 0)
            .map(|(w, n)| w * w / *n as f64)
            .sum();
        if self.ray_weights.iter().all(|(_, n)| *n == 0) {
            None
        } else {
            Some(self.fourier_constant() * libm::sqrt(s))
        }
    }

    /// Bound on the inverted values' interpolation error.
    pub fn interpolation_error_estimate(&self) -> f64 {
        self.fourier_constant() * self.interpolation_errors.iter().sum::<f64>()
    }

    /// Largest `|chi|` on the outer faces of the grid.
    pub fn boundary_magnitude(&self) -> f64 {
        let shape = self.shape();
        let mut m: f64 = 0.0;
        for (flat, v) in self.values.iter().enumerate() {
            let mut rem = flat;
            let mut edge = false;
            for &n in shape.iter().rev() {
                let i = rem % n;
                rem /= n;
                edge |= i == 0 || i == n - 1;
            }
            if edge {
                m = m.max(v.norm());
            }
        }
        m
    }

    fn mirror_index(&self, flat: usize) -> usize {
        let shape = self.shape();
        let mut rem = flat;
        let mut out = 0;
        let mut stride = 1;
        for &n in shape.iter().rev() {
            let i = rem % n;
            rem /= n;
            out += ((n - i) % n) * stride;
            stride *= n;
        }
        out
    }

    /// `value at origin`.
    pub fn origin(&self) -> Complex64 {
        let shape = self.shape();
        let mut flat = 0;
        for &n in &shape {
            flat = flat * n + n / 2;
        }
        self.values[flat]
    }
}

/// Enforces `chi(-u) = conj(chi(u))` by averaging mirror pairs; the
/// unpaired `-n/2` planes map to themselves and are made real.
pub fn hermitize(cg: &mut CharGrid) {
    for flat in 0..cg.values.len() {
        let m = cg.mirror_index(flat);
        if m < flat {
            continue;
        }
        let avg = (cg.values[flat] + cg.values[m].conj()) * 0.5;
        cg.values[flat] = avg;
        cg.values[m] = avg.conj();
        let var = cg.variances[flat].max(cg.variances[m]);
        cg.variances[flat] = var;
        cg.variances[m] = var;
    }
}

/// Angle-sorted directions with the ray index and whether the mirrored
/// (conjugated) ray is used.
fn angular_ring(angles: &[(f64, usize, bool)]) -> Vec<(f64, usize, bool)> {
    let mut ring: Vec<(f64, usize, bool)> = Vec::new();
    let mut sorted = angles.to_vec();
    // measured directions first so they win over mirrors at equal angles
    sorted.sort_by_key(|a| a.2);
    for &(a, r, c) in &sorted {
        let a = a.rem_euclid(2.0 * PI);
        let dup = ring.iter().any(|(b, _, _)| {
            let d = (a - b).abs();
            d < 1e-9 || (2.0 * PI - d) < 1e-9
        });
        if !dup {
            ring.push((a, r, c));
        }
    }
    ring.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    ring
}

fn max_gap(sorted: &[f64], period: f64) -> f64 {
    if sorted.len() < 2 {
        return period;
    }
    let mut g: f64 = 0.0;
    for w in sorted.windows(2) {
        g = g.max(w[1] - w[0]);
    }
    g.max(sorted[0] + period - sorted[sorted.len() - 1])
}

fn check_decay(rays: &[Ray], reach: f64, spec: &AssemblySpec) -> Result<()> {
    for r in rays {
        if r.lambda_max() >= reach {
            continue;
        }
        let last = r.values.len() - 1;
        let limit = spec.decay_tolerance + 3.0 * r.std(last);
        let mag = r.values[last].norm();
        if mag > limit {
            return Err(Error::Coverage(alloc::format!(
                "ray (theta={:.4}, phi={:.4}) ends at lambda={:.4} inside the grid with |chi|={mag:.3e} > {limit:.3e}",
                r.setting.theta(),
                r.setting.phi(),
                r.lambda_max()
            )));
        }
    }
    Ok(())
}

/// One weighted contribution of a ray sample to a grid value.
struct Contribution {
    ray: usize,
    conj: bool,
    angular: f64,
}

fn accumulate(
    rays: &[Ray],
    lambda: f64,
    parts: &[Contribution],
    weights: &mut [f64],
) -> (Complex64, f64, f64) {
    let mut value = Complex64::new(0.0, 0.0);
    let mut std = 0.0;
    let mut err: f64 = 0.0;
    for c in parts {
        if c.angular == 0.0 {
            continue;
        }
        let Some(r) = rays[c.ray].radial(lambda) else {
            continue;
        };
        value += if c.conj { r.value.conj() } else { r.value } * c.angular;
        std += c.angular * r.std;
        weights[c.ray] += c.angular * r.weight;
        err = err.max(r.error);
    }
    (value, std, err)
}

/// Second difference across neighbouring rays at the same radius.
fn angular_curvature(rays: &[Ray], lambda: f64, trio: [(usize, bool); 3]) -> f64 {
    let mut v = [Complex64::new(0.0, 0.0); 3];
    for (slot, (r, conj)) in v.iter_mut().zip(trio) {
        let Some(x) = rays[r].radial(lambda) else {
            return 0.0;
        };
        *slot = if conj { x.value.conj() } else { x.value };
    }
    (v[0] - v[1] * 2.0 + v[2]).norm() / 8.0
}

/// Assembles rays at `theta = pi/2` on the `(u2, u3)` grid. Rays at `phi`
/// also supply the direction `phi + pi` through `chi(-u) = conj(chi(u))`.
/// Points beyond a ray's `lambda_max` are zero; the origin is 1.
pub fn assemble_2d(rays: &[Ray], grid: FourierGrid, spec: AssemblySpec) -> Result<CharGrid> {
    if rays.is_empty() {
        return Err(Error::Coverage("no rays".into()));
    }
    for r in rays {
        if (r.setting.theta() - PI / 2.0).abs() > 1e-9 {
            return Err(Error::Domain(alloc::format!(
                "2D assembly needs theta = pi/2, got {}",
                r.setting.theta()
            )));
        }
    }
    let mut dirs = Vec::new();
    for (i, r) in rays.iter().enumerate() {
        dirs.push((r.setting.phi(), i, false));
        dirs.push((r.setting.phi() + PI, i, true));
    }
    let ring = angular_ring(&dirs);
    let angles: Vec<f64> = ring.iter().map(|d| d.0).collect();
    let gap = max_gap(&angles, 2.0 * PI);
    if gap > spec.max_angular_gap {
        return Err(Error::Coverage(alloc::format!(
            "largest angular gap {gap:.4} rad exceeds {:.4}",
            spec.max_angular_gap
        )));
    }
    let reach = grid.axis().min().abs() * core::f64::consts::SQRT_2;
    check_decay(rays, reach, &spec)?;

    let axis = grid.axis();
    let n = grid.n;
    let mut cg = CharGrid {
        axes: vec![axis, axis],
        values: vec![Complex64::new(0.0, 0.0); n * n],
        variances: vec![0.0; n * n],
        coordinates: CoordinateSystem::RawStokes,
        ray_weights: Vec::new(),
        interpolation_errors: vec![0.0; n * n],
    };
    let mut weights = vec![0.0; rays.len()];
    let m = ring.len();
    for i in 0..n {
        for j in 0..n {
            let flat = i * n + j;
            let (u2, u3) = (axis.coord(i), axis.coord(j));
            let lambda = libm::hypot(u2, u3);
            if lambda == 0.0 {
                cg.values[flat] = Complex64::new(1.0, 0.0);
                continue;
            }
            let psi = libm::atan2(u3, u2).rem_euclid(2.0 * PI);
            let hi = angles.partition_point(|a| *a <= psi);
            let (a, b) = ((hi + m - 1) % m, hi % m);
            let span = (ring[b].0 - ring[a].0).rem_euclid(2.0 * PI);
            let t = if span == 0.0 {
                0.0
            } else {
                (psi - ring[a].0).rem_euclid(2.0 * PI) / span
            };
            let parts = [
                Contribution {
                    ray: ring[a].1,
                    conj: ring[a].2,
                    angular: 1.0 - t,
                },
                Contribution {
                    ray: ring[b].1,
                    conj: ring[b].2,
                    angular: t,
                },
            ];
            let (v, std, radial) = accumulate(rays, lambda, &parts, &mut weights);
            let c = (a + m - 1) % m;
            let ang = angular_curvature(
                rays,
                lambda,
                [
                    (ring[c].1, ring[c].2),
                    (ring[a].1, ring[a].2),
                    (ring[b].1, ring[b].2),
                ],
            );
            cg.values[flat] = v;
            cg.variances[flat] = std * std;
            cg.interpolation_errors[flat] = radial + ang;
        }
    }
    cg.ray_weights = weights
        .into_iter()
        .zip(rays.iter().map(|r| r.shots))
        .collect();
    Ok(cg)
}

/// Assembles rays on a full `(theta, phi)` product lattice onto the
/// `(u1, u2, u3)` grid. Lattice directions missing from the scan are
/// filled by mirroring `(theta, phi) -> (pi - theta, phi + pi)`.
pub fn assemble_3d(rays: &[Ray], grid: FourierGrid, spec: AssemblySpec) -> Result<CharGrid> {
    if rays.is_empty() {
        return Err(Error::Coverage("no rays".into()));
    }
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    let mut thetas: Vec<f64> = Vec::new();
    let mut phis: Vec<f64> = Vec::new();
    let push = |v: &mut Vec<f64>, x: f64| {
        if !v.iter().any(|y| close(*y, x)) {
            v.push(x);
        }
    };
    for r in rays {
        let (t, p) = (r.setting.theta(), r.setting.phi());
        push(&mut thetas, t);
        push(&mut thetas, PI - t);
        if !r.setting.phi_irrelevant() {
            push(&mut phis, p);
            push(&mut phis, (p + PI).rem_euclid(2.0 * PI));
        }
    }
    let by = |a: &f64, b: &f64| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal);
    thetas.sort_by(by);
    phis.sort_by(by);
    if thetas.len() < 2 || phis.len() < 2 {
        return Err(Error::Coverage(
            "3D assembly needs at least two polar and two azimuthal settings".into(),
        ));
    }
    let (nt, np) = (thetas.len(), phis.len());
    // lattice[it * np + ip] = (ray, conj)
    let mut lattice: Vec<Option<(usize, bool)>> = vec![None; nt * np];
    let find = |v: &[f64], x: f64| v.iter().position(|y| close(*y, x));
    for (idx, r) in rays.iter().enumerate() {
        let (t, p) = (r.setting.theta(), r.setting.phi());
        let it = find(&thetas, t).unwrap_or(0);
        let mt = find(&thetas, PI - t).unwrap_or(0);
        let targets: Vec<usize> = if r.setting.phi_irrelevant() {
            (0..np).collect()
        } else {
            vec![find(&phis, p).unwrap_or(0)]
        };
        for ip in targets {
            let mp = find(&phis, (phis[ip] + PI).rem_euclid(2.0 * PI)).unwrap_or(0);
            lattice[it * np + ip] = Some((idx, false));
            lattice[mt * np + mp].get_or_insert((idx, true));
        }
    }
    if let Some(hole) = lattice.iter().position(|c| c.is_none()) {
        return Err(Error::Coverage(alloc::format!(
            "no setting for theta={:.4}, phi={:.4} in the scan lattice",
            thetas[hole / np],
            phis[hole % np]
        )));
    }
    let theta_gap = thetas.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let phi_gap = max_gap(&phis, 2.0 * PI);
    let worst = theta_gap.max(phi_gap);
    if worst > spec.max_angular_gap || thetas[0] > 1e-9 || thetas[nt - 1] < PI - 1e-9 {
        return Err(Error::Coverage(alloc::format!(
            "angular gaps theta {theta_gap:.4} / phi {phi_gap:.4} rad exceed {:.4} or poles missing",
            spec.max_angular_gap
        )));
    }
    let reach = grid.axis().min().abs() * libm::sqrt(3.0);
    check_decay(rays, reach, &spec)?;

    let axis = grid.axis();
    let n = grid.n;
    let total = n * n * n;
    let mut cg = CharGrid {
        axes: vec![axis, axis, axis],
        values: vec![Complex64::new(0.0, 0.0); total],
        variances: vec![0.0; total],
        coordinates: CoordinateSystem::RawStokes,
        ray_weights: Vec::new(),
        interpolation_errors: vec![0.0; total],
    };
    let mut weights = vec![0.0; rays.len()];
    let cell = |it: usize, ip: usize| lattice[it * np + ip].unwrap_or((0, false));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let flat = (i * n + j) * n + k;
                let (u1, u2, u3) = (axis.coord(i), axis.coord(j), axis.coord(k));
                let lambda = libm::sqrt(u1 * u1 + u2 * u2 + u3 * u3);
                if lambda == 0.0 {
                    cg.values[flat] = Complex64::new(1.0, 0.0);
                    continue;
                }
                let theta = libm::acos((u1 / lambda).clamp(-1.0, 1.0));
                let phi = libm::atan2(u3, u2).rem_euclid(2.0 * PI);
                let it = thetas.partition_point(|t| *t <= theta).clamp(1, nt - 1) - 1;
                let tt = ((theta - thetas[it]) / (thetas[it + 1] - thetas[it])).clamp(0.0, 1.0);
                let hi = phis.partition_point(|p| *p <= phi);
                let (pa, pb) = ((hi + np - 1) % np, hi % np);
                let span = (phis[pb] - phis[pa]).rem_euclid(2.0 * PI);
                let tp = if span == 0.0 {
                    0.0
                } else {
                    (phi - phis[pa]).rem_euclid(2.0 * PI) / span
                };
                let corners = [
                    (cell(it, pa), (1.0 - tt) * (1.0 - tp)),
                    (cell(it, pb), (1.0 - tt) * tp),
                    (cell(it + 1, pa), tt * (1.0 - tp)),
                    (cell(it + 1, pb), tt * tp),
                ];
                let parts: Vec<Contribution> = corners
                    .iter()
                    .map(|((ray, conj), w)| Contribution {
                        ray: *ray,
                        conj: *conj,
                        angular: *w,
                    })
                    .collect();
                let (v, std, radial) = accumulate(rays, lambda, &parts, &mut weights);
                let ic = if it == 0 { 1 } else { it - 1 };
                let ang_t = angular_curvature(
                    rays,
                    lambda,
                    [cell(ic.min(nt - 1), pa), cell(it, pa), cell(it + 1, pa)],
                );
                let pc = (pa + np - 1) % np;
                let ang_p =
                    angular_curvature(rays, lambda, [cell(it, pc), cell(it, pa), cell(it, pb)]);
                cg.values[flat] = v;
                cg.variances[flat] = std * std;
                cg.interpolation_errors[flat] = radial + ang_t + ang_p;
            }
        }
    }
    cg.ray_weights = weights
        .into_iter()
        .zip(rays.iter().map(|r| r.shots))
        .collect();
    Ok(cg)
}

/// Largest `|chi|` allowed on the grid boundary before inversion.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

fn invert(cg: &CharGrid, dimension: usize) -> Result<QpdGrid> {
    if cg.dimension() != dimension {
        return Err(Error::Domain(alloc::format!(
            "expected a {dimension}D characteristic grid, got {}D",
            cg.dimension()
        )));
    }
    let boundary = cg.boundary_magnitude();
    if boundary > BOUNDARY_TOLERANCE {
        return Err(Error::BoundaryDecay {
            magnitude: boundary,
            tolerance: BOUNDARY_TOLERANCE,
        });
    }
    let shape = cg.shape();
    let mut values = cg.values.clone();
    dft_grid(&mut values, &shape, Sign::Negative, cg.fourier_constant())?;
    let axes: Vec<Axis> = cg
        .axes
        .iter()
        .map(|a| Axis::centered(a.count, 2.0 * PI / (a.count as f64 * a.step)))
        .collect::<Result<_>>()?;
    let max_imaginary = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let mut out = QpdGrid {
        axes,
        values: values.iter().map(|v| v.re).collect(),
        coordinates: cg.coordinates,
        jacobian: None,
        singular_cells: Vec::new(),
        diagnostics: Diagnostics::default(),
    };
    out.diagnostics = Diagnostics {
        normalization_error: Some((out.mass() - cg.origin().re).abs()),
        max_imaginary: Some(max_imaginary),
        boundary_magnitude: Some(boundary),
        shot_noise_bound: cg.shot_noise_bound(),
        interpolation_error: Some(cg.interpolation_error_estimate()),
    };
    Ok(out)
}

/// `W(S2, S3) = int chi(u2, u3) e^{-i(u2 S2 + u3 S3)} d^2u / (2 pi)^2` by FFT.
pub fn invert_2d(cg: &CharGrid) -> Result<QpdGrid> {
    invert(cg, 2)
}

/// Three-dimensional counterpart of [`invert_2d`]; meaningful for smoothed data.
pub fn invert_3d(cg: &CharGrid) -> Result<QpdGrid> {
    invert(cg, 3)
}
