use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sign of the exponent in a discrete Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `exp(-i ...)`
    Negative,
    /// `exp(+i ...)`
    Positive,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Positive => 1.0,
        }
    }
}

/// Unnormalized radix-2 FFT, `X_k = sum_j x_j exp(sign * 2 pi i j k / N)`.
pub fn fft_in_place(data: &mut [Complex64], sign: Sign) -> Result<()> {
    let n = data.len();
    if !n.is_power_of_two() {
        return Err(Error::GridSize(n));
    }
    if n == 1 {
        return Ok(());
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let s = sign.factor();
    let mut len = 2;
    while len <= n {
        let angle = s * 2.0 * PI / len as f64;
        let half = len / 2;
        // twiddles computed directly rather than by repeated multiplication
        let twiddles: Vec<Complex64> = (0..half)
            .map(|k| Complex64::from_polar(1.0, angle * k as f64))
            .collect();
        for chunk in data.chunks_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for ((a, b), t) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                let v = *b * t;
                *b = *a - v;
                *a += v;
            }
        }
        len <<= 1;
    }
    Ok(())
}

/// Centered multidimensional DFT on a row-major grid (last axis fastest).
///
/// Along every axis of length `N` the sample index `j` stands for the
/// coordinate `(j - N/2) h`, and the output index `k` for `(k - N/2) 2 pi / (N h)`:
///
/// `out_k = normalization * sum_j in_j exp(sign * 2 pi i (j - N/2)(k - N/2) / N)`.
pub fn dft_grid(
    values: &mut [Complex64],
    shape: &[usize],
    sign: Sign,
    normalization: f64,
) -> Result<()> {
    let total: usize = shape.iter().product();
    if total != values.len() {
        return Err(Error::Domain(alloc::format!(
            "grid shape {:?} does not match {} values",
            shape,
            values.len()
        )));
    }
    for &n in shape {
        if !n.is_power_of_two() {
            return Err(Error::GridSize(n));
        }
    }
    let mut line = Vec::new();
    let mut stride = 1;
    for axis in (0..shape.len()).rev() {
        let n = shape[axis];
        let outer = total / (n * stride);
        let parity_shift = if (n / 2) % 2 == 1 { -1.0 } else { 1.0 };
        line.resize(n, Complex64::new(0.0, 0.0));
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for (j, slot) in line.iter_mut().enumerate() {
                    let v = values[base + j * stride];
                    *slot = if j % 2 == 1 { -v } else { v };
                }
                fft_in_place(&mut line, sign)?;
                for (k, v) in line.iter().enumerate() {
                    let f = if k % 2 == 1 {
                        -parity_shift
                    } else {
                        parity_shift
                    };
                    values[base + k * stride] = v * f;
                }
            }
        }
        stride *= n;
    }
    if normalization != 1.0 {
        for v in values.iter_mut() {
            *v *= normalization;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn naive_centered(input: &[Complex64], sign: Sign) -> Vec<Complex64> {
        let n = input.len() as i64;
        (0..n)
            .map(|k| {
                input
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let phase =
                            sign.factor() * 2.0 * PI * ((j as i64 - n / 2) * (k - n / 2)) as f64
                                / n as f64;
                        v * Complex64::from_polar(1.0, phase)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn centered_matches_naive() {
        for &n in &[1usize, 2, 4, 8, 16, 32] {
            let input: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new(libm::sin(j as f64 * 0.7), libm::cos(j as f64 * 1.3)))
                .collect();
            for sign in [Sign::Negative, Sign::Positive] {
                let mut got = input.clone();
                dft_grid(&mut got, &[n], sign, 1.0).unwrap();
                let want = naive_centered(&input, sign);
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).norm() < 1e-10, "n={n}");
                }
            }
        }
    }

    #[test]
    fn gaussian_pair() {
        // int e^{-u^2/2} e^{-iuS} du = sqrt(2 pi) e^{-S^2/2}
        let n = 128;
        let h = 0.15;
        let mut v: Vec<Complex64> = (0..n)
            .map(|j| {
                let u = (j as f64 - (n / 2) as f64) * h;
                Complex64::new(libm::exp(-u * u / 2.0), 0.0)
            })
            .collect();
        dft_grid(&mut v, &[n], Sign::Negative, h).unwrap();
        let ds = 2.0 * PI / (n as f64 * h);
        for (k, value) in v.iter().enumerate() {
            let s = (k as f64 - (n / 2) as f64) * ds;
            let want = libm::sqrt(2.0 * PI) * libm::exp(-s * s / 2.0);
            assert!((value.re - want).abs() < 1e-12);
            assert!(value.im.abs() < 1e-12);
        }
    }

    #[test]
    fn delta_is_flat() {
        let n = 16;
        let mut v = vec![Complex64::new(0.0, 0.0); n * n];
        v[(n / 2) * n + n / 2] = Complex64::new(1.0, 0.0);
        dft_grid(&mut v, &[n, n], Sign::Negative, 1.0).unwrap();
        for x in &v {
            assert!((x - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        let mut v = vec![Complex64::new(0.0, 0.0); 6];
        assert_eq!(
            dft_grid(&mut v, &[6], Sign::Negative, 1.0),
            Err(Error::GridSize(6))
        );
    }
}
