use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// FFT-backed operators on a periodic grid of `n` points over `[0, 2π)`.
///
/// Mode `j` of the DFT carries wavenumber `j` for `j < n/2` and `j − n` above;
/// the Nyquist mode is treated as `+n/2` for even operators (heat flow) and
/// zeroed for odd ones (derivatives) so that derivatives stay real and
/// skew-adjoint.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Signed wavenumber of DFT index `j`, Nyquist mapped to `+n/2`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        if j <= self.n / 2 {
            j as f64
        } else {
            j as f64 - self.n as f64
        }
    }

    /// Wavenumber used for odd-order derivatives (Nyquist removed).
    fn odd_wavenumber(&self, j: usize) -> f64 {
        if self.n.is_multiple_of(2) && j == self.n / 2 {
            0.0
        } else {
            self.wavenumber(j)
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse DFT including the `1/n` factor; returns the real part.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Inverse DFT including `1/n`, complex output in place.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    /// Multiply coefficients by `i k` (spectral first derivative) in place.
    pub fn differentiate_coeffs(&self, coeffs: &mut [Complex64]) {
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, self.odd_wavenumber(j));
        }
    }

    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        let mut c = self.forward(values);
        self.differentiate_coeffs(&mut c);
        self.inverse(&c)
    }

    /// Multiplier `exp(−variance · k² / 2)` of heat flow for time `variance / τ`.
    pub fn heat_factor(&self, j: usize, variance: f64) -> f64 {
        let k = self.wavenumber(j);
        (-0.5 * variance * k * k).exp()
    }

    /// Band-limited heat extension of `coeffs` over the given variance:
    /// returns the values and the first spatial derivative on the grid.
    pub fn heat_extension(&self, coeffs: &[Complex64], variance: f64) -> (Vec<f64>, Vec<f64>) {
        let mut v: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * self.heat_factor(j, variance))
            .collect();
        let mut d = v.clone();
        self.differentiate_coeffs(&mut d);
        self.inverse_in_place(&mut v);
        self.inverse_in_place(&mut d);
        (v.iter().map(|c| c.re).collect(), d.iter().map(|c| c.re).collect())
    }

    /// Evaluate the trigonometric interpolant of `values` at arbitrary points.
    pub fn interpolate(&self, values: &[f64], xs: &[f64]) -> Vec<f64> {
        let c = self.forward(values);
        let n = self.n;
        let inv_n = 1.0 / n as f64;
        xs.iter()
            .map(|&x| {
                let mut acc = c[0].re;
                for (j, cj) in c.iter().enumerate().take(n.div_ceil(2)).skip(1) {
                    let e = Complex64::from_polar(1.0, j as f64 * x);
                    acc += 2.0 * (cj * e).re;
                }
                if n.is_multiple_of(2) {
                    acc += c[n / 2].re * ((n / 2) as f64 * x).cos();
                }
                acc * inv_n
            })
            .collect()
    }
}
