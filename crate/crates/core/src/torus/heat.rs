use std::f64::consts::PI;

use ndarray::Array2;

use super::{TorusGrid, TWO_PI};
use crate::error::{Error, Result};

/// Image-sum representation of the heat kernel, `Σ_k (2πv)^{-1/2} exp(−(dx + 2πk)²/(2v))`.
///
/// Images are kept while their Gaussian tail exceeds 1e-16 relative.
pub fn wrapped_gaussian_sum(dx: f64, variance: f64) -> f64 {
    let dx = centered(dx);
    let reach = PI + (80.0 * variance).sqrt();
    let images = (reach / TWO_PI).ceil() as i64;
    let norm = 1.0 / (TWO_PI * variance).sqrt();
    let mut acc = 0.0;
    // smallest images last, so the dominant term is not swamped by summation order
    for k in (1..=images).rev() {
        let a = dx + TWO_PI * k as f64;
        let b = dx - TWO_PI * k as f64;
        acc += (-a * a / (2.0 * variance)).exp() + (-b * b / (2.0 * variance)).exp();
    }
    acc += (-dx * dx / (2.0 * variance)).exp();
    acc * norm
}

/// Fourier representation of the heat kernel, `(2π)^{-1} Σ_k exp(−v k²/2) cos(k dx)`.
///
/// Modes are kept while `exp(−v k²/2) ≥ 1e-18`.
pub fn fourier_heat_series(dx: f64, variance: f64) -> f64 {
    let kmax = (2.0 * 41.5 / variance).sqrt().ceil() as i64;
    let mut acc = 0.0;
    for k in (1..=kmax).rev() {
        let kf = k as f64;
        acc += (-0.5 * variance * kf * kf).exp() * (kf * dx).cos();
    }
    (1.0 + 2.0 * acc) / TWO_PI
}

/// Heat kernel for variance `v = τ s`: image sum for `v ≤ 1`, Fourier series above.
pub fn periodic_gaussian(dx: f64, variance: f64) -> f64 {
    if variance <= 1.0 {
        wrapped_gaussian_sum(dx, variance)
    } else {
        fourier_heat_series(dx, variance)
    }
}

fn centered(dx: f64) -> f64 {
    let y = (dx + PI).rem_euclid(TWO_PI) - PI;
    if y >= PI {
        y - TWO_PI
    } else {
        y
    }
}

/// Transition density of temperature-`τ` Brownian motion over time `s`,
/// sampled at all node pairs.
#[derive(Debug, Clone)]
pub struct HeatKernelMatrix {
    grid: TorusGrid,
    time: f64,
    temperature: f64,
    entries: Array2<f64>,
}

impl HeatKernelMatrix {
    /// Checked constructor: requires `√(τs) ≥ 2·spacing`.
    pub fn new(grid: TorusGrid, time: f64, temperature: f64) -> Result<Self> {
        check_args(time, temperature)?;
        let width = (time * temperature).sqrt();
        if width < 2.0 * grid.spacing() {
            return Err(Error::Resolution(format!(
                "kernel width √(τs) = {width:.4e} is below two grid spacings ({:.4e})",
                2.0 * grid.spacing()
            )));
        }
        Ok(Self::build(grid, time, temperature))
    }

    /// Skips the resolution guard; for coarse toy grids and oracles.
    pub fn new_unchecked(grid: TorusGrid, time: f64, temperature: f64) -> Result<Self> {
        check_args(time, temperature)?;
        Ok(Self::build(grid, time, temperature))
    }

    fn build(grid: TorusGrid, time: f64, temperature: f64) -> Self {
        let n = grid.points_per_axis();
        let variance = time * temperature;
        let mut profile = vec![0.0; n];
        for d in 0..=n / 2 {
            let v = periodic_gaussian(d as f64 * grid.spacing(), variance);
            profile[d] = v;
            profile[(n - d) % n] = v;
        }
        let entries = Array2::from_shape_fn((n, n), |(i, j)| profile[(i + n - j) % n]);
        Self {
            grid,
            time,
            temperature,
            entries,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// `Σ_j p(x_i, x_j) · spacing^d`.
    pub fn row_mass(&self, i: usize) -> f64 {
        self.entries.row(i).sum() * self.grid.cell_volume()
    }
}

fn check_args(time: f64, temperature: f64) -> Result<()> {
    if !(time > 0.0) || !time.is_finite() {
        return Err(Error::Domain(format!("heat kernel time must be > 0, got {time}")));
    }
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::Domain(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    Ok(())
}

/// Checked heat kernel matrix; see [`HeatKernelMatrix::new`].
pub fn heat_kernel(grid: &TorusGrid, time: f64, temperature: f64) -> Result<HeatKernelMatrix> {
    HeatKernelMatrix::new(*grid, time, temperature)
}
