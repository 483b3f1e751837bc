//! Uniform grids on the flat torus `[0, 2π)`, discrete fields and densities,
//! spectral calculus, heat kernels and grid KL divergences.
//!
//! Only `d = 1` is supported; every constructor rejects other dimensions.

mod divergence;
mod heat;
mod spectral;

pub use divergence::{kl_coupling, kl_divergence, Coupling};
pub use heat::{fourier_heat_series, heat_kernel, wrapped_gaussian_sum, HeatKernelMatrix};
pub use spectral::Spectral;

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Floor applied only inside logarithms.
pub const LOG_FLOOR: f64 = 1e-300;

/// Tolerance on the unit-mass invariant of [`GridDensity`].
pub const MASS_TOL: f64 = 1e-12;

pub const TWO_PI: f64 = 2.0 * PI;

/// Uniform discretization of the flat torus with `n` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    spacing: f64,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 {
            return Err(Error::Unsupported(format!(
                "torus dimension {dim}; only d = 1 is implemented"
            )));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "grid needs an even number of points >= 4, got {n}"
            )));
        }
        Ok(Self {
            dim,
            n,
            spacing: TWO_PI / n as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    /// Total number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Quadrature weight of one node, `spacing^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn node(&self, i: usize) -> f64 {
        TWO_PI * i as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Sample `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            grid: *self,
            values: (0..self.n).map(|i| f(self.node(i))).collect(),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {len}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Shorthand for [`TorusGrid::new`].
pub fn make_grid(dim: usize, n: usize) -> Result<TorusGrid> {
    TorusGrid::new(dim, n)
}

/// Wrap a coordinate into `[0, 2π)`.
pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(TWO_PI);
    if y >= TWO_PI {
        0.0
    } else {
        y
    }
}

/// A real function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Rectangle rule `Σ values · spacing^d`, spectrally accurate for smooth periodic data.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Spectral derivative along the single axis.
    pub fn gradient(&self) -> GridField {
        let spectral = Spectral::new(self.grid.n);
        GridField {
            grid: self.grid,
            values: spectral.derivative(&self.values),
        }
    }

    /// Second-order central difference derivative.
    pub fn gradient_central(&self) -> GridField {
        let n = self.values.len();
        let h = self.grid.spacing;
        let values = (0..n)
            .map(|i| (self.values[(i + 1) % n] - self.values[(i + n - 1) % n]) / (2.0 * h))
            .collect();
        GridField {
            grid: self.grid,
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &GridField) -> Result<GridField> {
        same_grid(&self.grid, &other.grid)?;
        Ok(GridField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }
}

/// Integration by quadrature; free-function form of [`GridField::integrate`].
pub fn integrate(field: &GridField) -> f64 {
    field.integrate()
}

/// Spectral gradient; free-function form of [`GridField::gradient`].
pub fn gradient(field: &GridField) -> GridField {
    field.gradient()
}

pub(crate) fn same_grid(a: &TorusGrid, b: &TorusGrid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!(
            "n = {} vs n = {}",
            a.points_per_axis(),
            b.points_per_axis()
        )));
    }
    Ok(())
}

/// Nonnegative, unit-mass density sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl GridDensity {
    /// Validates nonnegativity and unit mass (within [`MASS_TOL`]).
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!(
                "density value {} at node {i} is not a finite nonnegative number",
                values[i]
            )));
        }
        let mass = values.iter().sum::<f64>() * grid.cell_volume();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::Domain(format!("density mass {mass} is not 1")));
        }
        Ok(Self { grid, values })
    }

    /// Rescale nonnegative weights to unit mass.
    pub fn normalized(grid: TorusGrid, mut values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("density weights must be finite and >= 0".into()));
        }
        let mass = values.iter().sum::<f64>() * grid.cell_volume();
        if !(mass > 0.0) {
            return Err(Error::Domain("density weights have zero mass".into()));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Ok(Self { grid, values })
    }

    pub fn uniform(grid: TorusGrid) -> Self {
        let v = 1.0 / TWO_PI.powi(grid.dim() as i32);
        Self {
            grid,
            values: vec![v; grid.len()],
        }
    }

    /// Von-Mises-like density `∝ exp(κ cos(x − x₀))`.
    pub fn von_mises(grid: TorusGrid, kappa: f64, center: f64) -> Self {
        let w = grid.sample(|x| (kappa * ((x - center).cos() - 1.0)).exp());
        Self::normalized(grid, w.into_values()).expect("von Mises weights are positive")
    }

    /// Wrapped Gaussian with the given center and variance.
    pub fn wrapped_gaussian(grid: TorusGrid, center: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::Domain(format!("variance must be > 0, got {variance}")));
        }
        let w = grid.sample(|x| heat::periodic_gaussian(x - center, variance));
        Self::normalized(grid, w.into_values())
    }

    /// Build from unnormalized log-weights.
    pub fn from_log_weights(grid: TorusGrid, log_w: &[f64]) -> Result<Self> {
        let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self::normalized(grid, log_w.iter().map(|l| (l - max).exp()).collect())
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn as_field(&self) -> GridField {
        GridField {
            grid: self.grid,
            values: self.values.clone(),
        }
    }

    /// `Σ |p − q| · spacing^d`.
    pub fn l1_distance(&self, other: &GridDensity) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.cell_volume())
    }

    pub fn max_abs_diff(&self, other: &GridDensity) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Evaluate the trigonometric interpolant at an arbitrary point.
    pub fn interpolate(&self, x: f64) -> f64 {
        Spectral::new(self.grid.points_per_axis()).interpolate(&self.values, &[x])[0]
    }

    /// Mass of each of `bins` equal arcs of `[0, 2π)`, by midpoint quadrature
    /// of the trigonometric interpolant.
    pub fn bin_masses(&self, bins: usize, sub_points: usize) -> Vec<f64> {
        let width = TWO_PI / bins as f64;
        let dx = width / sub_points as f64;
        let xs: Vec<f64> = (0..bins * sub_points).map(|k| (k as f64 + 0.5) * dx).collect();
        let vals = Spectral::new(self.grid.points_per_axis()).interpolate(&self.values, &xs);
        vals.chunks(sub_points)
            .map(|c| c.iter().sum::<f64>() * dx)
            .collect()
    }
}
