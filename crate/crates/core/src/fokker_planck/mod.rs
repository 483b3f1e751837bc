//! Marginals `ρ_t` of `dZ = ∇Ψ(t, Z) dt + √τ dB` on the torus.
//!
//! The deterministic solver integrates `∂ₜρ = −∇·(ρ∇Ψ) + (τ/2)Δρ` with an
//! integrating-factor RK4 scheme in Fourier space: diffusion is applied exactly
//! through the factor `exp(−τ k² Δt / 2)`, the advective flux `ρ∇Ψ` is formed
//! pointwise and differentiated spectrally, which conserves mass to roundoff.
//! [`particles`] holds the independent Euler–Maruyama simulator.

pub mod particles;

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::torus::{GridDensity, Spectral, TorusGrid};

pub use particles::{simulate_particles, write_particles_csv, ParticleEnsemble};

/// Largest admissible advective Courant number `max|∇Ψ| Δt / spacing`.
pub const MAX_COURANT: f64 = 0.5;

/// Negative mass above this aborts an evolution.
pub const MAX_CLIP_MASS: f64 = 1e-8;

const CFL_TIME_SAMPLES: usize = 32;

/// How many steps to take over a segment: enough to keep `Δt ≤ max_dt` and
/// to satisfy the CFL limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    pub max_dt: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { max_dt: 1e-3 }
    }
}

impl StepPolicy {
    pub fn steps(&self, spec: &PotentialSpec, grid: &TorusGrid, t_from: f64, t_to: f64) -> usize {
        let len = t_to - t_from;
        if len <= 0.0 {
            return 0;
        }
        let by_dt = (len / self.max_dt - 1e-9).ceil().max(1.0) as usize;
        by_dt.max(cfl_min_steps(spec, grid, t_from, t_to))
    }
}

/// Smallest step count satisfying the advective CFL limit over `[t_from, t_to]`.
pub fn cfl_min_steps(spec: &PotentialSpec, grid: &TorusGrid, t_from: f64, t_to: f64) -> usize {
    let len = t_to - t_from;
    if len <= 0.0 {
        return 0;
    }
    let vmax = spec.max_grad(grid, t_from, t_to, CFL_TIME_SAMPLES);
    ((vmax * len / (MAX_COURANT * grid.spacing())) - 1e-12)
        .ceil()
        .max(1.0) as usize
}

/// Reusable integrator for one grid, potential and temperature.
#[derive(Debug, Clone)]
pub struct Evolver {
    grid: TorusGrid,
    spec: PotentialSpec,
    tau: f64,
    spectral: Spectral,
    /// `∂ₓ` of each term's spatial factor on the grid.
    profiles: Vec<Vec<f64>>,
}

impl Evolver {
    pub fn new(grid: TorusGrid, spec: &PotentialSpec, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("temperature must be > 0, got {tau}")));
        }
        spec.validate()?;
        let profiles = spec
            .terms
            .iter()
            .map(|term| {
                let single = PotentialSpec {
                    terms: vec![crate::potential::FourierTerm {
                        time_coeff: crate::potential::TimeCoeff::constant(1.0),
                        ..term.clone()
                    }],
                };
                single.grad_on(&grid, 0.0)
            })
            .collect();
        Ok(Self {
            grid,
            spec: spec.clone(),
            tau,
            spectral: Spectral::new(grid.points_per_axis()),
            profiles,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn drift(&self, t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (term, profile) in self.spec.terms.iter().zip(&self.profiles) {
            let c = term.time_coeff.derivative(0, t);
            if c == 0.0 {
                continue;
            }
            out.iter_mut().zip(profile).for_each(|(o, p)| *o += c * p);
        }
    }

    /// `−∂ₓ(ρ ∇Ψ(t))` in Fourier space.
    fn advection(&self, t: f64, coeffs: &[Complex64], drift: &mut [f64], out: &mut [Complex64]) {
        self.drift(t, drift);
        out.copy_from_slice(coeffs);
        self.spectral.inverse_in_place(out);
        for (o, v) in out.iter_mut().zip(drift.iter()) {
            *o = Complex64::new(o.re * v, 0.0);
        }
        self.spectral.forward_in_place(out);
        self.spectral.differentiate_coeffs(out);
        out.iter_mut().for_each(|c| *c = -*c);
    }

    /// Advance raw grid values (not necessarily a density) without clipping.
    pub fn propagate(&self, values: &[f64], t_from: f64, t_to: f64, n_steps: usize) -> Result<Vec<f64>> {
        if values.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                self.grid.len(),
                values.len()
            )));
        }
        if t_to < t_from {
            return Err(Error::Domain(format!(
                "cannot evolve backwards from {t_from} to {t_to}"
            )));
        }
        if t_to == t_from {
            return Ok(values.to_vec());
        }
        if n_steps == 0 {
            return Err(Error::Config(
                "n_steps must be >= 1 for a nonempty interval".into(),
            ));
        }
        let dt = (t_to - t_from) / n_steps as f64;
        let vmax = self.spec.max_grad(&self.grid, t_from, t_to, CFL_TIME_SAMPLES);
        let courant = vmax * dt / self.grid.spacing();
        if courant > MAX_COURANT {
            return Err(Error::Cfl {
                courant,
                min_steps: cfl_min_steps(&self.spec, &self.grid, t_from, t_to),
            });
        }

        let n = self.grid.len();
        let half: Vec<f64> = (0..n)
            .map(|j| {
                let k = self.spectral.wavenumber(j);
                (-0.5 * self.tau * k * k * 0.5 * dt).exp()
            })
            .collect();
        let mut u = self.spectral.forward(values);
        if self.spec.is_zero() {
            // pure heat flow: exact in one shot
            let total = t_to - t_from;
            for (j, c) in u.iter_mut().enumerate() {
                let k = self.spectral.wavenumber(j);
                *c *= (-0.5 * self.tau * k * k * total).exp();
            }
            return Ok(self.spectral.inverse(&u));
        }

        let zero = Complex64::new(0.0, 0.0);
        let (mut a, mut b, mut c, mut d) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
        let mut stage = vec![zero; n];
        let mut drift = vec![0.0; n];
        for step in 0..n_steps {
            let t = t_from + step as f64 * dt;
            self.advection(t, &u, &mut drift, &mut a);
            for j in 0..n {
                stage[j] = half[j] * (u[j] + 0.5 * dt * a[j]);
            }
            self.advection(t + 0.5 * dt, &stage, &mut drift, &mut b);
            for j in 0..n {
                stage[j] = half[j] * u[j] + 0.5 * dt * b[j];
            }
            self.advection(t + 0.5 * dt, &stage, &mut drift, &mut c);
            for j in 0..n {
                stage[j] = half[j] * (half[j] * u[j] + dt * c[j]);
            }
            self.advection(t + dt, &stage, &mut drift, &mut d);
            for j in 0..n {
                let e2 = half[j] * half[j];
                u[j] = e2 * u[j] + dt / 6.0 * (e2 * a[j] + 2.0 * half[j] * (b[j] + c[j]) + d[j]);
            }
        }
        Ok(self.spectral.inverse(&u))
    }

    /// Evolve a density; see [`evolve`].
    pub fn evolve(&self, rho0: &GridDensity, t_from: f64, t_to: f64, n_steps: usize) -> Result<GridDensity> {
        crate::torus::same_grid(rho0.grid(), &self.grid)?;
        let raw = self.propagate(rho0.values(), t_from, t_to, n_steps)?;
        clip_and_normalize(self.grid, raw)
    }
}

fn clip_and_normalize(grid: TorusGrid, values: Vec<f64>) -> Result<GridDensity> {
    clip_with_limit(grid, values, MAX_CLIP_MASS)
}

fn clip_with_limit(grid: TorusGrid, mut values: Vec<f64>, limit: f64) -> Result<GridDensity> {
    let h = grid.cell_volume();
    let clipped: f64 = values.iter().filter(|v| **v < 0.0).map(|v| -v * h).sum();
    if clipped > limit {
        return Err(Error::ClipMass { clipped });
    }
    if clipped > 0.0 {
        log::debug!("clipped {clipped:.3e} of negative mass");
        values.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    GridDensity::normalized(grid, values)
}

/// Evolve `ρ₀` from `t_from` to `t_to` in `n_steps` steps.
///
/// Fails with [`Error::Cfl`] when `max|∇Ψ| Δt / spacing > 0.5`.
pub fn evolve(
    rho0: &GridDensity,
    spec: &PotentialSpec,
    tau: f64,
    t_from: f64,
    t_to: f64,
    n_steps: usize,
) -> Result<GridDensity> {
    Evolver::new(*rho0.grid(), spec, tau)?.evolve(rho0, t_from, t_to, n_steps)
}

/// Densities of the SDE at a sorted list of times, starting from `ρ₀` at `t = 0`.
#[derive(Debug, Clone)]
pub struct MarginalPath {
    grid: TorusGrid,
    times: Vec<f64>,
    densities: Vec<GridDensity>,
    spec: PotentialSpec,
    tau: f64,
}

/// Two times closer than this are the same query time.
pub const TIME_MATCH_TOL: f64 = 1e-12;

impl MarginalPath {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn densities(&self) -> &[GridDensity] {
        &self.densities
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn density_at(&self, t: f64) -> Result<&GridDensity> {
        let tol = TIME_MATCH_TOL * t.abs().max(1.0);
        let idx = self.times.partition_point(|&s| s < t - tol);
        match self.times.get(idx) {
            Some(&s) if (s - t).abs() <= tol => Ok(&self.densities[idx]),
            _ => Err(Error::MissingTime(t)),
        }
    }

    /// CSV with columns `t,node_index,x,density`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv_writer(writer);
        w.write_record(["t", "node_index", "x", "density"])?;
        for (t, rho) in self.times.iter().zip(&self.densities) {
            for (i, v) in rho.values().iter().enumerate() {
                w.write_record([
                    t.to_string(),
                    i.to_string(),
                    self.grid.node(i).to_string(),
                    v.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer)
}

/// Sequentially evolve `ρ₀` (given at `t = 0`) through `query_times`.
///
/// Each segment uses `policy.steps(..)` steps, so the result at any time is
/// bit-identical to chaining [`evolve`] calls with the same policy.
pub fn marginal_path(
    rho0: &GridDensity,
    spec: &PotentialSpec,
    tau: f64,
    query_times: &[f64],
    policy: StepPolicy,
) -> Result<MarginalPath> {
    let grid = *rho0.grid();
    if query_times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::Config("query times must be finite and >= 0".into()));
    }
    if query_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("query times must be sorted".into()));
    }
    let evolver = Evolver::new(grid, spec, tau)?;
    let mut times: Vec<f64> = Vec::with_capacity(query_times.len());
    let mut densities: Vec<GridDensity> = Vec::with_capacity(query_times.len());
    let mut current_t = 0.0;
    let mut current = rho0.clone();
    for &q in query_times {
        if let Some(&last) = times.last() {
            if (q - last).abs() <= TIME_MATCH_TOL * q.abs().max(1.0) {
                continue;
            }
        }
        if q > current_t + TIME_MATCH_TOL * q.abs().max(1.0) {
            let steps = policy.steps(spec, &grid, current_t, q);
            current = evolver.evolve(&current, current_t, q, steps)?;
            current_t = q;
        }
        times.push(q);
        densities.push(current.clone());
    }
    Ok(MarginalPath {
        grid,
        times,
        densities,
        spec: spec.clone(),
        tau,
    })
}

/// Negative mass tolerated when propagating a single-node spike.
pub const SPIKE_CLIP_MASS: f64 = 1e-2;

/// Row `i` holds the transition density `q(x_i → ·)` over `[t_from, t_to]`,
/// obtained by evolving a unit-mass spike at node `i`.
pub fn transition_matrix(
    grid: TorusGrid,
    spec: &PotentialSpec,
    tau: f64,
    t_from: f64,
    t_to: f64,
    policy: StepPolicy,
) -> Result<Array2<f64>> {
    let n = grid.len();
    if n > 64 {
        return Err(Error::Unsupported(format!(
            "transition matrices are limited to n <= 64 (got {n})"
        )));
    }
    let evolver = Evolver::new(grid, spec, tau)?;
    let steps = policy.steps(spec, &grid, t_from, t_to);
    let h = grid.cell_volume();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        let mut spike = vec![0.0; n];
        spike[i] = 1.0 / h;
        let row = evolver.propagate(&spike, t_from, t_to, steps)?;
        // a grid spike rings under any spectral propagator
        let density = clip_with_limit(grid, row, SPIKE_CLIP_MASS)?;
        out.row_mut(i)
            .iter_mut()
            .zip(density.values())
            .for_each(|(o, v)| *o = *v);
    }
    Ok(out)
}
