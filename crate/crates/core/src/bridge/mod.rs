//! Two-marginal Schrödinger bridge on one time interval.
//!
//! The static problem is entropic optimal transport against the Gibbs kernel
//! `K_ij = p^τ_{Δt}(x_i, x_j) · spacing`, solved by alternating log-domain
//! Sinkhorn updates
//!
//! ```text
//! f ← log(ρ_a h) − LSE_j(g_j + log K_ij)
//! g ← log(ρ_b h) − LSE_i(f_i + log K_ij)
//! ```
//!
//! so that the coupling is `π_ij = exp(f_i + g_j) K_ij`. The log-sum-exp is
//! evaluated as a kernel product against `exp(v − max v)`, falling back to an
//! explicit per-row LSE when that product underflows.
//!
//! Dynamic quantities live in [`dynamics`], KL and objective estimators in
//! [`estimators`].

pub mod dynamics;
pub mod estimators;

use std::io::Write;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::torus::{same_grid, Coupling, GridDensity, HeatKernelMatrix, Spectral, TorusGrid};

pub use dynamics::{bridge_drift, current_velocity, entropic_interpolation, BridgeState};
pub use estimators::{
    benamou_bridge, benamou_reference, girsanov_interval_kl, kl_vs_wiener, midpoint_nodes, BenamouObjective,
};

/// Endpoint marginals and time window of one bridge.
#[derive(Debug, Clone)]
pub struct BridgeProblem {
    rho_a: GridDensity,
    rho_b: GridDensity,
    t_a: f64,
    t_b: f64,
    tau: f64,
}

impl BridgeProblem {
    /// Requires `√(τ Δt) ≥ 2 · spacing`.
    pub fn new(rho_a: GridDensity, rho_b: GridDensity, t_a: f64, t_b: f64, tau: f64) -> Result<Self> {
        let p = Self::new_unguarded(rho_a, rho_b, t_a, t_b, tau)?;
        let width = (tau * (t_b - t_a)).sqrt();
        let spacing = p.rho_a.grid().spacing();
        if width < 2.0 * spacing {
            return Err(Error::Resolution(format!(
                "bridge over Δt = {} has kernel width {width:.4e} < 2·spacing = {:.4e}",
                t_b - t_a,
                2.0 * spacing
            )));
        }
        Ok(p)
    }

    /// Skips the kernel resolution guard (coarse toy problems).
    pub fn new_unguarded(
        rho_a: GridDensity,
        rho_b: GridDensity,
        t_a: f64,
        t_b: f64,
        tau: f64,
    ) -> Result<Self> {
        same_grid(rho_a.grid(), rho_b.grid())?;
        if !(t_b > t_a) {
            return Err(Error::Domain(format!("need t_a < t_b, got [{t_a}, {t_b}]")));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("temperature must be > 0, got {tau}")));
        }
        Ok(Self {
            rho_a,
            rho_b,
            t_a,
            t_b,
            tau,
        })
    }

    pub fn grid(&self) -> TorusGrid {
        *self.rho_a.grid()
    }

    pub fn rho_a(&self) -> &GridDensity {
        &self.rho_a
    }

    pub fn rho_b(&self) -> &GridDensity {
        &self.rho_b
    }

    pub fn t_a(&self) -> f64 {
        self.t_a
    }

    pub fn t_b(&self) -> f64 {
        self.t_b
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn duration(&self) -> f64 {
        self.t_b - self.t_a
    }

    /// The same problem with the marginals swapped.
    pub fn transposed(&self) -> Self {
        Self {
            rho_a: self.rho_b.clone(),
            rho_b: self.rho_a.clone(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornParams {
    /// Stop once the L1 row-marginal error is at most this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

/// Converged duals of one bridge, gauge-fixed so that `Σ f_i = 0`.
#[derive(Debug, Clone)]
pub struct BridgeSolution {
    problem: BridgeProblem,
    kernel: HeatKernelMatrix,
    log_dual_a: Vec<f64>,
    log_dual_b: Vec<f64>,
    marginal_residual: f64,
    iterations: usize,
    residual_history: Vec<f64>,
    spectral: Spectral,
    /// DFT of `exp(f − max f)` and `exp(g − max g)`.
    fwd_coeffs: Vec<Complex64>,
    bwd_coeffs: Vec<Complex64>,
}

/// `out_i = log Σ_j K_ij exp(v_j)` for a symmetric kernel.
fn log_kernel_apply(kernel: ArrayView2<f64>, v: &[f64]) -> Vec<f64> {
    let vmax = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !vmax.is_finite() {
        return vec![f64::NEG_INFINITY; v.len()];
    }
    let w: Vec<f64> = v.iter().map(|x| (x - vmax).exp()).collect();
    kernel
        .rows()
        .into_iter()
        .map(|row| {
            let s: f64 = row.iter().zip(&w).map(|(k, w)| k * w).sum();
            if s > 1e-280 && s.is_finite() {
                s.ln() + vmax
            } else {
                exact_lse(row.iter().zip(v).map(|(k, x)| k.ln() + x))
            }
        })
        .collect()
}

fn exact_lse(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn shifted_exp_coeffs(spectral: &Spectral, v: &[f64]) -> Vec<Complex64> {
    let vmax = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = v.iter().map(|x| (x - vmax).exp()).collect();
    spectral.forward(&w)
}

/// Solve the static bridge by log-domain Sinkhorn starting from `f = g = 0`.
pub fn solve_bridge(problem: &BridgeProblem, params: &SinkhornParams) -> Result<BridgeSolution> {
    if !(params.tol > 0.0) || params.max_iter == 0 {
        return Err(Error::Config(format!("invalid Sinkhorn parameters {params:?}")));
    }
    let grid = problem.grid();
    let n = grid.len();
    let h = grid.cell_volume();
    let kernel = HeatKernelMatrix::new_unchecked(grid, problem.duration(), problem.tau)?;
    let gibbs: Array2<f64> = kernel.entries() * h;

    let a: Vec<f64> = problem.rho_a.values().iter().map(|v| v * h).collect();
    let log_a: Vec<f64> = a.iter().map(|v| v.ln()).collect();
    let log_b: Vec<f64> = problem.rho_b.values().iter().map(|v| (v * h).ln()).collect();

    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut history = Vec::new();
    let mut residual;
    let mut sweeps = 0;
    loop {
        let r = log_kernel_apply(gibbs.view(), &g);
        residual = f
            .iter()
            .zip(&r)
            .zip(&a)
            .map(|((fi, ri), ai)| ((fi + ri).exp() - ai).abs())
            .sum();
        if sweeps % 10 == 0 {
            history.push(residual);
        }
        if residual <= params.tol || sweeps == params.max_iter {
            break;
        }
        for i in 0..n {
            f[i] = log_a[i] - r[i];
        }
        // K is symmetric, so rows double as columns
        let c = log_kernel_apply(gibbs.view(), &f);
        for j in 0..n {
            g[j] = log_b[j] - c[j];
        }
        sweeps += 1;
    }
    if !(residual <= params.tol) {
        return Err(Error::NotConverged {
            iterations: sweeps,
            residual,
        });
    }
    if history.last() != Some(&residual) {
        history.push(residual);
    }

    let finite: Vec<f64> = f.iter().cloned().filter(|v| v.is_finite()).collect();
    let shift = finite.iter().sum::<f64>() / finite.len().max(1) as f64;
    f.iter_mut().for_each(|v| *v -= shift);
    g.iter_mut().for_each(|v| *v += shift);

    let spectral = Spectral::new(grid.points_per_axis());
    Ok(BridgeSolution {
        fwd_coeffs: shifted_exp_coeffs(&spectral, &f),
        bwd_coeffs: shifted_exp_coeffs(&spectral, &g),
        spectral,
        problem: problem.clone(),
        kernel,
        log_dual_a: f,
        log_dual_b: g,
        marginal_residual: residual,
        iterations: sweeps,
        residual_history: history,
    })
}

impl BridgeSolution {
    pub fn problem(&self) -> &BridgeProblem {
        &self.problem
    }

    pub fn kernel(&self) -> &HeatKernelMatrix {
        &self.kernel
    }

    pub fn log_dual_a(&self) -> &[f64] {
        &self.log_dual_a
    }

    pub fn log_dual_b(&self) -> &[f64] {
        &self.log_dual_b
    }

    pub fn marginal_residual(&self) -> f64 {
        self.marginal_residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// L1 row residual sampled every 10 sweeps, plus the final value.
    pub fn residual_history(&self) -> &[f64] {
        &self.residual_history
    }

    /// Replace the duals (no re-solve). The recorded residual is recomputed.
    pub fn with_log_duals(&self, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        let n = self.log_dual_a.len();
        if f.len() != n || g.len() != n {
            return Err(Error::GridMismatch(format!("duals must have {n} entries")));
        }
        let mut out = self.clone();
        out.fwd_coeffs = shifted_exp_coeffs(&self.spectral, &f);
        out.bwd_coeffs = shifted_exp_coeffs(&self.spectral, &g);
        out.log_dual_a = f;
        out.log_dual_b = g;
        let (rows, _) = out.coupling_marginals();
        let h = self.problem.grid().cell_volume();
        out.marginal_residual = rows
            .iter()
            .zip(self.problem.rho_a.values())
            .map(|(r, a)| (r - a * h).abs())
            .sum();
        Ok(out)
    }

    /// Coupling masses `π_ij = exp(f_i + g_j) K_ij`.
    pub fn coupling_masses(&self) -> Array2<f64> {
        let h = self.problem.grid().cell_volume();
        let k = self.kernel.entries();
        Array2::from_shape_fn(k.dim(), |(i, j)| {
            (self.log_dual_a[i] + self.log_dual_b[j]).exp() * k[[i, j]] * h
        })
    }

    /// Coupling as a density on the product grid (weight `spacing²`).
    pub fn coupling(&self) -> Result<Coupling> {
        let h = self.problem.grid().cell_volume();
        Coupling::new(self.coupling_masses() / (h * h), h * h)
    }

    /// Row and column sums of the coupling masses.
    pub fn coupling_marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let pi = self.coupling_masses();
        (
            pi.rows().into_iter().map(|r| r.sum()).collect(),
            pi.columns().into_iter().map(|c| c.sum()).collect(),
        )
    }

    pub(crate) fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub(crate) fn fwd_coeffs(&self) -> &[Complex64] {
        &self.fwd_coeffs
    }

    pub(crate) fn bwd_coeffs(&self) -> &[Complex64] {
        &self.bwd_coeffs
    }

    /// Plain-text dump: header, then one `index x f g` line per node.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        let p = &self.problem;
        writeln!(
            w,
            "# schrodinger bridge on [{}, {}], tau = {}",
            p.t_a, p.t_b, p.tau
        )?;
        writeln!(w, "# nodes = {}", p.grid().len())?;
        writeln!(w, "# iterations = {}", self.iterations)?;
        writeln!(w, "# marginal_residual = {:e}", self.marginal_residual)?;
        writeln!(w, "# index x log_dual_a log_dual_b")?;
        for (i, (f, g)) in self.log_dual_a.iter().zip(&self.log_dual_b).enumerate() {
            writeln!(w, "{i} {} {f:e} {g:e}", p.grid().node(i))?;
        }
        Ok(())
    }

    /// Coupling matrix as CSV (`i,j,x_i,x_j,mass`); refused above 64 nodes.
    pub fn write_coupling_csv<W: Write>(&self, writer: W) -> Result<()> {
        let grid = self.problem.grid();
        if grid.len() > 64 {
            return Err(Error::Unsupported(format!(
                "coupling export is limited to n <= 64 (got {})",
                grid.len()
            )));
        }
        let pi = self.coupling_masses();
        let mut w = crate::fokker_planck::csv_writer(writer);
        w.write_record(["i", "j", "x_i", "x_j", "mass"])?;
        for ((i, j), m) in pi.indexed_iter() {
            w.write_record([
                i.to_string(),
                j.to_string(),
                grid.node(i).to_string(),
                grid.node(j).to_string(),
                m.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
