//! The multi-marginal bridge as a chain of interval bridges.
//!
//! The reference process is Markov, so the bridge through `ρ_{t_0}, …, ρ_{t_m}`
//! factorizes into independent two-marginal bridges on `[t_{j−1}, t_j]` and
//! the path KL splits into the sum of interval KLs. Nothing joint over all
//! time slices is ever built.

use rayon::prelude::*;
use serde::Serialize;

use crate::bridge::{
    girsanov_interval_kl, midpoint_nodes, solve_bridge, BridgeProblem, BridgeSolution, SinkhornParams,
};
use crate::error::{Error, Result};
use crate::fokker_planck::{marginal_path, transition_matrix, MarginalPath, StepPolicy};
use crate::potential::PotentialSpec;
use crate::torus::{kl_coupling, Coupling, GridDensity};

/// Strictly increasing times `0 = t_0 < … < t_m = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Config("a time grid needs at least two times".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::Config(format!(
                "time grid must start at 0, got {}",
                times[0]
            )));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "time grid must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self { times })
    }

    /// `m` equal intervals on `[0, T]`.
    pub fn uniform(horizon: f64, m: usize) -> Result<Self> {
        if m == 0 || !(horizon > 0.0) {
            return Err(Error::Config(format!(
                "need m >= 1 and T > 0, got m = {m}, T = {horizon}"
            )));
        }
        let mut times: Vec<f64> = (0..=m).map(|j| horizon * j as f64 / m as f64).collect();
        times[m] = horizon;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of intervals.
    pub fn m(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.m()]
    }

    /// Largest gap `Δ_m`.
    pub fn delta(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.windows(2).map(|w| (w[0], w[1]))
    }

    /// Insert the midpoint of the (first) largest interval.
    pub fn refine_largest(&self) -> Self {
        let delta = self.delta();
        let j = self
            .times
            .windows(2)
            .position(|w| w[1] - w[0] == delta)
            .expect("grid has an interval");
        let mut times = self.times.clone();
        times.insert(j + 1, 0.5 * (times[j] + times[j + 1]));
        Self { times }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsbParams {
    pub sinkhorn: SinkhornParams,
    /// Midpoint nodes per interval for the Girsanov quadrature.
    pub n_t: usize,
    pub step_policy: StepPolicy,
}

impl Default for MsbParams {
    fn default() -> Self {
        Self {
            sinkhorn: SinkhornParams::default(),
            n_t: 32,
            step_policy: StepPolicy::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MsbSolution {
    time_grid: TimeGrid,
    spec: PotentialSpec,
    n_t: usize,
    bridges: Vec<BridgeSolution>,
    marginal_path: MarginalPath,
    per_interval_kl: Vec<f64>,
    total_kl: f64,
}

/// Times at which the chain needs `ρ_t`: grid times and every quadrature node.
fn query_times(grid: &TimeGrid, n_t: usize) -> Vec<f64> {
    let mut times = Vec::with_capacity(grid.m() * (n_t + 1) + 1);
    times.push(0.0);
    for (a, b) in grid.intervals() {
        times.extend(midpoint_nodes(a, b, n_t));
        times.push(b);
    }
    times
}

/// Solve every interval bridge (in parallel) and the per-interval KLs.
pub fn solve_msb(
    spec: &PotentialSpec,
    rho0: &GridDensity,
    tau: f64,
    time_grid: &TimeGrid,
    params: &MsbParams,
) -> Result<MsbSolution> {
    if params.n_t == 0 {
        return Err(Error::Config("quadrature needs at least one node".into()));
    }
    let path = marginal_path(
        rho0,
        spec,
        tau,
        &query_times(time_grid, params.n_t),
        params.step_policy,
    )?;
    let intervals: Vec<(f64, f64)> = time_grid.intervals().collect();

    // validate every interval before solving any of them
    let problems = intervals
        .iter()
        .enumerate()
        .map(|(index, &(a, b))| {
            BridgeProblem::new(
                path.density_at(a)?.clone(),
                path.density_at(b)?.clone(),
                a,
                b,
                tau,
            )
            .map_err(|e| Error::Interval {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let solved = problems
        .par_iter()
        .enumerate()
        .map(|(index, problem)| {
            let run = || -> Result<(BridgeSolution, f64)> {
                let sol = solve_bridge(problem, &params.sinkhorn)?;
                let kl = girsanov_interval_kl(&sol, spec, &path, params.n_t)?;
                Ok((sol, kl))
            };
            run().map_err(|e| Error::Interval {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Vec<_>>();
    let mut bridges = Vec::with_capacity(solved.len());
    let mut per_interval_kl = Vec::with_capacity(solved.len());
    for item in solved {
        let (sol, kl) = item?;
        log::debug!(
            "bridge [{:.4}, {:.4}]: {} sweeps, KL {kl:.6e}",
            sol.problem().t_a(),
            sol.problem().t_b(),
            sol.iterations()
        );
        bridges.push(sol);
        per_interval_kl.push(kl);
    }
    let total_kl = per_interval_kl.iter().sum();
    Ok(MsbSolution {
        time_grid: time_grid.clone(),
        spec: spec.clone(),
        n_t: params.n_t,
        bridges,
        marginal_path: path,
        per_interval_kl,
        total_kl,
    })
}

impl MsbSolution {
    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn bridges(&self) -> &[BridgeSolution] {
        &self.bridges
    }

    pub fn marginal_path(&self) -> &MarginalPath {
        &self.marginal_path
    }

    pub fn per_interval_kl(&self) -> &[f64] {
        &self.per_interval_kl
    }

    pub fn total_kl(&self) -> f64 {
        self.total_kl
    }

    /// Overwrite the duals of bridge `index` and recompute its KL. Used to
    /// inject faults when exercising the bound check.
    pub fn replace_bridge_duals(&self, index: usize, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        let bridge = self.bridges.get(index).ok_or_else(|| {
            Error::Config(format!(
                "no interval {index} in a chain of {}",
                self.bridges.len()
            ))
        })?;
        let mut out = self.clone();
        out.bridges[index] = bridge.with_log_duals(f, g)?;
        out.per_interval_kl[index] =
            girsanov_interval_kl(&out.bridges[index], &self.spec, &self.marginal_path, self.n_t)?;
        out.total_kl = out.per_interval_kl.iter().sum();
        Ok(out)
    }

    pub fn summary(&self, c1: f64, c2: f64) -> MsbSummary {
        let delta = self.time_grid.delta();
        MsbSummary {
            m: self.time_grid.m(),
            delta_m: delta,
            per_interval_kl: self.per_interval_kl.clone(),
            total_kl: self.total_kl,
            bound: theoretical_bound(c1, c2, self.time_grid.horizon(), delta),
            c1,
            c2,
            sinkhorn_iterations: self.bridges.iter().map(|b| b.iterations()).collect(),
            marginal_residuals: self.bridges.iter().map(|b| b.marginal_residual()).collect(),
        }
    }
}

/// JSON-ready record of one chain solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsbSummary {
    pub m: usize,
    pub delta_m: f64,
    pub per_interval_kl: Vec<f64>,
    pub total_kl: f64,
    pub bound: f64,
    pub c1: f64,
    pub c2: f64,
    pub sinkhorn_iterations: Vec<usize>,
    pub marginal_residuals: Vec<f64>,
}

fn bound_factor(c1: f64, c2: f64) -> f64 {
    1.5 * c1 + (2.5 * c1).sqrt() * c2
}

/// `T · Δ_m · (3C₁/2 + √(5C₁/2) · C₂)`.
pub fn theoretical_bound(c1: f64, c2: f64, horizon: f64, delta_m: f64) -> f64 {
    horizon * delta_m * bound_factor(c1, c2)
}

/// `(3C₁/2 + √(5C₁/2) · C₂) · ε²`, the bound for one interval of length `ε`.
pub fn interval_bound(c1: f64, c2: f64, eps: f64) -> f64 {
    bound_factor(c1, c2) * eps * eps
}

/// Per interval, the KL between the two-time marginal of the SDE and the
/// bridge coupling. Data processing makes each entry a lower bound of the
/// interval's path KL. Needs dense transition matrices, so `n ≤ 64`.
pub fn pairwise_kl_diagnostic(msb: &MsbSolution, policy: StepPolicy) -> Result<Vec<f64>> {
    let path = &msb.marginal_path;
    let grid = *path.grid();
    if grid.len() > 64 {
        return Err(Error::Unsupported(format!(
            "pairwise diagnostic needs n <= 64 (got {}); use the Girsanov interval KL instead",
            grid.len()
        )));
    }
    msb.bridges
        .iter()
        .enumerate()
        .map(|(index, bridge)| {
            let run = || -> Result<f64> {
                let p = bridge.problem();
                let q = transition_matrix(grid, &msb.spec, path.tau(), p.t_a(), p.t_b(), policy)?;
                let rho = path.density_at(p.t_a())?;
                let joint = ndarray::Array2::from_shape_fn(q.dim(), |(i, j)| rho.values()[i] * q[[i, j]]);
                let h = grid.cell_volume();
                let sde = Coupling::new(joint, h * h)?;
                kl_coupling(&sde, &bridge.coupling()?)
            };
            run().map_err(|e| Error::Interval {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::make_grid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn time_grid_validation() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        assert_eq!(g.m(), 4);
        assert_eq!(g.delta(), 0.25);
        assert_eq!(g.times()[4], 1.0);
        assert!(TimeGrid::new(vec![0.1, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.0]).is_err());
        assert!(TimeGrid::uniform(1.0, 0).is_err());
        let r = TimeGrid::new(vec![0.0, 0.2, 1.0]).unwrap().refine_largest();
        assert_eq!(r.times(), &[0.0, 0.2, 0.6, 1.0]);
    }

    #[test]
    fn bound_arithmetic() {
        assert_abs_diff_eq!(
            theoretical_bound(2.0, 1.0, 1.0, 0.1),
            0.1 * (3.0 + 5f64.sqrt()),
            epsilon = 1e-15
        );
        assert_eq!(theoretical_bound(0.0, 7.0, 1.0, 0.5), 0.0);
        assert_eq!(
            theoretical_bound(1.3, 0.7, 2.0, 0.05),
            2.0 * theoretical_bound(1.3, 0.7, 2.0, 0.025)
        );
        assert_abs_diff_eq!(
            interval_bound(2.0, 1.0, 0.5),
            0.25 * (3.0 + 5f64.sqrt()),
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_potential_chain_has_zero_kl() {
        let g = make_grid(1, 64).unwrap();
        let rho0 = GridDensity::von_mises(g, 1.0, 0.0);
        let sol = solve_msb(
            &PotentialSpec::zero(),
            &rho0,
            1.0,
            &TimeGrid::uniform(1.0, 4).unwrap(),
            &MsbParams {
                n_t: 8,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(sol.total_kl() <= 1e-6);
        let diag = pairwise_kl_diagnostic(&sol, StepPolicy::default()).unwrap();
        assert!(diag.iter().all(|d| d.abs() <= 1e-7), "{diag:?}");
    }

    #[test]
    fn single_interval_chain_is_one_bridge() {
        let g = make_grid(1, 64).unwrap();
        let spec = PotentialSpec::benchmark();
        let rho0 = GridDensity::von_mises(g, 1.0, 0.0);
        let params = MsbParams {
            n_t: 8,
            ..Default::default()
        };
        let sol = solve_msb(&spec, &rho0, 1.0, &TimeGrid::uniform(0.5, 1).unwrap(), &params).unwrap();
        let direct = girsanov_interval_kl(&sol.bridges()[0], &spec, sol.marginal_path(), 8).unwrap();
        assert_eq!(sol.total_kl(), direct);
        assert_eq!(sol.per_interval_kl().len(), 1);
    }

    #[test]
    fn additivity_and_endpoint_marginals() {
        let g = make_grid(1, 64).unwrap();
        let spec = PotentialSpec::benchmark();
        let rho0 = GridDensity::von_mises(g, 1.0, 0.0);
        let params = MsbParams {
            n_t: 8,
            ..Default::default()
        };
        let sol = solve_msb(&spec, &rho0, 1.0, &TimeGrid::uniform(1.0, 4).unwrap(), &params).unwrap();
        let sum: f64 = sol.per_interval_kl().iter().sum();
        assert!((sol.total_kl() - sum).abs() <= 1e-12);
        let h = g.spacing();
        for b in sol.bridges() {
            let (rows, cols) = b.coupling_marginals();
            let rho_a = sol.marginal_path().density_at(b.problem().t_a()).unwrap();
            let rho_b = sol.marginal_path().density_at(b.problem().t_b()).unwrap();
            let ea: f64 = rows
                .iter()
                .zip(rho_a.values())
                .map(|(r, v)| (r - v * h).abs())
                .sum();
            let eb: f64 = cols
                .iter()
                .zip(rho_b.values())
                .map(|(c, v)| (c - v * h).abs())
                .sum();
            assert!(ea <= 1e-10 && eb <= 1e-10);
        }
        let summary = sol.summary(1.0, 1.0);
        assert_eq!(summary.m, 4);
        assert_eq!(summary.per_interval_kl.len(), 4);
    }

    #[test]
    fn unresolved_interval_reports_its_index() {
        let g = make_grid(1, 256).unwrap();
        let rho0 = GridDensity::uniform(g);
        let grid = TimeGrid::new(vec![0.0, 0.5, 0.5005, 1.0]).unwrap();
        let err = solve_msb(&PotentialSpec::zero(), &rho0, 1.0, &grid, &MsbParams::default()).unwrap_err();
        assert!(matches!(err, Error::Interval { index: 1, .. }), "{err}");
    }

    #[test]
    fn corrupted_duals_inflate_the_interval_kl() {
        let g = make_grid(1, 64).unwrap();
        let spec = PotentialSpec::benchmark();
        let rho0 = GridDensity::von_mises(g, 1.0, 0.0);
        let params = MsbParams {
            n_t: 8,
            ..Default::default()
        };
        let sol = solve_msb(&spec, &rho0, 1.0, &TimeGrid::uniform(1.0, 2).unwrap(), &params).unwrap();
        let b = &sol.bridges()[1];
        let g_bad: Vec<f64> = g.nodes().iter().map(|x| 3.0 * (2.0 * x).sin()).collect();
        let bad = sol
            .replace_bridge_duals(1, b.log_dual_a().to_vec(), g_bad)
            .unwrap();
        assert!(bad.per_interval_kl()[1] > 10.0 * sol.per_interval_kl()[1]);
        assert_eq!(bad.per_interval_kl()[0], sol.per_interval_kl()[0]);
        assert!(sol.replace_bridge_duals(5, vec![], vec![]).is_err());
    }

    #[test]
    fn diagnostic_refuses_large_grids() {
        let g = make_grid(1, 128).unwrap();
        let rho0 = GridDensity::uniform(g);
        let sol = solve_msb(
            &PotentialSpec::zero(),
            &rho0,
            1.0,
            &TimeGrid::uniform(1.0, 1).unwrap(),
            &MsbParams {
                n_t: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(
            pairwise_kl_diagnostic(&sol, StepPolicy::default()),
            Err(Error::Unsupported(_))
        ));
    }
}
