//! Path-space KL and dynamic objectives by midpoint quadrature in time.

use super::BridgeSolution;
use crate::error::{Error, Result};
use crate::fokker_planck::MarginalPath;
use crate::potential::PotentialSpec;
use crate::torus::GridDensity;

/// `t_a + (q + ½)(t_b − t_a)/n_t` for `q = 0..n_t`.
pub fn midpoint_nodes(t_a: f64, t_b: f64, n_t: usize) -> Vec<f64> {
    let w = (t_b - t_a) / n_t as f64;
    (0..n_t).map(|q| t_a + (q as f64 + 0.5) * w).collect()
}

fn check_nodes(n_t: usize) -> Result<()> {
    if n_t == 0 {
        return Err(Error::Config("quadrature needs at least one node".into()));
    }
    Ok(())
}

/// `(1/2τ) ∫ E_ρ |∇Ψ − b|²` with `b` supplied per quadrature time.
fn drift_mismatch(
    spec: &PotentialSpec,
    path: &MarginalPath,
    t_a: f64,
    t_b: f64,
    n_t: usize,
    mut drift: impl FnMut(f64) -> Result<Option<Vec<f64>>>,
) -> Result<f64> {
    check_nodes(n_t)?;
    let grid = *path.grid();
    let h = grid.cell_volume();
    let w = (t_b - t_a) / n_t as f64;
    let mut total = 0.0;
    for t in midpoint_nodes(t_a, t_b, n_t) {
        let rho = path.density_at(t)?;
        let grad = spec.grad_on(&grid, t);
        let b = drift(t)?;
        let inner: f64 = (0..grid.len())
            .map(|i| {
                let d = grad[i] - b.as_ref().map_or(0.0, |b| b[i]);
                d * d * rho.values()[i]
            })
            .sum();
        total += w * inner * h;
    }
    Ok(total / (2.0 * path.tau()))
}

/// KL of the SDE path law against the bridge on one interval.
///
/// `path` must contain the midpoint nodes of `[t_a, t_b]`.
pub fn girsanov_interval_kl(
    sol: &BridgeSolution,
    spec: &PotentialSpec,
    path: &MarginalPath,
    n_t: usize,
) -> Result<f64> {
    let p = sol.problem();
    if (path.tau() - p.tau()).abs() > 1e-15 * p.tau() {
        return Err(Error::Config("path and bridge use different temperatures".into()));
    }
    drift_mismatch(spec, path, p.t_a(), p.t_b(), n_t, |t| {
        Ok(Some(super::bridge_drift(sol, t)?.into_values()))
    })
}

/// KL of the SDE path law against reversible Brownian motion on `[t_a, t_b]`,
/// excluding the initial-law term.
pub fn kl_vs_wiener(
    spec: &PotentialSpec,
    path: &MarginalPath,
    t_a: f64,
    t_b: f64,
    n_t: usize,
) -> Result<f64> {
    if !(t_b > t_a) {
        return Err(Error::Domain(format!("need t_a < t_b, got [{t_a}, {t_b}]")));
    }
    drift_mismatch(spec, path, t_a, t_b, n_t, |_| Ok(None))
}

/// Kinetic-plus-Fisher objective in rescaled time `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenamouObjective {
    /// `½ ∫∫ |v|² μ`.
    pub kinetic: f64,
    /// `(τε)²/8 ∫∫ |∇ log μ|² μ`.
    pub fisher: f64,
}

impl BenamouObjective {
    pub fn total(&self) -> f64 {
        self.kinetic + self.fisher
    }
}

fn objective_terms(
    states: impl Iterator<Item = Result<(GridDensity, Vec<f64>, Vec<f64>)>>,
    tau: f64,
    eps: f64,
    n_t: usize,
) -> Result<BenamouObjective> {
    let mut kinetic = 0.0;
    let mut fisher = 0.0;
    let w = 1.0 / n_t as f64;
    for state in states {
        let (mu, velocity, score) = state?;
        let h = mu.grid().cell_volume();
        for ((m, v), s) in mu.values().iter().zip(&velocity).zip(&score) {
            let v = eps * v;
            kinetic += w * 0.5 * v * v * m * h;
            fisher += w * s * s * m * h;
        }
    }
    Ok(BenamouObjective {
        kinetic,
        fisher: fisher * (tau * eps).powi(2) / 8.0,
    })
}

/// Objective of the bridge marginal flow with its current velocity.
pub fn benamou_bridge(sol: &BridgeSolution, n_t: usize) -> Result<BenamouObjective> {
    check_nodes(n_t)?;
    let p = sol.problem();
    let states = midpoint_nodes(p.t_a(), p.t_b(), n_t).into_iter().map(|t| {
        let s = sol.state_at(t)?;
        Ok((s.density, s.velocity.into_values(), s.score.into_values()))
    });
    objective_terms(states, p.tau(), p.duration(), n_t)
}

/// Objective of the SDE marginals with velocity `∇Ψ − (τ/2)∇ log ρ`.
pub fn benamou_reference(
    spec: &PotentialSpec,
    path: &MarginalPath,
    t_a: f64,
    t_b: f64,
    n_t: usize,
) -> Result<BenamouObjective> {
    check_nodes(n_t)?;
    if !(t_b > t_a) {
        return Err(Error::Domain(format!("need t_a < t_b, got [{t_a}, {t_b}]")));
    }
    let grid = *path.grid();
    let tau = path.tau();
    let states = midpoint_nodes(t_a, t_b, n_t).into_iter().map(|t| {
        let rho = path.density_at(t)?.clone();
        let grad_rho = rho.as_field().gradient();
        let score: Vec<f64> = grad_rho
            .values()
            .iter()
            .zip(rho.values())
            .map(|(d, r)| d / r.max(crate::torus::LOG_FLOOR))
            .collect();
        let velocity = spec
            .grad_on(&grid, t)
            .iter()
            .zip(&score)
            .map(|(g, s)| g - 0.5 * tau * s)
            .collect();
        Ok((rho, velocity, score))
    });
    objective_terms(states, tau, t_b - t_a, n_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::{solve_bridge, BridgeProblem, SinkhornParams};
    use crate::fokker_planck::{marginal_path, StepPolicy};
    use crate::torus::make_grid;

    fn setup(spec: &PotentialSpec, t_a: f64, t_b: f64, n_t: usize) -> (MarginalPath, BridgeSolution) {
        let g = make_grid(1, 128).unwrap();
        let rho0 = GridDensity::von_mises(g, 1.0, 0.0);
        let mut times = vec![t_a];
        times.extend(midpoint_nodes(t_a, t_b, n_t));
        times.push(t_b);
        let path = marginal_path(&rho0, spec, 1.0, &times, StepPolicy::default()).unwrap();
        let p = BridgeProblem::new(
            path.density_at(t_a).unwrap().clone(),
            path.density_at(t_b).unwrap().clone(),
            t_a,
            t_b,
            1.0,
        )
        .unwrap();
        (path, solve_bridge(&p, &SinkhornParams::default()).unwrap())
    }

    #[test]
    fn zero_potential_has_zero_kl() {
        let spec = PotentialSpec::zero();
        let (path, sol) = setup(&spec, 0.0, 0.25, 16);
        let kl = girsanov_interval_kl(&sol, &spec, &path, 16).unwrap();
        assert!(kl.abs() <= 1e-10, "{kl}");
        assert_eq!(kl_vs_wiener(&spec, &path, 0.0, 0.25, 16).unwrap(), 0.0);
    }

    #[test]
    fn wiener_kl_is_additive() {
        let spec = PotentialSpec::benchmark();
        let g = make_grid(1, 64).unwrap();
        let rho0 = GridDensity::von_mises(g, 1.0, 0.0);
        let mut times = midpoint_nodes(0.0, 0.5, 32);
        times.sort_by(f64::total_cmp);
        let path = marginal_path(&rho0, &spec, 1.0, &times, StepPolicy::default()).unwrap();
        let whole = kl_vs_wiener(&spec, &path, 0.0, 0.5, 32).unwrap();
        let halves = kl_vs_wiener(&spec, &path, 0.0, 0.25, 16).unwrap()
            + kl_vs_wiener(&spec, &path, 0.25, 0.5, 16).unwrap();
        assert!((whole - halves).abs() <= 1e-12 * whole);
        assert!(whole > 0.0);
    }

    #[test]
    fn kl_grows_with_potential_strength() {
        let weak = PotentialSpec::benchmark().scaled(0.5);
        let strong = PotentialSpec::benchmark();
        let (pw, sw) = setup(&weak, 0.0, 0.25, 16);
        let (ps, ss) = setup(&strong, 0.0, 0.25, 16);
        let kw = girsanov_interval_kl(&sw, &weak, &pw, 16).unwrap();
        let ks = girsanov_interval_kl(&ss, &strong, &ps, 16).unwrap();
        assert!(kw > 0.0 && ks > kw, "{kw} {ks}");
        // the bridge carries most of the potential
        assert!(ks < kl_vs_wiener(&strong, &ps, 0.0, 0.25, 16).unwrap());
    }

    #[test]
    fn bridge_objective_does_not_exceed_reference() {
        let spec = PotentialSpec::benchmark();
        let (path, sol) = setup(&spec, 0.0, 0.25, 16);
        let bridge = benamou_bridge(&sol, 16).unwrap();
        let reference = benamou_reference(&spec, &path, 0.0, 0.25, 16).unwrap();
        assert!(bridge.total() <= reference.total() + 1e-8);
        assert!(bridge.kinetic >= 0.0 && bridge.fisher >= 0.0);
    }

    #[test]
    fn missing_quadrature_time_is_reported() {
        let spec = PotentialSpec::benchmark();
        let (path, sol) = setup(&spec, 0.0, 0.25, 8);
        assert!(matches!(
            girsanov_interval_kl(&sol, &spec, &path, 16),
            Err(Error::MissingTime(_))
        ));
    }
}
