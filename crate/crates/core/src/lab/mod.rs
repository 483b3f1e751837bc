//! Experiment driver: configuration, sweeps over `m` and `ε`, the bound
//! check, log–log rate fits and report files.

pub mod commands;
pub mod config;
pub mod report;

use std::time::Instant;

use rayon::prelude::*;

use crate::bridge::{girsanov_interval_kl, midpoint_nodes, solve_bridge, BridgeProblem};
use crate::error::{Error, Result};
use crate::fokker_planck::marginal_path;
use crate::msb::{interval_bound, solve_msb, theoretical_bound, MsbSolution, TimeGrid};
use crate::potential::{constant_c1, constant_c2, sample_times};

pub use commands::{default_config, run_command, Command, CommandOutcome};
pub use config::{
    BridgeConfig, ExperimentConfig, InitialDensity, OutputConfig, SimulateConfig, SinkhornConfig,
    SweepConfig, SweepKind,
};
pub use report::{emit_report, fit_loglog, Check, LogLogFit, RateReport, ReportPaths, Status};

/// Accepted slope range of KL against `m`.
pub const M_SLOPE_WINDOW: [f64; 2] = [-2.2, -0.9];
/// Accepted slope range of KL against `ε`.
pub const EPS_SLOPE_WINDOW: [f64; 2] = [1.8, 2.6];
/// Slopes are judged only when the fit is at least this good.
pub const MIN_R_SQUARED: f64 = 0.95;
/// Largest KL accepted when the potential vanishes.
pub const ZERO_KL_TOL: f64 = 1e-6;
/// Smallest accepted `bound − kl`.
pub const MARGIN_TOL: f64 = -1e-9;
/// Slack when checking that KL does not grow under refinement.
pub const MONOTONE_SLACK: f64 = 1e-6;
/// Time samples used for the bound constants.
pub const BOUND_TIME_SAMPLES: usize = 64;

/// `(C₁, C₂)` on `[0, T]` for the configured potential and `ρ₀` (needs `τ = 1`).
pub fn bound_constants(config: &ExperimentConfig) -> Result<(f64, f64)> {
    let grid = config.grid()?;
    let c1 = constant_c1(&config.potential, &grid, config.horizon, BOUND_TIME_SAMPLES)?;
    let path = marginal_path(
        &config.initial_density()?,
        &config.potential,
        config.tau,
        &sample_times(config.horizon, BOUND_TIME_SAMPLES),
        config.step_policy(),
    )?;
    let c2 = constant_c2(&config.potential, &path)?;
    Ok((c1, c2))
}

fn constants_if_unit(config: &ExperimentConfig) -> Result<Option<(f64, f64)>> {
    if config.tau == 1.0 {
        bound_constants(config).map(Some)
    } else {
        Ok(None)
    }
}

fn annotate<T>(abscissa: f64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::SweepPoint {
        abscissa,
        source: Box::new(e),
    })
}

fn chain(config: &ExperimentConfig, m: usize) -> Result<MsbSolution> {
    solve_msb(
        &config.potential,
        &config.initial_density()?,
        config.tau,
        &TimeGrid::uniform(config.horizon, m)?,
        &config.msb_params(),
    )
}

fn slope_check(fit: &LogLogFit, window: [f64; 2], zero_drift: bool) -> Check {
    let name = "slope";
    if zero_drift {
        return Check::new(name, Status::Inconclusive, true, "degenerate: zero KL");
    }
    if fit.degenerate {
        return Check::new(
            name,
            Status::Inconclusive,
            true,
            "degenerate: fewer than two positive points",
        );
    }
    let detail = format!(
        "slope {:.4} (r² {:.4}), window [{}, {}]",
        fit.slope, fit.r_squared, window[0], window[1]
    );
    if fit.r_squared < MIN_R_SQUARED {
        return Check::new(name, Status::Inconclusive, true, detail);
    }
    let ok = fit.slope >= window[0] && fit.slope <= window[1];
    Check::from_bool(name, ok, true, detail)
}

fn common_checks(kl: &[f64], zero_drift: bool) -> Vec<Check> {
    let mut checks = vec![Check::from_bool(
        "nonnegative",
        kl.iter().all(|k| *k >= 0.0 && k.is_finite()),
        true,
        "every KL is finite and >= 0",
    )];
    if zero_drift {
        let worst = kl.iter().cloned().fold(0.0, f64::max);
        checks.push(Check::from_bool(
            "zero_drift",
            worst <= ZERO_KL_TOL,
            true,
            format!("max KL {worst:.3e} with Ψ = 0"),
        ));
    }
    checks
}

fn margin_check(
    name: &str,
    abscissae: &[f64],
    kl: &[f64],
    bounds: &[Option<f64>],
    tol: f64,
) -> Option<Check> {
    if bounds.iter().any(|b| b.is_none()) {
        return None;
    }
    let bad: Vec<String> = abscissae
        .iter()
        .zip(kl)
        .zip(bounds)
        .filter(|((_, k), b)| b.unwrap() - **k < tol)
        .map(|((x, k), b)| format!("{x}: kl {k:.4e} > bound {:.4e}", b.unwrap()))
        .collect();
    let detail = if bad.is_empty() {
        "kl <= bound at every point".to_string()
    } else {
        bad.join("; ")
    };
    Some(Check::from_bool(name, bad.is_empty(), true, detail))
}

fn sweep_values(config: &ExperimentConfig, kind: SweepKind) -> Result<(Vec<f64>, Option<[f64; 2]>)> {
    let sweep = config.validate_sweep(kind)?;
    let window = sweep.fit_window.or(match kind {
        SweepKind::EpsSweep => None,
        _ => Some([1.5, f64::INFINITY]),
    });
    Ok((sweep.values.clone(), window))
}

/// Total KL of the uniform chain for every `m` in the sweep.
pub fn run_m_sweep(config: &ExperimentConfig) -> Result<RateReport> {
    let start = Instant::now();
    let (values, window) = sweep_values(config, SweepKind::MSweep)?;
    let constants = constants_if_unit(config)?;
    let chains = values
        .par_iter()
        .map(|&m| annotate(m, chain(config, m as usize)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let kl: Vec<f64> = chains.iter().map(|c| c.total_kl()).collect();
    let bounds: Vec<Option<f64>> = values
        .iter()
        .map(|&m| constants.map(|(c1, c2)| theoretical_bound(c1, c2, config.horizon, config.horizon / m)))
        .collect();
    let zero_drift = config.potential.is_zero();
    let fit = fit_loglog(&values, &kl, window);

    let mut checks = common_checks(&kl, zero_drift);
    checks.push(slope_check(&fit, M_SLOPE_WINDOW, zero_drift));
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let rises: Vec<String> = order
        .windows(2)
        .filter(|w| kl[w[1]] > kl[w[0]] + MONOTONE_SLACK)
        .map(|w| format!("m {} -> {}", values[w[0]], values[w[1]]))
        .collect();
    checks.push(Check::from_bool(
        "monotone",
        rises.is_empty(),
        false,
        if rises.is_empty() {
            "KL nonincreasing in m".into()
        } else {
            rises.join("; ")
        },
    ));
    checks.extend(margin_check("bound", &values, &kl, &bounds, MARGIN_TOL));

    Ok(RateReport {
        kind: "m_sweep".into(),
        abscissae: values,
        kl_values: kl,
        bounds,
        per_interval_kl: chains.iter().map(|c| c.per_interval_kl().to_vec()).collect(),
        c1: constants.map(|c| c.0),
        c2: constants.map(|c| c.1),
        fit,
        checks,
        runtime_seconds: start.elapsed().as_secs_f64(),
        config: config.clone(),
    })
}

/// KL of the single bridge on `[0, ε]` for every `ε` in the sweep.
pub fn run_eps_sweep(config: &ExperimentConfig) -> Result<RateReport> {
    let start = Instant::now();
    let (values, window) = sweep_values(config, SweepKind::EpsSweep)?;
    let constants = constants_if_unit(config)?;
    let rho0 = config.initial_density()?;
    let n_t = config.quadrature_nodes;
    let kl = values
        .par_iter()
        .map(|&eps| {
            annotate(eps, {
                let mut times = midpoint_nodes(0.0, eps, n_t);
                times.push(eps);
                marginal_path(&rho0, &config.potential, config.tau, &times, config.step_policy()).and_then(
                    |path| {
                        let problem = BridgeProblem::new(
                            rho0.clone(),
                            path.density_at(eps)?.clone(),
                            0.0,
                            eps,
                            config.tau,
                        )?;
                        let sol = solve_bridge(&problem, &config.sinkhorn_params())?;
                        girsanov_interval_kl(&sol, &config.potential, &path, n_t)
                    },
                )
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let bounds: Vec<Option<f64>> = values
        .iter()
        .map(|&eps| constants.map(|(c1, c2)| interval_bound(c1, c2, eps)))
        .collect();
    let zero_drift = config.potential.is_zero();
    let fit = fit_loglog(&values, &kl, window);
    let mut checks = common_checks(&kl, zero_drift);
    checks.push(slope_check(&fit, EPS_SLOPE_WINDOW, zero_drift));
    checks.extend(margin_check("bound", &values, &kl, &bounds, MARGIN_TOL));
    Ok(RateReport {
        kind: "eps_sweep".into(),
        abscissae: values,
        kl_values: kl,
        bounds,
        per_interval_kl: Vec::new(),
        c1: constants.map(|c| c.0),
        c2: constants.map(|c| c.1),
        fit,
        checks,
        runtime_seconds: start.elapsed().as_secs_f64(),
        config: config.clone(),
    })
}

/// Check `total_kl ≤ bound` for every `m`, and each interval against its own
/// bound so that a failure names the offending interval.
pub fn run_bound_check(config: &ExperimentConfig) -> Result<RateReport> {
    run_bound_check_with(config, |_, sol| Ok(sol))
}

/// [`run_bound_check`] with a hook applied to every chain before checking
/// (fault injection in tests).
pub fn run_bound_check_with<F>(config: &ExperimentConfig, hook: F) -> Result<RateReport>
where
    F: Fn(usize, MsbSolution) -> Result<MsbSolution> + Sync,
{
    let start = Instant::now();
    let (values, window) = sweep_values(config, SweepKind::BoundCheck)?;
    let (c1, c2) = bound_constants(config)?;
    let chains = values
        .par_iter()
        .map(|&m| annotate(m, chain(config, m as usize).and_then(|c| hook(m as usize, c))))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let kl: Vec<f64> = chains.iter().map(|c| c.total_kl()).collect();
    let bounds: Vec<Option<f64>> = chains
        .iter()
        .map(|c| Some(theoretical_bound(c1, c2, config.horizon, c.time_grid().delta())))
        .collect();
    // the zero-drift bound is 0; allow solver noise there
    let tol = if c1 == 0.0 { -ZERO_KL_TOL } else { MARGIN_TOL };

    let mut checks = common_checks(&kl, config.potential.is_zero());
    for (chain, (&m, (k, b))) in chains.iter().zip(values.iter().zip(kl.iter().zip(&bounds))) {
        let b = b.unwrap();
        let failing: Vec<String> = chain
            .time_grid()
            .intervals()
            .zip(chain.per_interval_kl())
            .enumerate()
            .filter(|(_, ((a, z), kj))| interval_bound(c1, c2, z - a) - **kj < tol)
            .map(|(j, _)| j.to_string())
            .collect();
        let ok = b - k >= tol && failing.is_empty();
        let mut detail = format!(
            "kl {k:.4e}, bound {b:.4e}, margin {:.4e}, looseness {:.1}",
            b - k,
            if *k > 0.0 { b / k } else { f64::INFINITY }
        );
        if !failing.is_empty() {
            detail.push_str(&format!("; interval(s) over their bound: {}", failing.join(", ")));
        }
        checks.push(Check::from_bool(&format!("bound m={m}"), ok, true, detail));
    }
    let fit = fit_loglog(&values, &kl, window);
    Ok(RateReport {
        kind: "bound_check".into(),
        abscissae: values,
        kl_values: kl,
        bounds,
        per_interval_kl: chains.iter().map(|c| c.per_interval_kl().to_vec()).collect(),
        c1: Some(c1),
        c2: Some(c2),
        fit,
        checks,
        runtime_seconds: start.elapsed().as_secs_f64(),
        config: config.clone(),
    })
}
