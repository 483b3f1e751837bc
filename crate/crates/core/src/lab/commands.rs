use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::report::{emit_report, Check, RateReport, Status};
use super::{run_bound_check, run_eps_sweep, run_m_sweep, ExperimentConfig, SweepKind};
use crate::bridge::{girsanov_interval_kl, kl_vs_wiener, midpoint_nodes, solve_bridge, BridgeProblem};
use crate::error::{Error, Result};
use crate::fokker_planck::{marginal_path, simulate_particles, write_particles_csv};

/// Largest total-variation distance accepted between particles and the grid density.
pub const PARTICLE_TV_TOL: f64 = 0.05;

/// The subcommands of the `msb-lab` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    RateSweep,
    EpsSweep,
    BoundCheck,
    Simulate,
    Bridge,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::RateSweep => "rate_sweep",
            Command::EpsSweep => "eps_sweep",
            Command::BoundCheck => "bound_check",
            Command::Simulate => "simulate",
            Command::Bridge => "bridge",
        }
    }

    fn sweep_kind(self) -> Option<SweepKind> {
        match self {
            Command::RateSweep => Some(SweepKind::MSweep),
            Command::EpsSweep => Some(SweepKind::EpsSweep),
            Command::BoundCheck => Some(SweepKind::BoundCheck),
            _ => None,
        }
    }
}

/// Benchmark configuration with the default sweep for `command`.
pub fn default_config(command: Command) -> ExperimentConfig {
    let base = ExperimentConfig::benchmark();
    match command.sweep_kind() {
        Some(SweepKind::EpsSweep) => base.with_sweep(SweepKind::EpsSweep, &[0.4, 0.2, 0.1, 0.05]),
        Some(kind) => base.with_sweep(kind, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0]),
        None => base,
    }
}

/// Outcome of one command: files written and checks evaluated.
#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl CommandOutcome {
    pub fn passed(&self) -> bool {
        self.checks
            .iter()
            .all(|c| !c.asserted || c.status != Status::Fail)
    }
}

fn log_text(command: Command, checks: &[Check], extra: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "msb-lab {}", command.name());
    s.push_str(extra);
    for c in checks {
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        };
        let tag = if c.asserted { "" } else { " (informational)" };
        let _ = writeln!(s, "{status:<12} {}{tag}: {}", c.name, c.detail);
    }
    s
}

fn sweep_summary(report: &RateReport) -> String {
    let mut s = String::new();
    for ((x, k), b) in report.abscissae.iter().zip(&report.kl_values).zip(&report.bounds) {
        match b {
            Some(b) => {
                let _ = writeln!(s, "  {x:>8}  kl {k:.6e}  bound {b:.6e}");
            }
            None => {
                let _ = writeln!(s, "  {x:>8}  kl {k:.6e}");
            }
        }
    }
    if !report.fit.degenerate {
        let _ = writeln!(
            s,
            "  fit: slope {:.4}, intercept {:.4}, r² {:.4}",
            report.fit.slope, report.fit.intercept, report.fit.r_squared
        );
    }
    s
}

/// Run `command` and write its outputs below `out_dir`.
pub fn run_command(command: Command, config: &ExperimentConfig, out_dir: &Path) -> Result<CommandOutcome> {
    let stem = config
        .output
        .stem
        .clone()
        .unwrap_or_else(|| command.name().to_string());
    fs::create_dir_all(out_dir)?;
    let (mut files, checks, extra) = match command {
        Command::RateSweep | Command::EpsSweep | Command::BoundCheck => {
            let report = match command {
                Command::RateSweep => run_m_sweep(config)?,
                Command::EpsSweep => run_eps_sweep(config)?,
                _ => run_bound_check(config)?,
            };
            let paths = emit_report(&report, out_dir, &stem)?;
            (
                vec![paths.csv, paths.json],
                report.checks.clone(),
                sweep_summary(&report),
            )
        }
        Command::Simulate => simulate(config, out_dir, &stem)?,
        Command::Bridge => bridge(config, out_dir, &stem)?,
    };
    let log = out_dir.join(format!("{stem}.log"));
    fs::write(&log, log_text(command, &checks, &extra))?;
    files.push(log);
    Ok(CommandOutcome { files, checks })
}

#[derive(Serialize)]
struct SimulateSummary {
    times: Vec<f64>,
    particles: usize,
    seed: u64,
    total_variation: Option<f64>,
    histogram_bins: usize,
}

type Parts = (Vec<PathBuf>, Vec<Check>, String);

fn simulate(config: &ExperimentConfig, out_dir: &Path, stem: &str) -> Result<Parts> {
    config.validate_basic()?;
    let times = config
        .simulate
        .times
        .clone()
        .unwrap_or_else(|| (0..=10).map(|k| config.horizon * k as f64 / 10.0).collect());
    let rho0 = config.initial_density()?;
    let path = marginal_path(&rho0, &config.potential, config.tau, &times, config.step_policy())?;
    let marginals = out_dir.join(format!("{stem}_marginals.csv"));
    path.write_csv(fs::File::create(&marginals)?)?;
    let mut files = vec![marginals];
    let mut checks = Vec::new();
    let mut tv = None;
    let sim = &config.simulate;
    if sim.particles > 0 {
        let last = *path
            .times()
            .last()
            .ok_or_else(|| Error::Config("no export times".into()))?;
        let ensembles = simulate_particles(
            &rho0,
            &config.potential,
            config.tau,
            path.times(),
            sim.particles,
            sim.particle_dt,
            config.seed,
        )?;
        let particles = out_dir.join(format!("{stem}_particles.csv"));
        write_particles_csv(&ensembles, fs::File::create(&particles)?)?;
        files.push(particles);
        let hist = ensembles
            .last()
            .expect("one ensemble per time")
            .histogram(sim.histogram_bins);
        let masses = path.density_at(last)?.bin_masses(sim.histogram_bins, 16);
        let d = 0.5 * hist.iter().zip(&masses).map(|(a, b)| (a - b).abs()).sum::<f64>();
        tv = Some(d);
        checks.push(Check::from_bool(
            "particle_tv",
            d <= PARTICLE_TV_TOL,
            true,
            format!(
                "total variation {d:.4} at t = {last} over {} bins",
                sim.histogram_bins
            ),
        ));
    }
    let summary = SimulateSummary {
        times: path.times().to_vec(),
        particles: sim.particles,
        seed: config.seed,
        total_variation: tv,
        histogram_bins: sim.histogram_bins,
    };
    let json = out_dir.join(format!("{stem}.json"));
    fs::write(&json, serde_json::to_string_pretty(&summary)? + "\n")?;
    files.push(json);
    Ok((files, checks, String::new()))
}

#[derive(Serialize)]
struct BridgeSummary {
    t_a: f64,
    t_b: f64,
    iterations: usize,
    marginal_residual: f64,
    girsanov_kl: f64,
    wiener_kl: f64,
}

fn bridge(config: &ExperimentConfig, out_dir: &Path, stem: &str) -> Result<Parts> {
    config.validate_basic()?;
    let (t_a, t_b) = (config.bridge.t_a, config.bridge.t_b);
    if !(t_a >= 0.0 && t_b > t_a) {
        return Err(Error::Config(format!("bridge window [{t_a}, {t_b}] is invalid")));
    }
    let n_t = config.quadrature_nodes;
    let mut times = vec![t_a];
    times.extend(midpoint_nodes(t_a, t_b, n_t));
    times.push(t_b);
    let path = marginal_path(
        &config.initial_density()?,
        &config.potential,
        config.tau,
        &times,
        config.step_policy(),
    )?;
    let problem = BridgeProblem::new(
        path.density_at(t_a)?.clone(),
        path.density_at(t_b)?.clone(),
        t_a,
        t_b,
        config.tau,
    )?;
    let sol = solve_bridge(&problem, &config.sinkhorn_params())?;
    let dump = out_dir.join(format!("{stem}.txt"));
    sol.write_dump(fs::File::create(&dump)?)?;
    let mut files = vec![dump];
    if problem.grid().len() <= 64 {
        let coupling = out_dir.join(format!("{stem}_coupling.csv"));
        sol.write_coupling_csv(fs::File::create(&coupling)?)?;
        files.push(coupling);
    }
    let summary = BridgeSummary {
        t_a,
        t_b,
        iterations: sol.iterations(),
        marginal_residual: sol.marginal_residual(),
        girsanov_kl: girsanov_interval_kl(&sol, &config.potential, &path, n_t)?,
        wiener_kl: kl_vs_wiener(&config.potential, &path, t_a, t_b, n_t)?,
    };
    let json = out_dir.join(format!("{stem}.json"));
    fs::write(&json, serde_json::to_string_pretty(&summary)? + "\n")?;
    files.push(json);
    let checks = vec![Check::from_bool(
        "marginal_residual",
        sol.marginal_residual() <= config.sinkhorn.tol,
        true,
        format!(
            "{:.3e} after {} sweeps",
            sol.marginal_residual(),
            sol.iterations()
        ),
    )];
    let extra = format!(
        "  girsanov KL {:.6e}, KL vs Wiener {:.6e}\n",
        summary.girsanov_kl, summary.wiener_kl
    );
    Ok((files, checks, extra))
}
