use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bridge::SinkhornParams;
use crate::error::{Error, Result};
use crate::fokker_planck::StepPolicy;
use crate::msb::{MsbParams, TimeGrid};
use crate::potential::PotentialSpec;
use crate::torus::{make_grid, GridDensity, TorusGrid};

/// Initial density `ρ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDensity {
    Uniform,
    /// `∝ exp(κ cos(x − center))`.
    VonMises {
        kappa: f64,
        #[serde(default)]
        center: f64,
    },
    WrappedGaussian {
        center: f64,
        variance: f64,
    },
}

impl Default for InitialDensity {
    fn default() -> Self {
        InitialDensity::VonMises {
            kappa: 1.0,
            center: 0.0,
        }
    }
}

impl InitialDensity {
    pub fn build(&self, grid: TorusGrid) -> Result<GridDensity> {
        match *self {
            InitialDensity::Uniform => Ok(GridDensity::uniform(grid)),
            InitialDensity::VonMises { kappa, center } => {
                if !kappa.is_finite() || !center.is_finite() {
                    return Err(Error::Config("von Mises parameters must be finite".into()));
                }
                Ok(GridDensity::von_mises(grid, kappa, center))
            }
            InitialDensity::WrappedGaussian { center, variance } => {
                GridDensity::wrapped_gaussian(grid, center, variance)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    MSweep,
    EpsSweep,
    BoundCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    /// Interval counts `m` or interval lengths `ε`.
    pub values: Vec<f64>,
    /// Inclusive abscissa range used by the slope fit. Defaults to every
    /// value, except that `m = 1` is left out of m-sweeps.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinkhornConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    SinkhornParams::default().tol
}

fn default_max_iter() -> usize {
    SinkhornParams::default().max_iter
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

/// Settings for the `simulate` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Export times; defaults to `0, T/10, …, T`.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    /// Euler–Maruyama particles (0 disables the particle run).
    #[serde(default)]
    pub particles: usize,
    #[serde(default = "default_particle_dt")]
    pub particle_dt: f64,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

fn default_particle_dt() -> f64 {
    1e-3
}

fn default_bins() -> usize {
    32
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            times: None,
            particles: 0,
            particle_dt: default_particle_dt(),
            histogram_bins: default_bins(),
        }
    }
}

/// Settings for the `bridge` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeConfig {
    pub t_a: f64,
    pub t_b: f64,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self { t_a: 0.0, t_b: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// File stem for report files; defaults to the subcommand name.
    #[serde(default)]
    pub stem: Option<String>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            stem: None,
        }
    }
}

/// Everything one run needs. See `configs/` for annotated examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub seed: u64,
    /// Midpoint nodes per interval in the KL quadrature.
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    /// Largest Fokker–Planck step.
    #[serde(default = "default_fp_dt")]
    pub max_fp_dt: f64,
    #[serde(default)]
    pub initial: InitialDensity,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub sinkhorn: SinkhornConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub bridge: BridgeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> f64 {
    1.0
}

fn default_points() -> usize {
    256
}

fn default_nodes() -> usize {
    32
}

fn default_fp_dt() -> f64 {
    StepPolicy::default().max_dt
}

impl ExperimentConfig {
    /// The reference setup: `n = 256`, `τ = T = 1`, `ρ₀ ∝ exp(cos x)` and the
    /// time-dependent benchmark potential. No sweep is attached.
    pub fn benchmark() -> Self {
        Self {
            tau: 1.0,
            horizon: 1.0,
            grid_points: 256,
            seed: 0,
            quadrature_nodes: 32,
            max_fp_dt: default_fp_dt(),
            initial: InitialDensity::default(),
            potential: PotentialSpec::benchmark(),
            sweep: None,
            sinkhorn: SinkhornConfig::default(),
            simulate: SimulateConfig::default(),
            bridge: BridgeConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn with_sweep(mut self, kind: SweepKind, values: &[f64]) -> Self {
        self.sweep = Some(SweepConfig {
            kind,
            values: values.to_vec(),
            fit_window: None,
        });
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate_basic()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        make_grid(1, self.grid_points)
    }

    pub fn initial_density(&self) -> Result<GridDensity> {
        self.initial.build(self.grid()?)
    }

    pub fn step_policy(&self) -> StepPolicy {
        StepPolicy {
            max_dt: self.max_fp_dt,
        }
    }

    pub fn sinkhorn_params(&self) -> SinkhornParams {
        SinkhornParams {
            tol: self.sinkhorn.tol,
            max_iter: self.sinkhorn.max_iter,
        }
    }

    pub fn msb_params(&self) -> MsbParams {
        MsbParams {
            sinkhorn: self.sinkhorn_params(),
            n_t: self.quadrature_nodes,
            step_policy: self.step_policy(),
        }
    }

    /// Checks that do not depend on the chosen subcommand.
    pub fn validate_basic(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Config(format!(
                "horizon must be > 0, got {}",
                self.horizon
            )));
        }
        if self.quadrature_nodes == 0 {
            return Err(Error::Config("quadrature_nodes must be >= 1".into()));
        }
        if !(self.max_fp_dt > 0.0) {
            return Err(Error::Config(format!(
                "max_fp_dt must be > 0, got {}",
                self.max_fp_dt
            )));
        }
        if !(self.sinkhorn.tol > 0.0) || self.sinkhorn.max_iter == 0 {
            return Err(Error::Config("sinkhorn needs tol > 0 and max_iter >= 1".into()));
        }
        self.potential.validate()?;
        self.initial_density()?;
        Ok(())
    }

    /// Full validation for a sweep of the given kind, run before any solve.
    pub fn validate_sweep(&self, kind: SweepKind) -> Result<&SweepConfig> {
        self.validate_basic()?;
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
        if sweep.kind != kind {
            return Err(Error::Config(format!(
                "config describes a {:?} sweep, not {kind:?}",
                sweep.kind
            )));
        }
        let grid = self.grid()?;
        let guard = |len: f64, what: String| -> Result<()> {
            if (self.tau * len).sqrt() < 2.0 * grid.spacing() {
                return Err(Error::Resolution(format!(
                    "{what}: kernel width √(τ·{len}) is below 2·spacing at n = {}",
                    self.grid_points
                )));
            }
            Ok(())
        };
        let mut seen = Vec::new();
        for &v in &sweep.values {
            if seen.contains(&v) {
                return Err(Error::Config(format!("duplicate sweep value {v}")));
            }
            seen.push(v);
            match kind {
                SweepKind::MSweep | SweepKind::BoundCheck => {
                    if !(v >= 1.0) || v.fract() != 0.0 {
                        return Err(Error::Config(format!("m must be a positive integer, got {v}")));
                    }
                    guard(self.horizon / v, format!("m = {v}"))?;
                    TimeGrid::uniform(self.horizon, v as usize)?;
                }
                SweepKind::EpsSweep => {
                    if !(v > 0.0) || v > self.horizon {
                        return Err(Error::Config(format!("ε must lie in (0, T], got {v}")));
                    }
                    guard(v, format!("ε = {v}"))?;
                }
            }
        }
        if kind == SweepKind::BoundCheck && self.tau != 1.0 {
            return Err(Error::Config(format!(
                "bound check requires tau = 1 (got {})",
                self.tau
            )));
        }
        if self.tau == 1.0 && grid.points_per_axis() < 4 * self.potential.k_max() as usize {
            return Err(Error::Config(
                "grid too coarse for the potential's wavenumbers".into(),
            ));
        }
        Ok(sweep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
tau = 1.0
horizon = 1.0
grid_points = 128
seed = 7

[initial]
kind = "von_mises"
kappa = 1.0

[[potential.terms]]
k = 1
phase = "cos"
time_coeff = { kind = "polynomial", coefficients = [0.5] }

[[potential.terms]]
k = 2
phase = "cos"
time_coeff = { kind = "harmonic", amplitude = 0.2, frequency = 1.0 }

[sweep]
kind = "m_sweep"
values = [2, 4, 8]
"#;

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c.grid_points, 128);
        assert_eq!(c.potential.terms.len(), 2);
        assert_eq!(c.quadrature_nodes, 32);
        assert_eq!(c.sweep.as_ref().unwrap().values, vec![2.0, 4.0, 8.0]);
        c.validate_sweep(SweepKind::MSweep).unwrap();
        assert!(c.validate_sweep(SweepKind::EpsSweep).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str("tau = 1.0").is_err());
        let typo = SAMPLE.replace("seed = 7", "sede = 7");
        assert!(ExperimentConfig::from_toml_str(&typo).is_err());
        let odd = SAMPLE.replace("grid_points = 128", "grid_points = 127");
        assert!(ExperimentConfig::from_toml_str(&odd).is_err());
        let hot = SAMPLE
            .replace("tau = 1.0", "tau = 2.0")
            .replace("m_sweep", "bound_check");
        let c = ExperimentConfig::from_toml_str(&hot).unwrap();
        assert!(c.validate_sweep(SweepKind::BoundCheck).is_err());
        let fine = SAMPLE.replace("[2, 4, 8]", "[2, 4000]");
        let c = ExperimentConfig::from_toml_str(&fine).unwrap();
        assert!(matches!(
            c.validate_sweep(SweepKind::MSweep),
            Err(Error::Resolution(_))
        ));
        let frac = SAMPLE.replace("[2, 4, 8]", "[2.5]");
        let c = ExperimentConfig::from_toml_str(&frac).unwrap();
        assert!(c.validate_sweep(SweepKind::MSweep).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ExperimentConfig::benchmark().with_sweep(SweepKind::EpsSweep, &[0.1, 0.2]);
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }
}
