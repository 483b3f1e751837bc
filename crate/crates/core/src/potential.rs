//! Time-dependent potentials `Ψ(t, x)` as truncated Fourier series with
//! analytic derivatives, the auxiliary function `𝒰 = ∂ₜΨ + ½ΔΨ + ½|∇Ψ|²`,
//! and the sampled constants `C₁(Ψ)`, `C₂(Ψ)` that enter the KL bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fokker_planck::MarginalPath;
use crate::torus::{TorusGrid, LOG_FLOOR, TWO_PI};

/// Time profile of one Fourier term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeCoeff {
    /// `a₀ + a₁ t + … + a₄ t⁴`.
    Polynomial { coefficients: Vec<f64> },
    /// `amplitude · sin(frequency · t + phase)`.
    Harmonic {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl TimeCoeff {
    pub fn constant(c: f64) -> Self {
        TimeCoeff::Polynomial {
            coefficients: vec![c],
        }
    }

    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        TimeCoeff::Harmonic {
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    /// Time derivative of the given order (0, 1 or 2 in practice).
    pub fn derivative(&self, order: u32, t: f64) -> f64 {
        match self {
            TimeCoeff::Polynomial { coefficients } => {
                let mut acc = 0.0;
                for (p, &a) in coefficients.iter().enumerate().rev() {
                    let p = p as u32;
                    if p < order {
                        break;
                    }
                    let falling: f64 = (0..order).map(|i| (p - i) as f64).product();
                    acc += a * falling * t.powi((p - order) as i32);
                }
                acc
            }
            TimeCoeff::Harmonic {
                amplitude,
                frequency,
                phase,
            } => {
                let arg = frequency * t + phase;
                let trig = match order % 4 {
                    0 => arg.sin(),
                    1 => arg.cos(),
                    2 => -arg.sin(),
                    _ => -arg.cos(),
                };
                amplitude * frequency.powi(order as i32) * trig
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TimeCoeff::Polynomial { coefficients } if coefficients.len() > 5 => Err(Error::Config(
                "polynomial time coefficients are limited to degree 4".into(),
            )),
            TimeCoeff::Polynomial { coefficients } if coefficients.iter().any(|c| !c.is_finite()) => {
                Err(Error::Config("non-finite polynomial coefficient".into()))
            }
            TimeCoeff::Harmonic {
                amplitude,
                frequency,
                phase,
            } if !(amplitude.is_finite() && frequency.is_finite() && phase.is_finite()) => {
                Err(Error::Config("non-finite harmonic coefficient".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Cos,
    Sin,
}

/// One term `c(t) · cos(k x)` or `c(t) · sin(k x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub k: i32,
    pub phase: Phase,
    pub time_coeff: TimeCoeff,
}

impl FourierTerm {
    /// `d^p/dx^p` of the spatial factor.
    fn spatial(&self, order: u32, x: f64) -> f64 {
        let k = self.k as f64;
        let arg = k * x;
        // cos(kx + pπ/2) for cos, sin(kx + pπ/2) for sin
        let shift = match self.phase {
            Phase::Cos => order % 4,
            Phase::Sin => (order + 3) % 4,
        };
        let trig = match shift {
            0 => arg.cos(),
            1 => -arg.sin(),
            2 => -arg.cos(),
            _ => arg.sin(),
        };
        k.powi(order as i32) * trig
    }
}

/// A potential on the one-dimensional torus. Terms may repeat a wavenumber.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(default)]
    pub terms: Vec<FourierTerm>,
}

/// Values of `(∂ₜ𝒰, ∇𝒰, Δ𝒰)` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UDerivatives {
    pub dt: f64,
    pub grad: f64,
    pub laplacian: f64,
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(terms: Vec<FourierTerm>) -> Result<Self> {
        let spec = Self { terms };
        spec.validate()?;
        Ok(spec)
    }

    /// Time-independent `amplitude · cos(k x)`.
    pub fn cosine(amplitude: f64, k: i32) -> Self {
        Self {
            terms: vec![FourierTerm {
                k,
                phase: Phase::Cos,
                time_coeff: TimeCoeff::constant(amplitude),
            }],
        }
    }

    /// `Ψ(t,x) = (0.5 + 0.3 sin t) cos x + 0.2 sin t cos 2x`, the reference
    /// time-dependent benchmark.
    pub fn benchmark() -> Self {
        Self {
            terms: vec![
                FourierTerm {
                    k: 1,
                    phase: Phase::Cos,
                    time_coeff: TimeCoeff::constant(0.5),
                },
                FourierTerm {
                    k: 1,
                    phase: Phase::Cos,
                    time_coeff: TimeCoeff::sine(0.3, 1.0),
                },
                FourierTerm {
                    k: 2,
                    phase: Phase::Cos,
                    time_coeff: TimeCoeff::sine(0.2, 1.0),
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.terms.iter().try_for_each(|t| t.time_coeff.validate())
    }

    /// Multiply every term by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let time_coeff = match &t.time_coeff {
                    TimeCoeff::Polynomial { coefficients } => TimeCoeff::Polynomial {
                        coefficients: coefficients.iter().map(|c| c * factor).collect(),
                    },
                    TimeCoeff::Harmonic {
                        amplitude,
                        frequency,
                        phase,
                    } => TimeCoeff::Harmonic {
                        amplitude: amplitude * factor,
                        frequency: *frequency,
                        phase: *phase,
                    },
                };
                FourierTerm {
                    time_coeff,
                    ..t.clone()
                }
            })
            .collect();
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| {
            t.k == 0
                || match &t.time_coeff {
                    TimeCoeff::Polynomial { coefficients } => coefficients.iter().all(|c| *c == 0.0),
                    TimeCoeff::Harmonic { amplitude, .. } => *amplitude == 0.0,
                }
        })
    }

    pub fn k_max(&self) -> u32 {
        self.terms.iter().map(|t| t.k.unsigned_abs()).max().unwrap_or(0)
    }

    /// `∂ₜ^a ∂ₓ^b Ψ(t, x)`.
    pub fn derivative(&self, t_order: u32, x_order: u32, t: f64, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.time_coeff.derivative(t_order, t) * term.spatial(x_order, x))
            .sum()
    }

    pub fn psi(&self, t: f64, x: f64) -> f64 {
        self.derivative(0, 0, t, x)
    }

    pub fn grad(&self, t: f64, x: f64) -> f64 {
        self.derivative(0, 1, t, x)
    }

    pub fn laplacian(&self, t: f64, x: f64) -> f64 {
        self.derivative(0, 2, t, x)
    }

    pub fn dt(&self, t: f64, x: f64) -> f64 {
        self.derivative(1, 0, t, x)
    }

    /// `∇Ψ(t, ·)` at every node of `grid`.
    pub fn grad_on(&self, grid: &TorusGrid, t: f64) -> Vec<f64> {
        (0..grid.len()).map(|i| self.grad(t, grid.node(i))).collect()
    }

    /// `sup_x |∇Ψ(t, x)|` sampled on `grid` at `samples + 1` equispaced times.
    pub fn max_grad(&self, grid: &TorusGrid, t_from: f64, t_to: f64, samples: usize) -> f64 {
        let samples = samples.max(1);
        (0..=samples)
            .flat_map(|s| {
                let t = t_from + (t_to - t_from) * s as f64 / samples as f64;
                (0..grid.len()).map(move |i| self.grad(t, grid.node(i)).abs())
            })
            .fold(0.0, f64::max)
    }

    /// `𝒰(t, x)`, defined at unit temperature only.
    pub fn u_eval(&self, t: f64, x: f64, tau: f64) -> Result<f64> {
        require_unit_temperature(tau)?;
        let g = self.derivative(0, 1, t, x);
        Ok(self.derivative(1, 0, t, x) + 0.5 * self.derivative(0, 2, t, x) + 0.5 * g * g)
    }

    /// `(∂ₜ𝒰, ∇𝒰, Δ𝒰)` by term-wise differentiation.
    pub fn u_derivatives(&self, t: f64, x: f64, tau: f64) -> Result<UDerivatives> {
        require_unit_temperature(tau)?;
        let d = |a, b| self.derivative(a, b, t, x);
        let (g1, g2, g3) = (d(0, 1), d(0, 2), d(0, 3));
        Ok(UDerivatives {
            dt: d(2, 0) + 0.5 * d(1, 2) + g1 * d(1, 1),
            grad: d(1, 1) + 0.5 * g3 + g1 * g2,
            laplacian: d(1, 2) + 0.5 * d(0, 4) + g2 * g2 + g1 * g3,
        })
    }

    /// Integrand of `C₁` at one point.
    fn c1_integrand(&self, t: f64, x: f64) -> f64 {
        let u = self
            .u_derivatives(t, x, 1.0)
            .expect("unit temperature is always supported");
        let g = self.grad(t, x);
        u.dt.abs() + 0.5 * u.laplacian.abs() + (u.grad * g).abs() + u.grad * u.grad
    }
}

fn require_unit_temperature(tau: f64) -> Result<()> {
    if tau != 1.0 {
        return Err(Error::Unsupported(format!(
            "𝒰 and the bound constants are normalized to τ = 1 (got τ = {tau}); rescale time"
        )));
    }
    Ok(())
}

/// Equispaced sample times `T·k/n_t`, `k = 0..=n_t`; doubling `n_t` nests.
pub fn sample_times(horizon: f64, n_t: usize) -> Vec<f64> {
    (0..=n_t).map(|k| horizon * k as f64 / n_t as f64).collect()
}

/// `C₁(Ψ) = max [ |∂ₜ𝒰| + ½|Δ𝒰| + |∇𝒰·∇Ψ| + |∇𝒰|² ]` over `[0, T] × grid`,
/// with `n_t + 1` equispaced time samples.
pub fn constant_c1(spec: &PotentialSpec, grid: &TorusGrid, horizon: f64, n_t: usize) -> Result<f64> {
    if grid.points_per_axis() < 4 * spec.k_max() as usize {
        return Err(Error::Config(format!(
            "C₁ sampling needs n >= 4·k_max = {}, got {}",
            4 * spec.k_max(),
            grid.points_per_axis()
        )));
    }
    if n_t < 16 {
        return Err(Error::Config(format!(
            "C₁ needs at least 16 time samples, got {n_t}"
        )));
    }
    if !(horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be > 0, got {horizon}")));
    }
    let nodes = grid.nodes();
    Ok(sample_times(horizon, n_t)
        .par_iter()
        .map(|&t| nodes.iter().map(|&x| spec.c1_integrand(t, x)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max))
}

/// `C₂(Ψ) = sup max{ |∇Ψ|, |∇ log ρ_t| }` over the times and nodes of `path`.
pub fn constant_c2(spec: &PotentialSpec, path: &MarginalPath) -> Result<f64> {
    let grid = *path.grid();
    let mut sup: f64 = 0.0;
    for (t, rho) in path.times().iter().zip(path.densities()) {
        if let Some(node) = rho.values().iter().position(|&v| v < LOG_FLOOR) {
            return Err(Error::BelowFloor { time: *t, node });
        }
        let drho = rho.as_field().gradient();
        for (i, (&r, &dr)) in rho.values().iter().zip(drho.values()).enumerate() {
            let score = (dr / r).abs();
            let drift = spec.grad(*t, grid.node(i)).abs();
            sup = sup.max(score.max(drift));
        }
    }
    Ok(sup)
}

/// `2π`-periodicity check helper used by tests and diagnostics.
pub fn periodicity_defect(spec: &PotentialSpec, t: f64, x: f64) -> f64 {
    (spec.psi(t, x) - spec.psi(t, x + TWO_PI)).abs()
}
