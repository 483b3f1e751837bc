use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::{Phase, PotentialSpec};
use crate::torus::{wrap, GridDensity};

/// Particle positions at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub positions: Vec<f64>,
    pub time: f64,
    pub seed: u64,
}

impl ParticleEnsemble {
    /// Normalized histogram over `bins` equal arcs of `[0, 2π)`.
    pub fn histogram(&self, bins: usize) -> Vec<f64> {
        let mut counts = vec![0.0; bins];
        let width = crate::torus::TWO_PI / bins as f64;
        for &x in &self.positions {
            let b = ((x / width) as usize).min(bins - 1);
            counts[b] += 1.0;
        }
        let n = self.positions.len() as f64;
        counts.iter_mut().for_each(|c| *c /= n);
        counts
    }
}

/// Draw from the piecewise-constant density whose cell `i` is centered on node `i`.
fn sample_initial<R: Rng>(cdf: &[f64], h: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
    let lo = if i == 0 { 0.0 } else { cdf[i - 1] };
    let mass = cdf[i] - lo;
    let frac = if mass > 0.0 { (u - lo) / mass } else { 0.5 };
    wrap((i as f64 - 0.5 + frac) * h)
}

/// Euler–Maruyama: `Z ← wrap(Z + ∇Ψ(t, Z) dt + √(τ dt) ξ)`.
///
/// Every particle owns a ChaCha stream keyed by `(seed, index)`, so the output
/// does not depend on thread scheduling. Initial positions are drawn from `ρ₀`
/// by inverse CDF. Between requested times the step is shrunk so that each
/// time is hit exactly.
pub fn simulate_particles(
    rho0: &GridDensity,
    spec: &PotentialSpec,
    tau: f64,
    times: &[f64],
    n_particles: usize,
    dt: f64,
    seed: u64,
) -> Result<Vec<ParticleEnsemble>> {
    if n_particles == 0 {
        return Err(Error::Config("need at least one particle".into()));
    }
    if !(dt > 0.0) || !(tau >= 0.0) {
        return Err(Error::Config(format!("invalid dt = {dt} or τ = {tau}")));
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("times must be sorted and >= 0".into()));
    }

    // (start time, step size, count) per segment, shared by all particles
    let mut schedule = Vec::with_capacity(times.len());
    let mut t = 0.0;
    for &target in times {
        let len = target - t;
        let count = if len > 0.0 {
            (len / dt - 1e-9).ceil().max(1.0) as usize
        } else {
            0
        };
        let step = if count > 0 { len / count as f64 } else { 0.0 };
        schedule.push((t, step, count));
        t = t.max(target);
    }

    let h = rho0.grid().spacing();
    let mut acc = 0.0;
    let cdf: Vec<f64> = rho0
        .values()
        .iter()
        .map(|v| {
            acc += v * h;
            acc
        })
        .collect();
    let sqrt_tau = tau.sqrt();

    // merge terms sharing a spatial factor; tabulate their time coefficients
    let mut groups: Vec<(i32, Phase)> = Vec::new();
    for term in &spec.terms {
        if !groups.contains(&(term.k, term.phase)) {
            groups.push((term.k, term.phase));
        }
    }
    let coeff_table: Vec<Vec<Vec<f64>>> = schedule
        .iter()
        .map(|&(t0, step, count)| {
            (0..count)
                .map(|s| {
                    let t = t0 + s as f64 * step;
                    groups
                        .iter()
                        .map(|g| {
                            spec.terms
                                .iter()
                                .filter(|term| (term.k, term.phase) == *g)
                                .map(|term| term.time_coeff.derivative(0, t))
                                .sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let drift = |coeffs: &[f64], z: f64| -> f64 {
        groups
            .iter()
            .zip(coeffs)
            .map(|(&(k, phase), c)| {
                let k = k as f64;
                match phase {
                    Phase::Cos => -c * k * (k * z).sin(),
                    Phase::Sin => c * k * (k * z).cos(),
                }
            })
            .sum()
    };

    let tracks: Vec<Vec<f64>> = (0..n_particles)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut z = sample_initial(&cdf, h, &mut rng);
            let mut out = Vec::with_capacity(schedule.len());
            for (&(_, step, _), coeffs) in schedule.iter().zip(&coeff_table) {
                let noise = sqrt_tau * step.sqrt();
                for c in coeffs {
                    let xi: f64 = rng.sample(StandardNormal);
                    z = wrap(z + drift(c, z) * step + noise * xi);
                }
                out.push(z);
            }
            out
        })
        .collect();

    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &time)| ParticleEnsemble {
            positions: tracks.iter().map(|tr| tr[k]).collect(),
            time,
            seed,
        })
        .collect())
}

/// CSV with columns `t,particle_index,x`.
pub fn write_particles_csv<W: Write>(ensembles: &[ParticleEnsemble], writer: W) -> Result<()> {
    let mut w = super::csv_writer(writer);
    w.write_record(["t", "particle_index", "x"])?;
    for e in ensembles {
        for (i, x) in e.positions.iter().enumerate() {
            w.write_record([e.time.to_string(), i.to_string(), x.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
