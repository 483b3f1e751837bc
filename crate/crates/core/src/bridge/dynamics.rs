//! Time-dependent bridge quantities on `[t_a, t_b]`.
//!
//! With `H_fwd(t) = e^{τ(t−t_a)Δ/2} e^f` and `H_bwd(t) = e^{τ(t_b−t)Δ/2} e^g`,
//! both taken as band-limited heat extensions of the dual potentials:
//!
//! * drift `v̂ = τ ∂ₓ log H_bwd`,
//! * marginal `μ ∝ H_fwd · H_bwd`,
//! * current velocity `v = (τ/2)(∂ₓ log H_bwd − ∂ₓ log H_fwd)`.

use super::BridgeSolution;
use crate::error::{Error, Result};
use crate::torus::{GridDensity, GridField};

/// Everything the estimators need from the bridge at one time.
#[derive(Debug, Clone)]
pub struct BridgeState {
    pub time: f64,
    pub density: GridDensity,
    /// `∂ₓ log μ`.
    pub score: GridField,
    /// Current velocity of the marginal flow.
    pub velocity: GridField,
    /// Forward drift of the bridge SDE.
    pub drift: GridField,
}

fn check_time(sol: &BridgeSolution, t: f64) -> Result<()> {
    let p = sol.problem();
    let slack = 1e-12 * p.duration();
    if !(t >= p.t_a() - slack && t <= p.t_b() + slack) {
        return Err(Error::Domain(format!(
            "time {t} lies outside the bridge window [{}, {}]",
            p.t_a(),
            p.t_b()
        )));
    }
    Ok(())
}

/// `(∂ₓ log H, H)` for a heat extension; fails if positivity is lost.
fn log_extension(sol: &BridgeSolution, forward: bool, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = sol.problem();
    let (coeffs, elapsed) = if forward {
        (sol.fwd_coeffs(), (t - p.t_a()).max(0.0))
    } else {
        (sol.bwd_coeffs(), (p.t_b() - t).max(0.0))
    };
    let (h, dh) = sol.spectral().heat_extension(coeffs, p.tau() * elapsed);
    if let Some(i) = h.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Resolution(format!(
            "heat extension is not positive at node {i}, t = {t}"
        )));
    }
    let dlog = dh.iter().zip(&h).map(|(d, v)| d / v).collect();
    Ok((dlog, h))
}

/// Drift `τ ∂ₓ log H_bwd(t, ·)` of the bridge SDE.
pub fn bridge_drift(sol: &BridgeSolution, t: f64) -> Result<GridField> {
    check_time(sol, t)?;
    let (dlog, _) = log_extension(sol, false, t)?;
    let tau = sol.problem().tau();
    GridField::new(sol.problem().grid(), dlog.into_iter().map(|v| tau * v).collect())
}

/// Bridge marginal at time `t`.
pub fn entropic_interpolation(sol: &BridgeSolution, t: f64) -> Result<GridDensity> {
    Ok(sol.state_at(t)?.density)
}

/// Velocity field transporting the bridge marginals.
pub fn current_velocity(sol: &BridgeSolution, t: f64) -> Result<GridField> {
    Ok(sol.state_at(t)?.velocity)
}

impl BridgeSolution {
    pub fn state_at(&self, t: f64) -> Result<BridgeState> {
        check_time(self, t)?;
        let grid = self.problem().grid();
        let tau = self.problem().tau();
        let (dlog_f, hf) = log_extension(self, true, t)?;
        let (dlog_b, hb) = log_extension(self, false, t)?;
        let density = GridDensity::normalized(grid, hf.iter().zip(&hb).map(|(a, b)| a * b).collect())?;
        let score = dlog_f.iter().zip(&dlog_b).map(|(a, b)| a + b).collect();
        let velocity = dlog_f
            .iter()
            .zip(&dlog_b)
            .map(|(a, b)| 0.5 * tau * (b - a))
            .collect();
        let drift = dlog_b.iter().map(|b| tau * b).collect();
        Ok(BridgeState {
            time: t,
            density,
            score: GridField::new(grid, score)?,
            velocity: GridField::new(grid, velocity)?,
            drift: GridField::new(grid, drift)?,
        })
    }
}
