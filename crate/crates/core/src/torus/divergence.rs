use ndarray::Array2;

use super::{same_grid, GridDensity, LOG_FLOOR};
use crate::error::{Error, Result};

/// Sum of `p log(p/q) − p + q`; each term is nonnegative and the total equals
/// `Σ p log(p/q)` whenever both inputs carry the same mass. Returns `+∞` when
/// `q` vanishes somewhere `p` does not.
fn kl_terms<'a>(pairs: impl Iterator<Item = (&'a f64, &'a f64)>) -> f64 {
    let mut acc = 0.0;
    for (&p, &q) in pairs {
        if p == 0.0 {
            acc += q;
            continue;
        }
        if q == 0.0 {
            return f64::INFINITY;
        }
        acc += p * (p.max(LOG_FLOOR).ln() - q.max(LOG_FLOOR).ln()) - p + q;
    }
    acc.max(0.0)
}

/// `KL(p ‖ q) = Σ p_i log(p_i / q_i) · spacing^d` with `0 log 0 = 0`.
pub fn kl_divergence(p: &GridDensity, q: &GridDensity) -> Result<f64> {
    same_grid(p.grid(), q.grid())?;
    let h = p.grid().cell_volume();
    let s = kl_terms(p.values().iter().zip(q.values()));
    Ok(if s.is_infinite() { s } else { s * h })
}

/// A discrete coupling stored as a density on the product grid together with
/// its joint quadrature weight (`spacing^{2d}`, or 1 when weights are absorbed).
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    density: Array2<f64>,
    weight: f64,
}

impl Coupling {
    pub fn new(density: Array2<f64>, weight: f64) -> Result<Self> {
        if !(weight > 0.0) {
            return Err(Error::Domain(format!(
                "coupling weight must be > 0, got {weight}"
            )));
        }
        if density.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("coupling entries must be finite and >= 0".into()));
        }
        let mass = density.sum() * weight;
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("coupling mass {mass} is not 1")));
        }
        Ok(Self { density, weight })
    }

    /// Masses that already sum to one (weight 1).
    pub fn from_masses(masses: Array2<f64>) -> Result<Self> {
        Self::new(masses, 1.0)
    }

    pub fn density(&self) -> &Array2<f64> {
        &self.density
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.density
            .rows()
            .into_iter()
            .map(|r| r.sum() * self.weight)
            .collect()
    }

    pub fn column_marginal(&self) -> Vec<f64> {
        self.density
            .columns()
            .into_iter()
            .map(|c| c.sum() * self.weight)
            .collect()
    }
}

/// KL divergence between two couplings on the same product grid.
pub fn kl_coupling(p: &Coupling, q: &Coupling) -> Result<f64> {
    if p.density.dim() != q.density.dim() || (p.weight - q.weight).abs() > 1e-15 * p.weight {
        return Err(Error::GridMismatch(format!(
            "couplings of shape {:?} (weight {}) and {:?} (weight {})",
            p.density.dim(),
            p.weight,
            q.density.dim(),
            q.weight
        )));
    }
    let s = kl_terms(p.density.iter().zip(q.density.iter()));
    Ok(if s.is_infinite() { s } else { s * p.weight })
}
