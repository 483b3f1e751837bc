//! Multi-marginal Schrödinger bridges on the flat torus.
//!
//! The crate builds the marginals of the Langevin-type SDE
//! `dZ = ∇Ψ(t, Z) dt + √τ dW` on `T¹`, fits a chain of two-marginal bridges
//! through them and measures how far the SDE path law sits from that chain.
//!
//! * [`torus`]: grid, densities, heat kernel, FFT helpers, KL.
//! * [`potential`]: Fourier potentials and their regularity constants.
//! * [`fokker_planck`]: spectral Fokker–Planck solver and particle simulation.
//! * [`bridge`]: Sinkhorn solver, bridge dynamics and KL estimators.
//! * [`msb`]: the multi-marginal chain and its error bounds.
//! * [`lab`]: configuration, sweeps, rate fits and reports.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bridge;
pub mod error;
pub mod fokker_planck;
pub mod lab;
pub mod msb;
pub mod potential;
pub mod torus;

pub use error::{Error, Result};
