//! Numerical laboratory for causal attention token dynamics.
//!
//! Tokens are angles on the torus evolving under a causal, positionally
//! biased interaction. The crate provides:
//!
//! * the interaction kernel, positional weights, and their continuum
//!   (graphon) limit ([`interaction`], [`alibi`]);
//! * an RK4 particle simulator with deterministic, counter-seeded
//!   replicate ensembles ([`sim`], [`sampler`]);
//! * streaming Monte Carlo estimators for Fourier modes, covariances,
//!   third cumulants, and retrieval accuracy ([`stats`]);
//! * spectral solvers for the limiting transport equations and a direct
//!   quadrature solver for the associated Volterra equation ([`meanfield`]);
//! * closed-form evaluation of the limiting cross-correlation profile and
//!   the position-retrieval score with its convexity diagnostics
//!   ([`closedform`]);
//! * the verification suite wiring everything together ([`acceptance`]).

pub mod acceptance;
pub mod alibi;
pub mod closedform;
pub mod error;
pub mod interaction;
pub mod meanfield;
pub mod params;
pub mod sampler;
pub mod sim;
pub mod special;
pub mod stats;
pub mod testfn;
pub mod torus;

pub use error::{Error, Result};
pub use params::ModelParams;
