//! Edge-limited continuous-FEM solver for nonlinear hyperbolic conservation
//! laws (scalar advection, Burgers, compressible Euler) on periodic uniform
//! P1 meshes.
//!
//! The semi-discrete scheme writes the spatial operator as a sum of
//! two-point bar states plus a limited antidiffusive flux per edge; limiting
//! keeps nodal states inside convex invariant bounds and, in the entropy
//! modes, certifies a per-edge entropy inequality. Explicit SSP Runge–Kutta
//! integration under a graph-CFL condition transfers those per-stage
//! guarantees to the full step.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fe;
pub mod ic;
pub mod mesh;
pub mod models;
pub mod output;
pub mod quadrature;
pub mod riemann;
pub mod scheme;
pub mod state;
pub mod studies;
pub mod time;

pub use error::{Error, Result};
pub use state::State;
