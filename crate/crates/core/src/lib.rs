//! Space-time finite elements for the time-fractional wave equation
//!
//! ```text
//! D^γ_{0+}(u - u₀ - t u₁) - Δu = f   in Ω × (0, T),   1 < γ < 2,
//! ```
//!
//! on the unit square, with continuous piecewise-polynomial trial functions
//! and discontinuous test functions in time, Lagrange triangles in space, and
//! optional graded temporal grids.

pub mod error;
pub mod fracops;
pub mod harness;
pub mod problems;
pub mod quadrature;
pub mod spacefem;
pub mod stepper;
pub mod temporal_basis;
pub mod timegrid;

pub use error::{Error, Result};
pub use timegrid::{sigma_star, TimeGrid};
