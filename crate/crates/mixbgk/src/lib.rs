//! Solver library for the multispecies BGK kinetic equation.
//!
//! The crate discretises phase space with a Cartesian discrete-velocity grid
//! and a first-order upwind finite-volume transport scheme, evaluates the
//! multispecies BGK relaxation operator, and advances the semi-discrete
//! system with forward Euler, projective forward Euler, or a two-level
//! telescopic projective ladder. A finite-difference Jacobian module
//! estimates operator spectra and validates or suggests ladder parameters
//! against the asymptotic stability disks, and an exact Riemann solver for
//! the two-fluid shock tube serves as the hydrodynamic-limit oracle.

pub mod collision;
pub mod config;
pub mod error;
pub mod grid;
pub mod integrate;
pub mod moments;
pub mod output;
pub mod riemann;
pub mod scenario;
pub mod spectra;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{cfl_max_step, DistributionField, FieldShape, MixtureParams, SpatialGrid, VelocityGrid};
