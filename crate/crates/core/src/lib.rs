//! Simulation and analysis of degenerate Raman cooling in an optical trap.
//!
//! The crate is organized bottom-up:
//!
//! - [`trap`]: constants, trap and field records, single-particle quantities.
//! - [`quantum`]: operators and states on the spin ⊗ Fock space.
//! - [`dynamics`]: master-equation and rate-equation models, scans, lifetimes.
//! - [`spectroscopy`]: forward model of the sideband spectrum and thermometry.
//! - [`signal`]: photon click streams and Welch spectral estimates.
//! - [`fitting`]: damped least squares and the spectrum fit.

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod linalg;
pub mod quantum;
pub mod rng;
pub mod signal;
pub mod spectroscopy;
pub mod trap;

pub use error::{Error, Result};
pub use trap::{Axis, FieldConfig, LaserConfig, TrapConfig};
