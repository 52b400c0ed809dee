//! Stabilizer Rényi entropy of the two-cluster (Maldacena–Qi) SYK model.
//!
//! - [`exact_reference`]: finite-N exact diagonalization, Pauli-basis SRE.
//! - [`thermal_solver`]: large-N Schwinger–Dyson saddles of the thermal path integral.
//! - [`sre_solver`]: large-N saddles of the four-replica SRE path integral.
//! - [`sweep_driver`]: β sweeps, branch selection, transition location.

pub mod domain;
pub mod error;
pub mod exact_reference;
pub mod numerics;
pub mod sre_solver;
pub mod sweep_driver;
pub mod thermal_solver;

pub use domain::{GridPolicy, ModelParams, SectorLabel, TauGrid};
pub use error::{Error, Result};
