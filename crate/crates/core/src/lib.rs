//! Simulation and chaos diagnostics for a periodically kicked Kerr
//! oscillator.
//!
//! Two copies of the system, kicked with strengths `eps` and `eps + d_eps`,
//! are propagated from the vacuum in a truncated Fock basis. Their overlap
//! (the fidelity) and derived series are analysed for recurrences, decay
//! laws, spectral entropy and Lyapunov exponents, and compared against the
//! classical map of the same system.

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod classical;
pub mod error;
pub mod evolution;
pub mod fock;
pub mod io;
pub mod params;
pub mod reference;
pub mod series;

pub use error::{Error, Result};
pub use evolution::{
    run_trajectory, run_trajectory_with, EvolutionEngine, TrajectoryOptions, TrajectoryRecord,
};
pub use fock::{FockVector, KerrPhaseDiagonal, KickMatrix};
pub use params::{KerrConvention, KickBasis, SystemParams};
pub use series::TimeSeries;

/// Crate version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
