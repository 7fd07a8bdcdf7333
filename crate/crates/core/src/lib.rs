//! Security analysis of quantum key distribution with d-level systems.
//!
//! The crate computes the error-rate thresholds of the two-basis and
//! (d+1)-basis qudit protocols against cloning-based individual attacks and
//! against coherent attacks, and cross-checks every closed form against an
//! explicit state-vector construction of the attack.
//!
//! Module map:
//!
//! * [`hilbert`] kets, the Fourier-dual basis, Bell states and the
//!   shift/phase error group.
//! * [`cloner`] the two cloning-machine families and their fidelities.
//! * [`infotheory`] Bob's and Eve's mutual information, key-rate and
//!   uncertainty bounds.
//! * [`bounds`] threshold solvers and information-curve scans.
//! * [`oracle`] brute-force state-vector checks and the Monte Carlo
//!   protocol simulator.
//! * [`verify`] the oracle-vs-closed-form suite used by the CLI.

pub mod bounds;
pub mod cloner;
mod error;
pub mod hilbert;
pub mod infotheory;
pub mod oracle;
pub mod verify;

pub use bounds::{BoundKind, ThresholdResult};
pub use cloner::{AmplitudeMatrix, ClonerKind, ClonerParams, FidelityReport};
pub use error::{QkdError, Result};
pub use infotheory::{InfoPoint, Protocol};
pub use oracle::{JointDistribution, JointState, SimConfig, SimReport};

/// Tolerance for exact algebraic identities.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for quantities that pass through an eigendecomposition or a
/// root solver.
pub const NUMERIC_TOL: f64 = 1e-9;
