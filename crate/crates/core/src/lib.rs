//! Disentangling quantum autoencoder (DQAE) toolkit.
//!
//! A DQAE is a unitary `U` that maps a family of entangled `N`-qubit states
//! to tensor products of single-qubit states, so that `U†` can reassemble the
//! original state from its (loss-robust) single-qubit pieces. This crate
//! bundles everything needed to build, train, and analyze such encoders:
//!
//! - [`sim`] — dense statevector engine with purity, Pauli, Bell-projector,
//!   and fidelity observables.
//! - [`ansatz`] — parameterized circuits (hardware-efficient, free-fermion,
//!   Ising-evolution) with exact derivative states and the parameter-shift
//!   rule.
//! - [`trainer`] — dataset generation, purity cost functions, Adam/GD
//!   training, and the gradient-variance study.
//! - [`dqfim`] — data quantum Fisher information metric, numerical rank, and
//!   the overparameterization/generalization thresholds `M_c` and `L_c`.
//! - [`clifford`] — stabilizer-tableau simulation and a Metropolis annealer
//!   that learns Clifford disentanglers for stabilizer data.
//! - [`loss`] — qubit-loss channel analytics (closed forms, copy-count
//!   search) and Monte-Carlo transport simulation.
//! - [`capacity`] — the increased-capacity variant that compresses `N+K`
//!   qubits into `N` product qubits plus `K` classical bits.
//! - [`selfcheck`] — the built-in verification suite used by the CLI
//!   `selftest` command and the acceptance test target.
//!
//! Qubit ordering is little-endian throughout: amplitude index bit `j`
//! (bit 0 = least significant) addresses qubit `j`.

pub mod ansatz;
pub mod capacity;
pub mod clifford;
pub mod dqfim;
pub mod error;
pub mod fit;
pub mod loss;
pub mod rng;
pub mod selfcheck;
pub mod sim;
pub mod trainer;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use sim::StateVector;

/// Toolkit version string recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
