//! Qumode simulation of imaginary-time energy estimation for the lattice
//! phi^4 scalar field theory.
//!
//! One truncated bosonic mode per momentum mode of the lattice. The
//! imaginary-time loop stays inside the Gaussian state family: every
//! Trotter step multiplies in exp(-dtau gamma q^2/2) per mode, with the
//! step parameters read off quadrature moments that photon detectors can
//! reach through Gaussian probe circuits. Excited levels come from odd
//! initial states and from a Krylov treatment of the recorded iterates,
//! and everything is certified against a dense exact-diagonalization
//! oracle.
//!
//! Start from the runnable examples:
//!
//! ```text
//! cargo run --release -p cvqite --example ground_state
//! cargo run --release -p cvqite --example excited_states
//! cargo run --release -p cvqite --example mass_gap
//! cargo run --release -p cvqite --example qlanczos_levels
//! cargo run --release -p cvqite --example gate_decomposition
//! cargo run --release -p cvqite --example moment_extraction
//! cargo run --release -p cvqite --example exact_spectrum
//! cargo run --release -p cvqite --example sensitivity
//! ```
//!
//! or from the config-driven binary:
//!
//! ```text
//! cvqite qite --config presets/fig3.json --out runs/fig3
//! ```

pub mod cli;
pub mod error;
pub mod fock;
pub mod gates;
pub mod lattice;
pub mod linalg;
pub mod oracle;
pub mod qite;
pub mod qlanczos;
pub mod sensitivity;
pub mod stencil;
pub mod tol;

pub use error::{Error, Result};
pub use fock::{ModeOperator, TruncatedState, TruncationSpec};
pub use lattice::LatticeConfig;
pub use qite::{Estimator, InitialState, QiteConfig, QiteTrace};
