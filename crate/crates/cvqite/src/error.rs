//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid truncation: {0}")]
    InvalidSpec(String),

    #[error("operator/state defined on different spaces: {0} vs {1}")]
    SpecMismatch(String, String),

    #[error("mode index {mode} out of range for {n_modes} modes")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("state norm too small to normalize (norm^2 = {0:.3e})")]
    ZeroNorm(f64),

    #[error("non-finite values encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid lattice parameters: {0}")]
    InvalidLattice(String),

    #[error(
        "probability mass {mass:.3e} in the top two Fock levels of mode {mode} \
         exceeds the truncation guard {guard:.1e}"
    )]
    TruncationGuard { mode: usize, mass: f64, guard: f64 },

    #[error("quadrature-monomial form unsupported: {0}")]
    MonomialUnsupported(String),

    #[error("invalid Krylov selection: {0}")]
    InvalidSelection(String),

    #[error("overlap matrix is fully degenerate; the selected states are linearly dependent")]
    DegenerateOverlap,

    #[error("variational scan did not bracket a minimum inside [{lo}, {hi}]")]
    UnbracketedMinimum { lo: f64, hi: f64 },

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    ConfigParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
