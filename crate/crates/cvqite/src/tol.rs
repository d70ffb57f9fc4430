//! Centralized numerical tolerances.
//!
//! Every threshold used by the library lives here so that a tolerance is
//! never an ad-hoc magic number at its point of use.

/// Construction-time identities: norms after `normalize`, embedding
/// homomorphism, vacuum moments. Essentially machine precision with a
/// small accumulation allowance.
pub const CONSTRUCTION: f64 = 1e-12;

/// Algebraic identities evaluated away from the truncation boundary:
/// hermiticity, commutators, parity conservation, transition amplitudes.
pub const ALGEBRAIC: f64 = 1e-10;

/// Unitarity of gates restricted to the low-photon probe subspace.
pub const UNITARITY: f64 = 1e-8;

/// Equivalence of the squeezer/beamsplitter decomposition against the
/// directly exponentiated two-mode gate, on the probe subspace.
pub const DECOMPOSITION: f64 = 1e-6;

/// Probability mass allowed in the top two Fock levels of any mode.
/// Runs abort beyond this: truncation artifacts would corrupt moments.
/// Calibrated against the reference parameter sets at cutoff 10, whose
/// soft-mode odd-sector states legitimately hold a little over 1e-3 here
/// at convergence; genuinely under-resolved runs sit orders of magnitude
/// higher and still abort.
pub const TRUNCATION_GUARD: f64 = 5e-3;

/// Variance floor below which the Gaussian update is undefined and the
/// step parameter is forced to zero.
pub const VARIANCE_FLOOR: f64 = 1e-10;

/// Overlap-matrix eigenvalues below this are deflated before solving the
/// generalized eigenvalue problem.
pub const DEFLATION: f64 = 1e-8;

/// Default energy-convergence criterion |E[s] - E[s-1]| for the
/// imaginary-time loop.
pub const CONVERGENCE: f64 = 1e-6;

/// States with a squared norm below this cannot be normalized.
pub const MIN_NORM_SQ: f64 = 1e-24;

/// Scale-free floor for treating a matrix element as exactly zero when
/// deciding structural questions (sector splits, monomial support).
pub const STRUCTURAL_ZERO: f64 = 1e-13;
