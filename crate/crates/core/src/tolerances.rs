//! Numerical tolerances used across the crate, collected in one place.
//!
//! All values are absolute unless a caller explicitly documents otherwise.

/// Flux conservation and SU(1,1) structure checks: |t|² + |r|² = 1,
/// m22 = conj(m11), m21 = conj(m12).
pub const UNITARITY_ABS: f64 = 1e-10;

/// Agreement between transfer-matrix amplitudes and the closed-form
/// single-delta amplitudes.
pub const ORACLE_EQUIVALENCE_ABS: f64 = 1e-12;

/// Convergence tolerance in k for bracketed root finding and bracketed
/// reflection minimization.
pub const ROOT_TOL_K: f64 = 1e-12;

/// A resonance peak must transmit at least 1 − PEAK_TRANSMISSION_DEFECT.
pub const PEAK_TRANSMISSION_DEFECT: f64 = 1e-10;

/// Joining residual below this value identifies a resonance.
pub const JOIN_RESIDUAL_RESONANT: f64 = 1e-10;

/// Transparency defect allowed for random trap chains driven exactly at a
/// resonance wavenumber: min |t|² ≥ 1 − TRANSPARENCY_DEFECT.
pub const TRANSPARENCY_DEFECT: f64 = 1e-8;

/// Agreement between one-shot and split-and-composed log-transmission
/// evaluations of the same chain.
pub const SPLIT_COMPOSE_ABS: f64 = 1e-8;

/// Agreement between composed transfer matrices and a direct solution of the
/// full matching-condition linear system.
pub const LINEAR_SYSTEM_ORACLE_ABS: f64 = 1e-10;

/// A stored (rescaled) |m22| below this floor is treated as numerically
/// degenerate; unreachable for real wavenumbers, kept as a guard.
pub const M22_DEGENERACY_FLOOR: f64 = 1e-150;
