//! Scattering of a quantum particle on arrays of delta-function potentials
//! in one dimension (units ħ = 2m = 1, so E = k²).
//!
//! The crate is organized around four layers:
//!
//! - [`scattering`]: spikes, arrays, overflow-safe transfer matrices, the
//!   amplitudes t, r, t′, r′, and piecewise plane-wave wavefunctions;
//! - [`resonance`]: the symmetric two-delta trap — phase-condition roots
//!   where it turns totally transparent, reflection minimization, the
//!   superposition/joining picture of those resonances, and transmission
//!   spectra;
//! - [`disorder`]: random chains of identical traps — reproducible sampling,
//!   ln |t|² ensembles, Lyapunov (localization) estimates, and the trap
//!   chain's surprising exact transparency at the single-trap resonances;
//! - [`cli`]: the `deltachain` command-line interface over all of the above.
//!
//! Shared numeric tolerances live in [`tolerances`].

pub mod cli;
pub mod disorder;
pub mod resonance;
pub mod scattering;
pub mod tolerances;
