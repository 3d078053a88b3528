//! Numerical simulator for geometric quantum information storage in an
//! ensemble of Λ-type atoms.
//!
//! A single probe-photon mode `a` is coupled to two collective atomic
//! excitations `A` (|b⟩ → |a⟩) and `C` (|b⟩ → |c⟩). A classical control field
//! with Rabi frequency Ω(t) and slowly rotating phase φ(t) = δt steers the
//! zero-energy dark polaritons between photonic and atomic character. A full
//! control cycle writes a photonic superposition into the ensemble, reads it
//! back, and leaves each Fock component with a geometric phase that depends
//! only on the path traced in parameter space.
//!
//! Modules, bottom-up:
//!
//! - [`hilbert`]: truncated three-mode Fock space and sparse operators.
//! - [`model`]: Hamiltonian, mixing angle, polaritons, dark states, schedules.
//! - [`evolve`]: unitary time stepping, dark-subspace diagnostics, adiabaticity.
//! - [`geometry`]: connection matrix, Berry phase by three routes, parameter path.
//! - [`protocol`]: write / read / decode cycle and its report.
//! - [`exactdicke`]: finite-N symmetric-sector oracle for the bosonized model.
//!
//! All frequencies are angular frequencies with ħ = 1; the usual
//! normalization is `g_n = 1`.

pub mod error;
pub mod evolve;
pub mod exactdicke;
pub mod geometry;
pub mod hilbert;
pub mod linalg;
pub mod model;
pub mod protocol;
pub mod quad;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
