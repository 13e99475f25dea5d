//! Pulse design and out-of-Lamb-Dicke error analysis for global
//! Mølmer–Sørensen GHZ state preparation in trapped-ion chains.
//!
//! The crate covers three layers:
//!
//! * pulse construction ([`pulse`]): rectangular, echoed and figure-eight
//!   ("lemniscate") drives, evaluable in closed form;
//! * analytic error model ([`trajectory`], [`moments`], [`perturbative`]):
//!   phase-space trajectory quadrature, leading-order Magnus coefficients
//!   and the resulting GHZ infidelity;
//! * numerical verification ([`hamiltonian`], [`tdse`], [`scan`]): the
//!   all-order Lamb-Dicke Hamiltonian evolved block by block in the
//!   collective-spin eigenbasis, with parameter scans on top.
//!
//! Conventions: the phase trajectory is
//! `α(t) = −(iη/2) ∫₀ᵗ Ω(s) e^{−iδs} ds`, the Sₓ = m block Hamiltonian is
//! `η m (Ω* e^{iδt} Â + Ω e^{−iδt} Â†)`, and the ideal gate is
//! `exp(−iπ Sₓ²/2)` (χ = π/4).

pub mod chain;
pub mod config;
pub mod error;
pub mod hamiltonian;
pub mod moments;
pub mod perturbative;
pub mod pulse;
pub mod scan;
pub mod tdse;
pub mod trajectory;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
