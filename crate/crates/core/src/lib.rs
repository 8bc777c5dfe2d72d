//! Moiré-superlattice quantum dots as spin qubits.
//!
//! The crate follows the physical pipeline: twist-angle geometry
//! ([`geometry`]), the continuum quantum-well model and its Bloch bands
//! ([`wellsolver`]), the lattice model of coupled dots ([`tightbinding`]),
//! point-group selection rules ([`symmetry`]), lifetime and linewidth
//! budgets ([`decoherence`]), coherent and dissipative qubit dynamics
//! ([`qubit`]), the optical initialization/readout protocol ([`protocol`]),
//! and candidate-material screening ([`screener`]).
//!
//! Units are fixed crate-wide: energy meV, length nm, time ps (qubit
//! dynamics) or s (lifetimes and protocol rates), temperature K, field T.

pub mod bands;
pub mod decoherence;
pub mod error;
pub mod fmt;
pub mod geometry;
pub mod linalg;
pub mod protocol;
pub mod qubit;
pub mod screener;
pub mod symmetry;
pub mod tightbinding;
pub mod units;
pub mod wellsolver;

pub use error::{Error, Result};
pub use units::PhysConstants;
