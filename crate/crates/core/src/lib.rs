//! Exact-diagonalization toolkit for periodically driven spin-1/2 chains in a
//! gradient magnetic field.
//!
//! Energies are in MHz and times in ns; evolution for time `t` under `H`
//! accumulates the phase `2 pi 1e-3 H t` (see [`models::PHASE_PER_MHZ_NS`]).

pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod linalg;
pub mod models;
pub mod spinops;
pub mod swtheory;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
