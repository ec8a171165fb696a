//! Phase-space numerics for trapped fermions.

pub mod density;
pub mod diagnostics;
pub mod error;
pub mod grids;
pub mod husimi;
pub mod norms;
pub mod orbitals;
pub mod thomas_fermi;
pub mod wigner;

pub use error::{Error, Result};
