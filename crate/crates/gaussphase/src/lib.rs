//! Gaussian-state tomography from metaplectic total phases.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod harness;
pub mod linalg;
pub mod measurement;
pub mod phase;
pub mod reconstruction;
pub mod symplectic;

pub use error::{Error, Result};
