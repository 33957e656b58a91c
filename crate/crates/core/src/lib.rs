//! Immersed-boundary fluid-structure interaction on a staggered Cartesian
//! grid with finite-element structural models.

pub mod bench;
pub mod coupling;
pub mod elasticity;
pub mod error;
pub mod fem;
pub mod grid;
pub mod ins;
pub mod kernels;

pub use error::{Error, Result};
