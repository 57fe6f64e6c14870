//! Lattice-based server-aided revocable predicate encryption.

pub mod error;
pub mod gauss;
#[cfg(feature = "test-hooks")]
pub mod hooks;
#[cfg(not(feature = "test-hooks"))]
mod hooks;
pub mod params;
pub mod pe;
pub mod srpe;
pub mod trapdoor;
pub mod tree;
pub mod wire;
pub mod zq;

pub use error::{Error, Result};
