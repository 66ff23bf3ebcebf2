//! Distributed multivariate trace estimation on a line of QPUs.

pub mod bounds;
pub mod circuit;
pub mod compiler;
pub mod error;
pub mod estimator;
pub mod pauli;
pub mod resources;
pub mod sim;
pub mod state;

pub use circuit::{Basis, Circuit, Gate, QubitId, QubitKind, Step};
pub use error::{Error, Result};
