//! Pauli and generalized Pauli channels: simulation, convex least-squares
//! tomography, direction estimation and Fisher-information experiment design.

pub mod channel;
pub mod design;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod qstate;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
