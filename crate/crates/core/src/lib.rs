//! Gaussian covariance-matrix models of an optomechanical cavity under
//! coherent feedback: drift/diffusion assembly, steady states, transient
//! propagation, delayed loops and the cooling, entanglement, squeezing and
//! state-transfer drivers built on them.

pub mod delay;
pub mod dynamics;
pub mod error;
pub mod feedback;
pub mod gaussian;
pub mod model;
pub mod protocols;
pub mod quadrature;
pub mod table;
pub mod verify;

pub use error::{Error, Result};
