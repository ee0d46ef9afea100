//! Maximum-likelihood reconstruction of quantum states of a single optical
//! mode in a truncated Fock space.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod estimator;
pub mod hilbert;
pub mod likelihood;
pub mod measurement;

pub use error::{Error, Result};
