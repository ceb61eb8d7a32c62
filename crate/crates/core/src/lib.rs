//! Open-system dynamics of non-Hermitian Hamiltonians coupled to a thermal bath.

pub mod bath;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod generator;
pub mod linalg;
pub mod models;
pub mod pauli;

pub use error::{Error, Result};
