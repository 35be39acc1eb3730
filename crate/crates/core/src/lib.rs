//! Optimization landscapes of Max-Cut under commuting and noncommuting
//! parametrized ansaetze.

pub mod analytic;
pub mod ansatz;
pub mod barren;
pub mod error;
pub mod experiment;
pub mod gf2;
pub mod graph;
pub mod landscape;
pub mod optimize;
pub mod seeds;
pub mod statevector;

pub use error::{Error, Result};
