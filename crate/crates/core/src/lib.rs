//! Numerical and symbolic toolkit for Goldman-type brackets of Wilson-loop
//! traces, including exotic G2 observables built from octonion operators.

pub mod casimir;
pub mod error;
pub mod exotic;
pub mod goldman;
pub mod lie_bases;
pub mod matrix;
pub mod network;
pub mod octonion;
pub mod report;
pub mod rng;
pub mod suite;
pub mod symbolic;

pub use error::{Error, Result};
