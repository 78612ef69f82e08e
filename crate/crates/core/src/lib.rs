//! Simulation, moment computation, estimation and testing for a pure-jump
//! log-price model driven by a Cox process with fractional-Gaussian
//! log-intensity.

pub mod aggregate;
pub mod cli;
pub mod error;
pub mod estimate;
pub mod fgn;
pub mod inference;
pub mod moments;
pub mod quadrature;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
