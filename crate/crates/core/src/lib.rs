//! Auction experiment simulation: mechanisms, value environments, scripted
//! and model-backed bidders, benchmark oracles, the experiment runner and
//! the statistics used to analyse transcripts.

pub mod agents;
pub mod analysis;
pub mod domain;
pub mod scalar;

pub use domain::*;
pub use scalar::{Rational, Real, Scalar};
pub mod environments;
pub mod mechanisms;
pub mod oracles;
pub mod rng;
pub mod runner;
