//! Text formats for activations, correlations and report tables.

pub mod activations;
pub mod correlation;
pub mod tables;
