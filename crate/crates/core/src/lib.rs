//! Scenario authoring, perturbation, simulation and scoring for EuroNCAP
//! car-to-car rear AEB tests.

pub mod dsl;
pub mod evaluation;
pub mod harness;
pub mod protocol;
pub mod sim;
pub mod units;
pub mod variation;
