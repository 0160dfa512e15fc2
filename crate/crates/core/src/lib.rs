//! Simulation and fitting toolkit for level pass and churn rates of a
//! level-based puzzle game.
//!
//! A population of simulated players with skill, persistence and boredom
//! attributes plays through a level progression; players churn when they fail
//! too often or get bored after passing. Level difficulties come from a linear
//! regression on AI gameplay statistics, and the ten simulation parameters are
//! fitted to observed rates with CMA-ES.

pub mod cmaes;
pub mod config;
pub mod difficulty;
pub mod error;
pub mod evaluation;
pub mod fitting;
pub mod io;
pub mod population;
pub mod report;
pub mod rng;
pub mod series;
pub mod synthetic;

pub use error::{Error, Result};
