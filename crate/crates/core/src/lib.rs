//! Bayesian operational-risk models: independent, shared-factor and
//! Hawkes-AR-Gumbel loss models, a synthetic panel generator, NUTS
//! inference and posterior-predictive tail risk.

pub mod cli;
pub mod copula;
pub mod cvar;
pub mod distributions;
pub mod error;
pub mod inference;
pub mod io;
pub mod models;
pub mod simulator;

pub use error::{Error, Result};
