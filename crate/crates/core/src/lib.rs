//! Normalized stochastic first-order methods under a sample-dependent
//! noise model, with schedules, theoretical bounds and an experiment harness.

pub mod acceptance;
pub mod analysis;
pub mod cli;
pub mod error;
pub mod harness;
pub mod objectives;
pub mod optimizers;
pub mod oracle;
pub mod properties;
pub mod schedules;
pub mod vecops;

pub use error::{Error, Result};
