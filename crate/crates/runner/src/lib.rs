//! Configuration, experiment recipes and the time loop around the `chsav`
//! solver, with CSV and snapshot output.

pub mod config;
pub mod error;
pub mod output;
pub mod recipes;
pub mod run;

pub use config::RunConfig;
pub use error::RunError;
pub use recipes::{recipe, RECIPES};
pub use run::{run, RunSummary, Simulation};
