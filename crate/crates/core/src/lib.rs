pub mod analysis;
pub mod audit;
pub mod config;
pub mod error;
pub mod format;
pub mod grid;
pub mod harness;
pub mod initial;
pub mod line;
pub mod noise;
pub mod rng;
pub mod stepper;
pub mod subflow;

pub use error::{Error, Result};
