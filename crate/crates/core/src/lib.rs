pub mod atlas;
pub mod cli;
pub mod error;
pub mod graphcut;
pub mod grid;
pub mod imageops;
pub mod pipeline;
pub mod registration;
pub mod stats;
pub mod validation;
pub mod volume;

pub use error::{Error, Result};
