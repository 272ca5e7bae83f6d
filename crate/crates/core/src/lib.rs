pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod resampling;
pub mod rng;
pub mod samplers;
pub mod srn;
pub mod transport;

pub use error::{Error, Result};
