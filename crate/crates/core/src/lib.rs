pub mod cli;
pub mod error;
pub mod experiments;
pub mod field;
pub mod matrix;
pub mod moments;
pub mod nc;
pub mod profile;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};
