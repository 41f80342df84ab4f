pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod harness;
pub mod model;
pub mod optim;
pub mod preprocess;
pub mod rng;
pub mod ssl;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
