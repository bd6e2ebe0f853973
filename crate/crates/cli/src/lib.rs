//! Pipeline behind the `flprint` binary: synthesize a corpus, extract and
//! rank features, train, evaluate and predict.

pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
