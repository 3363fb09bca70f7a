//! Std companion to `chainquad-core`: scenario files, trajectory export,
//! text reports, and the randomized validation suites behind the `chainquad`
//! command-line tool.

pub mod export;
pub mod report;
pub mod scenario;
pub mod validate;

use chainquad_core::sim::SimError;

#[derive(thiserror::Error, Debug)]
pub enum CliError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}
