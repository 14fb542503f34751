//! Error type mapping every failure onto the two non-zero exit codes:
//! 1 for validation problems (bad config, bad input data, missing stage
//! artifacts), 2 for I/O failures.

use std::fmt;
use std::path::Path;

use bridgewatch::ingest::IngestError;
use bridgewatch::network::NetworkError;
use bridgewatch::sentiment::SentimentError;
use bridgewatch::synth::SynthError;
use bridgewatch::topics::TopicError;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    pub fn io_at(path: &Path, err: impl fmt::Display) -> CliError {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Io(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

impl From<IngestError> for CliError {
    fn from(err: IngestError) -> Self {
        match err {
            IngestError::Io { .. } => CliError::Io(err.to_string()),
            IngestError::Line { .. } => CliError::Validation(err.to_string()),
        }
    }
}

impl From<TopicError> for CliError {
    fn from(err: TopicError) -> Self {
        match err {
            TopicError::Io { .. } => CliError::Io(err.to_string()),
            _ => CliError::Validation(err.to_string()),
        }
    }
}

impl From<SentimentError> for CliError {
    fn from(err: SentimentError) -> Self {
        match err {
            SentimentError::Io { .. } => CliError::Io(err.to_string()),
            _ => CliError::Validation(err.to_string()),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(err: NetworkError) -> Self {
        match err {
            NetworkError::Io { .. } => CliError::Io(err.to_string()),
            NetworkError::Malformed { .. } => CliError::Validation(err.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(err: SynthError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Io(err.to_string())
    }
}
