use std::io;
use std::path::PathBuf;

use crate::config::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("config rule `{rule}` violated: {message}")]
    Rule { rule: &'static str, message: String },
    #[error("{scenario} scenario failed: {source}")]
    Scenario {
        scenario: Scenario,
        #[source]
        source: nonlocal_aggregation::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}
