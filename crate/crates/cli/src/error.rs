use std::fmt;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    /// A library failure, optionally tagged with the task it happened in.
    #[error("{}{source}", context.as_ref().map(|c| format!("{c}: ")).unwrap_or_default())]
    Core {
        context: Option<String>,
        #[source]
        source: drselect_core::Error,
    },
}

impl CliError {
    pub fn config(message: impl fmt::Display) -> Self {
        CliError::Config(message.to_string())
    }

    /// 2 for configuration problems, 4 for numeric failures, 3 for
    /// everything wrong with the data.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core { source, .. } if source.is_numeric() => 4,
            CliError::Core { .. } => 3,
        }
    }
}

impl From<drselect_core::Error> for CliError {
    fn from(source: drselect_core::Error) -> Self {
        CliError::Core { context: None, source }
    }
}

/// Names the (method, model, dataset) triple a failure belongs to.
pub(crate) trait TaskContext<T> {
    fn task(self, method: &str, model: &str, dataset: &str) -> Result<T>;
}

impl<T> TaskContext<T> for std::result::Result<T, drselect_core::Error> {
    fn task(self, method: &str, model: &str, dataset: &str) -> Result<T> {
        self.map_err(|source| CliError::Core {
            context: Some(format!("method {method}, model {model}, dataset {dataset}")),
            source,
        })
    }
}

impl<T> TaskContext<T> for Result<T> {
    fn task(self, method: &str, model: &str, dataset: &str) -> Result<T> {
        self.map_err(|e| match e {
            CliError::Core { context: None, source } => CliError::Core {
                context: Some(format!("method {method}, model {model}, dataset {dataset}")),
                source,
            },
            other => other,
        })
    }
}
