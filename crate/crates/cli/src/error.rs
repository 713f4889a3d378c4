use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{source_name}{}: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Syntax {
        source_name: String,
        line: Option<usize>,
        message: String,
    },

    #[error("key `{key}`{}: {message}", location.as_ref().map(|(f, l)| format!(" ({f}:{l})")).unwrap_or_default())]
    Schema {
        key: String,
        location: Option<(String, usize)>,
        message: String,
    },

    #[error("unknown preset `{0}`; run `ramsey list-presets` for the available names")]
    UnknownPreset(String),

    #[error("no configuration: pass a config file, --preset, or both")]
    Missing,
}

impl ConfigError {
    pub fn syntax(source_name: &str, line: Option<usize>, message: &str) -> Self {
        ConfigError::Syntax {
            source_name: source_name.to_string(),
            line,
            message: message.trim().to_string(),
        }
    }

    pub fn key(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Schema {
            key: key.to_string(),
            location: None,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("numerical failure in {operation}: {source}")]
    Numerical {
        operation: String,
        #[source]
        source: ramsey_core::Error,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub fn numerical(operation: impl Into<String>) -> impl FnOnce(ramsey_core::Error) -> CliError {
        let operation = operation.into();
        move |source| CliError::Numerical { operation, source }
    }
}
