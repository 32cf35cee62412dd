use std::path::{Path, PathBuf};

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid config key `{key}`: {reason}{}", file.as_ref().map(|p| format!(" (in {})", p.display())).unwrap_or_default())]
    Config { key: String, reason: String, file: Option<PathBuf> },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed CSV: {reason}")]
    Csv { path: PathBuf, reason: String },
    #[error("{} invariant suite(s) failed: {}", failed.len(), failed.join("; "))]
    Validation { failed: Vec<String> },
    #[error(transparent)]
    Core(#[from] rotcf_core::Error),
}

impl SimError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::Config { key: key.into(), reason: reason.into(), file: None }
    }

    /// Attaches the file a config error came from.
    pub fn in_file(self, path: &Path) -> Self {
        match self {
            SimError::Config { key, reason, file: None } => {
                SimError::Config { key, reason, file: Some(path.to_path_buf()) }
            }
            other => other,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SimError::Config { .. } => "config",
            SimError::Io { .. } => "io",
            SimError::Csv { .. } => "csv",
            SimError::Validation { .. } => "validation",
            SimError::Core(_) => "numerical",
        }
    }

    /// One-line JSON object for machine consumption.
    pub fn summary(&self) -> String {
        let mut v = json!({ "error": { "kind": self.kind(), "message": self.to_string() } });
        match self {
            SimError::Config { key, file, .. } => {
                v["error"]["key"] = json!(key);
                if let Some(f) = file {
                    v["error"]["path"] = json!(f.display().to_string());
                }
            }
            SimError::Io { path, .. } | SimError::Csv { path, .. } => {
                v["error"]["path"] = json!(path.display().to_string());
            }
            SimError::Validation { failed } => v["error"]["failed"] = json!(failed),
            SimError::Core(_) => {}
        }
        v.to_string()
    }
}
