use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

pub const TOOL_NAME: &str = "truthlens";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] truthlens::Error),

    #[error("{0}")]
    Usage(String),

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// `{"error": {"kind", "message", ...}}`, with `path`, `line` and `field`
    /// for schema errors.
    pub fn to_json(&self) -> Value {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.to_string(),
        });
        match self {
            CliError::Core(truthlens::Error::Schema {
                path, line, field, ..
            }) => {
                body["path"] = json!(path.display().to_string());
                body["line"] = json!(line);
                body["field"] = json!(field);
            }
            CliError::Core(truthlens::Error::Io { path, .. }) | CliError::Write { path, .. } => {
                body["path"] = json!(path.display().to_string());
            }
            _ => {}
        }
        json!({ "error": body })
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "usage",
            CliError::Write { .. } => "io",
        }
    }
}

/// Every output document: tool identity, command, effective config, payload.
#[derive(Serialize)]
pub struct Document<'a, T: Serialize> {
    pub tool: Tool,
    pub command: &'a str,
    pub config: Value,
    #[serde(flatten)]
    pub payload: T,
}

#[derive(Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl<'a, T: Serialize> Document<'a, T> {
    pub fn new(command: &'a str, config: Value, payload: T) -> Self {
        Document {
            tool: Tool {
                name: TOOL_NAME,
                version: TOOL_VERSION,
            },
            command,
            config,
            payload,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Usage(format!("cannot serialize output: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Write {
            path: path.to_owned(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

/// Writes the JSON document and, for commands with one, the text summary.
/// The summary goes to `summary` when given, otherwise to stdout if the JSON
/// went to a file.
pub fn emit(
    out: Option<&Path>,
    json: &str,
    summary: Option<(&str, Option<&Path>)>,
) -> CliResult<()> {
    write_text(out, json)?;
    if let Some((text, path)) = summary {
        match (path, out) {
            (Some(path), _) => write_text(Some(path), text)?,
            (None, Some(_)) => write_text(None, text)?,
            (None, None) => {}
        }
    }
    Ok(())
}
