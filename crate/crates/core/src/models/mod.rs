//! Reference models and clients for external ones.

mod external;
mod linear;
mod mlp;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use external::{
    HttpModel, PredictRequest, PredictResponse, SubprocessModel, DEFAULT_HTTP_TIMEOUT,
};
pub use linear::{LinearModel, Link};
pub use mlp::{Activation, DenseLayer, MlpModel};

use crate::domain::Model;
use crate::error::{Error, ModelError, Result};

/// A model definition that can live in a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelSpec {
    Linear(LinearModel),
    Mlp(MlpModel),
}

impl ModelSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let spec: ModelSpec = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        spec.validate()
            .map_err(|e| Error::schema(path, None, None, e.to_string()))?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Linear(m) => m.validate(),
            ModelSpec::Mlp(m) => m.validate(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ModelSpec::Linear(m) => m.weights.len(),
            ModelSpec::Mlp(m) => m.input_dim(),
        }
    }
}

impl Model for ModelSpec {
    fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        match self {
            ModelSpec::Linear(m) => m.predict_batch(rows),
            ModelSpec::Mlp(m) => m.predict_batch(rows),
        }
    }
}

/// Where predictions come from, as written on the command line:
/// `builtin:<spec.json>`, `http:<url>` (or a bare `http://` URL) and
/// `exec:<command>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSource {
    Builtin(std::path::PathBuf),
    Http(String),
    Exec(String),
}

impl std::str::FromStr for ModelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(ModelSource::Http(s.to_owned()));
        }
        match s.split_once(':') {
            Some(("builtin", path)) if !path.is_empty() => Ok(ModelSource::Builtin(path.into())),
            Some(("http", url)) if !url.is_empty() => Ok(ModelSource::Http(url.to_owned())),
            Some(("exec", cmd)) if !cmd.trim().is_empty() => Ok(ModelSource::Exec(cmd.to_owned())),
            _ => Err(Error::InvalidArgument(format!(
                "model `{s}` must be builtin:<spec.json>, http:<url> or exec:<command>"
            ))),
        }
    }
}

impl std::fmt::Display for ModelSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelSource::Builtin(p) => write!(f, "builtin:{}", p.display()),
            ModelSource::Http(u) => write!(f, "http:{u}"),
            ModelSource::Exec(c) => write!(f, "exec:{c}"),
        }
    }
}

impl ModelSource {
    /// Opens the model. External models get `retries` extra attempts per batch.
    pub fn open(&self, retries: u32) -> Result<Box<dyn Model>> {
        Ok(match self {
            ModelSource::Builtin(path) => Box::new(ModelSpec::load(path)?),
            ModelSource::Http(url) => Box::new(HttpModel::new(url.clone()).with_retries(retries)),
            ModelSource::Exec(cmd) => Box::new(
                SubprocessModel::spawn(cmd)
                    .map_err(|e| Error::model(format!("starting `{cmd}`"), e))?
                    .with_retries(retries),
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_model_sources() {
        assert_eq!(
            "builtin:m.json".parse::<ModelSource>().unwrap(),
            ModelSource::Builtin("m.json".into())
        );
        assert_eq!(
            "http://localhost:9/predict".parse::<ModelSource>().unwrap(),
            ModelSource::Http("http://localhost:9/predict".into())
        );
        assert_eq!(
            "http:http://h/predict".parse::<ModelSource>().unwrap(),
            ModelSource::Http("http://h/predict".into())
        );
        assert_eq!(
            "exec:python3 model.py".parse::<ModelSource>().unwrap(),
            ModelSource::Exec("python3 model.py".into())
        );
        assert!("file:x".parse::<ModelSource>().is_err());
        assert!("builtin:".parse::<ModelSource>().is_err());
    }

    #[test]
    fn spec_json_is_tagged() {
        let spec: ModelSpec = serde_json::from_str(
            r#"{"type": "linear", "weights": [0.2, 0.05, -0.35], "bias": 0, "link": "sigmoid"}"#,
        )
        .unwrap();
        assert!(matches!(spec, ModelSpec::Linear(_)));
        assert_eq!(spec.input_dim(), 3);
        let p = spec.predict(&[0.8, 0.6, 0.9]).unwrap();
        assert!((p - 0.469).abs() < 1e-3);
    }
}
