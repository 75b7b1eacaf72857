use serde::{Deserialize, Serialize};

use crate::domain::Model;
use crate::error::{Error, ModelError, Result};

/// Output transform applied to the pre-activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    #[default]
    Identity,
    Sigmoid,
}

impl Link {
    pub fn apply(self, value: f64) -> f64 {
        match self {
            Link::Identity => value,
            Link::Sigmoid => 1.0 / (1.0 + (-value).exp()),
        }
    }
}

/// `link(w·x + b)`. Its weights are the exact explanation of its predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub link: Link,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64, link: Link) -> Self {
        LinearModel {
            weights,
            bias,
            link,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .weights
            .iter()
            .chain([&self.bias])
            .any(|w| !w.is_finite())
        {
            return Err(Error::InvalidArgument(
                "linear model parameters must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.weights.len() {
            return Err(ModelError::Shape {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        let z: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        Ok(self.link.apply(z))
    }
}

impl Model for LinearModel {
    fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }
}
