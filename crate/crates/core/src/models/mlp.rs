use serde::{Deserialize, Serialize};

use super::Link;
use crate::domain::Model;
use crate::error::{Error, ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(0.0),
        }
    }
}

/// `weights[out][in]`, `bias[out]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

/// Feed-forward network; the activation follows every layer but the last,
/// whose single output goes through the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub link: Link,
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.layers
            .first()
            .and_then(|l| l.weights.first())
            .map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let shape_err = |msg: String| Err(Error::InvalidArgument(format!("mlp: {msg}")));
        if self.layers.is_empty() {
            return shape_err("no layers".into());
        }
        let mut width = self.input_dim();
        if width == 0 {
            return shape_err("first layer has no inputs".into());
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.weights.is_empty() || layer.weights.len() != layer.bias.len() {
                return shape_err(format!(
                    "layer {i} has {} weight rows and {} biases",
                    layer.weights.len(),
                    layer.bias.len()
                ));
            }
            if let Some(r) = layer.weights.iter().position(|row| row.len() != width) {
                return shape_err(format!("layer {i} row {r} expects {width} inputs"));
            }
            let finite = layer
                .weights
                .iter()
                .flatten()
                .chain(&layer.bias)
                .all(|v| v.is_finite());
            if !finite {
                return shape_err(format!("layer {i} has non-finite parameters"));
            }
            width = layer.weights.len();
        }
        if width != 1 {
            return shape_err(format!("last layer has {width} outputs, expected 1"));
        }
        Ok(())
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.input_dim() {
            return Err(ModelError::Shape {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let last = self.layers.len() - 1;
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h);
            if i != last {
                h.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
        Ok(self.link.apply(h[0]))
    }
}

impl Model for MlpModel {
    fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }
}
