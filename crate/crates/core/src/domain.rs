//! Domain types shared by every stage of an evaluation.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ModelError, Result};

/// The kind of data an instance holds. Decides how features are altered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Tabular,
    /// Presence/weight vector over token positions; 0 means absent.
    Text,
    /// Groups are superpixels.
    Image,
    /// Every (sensor, time step) value is its own feature.
    #[serde(rename = "timeseries_timestep")]
    TimeSeriesPerTimestep,
    /// Every group is one sensor across the whole window.
    #[serde(rename = "timeseries_sensor")]
    TimeSeriesPerSensor,
}

impl DataKind {
    /// Whether explanation features must be single raw values.
    pub fn requires_singletons(self) -> bool {
        matches!(
            self,
            DataKind::Tabular | DataKind::Text | DataKind::TimeSeriesPerTimestep
        )
    }

    pub fn is_time_series(self) -> bool {
        matches!(
            self,
            DataKind::TimeSeriesPerTimestep | DataKind::TimeSeriesPerSensor
        )
    }
}

/// Grouping of raw input coordinates into explanation features.
///
/// Group `j` is feature id `j`. Groups are non-empty and pairwise disjoint,
/// and every raw index is below `raw_dim`; raw indices need not all be covered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureMap {
    raw_dim: usize,
    groups: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
}

impl FeatureMap {
    pub fn new(raw_dim: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (id, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::InvalidFeatureMap(format!("group {id} is empty")));
            }
            for &raw in group {
                if raw >= raw_dim {
                    return Err(Error::InvalidFeatureMap(format!(
                        "group {id} references raw index {raw} outside 0..{raw_dim}"
                    )));
                }
                if !seen.insert(raw) {
                    return Err(Error::InvalidFeatureMap(format!(
                        "raw index {raw} appears in more than one group"
                    )));
                }
            }
        }
        Ok(FeatureMap {
            raw_dim,
            groups,
            names: None,
        })
    }

    /// One singleton group per raw coordinate.
    pub fn identity(raw_dim: usize) -> Self {
        FeatureMap {
            raw_dim,
            groups: (0..raw_dim).map(|i| vec![i]).collect(),
            names: None,
        }
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.groups.len() {
            return Err(Error::InvalidFeatureMap(format!(
                "{} names for {} groups",
                names.len(),
                self.groups.len()
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn raw_dim(&self) -> usize {
        self.raw_dim
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, feature_id: usize) -> Result<&[usize]> {
        self.groups
            .get(feature_id)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownFeature(feature_id))
    }

    pub fn name(&self, feature_id: usize) -> Option<&str> {
        self.names
            .as_ref()
            .and_then(|names| names.get(feature_id))
            .map(String::as_str)
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Checks the shape constraints a data kind places on its groups.
    pub fn check_kind(&self, kind: DataKind) -> Result<()> {
        if kind.requires_singletons() {
            if let Some(id) = self.groups.iter().position(|g| g.len() != 1) {
                return Err(Error::InvalidFeatureMap(format!(
                    "{kind:?} data needs singleton groups, group {id} has {} members",
                    self.groups[id].len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct FeatureMapRepr {
    raw_dim: usize,
    groups: Vec<Vec<usize>>,
    #[serde(default)]
    names: Option<Vec<String>>,
}

impl<'de> Deserialize<'de> for FeatureMap {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = FeatureMapRepr::deserialize(deserializer)?;
        let map = FeatureMap::new(repr.raw_dim, repr.groups).map_err(serde::de::Error::custom)?;
        match repr.names {
            Some(names) => map.with_names(names).map_err(serde::de::Error::custom),
            None => Ok(map),
        }
    }
}

/// One input to explain.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    id: String,
    values: Vec<f64>,
    kind: DataKind,
    map: Arc<FeatureMap>,
}

impl Instance {
    pub fn new(
        id: impl Into<String>,
        values: Vec<f64>,
        kind: DataKind,
        map: Arc<FeatureMap>,
    ) -> Result<Self> {
        if values.len() != map.raw_dim() {
            return Err(Error::DimensionMismatch {
                expected: map.raw_dim(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        map.check_kind(kind)?;
        Ok(Instance {
            id: id.into(),
            values,
            kind,
            map,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> DataKind {
        self.kind
    }

    pub fn map(&self) -> &Arc<FeatureMap> {
        &self.map
    }

    /// Same instance with different raw values. Only used for alterations,
    /// whose values are derived from already validated ones.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Instance {
            id: self.id.clone(),
            values,
            kind: self.kind,
            map: Arc::clone(&self.map),
        }
    }
}

/// Importance scores from one explainer for one instance, one per feature group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    #[serde(rename = "explainer")]
    pub explainer_name: String,
    pub instance_id: String,
    pub scores: Vec<f64>,
}

impl Explanation {
    pub fn new(
        explainer_name: impl Into<String>,
        instance_id: impl Into<String>,
        scores: Vec<f64>,
    ) -> Self {
        Explanation {
            explainer_name: explainer_name.into(),
            instance_id: instance_id.into(),
            scores,
        }
    }
}

pub fn validate_explanation(explanation: &Explanation, map: &FeatureMap) -> Result<()> {
    if explanation.scores.len() != map.len() {
        return Err(Error::FeatureCountMismatch {
            expected: map.len(),
            got: explanation.scores.len(),
        });
    }
    if let Some(index) = explanation.scores.iter().position(|z| !z.is_finite()) {
        return Err(Error::NonFiniteScore { index });
    }
    Ok(())
}

/// Distribution summary of one raw coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl RawStats {
    pub fn clamp(&self, value: f64) -> f64 {
        value.max(self.min).min(self.max)
    }
}

/// Per-raw-coordinate statistics of a reference sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub features: Vec<RawStats>,
    pub sample_count: usize,
    pub source: String,
}

impl FeatureStats {
    pub fn raw_dim(&self) -> usize {
        self.features.len()
    }

    pub fn get(&self, raw: usize) -> Result<&RawStats> {
        self.features.get(raw).ok_or(Error::DimensionMismatch {
            expected: raw + 1,
            got: self.features.len(),
        })
    }

    /// Checks the ordering and count invariants, e.g. after loading from disk.
    pub fn validate(&self) -> Result<()> {
        if self.sample_count < 2 {
            return Err(Error::InsufficientReferenceData {
                got: self.sample_count,
            });
        }
        for (i, s) in self.features.iter().enumerate() {
            let finite = [s.min, s.max, s.mean, s.std].iter().all(|v| v.is_finite());
            if !finite || s.min > s.mean || s.mean > s.max || s.std < 0.0 {
                return Err(Error::InvalidStats(format!(
                    "raw feature {i}: min {}, mean {}, max {}, std {}",
                    s.min, s.mean, s.max, s.std
                )));
            }
        }
        Ok(())
    }
}

/// Computes min, max, mean and population std of every column.
pub fn feature_stats_from_samples(
    samples: &[Vec<f64>],
    source: impl Into<String>,
) -> Result<FeatureStats> {
    if samples.len() < 2 {
        return Err(Error::InsufficientReferenceData { got: samples.len() });
    }
    let dim = samples[0].len();
    for (row, sample) in samples.iter().enumerate() {
        if sample.len() != dim {
            return Err(Error::RaggedRows {
                row,
                expected: dim,
                got: sample.len(),
            });
        }
        if let Some(index) = sample.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
    }

    let n = samples.len() as f64;
    let features = (0..dim)
        .map(|col| {
            // Sorting the column makes the result independent of sample order.
            let mut column: Vec<f64> = samples.iter().map(|s| s[col]).collect();
            column.sort_by(f64::total_cmp);
            let mean = column.iter().sum::<f64>() / n;
            let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let min = column[0];
            let max = column[column.len() - 1];
            RawStats {
                min,
                max,
                // rounding can push the mean of a constant column past its bounds
                mean: mean.clamp(min, max),
                std: var.sqrt(),
            }
        })
        .collect();

    Ok(FeatureStats {
        features,
        sample_count: samples.len(),
        source: source.into(),
    })
}

/// How far alterations push a feature, as a multiple of its std.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLevel {
    Weak,
    #[default]
    Normal,
    Strong,
}

impl NoiseLevel {
    pub const ALL: [NoiseLevel; 3] = [NoiseLevel::Weak, NoiseLevel::Normal, NoiseLevel::Strong];

    pub fn multiplier(self) -> f64 {
        match self {
            NoiseLevel::Weak => 0.5,
            NoiseLevel::Normal => 1.0,
            NoiseLevel::Strong => 2.0,
        }
    }
}

impl std::str::FromStr for NoiseLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weak" => Ok(NoiseLevel::Weak),
            "normal" => Ok(NoiseLevel::Normal),
            "strong" => Ok(NoiseLevel::Strong),
            other => Err(Error::InvalidArgument(format!(
                "unknown noise level `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseLevel::Weak => "weak",
            NoiseLevel::Normal => "normal",
            NoiseLevel::Strong => "strong",
        })
    }
}

pub const DEFAULT_DELTA: f64 = 0.0001;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub noise_level: NoiseLevel,
    /// Prediction changes with magnitude at most `delta` count as stable.
    pub delta: f64,
    pub seed: u64,
    pub clamp_images: bool,
    pub clamp_timeseries: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            noise_level: NoiseLevel::Normal,
            delta: DEFAULT_DELTA,
            seed: DEFAULT_SEED,
            clamp_images: true,
            clamp_timeseries: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "delta must be finite and non-negative, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn clamps(&self, kind: DataKind) -> bool {
        match kind {
            DataKind::Tabular => true,
            DataKind::Text => false,
            DataKind::Image => self.clamp_images,
            DataKind::TimeSeriesPerTimestep | DataKind::TimeSeriesPerSensor => {
                self.clamp_timeseries
            }
        }
    }
}

/// A black-box model producing one continuous prediction per raw input row.
///
/// Implementations must be deterministic: the same batch yields the same
/// outputs bit for bit. Batching must not matter, so `predict_batch(&[a, b])`
/// equals `[predict(a), predict(b)]`.
pub trait Model: Send + Sync {
    fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError>;

    fn predict(&self, row: &[f64]) -> Result<f64, ModelError> {
        let out = self.predict_batch(&[row.to_vec()])?;
        match out.as_slice() {
            [p] => Ok(*p),
            _ => Err(ModelError::CountMismatch {
                sent: 1,
                received: out.len(),
            }),
        }
    }
}

impl<M: Model + ?Sized> Model for Box<M> {
    fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        (**self).predict_batch(rows)
    }
}

impl<M: Model + ?Sized> Model for Arc<M> {
    fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        (**self).predict_batch(rows)
    }
}

impl<M: Model + ?Sized> Model for &M {
    fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        (**self).predict_batch(rows)
    }
}
