//! Reading datasets, feature statistics and precomputed evaluations.
//!
//! A JSON dataset looks like
//!
//! ```json
//! {
//!   "kind": "image",
//!   "feature_map": {"raw_dim": 4, "groups": [[0, 1], [2, 3]], "names": ["sky", "tree"]},
//!   "instances": [{"id": "img-0", "values": [0.1, 0.2, 0.3, 0.4]}],
//!   "reference": [[0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0]]
//! }
//! ```
//!
//! `feature_map` defaults to one feature per raw value and may be overridden
//! per instance (e.g. one segment map per image). `reference` holds the
//! samples feature statistics are computed from; without it the instances
//! themselves are used. A CSV file is tabular data with a header row of
//! feature names and one instance per row.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{
    feature_stats_from_samples, DataKind, Explanation, FeatureMap, FeatureStats, Instance,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub kind: DataKind,
    pub instances: Vec<Instance>,
    pub reference: Option<Vec<Vec<f64>>>,
    pub source: String,
}

impl Dataset {
    /// Statistics of the reference samples, or of the instances when the
    /// dataset carries none.
    pub fn feature_stats(&self) -> Result<FeatureStats> {
        match &self.reference {
            Some(rows) => feature_stats_from_samples(rows, format!("{}#reference", self.source)),
            None => {
                let rows: Vec<Vec<f64>> =
                    self.instances.iter().map(|x| x.values().to_vec()).collect();
                feature_stats_from_samples(&rows, format!("{}#instances", self.source))
            }
        }
    }

    pub fn instance(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|x| x.id() == id)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

#[derive(Deserialize)]
struct InstanceRecord {
    id: String,
    values: Vec<f64>,
    #[serde(default)]
    feature_map: Option<FeatureMap>,
}

#[derive(Deserialize)]
struct DatasetRecord {
    kind: DataKind,
    #[serde(default)]
    feature_map: Option<FeatureMap>,
    #[serde(default)]
    feature_names: Option<Vec<String>>,
    instances: Vec<InstanceRecord>,
    #[serde(default)]
    reference: Option<Vec<Vec<f64>>>,
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        load_csv(path)
    } else {
        parse_json_dataset(path, &read(path)?)
    }
}

pub(crate) fn parse_json_dataset(path: &Path, text: &str) -> Result<Dataset> {
    let record: DatasetRecord = serde_json::from_str(text).map_err(|e| Error::json(path, e))?;
    if record.instances.is_empty() {
        return Err(Error::schema(path, None, Some("instances"), "no instances"));
    }

    let raw_dim = record.instances[0].values.len();
    let mut shared = match record.feature_map {
        Some(map) => map,
        None => FeatureMap::identity(raw_dim),
    };
    if let Some(names) = record.feature_names {
        shared = shared
            .with_names(names)
            .map_err(|e| Error::schema(path, None, Some("feature_names"), e.to_string()))?;
    }
    let shared = Arc::new(shared);

    let instances = record
        .instances
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let map = r
                .feature_map
                .map(Arc::new)
                .unwrap_or_else(|| Arc::clone(&shared));
            Instance::new(r.id, r.values, record.kind, map).map_err(|e| {
                Error::schema(path, None, Some(&format!("instances[{i}]")), e.to_string())
            })
        })
        .collect::<Result<Vec<_>>>()?;

    if let Some(rows) = &record.reference {
        if let Some(i) = rows.iter().position(|r| r.len() != raw_dim) {
            return Err(Error::schema(
                path,
                None,
                Some(&format!("reference[{i}]")),
                format!("expected {raw_dim} values, got {}", rows[i].len()),
            ));
        }
    }

    Ok(Dataset {
        kind: record.kind,
        instances,
        reference: record.reference,
        source: path.display().to_string(),
    })
}

fn load_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_owned())
        .collect();
    let map = Arc::new(
        FeatureMap::identity(names.len())
            .with_names(names.clone())
            .map_err(|e| Error::schema(path, Some(1), None, e.to_string()))?,
    );

    let mut instances = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(row + 2, |p| p.line() as usize);
        let values = record
            .iter()
            .zip(&names)
            .map(|(cell, name)| {
                cell.trim().parse::<f64>().map_err(|_| {
                    Error::schema(
                        path,
                        Some(line),
                        Some(name),
                        format!("`{cell}` is not a number"),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let instance = Instance::new(
            format!("row-{row}"),
            values,
            DataKind::Tabular,
            Arc::clone(&map),
        )
        .map_err(|e| Error::schema(path, Some(line), None, e.to_string()))?;
        instances.push(instance);
    }
    if instances.is_empty() {
        return Err(Error::schema(path, None, None, "no data rows"));
    }
    Ok(Dataset {
        kind: DataKind::Tabular,
        instances,
        reference: None,
        source: path.display().to_string(),
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize);
    Error::schema(path, line, None, e.to_string())
}

/// Reads statistics written by `stats`, either bare or under a `"stats"` key.
pub fn load_stats(path: &Path) -> Result<FeatureStats> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    let body = value.get("stats").cloned().unwrap_or(value);
    let stats: FeatureStats =
        serde_json::from_value(body).map_err(|e| Error::schema(path, None, None, e.to_string()))?;
    stats
        .validate()
        .map_err(|e| Error::schema(path, None, Some("features"), e.to_string()))?;
    Ok(stats)
}

/// Explanations whose truthfulness was judged elsewhere, with the average
/// prediction change per feature. Lets the meta-explanation run without a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedEvaluation {
    pub instance_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_names: Option<Vec<String>>,
    pub average_change: Vec<f64>,
    pub explanations: Vec<MarkedExplanation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedExplanation {
    pub explainer: String,
    pub scores: Vec<f64>,
    pub truthful: Vec<bool>,
}

impl MarkedEvaluation {
    pub fn load(path: &Path) -> Result<Self> {
        let marked: MarkedEvaluation =
            serde_json::from_str(&read(path)?).map_err(|e| Error::json(path, e))?;
        let width = marked.average_change.len();
        for (i, e) in marked.explanations.iter().enumerate() {
            if e.scores.len() != width || e.truthful.len() != width {
                return Err(Error::schema(
                    path,
                    None,
                    Some(&format!("explanations[{i}]")),
                    format!(
                        "{} scores and {} marks for {width} features",
                        e.scores.len(),
                        e.truthful.len()
                    ),
                ));
            }
        }
        if let Some(names) = &marked.feature_names {
            if names.len() != width {
                return Err(Error::schema(
                    path,
                    None,
                    Some("feature_names"),
                    format!("{} names for {width} features", names.len()),
                ));
            }
        }
        Ok(marked)
    }

    pub fn to_explanations(&self) -> Vec<Explanation> {
        self.explanations
            .iter()
            .map(|e| {
                Explanation::new(
                    e.explainer.clone(),
                    self.instance_id.clone(),
                    e.scores.clone(),
                )
            })
            .collect()
    }

    pub fn marks(&self) -> Vec<Vec<bool>> {
        self.explanations
            .iter()
            .map(|e| e.truthful.clone())
            .collect()
    }
}
