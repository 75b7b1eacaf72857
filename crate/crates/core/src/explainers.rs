//! Seed explanation sources.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::domain::{validate_explanation, Explanation, FeatureMap, FeatureStats, Instance, Model};
use crate::error::{Error, Result};
use crate::models::LinearModel;
use crate::perturb::keyed_rng;

pub const EXACT_LINEAR_NAME: &str = "exact-linear";
pub const RANDOM_NAME: &str = "random";
pub const SURROGATE_NAME: &str = "surrogate";

/// Ground-truth explanation of a linear model: each group scores the sum of
/// its members' weights. The link is ignored since it is monotone.
pub fn exact_linear_explain(
    model: &LinearModel,
    map: &FeatureMap,
    instance_id: impl Into<String>,
) -> Result<Explanation> {
    if model.weights.len() != map.raw_dim() {
        return Err(Error::DimensionMismatch {
            expected: map.raw_dim(),
            got: model.weights.len(),
        });
    }
    let scores = map
        .groups()
        .iter()
        .map(|g| g.iter().map(|&r| model.weights[r]).sum())
        .collect();
    Ok(Explanation::new(EXACT_LINEAR_NAME, instance_id, scores))
}

/// Uniform scores on `[-1, 1]`, reproducible from `(seed, instance_id)`.
pub fn random_explain(n_features: usize, seed: u64, instance_id: impl Into<String>) -> Explanation {
    let instance_id = instance_id.into();
    let mut rng = keyed_rng(b"truthlens/random", seed, &instance_id, 0);
    let scores = (0..n_features)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    Explanation::new(RANDOM_NAME, instance_id, scores)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateConfig {
    pub n_samples: usize,
    /// Defaults to `0.75·sqrt(#features)` when unset.
    pub kernel_width: Option<f64>,
    pub ridge: f64,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            n_samples: 1000,
            kernel_width: None,
            ridge: 1e-6,
            seed: crate::domain::DEFAULT_SEED,
        }
    }
}

impl SurrogateConfig {
    pub fn kernel_width_for(&self, n_features: usize) -> f64 {
        self.kernel_width
            .unwrap_or_else(|| 0.75 * (n_features as f64).sqrt())
    }
}

/// Local perturbations around an instance. Every group moves by one shared
/// delta per sample, drawn from `N(0, scale²)` with the group's mean std.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    /// `deltas[i][g]`: shift of group `g` in sample `i`.
    pub deltas: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
    /// Raw rows sent to the model.
    pub rows: Vec<Vec<f64>>,
}

impl Neighborhood {
    pub fn sample(
        instance: &Instance,
        stats: &FeatureStats,
        n_samples: usize,
        seed: u64,
    ) -> Result<Self> {
        let map = instance.map();
        if stats.raw_dim() != map.raw_dim() {
            return Err(Error::DimensionMismatch {
                expected: map.raw_dim(),
                got: stats.raw_dim(),
            });
        }
        let scales = map
            .groups()
            .iter()
            .map(|g| {
                let total: f64 = g.iter().map(|&r| stats.features[r].std).sum();
                total / g.len() as f64
            })
            .collect::<Vec<f64>>();

        let mut rng = keyed_rng(b"truthlens/surrogate", seed, instance.id(), 0);
        let mut deltas = Vec::with_capacity(n_samples);
        let mut rows = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let delta: Vec<f64> = scales
                .iter()
                .map(|s| s * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut row = instance.values().to_vec();
            for (group, d) in map.groups().iter().zip(&delta) {
                for &r in group {
                    row[r] += d;
                }
            }
            deltas.push(delta);
            rows.push(row);
        }
        Ok(Neighborhood {
            deltas,
            scales,
            rows,
        })
    }

    /// `exp(−d²/width²)` with `d` the Euclidean norm of the standardized deltas.
    pub fn kernel_weights(&self, width: f64) -> Vec<f64> {
        self.deltas
            .iter()
            .map(|delta| {
                let d2: f64 = delta
                    .iter()
                    .zip(&self.scales)
                    .filter(|(_, s)| **s > 0.0)
                    .map(|(d, s)| (d / s) * (d / s))
                    .sum();
                (-d2 / (width * width)).exp()
            })
            .collect()
    }
}

/// Weighted ridge regression with an unpenalized intercept, solved through
/// the centered normal equations with a Cholesky factorization.
///
/// Returns `(intercept, coefficients)`.
pub fn fit_weighted_ridge(
    design: &[Vec<f64>],
    targets: &[f64],
    weights: &[f64],
    ridge: f64,
) -> Result<(f64, Vec<f64>)> {
    let n = design.len();
    if n == 0 || targets.len() != n || weights.len() != n {
        return Err(Error::InvalidArgument(format!(
            "regression needs matching rows: {n} design, {} targets, {} weights",
            targets.len(),
            weights.len()
        )));
    }
    if !(ridge >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ridge must be non-negative, got {ridge}"
        )));
    }
    let p = design[0].len();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateNeighborhood);
    }

    let mut x_mean = vec![0.0; p];
    let mut y_mean = 0.0;
    for ((row, &y), &w) in design.iter().zip(targets).zip(weights) {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += w * v;
        }
        y_mean += w * y;
    }
    x_mean.iter_mut().for_each(|m| *m /= total);
    y_mean /= total;

    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    let mut centered = vec![0.0; p];
    for ((row, &y), &w) in design.iter().zip(targets).zip(weights) {
        for (c, (v, m)) in centered.iter_mut().zip(row.iter().zip(&x_mean)) {
            *c = v - m;
        }
        let yc = y - y_mean;
        for a in 0..p {
            let wa = w * centered[a];
            rhs[a] += wa * yc;
            for b in 0..=a {
                gram[a][b] += wa * centered[b];
            }
        }
    }
    for a in 0..p {
        gram[a][a] += ridge;
        for b in 0..a {
            gram[b][a] = gram[a][b];
        }
    }

    let coefficients = cholesky_solve(gram, rhs).ok_or(Error::DegenerateNeighborhood)?;
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_mean)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    Ok((intercept, coefficients))
}

/// Solves `A x = b` for symmetric positive definite `A`; `None` otherwise.
fn cholesky_solve(a: Vec<Vec<f64>>, b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) || !d.is_finite() {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Some(x)
}

/// Everything behind a surrogate explanation, kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateFit {
    pub neighborhood: Neighborhood,
    /// Prediction change of each sample relative to the instance.
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

pub fn surrogate_fit(
    model: &dyn Model,
    instance: &Instance,
    stats: &FeatureStats,
    config: &SurrogateConfig,
) -> Result<SurrogateFit> {
    let n_features = instance.map().len();
    if config.n_samples < n_features + 1 {
        return Err(Error::InvalidArgument(format!(
            "surrogate needs at least {} samples for {n_features} features, got {}",
            n_features + 1,
            config.n_samples
        )));
    }
    let neighborhood = Neighborhood::sample(instance, stats, config.n_samples, config.seed)?;

    let mut batch = Vec::with_capacity(config.n_samples + 1);
    batch.push(instance.values().to_vec());
    batch.extend(neighborhood.rows.iter().cloned());
    let context = || format!("surrogate neighborhood of `{}`", instance.id());
    let predictions = model
        .predict_batch(&batch)
        .map_err(|e| Error::model(context(), e))?;
    if predictions.len() != batch.len() {
        return Err(Error::model(
            context(),
            crate::error::ModelError::CountMismatch {
                sent: batch.len(),
                received: predictions.len(),
            },
        ));
    }
    if predictions.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFiniteOutput {
            context: Some(context()),
        });
    }
    let base = predictions[0];
    let targets: Vec<f64> = predictions[1..].iter().map(|p| p - base).collect();
    let weights = neighborhood.kernel_weights(config.kernel_width_for(n_features));
    let (intercept, coefficients) =
        fit_weighted_ridge(&neighborhood.deltas, &targets, &weights, config.ridge)?;
    Ok(SurrogateFit {
        neighborhood,
        targets,
        weights,
        intercept,
        coefficients,
    })
}

/// Local linear surrogate: the fitted coefficient of each group's delta.
pub fn surrogate_explain(
    model: &dyn Model,
    instance: &Instance,
    stats: &FeatureStats,
    config: &SurrogateConfig,
) -> Result<Explanation> {
    let fit = surrogate_fit(model, instance, stats, config)?;
    Ok(Explanation::new(
        SURROGATE_NAME,
        instance.id(),
        fit.coefficients,
    ))
}

#[derive(Deserialize)]
struct ExplanationRecord {
    explainer: String,
    instance_id: String,
    scores: Vec<f64>,
}

impl From<ExplanationRecord> for Explanation {
    fn from(r: ExplanationRecord) -> Self {
        Explanation::new(r.explainer, r.instance_id, r.scores)
    }
}

#[derive(Deserialize)]
struct WrappedExplanations {
    explanations: Vec<ExplanationRecord>,
}

/// Reads explanations from a JSON array, a `{"explanations": [...]}` document,
/// or a stream of JSON objects (one per line or pretty printed). Unknown
/// fields are ignored.
pub fn load_explanations(path: &Path) -> Result<Vec<Explanation>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_explanations(path, &text)
}

pub(crate) fn parse_explanations(path: &Path, text: &str) -> Result<Vec<Explanation>> {
    let trimmed = text.trim_start();
    let records: Vec<ExplanationRecord> = if trimmed.starts_with('[') {
        serde_json::from_str(text).map_err(|e| Error::json(path, e))?
    } else {
        let probe: serde_json::Value = serde_json::Deserializer::from_str(text)
            .into_iter::<serde_json::Value>()
            .next()
            .unwrap_or(Ok(serde_json::Value::Null))
            .map_err(|e| Error::json(path, e))?;
        if probe.get("explanations").is_some() {
            serde_json::from_str::<WrappedExplanations>(text)
                .map_err(|e| Error::json(path, e))?
                .explanations
        } else {
            serde_json::Deserializer::from_str(text)
                .into_iter::<ExplanationRecord>()
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::json(path, e))?
        }
    };
    if records.is_empty() {
        return Err(Error::schema(path, None, None, "no explanations found"));
    }
    let explanations: Vec<Explanation> = records.into_iter().map(Explanation::from).collect();
    for (i, e) in explanations.iter().enumerate() {
        if let Some(j) = e.scores.iter().position(|z| !z.is_finite()) {
            return Err(Error::schema(
                path,
                None,
                Some(&format!("explanations[{i}].scores[{j}]")),
                "non-finite score",
            ));
        }
    }
    Ok(explanations)
}

/// Checks an explanation against the map of the instance it claims to explain.
pub fn check_against(explanation: &Explanation, instance: &Instance) -> Result<()> {
    if explanation.instance_id != instance.id() {
        return Err(Error::InvalidArgument(format!(
            "explanation for `{}` paired with instance `{}`",
            explanation.instance_id,
            instance.id()
        )));
    }
    validate_explanation(explanation, instance.map())
}
