//! The truthfulness check.
//!
//! A score `z_j` claims a direction: positive means raising the feature
//! raises the prediction, negative means it lowers it, zero means the
//! prediction does not react. Each alteration of the feature yields an
//! observed behaviour of the prediction, and the record matches when
//! `observed == sign(z_j) · direction`. A feature is truthful when all of its
//! records match; an explanation's truthfulness is the truthful fraction.
//!
//! Behaviour is a partition of the prediction change `d = p_alt − p_orig`:
//! increasing when `d > δ`, decreasing when `d < −δ`, stable otherwise.

use serde::{Deserialize, Serialize};

use crate::domain::{validate_explanation, EvalConfig, Explanation, FeatureStats, Instance, Model};
use crate::error::{Error, Result};
use crate::perturb::{plan_alterations, Direction};

/// Sign of an importance score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Importance {
    Positive,
    Neutral,
    Negative,
}

impl Importance {
    /// Exact sign, no tolerance band: only `0.0` (or `-0.0`) is neutral.
    pub fn of(score: f64) -> Self {
        if score > 0.0 {
            Importance::Positive
        } else if score < 0.0 {
            Importance::Negative
        } else {
            Importance::Neutral
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Importance::Positive => 1,
            Importance::Neutral => 0,
            Importance::Negative => -1,
        }
    }
}

/// Observed movement of the prediction after an alteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Behaviour {
    Increasing,
    Stable,
    Decreasing,
}

impl Behaviour {
    pub fn sign(self) -> i8 {
        match self {
            Behaviour::Increasing => 1,
            Behaviour::Stable => 0,
            Behaviour::Decreasing => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Self {
        match sign.signum() {
            1 => Behaviour::Increasing,
            0 => Behaviour::Stable,
            _ => Behaviour::Decreasing,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Behaviour::Increasing => "INC",
            Behaviour::Stable => "STABLE",
            Behaviour::Decreasing => "DEC",
        }
    }
}

pub fn observe_expected(p_orig: f64, p_alt: f64, delta: f64) -> Result<Behaviour> {
    if !p_orig.is_finite() || !p_alt.is_finite() {
        return Err(Error::NonFiniteOutput { context: None });
    }
    let change = p_alt - p_orig;
    Ok(if change > delta {
        Behaviour::Increasing
    } else if change < -delta {
        Behaviour::Decreasing
    } else {
        Behaviour::Stable
    })
}

/// The behaviour a score of the given sign predicts for an alteration.
pub fn expected_behaviour(importance: Importance, direction: Direction) -> Behaviour {
    Behaviour::from_sign(importance.sign() * direction.sign())
}

/// One model query for an altered instance. Independent of any explanation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub direction: Direction,
    pub value_from: f64,
    pub value_to: f64,
    pub p_orig: f64,
    pub p_alt: f64,
    pub observed: Behaviour,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlterationRecord {
    pub direction: Direction,
    pub value_from: f64,
    pub value_to: f64,
    pub p_orig: f64,
    pub p_alt: f64,
    pub observed: Behaviour,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVerdict {
    pub feature_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub score: f64,
    pub importance: Importance,
    pub records: Vec<AlterationRecord>,
    pub truthful: bool,
    /// Mean absolute prediction change over the records.
    pub avg_change: f64,
}

impl FeatureVerdict {
    pub fn display_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("f{}", self.feature_id))
    }
}

/// Judges one score against the probes of its feature.
pub fn evaluate_feature(feature_id: usize, score: f64, probes: &[Probe]) -> FeatureVerdict {
    let importance = Importance::of(score);
    let records: Vec<AlterationRecord> = probes
        .iter()
        .map(|p| AlterationRecord {
            direction: p.direction,
            value_from: p.value_from,
            value_to: p.value_to,
            p_orig: p.p_orig,
            p_alt: p.p_alt,
            observed: p.observed,
            matched: p.observed == expected_behaviour(importance, p.direction),
        })
        .collect();
    let truthful = records.iter().all(|r| r.matched);
    FeatureVerdict {
        feature_id,
        name: None,
        score,
        importance,
        truthful,
        avg_change: mean_abs_change(probes),
        records,
    }
}

fn mean_abs_change(probes: &[Probe]) -> f64 {
    if probes.is_empty() {
        return 0.0;
    }
    probes
        .iter()
        .map(|p| (p.p_orig - p.p_alt).abs())
        .sum::<f64>()
        / probes.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub instance_id: String,
    pub explainer: String,
    pub prediction: f64,
    pub verdicts: Vec<FeatureVerdict>,
    pub truthfulness: f64,
    pub untruthful_count: usize,
    pub config: EvalConfig,
}

impl EvaluationReport {
    /// Assembles a report and derives the summary fields from the verdicts.
    pub fn from_verdicts(
        instance_id: impl Into<String>,
        explainer: impl Into<String>,
        prediction: f64,
        verdicts: Vec<FeatureVerdict>,
        config: EvalConfig,
    ) -> Self {
        let untruthful_count = verdicts.iter().filter(|v| !v.truthful).count();
        let truthfulness = if verdicts.is_empty() {
            1.0
        } else {
            (verdicts.len() - untruthful_count) as f64 / verdicts.len() as f64
        };
        EvaluationReport {
            instance_id: instance_id.into(),
            explainer: explainer.into(),
            prediction,
            verdicts,
            truthfulness,
            untruthful_count,
            config,
        }
    }

    pub fn average_changes(&self) -> Vec<f64> {
        average_changes(self)
    }

    pub fn truthful_flags(&self) -> Vec<bool> {
        self.verdicts.iter().map(|v| v.truthful).collect()
    }
}

pub fn average_changes(report: &EvaluationReport) -> Vec<f64> {
    report.verdicts.iter().map(|v| v.avg_change).collect()
}

/// Model responses to every alteration of one instance.
///
/// Alterations depend only on the instance, statistics and config, never on
/// the explanation, so one probe set can judge any number of explanations of
/// the same instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    instance_id: String,
    names: Option<Vec<String>>,
    prediction: f64,
    probes: Vec<Vec<Probe>>,
    config: EvalConfig,
}

impl ProbeSet {
    /// Alters every feature of `instance` and queries the model in a single
    /// batch: the original row first, then each alteration.
    pub fn run(
        instance: &Instance,
        model: &dyn Model,
        stats: &FeatureStats,
        config: &EvalConfig,
    ) -> Result<Self> {
        let plan = plan_alterations(instance, stats, config)?;
        let mut batch = Vec::with_capacity(plan.len() + 1);
        batch.push(instance.values().to_vec());
        batch.extend(plan.iter().map(|a| a.instance.values().to_vec()));

        let context = || format!("instance `{}`", instance.id());
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
        let prediction = predictions[0];
        if !prediction.is_finite() {
            return Err(Error::NonFiniteOutput {
                context: Some(format!("{} (original row)", context())),
            });
        }

        let mut probes = vec![Vec::new(); instance.map().len()];
        for (alteration, &p_alt) in plan.iter().zip(&predictions[1..]) {
            let observed = observe_expected(prediction, p_alt, config.delta).map_err(|_| {
                Error::NonFiniteOutput {
                    context: Some(format!(
                        "{}, feature {} ({})",
                        context(),
                        alteration.feature_id,
                        alteration.direction.label()
                    )),
                }
            })?;
            probes[alteration.feature_id].push(Probe {
                direction: alteration.direction,
                value_from: alteration.value_from,
                value_to: alteration.value_to,
                p_orig: prediction,
                p_alt,
                observed,
            });
        }

        Ok(ProbeSet {
            instance_id: instance.id().to_owned(),
            names: instance.map().names().map(<[String]>::to_vec),
            prediction,
            probes,
            config: *config,
        })
    }

    pub fn instance_id(&self) -> &str {
        &self.instance_id
    }

    pub fn prediction(&self) -> f64 {
        self.prediction
    }

    pub fn config(&self) -> &EvalConfig {
        &self.config
    }

    pub fn probes(&self, feature_id: usize) -> &[Probe] {
        &self.probes[feature_id]
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn average_changes(&self) -> Vec<f64> {
        self.probes.iter().map(|p| mean_abs_change(p)).collect()
    }

    pub fn evaluate(&self, explanation: &Explanation) -> Result<EvaluationReport> {
        if explanation.scores.len() != self.probes.len() {
            return Err(Error::FeatureCountMismatch {
                expected: self.probes.len(),
                got: explanation.scores.len(),
            });
        }
        if let Some(index) = explanation.scores.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFiniteScore { index });
        }
        if explanation.instance_id != self.instance_id {
            return Err(Error::InvalidArgument(format!(
                "explanation for instance `{}` evaluated against instance `{}`",
                explanation.instance_id, self.instance_id
            )));
        }
        let verdicts = explanation
            .scores
            .iter()
            .zip(&self.probes)
            .enumerate()
            .map(|(feature_id, (&score, probes))| {
                let mut verdict = evaluate_feature(feature_id, score, probes);
                verdict.name = self.names.as_ref().and_then(|n| n.get(feature_id)).cloned();
                verdict
            })
            .collect();
        Ok(EvaluationReport::from_verdicts(
            self.instance_id.clone(),
            explanation.explainer_name.clone(),
            self.prediction,
            verdicts,
            self.config,
        ))
    }
}

/// Evaluates one explanation of one instance.
pub fn evaluate_explanation(
    explanation: &Explanation,
    instance: &Instance,
    model: &dyn Model,
    stats: &FeatureStats,
    config: &EvalConfig,
) -> Result<EvaluationReport> {
    validate_explanation(explanation, instance.map())?;
    ProbeSet::run(instance, model, stats, config)?.evaluate(explanation)
}
