//! Combining several explanations of one instance into one.
//!
//! The truthful meta-explanation keeps, per feature, only scores that passed
//! the truthfulness check, visits features from the largest average
//! prediction change to the smallest, and caps magnitudes so that later
//! (less influential) features never get a larger score than earlier ones
//! unless they have a single candidate.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::domain::Explanation;
use crate::error::{Error, Result};
use crate::truthfulness::EvaluationReport;

pub const TRUTHFUL_META_NAME: &str = "truthful-meta";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub explainer_index: usize,
    pub score: f64,
}

/// Truthful scores per feature, in explainer input order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateMap {
    features: Vec<Vec<Candidate>>,
}

impl CandidateMap {
    /// Builds the map from explicit truthful marks, `marks[m][j]` being the
    /// verdict for explainer `m` on feature `j`.
    pub fn from_marks(explanations: &[Explanation], marks: &[Vec<bool>]) -> Result<Self> {
        if explanations.len() != marks.len() {
            return Err(Error::InvalidArgument(format!(
                "{} explanations but {} rows of marks",
                explanations.len(),
                marks.len()
            )));
        }
        let width = explanations.first().map_or(0, |e| e.scores.len());
        for (m, (e, row)) in explanations.iter().zip(marks).enumerate() {
            if e.scores.len() != width || row.len() != width {
                return Err(Error::InvalidArgument(format!(
                    "explainer {m}: {} scores and {} marks, expected {width}",
                    e.scores.len(),
                    row.len()
                )));
            }
        }
        let features = (0..width)
            .map(|j| {
                explanations
                    .iter()
                    .zip(marks)
                    .enumerate()
                    .filter(|(_, (_, row))| row[j])
                    .map(|(m, (e, _))| Candidate {
                        explainer_index: m,
                        score: e.scores[j],
                    })
                    .collect()
            })
            .collect();
        Ok(CandidateMap { features })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn candidates(&self, feature_id: usize) -> &[Candidate] {
        &self.features[feature_id]
    }

    pub fn scores(&self, feature_id: usize) -> Vec<f64> {
        self.features[feature_id].iter().map(|c| c.score).collect()
    }
}

/// Collects the truthful scores of every explainer for every feature.
///
/// All reports must come from the same instance and the same config, so that
/// every explainer was judged against identical alterations.
pub fn candidate_truthful_scores(
    reports: &[EvaluationReport],
    explanations: &[Explanation],
) -> Result<CandidateMap> {
    if reports.len() != explanations.len() {
        return Err(Error::InconsistentReports(format!(
            "{} reports for {} explanations",
            reports.len(),
            explanations.len()
        )));
    }
    if let Some(first) = reports.first() {
        for (m, (report, explanation)) in reports.iter().zip(explanations).enumerate() {
            if report.instance_id != first.instance_id {
                return Err(Error::InconsistentReports(format!(
                    "report {m} is for instance `{}`, expected `{}`",
                    report.instance_id, first.instance_id
                )));
            }
            if report.config != first.config {
                return Err(Error::InconsistentReports(format!(
                    "report {m} was produced with a different config"
                )));
            }
            if explanation.instance_id != report.instance_id {
                return Err(Error::InconsistentReports(format!(
                    "explanation {m} is for instance `{}`, report for `{}`",
                    explanation.instance_id, report.instance_id
                )));
            }
            let same_scores = explanation.scores.len() == report.verdicts.len()
                && explanation
                    .scores
                    .iter()
                    .zip(&report.verdicts)
                    .all(|(z, v)| z.to_bits() == v.score.to_bits());
            if !same_scores {
                return Err(Error::InconsistentReports(format!(
                    "explanation {m} does not match the scores its report judged"
                )));
            }
        }
    }
    let marks: Vec<Vec<bool>> = reports
        .iter()
        .map(EvaluationReport::truthful_flags)
        .collect();
    CandidateMap::from_marks(explanations, &marks)
}

/// Where a meta-explanation score came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Explainer(usize),
    ZeroFill,
}

impl Serialize for Provenance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Provenance::Explainer(i) => serializer.serialize_u64(*i as u64),
            Provenance::ZeroFill => serializer.serialize_str("zero-fill"),
        }
    }
}

impl<'de> Deserialize<'de> for Provenance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Index(usize),
            Tag(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Index(i) => Ok(Provenance::Explainer(i)),
            Repr::Tag(t) if t == "zero-fill" => Ok(Provenance::ZeroFill),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!(
                "unknown provenance `{t}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaExplanation {
    #[serde(flatten)]
    pub explanation: Explanation,
    pub provenance: Vec<Provenance>,
}

/// Feature ids sorted by descending average change, ties by ascending id.
pub fn processing_order(average_changes: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..average_changes.len()).collect();
    order.sort_by(|&a, &b| {
        average_changes[b]
            .partial_cmp(&average_changes[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Builds the truthfulness-based meta-explanation.
///
/// Features are visited in [`processing_order`]. The first feature with
/// candidates takes its largest-magnitude candidate and sets the cap to that
/// magnitude. Later features with one candidate take it as is; with several,
/// they take the largest magnitude not above the cap, or the smallest
/// magnitude when every candidate exceeds it. After each choice the cap
/// becomes `min(cap, |chosen|)`. Features without candidates get 0.
pub fn truthful_meta_explanation(
    candidates: &CandidateMap,
    average_changes: &[f64],
    instance_id: impl Into<String>,
) -> Result<MetaExplanation> {
    if average_changes.len() != candidates.len() {
        return Err(Error::FeatureCountMismatch {
            expected: candidates.len(),
            got: average_changes.len(),
        });
    }
    if average_changes.iter().any(|ac| !ac.is_finite()) {
        return Err(Error::InvalidArgument(
            "average changes must be finite".into(),
        ));
    }

    let n = candidates.len();
    let mut scores = vec![0.0; n];
    let mut provenance = vec![Provenance::ZeroFill; n];
    let mut cap: Option<f64> = None;

    for feature in processing_order(average_changes) {
        let list = candidates.candidates(feature);
        if list.is_empty() {
            continue;
        }
        let chosen = match cap {
            None => max_abs(list.iter()),
            Some(_) if list.len() == 1 => Some(list[0]),
            Some(limit) => max_abs(list.iter().filter(|c| c.score.abs() <= limit))
                .or_else(|| min_abs(list.iter())),
        }
        .expect("non-empty candidate list");
        let magnitude = chosen.score.abs();
        cap = Some(cap.map_or(magnitude, |limit| limit.min(magnitude)));
        scores[feature] = chosen.score;
        provenance[feature] = Provenance::Explainer(chosen.explainer_index);
    }

    Ok(MetaExplanation {
        explanation: Explanation::new(TRUTHFUL_META_NAME, instance_id, scores),
        provenance,
    })
}

/// Largest |score|; the earliest explainer wins ties.
fn max_abs<'a>(candidates: impl Iterator<Item = &'a Candidate>) -> Option<Candidate> {
    candidates.fold(None, |best: Option<Candidate>, c| match best {
        Some(b) if b.score.abs() >= c.score.abs() => Some(b),
        _ => Some(*c),
    })
}

/// Smallest |score|; the earliest explainer wins ties.
fn min_abs<'a>(candidates: impl Iterator<Item = &'a Candidate>) -> Option<Candidate> {
    candidates.fold(None, |best: Option<Candidate>, c| match best {
        Some(b) if b.score.abs() <= c.score.abs() => Some(b),
        _ => Some(*c),
    })
}

fn check_same_shape(explanations: &[Explanation]) -> Result<usize> {
    let first = explanations
        .first()
        .ok_or(Error::EmptyInput("no explanations to aggregate"))?;
    let width = first.scores.len();
    for e in explanations {
        if e.scores.len() != width {
            return Err(Error::FeatureCountMismatch {
                expected: width,
                got: e.scores.len(),
            });
        }
        if e.instance_id != first.instance_id {
            return Err(Error::InvalidArgument(format!(
                "cannot aggregate explanations of `{}` and `{}`",
                first.instance_id, e.instance_id
            )));
        }
    }
    Ok(width)
}

/// Per-feature arithmetic mean.
pub fn aggregate_mean(explanations: &[Explanation]) -> Result<Explanation> {
    let width = check_same_shape(explanations)?;
    let n = explanations.len() as f64;
    let scores = (0..width)
        .map(|j| {
            let mut column: Vec<f64> = explanations.iter().map(|e| e.scores[j]).collect();
            // summing in sorted order keeps the mean independent of explainer order
            column.sort_by(f64::total_cmp);
            column.iter().sum::<f64>() / n
        })
        .collect();
    Ok(Explanation::new(
        "mean",
        explanations[0].instance_id.clone(),
        scores,
    ))
}

/// Per-feature median; even counts average the two middle values.
pub fn aggregate_median(explanations: &[Explanation]) -> Result<Explanation> {
    let width = check_same_shape(explanations)?;
    let scores = (0..width)
        .map(|j| {
            let mut column: Vec<f64> = explanations.iter().map(|e| e.scores[j]).collect();
            column.sort_by(f64::total_cmp);
            let mid = column.len() / 2;
            if column.len() % 2 == 1 {
                column[mid]
            } else {
                (column[mid - 1] + column[mid]) / 2.0
            }
        })
        .collect();
    Ok(Explanation::new(
        "median",
        explanations[0].instance_id.clone(),
        scores,
    ))
}
