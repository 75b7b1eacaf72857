//! Truthfulness evaluation for feature-importance explanations.
//!
//! An explanation assigns every feature of an instance a signed importance
//! score. This crate probes a black-box model by nudging each feature up and
//! down, checks whether the prediction moves the way the sign of the score
//! says it should, and reports the fraction of features whose score holds up
//! (the *truthfulness* of the explanation).
//!
//! On top of the metric it provides:
//!
//! - [`meta`]: a truthfulness-driven ensemble of several explanations that is
//!   never less truthful than the best of its inputs, plus mean/median baselines;
//! - [`argument`]: an argumentation tree that justifies each verdict;
//! - [`explainers`]: seed explanation sources (exact linear weights, random
//!   baseline, a local ridge surrogate, and file import);
//! - [`models`]: in-process reference models and a client for external models
//!   speaking a small JSON prediction protocol.

pub mod argument;
pub mod dataset;
pub mod domain;
pub mod error;
pub mod explainers;
pub mod meta;
pub mod metrics;
pub mod models;
pub mod perturb;
pub mod truthfulness;

pub use domain::{
    feature_stats_from_samples, validate_explanation, DataKind, EvalConfig, Explanation,
    FeatureMap, FeatureStats, Instance, Model, NoiseLevel, RawStats,
};
pub use error::{Error, ModelError, Result};
pub use truthfulness::{evaluate_explanation, EvaluationReport, FeatureVerdict, ProbeSet};
