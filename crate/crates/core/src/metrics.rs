//! Complexity of an explanation: how many scores are large enough to matter.

use crate::domain::Explanation;
use crate::error::{Error, Result};

/// Number of scores with `|z| > threshold`. Lower means easier to read.
pub fn complexity(explanation: &Explanation, threshold: f64) -> Result<usize> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "complexity threshold must be non-negative, got {threshold}"
        )));
    }
    Ok(explanation
        .scores
        .iter()
        .filter(|z| z.abs() > threshold)
        .count())
}
