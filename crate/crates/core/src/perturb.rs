//! Alternative feature values and the altered instances built from them.
//!
//! Every (seed, instance, feature) triple owns an independent random stream,
//! so alterations do not depend on evaluation order or on the explainer being
//! checked. The stream is ChaCha8 keyed by the first 32 bytes of a SHA-256
//! digest of the triple; Gaussian draws use the ziggurat sampler from
//! `rand_distr`. Both are platform independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{DataKind, EvalConfig, FeatureStats, Instance, NoiseLevel, RawStats};
use crate::error::{Error, Result};

/// Direction in which a feature value is moved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Inc,
    Dec,
}

impl Direction {
    pub fn sign(self) -> i8 {
        match self {
            Direction::Inc => 1,
            Direction::Dec => -1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::Inc => "INC",
            Direction::Dec => "DEC",
        }
    }
}

/// Random stream owned by one feature of one instance under one seed.
pub fn alteration_rng(seed: u64, instance_id: &str, feature_id: usize) -> ChaCha8Rng {
    keyed_rng(
        b"truthlens/alteration",
        seed,
        instance_id,
        feature_id as u64,
    )
}

pub(crate) fn keyed_rng(domain: &[u8], seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(domain);
    hasher.update(seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Folded Gaussian noise magnitude `|g|` with `g ~ N(0, (k·std)²)`.
pub fn draw_noise<R: Rng + ?Sized>(stats: &RawStats, level: NoiseLevel, rng: &mut R) -> f64 {
    if stats.std == 0.0 {
        return 0.0;
    }
    let g: f64 = rng.sample(StandardNormal);
    (level.multiplier() * stats.std * g).abs()
}

/// The pair of alternative values for one feature.
///
/// For tabular and text data these are absolute replacement values; for
/// images and time series they are additive deltas applied to every raw
/// coordinate of the group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltValues {
    pub lower: f64,
    pub upper: f64,
}

impl AltValues {
    pub fn get(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Inc => self.upper,
            Direction::Dec => self.lower,
        }
    }
}

pub fn determine_alt_values<R: Rng + ?Sized>(
    value: f64,
    stats: &RawStats,
    level: NoiseLevel,
    kind: DataKind,
    rng: &mut R,
) -> AltValues {
    let noise = match kind {
        DataKind::Text => 0.0,
        _ => draw_noise(stats, level, rng),
    };
    alt_values_with_noise(value, noise, stats, kind)
}

/// Alternative values for an already drawn noise magnitude.
pub fn alt_values_with_noise(
    value: f64,
    noise: f64,
    stats: &RawStats,
    kind: DataKind,
) -> AltValues {
    match kind {
        DataKind::Text => AltValues {
            lower: 0.0,
            upper: value,
        },
        DataKind::Image | DataKind::TimeSeriesPerTimestep | DataKind::TimeSeriesPerSensor => {
            AltValues {
                lower: -noise,
                upper: noise,
            }
        }
        DataKind::Tabular => AltValues {
            lower: (value - noise).max(stats.min),
            upper: (value + noise).min(stats.max),
        },
    }
}

/// Returns a copy of `instance` with one feature moved in `direction`.
///
/// Only the raw coordinates of the feature's group change. Image and time
/// series deltas are clamped into each coordinate's `[min, max]` when the
/// config enables clamping for that kind.
pub fn apply_alteration(
    instance: &Instance,
    feature_id: usize,
    direction: Direction,
    alt: AltValues,
    stats: &FeatureStats,
    config: &EvalConfig,
) -> Result<Instance> {
    let group = instance.map().group(feature_id)?;
    let mut values = instance.values().to_vec();
    let target = alt.get(direction);
    match instance.kind() {
        DataKind::Tabular | DataKind::Text => {
            for &raw in group {
                values[raw] = target;
            }
        }
        kind => {
            let clamp = config.clamps(kind);
            for &raw in group {
                let moved = values[raw] + target;
                values[raw] = if clamp {
                    stats.get(raw)?.clamp(moved)
                } else {
                    moved
                };
            }
        }
    }
    Ok(instance.with_values(values))
}

/// One altered copy of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Alteration {
    pub feature_id: usize,
    pub direction: Direction,
    pub instance: Instance,
    /// The drawn noise, or the removed value for text.
    pub magnitude: f64,
    /// Mean of the group's raw values before the alteration.
    pub value_from: f64,
    /// Mean of the group's raw values after the alteration.
    pub value_to: f64,
}

/// Statistics used to scale the noise of a whole group. A singleton group
/// uses its coordinate's statistics unchanged.
fn group_stats(stats: &FeatureStats, group: &[usize]) -> Result<RawStats> {
    if let [raw] = group {
        return stats.get(*raw).copied();
    }
    let n = group.len() as f64;
    let mut pooled = RawStats {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        mean: 0.0,
        std: 0.0,
    };
    for &raw in group {
        let s = stats.get(raw)?;
        pooled.min = pooled.min.min(s.min);
        pooled.max = pooled.max.max(s.max);
        pooled.mean += s.mean / n;
        pooled.std += s.std / n;
    }
    Ok(pooled)
}

fn group_mean(values: &[f64], group: &[usize]) -> f64 {
    group.iter().map(|&r| values[r]).sum::<f64>() / group.len() as f64
}

/// Builds every alteration evaluated for `instance`: Inc then Dec for each
/// feature, or only Dec (removal) for text.
pub fn plan_alterations(
    instance: &Instance,
    stats: &FeatureStats,
    config: &EvalConfig,
) -> Result<Vec<Alteration>> {
    config.validate()?;
    let map = instance.map();
    if stats.raw_dim() != map.raw_dim() {
        return Err(Error::DimensionMismatch {
            expected: map.raw_dim(),
            got: stats.raw_dim(),
        });
    }

    let kind = instance.kind();
    let directions: &[Direction] = if kind == DataKind::Text {
        &[Direction::Dec]
    } else {
        &[Direction::Inc, Direction::Dec]
    };

    let mut out = Vec::with_capacity(map.len() * directions.len());
    for (feature_id, group) in map.groups().iter().enumerate() {
        let pooled = group_stats(stats, group)?;
        let value_from = group_mean(instance.values(), group);
        let mut rng = alteration_rng(config.seed, instance.id(), feature_id);
        // same draw as determine_alt_values, kept to report the magnitude
        let (alt, magnitude) = if kind == DataKind::Text {
            (
                alt_values_with_noise(value_from, 0.0, &pooled, kind),
                value_from,
            )
        } else {
            let noise = draw_noise(&pooled, config.noise_level, &mut rng);
            (
                alt_values_with_noise(value_from, noise, &pooled, kind),
                noise,
            )
        };
        for &direction in directions {
            let altered = apply_alteration(instance, feature_id, direction, alt, stats, config)?;
            let value_to = group_mean(altered.values(), group);
            out.push(Alteration {
                feature_id,
                direction,
                instance: altered,
                magnitude,
                value_from,
                value_to,
            });
        }
    }
    Ok(out)
}
