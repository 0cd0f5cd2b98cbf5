//! The δ-transform, action selection and the parallel rollout engine.

mod batch;
mod rollout;
mod transform;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::PolicyError;

pub use batch::{sample_in_current_pool, sample_solutions, SampleBatch, SamplingConfig};
pub use rollout::{rollout, ActionRule, Rollout};
pub use transform::{delta_transform, greedy_action, sample_action, ActionDistribution};

/// How actions are drawn during a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Sample from the policy's priorities raised to the power δ.
    #[default]
    Delta,
    /// Uniform over feasible jobs, ignoring the policy.
    #[serde(alias = "uniform")]
    UniformRandom,
    /// Always take the policy's argmax.
    Deterministic,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Delta => "delta",
            Strategy::UniformRandom => "uniform_random",
            Strategy::Deterministic => "deterministic",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "delta" => Ok(Strategy::Delta),
            "uniform" | "uniform_random" | "uniform-random" => Ok(Strategy::UniformRandom),
            "deterministic" | "greedy" => Ok(Strategy::Deterministic),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("invalid sampling config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("rollout {index} failed: {source}")]
    Rollout {
        index: usize,
        #[source]
        source: PolicyError,
    },
    #[error("cannot start worker threads: {0}")]
    ThreadPool(String),
}

/// Parses a δ value, accepting `inf`/`infinity` for the greedy limit.
pub fn parse_delta(s: &str) -> Result<f64, String> {
    let delta = match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" => f64::INFINITY,
        other => other
            .parse::<f64>()
            .map_err(|e| format!("bad delta {s:?}: {e}"))?,
    };
    if delta.is_nan() || delta < 0.0 {
        return Err(format!("delta must be nonnegative, got {s}"));
    }
    Ok(delta)
}

/// Serde for δ: a JSON number, or the string `"inf"` for infinity.
pub mod delta_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(delta: &f64, s: S) -> Result<S::Ok, S::Error> {
        if delta.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*delta)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(x),
            Raw::Text(t) => super::parse_delta(&t).map_err(serde::de::Error::custom),
        }
    }
}
