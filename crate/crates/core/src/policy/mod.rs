//! Priority policies.
//!
//! A policy maps a dispatch state to a [`PriorityVector`]: nonnegative
//! per-job scores that vanish on finished jobs. Built-in rule policies
//! (uniform, SPT and MWKR softmax) are pure functions of the state. An
//! external policy is served by another process over a line-delimited JSON
//! protocol, see [`protocol`].

mod conformance;
mod external;
pub mod protocol;
mod rules;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jssp::{Instance, ScheduleState};

pub use conformance::{run_conformance, ConformanceCheck, ConformanceReport};
pub use external::{Endpoint, ExternalSession};
pub use rules::{priorities, softmax_masked, RulePolicy};

/// Per-job priorities restricted to the feasible jobs.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityVector {
    values: Vec<f64>,
    mask: Vec<bool>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriorityError {
    #[error("{values} values for a mask of length {mask}")]
    LengthMismatch { values: usize, mask: usize },
    #[error("value {index} is not finite")]
    NotFinite { index: usize },
    #[error("value {index} is negative ({value})")]
    Negative { index: usize, value: f64 },
    #[error("value {index} is nonzero on an infeasible job")]
    OffMask { index: usize },
    #[error("no feasible job has a positive priority")]
    AllZero,
}

impl PriorityVector {
    pub fn new(values: Vec<f64>, mask: Vec<bool>) -> Result<Self, PriorityError> {
        if values.len() != mask.len() {
            return Err(PriorityError::LengthMismatch {
                values: values.len(),
                mask: mask.len(),
            });
        }
        let mut any_positive = false;
        for (index, (&v, &m)) in values.iter().zip(&mask).enumerate() {
            if !v.is_finite() {
                return Err(PriorityError::NotFinite { index });
            }
            if v < 0.0 {
                return Err(PriorityError::Negative { index, value: v });
            }
            if !m && v != 0.0 {
                return Err(PriorityError::OffMask { index });
            }
            any_positive |= m && v > 0.0;
        }
        if !any_positive {
            return Err(PriorityError::AllZero);
        }
        Ok(Self { values, mask })
    }

    /// Like [`PriorityVector::new`], but zeroes entries outside the mask
    /// first. Remaining checks still apply to every entry.
    pub fn masked(mut values: Vec<f64>, mask: Vec<bool>) -> Result<Self, PriorityError> {
        for (index, (v, &m)) in values.iter_mut().zip(&mask).enumerate() {
            if !v.is_finite() {
                return Err(PriorityError::NotFinite { index });
            }
            if *v < 0.0 {
                return Err(PriorityError::Negative { index, value: *v });
            }
            if !m {
                *v = 0.0;
            }
        }
        Self::new(values, mask)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid priorities: {0}")]
    InvalidPriorities(#[from] PriorityError),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("protocol version mismatch: expected {expected}, got {found}")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("external policy reported an error: {0}")]
    Remote(String),
    #[error("state has no feasible action")]
    NoFeasibleAction,
    #[error("invalid policy spec: {0}")]
    InvalidSpec(String),
}

impl From<std::io::Error> for PolicyError {
    fn from(e: std::io::Error) -> Self {
        PolicyError::Transport(e.to_string())
    }
}

/// Anything that can score the feasible jobs of a state.
pub trait Policy: Send {
    fn priorities(&mut self, state: &ScheduleState<'_>) -> Result<PriorityVector, PolicyError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Uniform,
    SptSoftmax,
    MwkrSoftmax,
    External,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Uniform => "uniform",
            PolicyKind::SptSoftmax => "spt_softmax",
            PolicyKind::MwkrSoftmax => "mwkr_softmax",
            PolicyKind::External => "external",
        })
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(PolicyKind::Uniform),
            "spt" | "spt_softmax" => Ok(PolicyKind::SptSoftmax),
            "mwkr" | "mwkr_softmax" => Ok(PolicyKind::MwkrSoftmax),
            "external" => Ok(PolicyKind::External),
            other => Err(format!("unknown policy {other:?}")),
        }
    }
}

fn default_temperature() -> f64 {
    1.0
}

/// Which policy to use and how to reach it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Softmax temperature; ignored by `uniform` and `external`.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<Endpoint>,
}

impl PolicySpec {
    pub fn builtin(kind: PolicyKind) -> Self {
        Self {
            kind,
            temperature: 1.0,
            endpoint: None,
        }
    }

    pub fn softmax(kind: PolicyKind, temperature: f64) -> Self {
        Self {
            kind,
            temperature,
            endpoint: None,
        }
    }

    pub fn external(endpoint: Endpoint) -> Self {
        Self {
            kind: PolicyKind::External,
            temperature: 1.0,
            endpoint: Some(endpoint),
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(PolicyError::InvalidSpec(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.kind == PolicyKind::External && self.endpoint.is_none() {
            return Err(PolicyError::InvalidSpec(
                "external policy needs an endpoint".into(),
            ));
        }
        Ok(())
    }

    /// Short identifier used in output files.
    pub fn id(&self) -> String {
        match self.kind {
            PolicyKind::Uniform => "uniform".into(),
            PolicyKind::SptSoftmax | PolicyKind::MwkrSoftmax => {
                format!("{}(T={})", self.kind, self.temperature)
            }
            PolicyKind::External => match &self.endpoint {
                Some(e) => format!("external({e})"),
                None => "external".into(),
            },
        }
    }

    /// Instantiates the policy for one instance. External policies open a
    /// session (and send the instance) here.
    pub fn open(&self, instance: &Instance) -> Result<Box<dyn Policy>, PolicyError> {
        self.validate()?;
        match self.kind {
            PolicyKind::External => {
                let endpoint = self.endpoint.as_ref().expect("validated");
                Ok(Box::new(ExternalSession::open(endpoint, instance)?))
            }
            _ => Ok(Box::new(RulePolicy::try_from(self)?)),
        }
    }
}
