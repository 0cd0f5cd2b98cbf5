use super::{Policy, PolicyError, PolicyKind, PolicySpec, PriorityVector};
use crate::jssp::ScheduleState;

/// Softmax of `scores / temperature` over the masked-in entries; zero
/// elsewhere. Scores are shifted by their masked maximum before
/// exponentiation.
pub fn softmax_masked(scores: &[f64], mask: &[bool], temperature: f64) -> Vec<f64> {
    let max = scores
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&s, _)| s / temperature)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores
        .iter()
        .zip(mask)
        .map(|(&s, &m)| {
            if m {
                (s / temperature - max).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// A dispatching-rule policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RulePolicy {
    kind: PolicyKind,
    temperature: f64,
}

impl TryFrom<&PolicySpec> for RulePolicy {
    type Error = PolicyError;

    fn try_from(spec: &PolicySpec) -> Result<Self, Self::Error> {
        if spec.kind == PolicyKind::External {
            return Err(PolicyError::InvalidSpec(
                "external policies need a session".into(),
            ));
        }
        spec.validate()?;
        Ok(Self {
            kind: spec.kind,
            temperature: spec.temperature,
        })
    }
}

impl RulePolicy {
    pub fn evaluate(&self, state: &ScheduleState<'_>) -> Result<PriorityVector, PolicyError> {
        let mask = state.feasible_actions();
        if !mask.iter().any(|&m| m) {
            return Err(PolicyError::NoFeasibleAction);
        }
        let values = match self.kind {
            PolicyKind::Uniform => {
                let n = mask.iter().filter(|&&m| m).count() as f64;
                mask.iter()
                    .map(|&m| if m { 1.0 / n } else { 0.0 })
                    .collect()
            }
            PolicyKind::SptSoftmax => {
                let scores: Vec<f64> = (0..mask.len())
                    .map(|j| state.next_duration(j).map_or(0.0, |p| -(p as f64)))
                    .collect();
                softmax_masked(&scores, &mask, self.temperature)
            }
            PolicyKind::MwkrSoftmax => {
                let scores: Vec<f64> = (0..mask.len())
                    .map(|j| state.remaining_work(j) as f64)
                    .collect();
                softmax_masked(&scores, &mask, self.temperature)
            }
            PolicyKind::External => unreachable!("rejected at construction"),
        };
        Ok(PriorityVector::new(values, mask)?)
    }
}

impl Policy for RulePolicy {
    fn priorities(&mut self, state: &ScheduleState<'_>) -> Result<PriorityVector, PolicyError> {
        self.evaluate(state)
    }
}

/// Priorities of a built-in policy for `state`.
pub fn priorities(
    spec: &PolicySpec,
    state: &ScheduleState<'_>,
) -> Result<PriorityVector, PolicyError> {
    RulePolicy::try_from(spec)?.evaluate(state)
}
