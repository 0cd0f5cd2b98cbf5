use crate::policy::PriorityVector;
use crate::rng::RngStream;

use super::SamplingError;

/// Probabilities over jobs after the δ-transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    probs: Vec<f64>,
    support: Vec<bool>,
}

impl ActionDistribution {
    /// Uniform distribution over the `true` entries of `support`.
    pub fn uniform(support: Vec<bool>) -> Self {
        let n = support.iter().filter(|&&s| s).count();
        assert!(n > 0, "empty support");
        let p = 1.0 / n as f64;
        let probs = support.iter().map(|&s| if s { p } else { 0.0 }).collect();
        Self { probs, support }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Jobs with nonzero probability.
    pub fn support(&self) -> &[bool] {
        &self.support
    }

    /// The distribution viewed as a priority vector, so transforms compose.
    pub fn to_priorities(&self) -> PriorityVector {
        PriorityVector::new(self.probs.clone(), self.support.clone())
            .expect("a distribution is a valid priority vector")
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<(), SamplingError> {
    if delta.is_nan() || delta < 0.0 {
        return Err(SamplingError::InvalidConfig(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    Ok(())
}

/// Raises every priority to the power `delta` and renormalises.
///
/// Computed as `exp(delta * (ln v - max ln v))` so extreme exponents neither
/// overflow nor underflow to an all-zero vector. Zero priorities stay zero
/// for every `delta`, including 0, which therefore gives the uniform
/// distribution over the positive entries. `delta = inf` puts all mass on the
/// largest priority, the lowest index among ties.
pub fn delta_transform(
    priorities: &PriorityVector,
    delta: f64,
) -> Result<ActionDistribution, SamplingError> {
    check_delta(delta)?;
    let values = priorities.values();

    if delta.is_infinite() {
        let best = argmax(values);
        let probs = (0..values.len())
            .map(|j| if j == best { 1.0 } else { 0.0 })
            .collect();
        let support = (0..values.len()).map(|j| j == best).collect();
        return Ok(ActionDistribution { probs, support });
    }

    let max_log = values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        max_log.is_finite(),
        "priority vector without a positive entry"
    );

    let mut probs: Vec<f64> = values
        .iter()
        .map(|&v| {
            if v > 0.0 {
                (delta * (v.ln() - max_log)).exp()
            } else {
                0.0
            }
        })
        .collect();
    // The maximum entry contributes exactly 1, so the total is >= 1.
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let support = probs.iter().map(|&p| p > 0.0).collect();
    Ok(ActionDistribution { probs, support })
}

/// Index of the largest value, lowest index on ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = j;
        }
    }
    best
}

/// Draws a job by inverse CDF over ascending job indices: with
/// `u = rng.next_f64()`, the first supported `j` whose cumulative
/// probability exceeds `u`. If rounding leaves `u` above the final
/// cumulative sum, the last supported job is returned.
pub fn sample_action(dist: &ActionDistribution, rng: &mut RngStream) -> usize {
    let u = rng.next_f64();
    let mut cumulative = 0.0;
    let mut last = None;
    for (j, (&p, &s)) in dist.probs.iter().zip(&dist.support).enumerate() {
        if !s {
            continue;
        }
        cumulative += p;
        if u < cumulative {
            return j;
        }
        last = Some(j);
    }
    last.expect("distribution has nonempty support")
}

/// The job with the highest priority, lowest index on ties.
pub fn greedy_action(priorities: &PriorityVector) -> usize {
    argmax(priorities.values())
}
