use crate::jssp::{DispatchMode, Instance, Schedule, ScheduleState};
use crate::policy::Policy;
use crate::rng::RngStream;

use super::transform::{delta_transform, greedy_action, sample_action, ActionDistribution};
use super::SamplingError;

/// How a single action is chosen from the current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionRule {
    /// Argmax of the policy's priorities.
    Greedy,
    /// Uniform over feasible jobs; the policy is not consulted.
    Uniform,
    /// Sample from the δ-transformed priorities.
    Delta(f64),
}

/// A finished rollout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rollout {
    pub schedule: Schedule,
    /// Jobs in dispatch order.
    pub actions: Vec<usize>,
}

impl Rollout {
    pub fn makespan(&self) -> crate::jssp::Time {
        self.schedule.makespan
    }
}

/// Dispatches operations until the schedule is complete.
///
/// Draws from `rng` once per action under [`ActionRule::Uniform`] and
/// [`ActionRule::Delta`], never under [`ActionRule::Greedy`].
pub fn rollout(
    instance: &Instance,
    policy: &mut dyn Policy,
    rule: ActionRule,
    mode: DispatchMode,
    rng: &mut RngStream,
) -> Result<Rollout, SamplingError> {
    if let ActionRule::Delta(delta) = rule {
        super::transform::check_delta(delta)?;
    }
    let mut state = ScheduleState::new(instance);
    let mut actions = Vec::with_capacity(instance.num_operations());
    while !state.is_complete() {
        let job = match rule {
            ActionRule::Uniform => {
                sample_action(&ActionDistribution::uniform(state.feasible_actions()), rng)
            }
            ActionRule::Greedy => greedy_action(&policy.priorities(&state)?),
            ActionRule::Delta(delta) => {
                let priorities = policy.priorities(&state)?;
                sample_action(&delta_transform(&priorities, delta)?, rng)
            }
        };
        state
            .dispatch(job, mode)
            .expect("policies only give weight to feasible jobs");
        actions.push(job);
    }
    let schedule = state.to_schedule().expect("state is complete");
    Ok(Rollout { schedule, actions })
}
