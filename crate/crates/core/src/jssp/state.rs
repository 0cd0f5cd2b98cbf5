use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Instance, Schedule, Time};

/// How an operation's start time is chosen when it is dispatched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispatchMode {
    /// Start at `max(job ready, machine ready)`; never fill earlier gaps.
    #[default]
    SemiActive,
    /// Start at the earliest time after the job is ready at which the
    /// operation fits into an idle gap of its machine.
    LeftShift,
}

impl std::fmt::Display for DispatchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DispatchMode::SemiActive => "semi_active",
            DispatchMode::LeftShift => "left_shift",
        })
    }
}

impl std::str::FromStr for DispatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "semi_active" | "semi-active" => Ok(DispatchMode::SemiActive),
            "left_shift" | "left-shift" => Ok(DispatchMode::LeftShift),
            other => Err(format!(
                "unknown dispatch mode {other:?} (expected semi_active or left_shift)"
            )),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DispatchError {
    #[error("job {job} out of range (instance has {jobs} jobs)")]
    JobOutOfRange { job: usize, jobs: usize },
    #[error("job {job} has no unscheduled operations left")]
    JobComplete { job: usize },
    #[error("schedule incomplete: {dispatched} of {total} operations dispatched")]
    Incomplete { dispatched: usize, total: usize },
}

/// A processing interval `[start, end)` on a machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub start: Time,
    pub end: Time,
    pub job: usize,
}

/// A partial schedule.
///
/// Transitions through [`ScheduleState::apply_action`] never touch the
/// receiver, so states can be branched freely. [`ScheduleState::dispatch`] is
/// the in-place variant used on hot paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleState<'a> {
    instance: &'a Instance,
    next_op: Vec<usize>,
    job_ready: Vec<Time>,
    machine_ready: Vec<Time>,
    op_start: Vec<Option<Time>>,
    dispatched: usize,
    timelines: Vec<Vec<Interval>>,
}

impl<'a> ScheduleState<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        let jobs = instance.num_jobs();
        let machines = instance.num_machines();
        Self {
            instance,
            next_op: vec![0; jobs],
            job_ready: vec![0; jobs],
            machine_ready: vec![0; machines],
            op_start: vec![None; jobs * machines],
            dispatched: 0,
            timelines: vec![Vec::with_capacity(jobs); machines],
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn next_op(&self) -> &[usize] {
        &self.next_op
    }

    pub fn job_ready(&self) -> &[Time] {
        &self.job_ready
    }

    pub fn machine_ready(&self) -> &[Time] {
        &self.machine_ready
    }

    pub fn op_start(&self, job: usize, op: usize) -> Option<Time> {
        self.op_start[job * self.instance.num_machines() + op]
    }

    pub fn dispatched_count(&self) -> usize {
        self.dispatched
    }

    /// Intervals on `machine`, ordered by start time.
    pub fn machine_timeline(&self, machine: usize) -> &[Interval] {
        &self.timelines[machine]
    }

    pub fn is_complete(&self) -> bool {
        self.dispatched == self.instance.num_operations()
    }

    #[inline]
    pub fn is_feasible(&self, job: usize) -> bool {
        self.next_op
            .get(job)
            .is_some_and(|&k| k < self.instance.num_machines())
    }

    /// `mask[j]` is true iff job `j` still has an unscheduled operation.
    pub fn feasible_actions(&self) -> Vec<bool> {
        let machines = self.instance.num_machines();
        self.next_op.iter().map(|&k| k < machines).collect()
    }

    /// Duration of the job's next operation, if any remain.
    pub fn next_duration(&self, job: usize) -> Option<Time> {
        let k = self.next_op[job];
        (k < self.instance.num_machines()).then(|| self.instance.duration(job, k))
    }

    /// Processing time of the job's operations not yet dispatched.
    pub fn remaining_work(&self, job: usize) -> Time {
        self.instance.proc_time()[job][self.next_op[job]..]
            .iter()
            .sum()
    }

    /// Returns the successor state; `self` is left untouched.
    pub fn apply_action(&self, job: usize, mode: DispatchMode) -> Result<Self, DispatchError> {
        let mut next = self.clone();
        next.dispatch(job, mode)?;
        Ok(next)
    }

    /// Dispatches the next operation of `job` in place and returns its start.
    pub fn dispatch(&mut self, job: usize, mode: DispatchMode) -> Result<Time, DispatchError> {
        let jobs = self.instance.num_jobs();
        if job >= jobs {
            return Err(DispatchError::JobOutOfRange { job, jobs });
        }
        let op = self.next_op[job];
        if op >= self.instance.num_machines() {
            return Err(DispatchError::JobComplete { job });
        }
        let machine = self.instance.machine(job, op);
        let duration = self.instance.duration(job, op);
        let ready = self.job_ready[job];
        let timeline = &mut self.timelines[machine];

        let (start, slot) = match mode {
            DispatchMode::SemiActive => {
                let start = ready.max(self.machine_ready[machine]);
                debug_assert!(timeline.last().map_or(true, |iv| iv.end <= start));
                (start, timeline.len())
            }
            DispatchMode::LeftShift => earliest_fit(timeline, ready, duration),
        };
        let end = start + duration;
        timeline.insert(slot, Interval { start, end, job });

        self.machine_ready[machine] = self.machine_ready[machine].max(end);
        self.job_ready[job] = end;
        self.op_start[job * self.instance.num_machines() + op] = Some(start);
        self.next_op[job] = op + 1;
        self.dispatched += 1;
        Ok(start)
    }

    /// Largest completion time among dispatched operations.
    pub fn current_makespan(&self) -> Time {
        self.machine_ready.iter().copied().max().unwrap_or(0)
    }

    /// Converts a complete state into a [`Schedule`].
    pub fn to_schedule(&self) -> Result<Schedule, DispatchError> {
        if !self.is_complete() {
            return Err(DispatchError::Incomplete {
                dispatched: self.dispatched,
                total: self.instance.num_operations(),
            });
        }
        let machines = self.instance.num_machines();
        let op_start = self
            .op_start
            .chunks(machines)
            .map(|row| row.iter().map(|s| s.expect("complete state")).collect())
            .collect();
        Ok(Schedule {
            op_start,
            makespan: self.current_makespan(),
        })
    }
}

/// Earliest start `t >= ready` such that `[t, t + duration)` fits on the
/// timeline, together with the insertion index that keeps it sorted.
fn earliest_fit(timeline: &[Interval], ready: Time, duration: Time) -> (Time, usize) {
    let mut prev_end = 0;
    for (idx, iv) in timeline.iter().enumerate() {
        let candidate = ready.max(prev_end);
        if candidate + duration <= iv.start {
            return (candidate, idx);
        }
        prev_end = iv.end;
    }
    (ready.max(prev_end), timeline.len())
}
