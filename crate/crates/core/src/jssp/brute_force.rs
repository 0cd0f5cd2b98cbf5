use thiserror::Error;

use super::{DispatchMode, Instance, ScheduleState, Time};

/// Default ceiling on the number of dispatch sequences enumerated.
pub const DEFAULT_SEQUENCE_CAP: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BruteForceError {
    #[error("{sequences} dispatch sequences exceed the cap of {cap}")]
    TooManySequences { sequences: String, cap: u128 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForceResult {
    pub makespan: Time,
    /// One dispatch sequence (job per step) achieving `makespan`.
    pub sequence: Vec<usize>,
    pub sequences_evaluated: u64,
}

/// Number of distinct dispatch sequences, `(J·M)! / (M!)^J`, or `None` if it
/// does not fit in a `u128`.
pub fn dispatch_sequence_count(jobs: usize, machines: usize) -> Option<u128> {
    // Product of binomials C(j·M, M) for j = 1..=J.
    let mut total: u128 = 1;
    for j in 1..=jobs as u128 {
        let n = j * machines as u128;
        let mut binom: u128 = 1;
        for i in 1..=machines as u128 {
            binom = binom.checked_mul(n - machines as u128 + i)? / i;
        }
        total = total.checked_mul(binom)?;
    }
    Some(total)
}

/// Exhaustive minimum makespan over every dispatch sequence, with the default cap.
pub fn brute_force_optimum(
    instance: &Instance,
    mode: DispatchMode,
) -> Result<BruteForceResult, BruteForceError> {
    brute_force_optimum_with_cap(instance, mode, DEFAULT_SEQUENCE_CAP)
}

pub fn brute_force_optimum_with_cap(
    instance: &Instance,
    mode: DispatchMode,
    cap: u128,
) -> Result<BruteForceResult, BruteForceError> {
    let count = dispatch_sequence_count(instance.num_jobs(), instance.num_machines());
    match count {
        Some(n) if n <= cap => {}
        _ => {
            return Err(BruteForceError::TooManySequences {
                sequences: count.map_or_else(|| "more than 2^128".into(), |n| n.to_string()),
                cap,
            })
        }
    }

    let mut search = Search {
        mode,
        best: Time::MAX,
        best_sequence: Vec::new(),
        prefix: Vec::with_capacity(instance.num_operations()),
        leaves: 0,
    };
    search.descend(ScheduleState::new(instance));
    Ok(BruteForceResult {
        makespan: search.best,
        sequence: search.best_sequence,
        sequences_evaluated: search.leaves,
    })
}

struct Search {
    mode: DispatchMode,
    best: Time,
    best_sequence: Vec<usize>,
    prefix: Vec<usize>,
    leaves: u64,
}

impl Search {
    fn descend(&mut self, state: ScheduleState<'_>) {
        if state.is_complete() {
            self.leaves += 1;
            let makespan = state.current_makespan();
            if makespan < self.best {
                self.best = makespan;
                self.best_sequence = self.prefix.clone();
            }
            return;
        }
        for job in 0..state.instance().num_jobs() {
            if !state.is_feasible(job) {
                continue;
            }
            let mut child = state.clone();
            child.dispatch(job, self.mode).expect("feasible job");
            self.prefix.push(job);
            self.descend(child);
            self.prefix.pop();
        }
    }
}
