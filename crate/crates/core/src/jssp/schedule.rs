use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Instance, Time};

/// A complete schedule: start times for every operation plus its makespan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    /// `op_start[j][k]` is the start of job `j`'s `k`-th operation.
    pub op_start: Vec<Vec<Time>>,
    pub makespan: Time,
}

impl Schedule {
    /// Builds a schedule from start times, computing the makespan.
    pub fn from_starts(
        instance: &Instance,
        op_start: Vec<Vec<Time>>,
    ) -> Result<Self, DimensionMismatch> {
        check_dimensions(instance, &op_start)?;
        let makespan = completion_max(instance, &op_start);
        Ok(Self { op_start, makespan })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("schedule is {found_jobs}x{found_ops}, instance is {jobs}x{machines}")]
pub struct DimensionMismatch {
    pub jobs: usize,
    pub machines: usize,
    pub found_jobs: usize,
    pub found_ops: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NegativeStart {
        job: usize,
        op: usize,
        start: Time,
    },
    /// Operation starts before its job predecessor completes.
    Precedence {
        job: usize,
        op: usize,
        start: Time,
        previous_end: Time,
    },
    MachineOverlap {
        machine: usize,
        first: (usize, usize),
        second: (usize, usize),
    },
    MakespanMismatch {
        stated: Time,
        actual: Time,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NegativeStart { job, op, start } => {
                write!(f, "job {job} op {op}: negative start {start}")
            }
            Violation::Precedence {
                job,
                op,
                start,
                previous_end,
            } => write!(
                f,
                "job {job} op {op}: starts at {start} before predecessor ends at {previous_end}"
            ),
            Violation::MachineOverlap {
                machine,
                first,
                second,
            } => write!(
                f,
                "machine {machine}: job {} op {} overlaps job {} op {}",
                first.0, first.1, second.0, second.1
            ),
            Violation::MakespanMismatch { stated, actual } => {
                write!(f, "stated makespan {stated}, actual {actual}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Makespan recomputed from the start times.
    pub makespan: Time,
}

impl ValidationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_dimensions(instance: &Instance, op_start: &[Vec<Time>]) -> Result<(), DimensionMismatch> {
    let (jobs, machines) = (instance.num_jobs(), instance.num_machines());
    let bad_row = op_start.iter().find(|row| row.len() != machines);
    if op_start.len() != jobs || bad_row.is_some() {
        return Err(DimensionMismatch {
            jobs,
            machines,
            found_jobs: op_start.len(),
            found_ops: bad_row.or(op_start.first()).map_or(0, Vec::len),
        });
    }
    Ok(())
}

fn completion_max(instance: &Instance, op_start: &[Vec<Time>]) -> Time {
    op_start
        .iter()
        .zip(instance.proc_time())
        .flat_map(|(starts, times)| starts.iter().zip(times).map(|(s, p)| s + p))
        .max()
        .unwrap_or(0)
}

/// Checks non-negativity, job precedence, machine capacity and the stated
/// makespan. An empty report means the schedule is feasible.
pub fn validate_schedule(
    instance: &Instance,
    schedule: &Schedule,
) -> Result<ValidationReport, DimensionMismatch> {
    let starts = &schedule.op_start;
    check_dimensions(instance, starts)?;
    let mut violations = Vec::new();

    for (job, row) in starts.iter().enumerate() {
        for (op, &start) in row.iter().enumerate() {
            if start < 0 {
                violations.push(Violation::NegativeStart { job, op, start });
            }
            if op > 0 {
                let previous_end = row[op - 1] + instance.duration(job, op - 1);
                if start < previous_end {
                    violations.push(Violation::Precedence {
                        job,
                        op,
                        start,
                        previous_end,
                    });
                }
            }
        }
    }

    let mut per_machine: Vec<Vec<(Time, Time, usize, usize)>> =
        vec![Vec::new(); instance.num_machines()];
    for (job, row) in starts.iter().enumerate() {
        for (op, &start) in row.iter().enumerate() {
            let end = start + instance.duration(job, op);
            per_machine[instance.machine(job, op)].push((start, end, job, op));
        }
    }
    for (machine, ops) in per_machine.iter_mut().enumerate() {
        ops.sort_unstable();
        // Compare each interval with the furthest-reaching one before it.
        let mut reach: Option<(Time, usize, usize)> = None;
        for &(start, end, job, op) in ops.iter() {
            if let Some((reach_end, rj, ro)) = reach {
                if start < reach_end {
                    violations.push(Violation::MachineOverlap {
                        machine,
                        first: (rj, ro),
                        second: (job, op),
                    });
                }
                if end > reach_end {
                    reach = Some((end, job, op));
                }
            } else {
                reach = Some((end, job, op));
            }
        }
    }

    let makespan = completion_max(instance, starts);
    if makespan != schedule.makespan {
        violations.push(Violation::MakespanMismatch {
            stated: schedule.makespan,
            actual: makespan,
        });
    }
    Ok(ValidationReport {
        violations,
        makespan,
    })
}
